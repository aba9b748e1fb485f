//! Lévy-driven and emigration models: paths stay non-negative by construction.
//!
//! cargo run --release --example levy_and_emigration -- [paths]

use nnjump::engine::{map_paths, MomentSummary, Recording, Scheme, SimulationConfig};
use nnjump::{Coef, JumpLaw, MeasureKind, ModelForm, ModelSpec};

fn main() -> nnjump::Result<()> {
    let paths: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let emigration = MeasureKind::CompoundPoisson { rate: 2.0, law: JumpLaw::Uniform { lo: 0.0, hi: 1.0 } };
    let levy: ModelSpec = ModelForm::Levy {
        sigma: Coef::cbi_sigma(1.0),
        b: Coef::linear(1.0, -0.5),
        phi0: Coef::power(1.0, 1.0 / 1.5),
        phi1: Coef::constant(1.0),
        mu0: Some(MeasureKind::StablePowerLaw { c: 1.0, alpha: 1.5 }),
        mu1: Some(MeasureKind::CompoundPoisson { rate: 1.0, law: JumpLaw::Exponential { mean: 0.5 } }),
        nu0: None,
        nu1: Some(emigration.clone()),
    }
    .into();
    let cbie = ModelSpec::cbie(1.0, 1.0, -0.5, 1.0, 1.5, None, emigration);
    let cfg = SimulationConfig { paths, seed: 9, ..Default::default() };
    for (name, spec) in [("levy", levy), ("cbie", cbie)] {
        let scheme = Scheme::new(&spec.build()?, &cfg)?;
        let runs = map_paths(&scheme, 1.0, &Recording::Full, 0, |_, p| {
            (p.final_state(), p.states.iter().chain(&p.left).copied().fold(f64::INFINITY, f64::min))
        })?;
        let finals: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let min = runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let s = MomentSummary::from_values(&finals);
        println!("{name}: mean x(1) = {:.4} ± {:.4}, smallest state seen {min:.3e}", s.mean, 3.0 * s.se_mean);
    }
    Ok(())
}
