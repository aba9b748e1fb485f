//! Shared-noise pairs started at x0_low ≤ x0_high stay ordered.
//!
//! cargo run --release --example comparison_coupling -- [pairs]

use nnjump::analysis::comparison_run;
use nnjump::engine::{simulate_coupled, Scheme, SimulationConfig};
use nnjump::{MeasureKind, ModelSpec};

fn main() -> nnjump::Result<()> {
    let pairs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1_000);
    let spec = ModelSpec::cbi(1.0, 1.0, -1.0, Some(MeasureKind::StablePowerLaw { c: 1.0, alpha: 1.5 }), None);
    let model = spec.build()?;
    let cfg = SimulationConfig { paths: pairs, seed: 3, ..Default::default() };
    let report = comparison_run(&Scheme::new(&model, &cfg)?, 1.0, 2.0, 0)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    let pair = simulate_coupled(&ModelSpec::cir(1.0, 1.0, -1.0).build()?, &cfg, 0.5, 0.6, 0)?;
    println!("one CIR pair: {} grid points, min gap {:.3e}", pair.low.times.len(),
        pair.low.states.iter().zip(&pair.high.states).map(|(l, h)| h - l).fold(f64::INFINITY, f64::min));
    Ok(())
}
