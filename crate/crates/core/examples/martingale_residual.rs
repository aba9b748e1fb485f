//! f(x(t)) − f(x0) − ∫ Lf(x(s)) ds averaged over paths, for f = e^{-x}.
//!
//! cargo run --release --example martingale_residual -- [paths]

use nnjump::analysis::{martingale_residual_run, TestFunction};
use nnjump::engine::{Scheme, SimulationConfig};
use nnjump::{JumpLaw, MeasureKind, ModelSpec};

fn main() -> nnjump::Result<()> {
    let paths: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let spec = ModelSpec::stable_cbi(1.0, 1.0, -1.0, 1.0, 1.5, Some(MeasureKind::CompoundPoisson {
        rate: 1.0,
        law: JumpLaw::Exponential { mean: 1.0 },
    }));
    let cfg = SimulationConfig { paths, seed: 8, ..Default::default() };
    let scheme = Scheme::new(&spec.build()?, &cfg)?;
    let report = martingale_residual_run(&scheme, &TestFunction::exp_decay(1.0), 1.0, 0.01, 0)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(())
}
