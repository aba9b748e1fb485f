//! Mean of the CIR process against the moment ODE, and the observed Euler bias
//! as the step is refined.
//!
//! cargo run --release --example cir_mean -- [paths]

use nnjump::engine::{map_paths, MomentSummary, Recording, Scheme, SimulationConfig};
use nnjump::ModelSpec;

fn main() -> nnjump::Result<()> {
    let paths: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let (a, b, beta, x0) = (1.0, 1.0, -1.0, 1.0);
    let model = ModelSpec::cir(a, b, beta).build()?;
    // m' = beta m + b
    let exact = x0 * f64::exp(beta) + b * (f64::exp(beta) - 1.0) / beta;
    for dt in [1e-2, 1e-3] {
        let cfg = SimulationConfig { dt, paths, seed: 42, ..Default::default() };
        let scheme = Scheme::new(&model, &cfg)?;
        let start = std::time::Instant::now();
        let xs = map_paths(&scheme, x0, &Recording::Times(vec![1.0]), 0, |_, p| p.final_state())?;
        let s = MomentSummary::from_values(&xs);
        println!(
            "dt={dt:<6} mean={:.5} se={:.5} exact={exact:.5} |err|/se={:.2}  ({:.1?})",
            s.mean,
            s.se_mean,
            (s.mean - exact).abs() / s.se_mean,
            start.elapsed()
        );
    }
    Ok(())
}
