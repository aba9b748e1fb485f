//! E|x(1; x0 + gap) − x(1; x0)| shrinking with the gap, for CIR where the
//! coupled Euler mean is gap·(1 + β dt)^{1/dt}.
//!
//! cargo run --release --example continuous_dependence -- [paths]

use nnjump::analysis::{dependence_audit, dependence_curve};
use nnjump::engine::{Scheme, SimulationConfig};
use nnjump::ModelSpec;

fn main() -> nnjump::Result<()> {
    let paths: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let beta = -1.0;
    let cfg = SimulationConfig { paths, seed: 5, ..Default::default() };
    let scheme = Scheme::new(&ModelSpec::cir(1.0, 1.0, beta).build()?, &cfg)?;
    let gaps = [1.0, 0.5, 0.25, 0.125];
    let curve = dependence_curve(&scheme, 1.0, &gaps, 1.0, 0)?;
    for p in &curve {
        let exact = p.gap * (1.0 + beta * cfg.dt).powf(1.0 / cfg.dt);
        println!("gap {:<6} E|Δx| = {:.5} ± {:.5}  (linear recursion {exact:.5})", p.gap, p.mean_abs_diff, 3.0 * p.se);
    }
    println!("{:?}", dependence_audit(&curve).verdict);
    Ok(())
}
