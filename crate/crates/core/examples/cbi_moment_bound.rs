//! First-moment audit mean(1 + x(t)) ≤ (1 + x0)e^{Kt} for a CBI with stable
//! branching and compound-Poisson immigration, K from the linear-growth check.
//!
//! cargo run --release --example cbi_moment_bound -- [paths]

use nnjump::analysis::audit_moment_bounds;
use nnjump::conditions::{check_linear_growth, CheckGrid, ConditionId};
use nnjump::engine::{map_paths, Recording, Scheme, SimulationConfig};
use nnjump::{JumpLaw, MeasureKind, ModelSpec};

fn main() -> nnjump::Result<()> {
    let paths: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5_000);
    let spec = ModelSpec::cbi(
        1.0,
        1.0,
        -1.0,
        Some(MeasureKind::StablePowerLaw { c: 1.0, alpha: 1.5 }),
        Some(MeasureKind::CompoundPoisson { rate: 1.0, law: JumpLaw::Point { at: 2.0 } }),
    );
    let model = spec.build()?;
    let grid = CheckGrid::default_for(100.0);
    let k = check_linear_growth(&model, &grid.states, ConditionId::LinearGrowth)?.constant("K").unwrap_or(0.0);
    let ts = vec![0.25, 0.5, 1.0];
    let cfg = SimulationConfig { paths, seed: 1, ..Default::default() };
    let scheme = Scheme::new(&model, &cfg)?;
    let rows = map_paths(&scheme, 1.0, &Recording::Times(ts.clone()), 0, |_, p| {
        ts.iter().map(|&t| p.state_at(t)).collect::<Vec<f64>>()
    })?;
    // One vector per time, across paths.
    let values: Vec<Vec<f64>> = (0..ts.len()).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
    println!("K = {k:.4}");
    for r in audit_moment_bounds(&values, 1.0, k, &ts) {
        println!("{}", serde_json::to_string(&r).unwrap());
    }
    Ok(())
}
