//! Integrability checks, compensator drifts and tail masses for the built-in
//! jump measures.
//!
//! cargo run --example measures

use nnjump::measures::IntegrabilityVerdict;
use nnjump::{JumpLaw, JumpMeasure, Role};

fn main() -> nnjump::Result<()> {
    for alpha in [1.2, 1.5, 1.8, 2.0] {
        let m = JumpMeasure::stable(1.0, alpha, Role::Compensated)?;
        match m.check_integrability()? {
            IntegrabilityVerdict::Finite(v) => println!(
                "stable α={alpha}: ∫(z∧z²)ν = {v:.6}, ν(ε,∞) at ε=0.01: {:.3}, small-jump variance: {:.3e}",
                m.tail_mass(0.01),
                m.small_jump_variance(0.01)?
            ),
            IntegrabilityVerdict::Divergent => println!("stable α={alpha}: divergent"),
        }
    }
    let cpp = JumpMeasure::compound_poisson(2.0, JumpLaw::Exponential { mean: 0.5 }, Role::NonCompensated)?;
    println!("compound Poisson: ∫(1∧z)ν = {:.6}, mean jump flux = {:.6}", cpp.require_integrable()?, cpp.first_moment_between(0.0, f64::INFINITY)?);
    let table = JumpMeasure::table(vec![[0.5, 1.0], [1.0, 2.0], [2.0, 0.5]], Role::Compensated)?;
    println!("tabulated: ∫(z∧z²)ν = {:.6}, compensator drift above 1 = {:.6}", table.require_integrable()?, table.compensator_drift(1.0)?);
    Ok(())
}
