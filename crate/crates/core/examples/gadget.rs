//! The smoothing sequence φ_k → |x| for the modulus ρ(z) = √z.
//!
//! cargo run --example gadget

use nnjump::analysis::{gadget_bounds_check, Gadget, GadgetVariant, PowerModulus};

fn main() -> nnjump::Result<()> {
    let g = Gadget::build(PowerModulus::new(1.0, 0.5), 8, GadgetVariant::Symmetric)?;
    let samples: Vec<(f64, f64)> = (1..=20).flat_map(|i| [(i as f64 * 0.05, 0.01), (-(i as f64) * 0.05, -0.02)]).collect();
    for k in 1..=g.k_max() {
        let (lo, hi) = g.support(k);
        let check = gadget_bounds_check(&g, k, &samples)?;
        println!(
            "k={k} support=({lo:.3e}, {hi:.3e}) ∫ρ⁻² over support={:.12} φ_k(0.5)={:.6} bounds ok={}",
            g.partition_integral(k)?,
            g.phi(k, 0.5),
            check.passed()
        );
    }
    Ok(())
}
