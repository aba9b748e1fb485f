//! Empirical Laplace transform of one-sided stable increments against the
//! closed form t c λ^α Γ(2−α)/(α(α−1)).
//!
//! cargo run --release --example stable_sampler -- [draws]

use nnjump::samplers::{Channel, RandomStream, StableLaw};
use statrs::function::gamma::gamma;

fn main() -> nnjump::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let (c, dt) = (1.0, 0.5);
    for alpha in [1.2, 1.5, 1.8] {
        let law = StableLaw::new(alpha, c)?;
        let mut s = RandomStream::new(1, 0, Channel::Stable);
        for lambda in [0.5, 1.0] {
            let mean = (0..n).map(|_| (-lambda * law.sample(&mut s, dt)).exp()).sum::<f64>() / n as f64;
            let exact = dt * c * f64::powf(lambda, alpha) * gamma(2.0 - alpha) / (alpha * (alpha - 1.0));
            println!("α={alpha} λ={lambda}: log E e^(-λX) = {:.4}, closed form {exact:.4}", mean.ln());
        }
    }
    Ok(())
}
