//! Adaptive Gauss–Kronrod (7/15) quadrature plus the two interval maps the
//! jump integrals need: semi-infinite ranges and log-scaled ranges near zero.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Panel budget of the global adaptive scheme.
const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-12, rel: 1e-11 }
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let whole = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    let mut frozen_err = 0.0;
    let mut frozen_est = 0.0;
    split_panel(&f, Panel { a, b, est: whole.0, err: f64::INFINITY }, &mut heap);
    loop {
        let (mut total, mut err) = (frozen_est, frozen_err);
        for p in heap.iter() {
            total += p.est;
            err += p.err;
        }
        if !total.is_finite() {
            return Err(Error::QuadratureFailure { lo: a, hi: b });
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => return Ok(total),
        };
        let width = worst.b - worst.a;
        if heap.len() >= MAX_PANELS || width <= f64::EPSILON * worst.a.abs().max(worst.b.abs()) * 64.0 {
            // Accept a roundoff-limited estimate when the error is already tiny in relative terms.
            if err <= 1e-8 * total.abs().max(1.0) {
                return Ok(total);
            }
            if heap.len() >= MAX_PANELS {
                return Err(Error::QuadratureFailure { lo: worst.a, hi: worst.b });
            }
            frozen_est += worst.est;
            frozen_err += worst.err;
            continue;
        }
        split_panel(&f, worst, &mut heap);
    }
}

struct Panel {
    a: f64,
    b: f64,
    est: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Bisect a panel. Each half's error is at least half the disagreement
/// between the parent and the sum of the halves; the Kronrod–Gauss difference
/// alone can vanish by accident at kinks of the second derivative.
fn split_panel<F: Fn(f64) -> f64>(f: &F, p: Panel, heap: &mut BinaryHeap<Panel>) {
    let m = 0.5 * (p.a + p.b);
    let (l, le) = kronrod(f, p.a, m);
    let (r, re) = kronrod(f, m, p.b);
    let gap = 0.5 * (p.est - (l + r)).abs();
    let gap = if gap.is_nan() { f64::INFINITY } else { gap };
    heap.push(Panel { a: p.a, b: m, est: l, err: le.max(gap) });
    heap.push(Panel { a: m, b: p.b, est: r, err: re.max(gap) });
}

/// Integrate over `[a, b]` after the substitution `z = e^s`; suited to integrands
/// with power-law behavior near zero. Requires `0 < a < b`.
pub fn integrate_log<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    debug_assert!(a > 0.0 && b > a);
    integrate(
        |s| {
            let z = s.exp();
            f(z) * z
        },
        a.ln(),
        b.ln(),
        tol,
    )
}

/// Decades covered by the log-scaled far piece of [`integrate_to_inf`].
const FAR_DECADES: f64 = 12.0;

/// Integrate over `(a, ∞)`: a finite near piece `[a, a+1]`, a log-scaled piece
/// out to `(a+1)·10^12`, and a tail extrapolated from the local power-law decay
/// of the integrand at the cutoff. The compactifying map `t/(1-t)` turns slow
/// power tails into endpoint singularities, which is why it is not used here.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<f64> {
    let near_end = a + 1.0;
    let near = integrate(&f, a, near_end, tol)?;
    let cut = near_end * 10f64.powf(FAR_DECADES);
    let far = integrate_log(&f, near_end, cut, tol)?;
    Ok(near + far + power_tail(&f, cut, tol)?)
}

/// ∫_z^∞ f assuming `f(y) ∝ y^{-p}` beyond `z`, with `p` read off `f(z)` and `f(2z)`.
fn power_tail<F: Fn(f64) -> f64>(f: &F, z: f64, tol: Tolerance) -> Result<f64> {
    let (f1, f2) = (f(z), f(2.0 * z));
    if !f1.is_finite() || !f2.is_finite() {
        return Err(Error::QuadratureFailure { lo: z, hi: f64::INFINITY });
    }
    if (z * f1).abs() <= tol.abs && (z * f2).abs() <= tol.abs {
        return Ok(0.0);
    }
    if f1 == 0.0 || f2 / f1 <= 0.0 {
        return Err(Error::QuadratureFailure { lo: z, hi: f64::INFINITY });
    }
    let p = -(f2 / f1).log2();
    if p <= 1.0 {
        return Err(Error::QuadratureFailure { lo: z, hi: f64::INFINITY });
    }
    Ok(z * f1 / (p - 1.0))
}

/// 8-point Gauss–Legendre nodes/weights on [0, 1], used for smooth remainder integrals.
pub const GL8_NODES: [f64; 8] = [
    0.019_855_071_751_231_856,
    0.101_666_761_293_186_63,
    0.237_233_795_041_835_5,
    0.408_282_678_752_175_1,
    0.591_717_321_247_824_9,
    0.762_766_204_958_164_5,
    0.898_333_238_706_813_4,
    0.980_144_928_248_768_2,
];
pub const GL8_WEIGHTS: [f64; 8] = [
    0.050_614_268_145_188_13,
    0.111_190_517_226_687_24,
    0.156_853_322_938_943_64,
    0.181_341_891_689_181_0,
    0.181_341_891_689_181_0,
    0.156_853_322_938_943_64,
    0.111_190_517_226_687_24,
    0.050_614_268_145_188_13,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
    }

    #[test]
    fn log_scaled_singular() {
        // ∫_0^1 z^{-1/2} dz = 2, truncated at 1e-16 loses 2e-8.
        let v = integrate_log(|z| z.powf(-0.5), 1e-16, 1.0, Tolerance::default()).unwrap();
        assert!((v - (2.0 - 2e-8)).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite() {
        let v = integrate_to_inf(|z| (-z).exp(), 0.0, Tolerance::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
        let v = integrate_to_inf(|z| z.powf(-2.5), 1.0, Tolerance::default()).unwrap();
        assert!((v - 1.0 / 1.5).abs() < 1e-10);
        // A tail decaying like z^{-1.2} converges slowly; ∫_1^∞ = 5.
        let v = integrate_to_inf(|z| z.powf(-1.2), 1.0, Tolerance::default()).unwrap();
        assert!((v - 5.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn gauss_legendre_weights_sum_to_one() {
        let s: f64 = GL8_WEIGHTS.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        let m: f64 = GL8_NODES.iter().zip(GL8_WEIGHTS).map(|(x, w)| w * x.powi(7)).sum();
        assert!((m - 1.0 / 8.0).abs() < 1e-14);
    }
}
