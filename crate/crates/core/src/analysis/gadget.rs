//! The Yamada–Watanabe smoothing sequence φ_k approximating |x| (or x⁺) for a
//! power-law modulus ρ(z) = C z^p.
//!
//! Level k lives on (a_k, a_{k−1}) where ∫ ρ⁻² over that interval equals k. In
//! the coordinate s = ∫_{a_k}^z ρ⁻² / k ∈ (0, 1) the density is
//! ψ_k = k⁻¹ ρ⁻² q(s) for a fixed C¹ plateau profile q of unit mass, so the
//! mass and the envelope ψ_k ≤ 2k⁻¹ρ⁻² reduce to properties of q.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// Width of each ramp of the plateau profile.
const RAMP: f64 = 0.25;
/// Plateau height making the profile integrate to one.
const HEIGHT: f64 = 1.0 / (1.0 - RAMP);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GadgetVariant {
    /// φ_k(x) → |x|.
    Symmetric,
    /// φ_k(x) → x⁺.
    OneSided,
}

/// ρ(z) = coef · z^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModulus {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerModulus {
    pub fn new(coef: f64, exponent: f64) -> Self {
        PowerModulus { coef, exponent }
    }

    pub fn rho(&self, z: f64) -> f64 {
        self.coef * z.powf(self.exponent)
    }

    /// ρ(z)⁻²
    pub fn inv_sq(&self, z: f64) -> f64 {
        z.powf(-2.0 * self.exponent) / (self.coef * self.coef)
    }

    /// ∫_lo^hi ρ⁻² in closed form.
    pub fn inv_sq_integral(&self, lo: f64, hi: f64) -> f64 {
        let q = 2.0 * self.exponent;
        let c2 = self.coef * self.coef;
        if (q - 1.0).abs() < 1e-15 {
            (hi / lo).ln() / c2
        } else {
            (hi.powf(1.0 - q) - lo.powf(1.0 - q)) / ((1.0 - q) * c2)
        }
    }
}

/// Plateau profile on [0, 1]: C¹ quadratic ramps of width `RAMP` up to `HEIGHT`.
fn profile(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let r = s.min(1.0 - s);
    if r >= RAMP {
        HEIGHT
    } else if r <= RAMP / 2.0 {
        2.0 * HEIGHT * (r / RAMP).powi(2)
    } else {
        HEIGHT - 2.0 * HEIGHT * ((RAMP - r) / RAMP).powi(2)
    }
}

/// ∫₀^r of one ramp.
fn ramp_mass(r: f64) -> f64 {
    let r = r.clamp(0.0, RAMP);
    let half = RAMP / 2.0;
    if r <= half {
        2.0 * HEIGHT * r.powi(3) / (3.0 * RAMP * RAMP)
    } else {
        let first = 2.0 * HEIGHT * half.powi(3) / (3.0 * RAMP * RAMP);
        // ∫_{half}^{r} H − 2H((R−u)/R)² du
        let tail = |u: f64| -> f64 { (RAMP - u).powi(3) };
        first + HEIGHT * (r - half) + 2.0 * HEIGHT * (tail(r) - tail(half)) / (3.0 * RAMP * RAMP)
    }
}

/// Q(s) = ∫₀^s q.
fn profile_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let full_ramp = HEIGHT * RAMP / 2.0;
    if s <= RAMP {
        ramp_mass(s)
    } else if s <= 1.0 - RAMP {
        full_ramp + HEIGHT * (s - RAMP)
    } else {
        1.0 - ramp_mass(1.0 - s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gadget {
    pub modulus: PowerModulus,
    pub variant: GadgetVariant,
    /// a_0 = 1 > a_1 > … > a_{k_max}.
    pub a: Vec<f64>,
    /// φ_k(a_{k−1}), indexed by k (entry 0 unused).
    phi_top: Vec<f64>,
}

fn tol() -> Tolerance {
    Tolerance { abs: 1e-15, rel: 1e-12 }
}

impl Gadget {
    pub fn build(modulus: PowerModulus, k_max: usize, variant: GadgetVariant) -> Result<Gadget> {
        if !(modulus.coef > 0.0) || modulus.exponent < 0.0 {
            return Err(Error::InvalidConfig(format!("modulus {modulus:?} must be positive and non-decreasing")));
        }
        let q = 2.0 * modulus.exponent;
        if q < 1.0 {
            return Err(Error::NonOsgood(format!(
                "∫₀ ρ(z)⁻² dz converges for ρ(z) = {} z^{}",
                modulus.coef, modulus.exponent
            )));
        }
        let c2 = modulus.coef * modulus.coef;
        let mut a: Vec<f64> = vec![1.0];
        let mut log_a = 0.0;
        for k in 1..=k_max {
            let prev = a[k - 1];
            let next = if (q - 1.0).abs() < 1e-15 {
                log_a -= k as f64 * c2;
                log_a.exp()
            } else {
                (prev.powf(1.0 - q) + k as f64 * c2 * (q - 1.0)).powf(1.0 / (1.0 - q))
            };
            a.push(next);
        }
        let mut g = Gadget { modulus, variant, a, phi_top: vec![0.0] };
        for k in 1..=k_max {
            let (lo, hi) = g.support(k);
            let top = integrate(|y| g.psi_mass_below(k, y), lo, hi, tol())?;
            g.phi_top.push(top);
        }
        Ok(g)
    }

    pub fn k_max(&self) -> usize {
        self.a.len() - 1
    }

    /// (a_k, a_{k−1}).
    pub fn support(&self, k: usize) -> (f64, f64) {
        assert!(k >= 1 && k <= self.k_max(), "level {k} outside 1..={}", self.k_max());
        (self.a[k], self.a[k - 1])
    }

    fn coordinate(&self, k: usize, z: f64) -> f64 {
        let (lo, _) = self.support(k);
        self.modulus.inv_sq_integral(lo, z) / k as f64
    }

    /// ψ_k(z) for z > 0.
    pub fn psi(&self, k: usize, z: f64) -> f64 {
        let (lo, hi) = self.support(k);
        if z <= lo || z >= hi {
            return 0.0;
        }
        self.modulus.inv_sq(z) * profile(self.coordinate(k, z)) / k as f64
    }

    /// Ψ_k(y) = ∫₀^y ψ_k.
    fn psi_mass_below(&self, k: usize, y: f64) -> f64 {
        let (lo, hi) = self.support(k);
        if y <= lo {
            0.0
        } else if y >= hi {
            1.0
        } else {
            profile_cdf(self.coordinate(k, y))
        }
    }

    fn radial(&self, x: f64) -> Option<f64> {
        match self.variant {
            GadgetVariant::Symmetric => Some(x.abs()),
            GadgetVariant::OneSided => (x > 0.0).then_some(x),
        }
    }

    pub fn phi(&self, k: usize, x: f64) -> f64 {
        let Some(r) = self.radial(x) else { return 0.0 };
        let (lo, hi) = self.support(k);
        if r <= lo {
            0.0
        } else if r >= hi {
            self.phi_top[k] + (r - hi)
        } else {
            integrate(|y| self.psi_mass_below(k, y), lo, r, tol()).expect("smooth integrand")
        }
    }

    pub fn dphi(&self, k: usize, x: f64) -> f64 {
        match self.radial(x) {
            Some(r) => x.signum() * self.psi_mass_below(k, r),
            None => 0.0,
        }
    }

    pub fn d2phi(&self, k: usize, x: f64) -> f64 {
        match self.radial(x) {
            Some(r) => self.psi(k, r),
            None => 0.0,
        }
    }

    /// D_hφ_k(ζ) = φ(ζ+h) − φ(ζ) − hφ′(ζ) = ∫_ζ^{ζ+h} (ζ+h−y) φ″(y) dy.
    pub fn d_h(&self, k: usize, zeta: f64, h: f64) -> f64 {
        if h == 0.0 {
            return 0.0;
        }
        let (a, b) = if h > 0.0 { (zeta, zeta + h) } else { (zeta + h, zeta) };
        let end = zeta + h;
        // Restrict to where φ″ can be non-zero.
        let (lo, hi) = self.support(k);
        let mut total = 0.0;
        for (s0, s1) in [(lo, hi), (-hi, -lo)] {
            let (u, v) = (a.max(s0), b.min(s1));
            if u < v {
                total += integrate(|y| (end - y).abs() * self.d2phi(k, y), u, v, tol()).expect("smooth integrand");
            }
        }
        total
    }

    /// Δ_hφ_k(ζ) = φ(ζ+h) − φ(ζ).
    pub fn delta_h(&self, k: usize, zeta: f64, h: f64) -> f64 {
        self.d_h(k, zeta, h) + h * self.dphi(k, zeta)
    }

    /// ∫_{a_k}^{a_{k−1}} ρ⁻² by quadrature.
    pub fn partition_integral(&self, k: usize) -> Result<f64> {
        let (lo, hi) = self.support(k);
        crate::quadrature::integrate_log(|z| self.modulus.inv_sq(z), lo, hi, tol())
    }
}

/// Outcome of checking the gadget inequalities at sample points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GadgetCheck {
    pub k: usize,
    pub samples: usize,
    pub envelope_violations: usize,
    pub taylor_violations: usize,
    pub increment_violations: usize,
    /// Largest ratio D_hφ / (k⁻¹h²ρ(|ζ|)⁻²) seen.
    pub worst_taylor_ratio: f64,
}

impl GadgetCheck {
    pub fn passed(&self) -> bool {
        self.envelope_violations == 0 && self.taylor_violations == 0 && self.increment_violations == 0
    }
}

/// Check D_hφ_k(ζ) ≤ k⁻¹h²ρ(|ζ|)⁻², D_hφ_k ≤ Δ_hφ_k ≤ |h| at the samples (all with
/// ζh ≥ 0) and φ_k″ρ² ≤ 2/k at the ζ's.
pub fn gadget_bounds_check(g: &Gadget, k: usize, samples: &[(f64, f64)]) -> Result<GadgetCheck> {
    const TOL: f64 = 1e-9;
    let mut out = GadgetCheck {
        k,
        samples: samples.len(),
        envelope_violations: 0,
        taylor_violations: 0,
        increment_violations: 0,
        worst_taylor_ratio: 0.0,
    };
    for &(zeta, h) in samples {
        if zeta * h < 0.0 {
            return Err(Error::InvalidConfig(format!("sample (ζ = {zeta}, h = {h}) has ζh < 0")));
        }
        let r = zeta.abs();
        if r > 0.0 {
            let env = g.d2phi(k, zeta) * g.modulus.rho(r).powi(2);
            if env > 2.0 / k as f64 * (1.0 + TOL) {
                out.envelope_violations += 1;
            }
        }
        let d = g.d_h(k, zeta, h);
        let delta = g.delta_h(k, zeta, h);
        if r > 0.0 {
            let bound = h * h * g.modulus.inv_sq(r) / k as f64;
            if bound > 0.0 {
                out.worst_taylor_ratio = out.worst_taylor_ratio.max(d / bound);
            }
            if d > bound * (1.0 + TOL) + 1e-300 {
                out.taylor_violations += 1;
            }
        }
        let slack = TOL * h.abs().max(1e-300);
        if d < -slack || d > delta + slack || delta > h.abs() + slack {
            out.increment_violations += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_gadget() -> Gadget {
        Gadget::build(PowerModulus::new(1.0, 0.5), 10, GadgetVariant::Symmetric).unwrap()
    }

    #[test]
    fn profile_has_unit_mass_and_bounded_height() {
        let mass = integrate(profile, 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((mass - 1.0).abs() < 1e-12);
        for i in 0..=1000 {
            let s = i as f64 / 1000.0;
            assert!(profile(s) <= 2.0);
            // Piecewise between the points where the second derivative jumps.
            let mut knots = vec![0.0];
            knots.extend([0.125, 0.25, 0.75, 0.875].into_iter().filter(|&k| k < s));
            knots.push(s);
            let q: f64 = knots
                .windows(2)
                .map(|w| integrate(profile, w[0], w[1], Tolerance::default()).unwrap())
                .sum();
            assert!((profile_cdf(s) - q).abs() < 1e-12, "{s}: {} vs {q}", profile_cdf(s));
        }
    }

    #[test]
    fn sqrt_modulus_levels() {
        let g = sqrt_gadget();
        assert!((g.a[1] - (-1.0f64).exp()).abs() < 1e-16);
        assert!((g.a[2] - (-3.0f64).exp()).abs() < 1e-16);
        for k in 1..=10 {
            let exact = (-((k * (k + 1)) as f64) / 2.0).exp();
            assert!((g.a[k] - exact).abs() <= 1e-10 * exact);
            assert!((g.partition_integral(k).unwrap() - k as f64).abs() < 1e-6 * k as f64);
        }
    }

    #[test]
    fn psi_has_unit_mass() {
        let g = sqrt_gadget();
        for k in [1, 4, 9] {
            let (lo, hi) = g.support(k);
            let m = crate::quadrature::integrate_log(|z| g.psi(k, z), lo, hi, tol()).unwrap();
            assert!((m - 1.0).abs() < 1e-9, "{k}: {m}");
        }
    }

    #[test]
    fn phi_shape() {
        let g = sqrt_gadget();
        for k in 1..=5 {
            let (_, hi) = g.support(k);
            assert!((g.dphi(k, 2.0 * hi) - 1.0).abs() < 1e-15);
            for x in [-3.0, -0.2, 1e-4, 0.05, 0.3, 2.0] {
                assert!(g.phi(k, x) <= x.abs() + 1e-15);
                assert!((0.0..=1.0).contains(&g.dphi(k, x).abs()));
                assert!(g.d2phi(k, x) >= 0.0);
                assert!(g.phi(k, x) <= g.phi(k + 1, x) + 1e-14);
            }
        }
    }

    #[test]
    fn one_sided_vanishes_on_negatives() {
        let g = Gadget::build(PowerModulus::new(1.0, 0.5), 3, GadgetVariant::OneSided).unwrap();
        assert_eq!(g.phi(2, -1.0), 0.0);
        assert_eq!(g.dphi(2, -1.0), 0.0);
        assert!(g.phi(2, 1.0) > 0.0);
    }

    #[test]
    fn non_osgood_modulus_rejected() {
        assert!(matches!(
            Gadget::build(PowerModulus::new(1.0, 0.4), 3, GadgetVariant::Symmetric),
            Err(Error::NonOsgood(_))
        ));
    }

    #[test]
    fn linear_modulus_levels() {
        // ρ(z) = z: ∫ z⁻² = 1/a_k − 1/a_{k−1} = k.
        let g = Gadget::build(PowerModulus::new(1.0, 1.0), 6, GadgetVariant::Symmetric).unwrap();
        for k in 1..=6 {
            assert!((1.0 / g.a[k] - 1.0 / g.a[k - 1] - k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn increments_beyond_support_and_zero_step() {
        let g = sqrt_gadget();
        assert_eq!(g.d_h(5, 0.3, 0.0), 0.0);
        let c = gadget_bounds_check(&g, 5, &[(2.0, 0.5), (0.0, 0.0), (-0.01, -0.2), (1e-4, 1e-3)]).unwrap();
        assert!(c.passed(), "{c:?}");
        assert!(gadget_bounds_check(&g, 5, &[(1.0, -0.5)]).is_err());
    }
}
