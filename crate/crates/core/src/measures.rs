//! σ-finite jump measures on (0, ∞) and the integrals the schemes need from them.
//!
//! Three families are supported: the one-sided stable power law `c z^{-1-α} dz`,
//! finite compound-Poisson measures `rate · P(Z ∈ dz)`, and tabulated densities.
//! Stable quantities are closed form; tables are integrated with composite
//! Simpson in `log z` and are zero outside their grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance, GL8_NODES, GL8_WEIGHTS};

/// Integrals larger than this are reported as divergent.
pub const DIVERGENCE_CUTOFF: f64 = 1e12;

/// Distribution of a single compound-Poisson mark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JumpLaw {
    Point { at: f64 },
    Exponential { mean: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpLaw::Point { at } => at > 0.0 && at.is_finite(),
            JumpLaw::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            JumpLaw::Uniform { lo, hi } => lo >= 0.0 && hi > lo && hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!("jump law {self:?} is not a law on (0, inf)")))
        }
    }

    /// P(Z > x).
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            JumpLaw::Point { at } => {
                if at > x {
                    1.0
                } else {
                    0.0
                }
            }
            JumpLaw::Exponential { mean } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / mean).exp()
                }
            }
            JumpLaw::Uniform { lo, hi } => ((hi - x.max(lo)) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// E[g(Z); lo < Z ≤ hi].
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> Result<f64> {
        match *self {
            JumpLaw::Point { at } => Ok(if at > lo && at <= hi { g(at) } else { 0.0 }),
            JumpLaw::Exponential { mean } => {
                let density = |z: f64| g(z) * (-z / mean).exp() / mean;
                let a = lo.max(0.0);
                if hi.is_infinite() {
                    quadrature::integrate_to_inf(density, a, Tolerance::default())
                } else if hi > a {
                    quadrature::integrate(density, a, hi, Tolerance::default())
                } else {
                    Ok(0.0)
                }
            }
            JumpLaw::Uniform { lo: l, hi: h } => {
                let a = lo.max(l);
                let b = hi.min(h);
                if b <= a {
                    return Ok(0.0);
                }
                quadrature::integrate(|z| g(z) / (h - l), a, b, Tolerance::default())
            }
        }
    }

    /// Largest point of the support.
    pub fn support_max(&self) -> Option<f64> {
        match *self {
            JumpLaw::Point { at } => Some(at),
            JumpLaw::Exponential { .. } => None,
            JumpLaw::Uniform { hi, .. } => Some(hi),
        }
    }
}

/// The shape of a jump measure, as written in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum MeasureKind {
    /// `c z^{-1-α} dz` on (0, ∞).
    #[serde(rename = "stable")]
    StablePowerLaw { c: f64, alpha: f64 },
    /// `rate · P(Z ∈ dz)`.
    #[serde(rename = "cpp")]
    CompoundPoisson { rate: f64, law: JumpLaw },
    /// Density given at strictly increasing abscissae, zero outside the grid.
    #[serde(rename = "table")]
    TabulatedDensity { points: Vec<[f64; 2]> },
}

/// How the measure enters the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Through the compensated random measure; needs ∫(z∧z²) < ∞.
    Compensated,
    /// Through the raw random measure; needs ∫(1∧z) < ∞.
    NonCompensated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpMeasure {
    kind: MeasureKind,
    role: Role,
}

/// Result of [`JumpMeasure::check_integrability`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegrabilityVerdict {
    Finite(f64),
    Divergent,
}

impl IntegrabilityVerdict {
    pub fn value(self) -> Option<f64> {
        match self {
            IntegrabilityVerdict::Finite(v) => Some(v),
            IntegrabilityVerdict::Divergent => None,
        }
    }
}

impl JumpMeasure {
    pub fn new(kind: MeasureKind, role: Role) -> Result<Self> {
        match &kind {
            MeasureKind::StablePowerLaw { c, alpha } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidMeasure(format!("stable intensity c = {c} must be positive")));
                }
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidMeasure(format!("stable index alpha = {alpha} must be positive")));
                }
            }
            MeasureKind::CompoundPoisson { rate, law } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::InvalidMeasure(format!("compound Poisson rate {rate} must be positive")));
                }
                law.validate()?;
            }
            MeasureKind::TabulatedDensity { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidMeasure("table needs at least two points".into()));
                }
                for w in points.windows(2) {
                    if w[1][0] <= w[0][0] {
                        return Err(Error::InvalidMeasure("table grid must be strictly increasing".into()));
                    }
                }
                if points[0][0] <= 0.0 {
                    return Err(Error::InvalidMeasure("table abscissae must be positive".into()));
                }
                if points.iter().any(|p| !(p[1] >= 0.0) || !p[1].is_finite()) {
                    return Err(Error::InvalidMeasure("table densities must be finite and non-negative".into()));
                }
            }
        }
        Ok(JumpMeasure { kind, role })
    }

    pub fn stable(c: f64, alpha: f64, role: Role) -> Result<Self> {
        Self::new(MeasureKind::StablePowerLaw { c, alpha }, role)
    }

    pub fn compound_poisson(rate: f64, law: JumpLaw, role: Role) -> Result<Self> {
        Self::new(MeasureKind::CompoundPoisson { rate, law }, role)
    }

    pub fn table(points: Vec<[f64; 2]>, role: Role) -> Result<Self> {
        Self::new(MeasureKind::TabulatedDensity { points }, role)
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Stable parameters when the measure is exactly a power law.
    pub fn as_stable(&self) -> Option<(f64, f64)> {
        match self.kind {
            MeasureKind::StablePowerLaw { c, alpha } => Some((c, alpha)),
            _ => None,
        }
    }

    /// Whether the total mass is finite. Tables count as finite only through
    /// their grid; the engine still truncates them below the cutoff.
    pub fn is_compound_poisson(&self) -> bool {
        matches!(self.kind, MeasureKind::CompoundPoisson { .. })
    }

    pub fn support_max(&self) -> Option<f64> {
        match &self.kind {
            MeasureKind::StablePowerLaw { .. } => None,
            MeasureKind::CompoundPoisson { law, .. } => law.support_max(),
            MeasureKind::TabulatedDensity { points } => points.last().map(|p| p[0]),
        }
    }

    /// The role-appropriate integrability integral: ∫(z∧z²) dm for compensated
    /// measures, ∫(1∧z) dm otherwise.
    pub fn check_integrability(&self) -> Result<IntegrabilityVerdict> {
        let value = match (&self.kind, self.role) {
            (MeasureKind::StablePowerLaw { c, alpha }, Role::Compensated) => {
                if *alpha > 1.0 && *alpha < 2.0 {
                    c * (1.0 / (2.0 - alpha) + 1.0 / (alpha - 1.0))
                } else {
                    return Ok(IntegrabilityVerdict::Divergent);
                }
            }
            (MeasureKind::StablePowerLaw { c, alpha }, Role::NonCompensated) => {
                if *alpha > 0.0 && *alpha < 1.0 {
                    c * (1.0 / (1.0 - alpha) + 1.0 / alpha)
                } else {
                    return Ok(IntegrabilityVerdict::Divergent);
                }
            }
            (_, Role::Compensated) => {
                self.integrate(|z| z * z, 0.0, 1.0)? + self.integrate(|z| z, 1.0, f64::INFINITY)?
            }
            (_, Role::NonCompensated) => {
                self.integrate(|z| z, 0.0, 1.0)? + self.integrate(|_| 1.0, 1.0, f64::INFINITY)?
            }
        };
        if !value.is_finite() || value > DIVERGENCE_CUTOFF {
            Ok(IntegrabilityVerdict::Divergent)
        } else {
            Ok(IntegrabilityVerdict::Finite(value))
        }
    }

    /// Like [`check_integrability`](Self::check_integrability) but turns divergence into an error.
    pub fn require_integrable(&self) -> Result<f64> {
        match self.check_integrability()? {
            IntegrabilityVerdict::Finite(v) => Ok(v),
            IntegrabilityVerdict::Divergent => Err(Error::Divergent(format!(
                "{} integral of {:?} is infinite",
                match self.role {
                    Role::Compensated => "∫(z∧z²)",
                    Role::NonCompensated => "∫(1∧z)",
                },
                self.kind
            ))),
        }
    }

    /// m((ε, ∞)).
    pub fn tail_mass(&self, eps: f64) -> f64 {
        match &self.kind {
            MeasureKind::StablePowerLaw { c, alpha } => {
                if eps <= 0.0 {
                    f64::INFINITY
                } else {
                    c * eps.powf(-alpha) / alpha
                }
            }
            MeasureKind::CompoundPoisson { rate, law } => rate * law.survival(eps),
            MeasureKind::TabulatedDensity { points } => table_integral(points, |_| 1.0, eps, f64::INFINITY),
        }
    }

    /// ∫_{(lo, hi]} z m(dz); `hi` may be infinite.
    pub fn first_moment_between(&self, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let v = match &self.kind {
            MeasureKind::StablePowerLaw { c, alpha } => {
                let a = *alpha;
                if (a - 1.0).abs() < 1e-14 {
                    if lo <= 0.0 || hi.is_infinite() {
                        f64::INFINITY
                    } else {
                        c * (hi / lo).ln()
                    }
                } else {
                    let at = |x: f64| -> f64 {
                        if x.is_infinite() {
                            if a > 1.0 {
                                0.0
                            } else {
                                f64::INFINITY
                            }
                        } else if x <= 0.0 {
                            if a < 1.0 {
                                0.0
                            } else {
                                f64::INFINITY
                            }
                        } else {
                            x.powf(1.0 - a)
                        }
                    };
                    let (ha, la) = (at(hi), at(lo));
                    if ha.is_infinite() || la.is_infinite() {
                        f64::INFINITY
                    } else {
                        c * (ha - la) / (1.0 - a)
                    }
                }
            }
            MeasureKind::CompoundPoisson { rate, law } => rate * law.expect(|z| z, lo, hi)?,
            MeasureKind::TabulatedDensity { points } => table_integral(points, |z| z, lo, hi),
        };
        if !v.is_finite() || v > DIVERGENCE_CUTOFF {
            return Err(Error::Divergent(format!("∫_({lo}, {hi}] z m(dz) is infinite for {:?}", self.kind)));
        }
        Ok(v)
    }

    /// ∫_{(ε, ∞)} z m(dz): the drift removed when jumps above ε are simulated as raw events.
    pub fn compensator_drift(&self, eps: f64) -> Result<f64> {
        if self.role != Role::Compensated {
            return Err(Error::InvalidMeasure("compensator drift requested for a non-compensated measure".into()));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidMeasure(format!("cutoff {eps} must be positive")));
        }
        self.first_moment_between(eps, f64::INFINITY)
    }

    /// ∫_{(0, ε]} z² m(dz): variance rate of the dropped small-jump martingale.
    pub fn small_jump_variance(&self, eps: f64) -> Result<f64> {
        if eps <= 0.0 {
            return Ok(0.0);
        }
        let v = match &self.kind {
            MeasureKind::StablePowerLaw { c, alpha } => {
                if *alpha >= 2.0 {
                    f64::INFINITY
                } else {
                    c * eps.powf(2.0 - alpha) / (2.0 - alpha)
                }
            }
            MeasureKind::CompoundPoisson { rate, law } => rate * law.expect(|z| z * z, 0.0, eps)?,
            MeasureKind::TabulatedDensity { points } => table_integral(points, |z| z * z, 0.0, eps),
        };
        if !v.is_finite() || v > DIVERGENCE_CUTOFF {
            return Err(Error::Divergent(format!("∫_(0, {eps}] z² m(dz) is infinite")));
        }
        Ok(v)
    }

    /// ∫_{(lo, hi]} g(z) m(dz) by quadrature (expectation for compound Poisson).
    /// For the stable law `lo` must be positive unless `g` vanishes fast enough at 0;
    /// callers handle the small-jump region themselves.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        match &self.kind {
            MeasureKind::StablePowerLaw { c, alpha } => {
                let dens = |z: f64| g(z) * c * z.powf(-1.0 - alpha);
                let tol = Tolerance::default();
                // Below 1e-100 the density overflows while every admissible integrand is negligible.
                let lo = lo.max(1e-100);
                let mut total = 0.0;
                if lo < 1.0 {
                    total += quadrature::integrate_log(&dens, lo, hi.min(1.0), tol)?;
                }
                if hi > 1.0 {
                    let a = lo.max(1.0);
                    if hi.is_infinite() {
                        total += quadrature::integrate_to_inf(&dens, a, tol)?;
                    } else {
                        total += quadrature::integrate_log(&dens, a, hi, tol)?;
                    }
                }
                Ok(total)
            }
            MeasureKind::CompoundPoisson { rate, law } => Ok(rate * law.expect(g, lo, hi)?),
            MeasureKind::TabulatedDensity { points } => Ok(table_integral(points, g, lo, hi)),
        }
    }

    /// Sampler for the normalized restriction of the measure to (ε, ∞).
    pub fn tail_sampler(&self, eps: f64) -> Result<TailSampler> {
        let mass = self.tail_mass(eps);
        if !(mass > 0.0) {
            return Err(Error::EmptyTail(eps));
        }
        Ok(match &self.kind {
            MeasureKind::StablePowerLaw { alpha, .. } => TailSampler::Pareto { scale: eps, alpha: *alpha },
            MeasureKind::CompoundPoisson { law, .. } => match *law {
                JumpLaw::Point { at } => TailSampler::Point(at),
                JumpLaw::Exponential { mean } => TailSampler::ShiftedExponential { shift: eps.max(0.0), mean },
                JumpLaw::Uniform { lo, hi } => TailSampler::Uniform { lo: lo.max(eps), hi },
            },
            MeasureKind::TabulatedDensity { points } => {
                let (z, cdf) = table_cdf(points, eps);
                TailSampler::Inverse { z, cdf }
            }
        })
    }
}

/// Draws marks from a normalized tail restriction given a uniform variate.
#[derive(Debug, Clone)]
pub enum TailSampler {
    Pareto { scale: f64, alpha: f64 },
    Point(f64),
    ShiftedExponential { shift: f64, mean: f64 },
    Uniform { lo: f64, hi: f64 },
    Inverse { z: Vec<f64>, cdf: Vec<f64> },
}

impl TailSampler {
    /// Map `u ∈ (0, 1)` to a mark.
    pub fn mark(&self, u: f64) -> f64 {
        match self {
            TailSampler::Pareto { scale, alpha } => scale * u.powf(-1.0 / alpha),
            TailSampler::Point(at) => *at,
            TailSampler::ShiftedExponential { shift, mean } => shift - mean * u.ln(),
            TailSampler::Uniform { lo, hi } => lo + (hi - lo) * u,
            TailSampler::Inverse { z, cdf } => {
                let i = cdf.partition_point(|&c| c < u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[i - 1], cdf[i]);
                let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                z[i - 1] + w * (z[i] - z[i - 1])
            }
        }
    }
}

fn interp_density(points: &[[f64; 2]], z: f64) -> f64 {
    let i = points.partition_point(|p| p[0] < z);
    if i == 0 {
        return if z == points[0][0] { points[0][1] } else { 0.0 };
    }
    if i >= points.len() {
        return 0.0;
    }
    let [z0, f0] = points[i - 1];
    let [z1, f1] = points[i];
    if f0 > 0.0 && f1 > 0.0 {
        // log-log interpolation reproduces power laws exactly
        let w = (z / z0).ln() / (z1 / z0).ln();
        (f0.ln() + w * (f1 / f0).ln()).exp()
    } else {
        f0 + (f1 - f0) * (z - z0) / (z1 - z0)
    }
}

/// Abscissae and densities of the table restricted to [lo, hi].
fn restrict(points: &[[f64; 2]], lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let zmin = points[0][0];
    let zmax = points[points.len() - 1][0];
    let a = lo.max(zmin);
    let b = hi.min(zmax);
    let mut zs = Vec::new();
    let mut fs = Vec::new();
    if b <= a {
        return (zs, fs);
    }
    zs.push(a);
    fs.push(interp_density(points, a));
    for p in points.iter().filter(|p| p[0] > a && p[0] < b) {
        zs.push(p[0]);
        fs.push(p[1]);
    }
    zs.push(b);
    fs.push(interp_density(points, b));
    (zs, fs)
}

/// ∫ over one interpolation segment [a, b] of g(z) f(z) dz, 8-point Gauss–Legendre
/// in ln z for log-log segments and in z otherwise.
fn segment_integral<G: Fn(f64) -> f64>(points: &[[f64; 2]], g: &G, a: f64, b: f64) -> f64 {
    let (fa, fb) = (interp_density(points, a), interp_density(points, b));
    let mut acc = 0.0;
    if fa > 0.0 && fb > 0.0 {
        let (sa, sb) = (a.ln(), b.ln());
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            let z = (sa + (sb - sa) * x).exp().clamp(a, b);
            acc += w * g(z) * interp_density(points, z) * z;
        }
        acc * (sb - sa)
    } else {
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            let z = a + (b - a) * x;
            acc += w * g(z) * interp_density(points, z);
        }
        acc * (b - a)
    }
}

/// ∫_{(lo, hi]} g(z) f(z) dz over the interpolated density.
fn table_integral<G: Fn(f64) -> f64>(points: &[[f64; 2]], g: G, lo: f64, hi: f64) -> f64 {
    let (zs, _) = restrict(points, lo, hi);
    zs.windows(2).map(|w| segment_integral(points, &g, w[0], w[1])).sum()
}

/// Cumulative distribution of the normalized restriction to (ε, ∞) at the
/// segment endpoints.
fn table_cdf(points: &[[f64; 2]], eps: f64) -> (Vec<f64>, Vec<f64>) {
    let (zs, _) = restrict(points, eps, f64::INFINITY);
    let mut cdf = vec![0.0; zs.len()];
    for i in 1..zs.len() {
        cdf[i] = cdf[i - 1] + segment_integral(points, &|_| 1.0, zs[i - 1], zs[i]);
    }
    let total = *cdf.last().unwrap_or(&1.0);
    if total > 0.0 {
        cdf.iter_mut().for_each(|c| *c /= total);
    }
    (zs, cdf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stable15() -> JumpMeasure {
        JumpMeasure::stable(1.0, 1.5, Role::Compensated).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// Dense log grid equivalent of `c z^{-1-α}`.
    fn stable_table(c: f64, alpha: f64, zmin: f64, zmax: f64, n: usize) -> JumpMeasure {
        let (a, b) = (zmin.ln(), zmax.ln());
        let points = (0..n)
            .map(|i| {
                let z = (a + (b - a) * i as f64 / (n - 1) as f64).exp();
                [z, c * z.powf(-1.0 - alpha)]
            })
            .collect();
        JumpMeasure::table(points, Role::Compensated).unwrap()
    }

    #[test]
    fn stable_integrability_closed_form() {
        // ∫₀¹ z^{1-α} dz + ∫₁^∞ z^{-α} dz at α = 1.5
        assert_eq!(stable15().check_integrability().unwrap(), IntegrabilityVerdict::Finite(4.0));
        let bad = JumpMeasure::stable(1.0, 2.0, Role::Compensated).unwrap();
        assert_eq!(bad.check_integrability().unwrap(), IntegrabilityVerdict::Divergent);
        assert!(matches!(bad.require_integrable(), Err(Error::Divergent(_))));
        let below = JumpMeasure::stable(1.0, 1.0, Role::Compensated).unwrap();
        assert_eq!(below.check_integrability().unwrap(), IntegrabilityVerdict::Divergent);
    }

    #[test]
    fn non_compensated_stable_needs_alpha_below_one() {
        let m = JumpMeasure::stable(1.0, 0.5, Role::NonCompensated).unwrap();
        assert!((m.check_integrability().unwrap().value().unwrap() - 4.0).abs() < 1e-14);
        let m = JumpMeasure::stable(1.0, 1.5, Role::NonCompensated).unwrap();
        assert_eq!(m.check_integrability().unwrap(), IntegrabilityVerdict::Divergent);
    }

    #[test]
    fn compound_poisson_integrability_bounded_by_rate() {
        for law in [
            JumpLaw::Point { at: 0.3 },
            JumpLaw::Point { at: 7.0 },
            JumpLaw::Exponential { mean: 2.0 },
            JumpLaw::Uniform { lo: 0.0, hi: 3.0 },
        ] {
            let m = JumpMeasure::compound_poisson(2.5, law, Role::NonCompensated).unwrap();
            let v = m.check_integrability().unwrap().value().unwrap();
            assert!(v > 0.0 && v <= 2.5 + 1e-12, "{v}");
        }
        let m = JumpMeasure::compound_poisson(2.0, JumpLaw::Point { at: 0.5 }, Role::NonCompensated).unwrap();
        assert_eq!(m.check_integrability().unwrap(), IntegrabilityVerdict::Finite(1.0));
    }

    #[test]
    fn tail_mass_examples() {
        assert!(rel(stable15().tail_mass(1.0), 1.0 / 1.5) < 1e-15);
        assert!(stable15().tail_mass(1e200) < 1e-290);
        let m = JumpMeasure::compound_poisson(2.0, JumpLaw::Point { at: 0.5 }, Role::NonCompensated).unwrap();
        assert_eq!(m.tail_mass(0.4), 2.0);
        assert_eq!(m.tail_mass(0.5), 0.0);
    }

    #[test]
    fn compensator_drift_examples() {
        assert!(rel(stable15().compensator_drift(0.01).unwrap(), 20.0) < 1e-13);
        assert!(rel(stable15().compensator_drift(1.0).unwrap(), 2.0) < 1e-14);
        let nc = JumpMeasure::stable(1.0, 0.5, Role::NonCompensated).unwrap();
        assert!(nc.compensator_drift(1.0).is_err());
        // stable α < 1 has an infinite mean above any cutoff
        assert!(matches!(nc.first_moment_between(1.0, f64::INFINITY), Err(Error::Divergent(_))));
    }

    #[test]
    fn small_jump_variance_examples() {
        assert!(rel(stable15().small_jump_variance(1.0).unwrap(), 2.0) < 1e-14);
        assert!(stable15().small_jump_variance(1e-30).unwrap() < 1e-14);
        let m2 = JumpMeasure::stable(2.0, 1.5, Role::Compensated).unwrap();
        assert!(rel(m2.small_jump_variance(1.0).unwrap(), 4.0) < 1e-14);
    }

    #[test]
    fn tabulated_matches_closed_form() {
        let t = stable_table(1.0, 1.5, 1e-20, 1e14, 8001);
        let s = stable15();
        for eps in [0.01, 0.37, 1.0, 5.0] {
            assert!(rel(t.tail_mass(eps), s.tail_mass(eps)) < 1e-6, "tail at {eps}");
            assert!(rel(t.compensator_drift(eps).unwrap(), s.compensator_drift(eps).unwrap()) < 1e-6);
            assert!(rel(t.small_jump_variance(eps).unwrap(), s.small_jump_variance(eps).unwrap()) < 1e-6);
        }
        let v = t.check_integrability().unwrap().value().unwrap();
        assert!(rel(v, 4.0) < 1e-6, "{v}");
    }

    #[test]
    fn table_is_zero_outside_grid() {
        let t = JumpMeasure::table(vec![[1.0, 2.0], [2.0, 2.0]], Role::NonCompensated).unwrap();
        assert!((t.tail_mass(0.0) - 2.0).abs() < 1e-12);
        assert_eq!(t.tail_mass(3.0), 0.0);
        assert!(t.small_jump_variance(0.5).unwrap() == 0.0);
    }

    #[test]
    fn malformed_tables_rejected() {
        assert!(JumpMeasure::table(vec![[1.0, 1.0], [1.0, 1.0]], Role::Compensated).is_err());
        assert!(JumpMeasure::table(vec![[1.0, -1.0], [2.0, 1.0]], Role::Compensated).is_err());
        assert!(JumpMeasure::table(vec![[0.0, 1.0], [2.0, 1.0]], Role::Compensated).is_err());
        assert!(JumpMeasure::stable(-1.0, 1.5, Role::Compensated).is_err());
    }

    #[test]
    fn monotone_in_cutoff() {
        let s = stable15();
        let t = stable_table(1.0, 1.5, 1e-6, 1e8, 801);
        let cp = JumpMeasure::compound_poisson(1.0, JumpLaw::Exponential { mean: 1.0 }, Role::Compensated).unwrap();
        for m in [&s, &t, &cp] {
            let mut prev = (f64::INFINITY, f64::INFINITY, 0.0);
            for i in 0..40 {
                let eps = 1e-3 * 1.3f64.powi(i);
                let cur = (
                    m.tail_mass(eps),
                    m.compensator_drift(eps).unwrap(),
                    m.small_jump_variance(eps).unwrap(),
                );
                assert!(cur.0 <= prev.0 + 1e-12 && cur.1 <= prev.1 + 1e-12 && cur.2 >= prev.2 - 1e-12);
                prev = cur;
            }
        }
    }

    #[test]
    fn tail_samplers_stay_above_cutoff() {
        let s = stable15().tail_sampler(0.5).unwrap();
        assert!((s.mark(1.0) - 0.5).abs() < 1e-15);
        assert!(s.mark(0.01) > 0.5);
        let t = stable_table(1.0, 1.5, 1e-3, 1e6, 2001).tail_sampler(0.5).unwrap();
        // median of the normalized Pareto tail is ε·2^{1/α}
        assert!(rel(t.mark(0.5), 0.5 * 2f64.powf(1.0 / 1.5)) < 1e-3);
        let m = JumpMeasure::compound_poisson(2.0, JumpLaw::Point { at: 0.1 }, Role::NonCompensated).unwrap();
        assert!(matches!(m.tail_sampler(0.2), Err(Error::EmptyTail(_))));
    }
}
