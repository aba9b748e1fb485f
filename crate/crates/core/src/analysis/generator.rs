//! The generator L of a compiled model applied to C² test functions.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measures::MeasureKind;
use crate::model::{Model, TermKind};
use crate::quadrature::{GL8_NODES, GL8_WEIGHTS};

/// Marks below this size use the second-order Taylor term only.
pub const TAYLOR_CUTOFF: f64 = 1e-8;
/// Jumps smaller than this use the integral form of the Taylor remainder.
const REMAINDER_SWITCH: f64 = 0.1;

/// A C² function on [0, ∞) with its first two derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestFunction {
    Const { value: f64 },
    Linear,
    Square,
    /// `e^{-λx}`
    ExpDecay { lambda: f64 },
    /// Linear combination of other test functions.
    Sum { terms: Vec<(f64, TestFunction)> },
}

impl TestFunction {
    pub fn exp_decay(lambda: f64) -> Self {
        TestFunction::ExpDecay { lambda }
    }

    pub fn f(&self, x: f64) -> f64 {
        match self {
            TestFunction::Const { value } => *value,
            TestFunction::Linear => x,
            TestFunction::Square => x * x,
            TestFunction::ExpDecay { lambda } => (-lambda * x).exp(),
            TestFunction::Sum { terms } => terms.iter().map(|(c, g)| c * g.f(x)).sum(),
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match self {
            TestFunction::Const { .. } => 0.0,
            TestFunction::Linear => 1.0,
            TestFunction::Square => 2.0 * x,
            TestFunction::ExpDecay { lambda } => -lambda * (-lambda * x).exp(),
            TestFunction::Sum { terms } => terms.iter().map(|(c, g)| c * g.d1(x)).sum(),
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match self {
            TestFunction::Const { .. } | TestFunction::Linear => 0.0,
            TestFunction::Square => 2.0,
            TestFunction::ExpDecay { lambda } => lambda * lambda * (-lambda * x).exp(),
            TestFunction::Sum { terms } => terms.iter().map(|(c, g)| c * g.d2(x)).sum(),
        }
    }

    /// Sup-norms of f, f′, f″ on [0, r].
    pub fn certificate(&self, r: f64) -> [f64; 3] {
        match self {
            TestFunction::Const { value } => [value.abs(), 0.0, 0.0],
            TestFunction::Linear => [r, 1.0, 0.0],
            TestFunction::Square => [r * r, 2.0 * r, 2.0],
            TestFunction::ExpDecay { lambda } => {
                let l = lambda.abs();
                let top = if *lambda >= 0.0 { 1.0 } else { (l * r).exp() };
                [top, l * top, l * l * top]
            }
            TestFunction::Sum { terms } => terms.iter().fold([0.0; 3], |acc, (c, g)| {
                let s = g.certificate(r);
                [acc[0] + c.abs() * s[0], acc[1] + c.abs() * s[1], acc[2] + c.abs() * s[2]]
            }),
        }
    }

    /// f(x+j) − f(x) − j f′(x), without cancellation for small j.
    pub fn second_difference(&self, x: f64, j: f64) -> f64 {
        if j.abs() < REMAINDER_SWITCH {
            let mut acc = 0.0;
            for (t, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
                acc += w * self.d2(x + t * j) * (1.0 - t);
            }
            j * j * acc
        } else {
            self.f(x + j) - self.f(x) - j * self.d1(x)
        }
    }
}

/// Lf(x) for the model's generator.
pub fn apply_generator(model: &Model, f: &TestFunction, x: f64) -> Result<f64> {
    let mut v = 0.5 * model.sigma(x).powi(2) * f.d2(x) + model.b(x) * f.d1(x);
    for term in &model.terms {
        let scale = match &term.kind {
            TermKind::Thinned(h) => h.coef.eval(x),
            TermKind::Scaled(phi) => phi.eval(x),
            TermKind::Proportional => -x,
        };
        if scale == 0.0 {
            continue;
        }
        let floor = term.z_floor();
        let m = &term.measure;
        // Thinned terms jump by z at rate h·μ; the others jump by scale·z at rate μ.
        let (rate, size) = match term.kind {
            TermKind::Thinned(_) => (scale, 1.0),
            _ => (1.0, scale),
        };
        let integral = if term.compensated() {
            let d = |z: f64| f.second_difference(x, size * z);
            match m.kind() {
                MeasureKind::StablePowerLaw { .. } if floor < TAYLOR_CUTOFF => {
                    let small = 0.5 * f.d2(x) * size * size * m.small_jump_variance(TAYLOR_CUTOFF)?;
                    small + m.integrate(d, TAYLOR_CUTOFF, f64::INFINITY)?
                }
                _ => m.integrate(d, floor, f64::INFINITY)?,
            }
        } else {
            m.integrate(|z| f.f(x + size * z) - f.f(x), floor, f64::INFINITY)?
        };
        v += rate * integral;
    }
    Ok(v)
}

/// Lf tabulated on a grid quadratically refined towards 0, linearly
/// interpolated, with direct evaluation outside the table.
#[derive(Debug, Clone)]
pub struct GeneratorTable {
    xs: Vec<f64>,
    values: Vec<f64>,
    model: Model,
    f: TestFunction,
}

impl GeneratorTable {
    pub fn new(model: &Model, f: &TestFunction, x_max: f64, n: usize) -> Result<Self> {
        let xs: Vec<f64> = (0..=n).map(|i| x_max * (i as f64 / n as f64).powi(2)).collect();
        let values = xs.iter().map(|&x| apply_generator(model, f, x)).collect::<Result<Vec<_>>>()?;
        Ok(GeneratorTable { xs, values, model: model.clone(), f: f.clone() })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let last = *self.xs.last().unwrap();
        if x > last || x < 0.0 {
            return apply_generator(&self.model, &self.f, x);
        }
        let i = self.xs.partition_point(|&p| p <= x).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let w = (x - x0) / (x1 - x0);
        Ok(self.values[i - 1] + w * (self.values[i] - self.values[i - 1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::JumpLaw;
    use crate::model::ModelSpec;
    use crate::quadrature::{integrate_to_inf, Tolerance};
    use statrs::function::gamma::gamma;

    fn cbi() -> Model {
        ModelSpec::cbi(
            1.0,
            1.0,
            -1.0,
            Some(MeasureKind::StablePowerLaw { c: 1.0, alpha: 1.5 }),
            Some(MeasureKind::CompoundPoisson { rate: 1.0, law: JumpLaw::Point { at: 2.0 } }),
        )
        .build()
        .unwrap()
    }

    #[test]
    fn identity_function() {
        let m = cbi();
        for x in [0.0, 0.5, 2.0, 9.0] {
            let v = apply_generator(&m, &TestFunction::Linear, x).unwrap();
            assert!((v - (3.0 - x)).abs() < 1e-8, "{x}: {v}");
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let m = cbi();
        for x in [0.0, 1.0, 4.0] {
            assert_eq!(apply_generator(&m, &TestFunction::Const { value: 3.0 }, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn square_difference_is_exact() {
        let f = TestFunction::Square;
        for (x, j) in [(1.0, 1e-3), (2.0, 0.5), (0.0, 7.0)] {
            assert!((f.second_difference(x, j) - j * j).abs() < 1e-14 * (1.0 + j * j));
        }
    }

    #[test]
    fn exponential_on_stable_cbi() {
        let m = ModelSpec::stable_cbi(0.0, 0.0, 0.0, 1.0, 1.5, None).build().unwrap();
        // Independent oracle: ∫(e^{-z} - 1 + z) z^{-2.5} dz by direct quadrature,
        // with the closed form Γ(1/2)/0.75 as a second reference.
        let near = crate::quadrature::integrate(
            |z: f64| if z == 0.0 { 0.0 } else { ((-z).exp_m1() + z) * z.powf(-2.5) },
            0.0,
            1.0,
            Tolerance { abs: 1e-13, rel: 1e-12 },
        )
        .unwrap();
        let far = integrate_to_inf(|z| ((-z).exp() - 1.0 + z) * z.powf(-2.5), 1.0, Tolerance::default()).unwrap();
        let oracle = near + far;
        assert!((oracle - gamma(0.5) / 0.75).abs() < 1e-7);
        for x in [0.1, 1.0, 3.0] {
            let v = apply_generator(&m, &TestFunction::exp_decay(1.0), x).unwrap();
            assert!((v - oracle * x * (-x).exp()).abs() < 1e-8, "{x}: {v}");
        }
    }

    #[test]
    fn table_tracks_direct_evaluation() {
        let m = cbi();
        let f = TestFunction::exp_decay(1.0);
        let t = GeneratorTable::new(&m, &f, 20.0, 2000).unwrap();
        for x in [0.0, 0.013, 0.7, 3.3, 19.0, 25.0] {
            let d = apply_generator(&m, &f, x).unwrap();
            assert!((t.eval(x).unwrap() - d).abs() < 1e-5, "{x}");
        }
    }
}
