//! Model specifications and their canonical compiled form.
//!
//! Every equation form (general thinned form, CBI, stable-driven CBI, Lévy-driven,
//! CBIE) compiles to the same [`Model`]: a diffusion coefficient, a drift, and a
//! list of [`JumpTerm`]s. Each term says how a mark `z` of its measure moves the
//! state: accepted with probability proportional to an intensity (thinned), scaled
//! by a state coefficient, or applied as a proportional downward factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{JumpMeasure, MeasureKind, Role};

/// A real coefficient function on [0, ∞).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Coef {
    Zero,
    Const { value: f64 },
    /// `intercept + slope · x`
    Linear { intercept: f64, slope: f64 },
    /// `coef · x^exponent`
    Power { coef: f64, exponent: f64 },
    /// `coef · min(x, cap)`
    Saturating { coef: f64, cap: f64 },
    /// `scale · tanh(rate · x)`
    Tanh { scale: f64, rate: f64 },
    /// Piecewise linear through the points, constant beyond the ends.
    Table { points: Vec<[f64; 2]> },
}

impl Default for Coef {
    fn default() -> Self {
        Coef::Zero
    }
}

impl Coef {
    pub fn linear(intercept: f64, slope: f64) -> Self {
        Coef::Linear { intercept, slope }
    }

    pub fn constant(value: f64) -> Self {
        Coef::Const { value }
    }

    pub fn power(coef: f64, exponent: f64) -> Self {
        Coef::Power { coef, exponent }
    }

    /// `x ↦ √(2a x)`, the CBI diffusion coefficient.
    pub fn cbi_sigma(a: f64) -> Self {
        if a == 0.0 {
            Coef::Zero
        } else {
            Coef::power((2.0 * a).sqrt(), 0.5)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coef::Zero => 0.0,
            Coef::Const { value } => *value,
            Coef::Linear { intercept, slope } => intercept + slope * x,
            Coef::Power { coef, exponent } => {
                if x <= 0.0 {
                    if *exponent == 0.0 {
                        *coef
                    } else {
                        0.0
                    }
                } else if *exponent == 0.5 {
                    coef * x.sqrt()
                } else if *exponent == 1.0 {
                    coef * x
                } else {
                    coef * x.powf(*exponent)
                }
            }
            Coef::Saturating { coef, cap } => coef * x.min(*cap),
            Coef::Tanh { scale, rate } => scale * (rate * x).tanh(),
            Coef::Table { points } => {
                if points.is_empty() {
                    return 0.0;
                }
                let i = points.partition_point(|p| p[0] < x);
                if i == 0 {
                    points[0][1]
                } else if i >= points.len() {
                    points[points.len() - 1][1]
                } else {
                    let [x0, y0] = points[i - 1];
                    let [x1, y1] = points[i];
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Derivative; one-sided at kinks, infinite where a power law is singular at 0.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Coef::Zero | Coef::Const { .. } => 0.0,
            Coef::Linear { slope, .. } => *slope,
            Coef::Power { coef, exponent } => {
                if *exponent == 0.0 {
                    0.0
                } else if x <= 0.0 {
                    if *exponent < 1.0 {
                        f64::INFINITY
                    } else if *exponent == 1.0 {
                        *coef
                    } else {
                        0.0
                    }
                } else {
                    coef * exponent * x.powf(exponent - 1.0)
                }
            }
            Coef::Saturating { coef, cap } => {
                if x < *cap {
                    *coef
                } else {
                    0.0
                }
            }
            Coef::Tanh { scale, rate } => {
                let c = (rate * x).cosh();
                scale * rate / (c * c)
            }
            Coef::Table { points } => {
                let i = points.partition_point(|p| p[0] <= x);
                if i == 0 || i >= points.len() {
                    0.0
                } else {
                    (points[i][1] - points[i - 1][1]) / (points[i][0] - points[i - 1][0])
                }
            }
        }
    }

    /// sup_{0 ≤ y ≤ x} of the coefficient, exact for the monotone families and
    /// grid-based otherwise.
    pub fn running_sup(&self, x: f64) -> f64 {
        match self {
            Coef::Zero => 0.0,
            Coef::Const { value } => *value,
            Coef::Linear { intercept, slope } => intercept.max(intercept + slope * x),
            Coef::Power { coef, exponent } => {
                if *exponent >= 0.0 && *coef >= 0.0 {
                    self.eval(x)
                } else {
                    grid_sup(self, x)
                }
            }
            Coef::Saturating { coef, .. } if *coef >= 0.0 => self.eval(x),
            Coef::Tanh { scale, rate } if scale * rate >= 0.0 => self.eval(x),
            _ => grid_sup(self, x),
        }
    }
}

fn grid_sup(c: &Coef, x: f64) -> f64 {
    let mut best = c.eval(0.0);
    let mut pts: Vec<f64> = (0..=512).map(|i| x * i as f64 / 512.0).collect();
    if let Coef::Table { points } = c {
        pts.extend(points.iter().map(|p| p[0]).filter(|&p| p <= x));
    }
    for p in pts {
        best = best.max(c.eval(p));
    }
    best
}

/// Separable jump intensity `h(x, z) = coef(x) · 1{z > z_above}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intensity {
    pub coef: Coef,
    #[serde(default)]
    pub z_above: f64,
}

impl Intensity {
    pub fn new(coef: Coef) -> Self {
        Intensity { coef, z_above: 0.0 }
    }

    pub fn above(coef: Coef, z_above: f64) -> Self {
        Intensity { coef, z_above }
    }

    pub fn eval(&self, x: f64, z: f64) -> f64 {
        if z > self.z_above {
            self.coef.eval(x)
        } else {
            0.0
        }
    }
}

/// User-facing model description, one variant per equation form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum ModelForm {
    /// dx = σ(x)dB + ∫∫_0^{h0} z Ñ0 + b(x)dt + ∫∫_0^{h1} z N1
    General {
        sigma: Coef,
        b: Coef,
        #[serde(default)]
        h0: Option<Intensity>,
        #[serde(default)]
        h1: Option<Intensity>,
        #[serde(default)]
        mu0: Option<MeasureKind>,
        #[serde(default)]
        mu1: Option<MeasureKind>,
        /// Declared non-decreasing part b2 of the drift split b = b1 - b2.
        #[serde(default)]
        b2: Option<Coef>,
    },
    /// Continuous-state branching with immigration.
    Cbi {
        a: f64,
        b: f64,
        beta: f64,
        #[serde(default)]
        nu0: Option<MeasureKind>,
        #[serde(default)]
        nu1: Option<MeasureKind>,
    },
    /// CBI driven by a one-sided α-stable noise: (c x)^{1/α} dz0.
    StableCbi {
        a: f64,
        b: f64,
        beta: f64,
        c: f64,
        alpha: f64,
        #[serde(default)]
        nu1: Option<MeasureKind>,
    },
    /// σ dB + φ0 dz0 + b dt + φ1 dz1 - x dy0 - x dy1.
    Levy {
        sigma: Coef,
        b: Coef,
        #[serde(default)]
        phi0: Coef,
        #[serde(default)]
        phi1: Coef,
        #[serde(default)]
        mu0: Option<MeasureKind>,
        #[serde(default)]
        mu1: Option<MeasureKind>,
        #[serde(default)]
        nu0: Option<MeasureKind>,
        #[serde(default)]
        nu1: Option<MeasureKind>,
    },
    /// Stable CBI with proportional emigration jumps -x dy1.
    Cbie {
        a: f64,
        b: f64,
        beta: f64,
        c: f64,
        alpha: f64,
        #[serde(default)]
        nu1: Option<MeasureKind>,
        emigration: MeasureKind,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub form: ModelForm,
    /// Asserted monotonicity of the jump intensities in x. When absent it is
    /// established on a grid at build time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone: Option<bool>,
}

impl From<ModelForm> for ModelSpec {
    fn from(form: ModelForm) -> Self {
        ModelSpec { form, monotone: None }
    }
}

impl ModelSpec {
    pub fn cbi(a: f64, b: f64, beta: f64, nu0: Option<MeasureKind>, nu1: Option<MeasureKind>) -> Self {
        ModelForm::Cbi { a, b, beta, nu0, nu1 }.into()
    }

    /// CIR: CBI without jumps.
    pub fn cir(a: f64, b: f64, beta: f64) -> Self {
        Self::cbi(a, b, beta, None, None)
    }

    pub fn stable_cbi(a: f64, b: f64, beta: f64, c: f64, alpha: f64, nu1: Option<MeasureKind>) -> Self {
        ModelForm::StableCbi { a, b, beta, c, alpha, nu1 }.into()
    }

    pub fn cbie(a: f64, b: f64, beta: f64, c: f64, alpha: f64, nu1: Option<MeasureKind>, emigration: MeasureKind) -> Self {
        ModelForm::Cbie { a, b, beta, c, alpha, nu1, emigration }.into()
    }

    pub fn name(&self) -> &'static str {
        match self.form {
            ModelForm::General { .. } => "general",
            ModelForm::Cbi { .. } => "cbi",
            ModelForm::StableCbi { .. } => "stable_cbi",
            ModelForm::Levy { .. } => "levy",
            ModelForm::Cbie { .. } => "cbie",
        }
    }

    pub fn build(&self) -> Result<Model> {
        Model::build(self)
    }
}

/// How a mark `z` of the term's measure acts on the state.
#[derive(Debug, Clone, PartialEq)]
pub enum TermKind {
    /// Rate `h(x, z) μ(dz)`, jump `+z`.
    Thinned(Intensity),
    /// Rate `μ(dz)`, jump `φ(x) z`.
    Scaled(Coef),
    /// Rate `ν(dz)` on (0, 1], jump `-x z`.
    Proportional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpTerm {
    pub kind: TermKind,
    pub measure: JumpMeasure,
}

impl JumpTerm {
    pub fn compensated(&self) -> bool {
        self.measure.role() == Role::Compensated
    }

    /// Jump of the state at pre-jump level `x` for an accepted mark `z`.
    pub fn jump(&self, x: f64, z: f64) -> f64 {
        match &self.kind {
            TermKind::Thinned(_) => z,
            TermKind::Scaled(phi) => phi.eval(x) * z,
            TermKind::Proportional => -x * z,
        }
    }

    /// Effective mark-dependent multiplicity: the integrand weight of the term
    /// in the generator, `h(x,z)` for thinned terms and 1 otherwise.
    pub fn weight(&self, x: f64, z: f64) -> f64 {
        match &self.kind {
            TermKind::Thinned(h) => h.eval(x, z),
            _ => 1.0,
        }
    }

    /// Lower mark bound below which the term has no effect.
    pub fn z_floor(&self) -> f64 {
        match &self.kind {
            TermKind::Thinned(h) => h.z_above,
            _ => 0.0,
        }
    }

    /// Stable parameters when the term can be driven by an exact stable increment:
    /// a compensated power-law measure whose effect is a state multiple of the noise.
    pub fn exact_stable(&self) -> Option<(f64, f64)> {
        if !self.compensated() {
            return None;
        }
        let (c, alpha) = self.measure.as_stable()?;
        match &self.kind {
            TermKind::Thinned(h) if h.z_above == 0.0 => Some((c, alpha)),
            TermKind::Scaled(_) => Some((c, alpha)),
            _ => None,
        }
    }

    /// Multiplier of a unit-intensity stable increment reproducing this term:
    /// `(c h(x))^{1/α}` for thinned terms, `c^{1/α} φ(x)` for scaled ones.
    pub fn stable_coefficient(&self, x: f64) -> f64 {
        let (c, alpha) = self.measure.as_stable().expect("stable term");
        match &self.kind {
            TermKind::Thinned(h) => (c * h.coef.eval(x).max(0.0)).powf(1.0 / alpha),
            TermKind::Scaled(phi) => c.powf(1.0 / alpha) * phi.eval(x),
            TermKind::Proportional => 0.0,
        }
    }
}

/// Compiled, validated model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub sigma: Coef,
    pub drift: Coef,
    /// Declared non-decreasing drift part b2 (b = b1 - b2).
    pub drift_split: Option<Coef>,
    pub terms: Vec<JumpTerm>,
    /// Whether the state-dependent jump coefficients are non-decreasing in x.
    pub monotone: bool,
}

/// States at which boundary and sign invariants are probed.
fn probe_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((0..=120).map(|i| 10f64.powf(-8.0 + 11.0 * i as f64 / 120.0)));
    g
}

fn measure(kind: &Option<MeasureKind>, role: Role) -> Result<Option<JumpMeasure>> {
    kind.as_ref().map(|k| JumpMeasure::new(k.clone(), role)).transpose()
}

impl Model {
    pub fn build(spec: &ModelSpec) -> Result<Model> {
        let mut terms = Vec::new();
        let mut push = |kind: TermKind, m: Option<JumpMeasure>| {
            if let Some(measure) = m {
                terms.push(JumpTerm { kind, measure });
            }
        };
        let (sigma, drift, drift_split) = match &spec.form {
            ModelForm::General { sigma, b, h0, h1, mu0, mu1, b2 } => {
                if mu0.is_some() != h0.is_some() || mu1.is_some() != h1.is_some() {
                    return Err(Error::InvalidModel("each jump measure needs its intensity (h0 with mu0, h1 with mu1)".into()));
                }
                if let Some(h) = h0 {
                    push(TermKind::Thinned(h.clone()), measure(mu0, Role::Compensated)?);
                }
                if let Some(h) = h1 {
                    push(TermKind::Thinned(h.clone()), measure(mu1, Role::NonCompensated)?);
                }
                (sigma.clone(), b.clone(), b2.clone())
            }
            ModelForm::Cbi { a, b, beta, nu0, nu1 } => {
                check_cbi_params(*a, *b)?;
                push(TermKind::Thinned(Intensity::new(Coef::linear(0.0, 1.0))), measure(nu0, Role::Compensated)?);
                push(TermKind::Thinned(Intensity::new(Coef::constant(1.0))), measure(nu1, Role::NonCompensated)?);
                (Coef::cbi_sigma(*a), Coef::linear(*b, *beta), None)
            }
            ModelForm::StableCbi { a, b, beta, c, alpha, nu1 } => {
                check_cbi_params(*a, *b)?;
                push_stable(&mut push, *c, *alpha)?;
                push(TermKind::Thinned(Intensity::new(Coef::constant(1.0))), measure(nu1, Role::NonCompensated)?);
                (Coef::cbi_sigma(*a), Coef::linear(*b, *beta), None)
            }
            ModelForm::Cbie { a, b, beta, c, alpha, nu1, emigration } => {
                check_cbi_params(*a, *b)?;
                push_stable(&mut push, *c, *alpha)?;
                push(TermKind::Thinned(Intensity::new(Coef::constant(1.0))), measure(nu1, Role::NonCompensated)?);
                push(TermKind::Proportional, Some(JumpMeasure::new(emigration.clone(), Role::NonCompensated)?));
                (Coef::cbi_sigma(*a), Coef::linear(*b, *beta), None)
            }
            ModelForm::Levy { sigma, b, phi0, phi1, mu0, mu1, nu0, nu1 } => {
                push(TermKind::Scaled(phi0.clone()), measure(mu0, Role::Compensated)?);
                push(TermKind::Scaled(phi1.clone()), measure(mu1, Role::NonCompensated)?);
                push(TermKind::Proportional, measure(nu0, Role::Compensated)?);
                push(TermKind::Proportional, measure(nu1, Role::NonCompensated)?);
                (sigma.clone(), b.clone(), None)
            }
        };
        let mut model = Model { spec: spec.clone(), sigma, drift, drift_split, terms, monotone: false };
        model.validate()?;
        model.monotone = match spec.monotone {
            Some(flag) => flag,
            None => model.intensities_monotone_on(&probe_grid()),
        };
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.sigma.eval(0.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("sigma(0) = {} must vanish", self.sigma.eval(0.0))));
        }
        if self.drift.eval(0.0) < 0.0 {
            return Err(Error::InvalidModel(format!("b(0) = {} must be non-negative", self.drift.eval(0.0))));
        }
        let grid = probe_grid();
        for term in &self.terms {
            term.measure.require_integrable()?;
            match &term.kind {
                TermKind::Thinned(h) => {
                    if term.compensated() && h.coef.eval(0.0).abs() > 1e-12 {
                        return Err(Error::InvalidModel("h0(0, z) must vanish".into()));
                    }
                    if grid.iter().any(|&x| h.coef.eval(x) < 0.0) {
                        return Err(Error::InvalidModel("jump intensities must be non-negative".into()));
                    }
                }
                TermKind::Scaled(phi) => {
                    if term.compensated() && phi.eval(0.0).abs() > 1e-12 {
                        return Err(Error::InvalidModel("phi0(0) must vanish".into()));
                    }
                    if grid.iter().any(|&x| phi.eval(x) < 0.0) {
                        return Err(Error::InvalidModel("phi0, phi1 must be non-negative".into()));
                    }
                }
                TermKind::Proportional => match term.measure.support_max() {
                    Some(top) if top <= 1.0 => {}
                    _ => {
                        return Err(Error::InvalidModel(
                            "proportional (emigration) measures must live on (0, 1]".into(),
                        ))
                    }
                },
            }
        }
        Ok(())
    }

    /// Whether every state-dependent jump coefficient is non-decreasing on `grid`.
    pub fn intensities_monotone_on(&self, grid: &[f64]) -> bool {
        self.terms.iter().all(|t| {
            let c = match &t.kind {
                TermKind::Thinned(h) => &h.coef,
                TermKind::Scaled(phi) => phi,
                TermKind::Proportional => return true,
            };
            grid.windows(2).all(|w| c.eval(w[0]) <= c.eval(w[1]) + 1e-12)
        })
    }

    /// Drift term b(x).
    pub fn b(&self, x: f64) -> f64 {
        self.drift.eval(x)
    }

    pub fn sigma(&self, x: f64) -> f64 {
        self.sigma.eval(x)
    }

    pub fn compensated_terms(&self) -> impl Iterator<Item = &JumpTerm> {
        self.terms.iter().filter(|t| t.compensated())
    }

    pub fn non_compensated_terms(&self) -> impl Iterator<Item = &JumpTerm> {
        self.terms.iter().filter(|t| !t.compensated())
    }
}

fn check_cbi_params(a: f64, b: f64) -> Result<()> {
    if a < 0.0 || b < 0.0 {
        return Err(Error::InvalidModel(format!("CBI needs a >= 0 and b >= 0 (got a = {a}, b = {b})")));
    }
    Ok(())
}

fn push_stable(push: &mut impl FnMut(TermKind, Option<JumpMeasure>), c: f64, alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Divergent(format!(
            "model.alpha = {alpha}: ∫ (z∧z²) c z^(-1-α) dz is finite only for α in (1, 2)"
        )));
    }
    if c < 0.0 {
        return Err(Error::InvalidModel(format!("stable intensity c = {c} must be non-negative")));
    }
    if c > 0.0 {
        push(
            TermKind::Thinned(Intensity::new(Coef::linear(0.0, 1.0))),
            Some(JumpMeasure::stable(c, alpha, Role::Compensated)?),
        );
    }
    Ok(())
}
