//! Statistical audits of simulated ensembles: moment bounds, martingale
//! residuals, comparison and continuous dependence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::generator::{GeneratorTable, TestFunction};
use crate::engine::{
    map_ids, simulate_coupled_with, simulate_family, CoupledPaths, MomentSummary, Recording, Scheme, SimPath,
    SimulationConfig,
};
use crate::error::Result;
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    MomentBound1,
    MomentBound2,
    MartingaleResidual,
    Comparison,
    ContinuousDependence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub kind: DiagnosticKind,
    pub statistic: f64,
    /// statistic ± 3 SE
    pub band: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub verdict: Outcome,
    pub metadata: BTreeMap<String, String>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.verdict == Outcome::Pass
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }
}

/// (1 + x0) e^{Kt}
pub fn first_moment_bound(x0: f64, k: f64, t: f64) -> f64 {
    (1.0 + x0) * (k * t).exp()
}

/// 6 x0² + 24Kt + 6K²t²
pub fn second_moment_bound(x0: f64, k: f64, t: f64) -> f64 {
    6.0 * x0 * x0 + 24.0 * k * t + 6.0 * k * k * t * t
}

/// Bound checks at each t: mean(1+x(t)) ≤ (1+x0)e^{Kt} + 3SE and
/// mean(x(t)²) ≤ 6x0² + 24Kt + 6K²t² + 3SE. `values[i]` holds x(t_grid[i])
/// across paths.
pub fn audit_moment_bounds(values: &[Vec<f64>], x0: f64, k: f64, t_grid: &[f64]) -> Vec<DiagnosticsReport> {
    let mut out = Vec::new();
    for (t, xs) in t_grid.iter().zip(values) {
        let s = MomentSummary::from_values(xs);
        let b1 = first_moment_bound(x0, k, *t);
        let m1 = 1.0 + s.mean;
        out.push(
            DiagnosticsReport {
                kind: DiagnosticKind::MomentBound1,
                statistic: m1,
                band: (m1 - 3.0 * s.se_mean, m1 + 3.0 * s.se_mean),
                bound: Some(b1),
                verdict: Outcome::from(m1 <= b1 + 3.0 * s.se_mean),
                metadata: BTreeMap::new(),
            }
            .with("t", t)
            .with("K", k),
        );
        let b2 = second_moment_bound(x0, k, *t);
        out.push(
            DiagnosticsReport {
                kind: DiagnosticKind::MomentBound2,
                statistic: s.second,
                band: (s.second - 3.0 * s.se_second, s.second + 3.0 * s.se_second),
                bound: Some(b2),
                verdict: Outcome::from(s.second <= b2 + 3.0 * s.se_second),
                metadata: BTreeMap::new(),
            }
            .with("t", t)
            .with("K", k),
        );
    }
    out
}

/// f(x(t)) − f(x(0)) − ∫₀ᵗ Lf(x(s)) ds along one fully recorded path, with the
/// trapezoid rule on the recorded grid (left limits at the right endpoints).
pub fn path_residual(path: &SimPath, f: &TestFunction, lf: &GeneratorTable, t: f64) -> Result<f64> {
    let mut integral = 0.0;
    let mut prev = lf.eval(path.states[0])?;
    let mut end_state = path.states[0];
    for i in 1..path.times.len() {
        if path.times[i] > t {
            break;
        }
        let h = path.times[i] - path.times[i - 1];
        let right = lf.eval(path.left[i])?;
        integral += 0.5 * h * (prev + right);
        prev = lf.eval(path.states[i])?;
        end_state = path.states[i];
    }
    Ok(f.f(end_state) - f.f(path.states[0]) - integral)
}

/// Mean martingale residual over the ensemble; Pass iff |mean| ≤ 3SE + budget.
pub fn martingale_residual(residuals: &[f64], budget: f64) -> DiagnosticsReport {
    let s = MomentSummary::from_values(residuals);
    DiagnosticsReport {
        kind: DiagnosticKind::MartingaleResidual,
        statistic: s.mean,
        band: (s.mean - 3.0 * s.se_mean, s.mean + 3.0 * s.se_mean),
        bound: Some(3.0 * s.se_mean + budget),
        verdict: Outcome::from(s.mean.abs() <= 3.0 * s.se_mean + budget),
        metadata: BTreeMap::new(),
    }
    .with("paths", s.n)
    .with("budget", budget)
}

/// Simulate the configured ensemble and compute the residual of `f` at the horizon.
pub fn martingale_residual_run(scheme: &Scheme, f: &TestFunction, x0: f64, budget: f64, threads: usize) -> Result<DiagnosticsReport> {
    let model = scheme.model();
    let t = scheme.config().horizon;
    let x_max = (scheme.config().m_cap).max(10.0 * (1.0 + x0));
    let lf = GeneratorTable::new(model, f, x_max, 4000)?;
    let residuals = map_ids(scheme.config().paths, threads, |id| {
        let p = crate::engine::simulate_path_with(scheme, x0, id, &Recording::Full)?;
        path_residual(&p, f, &lf, t)
    })?;
    Ok(martingale_residual(&residuals, budget).with("t", t))
}

/// Whether the discrete order-preservation argument applies: monotone jump
/// coefficients, jumps realized by thinning, and a non-decreasing drift map
/// x ↦ x + b̃(x)dt on [0, m]. Exact stable increments (cx)^{1/α}ΔZ are not
/// monotone in x when ΔZ < 0, so they rule the condition out.
pub fn discrete_order_condition(scheme: &Scheme) -> bool {
    let model = scheme.model();
    let dt = scheme.config().dt;
    let m = scheme.config().m_cap;
    if !model.monotone || scheme.uses_exact_stable() {
        return false;
    }
    let xs: Vec<f64> = (0..=2000).map(|i| m * (i as f64 / 2000.0).powi(2)).collect();
    xs.windows(2).all(|w| w[0] + scheme.effective_drift(w[0]) * dt <= w[1] + scheme.effective_drift(w[1]) * dt + 1e-12)
}

/// Ordering statistics of one coupled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PairTally {
    pub checked: usize,
    pub violations: usize,
    pub step_flips: u64,
}

impl From<&CoupledPaths> for PairTally {
    fn from(p: &CoupledPaths) -> Self {
        PairTally { checked: p.low.states.len(), violations: p.violations(1e-12), step_flips: p.step_flips }
    }
}

/// Count recorded times with low > high + 1e-12 across coupled pairs.
pub fn comparison_audit(pairs: &[PairTally], strict: bool) -> DiagnosticsReport {
    let checks: usize = pairs.iter().map(|p| p.checked).sum();
    let violations: usize = pairs.iter().map(|p| p.violations).sum();
    let flips: u64 = pairs.iter().map(|p| p.step_flips).sum();
    let frac = if checks == 0 { 0.0 } else { violations as f64 / checks as f64 };
    let ok = if strict { violations == 0 } else { frac < 1e-3 };
    DiagnosticsReport {
        kind: DiagnosticKind::Comparison,
        statistic: frac,
        band: (frac, frac),
        bound: Some(if strict { 0.0 } else { 1e-3 }),
        verdict: Outcome::from(ok),
        metadata: BTreeMap::new(),
    }
    .with("violations", violations)
    .with("checked_times", checks)
    .with("pairs", pairs.len())
    .with("step_flips", flips)
    .with("discrete_condition", strict)
}

/// Simulate the configured number of coupled pairs from (low, high) and audit
/// their ordering on the full recorded grid. Stable noise is realized by
/// thinned big jumps plus the compensator drift, which couples monotonically.
pub fn comparison_run(scheme: &Scheme, x0_low: f64, x0_high: f64, threads: usize) -> Result<DiagnosticsReport> {
    let thinned;
    let scheme = if scheme.uses_exact_stable() {
        let cfg = SimulationConfig { exact_stable: false, ..scheme.config().clone() };
        thinned = Scheme::new(scheme.model(), &cfg)?;
        &thinned
    } else {
        scheme
    };
    let tallies = map_ids(scheme.config().paths, threads, |id| {
        simulate_coupled_with(scheme, x0_low, x0_high, id, &Recording::Full).map(|p| PairTally::from(&p))
    })?;
    Ok(comparison_audit(&tallies, discrete_order_condition(scheme)).with("x0_low", x0_low).with("x0_high", x0_high))
}

/// One point of a continuous-dependence curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DependencePoint {
    pub gap: f64,
    pub mean_abs_diff: f64,
    pub se: f64,
}

/// E|x(t; x0* + gap) − x(t; x0*)| for each gap, all starting points driven by
/// the same noise. Gaps are reported in the given order.
pub fn dependence_curve(scheme: &Scheme, x0_star: f64, gaps: &[f64], t: f64, threads: usize) -> Result<Vec<DependencePoint>> {
    let mut starts = vec![x0_star];
    starts.extend(gaps.iter().map(|g| x0_star + g));
    let rec = Recording::Times(vec![t]);
    let diffs = map_ids(scheme.config().paths, threads, |id| {
        let (paths, _) = simulate_family(scheme, &starts, id, &rec)?;
        let base = paths[0].state_at(t);
        Ok(paths[1..].iter().map(|p| (p.state_at(t) - base).abs()).collect::<Vec<f64>>())
    })?;
    Ok(gaps
        .iter()
        .enumerate()
        .map(|(i, &gap)| {
            let col: Vec<f64> = diffs.iter().map(|d| d[i]).collect();
            let s = MomentSummary::from_values(&col);
            DependencePoint { gap, mean_abs_diff: s.mean, se: s.se_mean }
        })
        .collect())
}

/// Pass iff the curve is non-increasing (within 3 SE) as the gap shrinks.
pub fn dependence_audit(curve: &[DependencePoint]) -> DiagnosticsReport {
    let mut sorted = curve.to_vec();
    sorted.sort_by(|a, b| b.gap.total_cmp(&a.gap));
    let monotone = sorted.windows(2).all(|w| w[1].mean_abs_diff <= w[0].mean_abs_diff + 3.0 * (w[0].se + w[1].se));
    let last = sorted.last().copied().unwrap_or(DependencePoint { gap: 0.0, mean_abs_diff: 0.0, se: 0.0 });
    DiagnosticsReport {
        kind: DiagnosticKind::ContinuousDependence,
        statistic: last.mean_abs_diff,
        band: (last.mean_abs_diff - 3.0 * last.se, last.mean_abs_diff + 3.0 * last.se),
        bound: None,
        verdict: Outcome::from(monotone),
        metadata: BTreeMap::new(),
    }
    .with("smallest_gap", last.gap)
    .with("points", sorted.len())
}

/// Linear-drift oracle for the coupled CIR difference: |Δx0| e^{βt}.
pub fn linear_dependence_oracle(gap: f64, beta: f64, t: f64) -> f64 {
    gap * (beta * t).exp()
}

/// Whether paths of the model can be compared at all (requires monotone flags).
pub fn comparable(model: &Model) -> bool {
    model.monotone
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::simulate_path_with;
    use crate::model::ModelSpec;

    #[test]
    fn bound_formulas() {
        assert!((first_moment_bound(1.0, 1.0, 1.0) - 2.0 * std::f64::consts::E).abs() < 1e-12);
        assert_eq!(second_moment_bound(0.0, 1.0, 1.0), 30.0);
    }

    #[test]
    fn constant_paths_have_zero_residual() {
        let m = ModelSpec::cbi(0.0, 0.0, 0.0, None, None).build().unwrap();
        let cfg = SimulationConfig { dt: 0.01, paths: 4, ..Default::default() };
        let s = Scheme::new(&m, &cfg).unwrap();
        let f = TestFunction::exp_decay(1.0);
        let r = martingale_residual_run(&s, &f, 1.0, 0.0, 1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn pure_drift_residual_shrinks_linearly() {
        // Euler path of x' = 1 - x with trapezoid quadrature of Lf = f′(1-x):
        // the per-step defect is -h²f′b′b/2, so the residual is O(dt).
        let m = ModelSpec::cbi(0.0, 1.0, -1.0, None, None).build().unwrap();
        let f = TestFunction::Square;
        let res = |dt: f64| {
            let s = Scheme::new(&m, &SimulationConfig { dt, paths: 1, ..Default::default() }).unwrap();
            let lf = GeneratorTable::new(&m, &f, 10.0, 20_000).unwrap();
            let p = simulate_path_with(&s, 3.0, 0, &Recording::Full).unwrap();
            path_residual(&p, &f, &lf, 1.0).unwrap()
        };
        let (r1, r2) = (res(0.02), res(0.01));
        let ratio = r1 / r2;
        assert!((ratio - 2.0).abs() < 0.1, "{r1} {r2} {ratio}");
    }

    #[test]
    fn identical_starts_never_violate() {
        let m = ModelSpec::cir(1.0, 1.0, 0.0).build().unwrap();
        let s = Scheme::new(&m, &SimulationConfig { paths: 5, ..Default::default() }).unwrap();
        let pairs: Vec<_> = (0..5).map(|id| simulate_coupled_with(&s, 1.0, 1.0, id, &Recording::Full).unwrap()).collect();
        let tallies: Vec<PairTally> = pairs.iter().map(PairTally::from).collect();
        let r = comparison_audit(&tallies, discrete_order_condition(&s));
        assert!(r.passed());
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn zero_gap_gives_zero_dependence() {
        let m = ModelSpec::cir(1.0, 1.0, -1.0).build().unwrap();
        let s = Scheme::new(&m, &SimulationConfig { paths: 20, ..Default::default() }).unwrap();
        let c = dependence_curve(&s, 1.0, &[0.0], 1.0, 1).unwrap();
        assert_eq!(c[0].mean_abs_diff, 0.0);
    }

    #[test]
    fn moment_audit_verdicts() {
        let vals = vec![vec![1.0; 10]];
        let r = audit_moment_bounds(&vals, 1.0, 0.0, &[1.0]);
        assert!(r.iter().all(|d| d.passed()));
        let r = audit_moment_bounds(&[vec![5.0; 10]], 1.0, 0.0, &[1.0]);
        assert!(!r[0].passed());
    }
}
