//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::time::Instant;

use nnjump::analysis::audits::{audit_moment_bounds, comparison_run, dependence_curve, martingale_residual_run, second_moment_bound};
use nnjump::analysis::{gadget_bounds_check, DiagnosticKind, Gadget, GadgetVariant, PowerModulus, TestFunction};
use nnjump::cli::{self, Scenario};
use nnjump::conditions::{check, check_linear_growth, check_monotone, CheckGrid, ConditionId, Verdict};
use nnjump::engine::{map_paths, MomentSummary, Recording, Scheme, SimulationConfig};
use nnjump::measures::{JumpLaw, MeasureKind};
use nnjump::model::{Coef, Intensity, Model, ModelForm, ModelSpec};
use nnjump::samplers::{Channel, RandomStream, StableLaw};
use nnjump::Error;
use statrs::function::gamma::gamma;

type Outcome = Result<(bool, String), String>;

fn stable(c: f64, alpha: f64) -> Option<MeasureKind> {
    Some(MeasureKind::StablePowerLaw { c, alpha })
}

fn cpp(rate: f64, law: JumpLaw) -> Option<MeasureKind> {
    Some(MeasureKind::CompoundPoisson { rate, law })
}

/// The CBI example: a = 1, b = 1, β, ν₀ stable(c = 1, α = 1.5), ν₁ = δ₂ at rate 1.
fn cbi_example(beta: f64) -> Model {
    ModelSpec::cbi(1.0, 1.0, beta, stable(1.0, 1.5), cpp(1.0, JumpLaw::Point { at: 2.0 })).build().unwrap()
}

fn cfg(paths: usize, dt: f64, seed: u64) -> SimulationConfig {
    SimulationConfig { paths, dt, seed, horizon: 1.0, ..Default::default() }
}

fn err(e: Error) -> String {
    e.to_string()
}

/// States x(t) for each t, across paths.
fn observe(scheme: &Scheme, x0: f64, ts: &[f64]) -> Result<Vec<Vec<f64>>, String> {
    let rows = map_paths(scheme, x0, &Recording::Times(ts.to_vec()), 0, |_, p| {
        ts.iter().map(|&t| p.state_at(t)).collect::<Vec<f64>>()
    })
    .map_err(err)?;
    Ok((0..ts.len()).map(|i| rows.iter().map(|r| r[i]).collect()).collect())
}

fn nonnegativity() -> Outcome {
    let levy = ModelSpec::from(ModelForm::Levy {
        sigma: Coef::power(1.0, 0.5),
        b: Coef::linear(1.0, -1.0),
        phi0: Coef::power(1.0, 0.5),
        phi1: Coef::constant(0.5),
        mu0: cpp(1.0, JumpLaw::Exponential { mean: 1.0 }),
        mu1: cpp(1.0, JumpLaw::Exponential { mean: 1.0 }),
        nu0: cpp(0.5, JumpLaw::Uniform { lo: 0.0, hi: 1.0 }),
        nu1: cpp(0.5, JumpLaw::Point { at: 0.5 }),
    });
    let presets = [
        ("cbi", ModelSpec::cbi(1.0, 1.0, -1.0, stable(1.0, 1.5), cpp(1.0, JumpLaw::Point { at: 2.0 }))),
        ("stable_cbi", ModelSpec::stable_cbi(0.5, 1.0, -1.0, 1.0, 1.5, cpp(1.0, JumpLaw::Point { at: 2.0 }))),
        ("levy", levy),
        (
            "cbie",
            ModelSpec::cbie(
                1.0,
                1.0,
                -1.0,
                1.0,
                1.5,
                cpp(1.0, JumpLaw::Point { at: 2.0 }),
                MeasureKind::CompoundPoisson { rate: 1.0, law: JumpLaw::Uniform { lo: 0.0, hi: 1.0 } },
            ),
        ),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, spec) in presets {
        let model = spec.build().map_err(err)?;
        let scheme = Scheme::new(&model, &cfg(10_000, 1e-3, 11)).map_err(err)?;
        let mins = map_paths(&scheme, 1.0, &Recording::Full, 0, |_, p| {
            let (n, bad) = (p.states.len() + p.left.len(), p.states.iter().chain(&p.left).filter(|&&x| !(x >= 0.0)).count());
            (n, bad, p.states.iter().copied().fold(f64::INFINITY, f64::min))
        })
        .map_err(err)?;
        let stored: usize = mins.iter().map(|m| m.0).sum();
        let negative: usize = mins.iter().map(|m| m.1).sum();
        let lowest = mins.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
        ok &= negative == 0;
        detail.push(format!("{name}: {negative}/{stored} negative, min {lowest:.3e}"));
    }
    Ok((ok, detail.join("; ")))
}

fn first_moment_bound() -> Outcome {
    let model = cbi_example(-1.0);
    let grid = CheckGrid::default_for(100.0);
    let k = check_linear_growth(&model, &grid.states, ConditionId::LinearGrowth).map_err(err)?.constant("K").unwrap();
    let ts = [0.25, 0.5, 1.0];
    let scheme = Scheme::new(&model, &cfg(100_000, 1e-3, 2)).map_err(err)?;
    let values = observe(&scheme, 1.0, &ts)?;
    let reports = audit_moment_bounds(&values, 1.0, k, &ts);
    let first: Vec<_> = reports.iter().filter(|r| r.kind == DiagnosticKind::MomentBound1).collect();
    let ok = first.iter().all(|r| r.passed());
    let detail: Vec<String> = first
        .iter()
        .zip(ts)
        .map(|(r, t)| format!("t={t}: {:.4} ≤ {:.4} (+3SE {:.4})", r.statistic, r.bound.unwrap(), r.band.1 - r.statistic))
        .collect();
    Ok((ok, format!("K={k}; {}", detail.join("; "))))
}

fn cir_mean() -> Outcome {
    let model = ModelSpec::cir(1.0, 1.0, -1.0).build().map_err(err)?;
    let scheme = Scheme::new(&model, &cfg(100_000, 1e-3, 3)).map_err(err)?;
    let s = MomentSummary::from_values(&observe(&scheme, 1.0, &[1.0])?[0]);
    // Moment ODE m' = 1 - m with m(0) = 1 gives m ≡ 1.
    let mean_ok = (s.mean - 1.0).abs() <= 3.0 * s.se_mean + 0.01;

    // Richardson: three step sizes driven by the same Brownian draws at the
    // finest resolution; bias(h) is estimated by the paired mean of X_h − X_{h/2}.
    let h = 2e-3;
    let n = 20_000;
    let level = |dt: f64, substeps: u32| -> Result<Vec<f64>, String> {
        let c = SimulationConfig { brownian_substeps: substeps, ..cfg(n, dt, 33) };
        let scheme = Scheme::new(&model, &c).map_err(err)?;
        Ok(observe(&scheme, 1.0, &[1.0])?.remove(0))
    };
    let (x1, x2, x4) = (level(h, 4)?, level(h / 2.0, 2)?, level(h / 4.0, 1)?);
    let paired = |a: &[f64], b: &[f64]| MomentSummary::from_values(&a.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>());
    let (d1, d2) = (paired(&x1, &x2), paired(&x2, &x4));
    let richardson_ok = d2.mean.abs() <= d1.mean.abs() / 2.0 + 3.0 * d2.se_mean;
    Ok((
        mean_ok && richardson_ok,
        format!(
            "mean {:.5} (3SE {:.5}); bias est {:.2e} → {:.2e} (3SE {:.2e})",
            s.mean,
            3.0 * s.se_mean,
            d1.mean.abs(),
            d2.mean.abs(),
            3.0 * d2.se_mean
        ),
    ))
}

/// ∫₀^∞ (e^{-z} − 1 + z) z^{-2.5} dz by composite Simpson in u = ln z, with the
/// small- and large-z ends integrated from their asymptotic forms.
fn laplace_oracle() -> f64 {
    let f = |u: f64| {
        let z = u.exp();
        let core = if z < 1e-4 { z * z / 2.0 - z * z * z / 6.0 } else { (-z).exp_m1() + z };
        core * z.powf(-1.5)
    };
    let (a, b, n) = (-40.0f64, 40.0f64, 200_000);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let body = s * h / 3.0;
    // Below e^{-40}: ∫ z^{-1/2}/2 dz; above e^{40}: ∫ (z - 1) z^{-2.5} dz.
    let lo = a.exp().sqrt();
    let hi = 2.0 * b.exp().powf(-0.5) - (2.0 / 3.0) * b.exp().powf(-1.5);
    body + lo + hi
}

fn laplace_exponent() -> Outcome {
    let oracle = laplace_oracle();
    let law = StableLaw::new(1.5, 1.0).map_err(err)?;
    let mut stream = RandomStream::new(4, 0, Channel::Stable);
    let draws: Vec<f64> = (0..1_000_000).map(|_| (-law.sample(&mut stream, 1.0)).exp()).collect();
    let s = MomentSummary::from_values(&draws);
    // log E e^{-X} = +∫(e^{-z}−1+z)ν(dz) for the compensated one-sided law.
    let est = s.mean.ln();
    let se = s.se_mean / s.mean;
    let closed = gamma(0.5) / 0.75;
    Ok((
        (est - oracle).abs() <= 3.0 * se,
        format!("log mean e^(-X) = {est:.5} vs {oracle:.5} (closed form {closed:.5}), 3SE {:.5}", 3.0 * se),
    ))
}

fn bounded_model() -> Model {
    ModelSpec::from(ModelForm::General {
        sigma: Coef::Tanh { scale: 0.5, rate: 1.0 },
        b: Coef::constant(0.5),
        h0: Some(Intensity::new(Coef::Saturating { coef: 1.0, cap: 1.0 })),
        h1: Some(Intensity::new(Coef::constant(1.0))),
        mu0: cpp(1.0, JumpLaw::Point { at: 1.0 }),
        mu1: cpp(1.0, JumpLaw::Exponential { mean: 1.0 }),
        b2: None,
    })
    .build()
    .unwrap()
}

fn second_moment() -> Outcome {
    let model = bounded_model();
    let r = check(&model, ConditionId::Bounded, &CheckGrid::default_for(100.0)).map_err(err)?;
    if r.verdict != Verdict::Pass {
        return Ok((false, format!("bounded-coefficient check: {:?}", r.verdict)));
    }
    let k = r.constant("K").unwrap();
    let scheme = Scheme::new(&model, &cfg(100_000, 1e-3, 5)).map_err(err)?;
    let s = MomentSummary::from_values(&observe(&scheme, 1.0, &[1.0])?[0]);
    let bound = second_moment_bound(1.0, k, 1.0);
    Ok((
        s.second <= bound + 3.0 * s.se_second,
        format!("K={k:.4}; E[x(1)²] = {:.4} ≤ {bound:.4} (3SE {:.4})", s.second, 3.0 * s.se_second),
    ))
}

fn comparison() -> Outcome {
    let model = cbi_example(0.0);
    let scheme = Scheme::new(&model, &cfg(10_000, 1e-3, 6)).map_err(err)?;
    let r = comparison_run(&scheme, 1.0, 2.0, 0).map_err(err)?;
    let v: usize = r.metadata["violations"].parse().unwrap();
    Ok((
        v == 0,
        format!(
            "{v} violations over {} grid times, {} pairs, {} step flips",
            r.metadata["checked_times"], r.metadata["pairs"], r.metadata["step_flips"]
        ),
    ))
}

fn dependence() -> Outcome {
    let model = ModelSpec::cir(1.0, 1.0, -1.0).build().map_err(err)?;
    let dt = 1e-3;
    let scheme = Scheme::new(&model, &cfg(10_000, dt, 7)).map_err(err)?;
    let gaps = [1.0, 0.5, 0.25, 0.125];
    let curve = dependence_curve(&scheme, 1.0, &gaps, 1.0, 0).map_err(err)?;
    let monotone = curve.windows(2).all(|w| w[1].mean_abs_diff < w[0].mean_abs_diff);
    // Ordered coupled Euler differences satisfy E Δ_{n+1} = (1 − dt) E Δ_n.
    let factor = (1.0 - dt).powi((1.0 / dt).round() as i32);
    let mut ok = monotone;
    let mut detail = Vec::new();
    for p in &curve {
        let oracle = p.gap * factor;
        ok &= (p.mean_abs_diff - oracle).abs() <= 3.0 * p.se;
        detail.push(format!("{}: {:.5} vs {:.5} (3SE {:.5})", p.gap, p.mean_abs_diff, oracle, 3.0 * p.se));
    }
    Ok((ok, format!("monotone={monotone}; {}", detail.join("; "))))
}

fn martingale() -> Outcome {
    let model = cbi_example(-1.0);
    let scheme = Scheme::new(&model, &cfg(100_000, 1e-3, 8)).map_err(err)?;
    let r = martingale_residual_run(&scheme, &TestFunction::exp_decay(1.0), 1.0, 0.01, 0).map_err(err)?;
    Ok((r.passed(), format!("mean residual {:.5}, bound 3SE+0.01 = {:.5}", r.statistic, r.bound.unwrap())))
}

fn gadget() -> Outcome {
    let g = Gadget::build(PowerModulus::new(1.0, 0.5), 10, GadgetVariant::Symmetric).map_err(err)?;
    let mut ok = true;
    let mut worst_a: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    let mut violations = 0;
    let mut stream = RandomStream::new(9, 0, Channel::Thinning);
    for k in 1..=10usize {
        let exact = (-((k * (k + 1)) as f64) / 2.0).exp();
        let rel = (g.a[k] - exact).abs() / exact;
        worst_a = worst_a.max(rel);
        let p = g.partition_integral(k).map_err(err)?;
        worst_p = worst_p.max((p - k as f64).abs());
        let (lo, hi) = g.support(k);
        let (l, h) = ((lo / 4.0).ln(), (4.0 * hi).ln());
        let samples: Vec<(f64, f64)> = (0..1000)
            .map(|i| {
                let zeta = (l + (h - l) * stream.uniform()).exp();
                let step = (l + (h - l) * stream.uniform()).exp();
                if i % 2 == 0 {
                    (zeta, step)
                } else {
                    (-zeta, -step)
                }
            })
            .collect();
        let c = gadget_bounds_check(&g, k, &samples).map_err(err)?;
        violations += c.envelope_violations + c.taylor_violations + c.increment_violations;
    }
    ok &= worst_a <= 1e-10 && worst_p <= 1e-6 && violations == 0;
    Ok((ok, format!("max rel a_k error {worst_a:.1e}, max |∫ρ⁻² − k| {worst_p:.1e}, {violations} bound violations")))
}

fn condition_checker() -> Outcome {
    let grid = CheckGrid::default_for(10.0);
    let sqrt = ModelSpec::cir(1.0, 1.0, 0.0).build().map_err(err)?;
    let r = check(&sqrt, ConditionId::SquaredModulus, &grid).map_err(err)?;
    let gamma = r.modulus_fit.map(|f| f.gamma).unwrap_or(f64::NAN);
    let sqrt_ok = r.verdict == Verdict::Pass && (0.98..=1.02).contains(&gamma);

    let general = |sigma: Coef, h0: Option<Intensity>, mu0: Option<MeasureKind>| {
        ModelSpec::from(ModelForm::General { sigma, b: Coef::Zero, h0, h1: None, mu0, mu1: None, b2: None }).build()
    };
    let fifth = general(Coef::power(1.0, 0.2), None, None).map_err(err)?;
    let fifth_ok = check(&fifth, ConditionId::SquaredModulus, &grid).map_err(err)?.verdict == Verdict::Fail;

    let linear_h = general(
        Coef::Zero,
        Some(Intensity::new(Coef::linear(0.0, 1.0))),
        cpp(1.0, JumpLaw::Exponential { mean: 1.0 }),
    )
    .map_err(err)?;
    let mono_ok = check_monotone(&linear_h, &grid.states, &grid.marks).verdict == Verdict::Pass;

    let alpha2 = ModelSpec::cbi(1.0, 1.0, -1.0, stable(1.0, 2.0), None).build();
    let alpha_ok = matches!(alpha2, Err(Error::Divergent(_)));
    Ok((
        sqrt_ok && fifth_ok && mono_ok && alpha_ok,
        format!("√(2x): γ={gamma:.4}; x^0.2 fails={fifth_ok}; h₀=x monotone={mono_ok}; α=2 rejected={alpha_ok}"),
    ))
}

fn replay() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scenarios = [
        ("cir", Scenario::from_toml(include_str!("../scenarios/cir.toml")).map_err(err)?),
        ("cbi", Scenario::from_toml(include_str!("../scenarios/cbi.toml")).map_err(err)?),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, mut sc) in scenarios {
        sc.outputs.paths_csv = None;
        sc.outputs.svg = None;
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, sc.to_toml().map_err(err)?).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for threads in ["1", "3"] {
            let out = dir.path().join(format!("{name}-{threads}"));
            let code = cli::run([
                "nnjump",
                "simulate",
                "--scenario",
                path.to_str().unwrap(),
                "--seed",
                "2024",
                "--paths",
                "2000",
                "--threads",
                threads,
                "--out",
                out.to_str().unwrap(),
            ]);
            if code != 0 {
                return Ok((false, format!("{name}: simulate exited with {code}")));
            }
            outputs.push(std::fs::read(out.join(&sc.outputs.summary)).map_err(|e| e.to_string())?);
        }
        let same = outputs[0] == outputs[1];
        ok &= same;
        detail.push(format!("{name}: identical={same}"));
    }
    Ok((ok, detail.join("; ")))
}

fn main() {
    // The CLI checks below run in-process; keep their stdout records out of the report.
    std::env::remove_var("NNJUMP_OUT");
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("non-negativity of all presets", nonnegativity),
        ("first-moment bound on the CBI example", first_moment_bound),
        ("CIR mean and Richardson bias check", cir_mean),
        ("stable Laplace exponent", laplace_exponent),
        ("second-moment bound on a bounded model", second_moment),
        ("comparison of coupled CBI paths", comparison),
        ("continuous dependence on the initial state", dependence),
        ("martingale residual of e^(-x)", martingale),
        ("smoothing gadget", gadget),
        ("condition checker", condition_checker),
        ("replay across thread counts", replay),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name} [{:.1}s]: {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
