use nnjump::engine::{
    map_paths, simulate_coupled, simulate_path, simulate_patched_with, map_ids, ExitFlag, MomentSummary, Recording,
    Scheme, SimulationConfig,
};
use nnjump::{JumpLaw, MeasureKind, ModelSpec};
use proptest::prelude::*;

fn final_states(spec: &ModelSpec, cfg: &SimulationConfig, x0: f64) -> MomentSummary {
    let scheme = Scheme::new(&spec.build().unwrap(), cfg).unwrap();
    let xs = map_paths(&scheme, x0, &Recording::Times(vec![cfg.horizon]), 0, |_, p| p.final_state()).unwrap();
    MomentSummary::from_values(&xs)
}

fn immigration(rate: f64, law: JumpLaw) -> Option<MeasureKind> {
    Some(MeasureKind::CompoundPoisson { rate, law })
}

#[test]
fn pure_immigration_mean() {
    // No branching, no drift: E x(1) = rate · E z = 2 · 0.5.
    let spec = ModelSpec::cbi(0.0, 0.0, 0.0, None, immigration(2.0, JumpLaw::Exponential { mean: 0.5 }));
    let cfg = SimulationConfig { dt: 1e-2, paths: 20_000, seed: 3, ..Default::default() };
    let s = final_states(&spec, &cfg, 0.0);
    assert!((s.mean - 1.0).abs() < 3.0 * s.se_mean, "{s:?}");
}

#[test]
fn cir_mean_follows_moment_ode() {
    // m' = β m + b with m(0) = 2.
    let spec = ModelSpec::cir(0.5, 1.5, -2.0);
    let cfg = SimulationConfig { dt: 1e-3, paths: 5_000, seed: 4, ..Default::default() };
    let s = final_states(&spec, &cfg, 2.0);
    let exact = 2.0 * (-2.0f64).exp() + 1.5 * ((-2.0f64).exp() - 1.0) / -2.0;
    assert!((s.mean - exact).abs() < 3.0 * s.se_mean, "{} vs {exact}", s.mean);
}

#[test]
fn patched_and_plain_schemes_agree_in_law() {
    let spec = ModelSpec::cbi(1.0, 1.0, -1.0, None, immigration(1.0, JumpLaw::Point { at: 2.0 }));
    let cfg = SimulationConfig { dt: 1e-3, paths: 4_000, seed: 5, ..Default::default() };
    let plain = final_states(&spec, &cfg, 1.0);
    let scheme = Scheme::new(&spec.build().unwrap(), &cfg).unwrap();
    let rec = Recording::Times(vec![1.0]);
    let xs = map_ids(cfg.paths, 0, |id| simulate_patched_with(&scheme, 1.0, id, &rec).map(|p| p.final_state())).unwrap();
    let patched = MomentSummary::from_values(&xs);
    // m' = -m + 1 + 2 with m(0) = 1.
    let exact = 3.0 - 2.0 * (-1.0f64).exp();
    let se = (plain.se_mean.powi(2) + patched.se_mean.powi(2)).sqrt();
    assert!((plain.mean - patched.mean).abs() < 3.0 * se, "{} vs {}", plain.mean, patched.mean);
    assert!((patched.mean - exact).abs() < 3.0 * patched.se_mean, "{} vs {exact}", patched.mean);
}

#[test]
fn paths_replay_from_seed_and_id() {
    let spec = ModelSpec::stable_cbi(1.0, 0.5, -1.0, 1.0, 1.5, immigration(1.0, JumpLaw::Uniform { lo: 0.5, hi: 1.5 }));
    let model = spec.build().unwrap();
    let cfg = SimulationConfig { dt: 1e-3, seed: 11, ..Default::default() };
    let a = simulate_path(&model, &cfg, 1.0, 17).unwrap();
    let b = simulate_path(&model, &cfg, 1.0, 17).unwrap();
    let c = simulate_path(&model, &cfg, 1.0, 18).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.states, c.states);
}

#[test]
fn coupled_cir_pair_stays_ordered() {
    let model = ModelSpec::cir(1.0, 1.0, -1.0).build().unwrap();
    let cfg = SimulationConfig { dt: 1e-3, seed: 12, ..Default::default() };
    for id in 0..200 {
        let pair = simulate_coupled(&model, &cfg, 0.5, 0.6, id).unwrap();
        assert_eq!(pair.violations(0.0), 0, "path {id}");
    }
}

#[test]
fn stop_policy_reports_cap() {
    let spec = ModelSpec::cbi(0.0, 0.0, 0.0, None, immigration(50.0, JumpLaw::Point { at: 1.0 }));
    let cfg = SimulationConfig {
        m_cap: 5.0,
        cap_policy: nnjump::engine::CapPolicy::Stop,
        seed: 13,
        ..Default::default()
    };
    let p = simulate_path(&spec.build().unwrap(), &cfg, 0.0, 0).unwrap();
    assert!(matches!(p.exit_flag, ExitFlag::HitCap { .. }), "{:?}", p.exit_flag);
}

fn measure() -> impl Strategy<Value = Option<MeasureKind>> {
    prop_oneof![
        Just(None),
        (1.05f64..1.95, 0.1f64..2.0).prop_map(|(alpha, c)| Some(MeasureKind::StablePowerLaw { c, alpha })),
        (0.1f64..3.0, 0.1f64..2.0)
            .prop_map(|(rate, mean)| Some(MeasureKind::CompoundPoisson { rate, law: JumpLaw::Exponential { mean } })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cbi_paths_stay_nonnegative(
        a in 0.0f64..3.0,
        b in 0.0f64..2.0,
        beta in -3.0f64..1.0,
        nu0 in measure(),
        x0 in 0.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let spec = ModelSpec::cbi(a, b, beta, nu0, None);
        let model = spec.build().unwrap();
        let cfg = SimulationConfig { dt: 1e-2, seed, ..Default::default() };
        for id in 0..5 {
            let p = simulate_path(&model, &cfg, x0, id).unwrap();
            prop_assert!(p.states.iter().chain(&p.left).all(|&x| x >= 0.0 && x.is_finite()));
        }
    }
}
