use nnjump::analysis::{apply_generator, Gadget, GadgetVariant, PowerModulus, TestFunction};
use nnjump::{JumpLaw, MeasureKind, Model, ModelSpec};
use proptest::prelude::*;

fn model() -> impl Strategy<Value = Model> {
    (0.0f64..2.0, 0.0f64..2.0, -2.0f64..1.0, 1.1f64..1.9, 0.1f64..3.0).prop_map(|(a, b, beta, alpha, rate)| {
        ModelSpec::cbi(
            a,
            b,
            beta,
            Some(MeasureKind::StablePowerLaw { c: 1.0, alpha }),
            Some(MeasureKind::CompoundPoisson { rate, law: JumpLaw::Exponential { mean: 0.5 } }),
        )
        .build()
        .unwrap()
    })
}

fn function() -> impl Strategy<Value = TestFunction> {
    prop_oneof![Just(TestFunction::Linear), (0.1f64..3.0).prop_map(TestFunction::exp_decay)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_is_linear(
        m in model(),
        f in function(),
        g in function(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        x in 0.0f64..5.0,
    ) {
        let sum = TestFunction::Sum { terms: vec![(a, f.clone()), (b, g.clone())] };
        let lhs = apply_generator(&m, &sum, x).unwrap();
        let rhs = a * apply_generator(&m, &f, x).unwrap() + b * apply_generator(&m, &g, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn generator_kills_constants(m in model(), c in -5.0f64..5.0, x in 0.0f64..5.0) {
        let v = apply_generator(&m, &TestFunction::Const { value: c }, x).unwrap();
        prop_assert!(v.abs() <= 1e-12, "{v}");
    }

    #[test]
    fn gadget_approximates_the_modulus_from_below(
        exponent in 0.5f64..1.0,
        coef in 0.5f64..2.0,
        one_sided in any::<bool>(),
        x in -2.0f64..2.0,
    ) {
        let variant = if one_sided { GadgetVariant::OneSided } else { GadgetVariant::Symmetric };
        let g = Gadget::build(PowerModulus::new(coef, exponent), 6, variant).unwrap();
        let target = if one_sided { x.max(0.0) } else { x.abs() };
        let mut prev = 0.0;
        for k in 1..=g.k_max() {
            let phi = g.phi(k, x);
            prop_assert!(phi >= prev - 1e-12, "k={k}: {phi} < {prev}");
            prop_assert!(phi <= target + 1e-12, "k={k}: {phi} > {target}");
            let d = g.dphi(k, x);
            prop_assert!(d.abs() <= 1.0 + 1e-12);
            prop_assert!(d * x >= 0.0);
            prop_assert!(g.d2phi(k, x) >= 0.0);
            prev = phi;
        }
    }
}
