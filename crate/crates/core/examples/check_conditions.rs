//! Run every condition check on a few models and print the verdicts.
//!
//! cargo run --example check_conditions

use nnjump::conditions::{check, CheckGrid, ConditionId};
use nnjump::{Coef, ModelForm, ModelSpec};

fn main() -> nnjump::Result<()> {
    let general = |sigma: Coef| -> ModelSpec {
        ModelForm::General { sigma, b: Coef::constant(1.0), h0: None, h1: None, mu0: None, mu1: None, b2: None }.into()
    };
    let models = [
        ("cir", ModelSpec::cir(1.0, 1.0, -1.0)),
        ("stable cbi", ModelSpec::stable_cbi(1.0, 1.0, -1.0, 1.0, 1.5, None)),
        ("σ = x^0.2", general(Coef::power(1.0, 0.2))),
    ];
    let grid = CheckGrid::default_for(10.0);
    for (name, spec) in models {
        let model = spec.build()?;
        let line: Vec<String> = ConditionId::ALL
            .iter()
            .map(|&id| match check(&model, id, &grid) {
                Ok(r) => format!("{id}:{:?}", r.verdict),
                Err(e) => format!("{id}:error({e})"),
            })
            .collect();
        println!("{name:<11} {}", line.join(" "));
    }
    Ok(())
}
