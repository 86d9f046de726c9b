mod common;

use proptest::prelude::*;
use semenov::formula::{eval_formula, parse};
use semenov::oracle::brute_force_sat_pruned;
use semenov::solver::{solve, Outcome, SolveParams};

#[test]
fn corpus_verdicts() {
    for (name, text, want) in common::CORPUS {
        let p = parse(text).unwrap();
        let out = solve(&p, &SolveParams::default()).unwrap().outcome;
        match (&out, want) {
            (Outcome::Sat { model, .. }, Some(true)) => assert!(eval_formula(&p.formula, model), "{name}"),
            (Outcome::Unsat, Some(false)) => {}
            (Outcome::Unknown(_), None) => {}
            _ => panic!("{name}: {out:?}, expected {want:?}"),
        }
    }
}

fn linear() -> impl Strategy<Value = String> {
    (-3i64..=3, -3i64..=3, -3i64..=3, 0i64..=20, 0usize..4).prop_map(|(a, b, c, k, op)| {
        let lhs = format!("(+ (* {a} x) (* {b} y) (* {c} z))");
        match op {
            0 => format!("(= {lhs} {k})"),
            1 => format!("(<= {lhs} {k})"),
            2 => format!("(>= {lhs} {k})"),
            _ => format!("(not (= {lhs} {k}))"),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn solver_agrees_with_brute_force(l1 in linear(), l2 in linear(), chain in any::<bool>(), or in any::<bool>()) {
        let exp = if chain { "(= z (exp2 x))" } else { "(= x (exp2 y))" };
        let body = if or { format!("(or {l1} {l2})") } else { format!("(and {l1} {l2})") };
        let text = format!("(declare-int x)(declare-int y)(declare-int z)(assert {exp})(assert {body})(assert (<= x 40))");
        let p = parse(&text).unwrap();
        let found = brute_force_sat_pruned(&p.formula, 3, 64);
        match solve(&p, &SolveParams::default()).unwrap().outcome {
            Outcome::Sat { model, .. } => prop_assert!(eval_formula(&p.formula, &model)),
            Outcome::Unsat => prop_assert!(found.is_none(), "{text}: unsat but {found:?}"),
            Outcome::Unknown(r) => prop_assert!(found.is_none(), "{text}: unknown ({r}) but {found:?}"),
        }
    }
}
