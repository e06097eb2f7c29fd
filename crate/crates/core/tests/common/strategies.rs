use std::collections::HashMap;

use proptest::prelude::*;
use s1avg::vfdsl::{eval_expr, parse_expr, BinOp, Expr, Func};

const TOKENS: &[&str] = &[
    "phi", "x1", "x2", "a", "b", "c", "d", "y", "sin", "cos", "exp", "sqrt", "abs", "tan", "(", ")", "+", "-",
    "*", "/", "^", ",", " ", "\n", "1", "2.5", "1e3", "1e", ".", "0.", "1e999", "#", "\u{3c6}", "\t",
];

/// Arbitrary text, raw bytes and token soup over the expression alphabet.
pub fn fuzz_input() -> impl Strategy<Value = String> {
    prop_oneof![
        any::<String>(),
        prop::collection::vec(any::<u8>(), 0..64).prop_map(|b| String::from_utf8_lossy(&b).into_owned()),
        prop::collection::vec(prop::sample::select(TOKENS), 0..40).prop_map(|t| t.concat()),
    ]
}

fn literal() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..100).prop_map(f64::from),
        (0.0f64..10.0),
        (-30i32..30, 1.0f64..10.0).prop_map(|(e, m)| m * 10f64.powi(e)),
    ]
}

pub const VARIABLES: [&str; 3] = ["phi", "x1", "x2"];

/// Expression trees over `phi, x1, x2`.
pub fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        literal().prop_map(Expr::Num),
        prop::sample::select(&VARIABLES[..]).prop_map(|v| Expr::Var(v.to_string())),
    ];
    leaf.prop_recursive(6, 48, 2, |inner| {
        let op = prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]);
        let func = prop::sample::select(Func::ALL.to_vec());
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Bin(o, Box::new(a), Box::new(b))),
            (func, inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

/// `n` deterministic bindings of `phi, x1, x2`.
pub fn bindings(n: usize) -> Vec<HashMap<String, f64>> {
    (0..n)
        .map(|i| {
            let t = i as f64;
            VARIABLES
                .iter()
                .zip([(0.7 * t).sin() * 3.0, (1.3 * t + 0.2).cos() * 2.0, 0.1 * t - 4.0])
                .map(|(k, v)| (k.to_string(), v))
                .collect()
        })
        .collect()
}

/// Printing a generated tree and parsing it back is stable under a second
/// print/parse cycle and evaluates bit-for-bit like the tree.
pub fn check_round_trip(e: &Expr, env: &[HashMap<String, f64>]) -> Result<(), String> {
    let printed = e.to_string();
    let once = parse_expr(&printed).map_err(|err| format!("{printed}: {err}"))?;
    let twice = parse_expr(&once.to_string()).map_err(|err| format!("{once}: {err}"))?;
    if once != twice {
        return Err(format!("{printed} is not stable"));
    }
    for b in env {
        let (u, v) = (eval_expr(e, b).unwrap().value, eval_expr(&once, b).unwrap().value);
        if u.to_bits() != v.to_bits() && !(u.is_nan() && v.is_nan()) {
            return Err(format!("{printed}: {u} != {v} at {b:?}"));
        }
    }
    Ok(())
}
