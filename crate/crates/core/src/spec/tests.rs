use super::*;
use crate::ir::{eval, scope_check, summarize, type_check, Datum};
use crate::oracle::{oracle_eval, DEFAULT_BUDGET};

fn inputs(kv: &[(&str, Datum)]) -> HashMap<String, Datum> {
    kv.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Compiles, checks, evaluates and compares with the oracle.
fn agree(text: &str, kv: &[(&str, Datum)]) -> Datum {
    let spec = parse_spec(text).unwrap();
    let prog = compile(&spec).unwrap();
    assert_eq!(scope_check(&prog), Ok(()));
    assert_eq!(type_check(&prog), Ok(()));
    let ins = inputs(kv);
    let got = eval(&prog, &prog.bind_inputs(&ins).unwrap()).unwrap().0;
    let want = oracle_eval(&spec, &ins, DEFAULT_BUDGET).unwrap();
    assert_eq!(got, want, "{text}");
    got
}

fn arr(xs: &[i64]) -> Datum {
    Datum::Arr(xs.to_vec())
}

const CART: &str = r#"{
  "source": {"of_arr": "arr1"},
  "ops": [{"flat_map": {"stream": {
     "source": {"of_arr": "arr2"},
     "ops": [{"map": {"param": "y", "body": ["mul", ["var", "x"], ["var", "y"]]}}]}}}],
  "reduce": "sum"
}"#;

#[test]
fn parses_sum() {
    let s = parse_spec(r#"{"source": {"of_arr": "arr"}, "ops": [], "reduce": "sum"}"#).unwrap();
    assert_eq!(s.stream.source, Source::OfArr("arr".into()));
    assert_eq!(s.reduce, Reduce::Sum);
    let s2 = parse_spec(r#"{"source": {"of_arr": "arr"}, "reduce": {"sum": {}}}"#).unwrap();
    assert_eq!(s, s2);
}

#[test]
fn cart_compiles_and_agrees() {
    assert_eq!(
        agree(CART, &[("arr1", arr(&[1, 2])), ("arr2", arr(&[3, 3]))]),
        Datum::Int(18)
    );
    let p = compile(&parse_spec(CART).unwrap()).unwrap();
    assert_eq!(summarize(&p).max_loop_depth, 2);
}

#[test]
fn params_follow_first_use() {
    let c = check(&parse_spec(CART).unwrap(), false).unwrap();
    assert_eq!(
        c.params,
        vec![
            ("arr1".to_string(), Ty::ArrInt),
            ("arr2".to_string(), Ty::ArrInt)
        ]
    );
    assert_eq!(c.result, Ty::Int);
    assert!(c.bounded && c.warnings.is_empty());
}

#[test]
fn iota_without_take() {
    let s = parse_spec(r#"{"source": {"iota": 0}, "reduce": "sum"}"#).unwrap();
    let c = check(&s, false).unwrap();
    assert!(!c.bounded);
    assert_eq!(c.warnings.len(), 1);
    let e = check(&s, true).unwrap_err();
    assert_eq!(e.kind, SpecErrorKind::Unbounded);
}

#[test]
fn zip_with_a_finite_side_is_bounded() {
    let s = parse_spec(
        r#"{"source": {"iota": 0},
            "ops": [{"zip_with": {"stream": {"source": {"of_arr": "a"}}, "fn": ["add", ["var","x"], ["var","y"]]}}],
            "reduce": "sum"}"#,
    )
    .unwrap();
    assert!(check(&s, true).unwrap().bounded);
}

#[test]
fn zip_fn_arity() {
    let e = parse_spec(
        r#"{"source": {"of_arr": "a"},
            "ops": [{"zip_with": {"stream": {"source": {"of_arr": "b"}}, "fn": {"param": "x", "body": ["var","x"]}}}],
            "reduce": "sum"}"#,
    )
    .unwrap_err();
    assert_eq!(e.kind, SpecErrorKind::Arity);
    assert_eq!(e.path, "$.ops[0].zip_with.fn");
}

#[test]
fn error_paths() {
    let e = parse_spec(
        r#"{"source": {"of_arr": "a"}, "ops": [{"map": 1}, {"frob": 2}], "reduce": "sum"}"#,
    )
    .unwrap_err();
    assert_eq!(
        (e.kind, e.path.as_str()),
        (SpecErrorKind::UnknownOp, "$.ops[1]")
    );

    let e = parse_spec(
        r#"{"source": {"of_arr": "a"}, "ops": [{"map": ["add", ["var","x"]]}], "reduce": "sum"}"#,
    )
    .unwrap_err();
    assert_eq!(
        (e.kind, e.path.as_str()),
        (SpecErrorKind::Arity, "$.ops[0].map")
    );

    let e = parse_spec(
        r#"{"source": {"of_arr": "a"}, "ops": [{"map": ["pow", 1, 2]}], "reduce": "sum"}"#,
    )
    .unwrap_err();
    assert_eq!(
        (e.kind, e.path.as_str()),
        (SpecErrorKind::UnknownOp, "$.ops[0].map[0]")
    );

    let e = parse_spec(r#"{"source": {"of_arr": "a"}, "reduce": "sum""#).unwrap_err();
    assert_eq!(e.kind, SpecErrorKind::Syntax);

    let e = parse_spec(r#"{"source": {"of_arr": "a b"}, "reduce": "sum"}"#).unwrap_err();
    assert_eq!(
        (e.kind, e.path.as_str()),
        (SpecErrorKind::Malformed, "$.source.of_arr")
    );

    let e = parse_spec(r#"{"source": {"of_arr": "a"}}"#).unwrap_err();
    assert_eq!(e.path, "$");
}

#[test]
fn type_errors() {
    let s = parse_spec(r#"{"source": {"of_arr": "a"}, "ops": [{"filter": ["add", ["var","x"], 1]}], "reduce": "sum"}"#)
        .unwrap();
    let e = check(&s, false).unwrap_err();
    assert_eq!(
        (e.kind, e.path.as_str()),
        (SpecErrorKind::Type, "$.ops[0].filter")
    );

    let s = parse_spec(
        r#"{"source": {"of_arr": "a"}, "ops": [{"map": ["var","y"]}], "reduce": "sum"}"#,
    )
    .unwrap();
    assert_eq!(check(&s, false).unwrap_err().kind, SpecErrorKind::Unbound);

    let s = parse_spec(
        r#"{"source": {"of_arr": "a"}, "ops": [{"map": ["pair", ["var","x"], 1]}], "reduce": "sum"}"#,
    )
    .unwrap();
    assert_eq!(check(&s, false).unwrap_err().path, "$.reduce");

    let s = parse_spec(
        r#"{"source": {"of_arr": "a"}, "ops": [{"take": ["param", "a"]}], "reduce": "sum"}"#,
    )
    .unwrap();
    assert_eq!(check(&s, false).unwrap_err().kind, SpecErrorKind::Type);
    assert!(compile(&s).is_err());
}

#[test]
fn round_trip_is_identity() {
    for text in [
        CART,
        r#"{"source": {"unfold": {"param": "k", "seed": ["pair", 0, 1],
              "step": ["some_pair", ["fst", ["var","k"]], ["pair", ["snd", ["var","k"]], ["add", ["fst", ["var","k"]], ["snd", ["var","k"]]]]]}},
            "ops": [{"take": 10}, {"filter": {"param": "v", "body": ["not", ["eq", ["var","v"], 1]]}}],
            "reduce": {"fold": {"fn": {"params": ["acc","v"], "body": ["min", ["var","acc"], ["var","v"]]}, "seed": 0}}}"#,
        r#"{"source": {"iota": -3},
            "ops": [{"zip_with": {"stream": {"source": {"of_arr": "b"}}, "fn": {"params": ["p","q"], "body": ["or", true, false]}}},
                    {"map": ["some", ["var","x"]]}],
            "reduce": "fold_cons"}"#,
    ] {
        let s = parse_spec(text).unwrap();
        let back = from_json(&to_json(&s)).unwrap();
        assert_eq!(back, s);
        assert_eq!(to_json(&back), to_json(&s));
    }
}

#[test]
fn fibonacci_unfold() {
    let t = r#"{"source": {"unfold": {"param": "k", "seed": ["pair", 0, 1],
          "step": ["some_pair", ["fst", ["var","k"]], ["pair", ["snd", ["var","k"]], ["add", ["fst", ["var","k"]], ["snd", ["var","k"]]]]]}},
        "ops": [{"take": 10}], "reduce": "fold_cons"}"#;
    let v = agree(t, &[]);
    let fib = [34, 21, 13, 8, 5, 3, 2, 1, 1, 0].map(Datum::Int).to_vec();
    assert_eq!(v, Datum::List(fib));
}

#[test]
fn unfold_that_stops() {
    // A countdown that yields n, n-1, ... 1 then stops is not expressible
    // without a conditional; `none` ends the stream immediately.
    let t = r#"{"source": {"unfold": {"seed": 5, "step": ["none"]}}, "reduce": "sum"}"#;
    assert_eq!(agree(t, &[]), Datum::Int(0));
}

#[test]
fn zip_pairs_into_list() {
    let t = r#"{"source": {"of_arr": "a"},
        "ops": [{"filter": ["gt", ["var","x"], 1]},
                {"zip_with": {"stream": {"source": {"iota": 0}, "ops": [{"map": ["mul", ["var","x"], 10]}]},
                              "fn": ["pair", ["var","x"], ["var","y"]]}}],
        "reduce": "fold_cons"}"#;
    let v = agree(t, &[("a", arr(&[1, 5, 0, 7]))]);
    assert_eq!(
        v,
        Datum::List(vec![
            Datum::pair(Datum::Int(7), Datum::Int(10)),
            Datum::pair(Datum::Int(5), Datum::Int(0)),
        ])
    );
}

#[test]
fn nested_zips_agree() {
    let t = r#"{"source": {"of_arr": "a"},
        "ops": [{"flat_map": {"stream": {"source": {"of_arr": "b"}, "ops": [{"map": {"param": "y", "body": ["add", ["var","x"], ["var","y"]]}}]}}},
                {"zip_with": {"stream": {"source": {"of_arr": "b"},
                                         "ops": [{"flat_map": {"stream": {"source": {"of_arr": "a"},
                                                 "ops": [{"filter": {"param": "y", "body": ["lt", ["var","y"], ["var","x"]]}}]}}}]},
                              "fn": ["sub", ["var","x"], ["var","y"]]}},
                {"take": ["param", "n"]}],
        "reduce": {"fold": {"fn": ["add", ["mul", ["var","z"], 3], ["var","a"]], "seed": 1}}}"#;
    for n in [0, 1, 5, 100] {
        agree(
            t,
            &[
                ("a", arr(&[1, 4, 2, 8])),
                ("b", arr(&[3, 5, 7])),
                ("n", Datum::Int(n)),
            ],
        );
    }
}

#[test]
fn lambdas_see_enclosing_variables() {
    let t = r#"{"source": {"of_arr": "a"},
        "ops": [{"flat_map": {"stream": {"source": {"iota": ["var","x"]},
                 "ops": [{"take": ["var","x"]},
                         {"map": {"param": "y", "body": ["mul", ["var","x"], ["var","y"]]}}]}}}],
        "reduce": "sum"}"#;
    // x=2: 2*2+2*3 ; x=3: 3*3+3*4+3*5
    assert_eq!(agree(t, &[("a", arr(&[2, 3]))]), Datum::Int(10 + 36));
}

#[test]
fn compile_twice_is_alpha_equivalent() {
    let s = parse_spec(CART).unwrap();
    let (a, b) = (compile(&s).unwrap(), compile(&s).unwrap());
    assert!(a.alpha_eq(&b));
}
