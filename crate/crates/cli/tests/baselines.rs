//! The hand-written loop for zipping a flat-mapped stream with a plain array
//! walks the nested stream with the two arrays swapped. It agrees with the
//! pipeline it was written for only when the zip does not truncate.

use strymgen::suite::{compile_spec, inputs_for};
use strymgen_core::ir::{alloc_scan, eval, parse_program, Datum};
use strymgen_core::oracle::{oracle_eval, DEFAULT_BUDGET};
use strymgen_core::spec::parse_spec;
use strymgen_core::stream::ZipCase;

const HAND: &str = include_str!("../baselines/zipWith_after_flatMap_linear.ir");
const LINEAR: &str = include_str!("data/zipWith_after_flatMap_linear.json");
const SWAPPED: &str = include_str!("data/zipWith_after_flatMap_swapped.json");

fn oracle(spec: &str, n: usize) -> Datum {
    oracle_eval(
        &parse_spec(spec).unwrap(),
        &inputs_for("zipWith_after_flatMap", n),
        DEFAULT_BUDGET,
    )
    .unwrap()
}

fn hand(n: usize) -> Datum {
    let p = parse_program(HAND).unwrap();
    eval(
        &p,
        &p.bind_inputs(&inputs_for("zipWith_after_flatMap", n))
            .unwrap(),
    )
    .unwrap()
    .0
}

#[test]
fn linear_zip_of_a_nested_stream_needs_no_allocation() {
    let c = compile_spec(LINEAR).unwrap();
    assert_eq!(c.zips, vec![ZipCase::LinearNested]);
    assert_eq!(alloc_scan(&c.program).loop_allocs_nonuser, 0);
    let ins = inputs_for("zipWith_after_flatMap", 100_000);
    let (v, k) = eval(&c.program, &c.program.bind_inputs(&ins).unwrap()).unwrap();
    assert_eq!(v, oracle(LINEAR, 100_000));
    assert_eq!(k.steady_allocs_nonuser, 0);
}

#[test]
fn hand_loop_matches_the_swapped_pipeline() {
    for n in [0, 10, 100, 1000, 100_000] {
        assert_eq!(hand(n), oracle(SWAPPED, n), "n = {n}");
    }
}

#[test]
fn hand_loop_differs_from_the_original_pipeline_under_truncation() {
    assert_eq!(hand(100_000), Datum::Int(90_000));
    assert_eq!(oracle(LINEAR, 100_000), Datum::Int(135_000));
}
