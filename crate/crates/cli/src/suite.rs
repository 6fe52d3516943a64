//! The benchmark suite: pipeline specs, hand-written baseline loops and inputs.

use std::collections::HashMap;

use serde::Serialize;
use strymgen_core::api::Session;
use strymgen_core::ir::{
    alloc_scan, eval_with_fuel, parse_program, summarize, Datum, Program, DEFAULT_FUEL,
};
use strymgen_core::oracle::{oracle_eval, DEFAULT_BUDGET};
use strymgen_core::spec::{compile_in, parse_spec, PipelineSpec};
use strymgen_core::stream::ZipCase;

use crate::CliError;

pub struct Benchmark {
    pub name: &'static str,
    pub spec: &'static str,
    /// IR text of the hand-written loop.
    pub baseline: &'static str,
    /// Whether the step ratio is held to [`STEP_RATIO_LIMIT`].
    pub ratio_checked: bool,
}

pub const STEP_RATIO_LIMIT: f64 = 1.10;

pub const DEFAULT_SCALE: usize = 100_000;

macro_rules! bench {
    ($name:literal, $checked:expr) => {
        Benchmark {
            name: $name,
            spec: include_str!(concat!("../benchmarks/", $name, ".json")),
            baseline: include_str!(concat!("../baselines/", $name, ".ir")),
            ratio_checked: $checked,
        }
    };
}

pub const SUITE: [Benchmark; 10] = [
    bench!("sum", true),
    bench!("sumOfSquares", true),
    bench!("sumOfSquaresEven", true),
    bench!("maps", true),
    bench!("filters", true),
    bench!("cart", true),
    bench!("dotProduct", true),
    bench!("flatMap_after_zipWith", false),
    bench!("zipWith_after_flatMap", false),
    bench!("flat_map_take", false),
];

/// The name of the one benchmark allowed to allocate in its loops.
pub const ALLOCATING: &str = "zipWith_after_flatMap";

pub fn find(name: &str) -> Option<&'static Benchmark> {
    SUITE.iter().find(|b| b.name == name)
}

/// `x_i = i mod 10`.
pub fn small_ints(n: usize) -> Datum {
    Datum::Arr((0..n as i64).map(|i| i % 10).collect())
}

/// Inputs for benchmark `name` at scale `n`.
///
/// Single-array benchmarks get `n` elements. The two-array ones keep the
/// proportions of the original setup: `cart`, `zipWith_after_flatMap` and
/// `flat_map_take` use `n/10` by 10, `dotProduct` uses `n/10` for both,
/// `flatMap_after_zipWith` uses `sqrt(n)` for both, and `flat_map_take` stops
/// after `n/5` elements.
pub fn inputs_for(name: &str, n: usize) -> HashMap<String, Datum> {
    let mut m = HashMap::new();
    let mut two = |a: usize, b: usize| {
        m.insert("arr1".to_string(), small_ints(a));
        m.insert("arr2".to_string(), small_ints(b));
    };
    match name {
        "cart" | "zipWith_after_flatMap" => two(n / 10, 10),
        "dotProduct" => two(n / 10, n / 10),
        "flatMap_after_zipWith" => {
            let r = (n as f64).sqrt() as usize;
            two(r, r)
        }
        "flat_map_take" => {
            two(n / 10, 10);
            m.insert("n".to_string(), Datum::Int((n / 5) as i64));
        }
        _ => {
            m.insert("arr".to_string(), small_ints(n));
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub name: String,
    pub value: String,
    pub oracle_value: String,
    pub baseline_value: String,
    pub steps_generated: u64,
    pub steps_handwritten: u64,
    pub ratio: f64,
    pub loop_allocs_nonuser: usize,
    pub steady_allocs_nonuser: u64,
    pub fors: usize,
    pub whiles: usize,
    pub ifs: usize,
    pub cells: usize,
    pub max_loop_depth: usize,
    pub zips: String,
    /// Random small input sets checked against the oracle.
    pub random_checked: usize,
}

impl BenchResult {
    pub fn values_agree(&self) -> bool {
        self.value == self.oracle_value && self.baseline_value == self.oracle_value
    }

    pub fn ratio_ok(&self) -> bool {
        self.ratio <= STEP_RATIO_LIMIT
    }
}

pub const TSV_HEADER: &str = "name\tvalue\toracle_value\tbaseline_value\tsteps_generated\tsteps_handwritten\tratio\tloop_allocs_nonuser\tsteady_allocs_nonuser\tfors\twhiles\tifs\tcells\tmax_loop_depth\tzips\trandom_checked";

impl BenchResult {
    pub fn tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.name,
            self.value,
            self.oracle_value,
            self.baseline_value,
            self.steps_generated,
            self.steps_handwritten,
            self.ratio,
            self.loop_allocs_nonuser,
            self.steady_allocs_nonuser,
            self.fors,
            self.whiles,
            self.ifs,
            self.cells,
            self.max_loop_depth,
            self.zips,
            self.random_checked,
        )
    }
}

pub struct Compiled {
    pub spec: PipelineSpec,
    pub program: Program,
    pub zips: Vec<ZipCase>,
}

pub fn compile_spec(text: &str) -> Result<Compiled, CliError> {
    compile_parsed(parse_spec(text)?)
}

pub fn compile_parsed(spec: PipelineSpec) -> Result<Compiled, CliError> {
    let session = Session::new();
    let program = compile_in(&session, &spec)?;
    Ok(Compiled {
        spec,
        program,
        zips: session.zip_trace(),
    })
}

pub fn baseline(b: &Benchmark) -> Program {
    parse_program(b.baseline).unwrap_or_else(|e| panic!("baseline {} does not parse: {e}", b.name))
}

fn fuel(scale: usize) -> u64 {
    DEFAULT_FUEL.max(2_000 * scale as u64)
}

fn budget(scale: usize) -> u64 {
    DEFAULT_BUDGET.max(20 * scale as u64)
}

fn show(r: &Result<Datum, String>) -> String {
    match r {
        Ok(d) => d.to_string(),
        Err(e) => format!("error: {e}"),
    }
}

/// Runs one benchmark at `scale`, plus `trials` random input sets drawn from
/// `seed`. Random sets that disagree with the oracle are an error.
pub fn run(b: &Benchmark, scale: usize, seed: u64, trials: usize) -> Result<BenchResult, CliError> {
    let c = compile_spec(b.spec)?;
    let hand = baseline(b);
    let inputs = inputs_for(b.name, scale);

    let ins = c
        .program
        .bind_inputs(&inputs)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (value, counters) = eval_with_fuel(&c.program, &ins, fuel(scale))
        .map(|(d, c)| (Ok(d), c))
        .unwrap_or_else(|e| (Err(e.to_string()), Default::default()));
    let hins = hand
        .bind_inputs(&inputs)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (hvalue, hcounters) = eval_with_fuel(&hand, &hins, fuel(scale))
        .map(|(d, c)| (Ok(d), c))
        .unwrap_or_else(|e| (Err(e.to_string()), Default::default()));
    let oracle = oracle_eval(&c.spec, &inputs, budget(scale)).map_err(|e| e.to_string());

    let random_checked = crate::commands::random_agreement(&c, seed, trials)?;

    let shape = summarize(&c.program);
    let mut zips: Vec<String> = c.zips.iter().map(|z| format!("{z:?}")).collect();
    zips.dedup();
    Ok(BenchResult {
        name: b.name.to_string(),
        value: show(&value),
        oracle_value: show(&oracle),
        baseline_value: show(&hvalue),
        steps_generated: counters.steps,
        steps_handwritten: hcounters.steps,
        ratio: counters.steps as f64 / hcounters.steps.max(1) as f64,
        loop_allocs_nonuser: alloc_scan(&c.program).loop_allocs_nonuser,
        steady_allocs_nonuser: counters.steady_allocs_nonuser,
        fors: shape.fors,
        whiles: shape.whiles,
        ifs: shape.ifs,
        cells: shape.cells,
        max_loop_depth: shape.max_loop_depth,
        zips: if zips.is_empty() {
            "-".to_string()
        } else {
            zips.join(",")
        },
        random_checked,
    })
}

/// Runs the benchmarks named in `only` (all of them when empty).
pub fn run_suite(
    only: &[String],
    scale: usize,
    seed: u64,
    trials: usize,
) -> Result<Vec<BenchResult>, CliError> {
    for n in only {
        if find(n).is_none() {
            return Err(CliError::Usage(format!("unknown benchmark `{n}`")));
        }
    }
    SUITE
        .iter()
        .filter(|b| only.is_empty() || only.iter().any(|n| n == b.name))
        .enumerate()
        .map(|(i, b)| run(b, scale, seed.wrapping_add(i as u64), trials))
        .collect()
}
