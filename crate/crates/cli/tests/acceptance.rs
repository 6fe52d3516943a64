//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails the
//! run if any criterion fails.
//!
//! Pinned tolerances: values must be equal exactly, the step ratio limit is
//! 1.10, and the whole suite must finish in 300 s.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use strymgen::suite::{
    compile_spec, run_suite, BenchResult, ALLOCATING, DEFAULT_SCALE, STEP_RATIO_LIMIT, SUITE,
};
use strymgen_core::ir::{
    eval, scope_check, summarize, type_check, BinOp, CmpOp, Expr, ExprKind, Program, Stmt,
};
use strymgen_core::oracle::{oracle_eval, DEFAULT_BUDGET};
use strymgen_core::random::{case, Config};
use strymgen_core::spec::compile;

const RANDOM_CASES: u64 = 1000;
const TIME_LIMIT: Duration = Duration::from_secs(300);
const BENCH_SEED: u64 = 42;
const BENCH_TRIALS: usize = 10;
const FILTER_TAKE: &str = include_str!("data/filter_take.json");

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, n: u32, ok: bool, what: &str, detail: String) {
        if !ok {
            self.failures += 1;
        }
        println!(
            "criterion {n} {}: {what}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
}

fn stmts(p: &Program) -> Vec<&Stmt> {
    let mut v = Vec::new();
    p.body.walk(&mut |s| v.push(s));
    v
}

fn conjuncts(e: &Expr) -> Vec<&Expr> {
    match &e.kind {
        ExprKind::And(a, b) => {
            let mut v = conjuncts(a);
            v.extend(conjuncts(b));
            v
        }
        _ => vec![e],
    }
}

/// `!nr_k > 0`
fn is_nr_guard(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Cmp(CmpOp::Gt, a, b) => {
            matches!(&a.kind, ExprKind::CellGet(n) if n.hint() == "nr")
                && matches!(b.kind, ExprKind::Int(0))
        }
        _ => false,
    }
}

fn mentions_len(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |n| found |= matches!(n.kind, ExprKind::ArrLen(_)));
    found
}

struct Random {
    agree: u64,
    well_formed: u64,
    first_bad: Option<String>,
}

fn random_pipelines() -> Random {
    let cfg = Config::default();
    let mut r = Random {
        agree: 0,
        well_formed: 0,
        first_bad: None,
    };
    for seed in 0..RANDOM_CASES {
        let c = case(seed, &cfg);
        let p = compile(&c.spec).expect("random specs compile");
        if scope_check(&p).is_ok() && type_check(&p).is_ok() {
            r.well_formed += 1;
        }
        let got = p
            .bind_inputs(&c.inputs)
            .ok()
            .and_then(|ins| eval(&p, &ins).ok())
            .map(|x| x.0);
        let want = oracle_eval(&c.spec, &c.inputs, DEFAULT_BUDGET).ok();
        if got.is_some() && got == want {
            r.agree += 1;
        } else if r.first_bad.is_none() {
            r.first_bad = Some(format!("seed {seed}: {got:?} vs {want:?}"));
        }
    }
    r
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut rep = Report { failures: 0 };

    let table = run_suite(&[], DEFAULT_SCALE, BENCH_SEED, BENCH_TRIALS).expect("bench suite runs");
    let random = random_pipelines();
    let programs: Vec<Program> = SUITE
        .iter()
        .map(|b| compile_spec(b.spec).expect("benchmark compiles").program)
        .collect();

    // 1. Equivalence.
    let bad: Vec<&str> = table
        .iter()
        .filter(|r| !r.values_agree())
        .map(|r| r.name.as_str())
        .collect();
    let elapsed = start.elapsed();
    rep.line(
        1,
        bad.is_empty() && random.agree == RANDOM_CASES && elapsed < TIME_LIMIT,
        "eval = oracle",
        format!(
            "{}/{} benchmarks at scale {DEFAULT_SCALE} (mismatches {bad:?}), {}/{RANDOM_CASES} random pipelines{}, {:.1}s of {}s",
            table.len() - bad.len(),
            table.len(),
            random.agree,
            random.first_bad.as_deref().map(|s| format!(" (first failure {s})")).unwrap_or_default(),
            elapsed.as_secs_f64(),
            TIME_LIMIT.as_secs(),
        ),
    );

    // 2. No allocation in loops except the nested zip.
    let alloc_ok = |r: &BenchResult| {
        if r.name == ALLOCATING {
            r.loop_allocs_nonuser > 0 && r.steady_allocs_nonuser > 0
        } else {
            r.loop_allocs_nonuser == 0 && r.steady_allocs_nonuser == 0
        }
    };
    let exc = table.iter().find(|r| r.name == ALLOCATING);
    rep.line(
        2,
        table.iter().all(alloc_ok) && exc.is_some(),
        "allocation-free loops",
        format!(
            "{} benchmarks allocate nothing in loops; exception {ALLOCATING}: {} static site(s), {} run-time allocation(s), zips {}",
            table.iter().filter(|r| r.name != ALLOCATING && alloc_ok(r)).count(),
            exc.map_or(0, |r| r.loop_allocs_nonuser),
            exc.map_or(0, |r| r.steady_allocs_nonuser),
            exc.map_or("-", |r| r.zips.as_str()),
        ),
    );

    // 3. Structural goldens.
    let shape = |name: &str| {
        let i = SUITE.iter().position(|b| b.name == name).unwrap();
        (&programs[i], summarize(&programs[i]))
    };
    let (_, sos) = shape("sumOfSquares");
    let sos_ok = sos.fors == 1 && sos.whiles == 0;

    let ft = compile_spec(FILTER_TAKE).unwrap().program;
    let ft_shape = summarize(&ft);
    let ft_guard = stmts(&ft).iter().any(|s| match s {
        Stmt::While { cond, .. } => {
            matches!(cond.kind, ExprKind::And(..)) && conjuncts(cond).into_iter().any(is_nr_guard)
        }
        _ => false,
    });
    let ft_ok = ft_shape.whiles == 1 && ft_shape.ifs == 1 && ft_guard;

    let (dot, dot_shape) = shape("dotProduct");
    let dot_min = stmts(dot).iter().any(|s| match s {
        Stmt::For { upb, .. } => match &upb.kind {
            ExprKind::Bin(BinOp::Min, a, b) => mentions_len(a) && mentions_len(b),
            _ => false,
        },
        _ => false,
    });
    let dot_ok = dot_shape.fors == 1 && dot_shape.whiles == 0 && dot_min;

    let (_, cart) = shape("cart");
    let cart_ok = cart.fors + cart.whiles == 2 && cart.max_loop_depth == 2;
    rep.line(
        3,
        sos_ok && ft_ok && dot_ok && cart_ok,
        "structural goldens",
        format!(
            "sumOfSquares for={} while={}; filter+take+sum while={} if={} nr-guard conjunction={ft_guard}; dotProduct for={} min-of-lengths bound={dot_min}; cart loops={} depth={}",
            sos.fors, sos.whiles, ft_shape.whiles, ft_shape.ifs, dot_shape.fors,
            cart.fors + cart.whiles, cart.max_loop_depth,
        ),
    );

    // 4. Well-formedness.
    let bench_wf = programs
        .iter()
        .chain([&ft])
        .filter(|p| scope_check(p).is_ok() && type_check(p).is_ok())
        .count();
    rep.line(
        4,
        bench_wf == programs.len() + 1 && random.well_formed == RANDOM_CASES,
        "scope_check and type_check",
        format!(
            "{bench_wf}/{} benchmark programs, {}/{RANDOM_CASES} random programs",
            programs.len() + 1,
            random.well_formed
        ),
    );

    // 5. Step ratio.
    let mut ratio_ok = true;
    let mut parts = Vec::new();
    for (b, r) in SUITE.iter().zip(&table) {
        let ok = !b.ratio_checked || r.ratio_ok();
        ratio_ok &= ok;
        let tag = if b.ratio_checked { "" } else { " (reported)" };
        parts.push(format!("{} {:.3}{tag}", r.name, r.ratio));
    }
    rep.line(
        5,
        ratio_ok,
        &format!("steps ratio <= {STEP_RATIO_LIMIT:.2}"),
        parts.join(", "),
    );

    // 6. Determinism.
    let again = run_suite(&[], DEFAULT_SCALE, BENCH_SEED, BENCH_TRIALS).expect("bench suite runs");
    let same_table = again == table;
    let alpha = SUITE
        .iter()
        .zip(&programs)
        .all(|(b, p)| compile_spec(b.spec).unwrap().program.alpha_eq(p));
    let alpha_random = (0..100).all(|seed| {
        let c = case(seed, &Config::default());
        compile(&c.spec)
            .unwrap()
            .alpha_eq(&compile(&c.spec).unwrap())
    });
    rep.line(
        6,
        same_table && alpha && alpha_random,
        "determinism",
        format!(
            "bench --seed {BENCH_SEED} tables identical={same_table}; recompiled benchmarks alpha-equivalent={alpha}; 100 random specs alpha-equivalent={alpha_random}"
        ),
    );

    println!(
        "acceptance: {} of 6 criteria pass ({:.1}s)",
        6 - rep.failures,
        start.elapsed().as_secs_f64()
    );
    if rep.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
