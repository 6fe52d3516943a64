//! `gen` and `check`.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use strymgen_core::ir::{
    alloc_scan, eval, print_program, scope_check, type_check, BinOp, Counters, Datum, EvalError,
    Expr, Program, Stmt, Ty,
};
use strymgen_core::oracle::{oracle_eval, OracleError, DEFAULT_BUDGET};
use strymgen_core::random::{random_inputs, Config};
use strymgen_core::spec::{check, parse_spec};

use crate::suite::{compile_parsed, Compiled};
use crate::CliError;

pub struct Generated {
    pub ir: String,
    pub report: String,
    pub warnings: Vec<String>,
}

/// Compiles a spec to IR text and runs the static checkers over it.
pub fn gen(text: &str, strict: bool) -> Result<Generated, CliError> {
    let spec = parse_spec(text)?;
    let checked = check(&spec, strict)?;
    let c = compile_parsed(spec)?;
    let p = &c.program;
    let mut report = String::new();
    let scope = scope_check(p);
    let types = type_check(p);
    let allocs = alloc_scan(p);
    writeln!(report, "scope_check: {}", verdict(&scope)).unwrap();
    writeln!(report, "type_check: {}", verdict(&types)).unwrap();
    writeln!(
        report,
        "alloc_scan: {} non-user allocation(s) in loops",
        allocs.loop_allocs_nonuser
    )
    .unwrap();
    for site in &allocs.locations {
        writeln!(report, "  {site:?}").unwrap();
    }
    if !c.zips.is_empty() {
        writeln!(report, "zips: {:?}", c.zips).unwrap();
    }
    let g = Generated {
        ir: print_program(p),
        report,
        warnings: checked.warnings.iter().map(|w| w.to_string()).collect(),
    };
    if scope.is_err() || types.is_err() {
        return Err(CliError::Mismatch(format!(
            "generated program is ill-formed\n{}",
            g.report
        )));
    }
    Ok(g)
}

fn verdict<E: std::fmt::Debug>(r: &Result<(), E>) -> String {
    match r {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("FAILED {e:?}"),
    }
}

/// Reads an inputs file: a JSON object from parameter names to integer
/// arrays, integers or booleans.
pub fn parse_inputs(text: &str) -> Result<HashMap<String, Datum>, CliError> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("inputs: {e}")))?;
    let Value::Object(m) = v else {
        return Err(CliError::Usage("inputs: expected a JSON object".into()));
    };
    m.into_iter()
        .map(|(k, v)| {
            let d = match &v {
                Value::Bool(b) => Datum::Bool(*b),
                Value::Number(n) => Datum::Int(
                    n.as_i64()
                        .ok_or_else(|| CliError::Usage(format!("inputs.{k}: not an integer")))?,
                ),
                Value::Array(xs) => Datum::Arr(
                    xs.iter()
                        .map(|x| x.as_i64())
                        .collect::<Option<_>>()
                        .ok_or_else(|| {
                            CliError::Usage(format!("inputs.{k}: not an integer array"))
                        })?,
                ),
                _ => {
                    return Err(CliError::Usage(format!(
                        "inputs.{k}: unsupported value {v}"
                    )))
                }
            };
            Ok((k, d))
        })
        .collect()
}

/// Corrupts a program by starting its result accumulator one off.
/// Used to show that `check` notices a wrong program.
pub fn mutate(p: &mut Program) -> Result<(), CliError> {
    let (result, ty) = p.result.clone();
    if ty != Ty::Int {
        return Err(CliError::Usage(format!(
            "mutation needs an int result, found {ty}"
        )));
    }
    let mut s = &mut p.body;
    loop {
        match s {
            Stmt::CellNew { name, init, .. } if *name == result => {
                *init = Expr::bin(BinOp::Add, init.clone(), Expr::int(1));
                return Ok(());
            }
            Stmt::CellNew { body, .. } | Stmt::Let { body, .. } => s = body,
            Stmt::Seq(items) if !items.is_empty() => s = &mut items[0],
            _ => return Err(CliError::Usage("result cell not found".into())),
        }
    }
}

pub struct Trial {
    pub inputs: HashMap<String, Datum>,
    pub value: Result<Datum, EvalError>,
    pub oracle: Result<Datum, OracleError>,
    pub counters: Counters,
}

impl Trial {
    pub fn agrees(&self) -> bool {
        match (&self.value, &self.oracle) {
            (Ok(a), Ok(b)) => a == b,
            (Err(EvalError::DivisionByZero), Err(OracleError::DivisionByZero)) => true,
            _ => false,
        }
    }
}

fn run_trial(p: &Program, c: &Compiled, inputs: HashMap<String, Datum>) -> Result<Trial, CliError> {
    let ins = p
        .bind_inputs(&inputs)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (value, counters) = match eval(p, &ins) {
        Ok((d, k)) => (Ok(d), k),
        Err(e) => (Err(e), Counters::default()),
    };
    let oracle = oracle_eval(&c.spec, &inputs, DEFAULT_BUDGET);
    Ok(Trial {
        inputs,
        value,
        oracle,
        counters,
    })
}

/// Input sets for `check`: the given ones, or `trials` random sets from `seed`.
pub fn input_sets(
    c: &Compiled,
    given: Option<HashMap<String, Datum>>,
    seed: u64,
    trials: usize,
) -> Vec<HashMap<String, Datum>> {
    match given {
        Some(m) => vec![m],
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..trials)
                .map(|_| random_inputs(&mut rng, &c.spec, &Config::default()))
                .collect()
        }
    }
}

/// Evaluates `c` on every input set until the first disagreement with the
/// oracle. `mutated` swaps in a corrupted copy of the program.
pub fn check_sets(
    c: &Compiled,
    sets: Vec<HashMap<String, Datum>>,
    mutated: bool,
) -> Result<Vec<Trial>, CliError> {
    let mut p = c.program.clone();
    if mutated {
        mutate(&mut p)?;
    }
    let mut out = Vec::new();
    for inputs in sets {
        let t = run_trial(&p, c, inputs)?;
        let ok = t.agrees();
        out.push(t);
        if !ok {
            break;
        }
    }
    Ok(out)
}

/// Number of random input sets on which `c` agrees with the oracle; the
/// first disagreement is an error.
pub fn random_agreement(c: &Compiled, seed: u64, trials: usize) -> Result<usize, CliError> {
    let trials_run = check_sets(c, input_sets(c, None, seed, trials), false)?;
    match trials_run.iter().find(|t| !t.agrees()) {
        Some(t) => Err(CliError::Mismatch(describe_mismatch(t))),
        None => Ok(trials_run.len()),
    }
}

pub fn show_inputs(m: &HashMap<String, Datum>) -> String {
    let mut keys: Vec<_> = m.keys().collect();
    keys.sort();
    keys.iter()
        .map(|k| format!("{k}={}", m[*k]))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn describe_mismatch(t: &Trial) -> String {
    let v = match &t.value {
        Ok(d) => d.to_string(),
        Err(e) => format!("error: {e}"),
    };
    let o = match &t.oracle {
        Ok(d) => d.to_string(),
        Err(e) => format!("error: {e}"),
    };
    format!(
        "mismatch on {}: generated {v}, oracle {o}",
        show_inputs(&t.inputs)
    )
}
