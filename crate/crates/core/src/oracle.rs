//! Reference semantics: runs a spec directly as lazy iterators over
//! values. Shares nothing with the compiler except the spec syntax and the
//! integer arithmetic in [`crate::arith`].
//!
//! ```
//! use strymgen_core::oracle::{oracle_eval, DEFAULT_BUDGET};
//! use strymgen_core::spec::parse_spec;
//! use strymgen_core::ir::Datum;
//! use std::collections::HashMap;
//!
//! let spec = parse_spec(r#"{"source": {"iota": 1}, "ops": [{"take": 3}], "reduce": "sum"}"#).unwrap();
//! assert_eq!(oracle_eval(&spec, &HashMap::new(), DEFAULT_BUDGET), Ok(Datum::Int(6)));
//! ```

use std::cell::Cell;
use std::collections::HashMap;
use std::iter;
use std::rc::Rc;

use crate::arith::{self, ArithError};
use crate::ir::{BinOp, CmpOp, Datum};
use crate::spec::{Op, PipelineSpec, Reduce, SExpr, SOp, Source, StreamSpec};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("element budget of {0} exhausted (unbounded pipeline?)")]
    BudgetExhausted(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("missing input `{0}`")]
    MissingInput(String),
    #[error("ill-typed value: {0}")]
    IllTyped(String),
}

impl From<ArithError> for OracleError {
    fn from(e: ArithError) -> Self {
        match e {
            ArithError::DivisionByZero => OracleError::DivisionByZero,
        }
    }
}

type R<T> = Result<T, OracleError>;
type Stream = Box<dyn Iterator<Item = R<Datum>>>;
type Env = Vec<(String, Datum)>;

struct Ctx {
    inputs: HashMap<String, Datum>,
    budget: u64,
    used: Cell<u64>,
}

impl Ctx {
    /// Charges one source element against the budget.
    fn charge(&self) -> R<()> {
        let n = self.used.get() + 1;
        self.used.set(n);
        if n > self.budget {
            Err(OracleError::BudgetExhausted(self.budget))
        } else {
            Ok(())
        }
    }

    fn input(&self, name: &str) -> R<&Datum> {
        self.inputs
            .get(name)
            .ok_or_else(|| OracleError::MissingInput(name.to_string()))
    }
}

fn ill(what: &str, d: &Datum) -> OracleError {
    OracleError::IllTyped(format!("expected {what}, got {d}"))
}

fn int(d: Datum) -> R<i64> {
    match d {
        Datum::Int(n) => Ok(n),
        d => Err(ill("int", &d)),
    }
}

fn boolean(d: Datum) -> R<bool> {
    match d {
        Datum::Bool(b) => Ok(b),
        d => Err(ill("bool", &d)),
    }
}

fn with(env: &Env, binds: &[(&String, Datum)]) -> Env {
    let mut e = env.clone();
    e.extend(binds.iter().map(|(n, d)| ((*n).clone(), d.clone())));
    e
}

fn eval(cx: &Ctx, e: &SExpr, env: &Env) -> R<Datum> {
    let SExpr::App(op, args) = e else {
        return match e {
            SExpr::Int(n) => Ok(Datum::Int(*n)),
            SExpr::Bool(b) => Ok(Datum::Bool(*b)),
            SExpr::Var(x) => env
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, d)| d.clone())
                .ok_or_else(|| OracleError::IllTyped(format!("unbound variable `{x}`"))),
            SExpr::Param(x) => cx.input(x).cloned(),
            SExpr::App(..) => unreachable!(),
        };
    };
    let arg = |i: usize| eval(cx, &args[i], env);
    let arith =
        |o: BinOp| -> R<Datum> { Ok(Datum::Int(arith::binop(o, int(arg(0)?)?, int(arg(1)?)?)?)) };
    let cmp =
        |o: CmpOp| -> R<Datum> { Ok(Datum::Bool(arith::compare(o, int(arg(0)?)?, int(arg(1)?)?))) };
    match op {
        SOp::Add => arith(BinOp::Add),
        SOp::Sub => arith(BinOp::Sub),
        SOp::Mul => arith(BinOp::Mul),
        SOp::Div => arith(BinOp::Div),
        SOp::Mod => arith(BinOp::Mod),
        SOp::Min => arith(BinOp::Min),
        SOp::Lt => cmp(CmpOp::Lt),
        SOp::Le => cmp(CmpOp::Le),
        SOp::Eq => cmp(CmpOp::Eq),
        SOp::Gt => cmp(CmpOp::Gt),
        SOp::Ge => cmp(CmpOp::Ge),
        // Both operands are evaluated, as in the IR.
        SOp::And => {
            let (a, b) = (boolean(arg(0)?)?, boolean(arg(1)?)?);
            Ok(Datum::Bool(a && b))
        }
        SOp::Or => {
            let (a, b) = (boolean(arg(0)?)?, boolean(arg(1)?)?);
            Ok(Datum::Bool(a || b))
        }
        SOp::Not => Ok(Datum::Bool(!boolean(arg(0)?)?)),
        SOp::Pair => Ok(Datum::pair(arg(0)?, arg(1)?)),
        SOp::Fst | SOp::Snd => match arg(0)? {
            Datum::Pair(a, b) => Ok(*if *op == SOp::Fst { a } else { b }),
            d => Err(ill("pair", &d)),
        },
        SOp::Cons => {
            let h = arg(0)?;
            match arg(1)? {
                Datum::List(mut t) => {
                    t.insert(0, h);
                    Ok(Datum::List(t))
                }
                d => Err(ill("list", &d)),
            }
        }
        SOp::Nil => Ok(Datum::List(Vec::new())),
        SOp::Some => Ok(Datum::Opt(Some(Box::new(arg(0)?)))),
        SOp::SomePair => Ok(Datum::Opt(Some(Box::new(Datum::pair(arg(0)?, arg(1)?))))),
        SOp::None => Ok(Datum::Opt(None)),
    }
}

fn once_err(e: OracleError) -> Stream {
    Box::new(iter::once(Err(e)))
}

fn stream(cx: &Rc<Ctx>, s: &StreamSpec, env: &Env) -> Stream {
    let mut out: Stream = match &s.source {
        Source::OfArr(a) => match cx.input(a) {
            Ok(Datum::Arr(xs)) => {
                let (cx, xs) = (cx.clone(), xs.clone());
                Box::new(
                    xs.into_iter()
                        .map(move |x| cx.charge().map(|_| Datum::Int(x))),
                )
            }
            Ok(d) => once_err(ill("array", d)),
            Err(e) => once_err(e),
        },
        Source::Iota(e) => match eval(cx, e, env).and_then(int) {
            Ok(n) => {
                let cx = cx.clone();
                Box::new(
                    iter::successors(Some(n), |k| Some(k.wrapping_add(1)))
                        .map(move |k| cx.charge().map(|_| Datum::Int(k))),
                )
            }
            Err(e) => once_err(e),
        },
        Source::Unfold { param, seed, step } => match eval(cx, seed, env) {
            Ok(z) => {
                let (cx, env, param, step) = (cx.clone(), env.clone(), param.clone(), step.clone());
                let mut state = Some(z);
                Box::new(iter::from_fn(move || {
                    let s = state.take()?;
                    let r = cx
                        .charge()
                        .and_then(|_| eval(&cx, &step, &with(&env, &[(&param, s)])));
                    match r {
                        Ok(Datum::Opt(None)) => None,
                        Ok(Datum::Opt(Some(p))) => match *p {
                            Datum::Pair(el, next) => {
                                state = Some(*next);
                                Some(Ok(*el))
                            }
                            d => Some(Err(ill("pair", &d))),
                        },
                        Ok(d) => Some(Err(ill("option", &d))),
                        Err(e) => Some(Err(e)),
                    }
                }))
            }
            Err(e) => once_err(e),
        },
    };
    for op in &s.ops {
        out = match op {
            Op::Map(l) => {
                let (cx, env, l) = (cx.clone(), env.clone(), l.clone());
                Box::new(out.map(move |r| {
                    r.and_then(|x| eval(&cx, &l.body, &with(&env, &[(&l.params[0], x)])))
                }))
            }
            Op::Filter(l) => {
                let (cx, env, l) = (cx.clone(), env.clone(), l.clone());
                Box::new(out.filter_map(move |r| {
                    let x = match r {
                        Ok(x) => x,
                        Err(e) => return Some(Err(e)),
                    };
                    match eval(&cx, &l.body, &with(&env, &[(&l.params[0], x.clone())]))
                        .and_then(boolean)
                    {
                        Ok(true) => Some(Ok(x)),
                        Ok(false) => None,
                        Err(e) => Some(Err(e)),
                    }
                }))
            }
            Op::Take(e) => match eval(cx, e, env).and_then(int) {
                Ok(n) => Box::new(out.take(n.max(0) as usize)),
                Err(e) => once_err(e),
            },
            Op::FlatMap {
                param,
                stream: inner,
            } => {
                let (cx, env, param, inner) =
                    (cx.clone(), env.clone(), param.clone(), inner.clone());
                Box::new(out.flat_map(move |r| match r {
                    Ok(x) => stream(&cx, &inner, &with(&env, &[(&param, x)])),
                    Err(e) => once_err(e),
                }))
            }
            Op::ZipWith { stream: other, f } => {
                let right = stream(cx, other, env);
                let (cx, env, f) = (cx.clone(), env.clone(), f.clone());
                Box::new(out.zip(right).map(move |(a, b)| {
                    let (a, b) = (a?, b?);
                    eval(
                        &cx,
                        &f.body,
                        &with(&env, &[(&f.params[0], a), (&f.params[1], b)]),
                    )
                }))
            }
        };
    }
    out
}

/// The elements of a spec's stream, before reduction.
pub fn oracle_elements(
    spec: &PipelineSpec,
    inputs: &HashMap<String, Datum>,
    budget: u64,
) -> R<Vec<Datum>> {
    let cx = Rc::new(Ctx {
        inputs: inputs.clone(),
        budget,
        used: Cell::new(0),
    });
    stream(&cx, &spec.stream, &Vec::new()).collect()
}

/// Runs a spec. Left fold; `zip_with` stops at the shorter stream; `take`
/// of a non-positive count is empty.
pub fn oracle_eval(spec: &PipelineSpec, inputs: &HashMap<String, Datum>, budget: u64) -> R<Datum> {
    let cx = Rc::new(Ctx {
        inputs: inputs.clone(),
        budget,
        used: Cell::new(0),
    });
    let items = stream(&cx, &spec.stream, &Vec::new());
    match &spec.reduce {
        Reduce::Sum => {
            let mut acc = 0i64;
            for x in items {
                acc = arith::binop(BinOp::Add, acc, int(x?)?)?;
            }
            Ok(Datum::Int(acc))
        }
        Reduce::FoldCons => {
            let mut acc = Vec::new();
            for x in items {
                acc.push(x?);
            }
            acc.reverse();
            Ok(Datum::List(acc))
        }
        Reduce::Fold { f, seed } => {
            let mut acc = eval(&cx, seed, &Vec::new())?;
            for x in items {
                let env = vec![(f.params[0].clone(), acc), (f.params[1].clone(), x?)];
                acc = eval(&cx, &f.body, &env)?;
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;

    fn run(text: &str, inputs: &[(&str, Datum)]) -> R<Datum> {
        let spec = parse_spec(text).unwrap();
        let inputs = inputs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        oracle_eval(&spec, &inputs, DEFAULT_BUDGET)
    }

    #[test]
    fn sum_of_squares_even() {
        let t = r#"{"source": {"of_arr": "arr"},
            "ops": [{"filter": ["eq", ["mod", ["var","x"], 2], 0]},
                    {"map": ["mul", ["var","x"], ["var","x"]]}],
            "reduce": "sum"}"#;
        assert_eq!(
            run(t, &[("arr", Datum::Arr(vec![0, 1, 2, 3, 4]))]),
            Ok(Datum::Int(20))
        );
    }

    #[test]
    fn zip_truncates_to_shorter() {
        let t = r#"{"source": {"of_arr": "a"},
            "ops": [{"zip_with": {"stream": {"source": {"of_arr": "b"}}, "fn": ["pair", ["var","x"], ["var","y"]]}}],
            "reduce": "fold_cons"}"#;
        let v = run(
            t,
            &[
                ("a", Datum::Arr(vec![1, 2, 3])),
                ("b", Datum::Arr(vec![4, 5])),
            ],
        )
        .unwrap();
        let Datum::List(items) = v else { panic!() };
        assert_eq!(items.len(), 2);
        assert_eq!(items[0], Datum::pair(Datum::Int(2), Datum::Int(5)));
    }

    #[test]
    fn fold_cons_reverses() {
        let t = r#"{"source": {"of_arr": "a"}, "reduce": "fold_cons"}"#;
        let v = run(t, &[("a", Datum::Arr(vec![1, 2, 3]))]).unwrap();
        assert_eq!(
            v,
            Datum::List(vec![Datum::Int(3), Datum::Int(2), Datum::Int(1)])
        );
    }

    #[test]
    fn unbounded_exhausts_budget() {
        let spec = parse_spec(r#"{"source": {"iota": 0}, "reduce": "sum"}"#).unwrap();
        assert_eq!(
            oracle_eval(&spec, &HashMap::new(), 1000),
            Err(OracleError::BudgetExhausted(1000))
        );
    }

    #[test]
    fn take_is_lazy_over_infinite_nesting() {
        let t = r#"{"source": {"iota": 1},
            "ops": [{"flat_map": {"stream": {"source": {"iota": ["var","x"]}}}},
                    {"take": 4}],
            "reduce": "sum"}"#;
        assert_eq!(run(t, &[]), Ok(Datum::Int(1 + 2 + 3 + 4)));
    }

    #[test]
    fn unfold_and_params() {
        let t = r#"{"source": {"unfold": {"param": "k", "seed": ["param","n"],
                      "step": ["some_pair", ["var","k"], ["sub", ["var","k"], 1]]}},
            "ops": [{"take": 3}], "reduce": "sum"}"#;
        assert_eq!(run(t, &[("n", Datum::Int(10))]), Ok(Datum::Int(27)));
    }

    #[test]
    fn errors_propagate() {
        let t = r#"{"source": {"of_arr": "a"}, "ops": [{"map": ["div", 1, ["var","x"]]}], "reduce": "sum"}"#;
        assert_eq!(
            run(t, &[("a", Datum::Arr(vec![1, 0]))]),
            Err(OracleError::DivisionByZero)
        );
        assert_eq!(run(t, &[]), Err(OracleError::MissingInput("a".into())));
    }

    #[test]
    fn general_fold() {
        let t = r#"{"source": {"of_arr": "a"},
            "reduce": {"fold": {"fn": ["sub", ["var","z"], ["var","a"]], "seed": 100}}}"#;
        assert_eq!(
            run(t, &[("a", Datum::Arr(vec![1, 2, 3]))]),
            Ok(Datum::Int(94))
        );
    }
}
