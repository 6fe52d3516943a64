//! Big-step evaluator with step, fuel and allocation accounting.
//!
//! Two step measures are kept. `nodes` counts every statement and expression
//! node visited (plus one per loop test) and is what fuel is charged against.
//! `steps` is an operation count: variable reads, literals, `let` bindings and
//! sequencing are free, every other node costs one, and each loop test costs
//! one. It is the measure used to compare generated code against hand-written
//! loops, since a `let` of an already computed value is free once compiled.

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::arith::{self, ArithError};

use super::{CmpOp, Expr, ExprKind, Name, Program, Stmt, Ty};

pub const DEFAULT_FUEL: u64 = 100_000_000;

/// First-order data: program inputs and results.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Datum {
    Int(i64),
    Bool(bool),
    Unit,
    Arr(Vec<i64>),
    Pair(Box<Datum>, Box<Datum>),
    List(Vec<Datum>),
    Opt(Option<Box<Datum>>),
}

impl Datum {
    pub fn pair(a: Datum, b: Datum) -> Datum {
        Datum::Pair(Box::new(a), Box::new(b))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Datum::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::Value as J;
        match self {
            Datum::Int(n) => J::from(*n),
            Datum::Bool(b) => J::from(*b),
            Datum::Unit => J::Null,
            Datum::Arr(v) => J::from(v.clone()),
            Datum::Pair(a, b) => J::Array(vec![a.to_json(), b.to_json()]),
            Datum::List(v) => {
                serde_json::json!({ "list": v.iter().map(Datum::to_json).collect::<Vec<_>>() })
            }
            Datum::Opt(None) => serde_json::json!({ "none": null }),
            Datum::Opt(Some(d)) => serde_json::json!({ "some": d.to_json() }),
        }
    }

    /// Inputs are integers or arrays of integers.
    pub fn input_from_json(v: &serde_json::Value) -> Option<Datum> {
        if let Some(n) = v.as_i64() {
            return Some(Datum::Int(n));
        }
        let items = v.as_array()?;
        items
            .iter()
            .map(|x| x.as_i64())
            .collect::<Option<Vec<_>>>()
            .map(Datum::Arr)
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Int(n) => write!(f, "{n}"),
            Datum::Bool(b) => write!(f, "{b}"),
            Datum::Unit => write!(f, "()"),
            Datum::Arr(v) => write!(f, "{v:?}"),
            Datum::Pair(a, b) => write!(f, "({a}, {b})"),
            Datum::List(v) => {
                write!(f, "[")?;
                for (i, d) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{d}")?;
                }
                write!(f, "]")
            }
            Datum::Opt(None) => write!(f, "None"),
            Datum::Opt(Some(d)) => write!(f, "Some({d})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("index {index} out of bounds for array of length {len}")]
    OutOfBounds { index: i64, len: usize },
    #[error("missing input `{0}`")]
    MissingInput(String),
    #[error("input mismatch: {0}")]
    InputMismatch(String),
    #[error("malformed program: {0}")]
    Malformed(String),
}

impl From<ArithError> for EvalError {
    fn from(e: ArithError) -> Self {
        match e {
            ArithError::DivisionByZero => EvalError::DivisionByZero,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    /// Operation count (see module docs).
    pub steps: u64,
    /// Every node visited, plus loop tests.
    pub nodes: u64,
    /// Pair, cons, `Some` and procedure-value creations.
    pub allocations: u64,
    /// The subset of `allocations` built by user generators.
    pub allocations_user: u64,
    /// Non-user allocations executed inside a loop body or procedure body.
    pub loop_allocs_nonuser: u64,
    /// Allocations executed after the first loop body was entered.
    pub steady_allocs: u64,
    pub steady_allocs_nonuser: u64,
    /// Writes to the result cell.
    pub result_updates: u64,
    pub loop_iterations: u64,
}

#[derive(Clone)]
enum Value<'p> {
    Int(i64),
    Bool(bool),
    Unit,
    Arr(Rc<Vec<i64>>),
    Pair(Rc<(Value<'p>, Value<'p>)>),
    Nil,
    Cons(Rc<Node<'p>>),
    None,
    Some(Rc<Value<'p>>),
    Proc(Rc<Closure<'p>>),
    Cell(Rc<RefCell<Value<'p>>>),
}

/// A cons cell. Dropped iteratively, so long lists do not exhaust the
/// stack.
struct Node<'p>(Value<'p>, Value<'p>);

impl Drop for Node<'_> {
    fn drop(&mut self) {
        let mut tail = std::mem::replace(&mut self.1, Value::Nil);
        while let Value::Cons(rc) = tail {
            match Rc::try_unwrap(rc) {
                Ok(mut node) => tail = std::mem::replace(&mut node.1, Value::Nil),
                Err(_) => break,
            }
        }
    }
}

struct Closure<'p> {
    body: &'p Stmt,
    env: Env<'p>,
}

struct Frame<'p> {
    name: &'p Name,
    val: Value<'p>,
    next: Env<'p>,
}

type Env<'p> = Option<Rc<Frame<'p>>>;

fn extend<'p>(env: &Env<'p>, name: &'p Name, val: Value<'p>) -> Env<'p> {
    Some(Rc::new(Frame {
        name,
        val,
        next: env.clone(),
    }))
}

fn lookup<'a, 'p>(env: &'a Env<'p>, n: &Name) -> Result<&'a Value<'p>, EvalError> {
    let mut cur = env;
    while let Some(f) = cur {
        if f.name == n {
            return Ok(&f.val);
        }
        cur = &f.next;
    }
    Err(EvalError::Malformed(format!("unbound name {n}")))
}

fn malformed<T>(what: &str) -> Result<T, EvalError> {
    Err(EvalError::Malformed(what.to_string()))
}

struct Machine<'p> {
    fuel: u64,
    counters: Counters,
    loop_depth: u32,
    proc_depth: u32,
    steady: bool,
    result_name: &'p Name,
    result_cell: Option<Rc<RefCell<Value<'p>>>>,
}

impl<'p> Machine<'p> {
    #[inline]
    fn tick(&mut self, ops: u64) -> Result<(), EvalError> {
        self.counters.nodes += 1;
        self.counters.steps += ops;
        if self.counters.nodes > self.fuel {
            return Err(EvalError::FuelExhausted(self.fuel));
        }
        Ok(())
    }

    fn alloc(&mut self, user: bool) {
        let c = &mut self.counters;
        c.allocations += 1;
        if user {
            c.allocations_user += 1;
        } else if self.loop_depth > 0 || self.proc_depth > 0 {
            c.loop_allocs_nonuser += 1;
        }
        if self.steady {
            c.steady_allocs += 1;
            if !user {
                c.steady_allocs_nonuser += 1;
            }
        }
    }

    fn int(&mut self, e: &'p Expr, env: &Env<'p>) -> Result<i64, EvalError> {
        match self.expr(e, env)? {
            Value::Int(n) => Ok(n),
            _ => malformed("expected an int"),
        }
    }

    fn bool(&mut self, e: &'p Expr, env: &Env<'p>) -> Result<bool, EvalError> {
        match self.expr(e, env)? {
            Value::Bool(b) => Ok(b),
            _ => malformed("expected a bool"),
        }
    }

    fn cell(&self, n: &Name, env: &Env<'p>) -> Result<Rc<RefCell<Value<'p>>>, EvalError> {
        match lookup(env, n)? {
            Value::Cell(c) => Ok(c.clone()),
            _ => malformed("expected a cell"),
        }
    }

    fn expr(&mut self, e: &'p Expr, env: &Env<'p>) -> Result<Value<'p>, EvalError> {
        use ExprKind::*;
        let cost = match &e.kind {
            Int(_) | Bool(_) | Unit | Var(_) | Nil | None => 0,
            _ => 1,
        };
        self.tick(cost)?;
        Ok(match &e.kind {
            Int(n) => Value::Int(*n),
            Bool(b) => Value::Bool(*b),
            Unit => Value::Unit,
            Var(n) => lookup(env, n)?.clone(),
            CellGet(n) => self.cell(n, env)?.borrow().clone(),
            Bin(op, a, b) => {
                let x = self.int(a, env)?;
                let y = self.int(b, env)?;
                Value::Int(arith::binop(*op, x, y)?)
            }
            Cmp(CmpOp::Eq, a, b) => {
                let x = self.expr(a, env)?;
                let y = self.expr(b, env)?;
                Value::Bool(value_eq(&x, &y)?)
            }
            Cmp(op, a, b) => {
                let x = self.int(a, env)?;
                let y = self.int(b, env)?;
                Value::Bool(arith::compare(*op, x, y))
            }
            And(a, b) => Value::Bool(self.bool(a, env)? && self.bool(b, env)?),
            Or(a, b) => Value::Bool(self.bool(a, env)? || self.bool(b, env)?),
            Not(a) => Value::Bool(!self.bool(a, env)?),
            ArrLen(a) => match self.expr(a, env)? {
                Value::Arr(v) => Value::Int(v.len() as i64),
                _ => return malformed("len of a non-array"),
            },
            ArrGet(a, i) => {
                let arr = match self.expr(a, env)? {
                    Value::Arr(v) => v,
                    _ => return malformed("indexing a non-array"),
                };
                let idx = self.int(i, env)?;
                match usize::try_from(idx).ok().and_then(|k| arr.get(k)) {
                    Option::Some(x) => Value::Int(*x),
                    Option::None => {
                        return Err(EvalError::OutOfBounds {
                            index: idx,
                            len: arr.len(),
                        })
                    }
                }
            }
            Pair(a, b) => {
                let x = self.expr(a, env)?;
                let y = self.expr(b, env)?;
                self.alloc(e.user);
                Value::Pair(Rc::new((x, y)))
            }
            Fst(a) => match self.expr(a, env)? {
                Value::Pair(p) => p.0.clone(),
                _ => return malformed("fst of a non-pair"),
            },
            Snd(a) => match self.expr(a, env)? {
                Value::Pair(p) => p.1.clone(),
                _ => return malformed("snd of a non-pair"),
            },
            Cons(h, t) => {
                let x = self.expr(h, env)?;
                let y = self.expr(t, env)?;
                self.alloc(e.user);
                Value::Cons(Rc::new(Node(x, y)))
            }
            Nil => Value::Nil,
            None => Value::None,
            Some(a) => {
                let x = self.expr(a, env)?;
                self.alloc(e.user);
                Value::Some(Rc::new(x))
            }
            SomePair(a, b) => {
                let x = self.expr(a, env)?;
                let y = self.expr(b, env)?;
                self.alloc(e.user);
                Value::Some(Rc::new(Value::Pair(Rc::new((x, y)))))
            }
        })
    }

    fn enter_loop_body(&mut self) {
        self.steady = true;
        self.loop_depth += 1;
        self.counters.loop_iterations += 1;
    }

    fn stmt(&mut self, s: &'p Stmt, env: &Env<'p>) -> Result<(), EvalError> {
        match s {
            Stmt::Let {
                name, rhs, body, ..
            } => {
                self.tick(0)?;
                let v = self.expr(rhs, env)?;
                self.stmt(body, &extend(env, name, v))
            }
            Stmt::CellNew {
                name, init, body, ..
            } => {
                self.tick(1)?;
                let v = self.expr(init, env)?;
                let cell = Rc::new(RefCell::new(v));
                if name == self.result_name && self.result_cell.is_none() {
                    self.result_cell = Some(cell.clone());
                }
                self.stmt(body, &extend(env, name, Value::Cell(cell)))
            }
            Stmt::CellSet(n, e) => {
                self.tick(1)?;
                let v = self.expr(e, env)?;
                let cell = self.cell(n, env)?;
                if n == self.result_name {
                    self.counters.result_updates += 1;
                }
                *cell.borrow_mut() = v;
                Ok(())
            }
            Stmt::For { idx, upb, body } => {
                self.tick(0)?;
                let hi = self.int(upb, env)?;
                let mut i = 0i64;
                loop {
                    self.tick(1)?;
                    if i > hi {
                        break;
                    }
                    self.enter_loop_body();
                    let r = self.stmt(body, &extend(env, idx, Value::Int(i)));
                    self.loop_depth -= 1;
                    r?;
                    i += 1;
                }
                Ok(())
            }
            Stmt::While { cond, body } => {
                self.tick(0)?;
                loop {
                    self.tick(1)?;
                    if !self.bool(cond, env)? {
                        break;
                    }
                    self.enter_loop_body();
                    let r = self.stmt(body, env);
                    self.loop_depth -= 1;
                    r?;
                }
                Ok(())
            }
            Stmt::If { cond, then, els } => {
                self.tick(1)?;
                if self.bool(cond, env)? {
                    self.stmt(then, env)
                } else if let Some(e) = els {
                    self.stmt(e, env)
                } else {
                    Ok(())
                }
            }
            Stmt::MatchOptPair {
                scrutinee,
                el,
                st,
                some,
                none,
            } => {
                self.tick(1)?;
                match self.expr(scrutinee, env)? {
                    Value::Some(v) => match &*v {
                        Value::Pair(p) => {
                            let env = extend(env, el, p.0.clone());
                            let env = extend(&env, st, p.1.clone());
                            self.stmt(some, &env)
                        }
                        _ => malformed("match on option of non-pair"),
                    },
                    Value::None => self.stmt(none, env),
                    _ => malformed("match on a non-option"),
                }
            }
            Stmt::MatchOpt {
                scrutinee,
                name,
                some,
                none,
            } => {
                self.tick(1)?;
                match self.expr(scrutinee, env)? {
                    Value::Some(v) => self.stmt(some, &extend(env, name, (*v).clone())),
                    Value::None => self.stmt(none, env),
                    _ => malformed("match on a non-option"),
                }
            }
            Stmt::ProcDef { name, body, scope } => {
                self.tick(1)?;
                self.alloc(false);
                let clo = Value::Proc(Rc::new(Closure {
                    body,
                    env: env.clone(),
                }));
                self.stmt(scope, &extend(env, name, clo))
            }
            Stmt::ProcCall(n) => {
                self.tick(1)?;
                let clo = match lookup(env, n)? {
                    Value::Proc(c) => c.clone(),
                    _ => return malformed("calling a non-procedure"),
                };
                self.proc_depth += 1;
                let r = self.stmt(clo.body, &clo.env);
                self.proc_depth -= 1;
                r
            }
            Stmt::Seq(items) => {
                self.tick(0)?;
                for i in items {
                    self.stmt(i, env)?;
                }
                Ok(())
            }
            Stmt::Skip => self.tick(0),
        }
    }
}

fn value_eq(a: &Value<'_>, b: &Value<'_>) -> Result<bool, EvalError> {
    Ok(match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Unit, Value::Unit) | (Value::Nil, Value::Nil) | (Value::None, Value::None) => true,
        (Value::Arr(x), Value::Arr(y)) => x == y,
        (Value::Pair(x), Value::Pair(y)) => value_eq(&x.0, &y.0)? && value_eq(&x.1, &y.1)?,
        (Value::Cons(_), Value::Cons(_)) => {
            let (mut a, mut b) = (a, b);
            while let (Value::Cons(x), Value::Cons(y)) = (a, b) {
                if !value_eq(&x.0, &y.0)? {
                    return Ok(false);
                }
                (a, b) = (&x.1, &y.1);
            }
            value_eq(a, b)?
        }
        (Value::Some(x), Value::Some(y)) => value_eq(x, y)?,
        (Value::Nil, Value::Cons(_))
        | (Value::Cons(_), Value::Nil)
        | (Value::None, Value::Some(_))
        | (Value::Some(_), Value::None) => false,
        (Value::Some(_), Value::Proc(_)) => false,
        _ => return malformed("comparing incomparable values"),
    })
}

fn to_datum(v: &Value<'_>) -> Result<Datum, EvalError> {
    Ok(match v {
        Value::Int(n) => Datum::Int(*n),
        Value::Bool(b) => Datum::Bool(*b),
        Value::Unit => Datum::Unit,
        Value::Arr(a) => Datum::Arr((**a).clone()),
        Value::Pair(p) => Datum::pair(to_datum(&p.0)?, to_datum(&p.1)?),
        Value::Nil | Value::Cons(_) => {
            let mut items = Vec::new();
            let mut cur = v;
            while let Value::Cons(c) = cur {
                items.push(to_datum(&c.0)?);
                cur = &c.1;
            }
            Datum::List(items)
        }
        Value::None => Datum::Opt(None),
        Value::Some(x) => Datum::Opt(Some(Box::new(to_datum(x)?))),
        Value::Proc(_) | Value::Cell(_) => return malformed("result is not first-order data"),
    })
}

fn input_value<'p>(d: &Datum, ty: &Ty) -> Result<Value<'p>, EvalError> {
    match (d, ty) {
        (Datum::Int(n), Ty::Int) => Ok(Value::Int(*n)),
        (Datum::Bool(b), Ty::Bool) => Ok(Value::Bool(*b)),
        (Datum::Arr(v), Ty::ArrInt) => Ok(Value::Arr(Rc::new(v.clone()))),
        _ => Err(EvalError::InputMismatch(format!("{d} is not a {ty}"))),
    }
}

pub fn eval(p: &Program, inputs: &[Datum]) -> Result<(Datum, Counters), EvalError> {
    eval_with_fuel(p, inputs, DEFAULT_FUEL)
}

/// Runs `p` on `inputs` (one per parameter, in order), charging at most
/// `fuel` node visits.
pub fn eval_with_fuel(
    p: &Program,
    inputs: &[Datum],
    fuel: u64,
) -> Result<(Datum, Counters), EvalError> {
    if inputs.len() != p.params.len() {
        return Err(EvalError::InputMismatch(format!(
            "expected {} inputs, got {}",
            p.params.len(),
            inputs.len()
        )));
    }
    let mut env: Env<'_> = None;
    for ((n, t), d) in p.params.iter().zip(inputs) {
        env = extend(&env, n, input_value(d, t)?);
    }
    let mut m = Machine {
        fuel,
        counters: Counters::default(),
        loop_depth: 0,
        proc_depth: 0,
        steady: false,
        result_name: &p.result.0,
        result_cell: None,
    };
    m.stmt(&p.body, &env)?;
    let cell = m
        .result_cell
        .take()
        .ok_or_else(|| EvalError::Malformed(format!("result cell {} never created", p.result.0)))?;
    let v = cell.borrow().clone();
    Ok((to_datum(&v)?, m.counters))
}
