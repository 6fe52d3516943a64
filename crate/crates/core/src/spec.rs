//! JSON pipeline descriptions.
//!
//! A spec is an object `{"source": ..., "ops": [...], "reduce": ...}`.
//! Per-element logic is written in a prefix expression language:
//! `["mul", ["var", "x"], 3]`, with `["param", "n"]` for integer program
//! parameters. Lambdas are either a bare body, which binds the default
//! parameter names, or `{"param": "y", "body": ...}` /
//! `{"params": ["a", "b"], "body": ...}`.
//!
//! ```
//! use strymgen_core::spec::{compile, parse_spec};
//! use strymgen_core::ir::{eval, Datum};
//!
//! let spec = parse_spec(r#"{
//!     "source": {"of_arr": "arr"},
//!     "ops": [{"map": ["mul", ["var", "x"], ["var", "x"]]}],
//!     "reduce": "sum"
//! }"#).unwrap();
//! let prog = compile(&spec).unwrap();
//! let (v, _) = eval(&prog, &[Datum::Arr(vec![1, 2, 3])]).unwrap();
//! assert_eq!(v, Datum::Int(14));
//! ```

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde_json::{json, Map, Value};

use crate::api::{Pipeline, Session};
use crate::ir::{Program, Ty};
use crate::staged::{self as st, Arr, Code, Dyn, List};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Min,
    Lt,
    Le,
    Eq,
    Gt,
    Ge,
    And,
    Or,
    Not,
    Pair,
    Fst,
    Snd,
    Cons,
    Nil,
    Some,
    SomePair,
    None,
}

impl SOp {
    pub const ALL: [SOp; 22] = [
        SOp::Add,
        SOp::Sub,
        SOp::Mul,
        SOp::Div,
        SOp::Mod,
        SOp::Min,
        SOp::Lt,
        SOp::Le,
        SOp::Eq,
        SOp::Gt,
        SOp::Ge,
        SOp::And,
        SOp::Or,
        SOp::Not,
        SOp::Pair,
        SOp::Fst,
        SOp::Snd,
        SOp::Cons,
        SOp::Nil,
        SOp::Some,
        SOp::SomePair,
        SOp::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SOp::Add => "add",
            SOp::Sub => "sub",
            SOp::Mul => "mul",
            SOp::Div => "div",
            SOp::Mod => "mod",
            SOp::Min => "min",
            SOp::Lt => "lt",
            SOp::Le => "le",
            SOp::Eq => "eq",
            SOp::Gt => "gt",
            SOp::Ge => "ge",
            SOp::And => "and",
            SOp::Or => "or",
            SOp::Not => "not",
            SOp::Pair => "pair",
            SOp::Fst => "fst",
            SOp::Snd => "snd",
            SOp::Cons => "cons",
            SOp::Nil => "nil",
            SOp::Some => "some",
            SOp::SomePair => "some_pair",
            SOp::None => "none",
        }
    }

    pub fn from_name(s: &str) -> Option<SOp> {
        SOp::ALL.into_iter().find(|o| o.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            SOp::Nil | SOp::None => 0,
            SOp::Not | SOp::Fst | SOp::Snd | SOp::Some => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Int(i64),
    Bool(bool),
    /// A lambda-bound variable.
    Var(String),
    /// An integer program parameter.
    Param(String),
    App(SOp, Vec<SExpr>),
}

impl SExpr {
    pub fn var(x: &str) -> SExpr {
        SExpr::Var(x.to_string())
    }

    pub fn param(x: &str) -> SExpr {
        SExpr::Param(x.to_string())
    }

    pub fn app(op: SOp, args: Vec<SExpr>) -> SExpr {
        assert_eq!(args.len(), op.arity(), "arity of {}", op.name());
        SExpr::App(op, args)
    }

    pub fn bin(op: SOp, a: SExpr, b: SExpr) -> SExpr {
        SExpr::app(op, vec![a, b])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lambda {
    pub params: Vec<String>,
    pub body: SExpr,
}

impl Lambda {
    pub fn new(params: &[&str], body: SExpr) -> Self {
        Lambda {
            params: params.iter().map(|s| s.to_string()).collect(),
            body,
        }
    }
}

pub const MAP_PARAMS: [&str; 1] = ["x"];
pub const ZIP_PARAMS: [&str; 2] = ["x", "y"];
pub const FOLD_PARAMS: [&str; 2] = ["z", "a"];
pub const FLAT_MAP_PARAM: &str = "x";
pub const UNFOLD_PARAM: &str = "s";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    OfArr(String),
    Iota(SExpr),
    Unfold {
        param: String,
        seed: SExpr,
        step: SExpr,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    Map(Lambda),
    Filter(Lambda),
    Take(SExpr),
    FlatMap { param: String, stream: StreamSpec },
    ZipWith { stream: StreamSpec, f: Lambda },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamSpec {
    pub source: Source,
    pub ops: Vec<Op>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reduce {
    Sum,
    Fold { f: Lambda, seed: SExpr },
    FoldCons,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineSpec {
    pub stream: StreamSpec,
    pub reduce: Reduce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecErrorKind {
    Syntax,
    Malformed,
    UnknownOp,
    Arity,
    Unbound,
    Type,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {msg}")]
pub struct SpecError {
    pub kind: SpecErrorKind,
    /// JSON path of the offending value, `$` for the root.
    pub path: String,
    pub msg: String,
}

fn err<T>(kind: SpecErrorKind, path: &str, msg: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError {
        kind,
        path: path.to_string(),
        msg: msg.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Warning {
    pub path: String,
    pub msg: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "warning: {}: {}", self.path, self.msg)
    }
}

// ---------------------------------------------------------------- parsing

use SpecErrorKind as K;

fn ident(v: &Value, path: &str) -> Result<String, SpecError> {
    let Some(s) = v.as_str() else {
        return err(K::Malformed, path, "expected a name");
    };
    let mut cs = s.chars();
    let ok = cs.next().is_some_and(|c| c.is_ascii_alphabetic())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok {
        return err(K::Malformed, path, format!("`{s}` is not a valid name"));
    }
    Ok(s.to_string())
}

fn object<'a>(v: &'a Value, path: &str, what: &str) -> Result<&'a Map<String, Value>, SpecError> {
    v.as_object().ok_or_else(|| SpecError {
        kind: K::Malformed,
        path: path.to_string(),
        msg: format!("expected {what} object"),
    })
}

fn only_keys(m: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), SpecError> {
    for k in m.keys() {
        if !allowed.contains(&k.as_str()) {
            return err(
                K::Malformed,
                &format!("{path}.{k}"),
                format!("unexpected key `{k}`"),
            );
        }
    }
    Ok(())
}

fn field<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, SpecError> {
    m.get(key).ok_or_else(|| SpecError {
        kind: K::Malformed,
        path: path.to_string(),
        msg: format!("missing `{key}`"),
    })
}

/// The single `{"key": value}` entry of a tagged object.
fn tagged<'a>(v: &'a Value, path: &str, what: &str) -> Result<(&'a str, &'a Value), SpecError> {
    let m = object(v, path, what)?;
    if m.len() != 1 {
        return err(
            K::Malformed,
            path,
            format!("{what} must have exactly one key"),
        );
    }
    let (k, v) = m.iter().next().unwrap();
    Ok((k.as_str(), v))
}

pub fn parse_expr(v: &Value, path: &str) -> Result<SExpr, SpecError> {
    match v {
        Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(SExpr::Int(i)),
            None => err(K::Type, path, format!("`{n}` is not a 64-bit integer")),
        },
        Value::Bool(b) => Ok(SExpr::Bool(*b)),
        Value::Array(items) => {
            let Some(head) = items.first().and_then(Value::as_str) else {
                return err(
                    K::Malformed,
                    path,
                    "expression must start with an operator name",
                );
            };
            match head {
                "var" | "param" => {
                    if items.len() != 2 {
                        return err(K::Arity, path, format!("`{head}` takes one name"));
                    }
                    let x = ident(&items[1], &format!("{path}[1]"))?;
                    Ok(if head == "var" {
                        SExpr::Var(x)
                    } else {
                        SExpr::Param(x)
                    })
                }
                _ => {
                    let Some(op) = SOp::from_name(head) else {
                        return err(
                            K::UnknownOp,
                            &format!("{path}[0]"),
                            format!("unknown operator `{head}`"),
                        );
                    };
                    if items.len() - 1 != op.arity() {
                        return err(
                            K::Arity,
                            path,
                            format!(
                                "`{head}` takes {} argument(s), got {}",
                                op.arity(),
                                items.len() - 1
                            ),
                        );
                    }
                    let args = items[1..]
                        .iter()
                        .enumerate()
                        .map(|(i, a)| parse_expr(a, &format!("{path}[{}]", i + 1)))
                        .collect::<Result<_, _>>()?;
                    Ok(SExpr::App(op, args))
                }
            }
        }
        _ => err(
            K::Malformed,
            path,
            "expected an integer, a boolean or an [op, ...] array",
        ),
    }
}

fn parse_lambda(v: &Value, path: &str, defaults: &[&str]) -> Result<Lambda, SpecError> {
    let Some(m) = v.as_object() else {
        return Ok(Lambda::new(defaults, parse_expr(v, path)?));
    };
    only_keys(m, &["param", "params", "body"], path)?;
    let params = match (m.get("param"), m.get("params")) {
        (Some(p), None) => vec![ident(p, &format!("{path}.param"))?],
        (None, Some(Value::Array(ps))) => ps
            .iter()
            .enumerate()
            .map(|(i, p)| ident(p, &format!("{path}.params[{i}]")))
            .collect::<Result<_, _>>()?,
        (None, None) => defaults.iter().map(|s| s.to_string()).collect(),
        _ => {
            return err(
                K::Malformed,
                path,
                "give either `param` or a `params` array",
            )
        }
    };
    if params.len() != defaults.len() {
        return err(
            K::Arity,
            path,
            format!(
                "function takes {} parameter(s), got {}",
                defaults.len(),
                params.len()
            ),
        );
    }
    let body = parse_expr(field(m, "body", path)?, &format!("{path}.body"))?;
    Ok(Lambda { params, body })
}

fn parse_source(v: &Value, path: &str) -> Result<Source, SpecError> {
    let (k, a) = tagged(v, path, "source")?;
    let p = format!("{path}.{k}");
    match k {
        "of_arr" => Ok(Source::OfArr(ident(a, &p)?)),
        "iota" => Ok(Source::Iota(parse_expr(a, &p)?)),
        "unfold" => {
            let m = object(a, &p, "unfold")?;
            only_keys(m, &["param", "seed", "step"], &p)?;
            let param = match m.get("param") {
                Some(x) => ident(x, &format!("{p}.param"))?,
                None => UNFOLD_PARAM.to_string(),
            };
            Ok(Source::Unfold {
                param,
                seed: parse_expr(field(m, "seed", &p)?, &format!("{p}.seed"))?,
                step: parse_expr(field(m, "step", &p)?, &format!("{p}.step"))?,
            })
        }
        _ => err(K::UnknownOp, path, format!("unknown source `{k}`")),
    }
}

fn parse_op(v: &Value, path: &str) -> Result<Op, SpecError> {
    let (k, a) = tagged(v, path, "op")?;
    let p = format!("{path}.{k}");
    match k {
        "map" => Ok(Op::Map(parse_lambda(a, &p, &MAP_PARAMS)?)),
        "filter" => Ok(Op::Filter(parse_lambda(a, &p, &MAP_PARAMS)?)),
        "take" => Ok(Op::Take(parse_expr(a, &p)?)),
        "flat_map" => {
            let m = object(a, &p, "flat_map")?;
            only_keys(m, &["param", "stream"], &p)?;
            let param = match m.get("param") {
                Some(x) => ident(x, &format!("{p}.param"))?,
                None => FLAT_MAP_PARAM.to_string(),
            };
            let stream = parse_stream(field(m, "stream", &p)?, &format!("{p}.stream"), false)?;
            Ok(Op::FlatMap { param, stream })
        }
        "zip_with" => {
            let m = object(a, &p, "zip_with")?;
            only_keys(m, &["stream", "fn"], &p)?;
            let stream = parse_stream(field(m, "stream", &p)?, &format!("{p}.stream"), false)?;
            let f = parse_lambda(field(m, "fn", &p)?, &format!("{p}.fn"), &ZIP_PARAMS)?;
            Ok(Op::ZipWith { stream, f })
        }
        _ => err(K::UnknownOp, path, format!("unknown op `{k}`")),
    }
}

fn parse_stream(v: &Value, path: &str, top: bool) -> Result<StreamSpec, SpecError> {
    let m = object(v, path, "stream")?;
    let keys: &[&str] = if top {
        &["source", "ops", "reduce"]
    } else {
        &["source", "ops"]
    };
    only_keys(m, keys, path)?;
    let source = parse_source(field(m, "source", path)?, &format!("{path}.source"))?;
    let ops = match m.get("ops") {
        None => Vec::new(),
        Some(Value::Array(ops)) => ops
            .iter()
            .enumerate()
            .map(|(i, o)| parse_op(o, &format!("{path}.ops[{i}]")))
            .collect::<Result<_, _>>()?,
        Some(_) => return err(K::Malformed, &format!("{path}.ops"), "expected an array"),
    };
    Ok(StreamSpec { source, ops })
}

fn parse_reduce(v: &Value, path: &str) -> Result<Reduce, SpecError> {
    let (k, a) = match v {
        Value::String(s) => (s.as_str(), &Value::Null),
        _ => tagged(v, path, "reduce")?,
    };
    let p = format!("{path}.{k}");
    let no_args = |r: Reduce| match a {
        Value::Null => Ok(r),
        Value::Object(m) if m.is_empty() => Ok(r),
        _ => err(K::Arity, &p, format!("`{k}` takes no arguments")),
    };
    match k {
        "sum" => no_args(Reduce::Sum),
        "fold_cons" => no_args(Reduce::FoldCons),
        "fold" => {
            let m = object(a, &p, "fold")?;
            only_keys(m, &["fn", "seed"], &p)?;
            Ok(Reduce::Fold {
                f: parse_lambda(field(m, "fn", &p)?, &format!("{p}.fn"), &FOLD_PARAMS)?,
                seed: parse_expr(field(m, "seed", &p)?, &format!("{p}.seed"))?,
            })
        }
        _ => err(K::UnknownOp, path, format!("unknown reducer `{k}`")),
    }
}

pub fn from_json(v: &Value) -> Result<PipelineSpec, SpecError> {
    let stream = parse_stream(v, "$", true)?;
    let m = v.as_object().unwrap();
    let reduce = parse_reduce(field(m, "reduce", "$")?, "$.reduce")?;
    Ok(PipelineSpec { stream, reduce })
}

/// Parses the JSON text of a spec. Checks structure only; see [`check`].
pub fn parse_spec(text: &str) -> Result<PipelineSpec, SpecError> {
    let v: Value = serde_json::from_str(text).map_err(|e| SpecError {
        kind: K::Syntax,
        path: "$".into(),
        msg: format!("line {} column {}: {e}", e.line(), e.column()),
    })?;
    from_json(&v)
}

// ---------------------------------------------------------------- printing

pub fn expr_to_json(e: &SExpr) -> Value {
    match e {
        SExpr::Int(n) => json!(n),
        SExpr::Bool(b) => json!(b),
        SExpr::Var(x) => json!(["var", x]),
        SExpr::Param(x) => json!(["param", x]),
        SExpr::App(op, args) => {
            let mut v = vec![json!(op.name())];
            v.extend(args.iter().map(expr_to_json));
            Value::Array(v)
        }
    }
}

fn lambda_to_json(l: &Lambda, defaults: &[&str]) -> Value {
    let body = expr_to_json(&l.body);
    if l.params
        .iter()
        .map(String::as_str)
        .eq(defaults.iter().copied())
    {
        body
    } else if l.params.len() == 1 {
        json!({"param": l.params[0], "body": body})
    } else {
        json!({"params": l.params, "body": body})
    }
}

fn stream_to_json(s: &StreamSpec) -> Map<String, Value> {
    let source = match &s.source {
        Source::OfArr(a) => json!({"of_arr": a}),
        Source::Iota(e) => json!({"iota": expr_to_json(e)}),
        Source::Unfold { param, seed, step } => {
            let mut m = Map::new();
            if param != UNFOLD_PARAM {
                m.insert("param".into(), json!(param));
            }
            m.insert("seed".into(), expr_to_json(seed));
            m.insert("step".into(), expr_to_json(step));
            json!({"unfold": m})
        }
    };
    let ops: Vec<Value> = s
        .ops
        .iter()
        .map(|op| match op {
            Op::Map(l) => json!({"map": lambda_to_json(l, &MAP_PARAMS)}),
            Op::Filter(l) => json!({"filter": lambda_to_json(l, &MAP_PARAMS)}),
            Op::Take(e) => json!({"take": expr_to_json(e)}),
            Op::FlatMap { param, stream } => {
                let mut m = Map::new();
                if param != FLAT_MAP_PARAM {
                    m.insert("param".into(), json!(param));
                }
                m.insert("stream".into(), Value::Object(stream_to_json(stream)));
                json!({"flat_map": m})
            }
            Op::ZipWith { stream, f } => json!({"zip_with": {
                "stream": Value::Object(stream_to_json(stream)),
                "fn": lambda_to_json(f, &ZIP_PARAMS),
            }}),
        })
        .collect();
    let mut m = Map::new();
    m.insert("source".into(), source);
    if !ops.is_empty() {
        m.insert("ops".into(), Value::Array(ops));
    }
    m
}

/// Canonical JSON form. Default parameter names and empty op lists are
/// omitted, so `from_json(to_json(s)) == s`.
pub fn to_json(spec: &PipelineSpec) -> Value {
    let mut m = stream_to_json(&spec.stream);
    let reduce = match &spec.reduce {
        Reduce::Sum => json!("sum"),
        Reduce::FoldCons => json!("fold_cons"),
        Reduce::Fold { f, seed } => json!({"fold": {
            "fn": lambda_to_json(f, &FOLD_PARAMS),
            "seed": expr_to_json(seed),
        }}),
    };
    m.insert("reduce".into(), reduce);
    Value::Object(m)
}

impl fmt::Display for PipelineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_string_pretty(&to_json(self)).map_err(|_| fmt::Error)?;
        f.write_str(&s)
    }
}

// ---------------------------------------------------------------- checking

/// What [`check`] learns about a spec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checked {
    /// Program parameters in order of first use.
    pub params: Vec<(String, Ty)>,
    pub elem: Ty,
    pub result: Ty,
    /// Whether every run is finite, by a syntactic argument.
    pub bounded: bool,
    pub warnings: Vec<Warning>,
}

fn list_elem(hint: Option<&Ty>) -> Ty {
    match hint {
        Some(Ty::List(t)) => (**t).clone(),
        _ => Ty::Int,
    }
}

fn option_payload(hint: Option<&Ty>) -> Option<Ty> {
    match hint {
        Some(Ty::Option(t)) => Some((**t).clone()),
        _ => None,
    }
}

fn pair_parts(hint: Option<&Ty>) -> (Option<Ty>, Option<Ty>) {
    match hint {
        Some(Ty::Pair(a, b)) => (Some((**a).clone()), Some((**b).clone())),
        _ => (None, None),
    }
}

fn unfold_hint(seed: &Ty) -> Ty {
    Ty::option(Ty::pair(Ty::Int, seed.clone()))
}

fn lambda_path(path: &str, l: &Lambda, defaults: &[&str]) -> String {
    if l.params
        .iter()
        .map(String::as_str)
        .eq(defaults.iter().copied())
    {
        path.to_string()
    } else {
        format!("{path}.body")
    }
}

struct Tc {
    params: Vec<(String, Ty)>,
}

type TyEnv = Vec<(String, Ty)>;

fn extend<T: Clone>(env: &[(String, T)], binds: &[(&String, T)]) -> Vec<(String, T)> {
    let mut e = env.to_vec();
    e.extend(binds.iter().map(|(n, t)| ((*n).clone(), t.clone())));
    e
}

impl Tc {
    fn param(&mut self, name: &str, ty: Ty, path: &str) -> Result<(), SpecError> {
        match self.params.iter().find(|(n, _)| n == name) {
            Some((_, t)) if *t != ty => err(
                K::Type,
                path,
                format!("parameter `{name}` used as both {t} and {ty}"),
            ),
            Some(_) => Ok(()),
            None => {
                self.params.push((name.to_string(), ty));
                Ok(())
            }
        }
    }

    fn expect(&mut self, e: &SExpr, env: &TyEnv, ty: &Ty, path: &str) -> Result<(), SpecError> {
        let t = self.expr(e, env, Some(ty), path)?;
        if t != *ty {
            return err(K::Type, path, format!("expected {ty}, found {t}"));
        }
        Ok(())
    }

    fn expr(
        &mut self,
        e: &SExpr,
        env: &TyEnv,
        hint: Option<&Ty>,
        path: &str,
    ) -> Result<Ty, SpecError> {
        let arg = |i: usize| format!("{path}[{}]", i + 1);
        Ok(match e {
            SExpr::Int(_) => Ty::Int,
            SExpr::Bool(_) => Ty::Bool,
            SExpr::Var(x) => match env.iter().rev().find(|(n, _)| n == x) {
                Some((_, t)) => t.clone(),
                None => return err(K::Unbound, path, format!("unbound variable `{x}`")),
            },
            SExpr::Param(x) => {
                self.param(x, Ty::Int, path)?;
                Ty::Int
            }
            SExpr::App(op, args) => {
                if args.len() != op.arity() {
                    return err(
                        K::Arity,
                        path,
                        format!("`{}` takes {} argument(s)", op.name(), op.arity()),
                    );
                }
                match op {
                    SOp::Add | SOp::Sub | SOp::Mul | SOp::Div | SOp::Mod | SOp::Min => {
                        self.expect(&args[0], env, &Ty::Int, &arg(0))?;
                        self.expect(&args[1], env, &Ty::Int, &arg(1))?;
                        Ty::Int
                    }
                    SOp::Lt | SOp::Le | SOp::Eq | SOp::Gt | SOp::Ge => {
                        self.expect(&args[0], env, &Ty::Int, &arg(0))?;
                        self.expect(&args[1], env, &Ty::Int, &arg(1))?;
                        Ty::Bool
                    }
                    SOp::And | SOp::Or => {
                        self.expect(&args[0], env, &Ty::Bool, &arg(0))?;
                        self.expect(&args[1], env, &Ty::Bool, &arg(1))?;
                        Ty::Bool
                    }
                    SOp::Not => {
                        self.expect(&args[0], env, &Ty::Bool, &arg(0))?;
                        Ty::Bool
                    }
                    SOp::Pair => {
                        let (ha, hb) = pair_parts(hint);
                        let a = self.expr(&args[0], env, ha.as_ref(), &arg(0))?;
                        let b = self.expr(&args[1], env, hb.as_ref(), &arg(1))?;
                        Ty::pair(a, b)
                    }
                    SOp::Fst | SOp::Snd => match self.expr(&args[0], env, None, &arg(0))? {
                        Ty::Pair(a, b) => *if *op == SOp::Fst { a } else { b },
                        t => return err(K::Type, &arg(0), format!("expected a pair, found {t}")),
                    },
                    SOp::Cons => {
                        let h = self.expr(&args[0], env, Some(&list_elem(hint)), &arg(0))?;
                        self.expect(&args[1], env, &Ty::list(h.clone()), &arg(1))?;
                        Ty::list(h)
                    }
                    SOp::Nil => Ty::list(list_elem(hint)),
                    SOp::Some => {
                        let p = option_payload(hint);
                        Ty::option(self.expr(&args[0], env, p.as_ref(), &arg(0))?)
                    }
                    SOp::SomePair => {
                        let p = option_payload(hint);
                        let (ha, hb) = pair_parts(p.as_ref());
                        let a = self.expr(&args[0], env, ha.as_ref(), &arg(0))?;
                        let b = self.expr(&args[1], env, hb.as_ref(), &arg(1))?;
                        Ty::option(Ty::pair(a, b))
                    }
                    SOp::None => Ty::option(option_payload(hint).unwrap_or(Ty::Int)),
                }
            }
        })
    }

    /// Element type of a stream and whether it is finite.
    fn stream(&mut self, s: &StreamSpec, env: &TyEnv, path: &str) -> Result<(Ty, bool), SpecError> {
        let sp = format!("{path}.source");
        let (mut elem, mut bounded) = match &s.source {
            Source::OfArr(a) => {
                self.param(a, Ty::ArrInt, &format!("{sp}.of_arr"))?;
                (Ty::Int, true)
            }
            Source::Iota(e) => {
                self.expect(e, env, &Ty::Int, &format!("{sp}.iota"))?;
                (Ty::Int, false)
            }
            Source::Unfold { param, seed, step } => {
                let st = self.expr(seed, env, None, &format!("{sp}.unfold.seed"))?;
                let p = format!("{sp}.unfold.step");
                let t = self.expr(
                    step,
                    &extend(env, &[(param, st.clone())]),
                    Some(&unfold_hint(&st)),
                    &p,
                )?;
                match t {
                    Ty::Option(inner) => match *inner {
                        Ty::Pair(a, b) if *b == st => (*a, false),
                        other => {
                            return err(
                                K::Type,
                                &p,
                                format!("expected option<(_, {st})>, found option<{other}>"),
                            )
                        }
                    },
                    other => {
                        return err(
                            K::Type,
                            &p,
                            format!("expected option<(_, {st})>, found {other}"),
                        )
                    }
                }
            }
        };
        for (i, op) in s.ops.iter().enumerate() {
            let p = format!("{path}.ops[{i}]");
            match op {
                Op::Map(l) => {
                    let lp = lambda_path(&format!("{p}.map"), l, &MAP_PARAMS);
                    elem = self.expr(&l.body, &extend(env, &[(&l.params[0], elem)]), None, &lp)?;
                }
                Op::Filter(l) => {
                    let lp = lambda_path(&format!("{p}.filter"), l, &MAP_PARAMS);
                    self.expect(
                        &l.body,
                        &extend(env, &[(&l.params[0], elem.clone())]),
                        &Ty::Bool,
                        &lp,
                    )?;
                }
                Op::Take(e) => {
                    self.expect(e, env, &Ty::Int, &format!("{p}.take"))?;
                    bounded = true;
                }
                Op::FlatMap { param, stream } => {
                    let (t, b) = self.stream(
                        stream,
                        &extend(env, &[(param, elem)]),
                        &format!("{p}.flat_map.stream"),
                    )?;
                    elem = t;
                    bounded = bounded && b;
                }
                Op::ZipWith { stream, f } => {
                    let (t, b) = self.stream(stream, env, &format!("{p}.zip_with.stream"))?;
                    let lp = lambda_path(&format!("{p}.zip_with.fn"), f, &ZIP_PARAMS);
                    let fenv = extend(env, &[(&f.params[0], elem), (&f.params[1], t)]);
                    elem = self.expr(&f.body, &fenv, None, &lp)?;
                    bounded = bounded || b;
                }
            }
        }
        Ok((elem, bounded))
    }
}

/// Type-checks a spec and decides boundedness. An unbounded pipeline is a
/// warning, or an error when `strict`.
pub fn check(spec: &PipelineSpec, strict: bool) -> Result<Checked, SpecError> {
    let mut tc = Tc { params: Vec::new() };
    let (elem, bounded) = tc.stream(&spec.stream, &Vec::new(), "$")?;
    let result = match &spec.reduce {
        Reduce::Sum => {
            if elem != Ty::Int {
                return err(
                    K::Type,
                    "$.reduce",
                    format!("sum needs int elements, found {elem}"),
                );
            }
            Ty::Int
        }
        Reduce::FoldCons => Ty::list(elem.clone()),
        Reduce::Fold { f, seed } => {
            let z = tc.expr(seed, &Vec::new(), None, "$.reduce.fold.seed")?;
            let lp = lambda_path("$.reduce.fold.fn", f, &FOLD_PARAMS);
            let env = vec![
                (f.params[0].clone(), z.clone()),
                (f.params[1].clone(), elem.clone()),
            ];
            tc.expect(&f.body, &env, &z, &lp)?;
            z
        }
    };
    let mut warnings = Vec::new();
    if !bounded {
        let msg = "infinite source (iota or unfold) is not bounded by a take";
        if strict {
            return err(K::Unbounded, "$", msg);
        }
        warnings.push(Warning {
            path: "$".into(),
            msg: msg.into(),
        });
    }
    Ok(Checked {
        params: tc.params,
        elem,
        result,
        bounded,
        warnings,
    })
}

// ---------------------------------------------------------------- compiling

const CHECKED: &str = "spec was type-checked";

struct Cx {
    session: Session,
    params: HashMap<String, Code>,
}

type Env = Vec<(String, Code)>;

fn build(cx: &Cx, e: &SExpr, env: &Env, hint: Option<&Ty>) -> Code {
    let SExpr::App(op, args) = e else {
        return match e {
            SExpr::Int(n) => st::lit(*n).erase(),
            SExpr::Bool(true) => st::tru().erase(),
            SExpr::Bool(false) => st::fls().erase(),
            SExpr::Var(x) => env
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .expect(CHECKED)
                .1
                .clone(),
            SExpr::Param(x) => cx.params[x].clone(),
            SExpr::App(..) => unreachable!(),
        };
    };
    let int = |i: usize| {
        build(cx, &args[i], env, Some(&Ty::Int))
            .cast::<i64>()
            .expect(CHECKED)
    };
    let boolean = |i: usize| {
        build(cx, &args[i], env, Some(&Ty::Bool))
            .cast::<bool>()
            .expect(CHECKED)
    };
    match op {
        SOp::Add => st::add(&int(0), &int(1)).erase(),
        SOp::Sub => st::sub(&int(0), &int(1)).erase(),
        SOp::Mul => st::mul(&int(0), &int(1)).erase(),
        SOp::Div => st::div(&int(0), &int(1)).erase(),
        SOp::Mod => st::mod_(&int(0), &int(1)).erase(),
        SOp::Min => st::min_(&int(0), &int(1)).erase(),
        SOp::Lt => st::lt(&int(0), &int(1)).erase(),
        SOp::Le => st::le(&int(0), &int(1)).erase(),
        SOp::Eq => st::eq(&int(0), &int(1)).erase(),
        SOp::Gt => st::gt(&int(0), &int(1)).erase(),
        SOp::Ge => st::ge(&int(0), &int(1)).erase(),
        SOp::And => st::and_(&boolean(0), &boolean(1)).erase(),
        SOp::Or => st::or_(&boolean(0), &boolean(1)).erase(),
        SOp::Not => st::not_(&boolean(0)).erase(),
        SOp::Pair => {
            let (ha, hb) = pair_parts(hint);
            let a = build(cx, &args[0], env, ha.as_ref());
            let b = build(cx, &args[1], env, hb.as_ref());
            st::pair_e(&a, &b).erase()
        }
        SOp::Fst | SOp::Snd => {
            let p = build(cx, &args[0], env, None)
                .cast::<(Dyn, Dyn)>()
                .expect(CHECKED);
            if *op == SOp::Fst {
                st::fst_e(&p)
            } else {
                st::snd_e(&p)
            }
        }
        SOp::Cons => {
            let h = build(cx, &args[0], env, Some(&list_elem(hint)));
            let t = build(cx, &args[1], env, Some(&Ty::list(h.ty().clone())))
                .cast::<List<Dyn>>()
                .expect(CHECKED);
            st::cons_e(&h, &t).erase()
        }
        SOp::Nil => st::nil_of(list_elem(hint)).erase(),
        SOp::Some => {
            let p = option_payload(hint);
            st::some_e(&build(cx, &args[0], env, p.as_ref())).erase()
        }
        SOp::SomePair => {
            let p = option_payload(hint);
            let (ha, hb) = pair_parts(p.as_ref());
            let a = build(cx, &args[0], env, ha.as_ref());
            let b = build(cx, &args[1], env, hb.as_ref());
            st::some_pair_e(&a, &b).erase()
        }
        SOp::None => st::none_of(option_payload(hint).unwrap_or(Ty::Int)).erase(),
    }
}

fn build_stream(cx: &Rc<Cx>, s: &StreamSpec, env: &Env) -> Pipeline {
    let mut p: Pipeline = match &s.source {
        Source::OfArr(a) => {
            let arr = cx.params[a].clone().cast::<Arr>().expect(CHECKED);
            cx.session.of_arr(arr).erase()
        }
        Source::Iota(e) => {
            let n = build(cx, e, env, Some(&Ty::Int))
                .cast::<i64>()
                .expect(CHECKED);
            cx.session.iota(n).erase()
        }
        Source::Unfold { param, seed, step } => {
            let z = build(cx, seed, env, None);
            let hint = unfold_hint(z.ty());
            let (cx2, env, param, step) = (cx.clone(), env.clone(), param.clone(), step.clone());
            cx.session.unfold::<Dyn, Dyn>(
                move |sv: &Code| {
                    let env = extend(&env, &[(&param, sv.clone())]);
                    build(&cx2, &step, &env, Some(&hint))
                        .cast::<Option<(Dyn, Dyn)>>()
                        .expect(CHECKED)
                },
                z,
            )
        }
    };
    for op in &s.ops {
        p = match op {
            Op::Map(l) => {
                let (cx, env, l) = (cx.clone(), env.clone(), l.clone());
                p.map(move |x: &Code| {
                    build(
                        &cx,
                        &l.body,
                        &extend(&env, &[(&l.params[0], x.clone())]),
                        None,
                    )
                })
            }
            Op::Filter(l) => {
                let (cx, env, l) = (cx.clone(), env.clone(), l.clone());
                p.filter(move |x: &Code| {
                    let env = extend(&env, &[(&l.params[0], x.clone())]);
                    build(&cx, &l.body, &env, Some(&Ty::Bool))
                        .cast::<bool>()
                        .expect(CHECKED)
                })
            }
            Op::Take(e) => {
                let n = build(cx, e, env, Some(&Ty::Int))
                    .cast::<i64>()
                    .expect(CHECKED);
                p.take(n)
            }
            Op::FlatMap { param, stream } => {
                let (cx, env, param, stream) =
                    (cx.clone(), env.clone(), param.clone(), stream.clone());
                p.flat_map(move |x: &Code| {
                    build_stream(&cx, &stream, &extend(&env, &[(&param, x.clone())]))
                })
            }
            Op::ZipWith { stream, f } => {
                let q = build_stream(cx, stream, env);
                let (cx, env, f) = (cx.clone(), env.clone(), f.clone());
                p.zip_with(q, move |x: &Code, y: &Code| {
                    let env = extend(
                        &env,
                        &[(&f.params[0], x.clone()), (&f.params[1], y.clone())],
                    );
                    build(&cx, &f.body, &env, None)
                })
            }
        };
    }
    p
}

/// Compiles a spec in a fresh session.
pub fn compile(spec: &PipelineSpec) -> Result<Program, SpecError> {
    compile_in(&Session::new(), spec)
}

/// Compiles a spec in `session`, whose zip trace then records how each
/// zip was handled.
pub fn compile_in(session: &Session, spec: &PipelineSpec) -> Result<Program, SpecError> {
    let checked = check(spec, false)?;
    let mut params = HashMap::new();
    for (name, ty) in &checked.params {
        let code = match ty {
            Ty::ArrInt => session.arr_param(name).erase(),
            _ => session.int_param(name).erase(),
        };
        params.insert(name.clone(), code);
    }
    let cx = Rc::new(Cx {
        session: session.clone(),
        params,
    });
    let p = build_stream(&cx, &spec.stream, &Vec::new());
    Ok(match &spec.reduce {
        Reduce::Sum => p.sum_dyn(),
        Reduce::FoldCons => p.fold(
            |acc: &Code, a: &Code| {
                let acc = acc.clone().cast::<List<Dyn>>().expect(CHECKED);
                st::cons_e(a, &acc).erase()
            },
            st::nil_of(checked.elem.clone()).erase(),
        ),
        Reduce::Fold { f, seed } => {
            let z = build(&cx, seed, &Vec::new(), None);
            let zt = z.ty().clone();
            p.fold(
                |acc: &Code, a: &Code| {
                    let env = vec![
                        (f.params[0].clone(), acc.clone()),
                        (f.params[1].clone(), a.clone()),
                    ];
                    build(&cx, &f.body, &env, Some(&zt))
                },
                z,
            )
        }
    })
}

#[cfg(test)]
mod tests;
