//! The target imperative language that generated pipelines are made of.
//!
//! Programs are trees of [`Stmt`] and [`Expr`] nodes. Binders (`let`, cells,
//! `for` indices, match arms and procedures) always introduce names drawn from
//! a [`NameSession`], so every binder in a generated program is unique. Every
//! expression node carries a `user` flag recording whether it was built by a
//! user-supplied generator (see [`crate::staged`]); the allocation accounting
//! in [`alloc`] and [`eval`] relies on it.

pub mod alloc;
pub mod check;
pub mod eval;
pub mod gensym;
pub mod parse;
pub mod print;
pub mod shape;

use std::fmt;
use std::sync::Arc;

pub use alloc::{alloc_scan, AllocReport, AllocSite};
pub use check::{scope_check, type_check, ScopeViolation, TypeError};
pub use eval::{eval, eval_with_fuel, Counters, Datum, EvalError, DEFAULT_FUEL};
pub use gensym::NameSession;
pub use parse::{parse_program, ParseError};
pub use print::print_program;
pub use shape::{summarize, ShapeSummary};

/// Types of the IR. All values are first-order except `Proc`, a nullary
/// procedure returning unit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Int,
    Bool,
    Unit,
    ArrInt,
    Pair(Box<Ty>, Box<Ty>),
    List(Box<Ty>),
    Option(Box<Ty>),
    Proc,
}

impl Ty {
    pub fn pair(a: Ty, b: Ty) -> Ty {
        Ty::Pair(Box::new(a), Box::new(b))
    }

    pub fn list(t: Ty) -> Ty {
        Ty::List(Box::new(t))
    }

    pub fn option(t: Ty) -> Ty {
        Ty::Option(Box::new(t))
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => write!(f, "int"),
            Ty::Bool => write!(f, "bool"),
            Ty::Unit => write!(f, "unit"),
            Ty::ArrInt => write!(f, "int[]"),
            Ty::Pair(a, b) => write!(f, "({a}, {b})"),
            Ty::List(t) => write!(f, "list<{t}>"),
            Ty::Option(t) => write!(f, "option<{t}>"),
            Ty::Proc => write!(f, "proc"),
        }
    }
}

/// A hygienic name: a readable hint plus a session-unique index, printed as
/// `hint_index`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    id: u32,
    hint: Arc<str>,
}

impl Name {
    pub fn new(hint: &str, id: u32) -> Self {
        Name {
            id,
            hint: Arc::from(hint),
        }
    }

    pub fn hint(&self) -> &str {
        &self.hint
    }

    pub fn id(&self) -> u32 {
        self.id
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.hint, self.id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    /// Set only on nodes built by user generators.
    pub user: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Unit,
    Var(Name),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    ArrLen(Box<Expr>),
    ArrGet(Box<Expr>, Box<Expr>),
    CellGet(Name),
    Pair(Box<Expr>, Box<Expr>),
    Fst(Box<Expr>),
    Snd(Box<Expr>),
    Cons(Box<Expr>, Box<Expr>),
    Nil,
    Some(Box<Expr>),
    None,
    SomePair(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, user: false }
    }

    /// Marks this node (not its children) as user-built.
    pub fn tagged(mut self) -> Self {
        self.user = true;
        self
    }

    pub fn int(n: i64) -> Self {
        Expr::new(ExprKind::Int(n))
    }

    pub fn bool(b: bool) -> Self {
        Expr::new(ExprKind::Bool(b))
    }

    pub fn var(n: &Name) -> Self {
        Expr::new(ExprKind::Var(n.clone()))
    }

    pub fn cell_get(n: &Name) -> Self {
        Expr::new(ExprKind::CellGet(n.clone()))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::Bin(op, Box::new(a), Box::new(b)))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::Cmp(op, Box::new(a), Box::new(b)))
    }

    pub fn and(a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::And(Box::new(a), Box::new(b)))
    }

    pub fn or(a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::Or(Box::new(a), Box::new(b)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Expr) -> Self {
        Expr::new(ExprKind::Not(Box::new(a)))
    }

    pub fn arr_len(a: Expr) -> Self {
        Expr::new(ExprKind::ArrLen(Box::new(a)))
    }

    pub fn arr_get(a: Expr, i: Expr) -> Self {
        Expr::new(ExprKind::ArrGet(Box::new(a), Box::new(i)))
    }

    pub fn pair(a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::Pair(Box::new(a), Box::new(b)))
    }

    pub fn fst(a: Expr) -> Self {
        Expr::new(ExprKind::Fst(Box::new(a)))
    }

    pub fn snd(a: Expr) -> Self {
        Expr::new(ExprKind::Snd(Box::new(a)))
    }

    pub fn cons(h: Expr, t: Expr) -> Self {
        Expr::new(ExprKind::Cons(Box::new(h), Box::new(t)))
    }

    pub fn nil() -> Self {
        Expr::new(ExprKind::Nil)
    }

    pub fn some(a: Expr) -> Self {
        Expr::new(ExprKind::Some(Box::new(a)))
    }

    pub fn none() -> Self {
        Expr::new(ExprKind::None)
    }

    pub fn some_pair(a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::SomePair(Box::new(a), Box::new(b)))
    }

    /// `not (e = None)`
    pub fn is_some(e: Expr) -> Self {
        Expr::not(Expr::cmp(CmpOp::Eq, e, Expr::none()))
    }

    /// True for the nodes that construct a runtime data structure.
    pub fn is_alloc(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::Pair(..) | ExprKind::Cons(..) | ExprKind::Some(_) | ExprKind::SomePair(..)
        )
    }

    pub fn children(&self) -> Vec<&Expr> {
        use ExprKind::*;
        match &self.kind {
            Int(_) | Bool(_) | Unit | Var(_) | CellGet(_) | Nil | None => vec![],
            Not(a) | ArrLen(a) | Fst(a) | Snd(a) | Some(a) => vec![a],
            Bin(_, a, b)
            | Cmp(_, a, b)
            | And(a, b)
            | Or(a, b)
            | ArrGet(a, b)
            | Pair(a, b)
            | Cons(a, b)
            | SomePair(a, b) => vec![a, b],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Expr> {
        use ExprKind::*;
        match &mut self.kind {
            Int(_) | Bool(_) | Unit | Var(_) | CellGet(_) | Nil | None => vec![],
            Not(a) | ArrLen(a) | Fst(a) | Snd(a) | Some(a) => vec![a],
            Bin(_, a, b)
            | Cmp(_, a, b)
            | And(a, b)
            | Or(a, b)
            | ArrGet(a, b)
            | Pair(a, b)
            | Cons(a, b)
            | SomePair(a, b) => vec![a, b],
        }
    }

    /// Visits every node of the expression tree, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    fn strip_tags(&mut self) {
        self.user = false;
        for c in self.children_mut() {
            c.strip_tags();
        }
    }

    fn rename(&mut self, map: &dyn Fn(&Name) -> Name) {
        match &mut self.kind {
            ExprKind::Var(n) | ExprKind::CellGet(n) => *n = map(n),
            _ => {}
        }
        for c in self.children_mut() {
            c.rename(map);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Let {
        name: Name,
        ty: Ty,
        rhs: Expr,
        body: Box<Stmt>,
    },
    CellNew {
        name: Name,
        ty: Ty,
        init: Expr,
        body: Box<Stmt>,
    },
    CellSet(Name, Expr),
    /// Runs `body` with `idx` = 0, 1, ..., `upb` (inclusive).
    For {
        idx: Name,
        upb: Expr,
        body: Box<Stmt>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
    },
    /// Destructures an `option<(a, b)>`.
    MatchOptPair {
        scrutinee: Expr,
        el: Name,
        st: Name,
        some: Box<Stmt>,
        none: Box<Stmt>,
    },
    /// Destructures an `option<t>`.
    MatchOpt {
        scrutinee: Expr,
        name: Name,
        some: Box<Stmt>,
        none: Box<Stmt>,
    },
    ProcDef {
        name: Name,
        body: Box<Stmt>,
        scope: Box<Stmt>,
    },
    ProcCall(Name),
    Seq(Vec<Stmt>),
    Skip,
}

impl Stmt {
    pub fn let_(name: Name, ty: Ty, rhs: Expr, body: Stmt) -> Self {
        Stmt::Let {
            name,
            ty,
            rhs,
            body: Box::new(body),
        }
    }

    pub fn cell(name: Name, ty: Ty, init: Expr, body: Stmt) -> Self {
        Stmt::CellNew {
            name,
            ty,
            init,
            body: Box::new(body),
        }
    }

    pub fn set(name: &Name, e: Expr) -> Self {
        Stmt::CellSet(name.clone(), e)
    }

    /// `c := !c + 1`
    pub fn incr(name: &Name) -> Self {
        Stmt::set(
            name,
            Expr::bin(BinOp::Add, Expr::cell_get(name), Expr::int(1)),
        )
    }

    /// `c := !c - 1`
    pub fn decr(name: &Name) -> Self {
        Stmt::set(
            name,
            Expr::bin(BinOp::Sub, Expr::cell_get(name), Expr::int(1)),
        )
    }

    pub fn for_(idx: Name, upb: Expr, body: Stmt) -> Self {
        Stmt::For {
            idx,
            upb,
            body: Box::new(body),
        }
    }

    pub fn while_(cond: Expr, body: Stmt) -> Self {
        Stmt::While {
            cond,
            body: Box::new(body),
        }
    }

    pub fn if_(cond: Expr, then: Stmt, els: Option<Stmt>) -> Self {
        Stmt::If {
            cond,
            then: Box::new(then),
            els: els.map(Box::new),
        }
    }

    pub fn seq(items: impl IntoIterator<Item = Stmt>) -> Self {
        Stmt::Seq(items.into_iter().collect())
    }

    /// Direct sub-statements, in source order.
    pub fn children(&self) -> Vec<&Stmt> {
        match self {
            Stmt::Let { body, .. }
            | Stmt::CellNew { body, .. }
            | Stmt::For { body, .. }
            | Stmt::While { body, .. } => vec![body],
            Stmt::If { then, els, .. } => {
                let mut v: Vec<&Stmt> = vec![then];
                if let Some(e) = els {
                    v.push(e);
                }
                v
            }
            Stmt::MatchOptPair { some, none, .. } | Stmt::MatchOpt { some, none, .. } => {
                vec![some, none]
            }
            Stmt::ProcDef { body, scope, .. } => vec![body, scope],
            Stmt::Seq(items) => items.iter().collect(),
            Stmt::CellSet(..) | Stmt::ProcCall(_) | Stmt::Skip => vec![],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Stmt> {
        match self {
            Stmt::Let { body, .. }
            | Stmt::CellNew { body, .. }
            | Stmt::For { body, .. }
            | Stmt::While { body, .. } => vec![body],
            Stmt::If { then, els, .. } => {
                let mut v: Vec<&mut Stmt> = vec![then];
                if let Some(e) = els {
                    v.push(e);
                }
                v
            }
            Stmt::MatchOptPair { some, none, .. } | Stmt::MatchOpt { some, none, .. } => {
                vec![some, none]
            }
            Stmt::ProcDef { body, scope, .. } => vec![body, scope],
            Stmt::Seq(items) => items.iter_mut().collect(),
            Stmt::CellSet(..) | Stmt::ProcCall(_) | Stmt::Skip => vec![],
        }
    }

    /// Expressions held directly by this statement.
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Stmt::Let { rhs: e, .. }
            | Stmt::CellNew { init: e, .. }
            | Stmt::CellSet(_, e)
            | Stmt::For { upb: e, .. }
            | Stmt::While { cond: e, .. }
            | Stmt::If { cond: e, .. }
            | Stmt::MatchOptPair { scrutinee: e, .. }
            | Stmt::MatchOpt { scrutinee: e, .. } => vec![e],
            _ => vec![],
        }
    }

    fn exprs_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Stmt::Let { rhs: e, .. }
            | Stmt::CellNew { init: e, .. }
            | Stmt::CellSet(_, e)
            | Stmt::For { upb: e, .. }
            | Stmt::While { cond: e, .. }
            | Stmt::If { cond: e, .. }
            | Stmt::MatchOptPair { scrutinee: e, .. }
            | Stmt::MatchOpt { scrutinee: e, .. } => vec![e],
            _ => vec![],
        }
    }

    /// Visits every statement, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Canonical form: sequences flattened, `Skip` dropped from sequences,
    /// singleton sequences unwrapped, and statements following a binder inside
    /// a sequence moved into the binder's scope. Printing is invariant under
    /// normalization, and the parser produces normalized trees.
    pub fn normalize(self) -> Stmt {
        match self {
            Stmt::Seq(items) => {
                let mut flat = Vec::new();
                flatten_into(items, &mut flat);
                build_block(flat)
            }
            other => normalize_one(other),
        }
    }
}

fn flatten_into(items: Vec<Stmt>, out: &mut Vec<Stmt>) {
    for s in items {
        match s {
            Stmt::Seq(inner) => flatten_into(inner, out),
            Stmt::Skip => {}
            other => out.push(other),
        }
    }
}

fn is_binder(s: &Stmt) -> bool {
    matches!(
        s,
        Stmt::Let { .. } | Stmt::CellNew { .. } | Stmt::ProcDef { .. }
    )
}

/// Folds a flat statement list into canonical form, right to left.
fn build_block(items: Vec<Stmt>) -> Stmt {
    let mut acc: Vec<Stmt> = Vec::new();
    for s in items.into_iter().rev() {
        if is_binder(&s) {
            let tail = match acc.len() {
                0 => Stmt::Skip,
                _ => {
                    acc.reverse();
                    Stmt::Seq(std::mem::take(&mut acc))
                }
            };
            acc.push(attach_tail(s, tail));
        } else {
            acc.push(normalize_one(s));
        }
    }
    acc.reverse();
    match acc.len() {
        0 => Stmt::Skip,
        1 => acc.pop().unwrap(),
        _ => Stmt::Seq(acc),
    }
}

/// Appends `tail` to the innermost scope of binder `s` and normalizes.
fn attach_tail(s: Stmt, tail: Stmt) -> Stmt {
    let join = |body: Stmt| -> Stmt {
        match tail {
            Stmt::Skip => body.normalize(),
            ref t => Stmt::Seq(vec![body, t.clone()]).normalize(),
        }
    };
    match s {
        Stmt::Let {
            name,
            ty,
            rhs,
            body,
        } => Stmt::Let {
            name,
            ty,
            rhs,
            body: Box::new(join(*body)),
        },
        Stmt::CellNew {
            name,
            ty,
            init,
            body,
        } => Stmt::CellNew {
            name,
            ty,
            init,
            body: Box::new(join(*body)),
        },
        Stmt::ProcDef { name, body, scope } => Stmt::ProcDef {
            name,
            body: Box::new(body.normalize()),
            scope: Box::new(join(*scope)),
        },
        other => other,
    }
}

fn normalize_one(s: Stmt) -> Stmt {
    match s {
        Stmt::Seq(_) => s.normalize(),
        Stmt::Let { .. } | Stmt::CellNew { .. } | Stmt::ProcDef { .. } => {
            attach_tail(s, Stmt::Skip)
        }
        Stmt::For { idx, upb, body } => Stmt::For {
            idx,
            upb,
            body: Box::new(body.normalize()),
        },
        Stmt::While { cond, body } => Stmt::While {
            cond,
            body: Box::new(body.normalize()),
        },
        Stmt::If { cond, then, els } => Stmt::If {
            cond,
            then: Box::new(then.normalize()),
            els: els.map(|e| Box::new(e.normalize())),
        },
        Stmt::MatchOptPair {
            scrutinee,
            el,
            st,
            some,
            none,
        } => Stmt::MatchOptPair {
            scrutinee,
            el,
            st,
            some: Box::new(some.normalize()),
            none: Box::new(none.normalize()),
        },
        Stmt::MatchOpt {
            scrutinee,
            name,
            some,
            none,
        } => Stmt::MatchOpt {
            scrutinee,
            name,
            some: Box::new(some.normalize()),
            none: Box::new(none.normalize()),
        },
        other => other,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub params: Vec<(Name, Ty)>,
    pub body: Stmt,
    /// The cell whose final content is the program's answer.
    pub result: (Name, Ty),
}

impl Program {
    /// Copy of the program with every `user` flag cleared and the body
    /// normalized; this is what survives a print/parse round trip.
    pub fn structural(&self) -> Program {
        let mut p = self.clone();
        p.body = p.body.normalize();
        strip_stmt(&mut p.body);
        p
    }

    /// Renames every name to `hint_k`, numbering binders in traversal order.
    /// Two programs are alpha-equivalent iff their canonical forms are equal.
    pub fn canonical(&self) -> Program {
        let mut order: Vec<Name> = self.params.iter().map(|(n, _)| n.clone()).collect();
        collect_binders(&self.body, &mut order);
        let table: std::collections::HashMap<Name, Name> = order
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), Name::new(n.hint(), i as u32 + 1)))
            .collect();
        let map = |n: &Name| table.get(n).cloned().unwrap_or_else(|| n.clone());
        let mut p = self.clone();
        for (n, _) in &mut p.params {
            *n = map(n);
        }
        p.result.0 = map(&p.result.0);
        rename_stmt(&mut p.body, &map);
        p
    }

    pub fn alpha_eq(&self, other: &Program) -> bool {
        self.canonical() == other.canonical()
    }

    /// Orders named inputs to match `params`, looking each parameter up by
    /// its hint.
    pub fn bind_inputs(
        &self,
        inputs: &std::collections::HashMap<String, Datum>,
    ) -> Result<Vec<Datum>, EvalError> {
        self.params
            .iter()
            .map(|(n, _)| {
                inputs
                    .get(n.hint())
                    .cloned()
                    .ok_or_else(|| EvalError::MissingInput(n.hint().to_string()))
            })
            .collect()
    }
}

fn strip_stmt(s: &mut Stmt) {
    for e in s.exprs_mut() {
        e.strip_tags();
    }
    for c in s.children_mut() {
        strip_stmt(c);
    }
}

/// Binder names of `s` in pre-order.
pub(crate) fn binder_of(s: &Stmt) -> Vec<&Name> {
    match s {
        Stmt::Let { name, .. }
        | Stmt::CellNew { name, .. }
        | Stmt::ProcDef { name, .. }
        | Stmt::MatchOpt { name, .. } => vec![name],
        Stmt::For { idx, .. } => vec![idx],
        Stmt::MatchOptPair { el, st, .. } => vec![el, st],
        _ => vec![],
    }
}

fn collect_binders(s: &Stmt, out: &mut Vec<Name>) {
    s.walk(&mut |st| {
        for n in binder_of(st) {
            out.push(n.clone());
        }
    });
}

fn rename_stmt(s: &mut Stmt, map: &dyn Fn(&Name) -> Name) {
    match s {
        Stmt::Let { name, .. }
        | Stmt::CellNew { name, .. }
        | Stmt::ProcDef { name, .. }
        | Stmt::MatchOpt { name, .. }
        | Stmt::CellSet(name, _)
        | Stmt::ProcCall(name) => *name = map(name),
        Stmt::For { idx, .. } => *idx = map(idx),
        Stmt::MatchOptPair { el, st, .. } => {
            *el = map(el);
            *st = map(st);
        }
        _ => {}
    }
    for e in s.exprs_mut() {
        e.rename(map);
    }
    for c in s.children_mut() {
        rename_stmt(c, map);
    }
}

/// Applies `f` to every expression node of every statement in `s`.
pub fn walk_exprs<'a>(s: &'a Stmt, f: &mut impl FnMut(&'a Expr)) {
    s.walk(&mut |st| {
        for e in st.exprs() {
            e.walk(f);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(h: &str, i: u32) -> Name {
        Name::new(h, i)
    }

    #[test]
    fn normalize_moves_tail_into_binder_scope() {
        let s = Stmt::seq([
            Stmt::cell(n("c", 1), Ty::Int, Expr::int(0), Stmt::Skip),
            Stmt::incr(&n("c", 1)),
            Stmt::Skip,
        ]);
        let want = Stmt::cell(n("c", 1), Ty::Int, Expr::int(0), Stmt::incr(&n("c", 1)));
        assert_eq!(s.normalize(), want);
    }

    #[test]
    fn canonical_forgets_gensym_offsets() {
        let mk = |base: u32| Program {
            params: vec![(n("arr", base), Ty::ArrInt)],
            body: Stmt::cell(
                n("s", base + 1),
                Ty::Int,
                Expr::arr_len(Expr::var(&n("arr", base))),
                Stmt::Skip,
            ),
            result: (n("s", base + 1), Ty::Int),
        };
        assert!(mk(1).alpha_eq(&mk(40)));
        assert_ne!(mk(1), mk(40));
    }
}
