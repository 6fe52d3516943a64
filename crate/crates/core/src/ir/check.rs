//! Well-scopedness and monomorphic type checking.

use std::collections::HashMap;
use std::fmt;

use super::print::{expr_to_string, stmt_head};
use super::{CmpOp, Expr, ExprKind, Name, Program, Stmt, Ty};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Value,
    Cell,
    Proc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Unbound,
    /// A cell read or written through a name that is not a cell.
    NotACell,
    /// A cell used as a plain value or called as a procedure.
    CellAsValue,
    /// A binder reusing a name already in scope.
    Rebound,
    /// The program's result cell is not declared on the body's top-level spine.
    ResultNotDeclared,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopeViolation {
    pub name: String,
    pub kind: ViolationKind,
}

impl fmt::Display for ScopeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.name)
    }
}

struct Scopes {
    stack: Vec<(Name, Kind)>,
    violations: Vec<ScopeViolation>,
}

impl Scopes {
    fn lookup(&self, n: &Name) -> Option<Kind> {
        self.stack
            .iter()
            .rev()
            .find(|(m, _)| m == n)
            .map(|(_, k)| *k)
    }

    fn report(&mut self, n: &Name, kind: ViolationKind) {
        self.violations.push(ScopeViolation {
            name: n.to_string(),
            kind,
        });
    }

    fn bind(&mut self, n: &Name, k: Kind) {
        if self.lookup(n).is_some() {
            self.report(n, ViolationKind::Rebound);
        }
        self.stack.push((n.clone(), k));
    }

    fn expr(&mut self, e: &Expr) {
        e.walk(&mut |node| match &node.kind {
            ExprKind::Var(n) => match self.lookup(n) {
                None => self.report(n, ViolationKind::Unbound),
                Some(Kind::Cell) => self.report(n, ViolationKind::CellAsValue),
                Some(_) => {}
            },
            ExprKind::CellGet(n) => self.cell_use(n),
            _ => {}
        });
    }

    fn cell_use(&mut self, n: &Name) {
        match self.lookup(n) {
            None => self.report(n, ViolationKind::Unbound),
            Some(Kind::Cell) => {}
            Some(_) => self.report(n, ViolationKind::NotACell),
        }
    }

    fn scoped(&mut self, binders: &[(&Name, Kind)], s: &Stmt) {
        let mark = self.stack.len();
        for (n, k) in binders {
            self.bind(n, *k);
        }
        self.stmt(s);
        self.stack.truncate(mark);
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Let {
                name, rhs, body, ..
            } => {
                self.expr(rhs);
                self.scoped(&[(name, Kind::Value)], body);
            }
            Stmt::CellNew {
                name, init, body, ..
            } => {
                self.expr(init);
                self.scoped(&[(name, Kind::Cell)], body);
            }
            Stmt::CellSet(n, e) => {
                self.cell_use(n);
                self.expr(e);
            }
            Stmt::For { idx, upb, body } => {
                self.expr(upb);
                self.scoped(&[(idx, Kind::Value)], body);
            }
            Stmt::While { cond, body } => {
                self.expr(cond);
                self.stmt(body);
            }
            Stmt::If { cond, then, els } => {
                self.expr(cond);
                self.stmt(then);
                if let Some(e) = els {
                    self.stmt(e);
                }
            }
            Stmt::MatchOptPair {
                scrutinee,
                el,
                st,
                some,
                none,
            } => {
                self.expr(scrutinee);
                self.scoped(&[(el, Kind::Value), (st, Kind::Value)], some);
                self.stmt(none);
            }
            Stmt::MatchOpt {
                scrutinee,
                name,
                some,
                none,
            } => {
                self.expr(scrutinee);
                self.scoped(&[(name, Kind::Value)], some);
                self.stmt(none);
            }
            Stmt::ProcDef { name, body, scope } => {
                self.stmt(body);
                self.scoped(&[(name, Kind::Proc)], scope);
            }
            Stmt::ProcCall(n) => match self.lookup(n) {
                None => self.report(n, ViolationKind::Unbound),
                Some(Kind::Cell) => self.report(n, ViolationKind::CellAsValue),
                Some(_) => {}
            },
            Stmt::Seq(items) => {
                for i in items {
                    self.stmt(i);
                }
            }
            Stmt::Skip => {}
        }
    }
}

/// Finds the declaration of cell `n` on the top-level spine of `s` (binder
/// bodies and sequence items, not loop or branch bodies).
pub(crate) fn spine_cell<'a>(s: &'a Stmt, n: &Name) -> Option<&'a Ty> {
    match s {
        Stmt::CellNew { name, ty, body, .. } => {
            if name == n {
                Some(ty)
            } else {
                spine_cell(body, n)
            }
        }
        Stmt::Let { body, .. } => spine_cell(body, n),
        Stmt::ProcDef { scope, .. } => spine_cell(scope, n),
        Stmt::Seq(items) => items.iter().find_map(|i| spine_cell(i, n)),
        _ => None,
    }
}

/// Checks that every name use is bound by an enclosing binder of the right
/// kind, that no binder shadows a name in scope, and that the result cell is
/// declared in the body.
pub fn scope_check(p: &Program) -> Result<(), Vec<ScopeViolation>> {
    let mut sc = Scopes {
        stack: Vec::new(),
        violations: Vec::new(),
    };
    for (n, _) in &p.params {
        sc.bind(n, Kind::Value);
    }
    sc.stmt(&p.body);
    if spine_cell(&p.body, &p.result.0).is_none() {
        sc.report(&p.result.0, ViolationKind::ResultNotDeclared);
    }
    if sc.violations.is_empty() {
        Ok(())
    } else {
        Err(sc.violations)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("type error at `{node}`: expected {expected}, found {actual}")]
pub struct TypeError {
    pub node: String,
    pub expected: String,
    pub actual: String,
}

fn mismatch(node: String, expected: impl fmt::Display, actual: impl fmt::Display) -> TypeError {
    TypeError {
        node,
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}

#[derive(Default)]
struct TyEnv {
    vars: HashMap<Name, (Kind, Ty)>,
}

impl TyEnv {
    fn get(&self, n: &Name) -> Result<&(Kind, Ty), TypeError> {
        self.vars
            .get(n)
            .ok_or_else(|| mismatch(n.to_string(), "a bound name", "unbound"))
    }

    fn infer(&self, e: &Expr) -> Result<Ty, TypeError> {
        use ExprKind::*;
        let here = || expr_to_string(e);
        Ok(match &e.kind {
            Int(_) => Ty::Int,
            Bool(_) => Ty::Bool,
            Unit => Ty::Unit,
            Var(n) => self.get(n)?.1.clone(),
            CellGet(n) => match self.get(n)? {
                (Kind::Cell, t) => t.clone(),
                (_, t) => return Err(mismatch(here(), "a cell", t)),
            },
            Bin(_, a, b) => {
                self.check(a, &Ty::Int)?;
                self.check(b, &Ty::Int)?;
                Ty::Int
            }
            Cmp(op, a, b) => {
                if *op == CmpOp::Eq {
                    match self.infer(a) {
                        Ok(t) => self.check(b, &t)?,
                        Err(_) => {
                            let t = self.infer(b)?;
                            self.check(a, &t)?;
                        }
                    }
                } else {
                    self.check(a, &Ty::Int)?;
                    self.check(b, &Ty::Int)?;
                }
                Ty::Bool
            }
            And(a, b) | Or(a, b) => {
                self.check(a, &Ty::Bool)?;
                self.check(b, &Ty::Bool)?;
                Ty::Bool
            }
            Not(a) => {
                self.check(a, &Ty::Bool)?;
                Ty::Bool
            }
            ArrLen(a) => {
                self.check(a, &Ty::ArrInt)?;
                Ty::Int
            }
            ArrGet(a, i) => {
                self.check(a, &Ty::ArrInt)?;
                self.check(i, &Ty::Int)?;
                Ty::Int
            }
            Pair(a, b) => Ty::pair(self.infer(a)?, self.infer(b)?),
            Fst(a) => match self.infer(a)? {
                Ty::Pair(x, _) => *x,
                t => return Err(mismatch(here(), "a pair", t)),
            },
            Snd(a) => match self.infer(a)? {
                Ty::Pair(_, y) => *y,
                t => return Err(mismatch(here(), "a pair", t)),
            },
            Cons(h, t) => {
                let th = self.infer(h)?;
                let lt = Ty::list(th);
                self.check(t, &lt)?;
                lt
            }
            Some(a) => Ty::option(self.infer(a)?),
            SomePair(a, b) => Ty::option(Ty::pair(self.infer(a)?, self.infer(b)?)),
            Nil => return Err(mismatch(here(), "an annotated context", "[]")),
            None => return Err(mismatch(here(), "an annotated context", "None")),
        })
    }

    fn check(&self, e: &Expr, want: &Ty) -> Result<(), TypeError> {
        use ExprKind::*;
        match (&e.kind, want) {
            (Nil, Ty::List(_)) | (None, Ty::Option(_)) => Ok(()),
            (Cons(h, t), Ty::List(el)) => {
                self.check(h, el)?;
                self.check(t, want)
            }
            (Some(a), Ty::Option(el)) => self.check(a, el),
            (SomePair(a, b), Ty::Option(el)) => match &**el {
                Ty::Pair(x, y) => {
                    self.check(a, x)?;
                    self.check(b, y)
                }
                _ => Err(mismatch(expr_to_string(e), want, "option of a pair")),
            },
            (Pair(a, b), Ty::Pair(x, y)) => {
                self.check(a, x)?;
                self.check(b, y)
            }
            (Nil, _) | (None, _) => Err(mismatch(expr_to_string(e), want, expr_to_string(e))),
            _ => {
                let got = self.infer(e)?;
                if &got == want {
                    Ok(())
                } else {
                    Err(mismatch(expr_to_string(e), want, got))
                }
            }
        }
    }

    fn with<T>(&mut self, binds: &[(&Name, Kind, Ty)], f: impl FnOnce(&mut Self) -> T) -> T {
        let saved: Vec<_> = binds
            .iter()
            .map(|(n, k, t)| {
                (
                    (*n).clone(),
                    self.vars.insert((*n).clone(), (*k, t.clone())),
                )
            })
            .collect();
        let r = f(self);
        for (n, old) in saved.into_iter().rev() {
            match old {
                Some(v) => {
                    self.vars.insert(n, v);
                }
                None => {
                    self.vars.remove(&n);
                }
            }
        }
        r
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), TypeError> {
        match s {
            Stmt::Let {
                name,
                ty,
                rhs,
                body,
            } => {
                self.check(rhs, ty)?;
                self.with(&[(name, Kind::Value, ty.clone())], |env| env.stmt(body))
            }
            Stmt::CellNew {
                name,
                ty,
                init,
                body,
            } => {
                self.check(init, ty)?;
                self.with(&[(name, Kind::Cell, ty.clone())], |env| env.stmt(body))
            }
            Stmt::CellSet(n, e) => match self.get(n)?.clone() {
                (Kind::Cell, t) => self.check(e, &t),
                (_, t) => Err(mismatch(stmt_head(s), "a cell", t)),
            },
            Stmt::For { idx, upb, body } => {
                self.check(upb, &Ty::Int)?;
                self.with(&[(idx, Kind::Value, Ty::Int)], |env| env.stmt(body))
            }
            Stmt::While { cond, body } => {
                self.check(cond, &Ty::Bool)?;
                self.stmt(body)
            }
            Stmt::If { cond, then, els } => {
                self.check(cond, &Ty::Bool)?;
                self.stmt(then)?;
                match els {
                    Some(e) => self.stmt(e),
                    None => Ok(()),
                }
            }
            Stmt::MatchOptPair {
                scrutinee,
                el,
                st,
                some,
                none,
            } => {
                let t = self.infer(scrutinee)?;
                let Ty::Option(inner) = &t else {
                    return Err(mismatch(stmt_head(s), "option<(_, _)>", t));
                };
                let Ty::Pair(a, b) = &**inner else {
                    return Err(mismatch(stmt_head(s), "option<(_, _)>", t));
                };
                let (a, b) = ((**a).clone(), (**b).clone());
                self.with(&[(el, Kind::Value, a), (st, Kind::Value, b)], |env| {
                    env.stmt(some)
                })?;
                self.stmt(none)
            }
            Stmt::MatchOpt {
                scrutinee,
                name,
                some,
                none,
            } => {
                let t = self.infer(scrutinee)?;
                let Ty::Option(inner) = t else {
                    return Err(mismatch(stmt_head(s), "option<_>", t));
                };
                self.with(&[(name, Kind::Value, *inner)], |env| env.stmt(some))?;
                self.stmt(none)
            }
            Stmt::ProcDef { name, body, scope } => {
                self.stmt(body)?;
                self.with(&[(name, Kind::Proc, Ty::Proc)], |env| env.stmt(scope))
            }
            Stmt::ProcCall(n) => match self.get(n)? {
                (Kind::Cell, t) => Err(mismatch(stmt_head(s), "a procedure", t.clone())),
                (_, Ty::Proc) => Ok(()),
                (_, t) => Err(mismatch(stmt_head(s), Ty::Proc, t.clone())),
            },
            Stmt::Seq(items) => items.iter().try_for_each(|i| self.stmt(i)),
            Stmt::Skip => Ok(()),
        }
    }
}

/// Monomorphic type checking over [`Ty`]. Assumes [`scope_check`] passed.
pub fn type_check(p: &Program) -> Result<(), TypeError> {
    let mut env = TyEnv::default();
    for (n, t) in &p.params {
        env.vars.insert(n.clone(), (Kind::Value, t.clone()));
    }
    env.stmt(&p.body)?;
    match spine_cell(&p.body, &p.result.0) {
        Some(t) if *t == p.result.1 => Ok(()),
        Some(t) => Err(mismatch(p.result.0.to_string(), &p.result.1, t)),
        None => Err(mismatch(
            p.result.0.to_string(),
            "a declared cell",
            "nothing",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{BinOp, NameSession};

    #[test]
    fn bound_use_is_ok() {
        let g = NameSession::new();
        let (x, s) = (g.fresh("x"), g.fresh("s"));
        let p = Program {
            params: vec![],
            body: Stmt::let_(
                x.clone(),
                Ty::Int,
                Expr::int(1),
                Stmt::cell(s.clone(), Ty::Int, Expr::var(&x), Stmt::Skip),
            ),
            result: (s, Ty::Int),
        };
        assert_eq!(scope_check(&p), Ok(()));
        assert_eq!(type_check(&p), Ok(()));
    }

    #[test]
    fn unbound_var_is_reported() {
        let g = NameSession::new();
        let (s, y) = (g.fresh("s"), g.fresh("y"));
        let p = Program {
            params: vec![],
            body: Stmt::cell(s.clone(), Ty::Int, Expr::var(&y), Stmt::Skip),
            result: (s, Ty::Int),
        };
        let v = scope_check(&p).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].name, "y_2");
        assert_eq!(v[0].kind, ViolationKind::Unbound);
    }

    #[test]
    fn cell_used_as_value_is_a_kind_mismatch() {
        let g = NameSession::new();
        let s = g.fresh("s");
        let p = Program {
            params: vec![],
            body: Stmt::cell(
                s.clone(),
                Ty::Int,
                Expr::int(0),
                Stmt::set(&s, Expr::var(&s)),
            ),
            result: (s, Ty::Int),
        };
        let v = scope_check(&p).unwrap_err();
        assert_eq!(v[0].kind, ViolationKind::CellAsValue);
    }

    #[test]
    fn bool_into_int_cell_is_a_type_error() {
        let g = NameSession::new();
        let s = g.fresh("s");
        let p = Program {
            params: vec![],
            body: Stmt::cell(
                s.clone(),
                Ty::Int,
                Expr::int(0),
                Stmt::set(&s, Expr::bool(true)),
            ),
            result: (s, Ty::Int),
        };
        assert_eq!(scope_check(&p), Ok(()));
        let err = type_check(&p).unwrap_err();
        assert_eq!(err.expected, "int");
        assert_eq!(err.actual, "bool");
    }

    #[test]
    fn sum_of_squares_transcription_typechecks() {
        // s := 0; let arr = a; for i = 0 to len(arr)-1 { let el = arr[i]; let t = el*el; s := t + !s }
        let g = NameSession::new();
        let a = g.fresh("arr");
        let (s, arr, i, el, t) = (
            g.fresh("s"),
            g.fresh("arr"),
            g.fresh("i"),
            g.fresh("el"),
            g.fresh("t"),
        );
        let body = Stmt::cell(
            s.clone(),
            Ty::Int,
            Expr::int(0),
            Stmt::let_(
                arr.clone(),
                Ty::ArrInt,
                Expr::var(&a),
                Stmt::for_(
                    i.clone(),
                    Expr::bin(BinOp::Sub, Expr::arr_len(Expr::var(&arr)), Expr::int(1)),
                    Stmt::let_(
                        el.clone(),
                        Ty::Int,
                        Expr::arr_get(Expr::var(&arr), Expr::var(&i)),
                        Stmt::let_(
                            t.clone(),
                            Ty::Int,
                            Expr::bin(BinOp::Mul, Expr::var(&el), Expr::var(&el)),
                            Stmt::set(&s, Expr::bin(BinOp::Add, Expr::var(&t), Expr::cell_get(&s))),
                        ),
                    ),
                ),
            ),
        );
        let p = Program {
            params: vec![(a, Ty::ArrInt)],
            body,
            result: (s, Ty::Int),
        };
        assert_eq!(scope_check(&p), Ok(()));
        assert_eq!(type_check(&p), Ok(()));
    }

    #[test]
    fn match_opt_pair_requires_option_of_pair() {
        let g = NameSession::new();
        let (s, c, e, st) = (g.fresh("s"), g.fresh("c"), g.fresh("el"), g.fresh("st"));
        let p = Program {
            params: vec![],
            body: Stmt::cell(
                s.clone(),
                Ty::Int,
                Expr::int(0),
                Stmt::cell(
                    c.clone(),
                    Ty::option(Ty::Int),
                    Expr::none(),
                    Stmt::MatchOptPair {
                        scrutinee: Expr::cell_get(&c),
                        el: e,
                        st,
                        some: Box::new(Stmt::Skip),
                        none: Box::new(Stmt::Skip),
                    },
                ),
            ),
            result: (s, Ty::Int),
        };
        assert!(type_check(&p).is_err());
    }
}
