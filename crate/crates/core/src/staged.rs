//! User-facing constructors for per-element logic.
//!
//! A [`Code<T>`] is an IR expression together with its IR type; `T` is a
//! phantom sort that lets Rust check operand types (`Code<i64>`,
//! `Code<bool>`, `Code<(A, B)>`, ...). [`Dyn`] is the sort of code whose type
//! is known only at run time, as when compiling a JSON pipeline.
//!
//! Every node built here is tagged as user-generated. Nothing else in the
//! crate sets the tag, so the allocation checks can tell the user's own
//! pairs and lists apart from anything the library introduces.
//!
//! ```
//! use strymgen_core::staged::*;
//! let e = add(&lit(1), &lit(2));
//! assert_eq!(e.to_string(), "1+2");
//! assert!(e.expr().user);
//! ```

use std::fmt;
use std::marker::PhantomData;

use crate::ir::print::expr_to_string;
use crate::ir::{BinOp, CmpOp, Expr, Ty};

/// Sort of code whose IR type is only known at run time.
#[derive(Debug)]
pub enum Dyn {}

/// Sort of `int[]` code.
#[derive(Debug)]
pub enum Arr {}

/// Sort of `list<A>` code.
pub struct List<A>(PhantomData<A>);

pub trait Sort: 'static {
    /// Whether an IR type inhabits this sort.
    fn admits(ty: &Ty) -> bool;
}

/// Sorts with a statically known IR type.
pub trait Typed: Sort {
    fn ty() -> Ty;
}

impl Sort for Dyn {
    fn admits(_: &Ty) -> bool {
        true
    }
}

macro_rules! base_sort {
    ($t:ty, $ty:expr) => {
        impl Sort for $t {
            fn admits(ty: &Ty) -> bool {
                *ty == $ty
            }
        }
        impl Typed for $t {
            fn ty() -> Ty {
                $ty
            }
        }
    };
}

base_sort!(i64, Ty::Int);
base_sort!(bool, Ty::Bool);
base_sort!((), Ty::Unit);
base_sort!(Arr, Ty::ArrInt);

impl<A: Sort, B: Sort> Sort for (A, B) {
    fn admits(ty: &Ty) -> bool {
        matches!(ty, Ty::Pair(a, b) if A::admits(a) && B::admits(b))
    }
}

impl<A: Typed, B: Typed> Typed for (A, B) {
    fn ty() -> Ty {
        Ty::pair(A::ty(), B::ty())
    }
}

impl<A: Sort> Sort for List<A> {
    fn admits(ty: &Ty) -> bool {
        matches!(ty, Ty::List(a) if A::admits(a))
    }
}

impl<A: Typed> Typed for List<A> {
    fn ty() -> Ty {
        Ty::list(A::ty())
    }
}

impl<A: Sort> Sort for Option<A> {
    fn admits(ty: &Ty) -> bool {
        matches!(ty, Ty::Option(a) if A::admits(a))
    }
}

impl<A: Typed> Typed for Option<A> {
    fn ty() -> Ty {
        Ty::option(A::ty())
    }
}

pub type CodeInt = Code<i64>;
pub type CodeBool = Code<bool>;
pub type CodeArr = Code<Arr>;

pub struct Code<T: Sort = Dyn> {
    expr: Expr,
    ty: Ty,
    _sort: PhantomData<fn() -> T>,
}

impl<T: Sort> Clone for Code<T> {
    fn clone(&self) -> Self {
        Code::raw(self.expr.clone(), self.ty.clone())
    }
}

impl<T: Sort> fmt::Debug for Code<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {}", expr_to_string(&self.expr), self.ty)
    }
}

impl<T: Sort> fmt::Display for Code<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&expr_to_string(&self.expr))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("expected code of type {expected}, found `{code}` of type {actual}")]
pub struct SortError {
    pub code: String,
    pub expected: String,
    pub actual: Ty,
}

impl<T: Sort> Code<T> {
    /// Wraps an expression without tagging it. Used by the library for
    /// references to names it introduced.
    pub(crate) fn raw(expr: Expr, ty: Ty) -> Self {
        Code {
            expr,
            ty,
            _sort: PhantomData,
        }
    }

    fn user(expr: Expr, ty: Ty) -> Self {
        Code::raw(expr.tagged(), ty)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn ty(&self) -> &Ty {
        &self.ty
    }

    pub fn into_expr(self) -> Expr {
        self.expr
    }

    pub fn erase(self) -> Code<Dyn> {
        Code::raw(self.expr, self.ty)
    }

    /// Reinterprets the code at sort `U`, checking its IR type.
    pub fn cast<U: Sort>(self) -> Result<Code<U>, SortError> {
        if U::admits(&self.ty) {
            Ok(Code::raw(self.expr, self.ty))
        } else {
            Err(SortError {
                code: expr_to_string(&self.expr),
                expected: std::any::type_name::<U>().to_string(),
                actual: self.ty,
            })
        }
    }
}

pub fn lit(n: i64) -> CodeInt {
    Code::user(Expr::int(n), Ty::Int)
}

pub fn tru() -> CodeBool {
    Code::user(Expr::bool(true), Ty::Bool)
}

pub fn fls() -> CodeBool {
    Code::user(Expr::bool(false), Ty::Bool)
}

fn bin(op: BinOp, x: &CodeInt, y: &CodeInt) -> CodeInt {
    Code::user(Expr::bin(op, x.expr.clone(), y.expr.clone()), Ty::Int)
}

fn cmp(op: CmpOp, x: &CodeInt, y: &CodeInt) -> CodeBool {
    Code::user(Expr::cmp(op, x.expr.clone(), y.expr.clone()), Ty::Bool)
}

pub fn add(x: &CodeInt, y: &CodeInt) -> CodeInt {
    bin(BinOp::Add, x, y)
}

pub fn sub(x: &CodeInt, y: &CodeInt) -> CodeInt {
    bin(BinOp::Sub, x, y)
}

pub fn mul(x: &CodeInt, y: &CodeInt) -> CodeInt {
    bin(BinOp::Mul, x, y)
}

/// Truncating division; dividing by zero is a run-time error.
pub fn div(x: &CodeInt, y: &CodeInt) -> CodeInt {
    bin(BinOp::Div, x, y)
}

/// Remainder with the sign of the dividend.
pub fn mod_(x: &CodeInt, y: &CodeInt) -> CodeInt {
    bin(BinOp::Mod, x, y)
}

pub fn min_(x: &CodeInt, y: &CodeInt) -> CodeInt {
    bin(BinOp::Min, x, y)
}

pub fn lt(x: &CodeInt, y: &CodeInt) -> CodeBool {
    cmp(CmpOp::Lt, x, y)
}

pub fn le(x: &CodeInt, y: &CodeInt) -> CodeBool {
    cmp(CmpOp::Le, x, y)
}

pub fn eq(x: &CodeInt, y: &CodeInt) -> CodeBool {
    cmp(CmpOp::Eq, x, y)
}

pub fn gt(x: &CodeInt, y: &CodeInt) -> CodeBool {
    cmp(CmpOp::Gt, x, y)
}

pub fn ge(x: &CodeInt, y: &CodeInt) -> CodeBool {
    cmp(CmpOp::Ge, x, y)
}

pub fn and_(x: &CodeBool, y: &CodeBool) -> CodeBool {
    Code::user(Expr::and(x.expr.clone(), y.expr.clone()), Ty::Bool)
}

pub fn or_(x: &CodeBool, y: &CodeBool) -> CodeBool {
    Code::user(Expr::or(x.expr.clone(), y.expr.clone()), Ty::Bool)
}

pub fn not_(x: &CodeBool) -> CodeBool {
    Code::user(Expr::not(x.expr.clone()), Ty::Bool)
}

pub fn pair_e<A: Sort, B: Sort>(x: &Code<A>, y: &Code<B>) -> Code<(A, B)> {
    Code::user(
        Expr::pair(x.expr.clone(), y.expr.clone()),
        Ty::pair(x.ty.clone(), y.ty.clone()),
    )
}

fn component(p: &Ty, first: bool) -> Ty {
    match p {
        Ty::Pair(a, b) => (if first { a } else { b }).as_ref().clone(),
        _ => unreachable!("pair sort admits only pair types"),
    }
}

pub fn fst_e<A: Sort, B: Sort>(p: &Code<(A, B)>) -> Code<A> {
    Code::user(Expr::fst(p.expr.clone()), component(&p.ty, true))
}

pub fn snd_e<A: Sort, B: Sort>(p: &Code<(A, B)>) -> Code<B> {
    Code::user(Expr::snd(p.expr.clone()), component(&p.ty, false))
}

pub fn cons_e<A: Sort>(h: &Code<A>, t: &Code<List<A>>) -> Code<List<A>> {
    Code::user(Expr::cons(h.expr.clone(), t.expr.clone()), t.ty.clone())
}

pub fn nil_e<A: Typed>() -> Code<List<A>> {
    Code::user(Expr::nil(), Ty::list(A::ty()))
}

/// The empty list with a run-time element type.
pub fn nil_of(elem: Ty) -> Code<List<Dyn>> {
    Code::user(Expr::nil(), Ty::list(elem))
}

pub fn some_e<A: Sort>(x: &Code<A>) -> Code<Option<A>> {
    Code::user(Expr::some(x.expr.clone()), Ty::option(x.ty.clone()))
}

pub fn some_pair_e<A: Sort, B: Sort>(x: &Code<A>, y: &Code<B>) -> Code<Option<(A, B)>> {
    Code::user(
        Expr::some_pair(x.expr.clone(), y.expr.clone()),
        Ty::option(Ty::pair(x.ty.clone(), y.ty.clone())),
    )
}

pub fn none_e<A: Typed>() -> Code<Option<A>> {
    Code::user(Expr::none(), Ty::option(A::ty()))
}

/// `None` with a run-time payload type.
pub fn none_of(payload: Ty) -> Code<Option<Dyn>> {
    Code::user(Expr::none(), Ty::option(payload))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::ExprKind;

    fn squash(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    #[test]
    fn literals_are_user_tagged() {
        let z = lit(0);
        assert_eq!(z.expr().kind, ExprKind::Int(0));
        assert!(z.expr().user);
        assert_eq!(lit(-3).expr().kind, ExprKind::Int(-3));
        assert_eq!(lit(7).to_string(), "7");
    }

    #[test]
    fn operators_keep_operand_order() {
        assert_eq!(squash(&add(&lit(1), &lit(2)).to_string()), "1+2");
        assert_eq!(squash(&sub(&lit(2), &lit(1)).to_string()), "2-1");
        let x = Code::<i64>::raw(Expr::var(&crate::ir::Name::new("x", 1)), Ty::Int);
        let even = eq(&mod_(&x, &lit(2)), &lit(0));
        assert_eq!(squash(&even.to_string()), "x_1mod2=0");
        assert_eq!(*even.ty(), Ty::Bool);
    }

    #[test]
    fn constructors_tag_only_the_new_node() {
        let x = Code::<i64>::raw(Expr::var(&crate::ir::Name::new("x", 1)), Ty::Int);
        let p = pair_e(&x, &x);
        assert!(p.expr().user);
        assert!(p.expr().children().iter().all(|c| !c.user));
        assert_eq!(*p.ty(), Ty::pair(Ty::Int, Ty::Int));
        let q = pair_e(&x, &tru());
        assert_eq!(*snd_e(&q).ty(), Ty::Bool);
        assert_eq!(*fst_e(&q).ty(), Ty::Int);
    }

    #[test]
    fn list_and_option_types() {
        let l = cons_e(&lit(1), &nil_e::<i64>());
        assert_eq!(*l.ty(), Ty::list(Ty::Int));
        let o = some_pair_e(&lit(1), &lit(2));
        assert_eq!(*o.ty(), Ty::option(Ty::pair(Ty::Int, Ty::Int)));
        assert_eq!(*none_e::<i64>().ty(), Ty::option(Ty::Int));
        assert_eq!(*nil_of(Ty::Bool).ty(), Ty::list(Ty::Bool));
    }

    #[test]
    fn cast_checks_sort() {
        let d = lit(3).erase();
        assert!(d.clone().cast::<i64>().is_ok());
        assert!(d.clone().cast::<bool>().is_err());
        let p = pair_e(&lit(1), &tru()).erase();
        assert!(p.clone().cast::<(i64, bool)>().is_ok());
        assert!(p.clone().cast::<(Dyn, Dyn)>().is_ok());
        assert!(p.cast::<(i64, i64)>().is_err());
    }
}
