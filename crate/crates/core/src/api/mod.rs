//! Pipeline construction and compilation.
//!
//! ```
//! use strymgen_core::api::Session;
//! use strymgen_core::ir::{eval, Datum};
//! use strymgen_core::staged::*;
//!
//! let s = Session::new();
//! let arr = s.arr_param("arr");
//! let prog = s.of_arr(arr).map(|x| mul(x, x)).sum();
//! let (v, _) = eval(&prog, &[Datum::Arr(vec![0, 1, 2, 3, 4])]).unwrap();
//! assert_eq!(v, Datum::Int(30));
//! ```
//!
//! A pipeline is consumed by its fold, so it cannot be compiled twice:
//!
//! ```compile_fail
//! use strymgen_core::api::Session;
//! let s = Session::new();
//! let p = s.of_arr(s.arr_param("arr"));
//! let a = p.sum();
//! let b = p.sum();
//! ```

use std::cell::RefCell;
use std::marker::PhantomData;
use std::rc::Rc;

use crate::ir::{Expr, Name, Program, Stmt, Ty};
use crate::staged::{self, Arr, Code, Dyn, Sort};
use crate::stream::{self, binder, transform, Gen, StStream, StagedValue, ZipCase};

struct Inner {
    gen: Gen,
    params: RefCell<Vec<(Name, Ty)>>,
}

/// One generation run: owns the fresh-name supply and the program
/// parameters. Cheap to clone; clones share the run.
#[derive(Clone)]
pub struct Session(Rc<Inner>);

impl Default for Session {
    fn default() -> Self {
        Session::new()
    }
}

impl Session {
    pub fn new() -> Self {
        Session(Rc::new(Inner {
            gen: Gen::new(),
            params: RefCell::new(Vec::new()),
        }))
    }

    pub fn gen(&self) -> &Gen {
        &self.0.gen
    }

    pub fn same(&self, other: &Session) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }

    fn param(&self, hint: &str, ty: Ty) -> Expr {
        let n = self.0.gen.fresh(hint);
        self.0.params.borrow_mut().push((n.clone(), ty));
        Expr::var(&n)
    }

    /// Declares an `int[]` program parameter. Its name's hint is `hint`,
    /// which is how [`Program::bind_inputs`] finds it.
    pub fn arr_param(&self, hint: &str) -> Code<Arr> {
        Code::raw(self.param(hint, Ty::ArrInt), Ty::ArrInt)
    }

    pub fn int_param(&self, hint: &str) -> Code<i64> {
        Code::raw(self.param(hint, Ty::Int), Ty::Int)
    }

    pub fn params(&self) -> Vec<(Name, Ty)> {
        self.0.params.borrow().clone()
    }

    pub fn zip_trace(&self) -> Vec<ZipCase> {
        self.0.gen.zip_trace()
    }

    fn wrap<T: Sort>(&self, stream: StStream) -> Pipeline<T> {
        Pipeline {
            session: self.clone(),
            stream,
            _elem: PhantomData,
        }
    }

    pub fn of_arr(&self, arr: Code<Arr>) -> Pipeline<i64> {
        self.wrap(stream::of_arr(arr.erase()))
    }

    /// `f` maps a seed to `Some(element, next seed)` or `None` to stop.
    pub fn unfold<A: Sort, S: Sort>(
        &self,
        f: impl Fn(&Code<S>) -> Code<Option<(A, S)>> + 'static,
        z: Code<S>,
    ) -> Pipeline<A> {
        let step = Rc::new(move |seed: &Code| {
            let seed = seed.clone().cast::<S>().expect("unfold seed sort");
            f(&seed).erase()
        });
        self.wrap(stream::unfold(step, z.erase()))
    }

    /// Every integer from `n` upwards. Infinite; bound it with `take`.
    pub fn iota(&self, n: Code<i64>) -> Pipeline<i64> {
        self.unfold(
            |x: &Code<i64>| staged::some_pair_e(x, &staged::add(x, &staged::lit(1))),
            n,
        )
    }

    /// Wraps a raw stream whose elements are atoms of sort `T`.
    pub fn from_stream<T: Sort>(&self, s: StStream) -> Pipeline<T> {
        self.wrap(s)
    }
}

fn elem<T: Sort>(v: &StagedValue) -> Code<T> {
    v.atom()
        .clone()
        .cast::<T>()
        .unwrap_or_else(|e| panic!("pipeline element of unexpected sort: {e}"))
}

/// A stream of `T` elements under construction.
pub struct Pipeline<T: Sort = Dyn> {
    session: Session,
    stream: StStream,
    _elem: PhantomData<fn() -> T>,
}

impl<T: Sort> Pipeline<T> {
    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn stream(&self) -> &StStream {
        &self.stream
    }

    /// Forgets the static element sort.
    pub fn erase(self) -> Pipeline<Dyn> {
        let s = self.stream.clone();
        self.with(s)
    }

    fn with<U: Sort>(self, stream: StStream) -> Pipeline<U> {
        self.session.wrap(stream)
    }

    /// Applies `f` to each element, binding the result to a fresh name so it
    /// is computed once.
    pub fn map<U: Sort>(self, f: impl Fn(&Code<T>) -> Code<U> + 'static) -> Pipeline<U> {
        let tr = transform(move |g, e, k| {
            let c = f(&elem::<T>(&e));
            let t = g.fresh("t");
            let ty = c.ty().clone();
            let v = StagedValue::Atom(Code::raw(Expr::var(&t), ty.clone()));
            Stmt::let_(t, ty, c.into_expr(), k(g, v))
        });
        let s = stream::map_raw(tr, &self.stream);
        self.with(s)
    }

    pub fn filter(self, pred: impl Fn(&Code<T>) -> Code<bool> + 'static) -> Pipeline<T> {
        let s = stream::filter(
            Rc::new(move |e: &StagedValue| pred(&elem::<T>(e)).into_expr()),
            &self.stream,
        );
        self.with(s)
    }

    /// At most the first `n` elements; a non-positive `n` gives none.
    pub fn take(self, n: Code<i64>) -> Pipeline<T> {
        let s = stream::take(n.into_expr(), &self.stream);
        self.with(s)
    }

    /// Replaces each element with the pipeline `f` builds from it. `f` must
    /// build in this pipeline's session.
    ///
    /// # Panics
    /// At compile time, if `f` returns a pipeline from another session.
    pub fn flat_map<U: Sort>(self, f: impl Fn(&Code<T>) -> Pipeline<U> + 'static) -> Pipeline<U> {
        let session = self.session.clone();
        let s = stream::flat_map_raw(
            binder(move |_, e| {
                let inner = f(&elem::<T>(&e));
                assert!(
                    inner.session.same(&session),
                    "flat_map body built a pipeline in a different session"
                );
                inner.stream
            }),
            &self.stream,
        );
        self.with(s)
    }

    /// Combines elements pairwise; stops at the end of the shorter stream.
    ///
    /// # Panics
    /// If `other` belongs to a different session.
    pub fn zip_with<U: Sort, V: Sort>(
        self,
        other: Pipeline<U>,
        f: impl Fn(&Code<T>, &Code<U>) -> Code<V> + 'static,
    ) -> Pipeline<V> {
        assert!(
            self.session.same(&other.session),
            "zip_with of pipelines from different sessions"
        );
        let zipped = stream::zip_raw(self.session.gen(), &self.stream, &other.stream);
        let s = stream::map_raw(
            transform(move |g, e, k| {
                let (x, y) = e.split();
                let c = f(&elem::<T>(x), &elem::<U>(y));
                k(g, StagedValue::Atom(c.erase()))
            }),
            &zipped,
        );
        self.with(s)
    }

    /// Left fold into a cell initialised to `z`; the cell is the program's
    /// result.
    pub fn fold<Z: Sort>(self, f: impl Fn(&Code<Z>, &Code<T>) -> Code<Z>, z: Code<Z>) -> Program {
        let g = self.session.gen();
        let acc = g.fresh("s");
        let ty = z.ty().clone();
        let acc_code = Code::<Z>::raw(Expr::cell_get(&acc), ty.clone());
        let consumer = |_: &Gen, e: StagedValue| {
            let next = f(&acc_code, &elem::<T>(&e));
            assert_eq!(*next.ty(), ty, "fold step changes the accumulator type");
            Stmt::set(&acc, next.into_expr())
        };
        let body = stream::fold_raw(g, &consumer, &self.stream);
        Program {
            params: self.session.params(),
            body: Stmt::cell(acc.clone(), ty.clone(), z.into_expr(), body).normalize(),
            result: (acc, ty),
        }
    }
}

impl Pipeline<i64> {
    pub fn sum(self) -> Program {
        self.fold(staged::add, staged::lit(0))
    }
}

impl Pipeline<Dyn> {
    /// Sum of a pipeline whose elements are integers at run time.
    ///
    /// # Panics
    /// If the elements are not integers.
    pub fn sum_dyn(self) -> Program {
        let s = self.stream.clone();
        let p: Pipeline<i64> = self.with(s);
        p.sum()
    }
}

#[cfg(test)]
mod tests;
