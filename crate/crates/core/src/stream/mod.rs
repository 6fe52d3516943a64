//! The fusion library: producers, linear and nested streams, and the
//! operations that turn a stream description into one loop nest.
//!
//! Everything here runs at generation time. Closures stored in a
//! [`Producer`] produce IR fragments when the consumer finally asks for a
//! loop; element values ([`StagedValue`]) are generator-time trees whose
//! leaves are IR expressions, so pairing and unpairing them costs nothing at
//! run time.

mod zip;

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::ir::{BinOp, CmpOp, Expr, Name, NameSession, Stmt, Ty};
use crate::staged::Code;

pub use zip::{make_linear, push_linear, zip_producer, zip_raw, ZipCase};

/// Generation context: the fresh-name supply plus a trace of the zip
/// dispatcher's decisions.
#[derive(Debug, Default)]
pub struct Gen {
    names: NameSession,
    zips: RefCell<Vec<ZipCase>>,
}

impl Gen {
    pub fn new() -> Self {
        Gen {
            names: NameSession::new(),
            zips: RefCell::new(Vec::new()),
        }
    }

    pub fn fresh(&self, hint: &str) -> Name {
        self.names.fresh(hint)
    }

    pub fn names(&self) -> &NameSession {
        &self.names
    }

    pub fn zip_trace(&self) -> Vec<ZipCase> {
        self.zips.borrow().clone()
    }

    fn record(&self, c: ZipCase) {
        self.zips.borrow_mut().push(c);
    }
}

#[derive(Clone, Debug)]
pub enum StagedValue {
    Atom(Code),
    Pair(Rc<StagedValue>, Rc<StagedValue>),
    /// Producer state travelling with an element (used by `push_linear` and
    /// by the counters of `take`).
    State(Rc<State>),
}

impl StagedValue {
    pub fn pair(a: StagedValue, b: StagedValue) -> Self {
        StagedValue::Pair(Rc::new(a), Rc::new(b))
    }

    pub fn atom(&self) -> &Code {
        match self {
            StagedValue::Atom(c) => c,
            other => panic!("expected an atomic element, found {other:?}"),
        }
    }

    pub fn split(&self) -> (&StagedValue, &StagedValue) {
        match self {
            StagedValue::Pair(a, b) => (a, b),
            other => panic!("expected a paired element, found {other:?}"),
        }
    }

    fn state(&self) -> &Rc<State> {
        match self {
            StagedValue::State(s) => s,
            other => panic!("expected a state element, found {other:?}"),
        }
    }

    fn cell_ref(n: &Name) -> Self {
        StagedValue::State(Rc::new(State::Cell(n.clone())))
    }

    fn as_cell(&self) -> &Name {
        match &**self.state() {
            State::Cell(n) => n,
            other => panic!("expected a cell reference, found {other:?}"),
        }
    }
}

/// Generator-level producer state. Its structure is fixed when the producer
/// is built; the names it holds refer to bindings created by `init`.
#[derive(Debug)]
pub enum State {
    Unit,
    Value(StagedValue),
    Array {
        arr: Name,
    },
    Indexed {
        idx: Name,
        inner: Rc<State>,
    },
    OptionCell {
        cell: Name,
    },
    Counter {
        nr: Name,
        inner: Rc<State>,
    },
    Pair(Rc<State>, Rc<State>),
    Reified {
        curr: Name,
        adv: Name,
        elem: ElemShape,
    },
    Pushed {
        term1r: Name,
        lin: Rc<State>,
        nested: Rc<State>,
    },
    Cell(Name),
}

impl State {
    fn value(&self) -> &StagedValue {
        match self {
            State::Value(v) => v,
            other => panic!("expected a value state, found {other:?}"),
        }
    }

    fn array(&self) -> &Name {
        match self {
            State::Array { arr } => arr,
            other => panic!("expected an array state, found {other:?}"),
        }
    }

    fn indexed(&self) -> (&Name, &State) {
        match self {
            State::Indexed { idx, inner } => (idx, inner),
            other => panic!("expected an indexed state, found {other:?}"),
        }
    }

    fn option_cell(&self) -> &Name {
        match self {
            State::OptionCell { cell } => cell,
            other => panic!("expected an unfold state, found {other:?}"),
        }
    }

    fn counter(&self) -> (&Name, &State) {
        match self {
            State::Counter { nr, inner } => (nr, inner),
            other => panic!("expected a counter state, found {other:?}"),
        }
    }

    fn pair(&self) -> (&State, &State) {
        match self {
            State::Pair(a, b) => (a, b),
            other => panic!("expected a paired state, found {other:?}"),
        }
    }
}

/// The static shape of an element: how a reified element is rebuilt from a
/// single runtime value.
#[derive(Clone, Debug, PartialEq)]
pub enum ElemShape {
    Atom(Ty),
    Pair(Box<ElemShape>, Box<ElemShape>),
}

impl ElemShape {
    pub fn of(v: &StagedValue) -> Self {
        match v {
            StagedValue::Atom(c) => ElemShape::Atom(c.ty().clone()),
            StagedValue::Pair(a, b) => {
                ElemShape::Pair(Box::new(ElemShape::of(a)), Box::new(ElemShape::of(b)))
            }
            StagedValue::State(_) => panic!("producer state cannot be stored at run time"),
        }
    }

    pub fn ty(&self) -> Ty {
        match self {
            ElemShape::Atom(t) => t.clone(),
            ElemShape::Pair(a, b) => Ty::pair(a.ty(), b.ty()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cardinality {
    AtMost1,
    Many,
}

pub type Cont<'a> = &'a dyn Fn(&Gen, StagedValue) -> Stmt;
pub type StateCont<'a> = &'a dyn Fn(&Gen, Rc<State>) -> Stmt;
pub type InitFn = Rc<dyn Fn(&Gen, StateCont<'_>) -> Stmt>;
pub type ExprOf = Rc<dyn Fn(&State) -> Expr>;
pub type IndexFn = Rc<dyn Fn(&Gen, &State, Expr, Cont<'_>) -> Stmt>;
pub type StepFn = Rc<dyn Fn(&Gen, &State, Cont<'_>) -> Stmt>;
pub type Binder = Rc<dyn Fn(&Gen, StagedValue) -> StStream>;
/// An in-flight element transformer; must call its continuation exactly once.
pub type Transform = Rc<dyn Fn(&Gen, StagedValue, Cont<'_>) -> Stmt>;

// Constructors that pin down closure signatures.
pub(crate) fn init_fn(f: impl Fn(&Gen, StateCont<'_>) -> Stmt + 'static) -> InitFn {
    Rc::new(f)
}
pub(crate) fn expr_of(f: impl Fn(&State) -> Expr + 'static) -> ExprOf {
    Rc::new(f)
}
pub(crate) fn index_fn(f: impl Fn(&Gen, &State, Expr, Cont<'_>) -> Stmt + 'static) -> IndexFn {
    Rc::new(f)
}
pub(crate) fn step_fn(f: impl Fn(&Gen, &State, Cont<'_>) -> Stmt + 'static) -> StepFn {
    Rc::new(f)
}
pub fn binder(f: impl Fn(&Gen, StagedValue) -> StStream + 'static) -> Binder {
    Rc::new(f)
}
pub fn transform(f: impl Fn(&Gen, StagedValue, Cont<'_>) -> Stmt + 'static) -> Transform {
    Rc::new(f)
}

#[derive(Clone)]
pub enum Shape {
    /// Indexed production: elements 0..=upb, fetched by `index`.
    For { upb: ExprOf, index: IndexFn },
    /// Guarded stepping: `step` may run while `term` holds.
    Unfold {
        term: ExprOf,
        card: Cardinality,
        step: StepFn,
    },
}

#[derive(Clone)]
pub struct Producer {
    pub init: InitFn,
    pub shape: Shape,
}

impl Producer {
    pub fn is_for(&self) -> bool {
        matches!(self.shape, Shape::For { .. })
    }

    pub fn card(&self) -> Cardinality {
        match self.shape {
            Shape::For { .. } => Cardinality::Many,
            Shape::Unfold { card, .. } => card,
        }
    }
}

impl fmt::Debug for Producer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape {
            Shape::For { .. } => write!(f, "For"),
            Shape::Unfold { card, .. } => write!(f, "Unfold({card:?})"),
        }
    }
}

#[derive(Clone)]
pub enum StStream {
    Linear(Producer),
    Nested(Producer, Binder),
}

impl fmt::Debug for StStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StStream::Linear(p) => write!(f, "Linear({p:?})"),
            StStream::Nested(p, _) => write!(f, "Nested({p:?}, ..)"),
        }
    }
}

impl StStream {
    pub fn is_linear(&self) -> bool {
        matches!(self, StStream::Linear(_))
    }

    pub fn head(&self) -> &Producer {
        match self {
            StStream::Linear(p) | StStream::Nested(p, _) => p,
        }
    }
}

/// Indexed producer over an array: binds the array once, then binds each
/// fetched element.
pub fn of_arr(arr: Code) -> StStream {
    let init = init_fn(move |g, k| {
        let a = g.fresh("arr");
        Stmt::let_(
            a.clone(),
            Ty::ArrInt,
            arr.expr().clone(),
            k(g, Rc::new(State::Array { arr: a })),
        )
    });
    let upb = expr_of(|s| {
        Expr::bin(
            BinOp::Sub,
            Expr::arr_len(Expr::var(s.array())),
            Expr::int(1),
        )
    });
    let index = index_fn(|g, s, i, k| {
        let el = g.fresh("el");
        let fetch = Expr::arr_get(Expr::var(s.array()), i);
        Stmt::let_(
            el.clone(),
            Ty::Int,
            fetch,
            k(g, StagedValue::Atom(Code::raw(Expr::var(&el), Ty::Int))),
        )
    });
    StStream::Linear(Producer {
        init,
        shape: Shape::For { upb, index },
    })
}

/// User unfold. `f` maps a seed to `option<(element, seed)>`; the state is a
/// single cell holding `f` of the current seed.
///
/// # Panics
/// If `f(z)` is not of an `option<(_, _)>` type.
pub fn unfold(f: Rc<dyn Fn(&Code) -> Code>, z: Code) -> StStream {
    let first = f(&z);
    let cell_ty = first.ty().clone();
    let (el_ty, seed_ty) = match &cell_ty {
        Ty::Option(p) => match &**p {
            Ty::Pair(a, b) => ((**a).clone(), (**b).clone()),
            _ => panic!("unfold step must return option<(_, _)>, got {cell_ty}"),
        },
        _ => panic!("unfold step must return option<(_, _)>, got {cell_ty}"),
    };
    let init = init_fn(move |g, k| {
        let st = g.fresh("s");
        Stmt::cell(
            st.clone(),
            cell_ty.clone(),
            first.expr().clone(),
            k(g, Rc::new(State::OptionCell { cell: st })),
        )
    });
    let term = expr_of(|s| Expr::is_some(Expr::cell_get(s.option_cell())));
    let step = step_fn(move |g, s, k| {
        let st = s.option_cell();
        let el = g.fresh("el");
        let sn = g.fresh("sn");
        let next = f(&Code::raw(Expr::var(&sn), seed_ty.clone()));
        Stmt::MatchOptPair {
            scrutinee: Expr::cell_get(st),
            el: el.clone(),
            st: sn,
            some: Box::new(Stmt::seq([
                Stmt::set(st, next.into_expr()),
                k(
                    g,
                    StagedValue::Atom(Code::raw(Expr::var(&el), el_ty.clone())),
                ),
            ])),
            none: Box::new(Stmt::Skip),
        }
    });
    StStream::Linear(Producer {
        init,
        shape: Shape::Unfold {
            term,
            card: Cardinality::Many,
            step,
        },
    })
}

/// Converts an indexed producer into a guarded one with an explicit index
/// cell. Identity on unfold producers.
pub fn for_unfold(p: &Producer) -> Producer {
    let Shape::For { upb, index } = &p.shape else {
        return p.clone();
    };
    let init0 = p.init.clone();
    let init = init_fn(move |g, k| {
        init0(g, &|g, s| {
            let i = g.fresh("i");
            Stmt::cell(
                i.clone(),
                Ty::Int,
                Expr::int(0),
                k(g, Rc::new(State::Indexed { idx: i, inner: s })),
            )
        })
    });
    let upb = upb.clone();
    let term = expr_of(move |s| {
        let (i, inner) = s.indexed();
        Expr::cmp(CmpOp::Le, Expr::cell_get(i), upb(inner))
    });
    let index = index.clone();
    let step = step_fn(move |g, s, k| {
        let (i, inner) = s.indexed();
        index(g, inner, Expr::cell_get(i), &|g, e| {
            Stmt::seq([Stmt::incr(i), k(g, e)])
        })
    });
    Producer {
        init,
        shape: Shape::Unfold {
            term,
            card: Cardinality::Many,
            step,
        },
    }
}

/// Applies `for_unfold` to the head producer of a stream.
pub fn for_unfold_stream(s: &StStream) -> StStream {
    match s {
        StStream::Linear(p) => StStream::Linear(for_unfold(p)),
        StStream::Nested(p, f) => StStream::Nested(for_unfold(p), f.clone()),
    }
}

fn map_producer(tr: &Transform, p: &Producer) -> Producer {
    let shape = match &p.shape {
        Shape::For { upb, index } => {
            let (tr, index) = (tr.clone(), index.clone());
            Shape::For {
                upb: upb.clone(),
                index: index_fn(move |g, s, i, k| index(g, s, i, &|g, e| tr(g, e, k))),
            }
        }
        Shape::Unfold { term, card, step } => {
            let (tr, step) = (tr.clone(), step.clone());
            Shape::Unfold {
                term: term.clone(),
                card: *card,
                step: step_fn(move |g, s, k| step(g, s, &|g, e| tr(g, e, k))),
            }
        }
    };
    Producer {
        init: p.init.clone(),
        shape,
    }
}

/// Transforms every element in flight, at the innermost level of nesting.
pub fn map_raw(tr: Transform, s: &StStream) -> StStream {
    match s {
        StStream::Linear(p) => StStream::Linear(map_producer(&tr, p)),
        StStream::Nested(p, f) => {
            let f = f.clone();
            StStream::Nested(p.clone(), binder(move |g, a| map_raw(tr.clone(), &f(g, a))))
        }
    }
}

/// Substitutes a stream for every element.
pub fn flat_map_raw(tr: Binder, s: &StStream) -> StStream {
    match s {
        StStream::Linear(p) => StStream::Nested(p.clone(), tr),
        StStream::Nested(p, f) => {
            let f = f.clone();
            StStream::Nested(
                p.clone(),
                binder(move |g, a| flat_map_raw(tr.clone(), &f(g, a))),
            )
        }
    }
}

/// Keeps the elements satisfying `pred`: a flat-map into a stream of at most
/// one element.
pub fn filter(pred: Rc<dyn Fn(&StagedValue) -> Expr>, s: &StStream) -> StStream {
    let tr = binder(move |_, x| {
        let pred = pred.clone();
        StStream::Linear(Producer {
            init: init_fn(move |g, k| k(g, Rc::new(State::Value(x.clone())))),
            shape: Shape::Unfold {
                term: expr_of(move |s| pred(s.value())),
                card: Cardinality::AtMost1,
                step: step_fn(|g, s, k| k(g, s.value().clone())),
            },
        })
    });
    flat_map_raw(tr, s)
}

fn consume(g: &Gen, p: &Producer, k: Cont<'_>) -> Stmt {
    (p.init)(g, &|g, st| match &p.shape {
        Shape::For { upb, index } => {
            let i = g.fresh("i");
            let bound = upb(&st);
            let body = index(g, &st, Expr::var(&i), k);
            Stmt::for_(i, bound, body)
        }
        Shape::Unfold {
            term,
            card: Cardinality::Many,
            step,
        } => Stmt::while_(term(&st), step(g, &st, k)),
        Shape::Unfold {
            term,
            card: Cardinality::AtMost1,
            step,
        } => Stmt::if_(term(&st), step(g, &st, k), None),
    })
}

/// Generates the loop nest feeding every element to `consumer`.
pub fn fold_raw(g: &Gen, consumer: Cont<'_>, s: &StStream) -> Stmt {
    match s {
        StStream::Linear(p) => consume(g, p, consumer),
        StStream::Nested(p, f) => consume(g, p, &|g, e| fold_raw(g, consumer, &f(g, e))),
    }
}

fn more_termination_producer(cond: &Expr, p: &Producer) -> Producer {
    let p = for_unfold(p);
    match &p.shape {
        Shape::Unfold {
            term,
            card: Cardinality::Many,
            step,
        } => {
            let (cond, term) = (cond.clone(), term.clone());
            Producer {
                init: p.init.clone(),
                shape: Shape::Unfold {
                    term: expr_of(move |s| Expr::and(cond.clone(), term(s))),
                    card: Cardinality::Many,
                    step: step.clone(),
                },
            }
        }
        _ => p,
    }
}

/// Conjoins `cond` to the guard of every loop-forming producer of the
/// stream, including those of nested substreams.
pub fn more_termination(cond: Expr, s: &StStream) -> StStream {
    match s {
        StStream::Linear(p) => StStream::Linear(more_termination_producer(&cond, p)),
        StStream::Nested(p, f) => {
            let f = f.clone();
            let head = more_termination_producer(&cond, p);
            StStream::Nested(
                head,
                binder(move |g, a| more_termination(cond.clone(), &f(g, a))),
            )
        }
    }
}

fn nr_positive(nr: &Name) -> Expr {
    Expr::cmp(CmpOp::Gt, Expr::cell_get(nr), Expr::int(0))
}

/// Adds a countdown cell `nr := n` to an unfold producer and guards it with
/// `!nr > 0`. Elements become pairs of a reference to `nr` and the original
/// element.
///
/// # Panics
/// If `p` is an indexed producer.
pub fn add_nr(n: Expr, p: &Producer) -> Producer {
    let Shape::Unfold { term, card, step } = &p.shape else {
        panic!("add_nr expects an unfold producer");
    };
    let init0 = p.init.clone();
    let init = init_fn(move |g, k| {
        init0(g, &|g, s| {
            let nr = g.fresh("nr");
            Stmt::cell(
                nr.clone(),
                Ty::Int,
                n.clone(),
                k(g, Rc::new(State::Counter { nr, inner: s })),
            )
        })
    });
    let term = term.clone();
    let step = step.clone();
    Producer {
        init,
        shape: Shape::Unfold {
            term: expr_of(move |s| {
                let (nr, inner) = s.counter();
                Expr::and(nr_positive(nr), term(inner))
            }),
            card: *card,
            step: step_fn(move |g, s, k| {
                let (nr, inner) = s.counter();
                step(g, inner, &|g, e| {
                    k(g, StagedValue::pair(StagedValue::cell_ref(nr), e))
                })
            }),
        },
    }
}

/// The first `n` elements of a stream.
pub fn take(n: Expr, s: &StStream) -> StStream {
    match s {
        StStream::Linear(Producer {
            init,
            shape: Shape::For { upb, index },
        }) => {
            let upb = upb.clone();
            StStream::Linear(Producer {
                init: init.clone(),
                shape: Shape::For {
                    upb: expr_of(move |s| {
                        Expr::bin(
                            BinOp::Min,
                            Expr::bin(BinOp::Sub, n.clone(), Expr::int(1)),
                            upb(s),
                        )
                    }),
                    index: index.clone(),
                },
            })
        }
        StStream::Linear(p) => {
            let counted = StStream::Linear(add_nr(n, &for_unfold(p)));
            map_raw(
                transform(|g, e, k| {
                    let (nr, a) = e.split();
                    Stmt::seq([Stmt::decr(nr.as_cell()), k(g, a.clone())])
                }),
                &counted,
            )
        }
        StStream::Nested(p, f) => {
            let f = f.clone();
            StStream::Nested(
                add_nr(n, &for_unfold(p)),
                binder(move |g, e| {
                    let (nr, a) = e.split();
                    let nr = nr.as_cell().clone();
                    let inner = more_termination(nr_positive(&nr), &f(g, a.clone()));
                    map_raw(
                        transform(move |g, el, k| Stmt::seq([Stmt::decr(&nr), k(g, el)])),
                        &inner,
                    )
                }),
            )
        }
    }
}

/// Nesting depth of a stream, found by running its binders with placeholder
/// elements. Only for diagnostics and tests: it draws names from `g`.
pub fn nesting_depth(g: &Gen, s: &StStream) -> usize {
    match s {
        StStream::Linear(_) => 0,
        StStream::Nested(p, f) => {
            let depth = std::cell::Cell::new(0);
            let _ = consume(g, p, &|g, e| {
                depth.set(1 + nesting_depth(g, &f(g, e)));
                Stmt::Skip
            });
            depth.get()
        }
    }
}
