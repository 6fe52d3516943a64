//! Zipping: lockstep producers, pushing a linear stream into a nested one,
//! and reifying a nested stream into a linear one.

use std::cell::RefCell;
use std::rc::Rc;

use super::{
    binder, expr_of, for_unfold, index_fn, init_fn, map_raw, more_termination, step_fn, transform,
    Cardinality, Cont, ElemShape, Gen, Producer, Shape, StStream, StagedValue, State,
};
use crate::ir::{BinOp, CmpOp, Expr, Name, Stmt, Ty};
use crate::staged::Code;

/// Which branch of [`zip_raw`] handled a pair of streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ZipCase {
    LinearLinear,
    LinearNested,
    NestedLinear,
    NestedNested,
}

fn unfold_parts(p: &Producer) -> (super::ExprOf, Cardinality, super::StepFn) {
    match &p.shape {
        Shape::Unfold { term, card, step } => (term.clone(), *card, step.clone()),
        Shape::For { .. } => panic!("expected an unfold producer"),
    }
}

/// Runs two linear producers in lockstep. Two indexed producers share one
/// index and the bound is the smaller of the two; otherwise both are
/// converted to unfolds and both guards must hold.
pub fn zip_producer(p1: &Producer, p2: &Producer) -> Producer {
    if let (Shape::For { upb: u1, index: x1 }, Shape::For { upb: u2, index: x2 }) =
        (&p1.shape, &p2.shape)
    {
        let (i1, i2) = (p1.init.clone(), p2.init.clone());
        let (u1, u2, x1, x2) = (u1.clone(), u2.clone(), x1.clone(), x2.clone());
        return Producer {
            init: init_fn(move |g, k| {
                i1(g, &|g, s1| {
                    i2(g, &|g, s2| k(g, Rc::new(State::Pair(s1.clone(), s2))))
                })
            }),
            shape: Shape::For {
                upb: expr_of(move |s| {
                    let (a, b) = s.pair();
                    Expr::bin(BinOp::Min, u1(a), u2(b))
                }),
                index: index_fn(move |g, s, i, k| {
                    let (a, b) = s.pair();
                    x1(g, a, i.clone(), &|g, e1| {
                        x2(g, b, i.clone(), &|g, e2| {
                            k(g, StagedValue::pair(e1.clone(), e2))
                        })
                    })
                }),
            },
        };
    }
    let (q1, q2) = (for_unfold(p1), for_unfold(p2));
    let (i1, i2) = (q1.init.clone(), q2.init.clone());
    let (t1, _, s1) = unfold_parts(&q1);
    let (t2, _, s2) = unfold_parts(&q2);
    Producer {
        init: init_fn(move |g, k| {
            i1(g, &|g, a| {
                i2(g, &|g, b| k(g, Rc::new(State::Pair(a.clone(), b))))
            })
        }),
        shape: Shape::Unfold {
            term: expr_of(move |s| {
                let (a, b) = s.pair();
                Expr::and(t1(a), t2(b))
            }),
            card: Cardinality::Many,
            step: step_fn(move |g, s, k| {
                let (a, b) = s.pair();
                s1(g, a, &|g, e1| {
                    s2(g, b, &|g, e2| k(g, StagedValue::pair(e1.clone(), e2)))
                })
            }),
        },
    }
}

/// Zips a linear unfold producer into a nested stream driven by `nested`.
/// The linear side is advanced once per innermost element; its guard is
/// cached in a cell `term1r` that is conjoined into every loop of the nested
/// side. Elements are `(linear, nested)` pairs.
pub fn push_linear(lin: &Producer, nested: &Producer, nestf: super::Binder) -> StStream {
    let (t1, _, step1) = unfold_parts(lin);
    let (t2, card2, step2) = unfold_parts(nested);
    let (init1, init2) = (lin.init.clone(), nested.init.clone());
    let t1_init = t1.clone();
    let init = init_fn(move |g, k| {
        init1(g, &|g, s1| {
            init2(g, &|g, s2| {
                let term1r = g.fresh("term1r");
                Stmt::cell(
                    term1r.clone(),
                    Ty::Bool,
                    t1_init(&s1),
                    k(
                        g,
                        Rc::new(State::Pushed {
                            term1r,
                            lin: s1.clone(),
                            nested: s2,
                        }),
                    ),
                )
            })
        })
    });
    let term = expr_of(move |s| {
        let State::Pushed { term1r, nested, .. } = s else {
            panic!("expected a pushed state");
        };
        Expr::and(Expr::cell_get(term1r), t2(nested))
    });
    let step = step_fn(move |g, s, k| {
        let State::Pushed {
            term1r,
            lin,
            nested,
        } = s
        else {
            panic!("expected a pushed state");
        };
        step2(g, nested, &|g, a| {
            k(
                g,
                StagedValue::State(Rc::new(State::Pushed {
                    term1r: term1r.clone(),
                    lin: lin.clone(),
                    nested: Rc::new(State::Value(a)),
                })),
            )
        })
    });
    let inner = binder(move |g, e| {
        let State::Pushed {
            term1r,
            lin,
            nested,
        } = &**e.state()
        else {
            panic!("expected a pushed element");
        };
        let a = match &**nested {
            State::Value(a) => a.clone(),
            other => panic!("expected a pushed element value, found {other:?}"),
        };
        let (term1r, lin) = (term1r.clone(), lin.clone());
        let (t1, step1) = (t1.clone(), step1.clone());
        let guarded = more_termination(Expr::cell_get(&term1r), &nestf(g, a));
        map_raw(
            transform(move |g, c2, k| {
                step1(g, &lin, &|g, c1| {
                    Stmt::seq([
                        Stmt::set(&term1r, t1(&lin)),
                        k(g, StagedValue::pair(c1, c2.clone())),
                    ])
                })
            }),
            &guarded,
        )
    });
    StStream::Nested(
        Producer {
            init,
            shape: Shape::Unfold {
                term,
                card: card2,
                step,
            },
        },
        inner,
    )
}

fn pack(v: &StagedValue) -> Expr {
    match v {
        StagedValue::Atom(c) => c.expr().clone(),
        StagedValue::Pair(a, b) => Expr::pair(pack(a), pack(b)),
        StagedValue::State(_) => panic!("producer state cannot be stored at run time"),
    }
}

fn unpack(shape: &ElemShape, e: Expr) -> StagedValue {
    match shape {
        ElemShape::Atom(t) => StagedValue::Atom(Code::raw(e, t.clone())),
        ElemShape::Pair(a, b) => {
            StagedValue::pair(unpack(a, Expr::fst(e.clone())), unpack(b, Expr::snd(e)))
        }
    }
}

/// Bookkeeping while generating the body of a reified stream's advance
/// procedure.
struct Reify<'a> {
    curr: &'a Name,
    /// One resume cell per nesting level, outermost first.
    levels: RefCell<Vec<Name>>,
    elem: RefCell<Option<ElemShape>>,
}

impl Reify<'_> {
    fn leaf(&self, e: &StagedValue) -> Stmt {
        let shape = ElemShape::of(e);
        let mut slot = self.elem.borrow_mut();
        match &*slot {
            Some(s) if *s != shape => panic!("inconsistent element shapes in reified stream"),
            _ => *slot = Some(shape),
        }
        Stmt::set(self.curr, Expr::some(pack(e)))
    }

    fn level(&self, g: &Gen, s: &StStream) -> Stmt {
        let nadv = g.fresh("nadv");
        self.levels.borrow_mut().push(nadv.clone());
        match s {
            StStream::Linear(p) => self.producer(g, &nadv, p, &|_, e| self.leaf(&e)),
            StStream::Nested(p, f) => self.producer(g, &nadv, p, &|g, e| self.level(g, &f(g, e))),
        }
    }

    /// A single-element level is inlined as a conditional. A many-element
    /// level installs a resume procedure that produces one step per call and
    /// clears itself when exhausted.
    fn producer(&self, g: &Gen, nadv: &Name, p: &Producer, next: Cont<'_>) -> Stmt {
        let p = for_unfold(p);
        let (term, card, step) = unfold_parts(&p);
        (p.init)(g, &|g, s| match card {
            Cardinality::AtMost1 => Stmt::if_(term(&s), step(g, &s, next), None),
            Cardinality::Many => {
                let adv = g.fresh("adv");
                let body = Stmt::if_(
                    term(&s),
                    step(g, &s, next),
                    Some(Stmt::set(nadv, Expr::none())),
                );
                Stmt::ProcDef {
                    name: adv.clone(),
                    body: Box::new(body),
                    scope: Box::new(Stmt::set(nadv, Expr::some(Expr::var(&adv)))),
                }
            }
        })
    }
}

/// Turns a nested stream into a linear unfold producer. The current element
/// lives in a cell `curr`; a procedure `adv` refills it, resuming the
/// innermost suspended level first and stepping the outermost producer only
/// when no level is suspended.
///
/// # Panics
/// If `s` is linear.
pub fn make_linear(s: &StStream) -> Producer {
    let StStream::Nested(p0, f1) = s else {
        panic!("make_linear expects a nested stream");
    };
    let p0 = for_unfold(p0);
    let (term0, _, step0) = unfold_parts(&p0);
    let init0 = p0.init.clone();
    let f1 = f1.clone();
    let init = init_fn(move |g, k| {
        init0(g, &|g, s0| {
            let curr = g.fresh("curr");
            let r = Reify {
                curr: &curr,
                levels: RefCell::new(Vec::new()),
                elem: RefCell::new(None),
            };
            let outer = step0(g, &s0, &|g, e| r.level(g, &f1(g, e)));
            let levels = r.levels.into_inner();
            let elem = r.elem.into_inner().expect("reified stream has no element");
            let mut chain = outer;
            for nadv in &levels {
                let a = g.fresh("adv");
                chain = Stmt::MatchOpt {
                    scrutinee: Expr::cell_get(nadv),
                    name: a.clone(),
                    some: Box::new(Stmt::ProcCall(a)),
                    none: Box::new(chain),
                };
            }
            let pending = levels.iter().rev().fold(term0(&s0), |acc, n| {
                Expr::or(Expr::is_some(Expr::cell_get(n)), acc)
            });
            let cond = Expr::and(
                Expr::cmp(CmpOp::Eq, Expr::cell_get(&curr), Expr::none()),
                pending,
            );
            let adv = g.fresh("adv");
            let adv_body = Stmt::seq([Stmt::set(&curr, Expr::none()), Stmt::while_(cond, chain)]);
            let elem_ty = elem.ty();
            let rest = Stmt::seq([
                Stmt::ProcCall(adv.clone()),
                k(
                    g,
                    Rc::new(State::Reified {
                        curr: curr.clone(),
                        adv: adv.clone(),
                        elem,
                    }),
                ),
            ]);
            let with_proc = Stmt::ProcDef {
                name: adv,
                body: Box::new(adv_body),
                scope: Box::new(rest),
            };
            let with_levels = levels.iter().rev().fold(with_proc, |acc, n| {
                Stmt::cell(n.clone(), Ty::option(Ty::Proc), Expr::none(), acc)
            });
            Stmt::cell(curr.clone(), Ty::option(elem_ty), Expr::none(), with_levels)
        })
    });
    let term = expr_of(|s| {
        let State::Reified { curr, .. } = s else {
            panic!("expected a reified state");
        };
        Expr::is_some(Expr::cell_get(curr))
    });
    let step = step_fn(|g, s, k| {
        let State::Reified { curr, adv, elem } = s else {
            panic!("expected a reified state");
        };
        let v = g.fresh("el");
        let got = unpack(elem, Expr::var(&v));
        Stmt::MatchOpt {
            scrutinee: Expr::cell_get(curr),
            name: v,
            some: Box::new(Stmt::seq([Stmt::ProcCall(adv.clone()), k(g, got)])),
            none: Box::new(Stmt::Skip),
        }
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

/// Pairs the elements of two streams, dispatching on their linearity.
pub fn zip_raw(g: &Gen, s1: &StStream, s2: &StStream) -> StStream {
    match (s1, s2) {
        (StStream::Linear(p1), StStream::Linear(p2)) => {
            g.record(ZipCase::LinearLinear);
            StStream::Linear(zip_producer(p1, p2))
        }
        (StStream::Linear(p1), StStream::Nested(p2, f2)) => {
            g.record(ZipCase::LinearNested);
            push_linear(&for_unfold(p1), &for_unfold(p2), f2.clone())
        }
        (StStream::Nested(p1, f1), StStream::Linear(p2)) => {
            g.record(ZipCase::NestedLinear);
            let swapped = push_linear(&for_unfold(p2), &for_unfold(p1), f1.clone());
            map_raw(
                transform(|g, e, k| {
                    let (y, x) = e.split();
                    k(g, StagedValue::pair(x.clone(), y.clone()))
                }),
                &swapped,
            )
        }
        (StStream::Nested(..), StStream::Nested(..)) => {
            g.record(ZipCase::NestedNested);
            let lin = StStream::Linear(make_linear(s1));
            match s2 {
                StStream::Nested(p2, f2) => {
                    push_linear(&for_unfold(lin.head()), &for_unfold(p2), f2.clone())
                }
                StStream::Linear(_) => unreachable!(),
            }
        }
    }
}
