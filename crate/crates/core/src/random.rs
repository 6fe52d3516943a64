//! Random well-formed pipelines for differential testing.
//!
//! Grammar limits: at most three `flat_map`s along any path (nested or in
//! sequence), at most two `zip_with`s, arrays of at most 32 elements,
//! constants in `[-8, 8]`. Every `iota` and `unfold` is immediately followed by a `take`. Divisors are
//! nonzero constants, so no generated pipeline can fail at run time.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{Datum, Ty};
use crate::spec::{check, Lambda, Op, PipelineSpec, Reduce, SExpr, SOp, Source, StreamSpec};

#[derive(Clone, Debug)]
pub struct Config {
    pub max_depth: usize,
    pub max_zips: usize,
    pub max_len: usize,
    pub max_const: i64,
    pub max_ops: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_depth: 3,
            max_zips: 2,
            max_len: 32,
            max_const: 8,
            max_ops: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Case {
    pub seed: u64,
    pub spec: PipelineSpec,
    pub inputs: HashMap<String, Datum>,
}

const ARRAYS: [&str; 3] = ["a", "b", "c"];
const VARS: [&str; 4] = ["x", "y", "v", "w"];

struct G<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a Config,
    zips: usize,
}

impl<R: Rng> G<'_, R> {
    fn konst(&mut self) -> SExpr {
        SExpr::Int(self.rng.gen_range(-self.cfg.max_const..=self.cfg.max_const))
    }

    fn nonzero(&mut self) -> SExpr {
        let k = self.rng.gen_range(1..=self.cfg.max_const);
        SExpr::Int(if self.rng.gen_bool(0.5) { k } else { -k })
    }

    fn int(&mut self, vars: &[String], size: usize) -> SExpr {
        if size == 0 || self.rng.gen_bool(0.3) {
            return match vars.choose(self.rng) {
                Some(v) if self.rng.gen_bool(0.7) => SExpr::Var(v.clone()),
                _ => self.konst(),
            };
        }
        let a = self.int(vars, size - 1);
        match self.rng.gen_range(0..6) {
            0 => SExpr::bin(SOp::Add, a, self.int(vars, size - 1)),
            1 => SExpr::bin(SOp::Sub, a, self.int(vars, size - 1)),
            2 => SExpr::bin(SOp::Mul, a, self.int(vars, size - 1)),
            3 => SExpr::bin(SOp::Min, a, self.int(vars, size - 1)),
            4 => SExpr::bin(SOp::Div, a, self.nonzero()),
            _ => SExpr::bin(SOp::Mod, a, self.nonzero()),
        }
    }

    fn boolean(&mut self, vars: &[String], size: usize) -> SExpr {
        let ops = [SOp::Lt, SOp::Le, SOp::Eq, SOp::Gt, SOp::Ge];
        let op = *ops.choose(self.rng).unwrap();
        let cmp = SExpr::bin(op, self.int(vars, size), self.int(vars, 0));
        match self.rng.gen_range(0..8) {
            0 => SExpr::app(SOp::Not, vec![cmp]),
            1 => SExpr::bin(SOp::And, cmp, self.boolean(vars, 0)),
            2 => SExpr::bin(SOp::Or, cmp, self.boolean(vars, 0)),
            _ => cmp,
        }
    }

    fn var(&mut self) -> String {
        VARS.choose(self.rng).unwrap().to_string()
    }

    fn small_count(&mut self, vars: &[String]) -> SExpr {
        match self.rng.gen_range(0..10) {
            0 => SExpr::Param("n".into()),
            1 => SExpr::Int(self.rng.gen_range(-1..=0)),
            2 if !vars.is_empty() => SExpr::bin(SOp::Mod, self.int(vars, 0), SExpr::Int(5)),
            _ => SExpr::Int(self.rng.gen_range(1..=8)),
        }
    }

    fn source(&mut self, vars: &[String]) -> (Source, Option<Op>) {
        match self.rng.gen_range(0..10) {
            0 | 1 => {
                let start = self.int(vars, 1);
                (Source::Iota(start), Some(Op::Take(self.small_count(vars))))
            }
            2 => {
                let k = self.var();
                let mut svars = vars.to_vec();
                svars.push(k.clone());
                let next = self.int(&svars, 1);
                let el = self.int(&svars, 1);
                let seed = self.int(vars, 1);
                let step = SExpr::app(SOp::SomePair, vec![el, next]);
                (
                    Source::Unfold {
                        param: k,
                        seed,
                        step,
                    },
                    Some(Op::Take(self.small_count(vars))),
                )
            }
            _ => (
                Source::OfArr(ARRAYS.choose(self.rng).unwrap().to_string()),
                None,
            ),
        }
    }

    /// `depth` counts every `flat_map` on the path so far, sequential ones
    /// included, since each multiplies the element count.
    fn stream(&mut self, vars: &[String], mut depth: usize) -> StreamSpec {
        let (source, take) = self.source(vars);
        let mut ops: Vec<Op> = take.into_iter().collect();
        let n = self.rng.gen_range(0..=self.cfg.max_ops);
        for _ in 0..n {
            let op = match self.rng.gen_range(0..10) {
                0..=2 => {
                    let x = self.var();
                    let body = self.int(&with(vars, &x), 2);
                    Op::Map(Lambda {
                        params: vec![x],
                        body,
                    })
                }
                3 | 4 => {
                    let x = self.var();
                    let body = self.boolean(&with(vars, &x), 1);
                    Op::Filter(Lambda {
                        params: vec![x],
                        body,
                    })
                }
                5 => Op::Take(self.small_count(vars)),
                6 | 7 if depth < self.cfg.max_depth => {
                    let x = self.var();
                    depth += 1;
                    let inner = self.stream(&with(vars, &x), depth);
                    Op::FlatMap {
                        param: x,
                        stream: inner,
                    }
                }
                8 | 9 if self.zips < self.cfg.max_zips => {
                    self.zips += 1;
                    let other = self.stream(vars, depth);
                    let (x, y) = distinct(self);
                    let fv = with(&with(vars, &x), &y);
                    let body = self.int(&fv, 2);
                    Op::ZipWith {
                        stream: other,
                        f: Lambda {
                            params: vec![x, y],
                            body,
                        },
                    }
                }
                _ => continue,
            };
            ops.push(op);
        }
        StreamSpec { source, ops }
    }

    fn pipeline(&mut self) -> PipelineSpec {
        let mut stream = self.stream(&[], 0);
        let reduce = match self.rng.gen_range(0..10) {
            0 if self.zips < self.cfg.max_zips => {
                self.zips += 1;
                let other = self.stream(&[], 0);
                stream.ops.push(Op::ZipWith {
                    stream: other,
                    f: Lambda::new(
                        &["x", "y"],
                        SExpr::bin(SOp::Pair, SExpr::var("x"), SExpr::var("y")),
                    ),
                });
                Reduce::FoldCons
            }
            1 => Reduce::FoldCons,
            2 | 3 => {
                let vars = vec!["z".to_string(), "a".to_string()];
                Reduce::Fold {
                    f: Lambda::new(&["z", "a"], self.int(&vars, 2)),
                    seed: self.konst(),
                }
            }
            _ => Reduce::Sum,
        };
        PipelineSpec { stream, reduce }
    }
}

fn with(vars: &[String], x: &str) -> Vec<String> {
    let mut v = vars.to_vec();
    v.push(x.to_string());
    v
}

fn distinct<R: Rng>(g: &mut G<'_, R>) -> (String, String) {
    let x = g.var();
    loop {
        let y = g.var();
        if y != x {
            return (x, y);
        }
    }
}

/// Random inputs for every parameter of `spec`.
pub fn random_inputs(
    rng: &mut impl Rng,
    spec: &PipelineSpec,
    cfg: &Config,
) -> HashMap<String, Datum> {
    let params = check(spec, false).map(|c| c.params).unwrap_or_default();
    params
        .into_iter()
        .map(|(name, ty)| {
            let d = match ty {
                Ty::ArrInt => {
                    let len = rng.gen_range(0..=cfg.max_len);
                    Datum::Arr((0..len).map(|_| rng.gen_range(-20..=20)).collect())
                }
                _ => Datum::Int(rng.gen_range(-2..=12)),
            };
            (name, d)
        })
        .collect()
}

/// Cases whose [`pull_bound`] exceeds this are redrawn, keeping every case
/// well inside the oracle's element budget and the evaluator's fuel.
pub const MAX_PULLS: u64 = 200_000;

pub fn random_spec(rng: &mut impl Rng, cfg: &Config) -> PipelineSpec {
    loop {
        let spec = G {
            rng: &mut *rng,
            cfg,
            zips: 0,
        }
        .pipeline();
        if pull_bound(&spec.stream, cfg) <= MAX_PULLS {
            return spec;
        }
    }
}

/// Upper bounds on (elements produced, source elements pulled), for
/// streams from this grammar.
fn bounds(s: &StreamSpec, cfg: &Config) -> (u64, u64) {
    const INF: u64 = u64::MAX;
    let (mut count, mut pulls) = match s.source {
        Source::OfArr(_) => (cfg.max_len as u64, cfg.max_len as u64),
        _ => (INF, INF),
    };
    for op in &s.ops {
        match op {
            Op::Map(_) | Op::Filter(_) => {}
            Op::Take(e) => {
                let k = match e {
                    SExpr::Int(k) => (*k).max(0) as u64,
                    _ => 12,
                };
                count = count.min(k);
                if pulls == INF {
                    // Only ever directly after an infinite source.
                    pulls = k;
                }
            }
            Op::FlatMap { stream, .. } => {
                let (c, p) = bounds(stream, cfg);
                pulls = pulls.saturating_add(count.saturating_mul(p));
                count = count.saturating_mul(c);
            }
            Op::ZipWith { stream, .. } => {
                let (c, p) = bounds(stream, cfg);
                count = count.min(c);
                pulls = pulls.saturating_add(p);
            }
        }
    }
    (count, pulls)
}

pub fn pull_bound(s: &StreamSpec, cfg: &Config) -> u64 {
    bounds(s, cfg).1
}

/// The case for one seed; the same seed always gives the same case.
pub fn case(seed: u64, cfg: &Config) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = random_spec(&mut rng, cfg);
    let inputs = random_inputs(&mut rng, &spec, cfg);
    Case { seed, spec, inputs }
}

/// Largest number of `flat_map`s on one path, sequential ones included,
/// and number of zips in a stream.
pub fn measure(s: &StreamSpec) -> (usize, usize) {
    let mut depth = 0;
    let mut zips = 0;
    let mut seq = 0;
    for op in &s.ops {
        match op {
            Op::FlatMap { stream, .. } => {
                seq += 1;
                let (d, z) = measure(stream);
                depth = depth.max(seq + d);
                zips += z;
            }
            Op::ZipWith { stream, .. } => {
                let (d, z) = measure(stream);
                depth = depth.max(seq + d);
                zips += z + 1;
            }
            _ => {}
        }
    }
    (depth, zips)
}
