//! Structural summaries used by golden-shape tests.

use super::{walk_exprs, Program, Stmt};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ShapeSummary {
    pub fors: usize,
    pub whiles: usize,
    pub ifs: usize,
    pub cells: usize,
    pub lets: usize,
    pub procs: usize,
    pub matches: usize,
    /// Deepest nesting of `for`/`while`.
    pub max_loop_depth: usize,
    pub alloc_nodes: usize,
}

fn depth(s: &Stmt) -> usize {
    let inner = s.children().into_iter().map(depth).max().unwrap_or(0);
    match s {
        Stmt::For { .. } | Stmt::While { .. } => inner + 1,
        _ => inner,
    }
}

pub fn summarize(p: &Program) -> ShapeSummary {
    let mut r = ShapeSummary {
        max_loop_depth: depth(&p.body),
        ..Default::default()
    };
    p.body.walk(&mut |s| match s {
        Stmt::For { .. } => r.fors += 1,
        Stmt::While { .. } => r.whiles += 1,
        Stmt::If { .. } => r.ifs += 1,
        Stmt::CellNew { .. } => r.cells += 1,
        Stmt::Let { .. } => r.lets += 1,
        Stmt::ProcDef { .. } => r.procs += 1,
        Stmt::MatchOpt { .. } | Stmt::MatchOptPair { .. } => r.matches += 1,
        _ => {}
    });
    walk_exprs(&p.body, &mut |e| {
        if e.is_alloc() {
            r.alloc_nodes += 1;
        }
    });
    r
}
