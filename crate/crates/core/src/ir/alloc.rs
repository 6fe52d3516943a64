//! Static allocation scan.
//!
//! Counts allocation nodes that are not user-tagged and sit syntactically
//! inside a loop body. Procedure bodies count as loop context because a
//! procedure can be called from inside a loop.

use std::fmt;

use super::print::{expr_to_string, stmt_head};
use super::{Expr, Stmt};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllocSite {
    /// Header of the statement holding the allocation.
    pub stmt: String,
    /// The allocating expression (or `proc name` for a procedure value).
    pub node: String,
    /// Number of loops/procedures enclosing the site.
    pub depth: usize,
}

impl fmt::Display for AllocSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in `{}` (depth {})", self.node, self.stmt, self.depth)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AllocReport {
    pub loop_allocs_nonuser: usize,
    pub locations: Vec<AllocSite>,
    /// Every allocation node in the program, user or not, in or out of loops.
    pub total_alloc_nodes: usize,
}

fn scan(s: &Stmt, depth: usize, r: &mut AllocReport) {
    for e in s.exprs() {
        e.walk(&mut |n: &Expr| {
            if n.is_alloc() {
                r.total_alloc_nodes += 1;
                if depth > 0 && !n.user {
                    r.loop_allocs_nonuser += 1;
                    r.locations.push(AllocSite {
                        stmt: stmt_head(s),
                        node: expr_to_string(n),
                        depth,
                    });
                }
            }
        });
    }
    match s {
        Stmt::For { body, .. } | Stmt::While { body, .. } => scan(body, depth + 1, r),
        Stmt::ProcDef { name, body, scope } => {
            r.total_alloc_nodes += 1;
            if depth > 0 {
                r.loop_allocs_nonuser += 1;
                r.locations.push(AllocSite {
                    stmt: stmt_head(s),
                    node: format!("proc {name}"),
                    depth,
                });
            }
            scan(body, depth + 1, r);
            scan(scope, depth, r);
        }
        _ => {
            for c in s.children() {
                scan(c, depth, r);
            }
        }
    }
}

pub fn alloc_scan(p: &super::Program) -> AllocReport {
    let mut r = AllocReport::default();
    scan(&p.body, 0, &mut r);
    r
}
