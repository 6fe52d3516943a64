//! Textual rendering of programs.
//!
//! ```text
//! program(arr_1: int[]) {
//!   var s_2 := 0;
//!   let arr_3: int[] = arr_1;
//!   for i_4 = 0 to len(arr_3)-1 {
//!     let el_5: int = arr_3[i_4];
//!     s_2 := el_5+!s_2;
//!   }
//!   return s_2;
//! }
//! ```
//!
//! A binder's scope extends to the end of the enclosing block, so binder bodies
//! are printed as the statements that follow it. `var c := e;` omits the type
//! when it can be read off `e` (see [`syntactic_ty`]).

use std::fmt::Write;

use super::{BinOp, CmpOp, Expr, ExprKind, Program, Stmt, Ty};

/// Type of `e` determined by its syntax alone, without an environment.
pub fn syntactic_ty(e: &Expr) -> Option<Ty> {
    use ExprKind as K;
    match &e.kind {
        K::Int(_) | K::Bin(..) | K::ArrLen(_) | K::ArrGet(..) => Some(Ty::Int),
        K::Bool(_) | K::Cmp(..) | K::And(..) | K::Or(..) | K::Not(_) => Some(Ty::Bool),
        K::Unit => Some(Ty::Unit),
        K::Pair(a, b) => Some(Ty::pair(syntactic_ty(a)?, syntactic_ty(b)?)),
        K::Cons(h, _) => Some(Ty::list(syntactic_ty(h)?)),
        K::Some(a) => Some(Ty::option(syntactic_ty(a)?)),
        K::SomePair(a, b) => Some(Ty::option(Ty::pair(syntactic_ty(a)?, syntactic_ty(b)?))),
        K::Var(_) | K::CellGet(_) | K::Fst(_) | K::Snd(_) | K::Nil | K::None => None,
    }
}

// Precedence levels, loosest first.
const OR: u8 = 1;
const AND: u8 = 2;
const CMP: u8 = 3;
const CONS: u8 = 4;
const ADD: u8 = 5;
const MUL: u8 = 6;
const UNARY: u8 = 7;
const POSTFIX: u8 = 8;
const ATOM: u8 = 9;

fn level(e: &Expr) -> u8 {
    use ExprKind::*;
    match &e.kind {
        Or(..) => OR,
        And(..) => AND,
        Cmp(..) => CMP,
        Cons(..) => CONS,
        Bin(BinOp::Add | BinOp::Sub, ..) => ADD,
        Bin(BinOp::Mul | BinOp::Div | BinOp::Mod, ..) => MUL,
        Not(_) => UNARY,
        ArrGet(..) => POSTFIX,
        _ => ATOM,
    }
}

fn cmp_sym(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Eq => "=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

fn bin_sym(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Mod => " mod ",
        BinOp::Min => "min",
    }
}

fn at(out: &mut String, e: &Expr, min: u8) {
    if level(e) < min {
        out.push('(');
        expr(out, e);
        out.push(')');
    } else {
        expr(out, e);
    }
}

fn infix(out: &mut String, a: &Expr, sym: &str, b: &Expr, lmin: u8, rmin: u8) {
    at(out, a, lmin);
    out.push_str(sym);
    at(out, b, rmin);
}

fn call(out: &mut String, f: &str, args: &[&Expr]) {
    out.push_str(f);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a);
    }
    out.push(')');
}

fn expr(out: &mut String, e: &Expr) {
    use ExprKind::*;
    match &e.kind {
        Int(n) if *n < 0 => write!(out, "({n})").unwrap(),
        Int(n) => write!(out, "{n}").unwrap(),
        Bool(b) => write!(out, "{b}").unwrap(),
        Unit => out.push_str("()"),
        Var(n) => write!(out, "{n}").unwrap(),
        CellGet(n) => write!(out, "!{n}").unwrap(),
        Bin(BinOp::Min, a, b) => call(out, "min", &[a, b]),
        Bin(op, a, b) => {
            let l = level(e);
            infix(out, a, bin_sym(*op), b, l, l + 1)
        }
        Cmp(op, a, b) => infix(out, a, &format!(" {} ", cmp_sym(*op)), b, CONS, CONS),
        And(a, b) => infix(out, a, " && ", b, AND, AND + 1),
        Or(a, b) => infix(out, a, " || ", b, OR, OR + 1),
        Not(a) => {
            out.push_str("not ");
            at(out, a, UNARY);
        }
        ArrLen(a) => call(out, "len", &[a]),
        ArrGet(a, i) => {
            at(out, a, POSTFIX);
            out.push('[');
            expr(out, i);
            out.push(']');
        }
        Pair(a, b) => call(out, "", &[a, b]),
        Fst(a) => call(out, "fst", &[a]),
        Snd(a) => call(out, "snd", &[a]),
        Cons(h, t) => infix(out, h, "::", t, ADD, CONS),
        Nil => out.push_str("[]"),
        Some(a) => call(out, "Some", &[a]),
        None => out.push_str("None"),
        SomePair(a, b) => call(out, "Some", &[a, b]),
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e);
    s
}

/// The first line of a statement's rendering, without any nested block.
pub fn stmt_head(s: &Stmt) -> String {
    let e = expr_to_string;
    match s {
        Stmt::Let { name, ty, rhs, .. } => format!("let {name}: {ty} = {};", e(rhs)),
        Stmt::CellNew { name, ty, init, .. } => {
            if syntactic_ty(init).as_ref() == Some(ty) {
                format!("var {name} := {};", e(init))
            } else {
                format!("var {name}: {ty} := {};", e(init))
            }
        }
        Stmt::CellSet(n, v) => format!("{n} := {};", e(v)),
        Stmt::For { idx, upb, .. } => format!("for {idx} = 0 to {} {{", e(upb)),
        Stmt::While { cond, .. } => format!("while {} {{", e(cond)),
        Stmt::If { cond, .. } => format!("if {} {{", e(cond)),
        Stmt::MatchOptPair { scrutinee, .. } | Stmt::MatchOpt { scrutinee, .. } => {
            format!("match {} {{", e(scrutinee))
        }
        Stmt::ProcDef { name, .. } => format!("proc {name}() {{"),
        Stmt::ProcCall(n) => format!("{n}();"),
        Stmt::Seq(_) => "{ ... }".to_string(),
        Stmt::Skip => String::new(),
    }
}

struct Printer {
    out: String,
}

impl Printer {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn block(&mut self, depth: usize, s: &Stmt) {
        match s {
            Stmt::Seq(items) => {
                for i in items {
                    self.block(depth, i);
                }
            }
            Stmt::Skip => {}
            Stmt::Let { body, .. } | Stmt::CellNew { body, .. } => {
                self.line(depth, &stmt_head(s));
                self.block(depth, body);
            }
            Stmt::CellSet(..) | Stmt::ProcCall(_) => self.line(depth, &stmt_head(s)),
            Stmt::For { body, .. } | Stmt::While { body, .. } => {
                self.line(depth, &stmt_head(s));
                self.block(depth + 1, body);
                self.line(depth, "}");
            }
            Stmt::If { then, els, .. } => {
                self.line(depth, &stmt_head(s));
                self.block(depth + 1, then);
                match els {
                    Some(e) => {
                        self.line(depth, "} else {");
                        self.block(depth + 1, e);
                        self.line(depth, "}");
                    }
                    None => self.line(depth, "}"),
                }
            }
            Stmt::MatchOptPair {
                el, st, some, none, ..
            } => {
                self.line(depth, &stmt_head(s));
                self.line(depth + 1, &format!("Some({el}, {st}) => {{"));
                self.block(depth + 2, some);
                self.line(depth + 1, "}");
                self.line(depth + 1, "None => {");
                self.block(depth + 2, none);
                self.line(depth + 1, "}");
                self.line(depth, "}");
            }
            Stmt::MatchOpt {
                name, some, none, ..
            } => {
                self.line(depth, &stmt_head(s));
                self.line(depth + 1, &format!("Some({name}) => {{"));
                self.block(depth + 2, some);
                self.line(depth + 1, "}");
                self.line(depth + 1, "None => {");
                self.block(depth + 2, none);
                self.line(depth + 1, "}");
                self.line(depth, "}");
            }
            Stmt::ProcDef { body, scope, .. } => {
                self.line(depth, &stmt_head(s));
                self.block(depth + 1, body);
                self.line(depth, "}");
                self.block(depth, scope);
            }
        }
    }
}

pub fn print_stmt(s: &Stmt) -> String {
    let mut p = Printer { out: String::new() };
    p.block(0, s);
    p.out
}

pub fn print_program(p: &Program) -> String {
    let params: Vec<String> = p.params.iter().map(|(n, t)| format!("{n}: {t}")).collect();
    let mut pr = Printer {
        out: format!("program({}) {{\n", params.join(", ")),
    };
    pr.block(1, &p.body);
    pr.line(1, &format!("return {};", p.result.0));
    pr.out.push_str("}\n");
    pr.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Name, NameSession};

    #[test]
    fn for_header_renders_inclusive_bound() {
        let i = Name::new("i", 1);
        let a = Name::new("arr", 2);
        let s = Stmt::for_(
            i,
            Expr::bin(BinOp::Sub, Expr::arr_len(Expr::var(&a)), Expr::int(1)),
            Stmt::Skip,
        );
        assert_eq!(stmt_head(&s), "for i_1 = 0 to len(arr_2)-1 {");
    }

    #[test]
    fn cell_of_literal_omits_type() {
        let s = Stmt::cell(Name::new("s", 1), Ty::Int, Expr::int(0), Stmt::Skip);
        assert_eq!(stmt_head(&s), "var s_1 := 0;");
        let o = Stmt::cell(
            Name::new("c", 2),
            Ty::option(Ty::Int),
            Expr::none(),
            Stmt::Skip,
        );
        assert_eq!(stmt_head(&o), "var c_2: option<int> := None;");
    }

    #[test]
    fn parenthesizes_by_precedence() {
        let g = NameSession::new();
        let (a, b, c) = (g.fresh("a"), g.fresh("b"), g.fresh("c"));
        let (va, vb, vc) = (Expr::var(&a), Expr::var(&b), Expr::var(&c));
        let e = Expr::bin(
            BinOp::Mul,
            Expr::bin(BinOp::Add, va.clone(), vb.clone()),
            vc.clone(),
        );
        assert_eq!(expr_to_string(&e), "(a_1+b_2)*c_3");
        let e = Expr::bin(
            BinOp::Sub,
            va.clone(),
            Expr::bin(BinOp::Sub, vb.clone(), vc.clone()),
        );
        assert_eq!(expr_to_string(&e), "a_1-(b_2-c_3)");
        let e = Expr::and(
            Expr::cmp(CmpOp::Gt, Expr::cell_get(&a), Expr::int(0)),
            Expr::not(Expr::cmp(CmpOp::Eq, vb, Expr::none())),
        );
        assert_eq!(expr_to_string(&e), "!a_1 > 0 && not (b_2 = None)");
        let e = Expr::bin(BinOp::Add, va, Expr::int(-3));
        assert_eq!(expr_to_string(&e), "a_1+(-3)");
    }
}
