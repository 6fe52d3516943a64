//! Parser for the textual form produced by [`super::print_program`].

use super::print::syntactic_ty;
use super::{BinOp, CmpOp, Expr, Name, Program, Stmt, Ty};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: &[&str] = &[
    ":=", "::", "&&", "||", "<=", ">=", "=>", "(", ")", "{", "}", "[", "]", "<", ">", "=", ",",
    ";", ":", "+", "-", "*", "/", "!",
];

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        let tok = if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let n = text.parse::<i64>().map_err(|_| ParseError {
                line,
                col,
                msg: format!("integer literal {text} out of range"),
            })?;
            col += j - i;
            i = j;
            Tok::Int(n)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            col += j - i;
            i = j;
            Tok::Ident(text)
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let sym = SYMBOLS
                .iter()
                .find(|s| rest.starts_with(**s))
                .ok_or_else(|| ParseError {
                    line,
                    col,
                    msg: format!("unexpected character `{c}`"),
                })?;
            i += sym.len();
            col += sym.len();
            Tok::Sym(sym)
        };
        out.push(Lexed {
            tok,
            line: start.0,
            col: start.1,
        });
    }
    out.push(Lexed {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

type R<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn err<T>(&self, msg: impl Into<String>) -> R<T> {
        let t = &self.toks[self.pos];
        Err(ParseError {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> R<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {:?}", self.peek()))
        }
    }

    fn expect_kw(&mut self, k: &str) -> R<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{k}`, found {:?}", self.peek()))
        }
    }

    fn name(&mut self) -> R<Name> {
        let Tok::Ident(text) = self.peek().clone() else {
            return self.err(format!("expected a name, found {:?}", self.peek()));
        };
        let parsed = text
            .rsplit_once('_')
            .and_then(|(h, id)| Some((h, id.parse::<u32>().ok()?)))
            .filter(|(h, _)| !h.is_empty());
        match parsed {
            Some((h, id)) => {
                self.bump();
                Ok(Name::new(h, id))
            }
            None => self.err(format!("`{text}` is not a name of the form hint_index")),
        }
    }

    fn ty(&mut self) -> R<Ty> {
        if self.eat_sym("(") {
            let a = self.ty()?;
            self.expect_sym(",")?;
            let b = self.ty()?;
            self.expect_sym(")")?;
            return Ok(Ty::pair(a, b));
        }
        let Tok::Ident(k) = self.peek().clone() else {
            return self.err("expected a type");
        };
        self.bump();
        Ok(match k.as_str() {
            "int" => {
                if self.eat_sym("[") {
                    self.expect_sym("]")?;
                    Ty::ArrInt
                } else {
                    Ty::Int
                }
            }
            "bool" => Ty::Bool,
            "unit" => Ty::Unit,
            "proc" => Ty::Proc,
            "list" | "option" => {
                self.expect_sym("<")?;
                let t = self.ty()?;
                self.expect_sym(">")?;
                if k == "list" {
                    Ty::list(t)
                } else {
                    Ty::option(t)
                }
            }
            _ => return self.err(format!("unknown type `{k}`")),
        })
    }

    fn expr(&mut self) -> R<Expr> {
        let mut e = self.and_expr()?;
        while self.eat_sym("||") {
            e = Expr::or(e, self.and_expr()?);
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> R<Expr> {
        let mut e = self.cmp_expr()?;
        while self.eat_sym("&&") {
            e = Expr::and(e, self.cmp_expr()?);
        }
        Ok(e)
    }

    fn cmp_expr(&mut self) -> R<Expr> {
        let a = self.cons_expr()?;
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return Ok(a),
        };
        self.bump();
        let b = self.cons_expr()?;
        Ok(Expr::cmp(op, a, b))
    }

    fn cons_expr(&mut self) -> R<Expr> {
        let h = self.add_expr()?;
        if self.eat_sym("::") {
            Ok(Expr::cons(h, self.cons_expr()?))
        } else {
            Ok(h)
        }
    }

    fn add_expr(&mut self) -> R<Expr> {
        let mut e = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(e),
            };
            self.bump();
            e = Expr::bin(op, e, self.mul_expr()?);
        }
    }

    fn mul_expr(&mut self) -> R<Expr> {
        let mut e = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                Tok::Ident(k) if k == "mod" => BinOp::Mod,
                _ => return Ok(e),
            };
            self.bump();
            e = Expr::bin(op, e, self.unary()?);
        }
    }

    fn unary(&mut self) -> R<Expr> {
        if self.is_kw("not") {
            self.bump();
            return Ok(Expr::not(self.unary()?));
        }
        let mut e = self.atom()?;
        while self.eat_sym("[") {
            let i = self.expr()?;
            self.expect_sym("]")?;
            e = Expr::arr_get(e, i);
        }
        Ok(e)
    }

    fn args(&mut self) -> R<Vec<Expr>> {
        self.expect_sym("(")?;
        let mut v = Vec::new();
        if !self.is_sym(")") {
            v.push(self.expr()?);
            while self.eat_sym(",") {
                v.push(self.expr()?);
            }
        }
        self.expect_sym(")")?;
        Ok(v)
    }

    fn atom(&mut self) -> R<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::int(n))
            }
            Tok::Sym("!") => {
                self.bump();
                Ok(Expr::cell_get(&self.name()?))
            }
            Tok::Sym("[") => {
                self.bump();
                self.expect_sym("]")?;
                Ok(Expr::nil())
            }
            Tok::Sym("(") => {
                if matches!(self.peek2(), Tok::Sym("-")) {
                    self.bump();
                    self.bump();
                    let Tok::Int(n) = self.bump() else {
                        return self.err("expected an integer after `(-`");
                    };
                    self.expect_sym(")")?;
                    return Ok(Expr::int(n.wrapping_neg()));
                }
                let mut v = self.args()?;
                match v.len() {
                    0 => Ok(Expr::new(super::ExprKind::Unit)),
                    1 => Ok(v.pop().unwrap()),
                    2 => {
                        let b = v.pop().unwrap();
                        Ok(Expr::pair(v.pop().unwrap(), b))
                    }
                    _ => self.err("tuples have at most two components"),
                }
            }
            Tok::Ident(k) => {
                let fixed = |p: &Self, v: Vec<Expr>, n: usize| -> R<Vec<Expr>> {
                    if v.len() == n {
                        Ok(v)
                    } else {
                        p.err(format!("`{k}` takes {n} argument(s)"))
                    }
                };
                match k.as_str() {
                    "true" | "false" => {
                        self.bump();
                        Ok(Expr::bool(k == "true"))
                    }
                    "None" => {
                        self.bump();
                        Ok(Expr::none())
                    }
                    "len" | "fst" | "snd" | "min" | "Some" => {
                        self.bump();
                        let args = self.args()?;
                        let mut it = match k.as_str() {
                            "min" => fixed(self, args, 2)?,
                            "Some" if args.len() == 2 => args,
                            _ => fixed(self, args, 1)?,
                        }
                        .into_iter();
                        let a = it.next().unwrap();
                        Ok(match (k.as_str(), it.next()) {
                            ("len", _) => Expr::arr_len(a),
                            ("fst", _) => Expr::fst(a),
                            ("snd", _) => Expr::snd(a),
                            ("min", Some(b)) => Expr::bin(BinOp::Min, a, b),
                            ("Some", Some(b)) => Expr::some_pair(a, b),
                            _ => Expr::some(a),
                        })
                    }
                    _ => Ok(Expr::var(&self.name()?)),
                }
            }
            t => self.err(format!("unexpected {t:?} in expression")),
        }
    }

    fn at_block_end(&self) -> bool {
        self.is_sym("}") || self.is_kw("return") || matches!(self.peek(), Tok::Eof)
    }

    fn braced(&mut self) -> R<Stmt> {
        self.expect_sym("{")?;
        let b = self.block()?;
        self.expect_sym("}")?;
        Ok(b)
    }

    /// Statements up to (not including) `}` or `return`.
    fn block(&mut self) -> R<Stmt> {
        let mut items = Vec::new();
        while !self.at_block_end() {
            if self.is_kw("let") {
                self.bump();
                let name = self.name()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                self.expect_sym("=")?;
                let rhs = self.expr()?;
                self.expect_sym(";")?;
                items.push(Stmt::let_(name, ty, rhs, self.block()?));
                break;
            }
            if self.is_kw("var") {
                self.bump();
                let name = self.name()?;
                let annotated = if self.eat_sym(":") {
                    Some(self.ty()?)
                } else {
                    None
                };
                self.expect_sym(":=")?;
                let init = self.expr()?;
                let ty = match annotated.or_else(|| syntactic_ty(&init)) {
                    Some(t) => t,
                    None => return self.err(format!("cell {name} needs a type annotation")),
                };
                self.expect_sym(";")?;
                items.push(Stmt::cell(name, ty, init, self.block()?));
                break;
            }
            if self.is_kw("proc") {
                self.bump();
                let name = self.name()?;
                self.expect_sym("(")?;
                self.expect_sym(")")?;
                let body = self.braced()?;
                items.push(Stmt::ProcDef {
                    name,
                    body: Box::new(body),
                    scope: Box::new(self.block()?),
                });
                break;
            }
            items.push(self.simple()?);
        }
        Ok(Stmt::Seq(items).normalize())
    }

    fn simple(&mut self) -> R<Stmt> {
        if self.is_kw("for") {
            self.bump();
            let idx = self.name()?;
            self.expect_sym("=")?;
            match self.bump() {
                Tok::Int(0) => {}
                _ => return self.err("for loops start at 0"),
            }
            self.expect_kw("to")?;
            let upb = self.expr()?;
            let body = self.braced()?;
            return Ok(Stmt::for_(idx, upb, body));
        }
        if self.is_kw("while") {
            self.bump();
            let cond = self.expr()?;
            let body = self.braced()?;
            return Ok(Stmt::while_(cond, body));
        }
        if self.is_kw("if") {
            self.bump();
            let cond = self.expr()?;
            let then = self.braced()?;
            let els = if self.is_kw("else") {
                self.bump();
                Some(self.braced()?)
            } else {
                None
            };
            return Ok(Stmt::if_(cond, then, els));
        }
        if self.is_kw("match") {
            return self.match_stmt();
        }
        let n = self.name()?;
        if self.eat_sym("(") {
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            return Ok(Stmt::ProcCall(n));
        }
        self.expect_sym(":=")?;
        let e = self.expr()?;
        self.expect_sym(";")?;
        Ok(Stmt::CellSet(n, e))
    }

    fn match_stmt(&mut self) -> R<Stmt> {
        self.bump();
        let scrutinee = self.expr()?;
        self.expect_sym("{")?;
        self.expect_kw("Some")?;
        self.expect_sym("(")?;
        let a = self.name()?;
        let b = if self.eat_sym(",") {
            Some(self.name()?)
        } else {
            None
        };
        self.expect_sym(")")?;
        self.expect_sym("=>")?;
        let some = Box::new(self.braced()?);
        self.eat_sym(",");
        self.expect_kw("None")?;
        self.expect_sym("=>")?;
        let none = Box::new(self.braced()?);
        self.eat_sym(",");
        self.expect_sym("}")?;
        Ok(match b {
            Some(st) => Stmt::MatchOptPair {
                scrutinee,
                el: a,
                st,
                some,
                none,
            },
            None => Stmt::MatchOpt {
                scrutinee,
                name: a,
                some,
                none,
            },
        })
    }

    fn program(&mut self) -> R<Program> {
        self.expect_kw("program")?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                let n = self.name()?;
                self.expect_sym(":")?;
                params.push((n, self.ty()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym("{")?;
        let body = self.block()?;
        self.expect_kw("return")?;
        let res = self.name()?;
        self.expect_sym(";")?;
        self.expect_sym("}")?;
        if !matches!(self.peek(), Tok::Eof) {
            return self.err("trailing input after program");
        }
        let ty = match super::check::spine_cell(&body, &res) {
            Some(t) => t.clone(),
            None => return self.err(format!("result {res} is not a cell declared in the body")),
        };
        Ok(Program {
            params,
            body,
            result: (res, ty),
        })
    }
}

/// Parses a whole program. `#` starts a comment running to end of line.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    p.program()
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if !matches!(p.peek(), Tok::Eof) {
        return p.err("trailing input after expression");
    }
    Ok(e)
}
