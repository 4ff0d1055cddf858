use std::fmt;

use serde::Serialize;

use super::lexer::{tokenize, Token, TokenKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Builtin functions callable from the DSL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
    Ramp,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Min,
        Func::Max,
        Func::Ramp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Ramp => "ramp",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn lookup(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum AstKind {
    /// Numeric literal, kept as written so it can be parsed at any precision.
    Const(String),
    /// `u1..un`, 1-based.
    Var(usize),
    Param(String),
    Drho,
    Eps,
    Neg(Box<Ast>),
    Binary(BinOp, Box<Ast>, Box<Ast>),
    Call(Func, Vec<Ast>),
}

#[derive(Debug, Clone, Serialize)]
pub struct Ast {
    pub kind: AstKind,
    pub span: Span,
}

impl Ast {
    /// Equality of the trees, ignoring source spans.
    pub fn same_structure(&self, other: &Ast) -> bool {
        use AstKind::*;
        match (&self.kind, &other.kind) {
            (Const(a), Const(b)) => a == b,
            (Var(a), Var(b)) => a == b,
            (Param(a), Param(b)) => a == b,
            (Drho, Drho) | (Eps, Eps) => true,
            (Neg(a), Neg(b)) => a.same_structure(b),
            (Binary(o1, l1, r1), Binary(o2, l2, r2)) => {
                o1 == o2 && l1.same_structure(l2) && r1.same_structure(r2)
            }
            (Call(f1, a1), Call(f2, a2)) => {
                f1 == f2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| x.same_structure(y))
            }
            _ => false,
        }
    }

    /// Highest variable index used (0 when the expression has no variables).
    pub fn max_var(&self) -> usize {
        match &self.kind {
            AstKind::Var(i) => *i,
            AstKind::Neg(a) => a.max_var(),
            AstKind::Binary(_, l, r) => l.max_var().max(r.max_var()),
            AstKind::Call(_, args) => args.iter().map(Ast::max_var).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Parameter names referenced, in first-occurrence order.
    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match &self.kind {
            AstKind::Param(p) => {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
            AstKind::Neg(a) => a.collect_params(out),
            AstKind::Binary(_, l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
            AstKind::Call(_, args) => args.iter().for_each(|a| a.collect_params(out)),
            _ => {}
        }
    }

    pub fn uses_drho(&self) -> bool {
        match &self.kind {
            AstKind::Drho => true,
            AstKind::Neg(a) => a.uses_drho(),
            AstKind::Binary(_, l, r) => l.uses_drho() || r.uses_drho(),
            AstKind::Call(_, args) => args.iter().any(Ast::uses_drho),
            _ => false,
        }
    }
}

/// Canonical fully parenthesized form; `parse` of it gives back the same tree.
pub fn print_ast(ast: &Ast) -> String {
    ast.to_string()
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            AstKind::Const(text) => f.write_str(text),
            AstKind::Var(i) => write!(f, "u{i}"),
            AstKind::Param(p) => f.write_str(p),
            AstKind::Drho => f.write_str("drho"),
            AstKind::Eps => f.write_str("eps"),
            AstKind::Neg(a) => write!(f, "(-{a})"),
            AstKind::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            AstKind::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Tokenizes and parses a DSL expression.
pub fn parse(src: &str) -> Result<Ast> {
    let tokens = tokenize(src)?;
    parse_tokens(&tokens, src.len())
}

/// Parses a token list. `src_len` positions the end-of-input error.
///
/// ```text
/// expr  := term (("+"|"-") term)*
/// term  := unary (("*"|"/") unary)*
/// unary := "-" unary | power
/// power := atom ("^" unary)?
/// atom  := number | "drho" | "eps" | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
/// ```
pub fn parse_tokens(tokens: &[Token<'_>], src_len: usize) -> Result<Ast> {
    let mut p = Parser {
        tokens,
        pos: 0,
        src_len,
    };
    let ast = p.expr()?;
    if p.pos < tokens.len() {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(ast)
}

struct Parser<'t, 'a> {
    tokens: &'t [Token<'a>],
    pos: usize,
    src_len: usize,
}

impl<'t, 'a> Parser<'t, 'a> {
    fn peek(&self) -> Option<&'t Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn position(&self) -> usize {
        self.peek().map(|t| t.position).unwrap_or(self.src_len)
    }

    fn error(&self, expected: &[&str]) -> Error {
        Error::Parse {
            position: self.position(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn peek_op(&self) -> Option<char> {
        self.peek().and_then(|t| t.op())
    }

    fn end_of_prev(&self) -> usize {
        let t = &self.tokens[self.pos - 1];
        t.position + t.text.len()
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast> {
        if self.peek_op() == Some('-') {
            let start = self.position();
            self.pos += 1;
            let inner = self.unary()?;
            let end = inner.span.end;
            return Ok(Ast {
                kind: AstKind::Neg(Box::new(inner)),
                span: Span { start, end },
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast> {
        const ATOM: &[&str] = &["number", "identifier", "\"(\"", "\"-\""];
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error(ATOM));
        };
        let start = tok.position;
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                Ok(Ast {
                    kind: AstKind::Const(tok.text.to_string()),
                    span: Span {
                        start,
                        end: self.end_of_prev(),
                    },
                })
            }
            TokenKind::LParen => {
                self.pos += 1;
                let mut inner = self.expr()?;
                self.expect_rparen()?;
                inner.span = Span {
                    start,
                    end: self.end_of_prev(),
                };
                Ok(inner)
            }
            TokenKind::Identifier => {
                self.pos += 1;
                let name = tok.text;
                let followed_by_paren =
                    matches!(self.peek(), Some(t) if t.kind == TokenKind::LParen);
                if followed_by_paren {
                    let Some(func) = Func::lookup(name) else {
                        self.pos -= 1;
                        let names: Vec<&str> = Func::ALL.iter().map(|f| f.name()).collect();
                        return Err(self.error(&names));
                    };
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while matches!(self.peek(), Some(t) if t.kind == TokenKind::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    if args.len() != func.arity() {
                        let expected = if args.len() < func.arity() {
                            "\",\""
                        } else {
                            "\")\""
                        };
                        return Err(self.error(&[expected]));
                    }
                    self.expect_rparen()?;
                    return Ok(Ast {
                        kind: AstKind::Call(func, args),
                        span: Span {
                            start,
                            end: self.end_of_prev(),
                        },
                    });
                }
                if Func::lookup(name).is_some() {
                    return Err(self.error(&["\"(\""]));
                }
                let kind = match name {
                    "drho" => AstKind::Drho,
                    "eps" => AstKind::Eps,
                    _ => match variable_index(name) {
                        Some(i) => AstKind::Var(i),
                        None => AstKind::Param(name.to_string()),
                    },
                };
                Ok(Ast {
                    kind,
                    span: Span {
                        start,
                        end: self.end_of_prev(),
                    },
                })
            }
            _ => Err(self.error(ATOM)),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::RParen => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&["\")\""])),
        }
    }
}

fn binary(op: BinOp, lhs: Ast, rhs: Ast) -> Ast {
    let span = Span {
        start: lhs.span.start,
        end: rhs.span.end,
    };
    Ast {
        kind: AstKind::Binary(op, Box::new(lhs), Box::new(rhs)),
        span,
    }
}

/// `u<k>` with `k >= 1` and no leading zero names a variable.
fn variable_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('u')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}
