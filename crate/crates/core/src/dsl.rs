//! A small expression language for integrand specs: arithmetic, a few
//! standard functions, `if <cmp> then <e> else <e>` piecewise definitions,
//! and gallery references.
//!
//! Rational literals written as `p/q` (two integer literals joined by `/`)
//! are folded to exact rationals at parse time and survive printing without
//! decimal conversion; decimal literals convert exactly (`0.25` is `1/4`).
//! Evaluation is in decimals; the integrator rounds oracle outputs onto its
//! rational grid afterwards. The grammar ships in `docs/dsl-grammar.ebnf`.

use crate::gallery;
use crate::geometry::Brick;
use crate::integrator::IntegrandSpec;
use crate::oracle::{EvalError, PointOracle};
use crate::rational::{fmt_rat, rat_to_f64, Rat};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
#[error("syntax error at line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Abs,
    Min,
    Max,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Sin | Func::Cos | Func::Abs => 1,
            Func::Min | Func::Max => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

/// Expression tree. `Num` always carries a nonnegative rational; negative
/// constants appear as `Neg(Num(..))`, which is what the parser produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(#[serde(with = "crate::rational::serde_rat")] Rat),
    /// 0-based variable index; prints as `x{i+1}`.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    If {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    Gallery {
        name: String,
        params: Vec<(String, i64)>,
    },
}

impl Expr {
    /// Smart constructor keeping `Num` nonnegative.
    pub fn num(r: Rat) -> Expr {
        if r.is_negative() {
            Expr::Neg(Box::new(Expr::Num(-r)))
        } else {
            Expr::Num(r)
        }
    }

    /// Largest variable index referenced (1-based count), 0 when constant.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Gallery { .. } => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(e) => e.max_var(),
            Expr::Bin(_, a, b) => a.max_var().max(b.max_var()),
            Expr::Call(_, args) => args.iter().map(Expr::max_var).max().unwrap_or(0),
            Expr::If { lhs, rhs, then, otherwise, .. } => lhs
                .max_var()
                .max(rhs.max_var())
                .max(then.max_var())
                .max(otherwise.max_var()),
        }
    }

    fn gallery_refs<'a>(&'a self, out: &mut Vec<(&'a str, &'a [(String, i64)])>) {
        match self {
            Expr::Gallery { name, params } => out.push((name, params)),
            Expr::Neg(e) => e.gallery_refs(out),
            Expr::Bin(_, a, b) => {
                a.gallery_refs(out);
                b.gallery_refs(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.gallery_refs(out)),
            Expr::If { lhs, rhs, then, otherwise, .. } => {
                lhs.gallery_refs(out);
                rhs.gallery_refs(out);
                then.gallery_refs(out);
                otherwise.gallery_refs(out);
            }
            Expr::Num(_) | Expr::Var(_) => {}
        }
    }
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rat),
    Ident(String),
    Eof,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Colon,
    Question,
    Assign,
    Cmp(CmpOp),
}

#[derive(Debug, Clone)]
struct SpannedTok {
    tok: Tok,
    /// For numbers, whether the literal was integral.
    is_int: bool,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, message: message.into() }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.src.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn tokens(mut self) -> Result<Vec<SpannedTok>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Some(b) if b.is_ascii_whitespace()) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(b) = self.peek() else { break };
            let (tok, is_int) = match b {
                b'0'..=b'9' => {
                    let mut digits = String::new();
                    while matches!(self.peek(), Some(b'0'..=b'9')) {
                        digits.push(self.bump().unwrap() as char);
                    }
                    let mut is_int = true;
                    let mut frac = String::new();
                    if self.peek() == Some(b'.') {
                        is_int = false;
                        self.bump();
                        while matches!(self.peek(), Some(b'0'..=b'9')) {
                            frac.push(self.bump().unwrap() as char);
                        }
                        if frac.is_empty() {
                            return Err(self.error("expected digits after decimal point"));
                        }
                    }
                    let int: BigInt = digits.parse().expect("digits");
                    let value = if is_int {
                        Rat::from_integer(int)
                    } else {
                        let scale = BigInt::from(10u8).pow(frac.len() as u32);
                        let f: BigInt = frac.parse().expect("digits");
                        Rat::from_integer(int) + Rat::new(f, scale)
                    };
                    (Tok::Num(value), is_int)
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let mut ident = String::new();
                    while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_')
                    {
                        ident.push(self.bump().unwrap() as char);
                    }
                    (Tok::Ident(ident), false)
                }
                b'+' => {
                    self.bump();
                    (Tok::Plus, false)
                }
                b'-' => {
                    self.bump();
                    (Tok::Minus, false)
                }
                b'*' => {
                    self.bump();
                    (Tok::Star, false)
                }
                b'/' => {
                    self.bump();
                    (Tok::Slash, false)
                }
                b'(' => {
                    self.bump();
                    (Tok::LParen, false)
                }
                b')' => {
                    self.bump();
                    (Tok::RParen, false)
                }
                b',' => {
                    self.bump();
                    (Tok::Comma, false)
                }
                b':' => {
                    self.bump();
                    (Tok::Colon, false)
                }
                b'?' => {
                    self.bump();
                    (Tok::Question, false)
                }
                b'<' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        (Tok::Cmp(CmpOp::Le), false)
                    } else {
                        (Tok::Cmp(CmpOp::Lt), false)
                    }
                }
                b'>' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        (Tok::Cmp(CmpOp::Ge), false)
                    } else {
                        (Tok::Cmp(CmpOp::Gt), false)
                    }
                }
                b'=' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        (Tok::Cmp(CmpOp::Eq), false)
                    } else {
                        (Tok::Assign, false)
                    }
                }
                b'!' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        (Tok::Cmp(CmpOp::Ne), false)
                    } else {
                        return Err(self.error("expected '=' after '!'"));
                    }
                }
                other => {
                    return Err(self.error(format!("unexpected character {:?}", other as char)));
                }
            };
            out.push(SpannedTok { tok, is_int, line, col });
        }
        // Terminal marker carrying the end-of-input position.
        out.push(SpannedTok { tok: Tok::Eof, is_int: false, line: self.line, col: self.col });
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Parsing

struct Parser {
    toks: Vec<SpannedTok>,
    pos: usize,
    dimension: usize,
}

impl Parser {
    fn current(&self) -> &SpannedTok {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn at_end(&self) -> bool {
        matches!(self.current().tok, Tok::Eof)
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = self.current();
        ParseError { line: t.line, col: t.col, message: message.into() }
    }

    fn advance(&mut self) -> SpannedTok {
        let t = self.toks[self.pos].clone();
        self.pos += 1;
        t
    }

    fn eat(&mut self, tok: &Tok, what: &str) -> Result<(), ParseError> {
        if self.at_end() {
            return Err(self.error_here(format!("unexpected end of input, expected {what}")));
        }
        if &self.current().tok == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if let Tok::Ident(id) = &self.current().tok {
            if id == "if" {
                self.advance();
                let lhs = self.sum()?;
                let op = match &self.current().tok {
                    Tok::Cmp(op) => {
                        let op = *op;
                        self.advance();
                        op
                    }
                    _ => return Err(self.error_here("expected a comparison operator")),
                };
                let rhs = self.sum()?;
                self.keyword("then")?;
                let then = self.expr()?;
                self.keyword("else")?;
                let otherwise = self.expr()?;
                return Ok(Expr::If {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                    then: Box::new(then),
                    otherwise: Box::new(otherwise),
                });
            }
        }
        self.sum()
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_end() {
            return Err(self.error_here(format!("unexpected end of input, expected '{kw}'")));
        }
        match &self.current().tok {
            Tok::Ident(id) if id == kw => {
                self.advance();
                Ok(())
            }
            _ => Err(self.error_here(format!("expected '{kw}'"))),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.current().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let (mut lhs, mut lhs_int) = self.unary()?;
        loop {
            let op = match self.current().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.advance();
            let (rhs, rhs_int) = self.unary()?;
            // Exact rational literal: integer / integer folds at parse time.
            if op == BinOp::Div && lhs_int && rhs_int {
                if let (Expr::Num(a), Expr::Num(b)) = (&lhs, &rhs) {
                    if !b.is_zero() {
                        lhs = Expr::Num(a / b);
                        lhs_int = false;
                        continue;
                    }
                }
            }
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
            lhs_int = false;
        }
        Ok(lhs)
    }

    /// Returns the expression and whether it is a bare integer literal
    /// (eligible for rational-literal folding).
    fn unary(&mut self) -> Result<(Expr, bool), ParseError> {
        if self.current().tok == Tok::Minus {
            self.advance();
            let (inner, _) = self.unary()?;
            return Ok((Expr::Neg(Box::new(inner)), false));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<(Expr, bool), ParseError> {
        if self.at_end() {
            return Err(self.error_here("unexpected end of input"));
        }
        let t = self.advance();
        match t.tok {
            Tok::Num(r) => Ok((Expr::Num(r), t.is_int)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.eat(&Tok::RParen, "')'")?;
                Ok((inner, false))
            }
            Tok::Ident(id) => self.ident_expr(id, t.line, t.col),
            _ => Err(ParseError {
                line: t.line,
                col: t.col,
                message: "expected a number, variable, function call or '('".into(),
            }),
        }
    }

    fn ident_expr(&mut self, id: String, line: usize, col: usize) -> Result<(Expr, bool), ParseError> {
        // Variables: x1, x2, ...
        if let Some(rest) = id.strip_prefix('x') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let idx: usize = rest
                    .parse()
                    .map_err(|_| ParseError { line, col, message: "bad variable index".into() })?;
                if idx == 0 {
                    return Err(ParseError {
                        line,
                        col,
                        message: "variable indices are 1-based".into(),
                    });
                }
                if self.dimension > 0 && idx > self.dimension {
                    return Err(ParseError {
                        line,
                        col,
                        message: format!(
                            "variable x{idx} exceeds the declared dimension {}",
                            self.dimension
                        ),
                    });
                }
                return Ok((Expr::Var(idx - 1), false));
            }
        }
        if id == "gallery" {
            self.eat(&Tok::Colon, "':' after 'gallery'")?;
            let name = match &self.current().tok {
                Tok::Ident(n) => {
                    let n = n.clone();
                    self.advance();
                    n
                }
                _ => return Err(self.error_here("expected a fixture name")),
            };
            let mut params = Vec::new();
            if self.current().tok == Tok::Question {
                self.advance();
                loop {
                    let key = match &self.current().tok {
                        Tok::Ident(k) => {
                            let k = k.clone();
                            self.advance();
                            k
                        }
                        _ => return Err(self.error_here("expected a parameter name")),
                    };
                    self.eat(&Tok::Assign, "'='")?;
                    let neg = if self.current().tok == Tok::Minus {
                        self.advance();
                        true
                    } else {
                        false
                    };
                    let value = match &self.current().tok {
                        Tok::Num(r) if r.is_integer() => {
                            let v: i64 = r.to_integer().try_into().map_err(|_| {
                                self.error_here("parameter out of range")
                            })?;
                            self.advance();
                            if neg {
                                -v
                            } else {
                                v
                            }
                        }
                        _ => return Err(self.error_here("expected an integer parameter value")),
                    };
                    params.push((key, value));
                    if self.current().tok == Tok::Comma {
                        self.advance();
                    } else {
                        break;
                    }
                }
            }
            return Ok((Expr::Gallery { name, params }, false));
        }
        // Function call.
        let func = match id.as_str() {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            other => {
                return Err(ParseError {
                    line,
                    col,
                    message: format!("unknown identifier {other:?}"),
                })
            }
        };
        self.eat(&Tok::LParen, "'(' after function name")?;
        let mut args = vec![self.expr()?];
        while self.current().tok == Tok::Comma {
            self.advance();
            args.push(self.expr()?);
        }
        self.eat(&Tok::RParen, "')'")?;
        if args.len() != func.arity() {
            return Err(ParseError {
                line,
                col,
                message: format!(
                    "{} takes {} argument(s), got {}",
                    func.name(),
                    func.arity(),
                    args.len()
                ),
            });
        }
        Ok((Expr::Call(func, args), false))
    }
}

/// Parse an expression. `dimension = 0` skips the variable-range check.
pub fn parse(text: &str, dimension: usize) -> Result<Expr, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, pos: 0, dimension };
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.error_here("unexpected trailing input"));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Printing

/// Deterministic textual form; `parse(print(e))` is structurally equal to
/// `e` (for trees whose `Num` nodes are nonnegative, which the parser and
/// [`Expr::num`] guarantee).
pub fn print(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, 0, &mut s);
    s
}

/// Precedence levels: 0 = if, 1 = sum, 2 = product, 3 = unary, 4 = atom.
fn level(e: &Expr) -> u8 {
    match e {
        Expr::If { .. } => 0,
        Expr::Bin(BinOp::Add | BinOp::Sub, _, _) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, _, _) => 2,
        Expr::Neg(_) => 3,
        Expr::Num(_) | Expr::Var(_) | Expr::Call(..) | Expr::Gallery { .. } => 4,
    }
}

fn write_expr(e: &Expr, min_level: u8, out: &mut String) {
    let wrap = level(e) < min_level;
    if wrap {
        out.push('(');
    }
    match e {
        Expr::Num(r) => {
            debug_assert!(!r.is_negative(), "Num nodes hold nonnegative literals");
            out.push_str(&fmt_rat(r));
        }
        Expr::Var(i) => {
            let _ = write!(out, "x{}", i + 1);
        }
        Expr::Neg(inner) => {
            out.push('-');
            write_expr(inner, 3, out);
        }
        Expr::Bin(op, a, b) => {
            let (my, sym) = match op {
                BinOp::Add => (1, " + "),
                BinOp::Sub => (1, " - "),
                BinOp::Mul => (2, " * "),
                BinOp::Div => (2, " / "),
            };
            write_expr(a, my, out);
            out.push_str(sym);
            // Left-associative: the right operand needs one level more.
            write_expr(b, my + 1, out);
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, 0, out);
            }
            out.push(')');
        }
        Expr::If { op, lhs, rhs, then, otherwise } => {
            out.push_str("if ");
            write_expr(lhs, 1, out);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(rhs, 1, out);
            out.push_str(" then ");
            write_expr(then, 0, out);
            out.push_str(" else ");
            write_expr(otherwise, 0, out);
        }
        Expr::Gallery { name, params } => {
            let _ = write!(out, "gallery:{name}");
            for (i, (k, v)) in params.iter().enumerate() {
                out.push(if i == 0 { '?' } else { ',' });
                let _ = write!(out, "{k}={v}");
            }
        }
    }
    if wrap {
        out.push(')');
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// A parsed function spec: dimension, ambient brick, expression body.
/// Serializes as `{dimension, ambient, expr}` with the body as text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub dimension: usize,
    pub ambient: Brick,
    #[serde(rename = "expr", with = "expr_text")]
    pub body: Expr,
}

mod expr_text {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&print(e))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text, 0).map_err(serde::de::Error::custom)
    }
}

impl FunctionSpec {
    pub fn new(dimension: usize, ambient: Brick, text: &str) -> Result<Self, ParseError> {
        let body = parse(text, dimension)?;
        if ambient.dim() != dimension {
            return Err(ParseError {
                line: 1,
                col: 1,
                message: format!(
                    "ambient brick has dimension {}, spec declares {}",
                    ambient.dim(),
                    dimension
                ),
            });
        }
        Ok(Self { dimension, ambient, body })
    }

    /// Resolve gallery references and build an evaluation-ready integrand.
    pub fn to_integrand(&self) -> Result<IntegrandSpec, gallery::GalleryError> {
        let mut refs = Vec::new();
        self.body.gallery_refs(&mut refs);
        let mut fixtures: HashMap<String, PointOracle> = HashMap::new();
        for (name, params) in refs {
            let key = gallery_key(name, params);
            if fixtures.contains_key(&key) {
                continue;
            }
            let fixture = gallery::fixture(name, params)?;
            if fixture.dimension != self.dimension {
                return Err(gallery::GalleryError::BadParameter {
                    fixture: name.to_string(),
                    message: format!(
                        "fixture is {}-dimensional, spec declares {}",
                        fixture.dimension, self.dimension
                    ),
                });
            }
            fixtures.insert(key, fixture.oracle);
        }
        let body = self.body.clone();
        let fixtures = Arc::new(fixtures);
        let eval = PointOracle::new(move |x: &[Rat]| eval_expr(&body, x, &fixtures));
        Ok(IntegrandSpec::new(self.ambient.clone(), eval))
    }
}

fn gallery_key(name: &str, params: &[(String, i64)]) -> String {
    let mut key = name.to_string();
    for (k, v) in params {
        let _ = write!(key, "?{k}={v}");
    }
    key
}

/// Evaluate an expression without gallery references.
pub fn eval(e: &Expr, x: &[Rat]) -> Result<f64, EvalError> {
    eval_expr(e, x, &HashMap::new())
}

fn eval_expr(
    e: &Expr,
    x: &[Rat],
    fixtures: &HashMap<String, PointOracle>,
) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Num(r) => rat_to_f64(r),
        Expr::Var(i) => {
            let v = x
                .get(*i)
                .ok_or_else(|| EvalError::new(format!("point has no coordinate x{}", i + 1)))?;
            rat_to_f64(v)
        }
        Expr::Neg(inner) => -eval_expr(inner, x, fixtures)?,
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval_expr(a, x, fixtures)?, eval_expr(b, x, fixtures)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::at_point("division by zero", x));
                    }
                    a / b
                }
            }
        }
        Expr::Call(f, args) => {
            let v: Vec<f64> = args
                .iter()
                .map(|a| eval_expr(a, x, fixtures))
                .collect::<Result<_, _>>()?;
            match f {
                Func::Sin => v[0].sin(),
                Func::Cos => v[0].cos(),
                Func::Abs => v[0].abs(),
                Func::Min => v[0].min(v[1]),
                Func::Max => v[0].max(v[1]),
            }
        }
        Expr::If { op, lhs, rhs, then, otherwise } => {
            let (a, b) = (eval_expr(lhs, x, fixtures)?, eval_expr(rhs, x, fixtures)?);
            let holds = match op {
                CmpOp::Le => a <= b,
                CmpOp::Lt => a < b,
                CmpOp::Ge => a >= b,
                CmpOp::Gt => a > b,
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
            };
            if holds {
                eval_expr(then, x, fixtures)?
            } else {
                eval_expr(otherwise, x, fixtures)?
            }
        }
        Expr::Gallery { name, params } => {
            let key = gallery_key(name, params);
            match fixtures.get(&key) {
                Some(oracle) => oracle.eval(x)?,
                None => {
                    // Unresolved reference (plain `eval` path): resolve once
                    // per call; callers wanting speed use `to_integrand`.
                    let fixture = gallery::fixture(name, params)
                        .map_err(|e| EvalError::new(e.to_string()))?;
                    fixture.oracle.eval(x)?
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    fn p(text: &str) -> Expr {
        parse(text, 0).unwrap_or_else(|e| panic!("{e} in {text:?}"))
    }

    #[test]
    fn parses_product_node() {
        assert_eq!(
            p("x1*x2"),
            Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Var(0)),
                Box::new(Expr::Var(1))
            )
        );
    }

    #[test]
    fn parses_piecewise() {
        let e = p("if x1 <= 1/2 then 1 else 0");
        match e {
            Expr::If { op: CmpOp::Le, rhs, .. } => {
                assert_eq!(*rhs, Expr::Num(rat(1, 2)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_position() {
        let err = parse("x1 +", 0).unwrap_err();
        assert_eq!((err.line, err.col), (1, 5));

        let err = parse("x1 $ 2", 0).unwrap_err();
        assert_eq!((err.line, err.col), (1, 4));

        let err = parse("sin(x1, x2)", 0).unwrap_err();
        assert!(err.message.contains("argument"));

        let err = parse("foo(x1)", 0).unwrap_err();
        assert!(err.message.contains("unknown identifier"));

        let err = parse("x3", 2).unwrap_err();
        assert!(err.message.contains("dimension"));
    }

    #[test]
    fn precedence() {
        let e = p("1+2*3");
        assert_eq!(eval(&e, &[]).unwrap(), 7.0);
        let e = p("(1+2)*3");
        assert_eq!(eval(&e, &[]).unwrap(), 9.0);
        let e = p("2-3-4");
        assert_eq!(eval(&e, &[]).unwrap(), -5.0);
        let e = p("12/3/2");
        assert_eq!(eval(&e, &[]).unwrap(), 2.0);
    }

    #[test]
    fn rational_literals_stay_exact() {
        assert_eq!(p("1/3"), Expr::Num(rat(1, 3)));
        assert_eq!(print(&p("1/3")), "1/3");
        assert_eq!(p("0.25"), Expr::Num(rat(1, 4)));
        // Folding respects left-associativity (values unchanged).
        assert_eq!(p("6/3*2"), Expr::Bin(
            BinOp::Mul,
            Box::new(Expr::Num(rint(2))),
            Box::new(Expr::Num(rint(2))),
        ));
        // Division by a literal zero is not folded; it fails at evaluation.
        let e = p("1/0");
        assert!(eval(&e, &[]).is_err());
    }

    #[test]
    fn eval_examples() {
        let e = p("x1*x2");
        assert_eq!(eval(&e, &[rat(1, 2), rat(1, 2)]).unwrap(), 0.25);

        let e = p("sin(1/(x1 - 1/2))");
        assert!(eval(&e, &[rat(1, 2)]).is_err(), "division by zero surfaces");

        let e = p("gallery:thomae");
        assert_eq!(eval(&e, &[rat(1, 3)]).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn round_trip_fixed_cases() {
        for text in [
            "x1*x2",
            "if x1 <= 1/2 then 1 else 0",
            "sin(x1) + cos(x2)*3",
            "1/3",
            "-x1 - -2",
            "max(x1, min(x2, 1/7))",
            "if x1 < x2 then if x2 < 1/2 then 1 else 2 else 3",
            "(x1 + x2) * (x1 - x2)",
            "gallery:f_prop41c?k=3 + 2",
            "2 - (3 - 4)",
            "x1 / (x2 / 3)",
        ] {
            let e = p(text);
            let printed = print(&e);
            let reparsed = parse(&printed, 0)
                .unwrap_or_else(|err| panic!("{err} reparsing {printed:?}"));
            assert_eq!(reparsed, e, "text {text:?} printed as {printed:?}");
        }
    }

    #[test]
    fn function_spec_serde_and_integrand() {
        let ambient = Brick::closed_from_bounds(&[(rint(0), rint(1)), (rint(0), rint(1))]).unwrap();
        let spec = FunctionSpec::new(2, ambient, "x1*x2").unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: FunctionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.body, spec.body);

        let integrand = spec.to_integrand().unwrap();
        let v = integrand.eval.eval(&[rat(1, 2), rat(1, 2)]).unwrap();
        assert_eq!(v, 0.25);
    }

    #[test]
    fn dimension_mismatch_of_gallery_ref() {
        let ambient = Brick::closed_from_bounds(&[(rint(0), rint(1)), (rint(0), rint(1))]).unwrap();
        let spec = FunctionSpec::new(2, ambient, "gallery:thomae").unwrap();
        assert!(spec.to_integrand().is_err());
    }
}
