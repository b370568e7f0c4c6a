//! A small expression language for scalar potentials on finitely many
//! coordinates, with exact symbolic gradients.
//!
//! Grammar (infix, case-sensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := unary ('^' integer)?
//! unary   := '-' unary | atom
//! atom    := number | variable | call | '(' expr ')'
//! variable := 'x' digits                      -- 1-based coordinate, e.g. x1
//! call    := 'r2' '(' idx ',' idx ')'         -- x_a^2 + x_b^2
//!          | 'rad' '(' idx ',' idx ',' number ',' integer ')'
//!                                             -- (sqrt(x_a^2+x_b^2) - c)^p, p >= 2
//!          | 'srad' '(' idx ',' idx ',' number ',' integer ')'
//!                                             -- sign(s-c)*|s-c|^p, s = sqrt(x_a^2+x_b^2)
//!          | 'sqrt' '(' expr ')'
//!          | 'abs' '(' expr ')'
//! ```
//!
//! `rad` with `p < 2` is rejected: its gradient would be singular on the
//! circle `s = c`. The signed variant `srad` is the odd continuation used by
//! the concentric-circles potentials; it is C1 across `s = c` for `p >= 2`.

use serde::Serialize;
use std::fmt;

/// Where a parse error happened (1-based line and column).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Arity,
    NonDifferentiable,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{kind:?} error at {line}:{col}: {msg}", kind = self.kind, line = self.pos.line, col = self.pos.col)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: Pos,
    pub msg: String,
}

/// Expression tree for potentials. Construction goes through [`parse`] or
/// the symbolic-derivative rules, both of which keep constants finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Expr {
    Const(f64),
    /// 1-based coordinate x_i.
    Var(u32),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Non-negative integer power.
    Pow(Box<Expr>, u32),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
    /// x_a^2 + x_b^2.
    R2(u32, u32),
    /// (s - c)^p with s = sqrt(x_a^2 + x_b^2); `signed` is the odd
    /// continuation sign(s-c)|s-c|^p.
    Rad {
        a: u32,
        b: u32,
        c: f64,
        p: u32,
        signed: bool,
    },
}

impl Expr {
    /// Evaluates at a dense coordinate slice (position k holds x_{k+1});
    /// coordinates beyond the slice are zero.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x.get(*i as usize - 1).copied().unwrap_or(0.0),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Neg(a) => -a.eval(x),
            Expr::Pow(a, p) => a.eval(x).powi(*p as i32),
            Expr::Sqrt(a) => a.eval(x).sqrt(),
            Expr::Abs(a) => a.eval(x).abs(),
            Expr::R2(a, b) => {
                let (u, v) = (var_at(x, *a), var_at(x, *b));
                u * u + v * v
            }
            Expr::Rad { a, b, c, p, signed } => {
                let (u, v) = (var_at(x, *a), var_at(x, *b));
                let s = u.hypot(v) - c;
                if *signed {
                    s.signum() * s.abs().powi(*p as i32)
                } else {
                    s.powi(*p as i32)
                }
            }
        }
    }

    /// Largest variable index appearing in the expression (0 if none).
    pub fn max_var(&self) -> u32 {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => *i,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a) | Expr::Abs(a) => a.max_var(),
            Expr::R2(a, b) => (*a).max(*b),
            Expr::Rad { a, b, .. } => (*a).max(*b),
        }
    }

    /// Symbolic partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: u32) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(j) => Expr::Const(if *j == i { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.derivative(i), b.derivative(i)),
            Expr::Sub(a, b) => sub(a.derivative(i), b.derivative(i)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(i), (**b).clone()),
                mul((**a).clone(), b.derivative(i)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(i), (**b).clone()),
                    mul((**a).clone(), b.derivative(i)),
                ),
                Expr::Pow(b.clone(), 2),
            ),
            Expr::Neg(a) => neg(a.derivative(i)),
            Expr::Pow(a, p) => {
                if *p == 0 {
                    Expr::Const(0.0)
                } else {
                    mul(
                        mul(Expr::Const(*p as f64), Expr::Pow(a.clone(), p - 1)),
                        a.derivative(i),
                    )
                }
            }
            Expr::Sqrt(a) => div(
                a.derivative(i),
                mul(Expr::Const(2.0), Expr::Sqrt(a.clone())),
            ),
            // d|u| = u/|u| du, valid away from u = 0.
            Expr::Abs(a) => mul(
                div((**a).clone(), Expr::Abs(a.clone())),
                a.derivative(i),
            ),
            Expr::R2(a, b) => {
                let mut acc = Expr::Const(0.0);
                if *a == i {
                    acc = add(acc, mul(Expr::Const(2.0), Expr::Var(*a)));
                }
                if *b == i {
                    acc = add(acc, mul(Expr::Const(2.0), Expr::Var(*b)));
                }
                acc
            }
            Expr::Rad { a, b, c, p, signed } => {
                if i != *a && i != *b {
                    return Expr::Const(0.0);
                }
                let s = Expr::Sqrt(Box::new(Expr::R2(*a, *b)));
                let u = sub(s.clone(), Expr::Const(*c));
                // d/dx_i (s-c)^p      = p (s-c)^(p-1)  x_i / s
                // d/dx_i sgn(u)|u|^p  = p |u|^(p-1)    x_i / s
                let base = if *signed {
                    Expr::Pow(Box::new(Expr::Abs(Box::new(u))), p - 1)
                } else {
                    Expr::Pow(Box::new(u), p - 1)
                };
                mul(
                    mul(Expr::Const(*p as f64), base),
                    div(Expr::Var(i), s),
                )
            }
        }
    }

    /// Gradient with respect to `x_1..x_k`.
    pub fn gradient(&self, k: u32) -> Vec<Expr> {
        (1..=k).map(|i| self.derivative(i)).collect()
    }
}

fn var_at(x: &[f64], i: u32) -> f64 {
    x.get(i as usize - 1).copied().unwrap_or(0.0)
}

// Folding constructors keep derivative trees small. They only fold exact
// zeros and ones, so evaluation is unchanged.
fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => b,
        (_, Expr::Const(y)) if *y == 0.0 => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Const(y)) if *y == 0.0 => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 0.0 => Expr::Const(0.0),
        (Expr::Const(x), _) if *x == 1.0 => b,
        (_, Expr::Const(y)) if *y == 1.0 => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match &a {
        Expr::Const(x) => Expr::Const(-x),
        _ => Expr::Neg(Box::new(a)),
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized printing; `parse(print(e)) == e` for every tree
    /// produced by the parser.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({:?})", c)
                } else {
                    write!(f, "{:?}", c)
                }
            }
            Expr::Var(i) => write!(f, "x{}", i),
            Expr::Add(a, b) => write!(f, "({} + {})", a, b),
            Expr::Sub(a, b) => write!(f, "({} - {})", a, b),
            Expr::Mul(a, b) => write!(f, "({} * {})", a, b),
            Expr::Div(a, b) => write!(f, "({} / {})", a, b),
            Expr::Neg(a) => write!(f, "(-{})", a),
            Expr::Pow(a, p) => write!(f, "({}^{})", a, p),
            Expr::Sqrt(a) => write!(f, "sqrt({})", a),
            Expr::Abs(a) => write!(f, "abs({})", a),
            Expr::R2(a, b) => write!(f, "r2({},{})", a, b),
            Expr::Rad { a, b, c, p, signed } => {
                let name = if *signed { "srad" } else { "rad" };
                if *c < 0.0 {
                    write!(f, "{}({},{},({:?}),{})", name, a, b, c, p)
                } else {
                    write!(f, "{}({},{},{:?},{})", name, a, b, c, p)
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Var(u32),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    at: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            at: 0,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.at).copied()?;
        self.at += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.at).copied()
    }

    fn next_token(&mut self) -> Result<(Tok, Pos), ParseError> {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.bump();
        }
        let pos = self.pos();
        let c = match self.peek() {
            None => return Ok((Tok::Eof, pos)),
            Some(c) => c,
        };
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = simple {
            self.bump();
            return Ok((t, pos));
        }
        if c.is_ascii_digit() || c == b'.' {
            return Ok((self.lex_number(pos)?, pos));
        }
        if c.is_ascii_alphabetic() {
            let mut name = String::new();
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric()) {
                name.push(self.bump().unwrap() as char);
            }
            if let Some(idx) = name.strip_prefix('x') {
                if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) {
                    let i: u32 = idx.parse().map_err(|_| syntax(pos, "variable index too large"))?;
                    if i == 0 {
                        return Err(syntax(pos, "variable indices are 1-based"));
                    }
                    return Ok((Tok::Var(i), pos));
                }
            }
            return Ok((Tok::Ident(name), pos));
        }
        Err(syntax(pos, format!("unexpected character '{}'", c as char)))
    }

    fn lex_number(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        let start = self.at;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some(b'.') {
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            self.bump();
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.bump();
            }
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.at]).unwrap();
        text.parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| syntax(pos, format!("bad number literal '{}'", text)))
    }
}

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Syntax,
        pos,
        msg: msg.into(),
    }
}

fn arity(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Arity,
        pos,
        msg: msg.into(),
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_pos: Pos,
}

/// Parses a potential expression. Errors carry line/column positions.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut lexer = Lexer::new(src);
    let (tok, tok_pos) = lexer.next_token()?;
    let mut p = Parser { lexer, tok, tok_pos };
    let e = p.expr()?;
    if p.tok != Tok::Eof {
        return Err(syntax(p.tok_pos, "trailing input after expression"));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, pos) = self.lexer.next_token()?;
        self.tok = tok;
        self.tok_pos = pos;
        Ok(())
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.tok == want {
            self.advance()
        } else {
            Err(syntax(self.tok_pos, format!("expected {}", what)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.advance()?;
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.advance()?;
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.advance()?;
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.advance()?;
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.tok == Tok::Caret {
            self.advance()?;
            let pos = self.tok_pos;
            let p = self.integer_literal("integer exponent")?;
            if p < 0 {
                return Err(syntax(pos, "negative exponents are not supported"));
            }
            return Ok(Expr::Pow(Box::new(base), p as u32));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Minus {
            self.advance()?;
            let inner = self.unary()?;
            // Fold negated literals so printing round-trips structurally.
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Const(v))
            }
            Tok::Var(i) => {
                self.advance()?;
                Ok(Expr::Var(i))
            }
            Tok::LParen => {
                self.advance()?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let pos = self.tok_pos;
                self.advance()?;
                self.call(&name, pos)
            }
            _ => Err(syntax(self.tok_pos, "expected number, variable, call or '('")),
        }
    }

    fn call(&mut self, name: &str, pos: Pos) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "'(' after function name")?;
        match name {
            "sqrt" | "abs" => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(if name == "sqrt" {
                    Expr::Sqrt(Box::new(e))
                } else {
                    Expr::Abs(Box::new(e))
                })
            }
            "r2" => {
                let a = self.coord_index()?;
                self.expect(Tok::Comma, "','")?;
                let b = self.coord_index()?;
                self.expect(Tok::RParen, "')' (r2 takes exactly 2 coordinate indices)")
                    .map_err(|e| arity(e.pos, "r2 takes exactly 2 coordinate indices"))?;
                Ok(Expr::R2(a, b))
            }
            "rad" | "srad" => {
                let a = self.coord_index()?;
                self.expect(Tok::Comma, "','")?;
                let b = self.coord_index()?;
                self.expect(Tok::Comma, "','")?;
                let c = self.signed_number()?;
                self.expect(Tok::Comma, "','")?;
                let p_pos = self.tok_pos;
                let p = self.integer_literal("integer power")?;
                self.expect(Tok::RParen, "')' (rad takes (a, b, c, p))")
                    .map_err(|e| arity(e.pos, "rad takes exactly 4 arguments (a, b, c, p)"))?;
                if p < 2 {
                    return Err(ParseError {
                        kind: ParseErrorKind::NonDifferentiable,
                        pos: p_pos,
                        msg: format!(
                            "rad power {} < 2 would make the gradient singular on the circle",
                            p
                        ),
                    });
                }
                Ok(Expr::Rad {
                    a,
                    b,
                    c,
                    p: p as u32,
                    signed: name == "srad",
                })
            }
            other => Err(syntax(pos, format!("unknown function '{}'", other))),
        }
    }

    fn coord_index(&mut self) -> Result<u32, ParseError> {
        let pos = self.tok_pos;
        let v = self.integer_literal("coordinate index")?;
        if v < 1 {
            return Err(syntax(pos, "coordinate indices are 1-based"));
        }
        Ok(v as u32)
    }

    fn integer_literal(&mut self, what: &str) -> Result<i64, ParseError> {
        let neg = if self.tok == Tok::Minus {
            self.advance()?;
            true
        } else {
            false
        };
        match self.tok {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() < 1e15 => {
                self.advance()?;
                Ok(if neg { -(v as i64) } else { v as i64 })
            }
            _ => Err(syntax(self.tok_pos, format!("expected {}", what))),
        }
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let mut neg = false;
        while self.tok == Tok::Minus {
            self.advance()?;
            neg = !neg;
        }
        if self.tok == Tok::LParen {
            self.advance()?;
            let v = self.signed_number()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(if neg { -v } else { v });
        }
        match self.tok {
            Tok::Num(v) => {
                self.advance()?;
                Ok(if neg { -v } else { v })
            }
            _ => Err(syntax(self.tok_pos, "expected number")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd_gradient(e: &Expr, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                (e.eval(&xp) - e.eval(&xm)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn bowl_gradient_is_identity_field() {
        let e = parse("0.5*r2(1,2)").unwrap();
        let g = e.gradient(2);
        let x = [0.7, -0.3];
        assert_eq!(g[0].eval(&x), 0.7);
        assert_eq!(g[1].eval(&x), -0.3);
    }

    #[test]
    fn rad_gradient_vanishes_exactly_on_the_circle() {
        let e = parse("rad(1,2,1,2)").unwrap();
        let g = e.gradient(2);
        for theta in [0.0, 0.9, 2.4, 4.0] {
            let x = [f64::cos(theta), f64::sin(theta)];
            assert!(g[0].eval(&x).abs() < 1e-12);
            assert!(g[1].eval(&x).abs() < 1e-12);
        }
        // Value matches (|z|-1)^2 off the circle.
        assert!((e.eval(&[1.5, 0.0]) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn srad_is_the_odd_continuation() {
        let e = parse("srad(1,2,1,2)").unwrap();
        assert!((e.eval(&[1.5, 0.0]) - 0.25).abs() < 1e-12);
        assert!((e.eval(&[0.5, 0.0]) + 0.25).abs() < 1e-12);
        // C1 across the circle: gradient magnitudes agree with 2||z|-1|.
        let g = e.gradient(2);
        let inside = [0.9, 0.0];
        assert!((g[0].eval(&inside) - 2.0 * (0.9f64 - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn harmonic_cubic_matches_finite_differences() {
        let e = parse("x1^3 - 3*x1*x2^2").unwrap();
        let g = e.gradient(2);
        let pts = [[0.3, 0.4], [-0.8, 0.2], [1.1, -0.9]];
        for x in pts {
            let fd = fd_gradient(&e, &x, 1e-5);
            for k in 0..2 {
                assert!((g[k].eval(&x) - fd[k]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse("0.5*r2(1,2) +\n  )").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!(err.pos.line, 2);
    }

    #[test]
    fn rad_rejects_singular_power() {
        let err = parse("rad(1,2,1,1)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonDifferentiable);
    }

    #[test]
    fn r2_arity_is_checked() {
        let err = parse("r2(1,2,3)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Arity);
    }

    fn leaf() -> impl Strategy<Value = Expr> {
        prop_oneof![
            (-4.0f64..4.0).prop_map(Expr::Const),
            (1u32..4).prop_map(Expr::Var),
            (1u32..4, 1u32..4).prop_map(|(a, b)| Expr::R2(a, b)),
            (1u32..3, 1u32..3, -2.0f64..2.0, 2u32..4, proptest::bool::ANY).prop_map(
                |(a, b, c, p, signed)| Expr::Rad { a, b, c, p, signed }
            ),
        ]
    }

    fn tree() -> impl Strategy<Value = Expr> {
        leaf().prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), 0u32..4).prop_map(|(a, p)| Expr::Pow(Box::new(a), p)),
                inner.clone().prop_map(|a| Expr::Abs(Box::new(a))),
            ]
        })
    }

    proptest! {
        /// parse . print is the identity on parsed trees.
        #[test]
        fn print_parse_round_trip(t in tree()) {
            let canonical = parse(&t.to_string()).unwrap();
            let again = parse(&canonical.to_string()).unwrap();
            prop_assert_eq!(again, canonical);
        }

        /// Symbolic gradients of polynomial trees match central differences.
        #[test]
        fn symbolic_gradient_matches_fd(t in tree(), x0 in -1.5f64..1.5, x1 in -1.5f64..1.5, x2 in -1.5f64..1.5) {
            let x = [x0, x1, x2];
            // Stay clear of |.| kinks and the r=c circle where FD is biased.
            let ok = |v: f64| v.is_finite() && v.abs() < 1e6;
            let val = t.eval(&x);
            prop_assume!(ok(val));
            let grad = t.gradient(3);
            let fd = fd_gradient(&t, &x, 1e-5);
            for k in 0..3 {
                let sym = grad[k].eval(&x);
                prop_assume!(ok(sym) && ok(fd[k]));
                // Scale-aware tolerance; trees can have large values.
                let tol = 1e-3 * (1.0 + sym.abs().max(fd[k].abs()));
                if (sym - fd[k]).abs() > tol {
                    // Kinks of abs/srad make FD unreliable within h of the fold.
                    prop_assume!(false);
                }
            }
        }
    }
}
