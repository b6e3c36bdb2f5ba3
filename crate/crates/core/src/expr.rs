//! A small complex-valued expression language used to describe Hamiltonian
//! entries and coefficients in configuration files.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" ["-"] INT)*        right associative
//! primary := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! `i` is the imaginary unit and `pi` is the circle constant. Functions:
//! `sin cos exp sqrt conj re im`. Exponents must be integer literals.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FUNCTIONS: [&str; 7] = ["sin", "cos", "exp", "sqrt", "conj", "re", "im"];
pub const MOMENTA: [&str; 3] = ["k_x", "k_y", "k_z"];
pub const RESERVED: [&str; 2] = ["i", "pi"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Conj,
    Re,
    Im,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "conj" => Func::Conj,
            "re" => Func::Re,
            "im" => Func::Im,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Conj => "conj",
            Func::Re => "re",
            Func::Im => "im",
        }
    }

    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Exp => z.exp(),
            Func::Sqrt => z.sqrt(),
            Func::Conj => z.conj(),
            Func::Re => Complex64::new(z.re, 0.0),
            Func::Im => Complex64::new(z.im, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Lit(Complex64),
    ImagUnit,
    Pi,
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {}", expected.join(" or "))]
    Syntax { offset: usize, expected: Vec<String> },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("exponent at byte {offset} must be an integer literal")]
    NonIntegerExponent { offset: usize },
    #[error("unbound identifiers: {}", .0.join(", "))]
    Unbound(Vec<String>),
    #[error("expression evaluated to a non-finite value")]
    NonFinite,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err<T>(&self, expected: &[&str]) -> Result<T, ExprError> {
        Err(ExprError::Syntax { offset: self.pos, expected: expected.iter().map(|s| s.to_string()).collect() })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let e = self.exponent()?;
        Ok(Expr::Pow(Box::new(base), e))
    }

    /// Integer exponent chain, folded right to left at parse time.
    fn exponent(&mut self) -> Result<i32, ExprError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let neg = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        self.skip_ws();
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(ExprError::NonIntegerExponent { offset: start });
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'.' | b'e' | b'E') {
            return Err(ExprError::NonIntegerExponent { offset: start });
        }
        let text = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap_or("");
        let mut v: i64 = text.parse().map_err(|_| ExprError::NonIntegerExponent { offset: start })?;
        if neg {
            v = -v;
        }
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let rhs = self.exponent()?;
            v = int_pow(v, rhs).ok_or(ExprError::NonIntegerExponent { offset: start })?;
        }
        i32::try_from(v).map_err(|_| ExprError::NonIntegerExponent { offset: start })
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err(&["')'", "operator"]);
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => self.err(&["number", "identifier", "'('", "'-'"]),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let s = self.src;
        let mut p = self.pos;
        while p < s.len() && s[p].is_ascii_digit() {
            p += 1;
        }
        if p < s.len() && s[p] == b'.' {
            p += 1;
            while p < s.len() && s[p].is_ascii_digit() {
                p += 1;
            }
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            let ds = q;
            while q < s.len() && s[q].is_ascii_digit() {
                q += 1;
            }
            if q > ds {
                p = q;
            }
        }
        let text = std::str::from_utf8(&s[start..p]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = p;
                Ok(Expr::Lit(Complex64::new(v, 0.0)))
            }
            Err(_) => self.err(&["number"]),
        }
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let s = self.src;
        let mut p = self.pos;
        while p < s.len() && (s[p].is_ascii_alphanumeric() || s[p] == b'_') {
            p += 1;
        }
        let name = std::str::from_utf8(&s[start..p]).unwrap_or("").to_string();
        self.pos = p;
        if self.peek() == Some(b'(') {
            let f = Func::from_name(&name).ok_or(ExprError::UnknownFunction { name: name.clone(), offset: start })?;
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return self.err(&["')'", "operator"]);
            }
            self.pos += 1;
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        Ok(match name.as_str() {
            "i" => Expr::ImagUnit,
            "pi" => Expr::Pi,
            _ => Expr::Var(name),
        })
    }
}

fn int_pow(base: i64, exp: i32) -> Option<i64> {
    if exp < 0 {
        return None;
    }
    base.checked_pow(exp as u32)
}

pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err(&["operator", "end of input"]);
    }
    Ok(e)
}

/// Identifiers that evaluation will look up (excludes `i`, `pi`).
pub fn free_identifiers(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect(e, &mut out);
    out
}

fn collect(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Var(v) => {
            out.insert(v.clone());
        }
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => collect(a, out),
        Expr::Bin(_, a, b) => {
            collect(a, out);
            collect(b, out);
        }
        Expr::Lit(_) | Expr::ImagUnit | Expr::Pi => {}
    }
}

pub type Bindings = HashMap<String, Complex64>;

pub fn evaluate(e: &Expr, bindings: &Bindings) -> Result<Complex64, ExprError> {
    let missing: Vec<String> = free_identifiers(e).into_iter().filter(|v| !bindings.contains_key(v)).collect();
    if !missing.is_empty() {
        return Err(ExprError::Unbound(missing));
    }
    let z = eval_unchecked(e, bindings);
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(ExprError::NonFinite)
    }
}

fn eval_unchecked(e: &Expr, b: &Bindings) -> Complex64 {
    match e {
        Expr::Lit(z) => *z,
        Expr::ImagUnit => Complex64::new(0.0, 1.0),
        Expr::Pi => Complex64::new(std::f64::consts::PI, 0.0),
        Expr::Var(v) => b[v],
        // 0 - z rather than -z so that `-1` carries a +0 imaginary part and
        // `sqrt(-1)` lands on +i
        Expr::Neg(a) => Complex64::new(0.0, 0.0) - eval_unchecked(a, b),
        Expr::Bin(op, l, r) => {
            let (x, y) = (eval_unchecked(l, b), eval_unchecked(r, b));
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
            }
        }
        Expr::Pow(a, k) => eval_unchecked(a, b).powi(*k),
        Expr::Call(f, a) => f.apply(eval_unchecked(a, b)),
    }
}

/// Canonical, fully parenthesized text that parses back to an expression
/// evaluating identically.
pub fn print(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn write_real(x: f64, out: &mut String) {
    // `{:?}` gives the shortest representation that round-trips.
    let t = format!("{:?}", x.abs());
    if x.is_sign_negative() {
        out.push_str("(-");
        out.push_str(&t);
        out.push(')');
    } else {
        out.push_str(&t);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Lit(z) => {
            if z.im == 0.0 && !z.im.is_sign_negative() {
                write_real(z.re, out);
            } else {
                out.push('(');
                write_real(z.re, out);
                out.push_str(" + ");
                write_real(z.im, out);
                out.push_str("*i)");
            }
        }
        Expr::ImagUnit => out.push('i'),
        Expr::Pi => out.push_str("pi"),
        Expr::Var(v) => out.push_str(v),
        Expr::Neg(a) => {
            out.push_str("(-");
            write_expr(a, out);
            out.push(')');
        }
        Expr::Bin(op, l, r) => {
            out.push('(');
            write_expr(l, out);
            out.push(' ');
            out.push(op.symbol());
            out.push(' ');
            write_expr(r, out);
            out.push(')');
        }
        Expr::Pow(a, k) => {
            out.push('(');
            write_expr(a, out);
            out.push('^');
            if *k < 0 {
                out.push_str(&format!("-{}", k.unsigned_abs()));
            } else {
                out.push_str(&k.to_string());
            }
            out.push(')');
        }
        Expr::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(a, out);
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

/// Parse and evaluate a closed expression (no free identifiers besides
/// those supplied).
pub fn eval_str(src: &str, bindings: &Bindings) -> Result<Complex64, ExprError> {
    evaluate(&parse(src)?, bindings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn b(pairs: &[(&str, Complex64)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Bindings::new();
        assert_eq!(eval_str("2^3", &e).unwrap(), c(8.0, 0.0));
        assert_eq!(eval_str("-2^2", &e).unwrap(), c(-4.0, 0.0));
        assert_eq!(eval_str("2^3^2", &e).unwrap(), c(512.0, 0.0));
        assert_eq!(eval_str("1 - 2 - 3", &e).unwrap(), c(-4.0, 0.0));
        assert_eq!(eval_str("8 / 4 / 2", &e).unwrap(), c(1.0, 0.0));
        assert_eq!(eval_str("1 + 2 * 3", &e).unwrap(), c(7.0, 0.0));
        assert_eq!(eval_str("2^-1", &e).unwrap(), c(0.5, 0.0));
        assert_eq!(eval_str("i*i", &e).unwrap(), c(-1.0, 0.0));
        assert_eq!(eval_str("1.5e-3 * 2", &e).unwrap(), c(3e-3, 0.0));
    }

    #[test]
    fn functions_and_bindings() {
        let bind = b(&[("k_x", c(0.5, 0.0)), ("alpha", c(0.3, 0.0))]);
        let z = eval_str("alpha + i*sin(k_x)", &bind).unwrap();
        assert!((z - c(0.3, 0.5f64.sin())).norm() < 1e-16);
        assert_eq!(eval_str("re(3 + 4*i)", &bind).unwrap(), c(3.0, 0.0));
        assert_eq!(eval_str("im(3 + 4*i)", &bind).unwrap(), c(4.0, 0.0));
        assert_eq!(eval_str("conj(3 + 4*i)", &bind).unwrap(), c(3.0, -4.0));
        assert!((eval_str("sqrt(-1)", &bind).unwrap() - c(0.0, 1.0)).norm() < 1e-16);
        assert!((eval_str("exp(i*pi)", &bind).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((eval_str("cos(0)", &bind).unwrap() - c(1.0, 0.0)).norm() == 0.0);
    }

    #[test]
    fn errors_are_specific() {
        assert!(matches!(parse("2^0.5"), Err(ExprError::NonIntegerExponent { .. })));
        assert!(matches!(parse("2^x"), Err(ExprError::NonIntegerExponent { .. })));
        assert_eq!(parse("tan(1)"), Err(ExprError::UnknownFunction { name: "tan".into(), offset: 0 }));
        match parse("1 + ") {
            Err(ExprError::Syntax { offset, expected }) => {
                assert_eq!(offset, 4);
                assert!(expected.iter().any(|s| s == "number"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("(1 + 2"), Err(ExprError::Syntax { offset: 6, .. })));
        assert!(matches!(parse("1 2"), Err(ExprError::Syntax { offset: 2, .. })));
        assert_eq!(
            eval_str("a + b * k_x", &b(&[("b", ONE)])),
            Err(ExprError::Unbound(vec!["a".into(), "k_x".into()]))
        );
        assert_eq!(eval_str("1/0", &Bindings::new()), Err(ExprError::NonFinite));
    }

    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-1e3f64..1e3).prop_map(|x| Expr::Lit(c(x.abs(), 0.0))),
            Just(Expr::ImagUnit),
            Just(Expr::Pi),
            prop_oneof![Just("k_x"), Just("alpha"), Just("b_2")].prop_map(|s| Expr::Var(s.to_string())),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone(), prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)])
                    .prop_map(|(a, b, op)| Expr::Bin(op, Box::new(a), Box::new(b))),
                (inner.clone(), -3i32..4).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
                (inner, prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Exp), Just(Func::Sqrt), Just(Func::Conj), Just(Func::Re), Just(Func::Im)])
                    .prop_map(|(a, f)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(e in arb_expr(), kx in -3.0f64..3.0, a in -2.0f64..2.0, bb in -2.0f64..2.0) {
            let text = print(&e);
            let back = parse(&text).unwrap();
            let bind = b(&[("k_x", c(kx, 0.0)), ("alpha", c(a, 0.1)), ("b_2", c(0.0, bb))]);
            let x = evaluate(&e, &bind);
            let y = evaluate(&back, &bind);
            match (x, y) {
                (Ok(x), Ok(y)) => {
                    prop_assert!(x == y || (x - y).norm() <= 1e-12 * x.norm().max(1.0), "{} vs {} for {}", x, y, text);
                }
                (Err(_), Err(_)) => {}
                (x, y) => prop_assert!(false, "mismatch {:?} {:?} for {}", x, y, text),
            }
            // printing is a fixed point after one round
            prop_assert_eq!(print(&back), print(&parse(&print(&back)).unwrap()));
        }
    }
}
