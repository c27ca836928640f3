//! Symbolic scalar expressions over chart coordinates.
//!
//! An [`Expr`] is an immutable tree of arithmetic nodes over named coordinates.
//! It supports exact symbolic differentiation ([`Expr::diff`]) and pointwise
//! numeric evaluation, either to a plain float ([`Expr::eval`]) or to a
//! truncated Taylor jet ([`Expr::eval_jet`]).  All metric components and input
//! fields enter the engine as expressions; everything downstream is numeric.
//!
//! The grammar accepted by [`parse`]:
//!
//! ```text
//! expr    := term (('+'|'-') term)*
//! term    := unary (('*'|'/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          # exponent must fold to a constant
//! atom    := number | name | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | log | sqrt
//! ```
//!
//! Integer literals are kept as exact rationals; decimal or exponent literals
//! are IEEE doubles.  No global simplification is performed; constructors only
//! fold the trivial identities (`x+0`, `1*x`, ...) so derivative trees stay
//! bounded.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num::rational::Rational64;
use num::ToPrimitive;
use num_traits::Float;

use crate::jet::Jet;

/// Exact-or-floating constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Num {
    Rat(Rational64),
    Real(f64),
}

impl Num {
    pub fn as_f64(&self) -> f64 {
        match self {
            Num::Rat(r) => r.to_f64().unwrap(),
            Num::Real(x) => *x,
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Num::Rat(r) => *r.numer() == 0,
            Num::Real(x) => *x == 0.0,
        }
    }

    fn is_one(&self) -> bool {
        match self {
            Num::Rat(r) => *r.numer() == 1 && *r.denom() == 1,
            Num::Real(x) => *x == 1.0,
        }
    }
}

#[derive(Debug)]
enum Node {
    Const(Num),
    Coord(usize),
    Add(Expr, Expr),
    Mul(Expr, Expr),
    /// Power with a real (constant) exponent.
    Pow(Expr, f64),
    Neg(Expr),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Log(Expr),
    Sqrt(Expr),
}

/// Immutable symbolic expression.  Cheap to clone; subtrees are shared.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Errors from parsing or evaluating expressions.
#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdent { offset: usize, name: String },
    #[error("domain error in {op} at subexpression `{path}`: {detail}")]
    Domain {
        op: &'static str,
        path: String,
        detail: String,
    },
}

pub type ExprResult<T> = Result<T, ExprError>;

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr(Arc::new(Node::Const(Num::Real(c))))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr(Arc::new(Node::Const(Num::Rat(Rational64::new(n, d)))))
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(n, 1)
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn coord(i: usize) -> Expr {
        Expr(Arc::new(Node::Coord(i)))
    }

    fn num(&self) -> Option<Num> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num().map(|c| c.is_zero()).unwrap_or(false)
    }

    pub fn add(a: &Expr, b: &Expr) -> Expr {
        if a.is_zero() {
            return b.clone();
        }
        if b.is_zero() {
            return a.clone();
        }
        if let (Some(Num::Rat(x)), Some(Num::Rat(y))) = (a.num(), b.num()) {
            return Expr(Arc::new(Node::Const(Num::Rat(x + y))));
        }
        Expr(Arc::new(Node::Add(a.clone(), b.clone())))
    }

    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        Expr::add(a, &Expr::neg(b))
    }

    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::zero();
        }
        if a.num().map(|c| c.is_one()).unwrap_or(false) {
            return b.clone();
        }
        if b.num().map(|c| c.is_one()).unwrap_or(false) {
            return a.clone();
        }
        if let (Some(Num::Rat(x)), Some(Num::Rat(y))) = (a.num(), b.num()) {
            return Expr(Arc::new(Node::Const(Num::Rat(x * y))));
        }
        Expr(Arc::new(Node::Mul(a.clone(), b.clone())))
    }

    pub fn neg(a: &Expr) -> Expr {
        match &*a.0 {
            Node::Const(Num::Rat(r)) => Expr(Arc::new(Node::Const(Num::Rat(-r)))),
            Node::Const(Num::Real(x)) => Expr::constant(-x),
            Node::Neg(inner) => inner.clone(),
            _ => Expr(Arc::new(Node::Neg(a.clone()))),
        }
    }

    pub fn pow(a: &Expr, e: f64) -> Expr {
        if e == 0.0 {
            return Expr::one();
        }
        if e == 1.0 {
            return a.clone();
        }
        Expr(Arc::new(Node::Pow(a.clone(), e)))
    }

    pub fn sin(a: &Expr) -> Expr {
        Expr(Arc::new(Node::Sin(a.clone())))
    }

    pub fn cos(a: &Expr) -> Expr {
        Expr(Arc::new(Node::Cos(a.clone())))
    }

    pub fn exp(a: &Expr) -> Expr {
        Expr(Arc::new(Node::Exp(a.clone())))
    }

    pub fn log(a: &Expr) -> Expr {
        Expr(Arc::new(Node::Log(a.clone())))
    }

    pub fn sqrt(a: &Expr) -> Expr {
        Expr(Arc::new(Node::Sqrt(a.clone())))
    }

    pub fn div(a: &Expr, b: &Expr) -> Expr {
        Expr::mul(a, &Expr::pow(b, -1.0))
    }

    /// Exact partial derivative with respect to coordinate `i`.
    ///
    /// Repeated application is supported; subtrees are shared so the result
    /// stays compact together with memoized evaluation.
    pub fn diff(&self, i: usize) -> Expr {
        match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Coord(j) => {
                if *j == i {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => Expr::add(&a.diff(i), &b.diff(i)),
            Node::Mul(a, b) => Expr::add(
                &Expr::mul(&a.diff(i), b),
                &Expr::mul(a, &b.diff(i)),
            ),
            Node::Pow(a, e) => {
                // d(a^e) = e a^(e-1) a'
                let da = a.diff(i);
                if da.is_zero() {
                    return Expr::zero();
                }
                Expr::mul(
                    &Expr::mul(&Expr::constant(*e), &Expr::pow(a, e - 1.0)),
                    &da,
                )
            }
            Node::Neg(a) => Expr::neg(&a.diff(i)),
            Node::Sin(a) => Expr::mul(&Expr::cos(a), &a.diff(i)),
            Node::Cos(a) => Expr::neg(&Expr::mul(&Expr::sin(a), &a.diff(i))),
            Node::Exp(a) => Expr::mul(self, &a.diff(i)),
            Node::Log(a) => Expr::mul(&Expr::pow(a, -1.0), &a.diff(i)),
            Node::Sqrt(a) => Expr::mul(
                &Expr::mul(&Expr::rational(1, 2), &Expr::pow(a, -0.5)),
                &a.diff(i),
            ),
        }
    }

    /// Evaluate at a point, memoizing shared subtrees.
    pub fn eval<T: Float>(&self, p: &[T]) -> ExprResult<T> {
        let mut cache: HashMap<*const Node, T> = HashMap::new();
        self.eval_rec(p, &mut cache)
    }

    fn eval_rec<T: Float>(&self, p: &[T], cache: &mut HashMap<*const Node, T>) -> ExprResult<T> {
        let key = Arc::as_ptr(&self.0);
        if let Some(v) = cache.get(&key) {
            return Ok(*v);
        }
        let v: T = match &*self.0 {
            Node::Const(c) => T::from(c.as_f64()).unwrap(),
            Node::Coord(i) => p[*i],
            Node::Add(a, b) => a.eval_rec(p, cache)? + b.eval_rec(p, cache)?,
            Node::Mul(a, b) => a.eval_rec(p, cache)? * b.eval_rec(p, cache)?,
            Node::Pow(a, e) => {
                let base = a.eval_rec(p, cache)?;
                self.check_pow_domain(base.to_f64().unwrap(), *e)?;
                base.powf(T::from(*e).unwrap())
            }
            Node::Neg(a) => -a.eval_rec(p, cache)?,
            Node::Sin(a) => a.eval_rec(p, cache)?.sin(),
            Node::Cos(a) => a.eval_rec(p, cache)?.cos(),
            Node::Exp(a) => a.eval_rec(p, cache)?.exp(),
            Node::Log(a) => {
                let x = a.eval_rec(p, cache)?;
                if x <= T::zero() {
                    return Err(self.domain_err("log", "argument is not positive"));
                }
                x.ln()
            }
            Node::Sqrt(a) => {
                let x = a.eval_rec(p, cache)?;
                if x < T::zero() {
                    return Err(self.domain_err("sqrt", "argument is negative"));
                }
                x.sqrt()
            }
        };
        cache.insert(key, v);
        Ok(v)
    }

    /// Evaluate to a truncated Taylor jet of the given order at `p`.
    ///
    /// The jet carries exact partial derivatives up to `order`; this is the
    /// entry point the geometry layer uses for metric and field jets.
    pub fn eval_jet<T: Float>(&self, p: &[T], order: usize) -> ExprResult<Jet<T>> {
        let mut cache: HashMap<*const Node, Jet<T>> = HashMap::new();
        self.eval_jet_rec(p, order, &mut cache)
    }

    fn eval_jet_rec<T: Float>(
        &self,
        p: &[T],
        order: usize,
        cache: &mut HashMap<*const Node, Jet<T>>,
    ) -> ExprResult<Jet<T>> {
        let key = Arc::as_ptr(&self.0);
        if let Some(v) = cache.get(&key) {
            return Ok(v.clone());
        }
        let n = p.len();
        let v: Jet<T> = match &*self.0 {
            Node::Const(c) => Jet::constant(T::from(c.as_f64()).unwrap(), n, order),
            Node::Coord(i) => Jet::variable(p[*i], *i, n, order),
            Node::Add(a, b) => {
                let x = a.eval_jet_rec(p, order, cache)?;
                let y = b.eval_jet_rec(p, order, cache)?;
                x.add(&y)
            }
            Node::Mul(a, b) => {
                let x = a.eval_jet_rec(p, order, cache)?;
                let y = b.eval_jet_rec(p, order, cache)?;
                x.mul(&y)
            }
            Node::Pow(a, e) => {
                let x = a.eval_jet_rec(p, order, cache)?;
                self.check_pow_domain(x.value().to_f64().unwrap(), *e)?;
                x.powf(T::from(*e).unwrap())
            }
            Node::Neg(a) => a.eval_jet_rec(p, order, cache)?.neg(),
            Node::Sin(a) => a.eval_jet_rec(p, order, cache)?.sin(),
            Node::Cos(a) => a.eval_jet_rec(p, order, cache)?.cos(),
            Node::Exp(a) => a.eval_jet_rec(p, order, cache)?.exp(),
            Node::Log(a) => {
                let x = a.eval_jet_rec(p, order, cache)?;
                if x.value() <= T::zero() {
                    return Err(self.domain_err("log", "argument is not positive"));
                }
                x.ln()
            }
            Node::Sqrt(a) => {
                let x = a.eval_jet_rec(p, order, cache)?;
                if x.value() < T::zero() {
                    return Err(self.domain_err("sqrt", "argument is negative"));
                }
                x.sqrt()
            }
        };
        cache.insert(key, v.clone());
        Ok(v)
    }

    fn check_pow_domain(&self, base: f64, e: f64) -> ExprResult<()> {
        if base == 0.0 && e < 0.0 {
            return Err(self.domain_err("power", "division by zero"));
        }
        if base < 0.0 && e.fract() != 0.0 {
            return Err(self.domain_err("power", "negative base with non-integer exponent"));
        }
        Ok(())
    }

    fn domain_err(&self, op: &'static str, detail: &str) -> ExprError {
        ExprError::Domain {
            op,
            path: format!("{}", self),
            detail: detail.to_string(),
        }
    }
}

// Precedence levels for printing with minimal parentheses.
fn prec(node: &Node) -> u8 {
    match node {
        Node::Add(..) => 1,
        Node::Mul(..) => 2,
        Node::Neg(..) => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if prec(&e.0) < min {
                write!(f, "({})", e)
            } else {
                write!(f, "{}", e)
            }
        }
        match &*self.0 {
            Node::Const(Num::Rat(r)) => {
                if *r.denom() == 1 {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "({}/{})", r.numer(), r.denom())
                }
            }
            Node::Const(Num::Real(x)) => {
                if *x < 0.0 {
                    write!(f, "({})", x)
                } else {
                    write!(f, "{}", x)
                }
            }
            Node::Coord(i) => write!(f, "x{}", i + 1),
            Node::Add(a, b) => {
                child(f, a, 1)?;
                write!(f, " + ")?;
                child(f, b, 2)
            }
            Node::Mul(a, b) => {
                child(f, a, 2)?;
                write!(f, "*")?;
                child(f, b, 3)
            }
            Node::Pow(a, e) => {
                child(f, a, 5)?;
                if *e < 0.0 || e.fract() != 0.0 {
                    write!(f, "^({})", e)
                } else {
                    write!(f, "^{}", e)
                }
            }
            Node::Neg(a) => {
                write!(f, "-")?;
                child(f, a, 4)
            }
            Node::Sin(a) => write!(f, "sin({})", a),
            Node::Cos(a) => write!(f, "cos({})", a),
            Node::Exp(a) => write!(f, "exp({})", a),
            Node::Log(a) => write!(f, "log({})", a),
            Node::Sqrt(a) => write!(f, "sqrt({})", a),
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    coords: &'a [String],
}

/// Parse `src` into an expression over the named coordinates.
pub fn parse(src: &str, coords: &[String]) -> ExprResult<Expr> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        coords,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ExprError::Syntax {
            offset: p.pos,
            msg: format!("unexpected `{}`", p.src[p.pos] as char),
        });
    }
    Ok(e)
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

    fn expr(&mut self) -> ExprResult<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::add(&acc, &rhs);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::sub(&acc, &rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> ExprResult<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = Expr::mul(&acc, &rhs);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = Expr::div(&acc, &rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> ExprResult<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::neg(&inner));
        }
        self.power()
    }

    fn power(&mut self) -> ExprResult<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let off = self.pos;
            // Exponent must fold to a constant (possibly negated/parenthesised).
            let e = self.unary()?;
            let val = e.eval::<f64>(&vec![f64::NAN; self.coords.len()]).ok();
            match val {
                Some(v) if v.is_finite() => return Ok(Expr::pow(&base, v)),
                _ => {
                    return Err(ExprError::Syntax {
                        offset: off,
                        msg: "exponent must be a constant".to_string(),
                    })
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> ExprResult<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ExprError::Syntax {
                        offset: self.pos,
                        msg: "expected `)`".to_string(),
                    });
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(ExprError::Syntax {
                offset: self.pos,
                msg: format!("unexpected `{}`", c as char),
            }),
            None => Err(ExprError::Syntax {
                offset: self.pos,
                msg: "unexpected end of input".to_string(),
            }),
        }
    }

    fn number(&mut self) -> ExprResult<Expr> {
        let start = self.pos;
        let mut is_real = false;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() {
                self.pos += 1;
            } else if c == b'.' {
                is_real = true;
                self.pos += 1;
            } else if c == b'e' || c == b'E' {
                // exponent part of a float literal
                let mut j = self.pos + 1;
                if j < self.src.len() && (self.src[j] == b'+' || self.src[j] == b'-') {
                    j += 1;
                }
                if j < self.src.len() && self.src[j].is_ascii_digit() {
                    is_real = true;
                    self.pos = j;
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if is_real {
            text.parse::<f64>()
                .map(Expr::constant)
                .map_err(|_| ExprError::Syntax {
                    offset: start,
                    msg: format!("bad number `{}`", text),
                })
        } else {
            text.parse::<i64>()
                .map(Expr::int)
                .map_err(|_| ExprError::Syntax {
                    offset: start,
                    msg: format!("bad integer `{}`", text),
                })
        }
    }

    fn ident(&mut self) -> ExprResult<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string();
        let func: Option<fn(&Expr) -> Expr> = match name.as_str() {
            "sin" => Some(Expr::sin),
            "cos" => Some(Expr::cos),
            "exp" => Some(Expr::exp),
            "log" => Some(Expr::log),
            "sqrt" => Some(Expr::sqrt),
            _ => None,
        };
        if let Some(f) = func {
            if self.peek() != Some(b'(') {
                return Err(ExprError::Syntax {
                    offset: self.pos,
                    msg: format!("expected `(` after `{}`", name),
                });
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(ExprError::Syntax {
                    offset: self.pos,
                    msg: "expected `)`".to_string(),
                });
            }
            self.pos += 1;
            return Ok(f(&arg));
        }
        if let Some(i) = self.coords.iter().position(|c| *c == name) {
            return Ok(Expr::coord(i));
        }
        Err(ExprError::UnknownIdent {
            offset: start,
            name,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{}", i)).collect()
    }

    #[test]
    fn parse_constants_and_identities() {
        let c = coords(2);
        let e = parse("1", &c).unwrap();
        assert_eq!(e.eval::<f64>(&[0.3, 0.4]).unwrap(), 1.0);

        let e = parse("sin(x1)^2 + cos(x1)^2", &c).unwrap();
        for x in [-2.0, 0.0, 0.7, 3.1] {
            assert!((e.eval::<f64>(&[x, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_derivatives() {
        let c = coords(3);
        let e = parse("x2", &c).unwrap();
        assert!(e.diff(0).is_zero());

        let e = parse("x1*x1", &c).unwrap();
        assert_eq!(e.diff(0).eval::<f64>(&[3.0, 0.0, 0.0]).unwrap(), 6.0);

        let e = parse("x1^3", &c).unwrap();
        assert_eq!(e.diff(0).eval::<f64>(&[2.0, 0.0, 0.0]).unwrap(), 12.0);

        // second derivative of exp(2 x1) at 0 is 4
        let e = parse("exp(2*x1)", &c).unwrap();
        let d2 = e.diff(0).diff(0);
        assert!((d2.eval::<f64>(&[0.0, 0.0, 0.0]).unwrap() - 4.0).abs() < 1e-12);

        // 4th derivative of sin at 0 is 0
        let e = parse("sin(x1)", &c).unwrap();
        let d4 = e.diff(0).diff(0).diff(0).diff(0);
        assert!(d4.eval::<f64>(&[0.0; 3]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn eval_basics() {
        let c = coords(3);
        assert_eq!(parse("0", &c).unwrap().eval::<f64>(&[1.0; 3]).unwrap(), 0.0);
        assert_eq!(
            parse("x1+x2", &c)
                .unwrap()
                .eval::<f64>(&[1.0, 2.0, 0.0])
                .unwrap(),
            3.0
        );
        // generic evaluation also works at f32
        let v: f32 = parse("x1*x2 + 1/2", &c)
            .unwrap()
            .eval(&[2.0f32, 3.0f32, 0.0f32])
            .unwrap();
        assert!((v - 6.5).abs() < 1e-6);
    }

    #[test]
    fn errors_carry_offsets() {
        let c = coords(2);
        match parse("x1 + y", &c) {
            Err(ExprError::UnknownIdent { offset, name }) => {
                assert_eq!(offset, 5);
                assert_eq!(name, "y");
            }
            other => panic!("expected unknown identifier, got {:?}", other),
        }
        match parse("x1 + ", &c) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected syntax error, got {:?}", other),
        }
    }

    #[test]
    fn domain_errors() {
        let c = coords(1);
        let e = parse("log(x1)", &c).unwrap();
        assert!(matches!(
            e.eval::<f64>(&[-1.0]),
            Err(ExprError::Domain { op: "log", .. })
        ));
        let e = parse("1/x1", &c).unwrap();
        assert!(matches!(
            e.eval::<f64>(&[0.0]),
            Err(ExprError::Domain { op: "power", .. })
        ));
    }

    #[test]
    fn print_parse_roundtrip_is_semantically_stable() {
        let c = coords(2);
        let srcs = [
            "x1^2*sin(x2) - 3/4*exp(x1*x2)",
            "sqrt(1 + x1^2) + log(2 + cos(x2))",
            "-(x1 - x2)^3/(1 + x1^2)",
        ];
        for s in srcs {
            let e = parse(s, &c).unwrap();
            let e2 = parse(&format!("{}", e), &c).unwrap();
            for p in [[0.3, -0.7], [1.1, 0.2], [-0.5, 0.9]] {
                let a = e.eval::<f64>(&p).unwrap();
                let b = e2.eval::<f64>(&p).unwrap();
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }
}
