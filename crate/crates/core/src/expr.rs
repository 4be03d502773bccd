//! Exact symbolic arithmetic over the transition symbols of the affine bundle.
//!
//! Every symbol `a(j,k)` / `xi(j,k)` is rewritten into the free chain basis
//! `A_i = a(i,i+1)`, `Xi_i = xi(i,i+1)` the moment it is built, using the
//! gluing relations of `eta_j = a_jk * eta_k + xi_jk`:
//!
//! ```text
//! a(j,l)  = a(j,k) * a(k,l)
//! xi(j,l) = xi(j,k) + a(j,k) * xi(k,l)
//! a(k,j)  = a(j,k)^-1
//! xi(k,j) = -a(j,k)^-1 * xi(j,k)
//! ```
//!
//! The `A_i` are the only invertible generators, so every expression is a
//! Laurent polynomial in the `A_i` and an ordinary polynomial in the rest.
//! That representation is canonical: two expressions are equal iff their
//! term maps are identical.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("chart index {index} outside 1..={nerve_size}")]
    IndexOutOfRange { index: usize, nerve_size: usize },
    #[error("division by an expression that normalizes to zero")]
    DivisionByZero,
    #[error("divisor `{0}` is not a unit (only monomials in a(i,i+1) are invertible)")]
    NonUnitDivisor(String),
    #[error("no value assigned to generator {0}")]
    MissingAssignment(Gen),
    #[error("generator {0} evaluates to zero but appears with a negative exponent")]
    Pole(Gen),
    #[error("operation {op} expects {expected} operand(s), got {got}")]
    Arity {
        op: &'static str,
        expected: &'static str,
        got: usize,
    },
}

/// A free generator of the canonical basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    /// `a(i,i+1)`
    A(usize),
    /// `xi(i,i+1)`
    Xi(usize),
    /// Formal 0-cochain coefficient `phi(j)`.
    Phi(usize),
    /// Base coordinate placeholder.
    X,
}

impl Gen {
    pub fn is_invertible(self) -> bool {
        matches!(self, Gen::A(_))
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gen::A(i) => write!(f, "a({},{})", i, i + 1),
            Gen::Xi(i) => write!(f, "xi({},{})", i, i + 1),
            Gen::Phi(j) => write!(f, "phi({})", j),
            Gen::X => f.write_str("x"),
        }
    }
}

/// A symbol as written by a user, before rewriting into the free basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    A(usize, usize),
    Xi(usize, usize),
    Phi(usize),
    X,
}

impl Symbol {
    fn indices(self) -> Vec<usize> {
        match self {
            Symbol::A(j, k) | Symbol::Xi(j, k) => vec![j, k],
            Symbol::Phi(j) => vec![j],
            Symbol::X => vec![],
        }
    }

    pub fn check_range(self, nerve_size: usize) -> Result<(), ExprError> {
        for index in self.indices() {
            if index == 0 || index > nerve_size {
                return Err(ExprError::IndexOutOfRange { index, nerve_size });
            }
        }
        Ok(())
    }

    /// Rewrites the symbol into the free chain basis.
    pub fn normalize(self) -> Expr {
        match self {
            Symbol::A(j, k) => a_chain(j, k),
            Symbol::Xi(j, k) => xi_chain(j, k),
            Symbol::Phi(j) => Expr::gen(Gen::Phi(j)),
            Symbol::X => Expr::gen(Gen::X),
        }
    }
}

fn a_chain(j: usize, k: usize) -> Expr {
    use std::cmp::Ordering::*;
    match j.cmp(&k) {
        Equal => Expr::one(),
        Less => Expr::monomial(BigRational::one(), (j..k).map(|i| (Gen::A(i), 1)).collect()),
        Greater => Expr::monomial(
            BigRational::one(),
            (k..j).map(|i| (Gen::A(i), -1)).collect(),
        ),
    }
}

fn xi_chain(j: usize, k: usize) -> Expr {
    use std::cmp::Ordering::*;
    match j.cmp(&k) {
        Equal => Expr::zero(),
        Less => {
            let mut sum = Expr::zero();
            for i in j..k {
                let mut factors: Vec<(Gen, i32)> = (j..i).map(|m| (Gen::A(m), 1)).collect();
                factors.push((Gen::Xi(i), 1));
                sum = sum + Expr::monomial(BigRational::one(), factors);
            }
            sum
        }
        Greater => {
            // xi(j,k) = -a(k,j)^-1 * xi(k,j) with k < j
            -(a_chain(j, k) * xi_chain(k, j))
        }
    }
}

/// Shorthand for the normalized `a(j,k)`.
pub fn a(j: usize, k: usize) -> Expr {
    a_chain(j, k)
}

/// Shorthand for the normalized `xi(j,k)`.
pub fn xi(j: usize, k: usize) -> Expr {
    xi_chain(j, k)
}

pub fn phi(j: usize) -> Expr {
    Expr::gen(Gen::Phi(j))
}

/// Product of generator powers, sorted by generator, no zero exponents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Gen, i32)>);

impl Monomial {
    fn from_factors(mut factors: Vec<(Gen, i32)>) -> Self {
        factors.sort_by_key(|f| f.0);
        let mut out: Vec<(Gen, i32)> = Vec::with_capacity(factors.len());
        for (g, e) in factors {
            match out.last_mut() {
                Some(last) if last.0 == g => last.1 += e,
                _ => out.push((g, e)),
            }
        }
        out.retain(|f| f.1 != 0);
        Monomial(out)
    }

    pub fn factors(&self) -> &[(Gen, i32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (ga, ea) = self.0[i];
            let (gb, eb) = other.0[j];
            match ga.cmp(&gb) {
                std::cmp::Ordering::Less => {
                    out.push((ga, ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((gb, eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if ea + eb != 0 {
                        out.push((ga, ea + eb));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    fn inverse(&self) -> Monomial {
        Monomial(self.0.iter().map(|&(g, e)| (g, -e)).collect())
    }

    fn is_invertible(&self) -> bool {
        self.0.iter().all(|(g, _)| g.is_invertible())
    }
}

/// Canonical exact expression: a finite map from monomials to nonzero
/// rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Expr {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn one() -> Self {
        Expr::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Expr::monomial(c, Vec::new())
    }

    pub fn int(n: i64) -> Self {
        Expr::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(numer: i64, denom: i64) -> Self {
        Expr::constant(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn gen(g: Gen) -> Self {
        Expr::monomial(BigRational::one(), vec![(g, 1)])
    }

    pub fn x() -> Self {
        Expr::gen(Gen::X)
    }

    pub fn monomial(coeff: BigRational, factors: Vec<(Gen, i32)>) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(Monomial::from_factors(factors), coeff);
        }
        Expr { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.iter().all(|(m, c)| m.is_one() && c.is_one())
    }

    /// The constant coefficient if the expression has no generators.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self
                .terms
                .iter()
                .next()
                .filter(|(m, _)| m.is_one())
                .map(|(_, c)| c.clone()),
            _ => None,
        }
    }

    /// True for a nonzero rational times a Laurent monomial in the `A_i`.
    pub fn is_unit(&self) -> bool {
        self.terms.len() == 1 && self.terms.keys().all(Monomial::is_invertible)
    }

    /// Re-canonicalizes the term map. Expressions built through this module
    /// are already canonical, so this is the identity on them.
    pub fn normalize(&self) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            out.add_term(Monomial::from_factors(m.0.clone()), c.clone());
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let remove = match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                existing.is_zero()
            }
            None => {
                self.terms.insert(m.clone(), c);
                false
            }
        };
        if remove {
            self.terms.remove(&m);
        }
    }

    pub fn scale(&self, c: &BigRational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn inv(&self) -> Result<Expr, ExprError> {
        if self.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        if !self.is_unit() {
            return Err(ExprError::NonUnitDivisor(self.to_string()));
        }
        let (m, c) = self.terms.iter().next().expect("unit has one term");
        let mut terms = BTreeMap::new();
        terms.insert(m.inverse(), c.recip());
        Ok(Expr { terms })
    }

    pub fn div(&self, divisor: &Expr) -> Result<Expr, ExprError> {
        Ok(self * &divisor.inv()?)
    }

    pub fn pow(&self, exp: i32) -> Result<Expr, ExprError> {
        let base = if exp < 0 { self.inv()? } else { self.clone() };
        let mut result = Expr::one();
        for _ in 0..exp.unsigned_abs() {
            result = &result * &base;
        }
        Ok(result)
    }

    /// Generators occurring in the expression.
    pub fn generators(&self) -> BTreeSet<Gen> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|f| f.0))
            .collect()
    }

    /// Replaces every occurrence of `g` by `value`. Negative powers of `g`
    /// require `value` to be a unit.
    pub fn substitute(&self, g: Gen, value: &Expr) -> Result<Expr, ExprError> {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let mut rest = Vec::with_capacity(m.0.len());
            let mut power = 0;
            for &(h, e) in &m.0 {
                if h == g {
                    power = e;
                } else {
                    rest.push((h, e));
                }
            }
            let term = Expr::monomial(c.clone(), rest) * value.pow(power)?;
            out = out + term;
        }
        Ok(out)
    }

    /// Splits into `numerator / denominator` with the denominator a
    /// positive monomial in the `A_i` and the numerator a polynomial.
    pub fn fraction(&self) -> (Expr, Expr) {
        let mut worst: BTreeMap<Gen, i32> = BTreeMap::new();
        for m in self.terms.keys() {
            for &(g, e) in &m.0 {
                if e < 0 {
                    let slot = worst.entry(g).or_insert(0);
                    *slot = (*slot).max(-e);
                }
            }
        }
        let denom = Expr::monomial(BigRational::one(), worst.into_iter().collect());
        (self * &denom, denom)
    }

    /// Substitutes complex values for the free generators and `x_value` for
    /// the base coordinate.
    pub fn evaluate(
        &self,
        env: &BTreeMap<Gen, Complex64>,
        x_value: Complex64,
    ) -> Result<Complex64, ExprError> {
        let mut total = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut term = Complex64::new(rational_to_f64(c), 0.0);
            for &(g, e) in &m.0 {
                let value = match g {
                    Gen::X => x_value,
                    _ => *env.get(&g).ok_or(ExprError::MissingAssignment(g))?,
                };
                if e < 0 && value == Complex64::new(0.0, 0.0) {
                    return Err(ExprError::Pole(g));
                }
                term *= value.powi(e);
            }
            total += term;
        }
        Ok(total)
    }
}

pub fn rational_to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or_else(|| {
        c.numer().to_f64().unwrap_or(f64::NAN) / c.denom().to_f64().unwrap_or(f64::NAN)
    })
}

/// True iff `a - b` normalizes to zero.
pub fn equals(a: &Expr, b: &Expr) -> bool {
    (a - b).is_zero()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Inv,
    IntPow(i32),
}

/// Applies `op` to the operand list. `Add` and `Mul` are n-ary, `Sub` and
/// `Div` binary, the rest unary.
pub fn combine(op: CombineOp, operands: &[Expr]) -> Result<Expr, ExprError> {
    let arity = |name: &'static str, expected: &'static str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(ExprError::Arity {
                op: name,
                expected,
                got: operands.len(),
            })
        }
    };
    match op {
        CombineOp::Add => Ok(operands.iter().fold(Expr::zero(), |acc, e| acc + e)),
        CombineOp::Mul => Ok(operands.iter().fold(Expr::one(), |acc, e| &acc * e)),
        CombineOp::Sub => {
            arity("sub", "2", operands.len() == 2)?;
            Ok(&operands[0] - &operands[1])
        }
        CombineOp::Div => {
            arity("div", "2", operands.len() == 2)?;
            operands[0].div(&operands[1])
        }
        CombineOp::Neg => {
            arity("neg", "1", operands.len() == 1)?;
            Ok(-&operands[0])
        }
        CombineOp::Inv => {
            arity("inv", "1", operands.len() == 1)?;
            operands[0].inv()
        }
        CombineOp::IntPow(e) => {
            arity("pow", "1", operands.len() == 1)?;
            operands[0].pow(e)
        }
    }
}

impl Add<&Expr> for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub<&Expr> for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul<&Expr> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                (&self).$method(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

fn fmt_rational(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let magnitude = c.abs();
            if m.is_one() {
                f.write_str(&fmt_rational(&magnitude))?;
                continue;
            }
            if !magnitude.is_one() {
                write!(f, "{}*", fmt_rational(&magnitude))?;
            }
            for (k, &(g, e)) in m.0.iter().enumerate() {
                if k > 0 {
                    f.write_str("*")?;
                }
                if e == 1 {
                    write!(f, "{}", g)?;
                } else {
                    write!(f, "{}^{}", g, e)?;
                }
            }
        }
        Ok(())
    }
}

/// Parses an expression over a nerve of `nerve_size` charts.
///
/// ```text
/// expr   := term (('+'|'-') term)*
/// term   := factor (('*'|'/') factor)*
/// factor := atom ['^' integer] | '-' factor | '(' expr ')'
/// atom   := 'a(' int ',' int ')' | 'xi(' int ',' int ')' | 'phi(' int ')' | 'x' | rational
/// ```
pub fn parse_expr(text: &str, nerve_size: usize) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        nerve_size,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nerve_size: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ExprError {
        ExprError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(word.as_bytes()) {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc + self.term()?;
            } else if self.eat(b'-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.factor()?;
            } else if self.peek() == Some(b'/') {
                let at = self.pos;
                self.pos += 1;
                let divisor = self.factor()?;
                acc = acc.div(&divisor).map_err(|e| match e {
                    ExprError::DivisionByZero | ExprError::NonUnitDivisor(_) => ExprError::Syntax {
                        pos: at,
                        msg: e.to_string(),
                    },
                    other => other,
                })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(-self.factor()?);
        }
        let base = if self.eat(b'(') {
            let inner = self.expr()?;
            self.expect(b')')?;
            inner
        } else {
            self.atom()?
        };
        if self.eat(b'^') {
            let at = self.pos;
            let negative = self.eat(b'-');
            let magnitude = self.uint()?;
            let exp = i32::try_from(magnitude).map_err(|_| self.error("exponent too large"))?;
            let exp = if negative { -exp } else { exp };
            return base.pow(exp).map_err(|e| ExprError::Syntax {
                pos: at,
                msg: e.to_string(),
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let symbol = if self.keyword("xi(") {
            let (j, k) = self.index_pair()?;
            Symbol::Xi(j, k)
        } else if self.keyword("a(") {
            let (j, k) = self.index_pair()?;
            Symbol::A(j, k)
        } else if self.keyword("phi(") {
            let j = self.index()?;
            self.expect(b')')?;
            Symbol::Phi(j)
        } else if self.keyword("x") {
            Symbol::X
        } else if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return self.rational();
        } else {
            return Err(self.error("expected an atom"));
        };
        symbol.check_range(self.nerve_size)?;
        Ok(symbol.normalize())
    }

    fn index_pair(&mut self) -> Result<(usize, usize), ExprError> {
        let j = self.index()?;
        self.expect(b',')?;
        let k = self.index()?;
        self.expect(b')')?;
        Ok((j, k))
    }

    fn index(&mut self) -> Result<usize, ExprError> {
        let v = self.uint()?;
        usize::try_from(v).map_err(|_| self.error("index too large"))
    }

    fn uint(&mut self) -> Result<u64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ExprError::Syntax {
                pos: start,
                msg: "integer out of range".into(),
            })
    }

    fn big_uint(&mut self) -> Result<BigInt, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("ascii digits parse"))
    }

    fn rational(&mut self) -> Result<Expr, ExprError> {
        let numer = self.big_uint()?;
        // `int '/' int` binds tighter than term-level division
        let save = self.pos;
        if self.eat(b'/') && self.peek().is_some_and(|c| c.is_ascii_digit()) {
            let denom = self.big_uint()?;
            if denom.is_zero() {
                return Err(ExprError::Syntax {
                    pos: save,
                    msg: ExprError::DivisionByZero.to_string(),
                });
            }
            return Ok(Expr::constant(BigRational::new(numer, denom)));
        }
        self.pos = save;
        Ok(Expr::constant(BigRational::from_integer(numer)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse_expr(s, 6).unwrap()
    }

    fn ga(i: usize) -> Expr {
        Expr::gen(Gen::A(i))
    }

    fn gxi(i: usize) -> Expr {
        Expr::gen(Gen::Xi(i))
    }

    #[test]
    fn chain_products_are_free_monomials() {
        assert_eq!(parse_expr("a(1,2)*a(2,3)", 3).unwrap(), &ga(1) * &ga(2));
        assert_eq!(parse_expr("a(1,3)", 3).unwrap(), &ga(1) * &ga(2));
    }

    #[test]
    fn reversed_xi() {
        let expected = -(ga(1).inv().unwrap() * gxi(1));
        assert_eq!(parse_expr("xi(2,1)", 3).unwrap(), expected);
        assert!(equals(&xi(2, 1), &expected));
    }

    #[test]
    fn xi_13_expands_along_chain() {
        let expected = gxi(1) + &ga(1) * &gxi(2);
        assert_eq!(xi(1, 3), expected);
        assert_eq!(
            combine(
                CombineOp::Add,
                &[gxi(1), combine(CombineOp::Mul, &[ga(1), gxi(2)]).unwrap()]
            )
            .unwrap(),
            xi(1, 3)
        );
        assert!(combine(CombineOp::Sub, &[xi(1, 3), xi(1, 3)])
            .unwrap()
            .is_zero());
    }

    #[test]
    fn identity_overlap() {
        assert!(xi(2, 2).is_zero());
        assert!(a(2, 2).is_one());
        for j in 1..=4 {
            for k in 1..=4 {
                assert!((a(j, k) * a(k, j)).is_one());
            }
        }
    }

    #[test]
    fn unit_inverse() {
        let prod = combine(
            CombineOp::Mul,
            &[ga(1), combine(CombineOp::Inv, &[ga(1)]).unwrap()],
        );
        assert!(prod.unwrap().is_one());
        assert!(!equals(&gxi(1), &gxi(2)));
        assert!(equals(&a(1, 3), &(ga(1) * ga(2))));
    }

    #[test]
    fn division_errors() {
        assert_eq!(Expr::zero().inv(), Err(ExprError::DivisionByZero));
        assert!(matches!(gxi(1).inv(), Err(ExprError::NonUnitDivisor(_))));
        assert!(matches!(
            parse_expr("1/(xi(1,2) - xi(1,2))", 3),
            Err(ExprError::Syntax { pos: 1, .. })
        ));
        assert!(matches!(
            parse_expr("3/0", 3),
            Err(ExprError::Syntax { .. })
        ));
    }

    #[test]
    fn index_range_checked() {
        assert_eq!(
            parse_expr("a(1,4)", 3),
            Err(ExprError::IndexOutOfRange {
                index: 4,
                nerve_size: 3
            })
        );
        assert!(matches!(
            parse_expr("phi(0)", 3),
            Err(ExprError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn syntax_error_position() {
        match parse_expr("a(1,2) * * xi(1,2)", 3) {
            Err(ExprError::Syntax { pos, .. }) => assert_eq!(pos, 9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_expr("a(1,2", 3),
            Err(ExprError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expr("a(1,2) )", 3),
            Err(ExprError::Syntax { .. })
        ));
    }

    #[test]
    fn grammar_details() {
        assert_eq!(p("2/3^2"), Expr::rational(4, 9));
        assert_eq!(
            p("a(1,2)/2"),
            ga(1).scale(&BigRational::new(1.into(), 2.into()))
        );
        assert_eq!(p("-x^2"), -(Expr::x() * Expr::x()));
        assert_eq!(
            p(" ( x + 1 ) * ( x - 1 ) "),
            Expr::x() * Expr::x() - Expr::one()
        );
        assert_eq!(p("a(1,2)^-2 * a(1,2)^2"), Expr::one());
        assert!(matches!(
            parse_expr("xi(1,2)^-1", 3),
            Err(ExprError::Syntax { .. })
        ));
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "xi(3,1)",
            "a(1,4)^-2*xi(2,5) - 1/3*phi(2) + x^3",
            "-7/2",
            "0",
            "(xi(1,2) + x)^3 * a(2,1)",
        ] {
            let e = p(s);
            let printed = e.to_string();
            assert_eq!(p(&printed), e, "{s} -> {printed}");
            assert_eq!(p(&printed).to_string(), printed);
        }
        assert_eq!(xi(2, 1).to_string(), "-a(1,2)^-1*xi(1,2)");
    }

    #[test]
    fn fraction_split() {
        let e = p("xi(2,1) + a(1,3)^-1");
        let (n, d) = e.fraction();
        assert_eq!(d, ga(1) * ga(2));
        assert_eq!(n, -(ga(2) * gxi(1)) + Expr::one());
        assert!(d.is_unit());
        assert_eq!(n.div(&d).unwrap(), e);
    }

    #[test]
    fn evaluation() {
        let env: BTreeMap<Gen, Complex64> = [
            (Gen::A(1), Complex64::new(2.0, 0.0)),
            (Gen::A(2), Complex64::new(3.0, 0.0)),
            (Gen::Xi(1), Complex64::new(0.5, 0.0)),
            (Gen::Xi(2), Complex64::new(-1.0 / 3.0, 0.0)),
        ]
        .into();
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(
            (ga(1) * ga(2)).evaluate(&env, zero).unwrap(),
            Complex64::new(6.0, 0.0)
        );
        let v = xi(1, 3).evaluate(&env, zero).unwrap();
        assert!((v - Complex64::new(-1.0 / 6.0, 0.0)).norm() < 1e-15);
        assert_eq!(xi(2, 2).evaluate(&BTreeMap::new(), zero).unwrap(), zero);
        assert_eq!(
            phi(1).evaluate(&env, zero),
            Err(ExprError::MissingAssignment(Gen::Phi(1)))
        );
        let poles: BTreeMap<Gen, Complex64> = [(Gen::A(1), zero)].into();
        assert_eq!(
            a(2, 1).evaluate(&poles, zero),
            Err(ExprError::Pole(Gen::A(1)))
        );
        assert_eq!(a(1, 2).evaluate(&poles, zero).unwrap(), zero);
    }

    #[test]
    fn substitution() {
        let e = xi(1, 3);
        let shifted = e.substitute(Gen::Xi(1), &(gxi(1) + Expr::one())).unwrap();
        assert_eq!(shifted, xi(1, 3) + Expr::one());
        assert!(a(2, 1).substitute(Gen::A(1), &gxi(1)).is_err());
        assert_eq!(
            a(2, 1)
                .substitute(
                    Gen::A(1),
                    &ga(1).scale(&BigRational::from_integer(2.into()))
                )
                .unwrap(),
            a(2, 1).scale(&BigRational::new(1.into(), 2.into()))
        );
    }

    #[test]
    fn arity_checked() {
        assert!(matches!(
            combine(CombineOp::Neg, &[]),
            Err(ExprError::Arity { .. })
        ));
        assert!(combine(CombineOp::Add, &[]).unwrap().is_zero());
        assert!(combine(CombineOp::Mul, &[]).unwrap().is_one());
        assert_eq!(
            combine(CombineOp::IntPow(-1), &[ga(2)]).unwrap(),
            ga(2).inv().unwrap()
        );
    }
}
