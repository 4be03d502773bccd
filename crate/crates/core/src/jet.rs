//! Truncated power series in a single defining function `theta_j` with
//! exact [`Expr`] coefficients.

use std::fmt;

use thiserror::Error;

use crate::expr::{Expr, ExprError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("jets live in different charts ({left} vs {right})")]
    ChartMismatch { left: usize, right: usize },
    #[error("jets truncated at different orders ({left} vs {right})")]
    OrderMismatch { left: usize, right: usize },
    #[error("constant term `{0}` is not a unit")]
    NonUnitConstant(String),
    #[error("inner series has nonzero constant term `{0}`")]
    NonzeroConstant(String),
    #[error("linear coefficient `{0}` is not a unit")]
    NonUnitLinear(String),
    #[error("coefficient index {index} exceeds truncation order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("truncation order must be at least 1")]
    ZeroOrder,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// `c_0 + c_1 t + ... + c_N t^N + O(t^{N+1})` with `t = theta_chart`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Jet {
    chart: usize,
    coeffs: Vec<Expr>,
}

impl Jet {
    /// Builds a jet from its leading coefficients, padding with zeros or
    /// truncating to exactly `order + 1` entries.
    pub fn new(chart: usize, order: usize, coeffs: Vec<Expr>) -> Result<Jet, JetError> {
        if order == 0 {
            return Err(JetError::ZeroOrder);
        }
        let mut coeffs = coeffs;
        coeffs.resize(order + 1, Expr::zero());
        Ok(Jet { chart, coeffs })
    }

    pub fn constant(chart: usize, order: usize, c: Expr) -> Result<Jet, JetError> {
        Jet::new(chart, order, vec![c])
    }

    pub fn zero(chart: usize, order: usize) -> Result<Jet, JetError> {
        Jet::new(chart, order, Vec::new())
    }

    pub fn one(chart: usize, order: usize) -> Result<Jet, JetError> {
        Jet::constant(chart, order, Expr::one())
    }

    /// The coordinate `theta_chart` itself.
    pub fn identity(chart: usize, order: usize) -> Result<Jet, JetError> {
        Jet::new(chart, order, vec![Expr::zero(), Expr::one()])
    }

    pub fn chart(&self) -> usize {
        self.chart
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn coefficient(&self, m: usize) -> Result<&Expr, JetError> {
        self.coeffs.get(m).ok_or(JetError::IndexOutOfRange {
            index: m,
            order: self.order(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(Expr::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.coeffs[0].is_zero()
            && self.coeffs[1].is_one()
            && self.coeffs[2..].iter().all(Expr::is_zero)
    }

    /// Same coefficients, reinterpreted as a series in `theta_chart`.
    pub fn retag(&self, chart: usize) -> Jet {
        Jet {
            chart,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn map_coeffs(
        &self,
        mut f: impl FnMut(&Expr) -> Result<Expr, ExprError>,
    ) -> Result<Jet, JetError> {
        Ok(Jet {
            chart: self.chart,
            coeffs: self.coeffs.iter().map(&mut f).collect::<Result<_, _>>()?,
        })
    }

    fn check_compatible(&self, other: &Jet) -> Result<(), JetError> {
        if self.chart != other.chart {
            return Err(JetError::ChartMismatch {
                left: self.chart,
                right: other.chart,
            });
        }
        self.check_order(other)
    }

    fn check_order(&self, other: &Jet) -> Result<(), JetError> {
        if self.order() != other.order() {
            return Err(JetError::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    pub fn neg(&self) -> Jet {
        Jet {
            chart: self.chart,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    fn zip(&self, other: &Jet, f: impl Fn(&Expr, &Expr) -> Expr) -> Jet {
        Jet {
            chart: self.chart,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        Ok(self.cauchy(other))
    }

    fn cauchy(&self, other: &Jet) -> Jet {
        let n = self.order();
        let coeffs = (0..=n)
            .map(|m| {
                (0..=m).fold(Expr::zero(), |acc, i| {
                    acc + &self.coeffs[i] * &other.coeffs[m - i]
                })
            })
            .collect();
        Jet {
            chart: self.chart,
            coeffs,
        }
    }

    pub fn scale(&self, c: &Expr) -> Jet {
        Jet {
            chart: self.chart,
            coeffs: self.coeffs.iter().map(|k| k * c).collect(),
        }
    }

    /// Truncated quotient `self / denom`; the constant term of `denom` must
    /// be a unit.
    pub fn div(&self, denom: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(denom)?;
        let lead_inv = denom.coeffs[0]
            .inv()
            .map_err(|_| JetError::NonUnitConstant(denom.coeffs[0].to_string()))?;
        let n = self.order();
        let mut q: Vec<Expr> = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let mut rest = self.coeffs[m].clone();
            for i in 1..=m {
                rest = rest - &denom.coeffs[i] * &q[m - i];
            }
            q.push(rest * &lead_inv);
        }
        Ok(Jet {
            chart: self.chart,
            coeffs: q,
        })
    }

    /// Multiplicative inverse `1 / self`.
    pub fn recip(&self) -> Result<Jet, JetError> {
        Jet::one(self.chart, self.order())?.div(self)
    }

    pub fn pow(&self, exp: usize) -> Result<Jet, JetError> {
        let mut out = Jet::one(self.chart, self.order())?;
        for _ in 0..exp {
            out = out.cauchy(self);
        }
        Ok(out)
    }

    /// `self(inner(t))`, truncated. `self` is read as a series in a free
    /// variable; the result lives in `inner`'s chart. `inner` must vanish at
    /// the origin.
    pub fn compose(&self, inner: &Jet) -> Result<Jet, JetError> {
        self.check_order(inner)?;
        if !inner.coeffs[0].is_zero() {
            return Err(JetError::NonzeroConstant(inner.coeffs[0].to_string()));
        }
        let n = self.order();
        let mut acc = Jet::constant(inner.chart, n, self.coeffs[n].clone())?;
        for m in (0..n).rev() {
            acc = acc.cauchy(inner);
            acc.coeffs[0] = &acc.coeffs[0] + &self.coeffs[m];
        }
        Ok(acc)
    }

    /// Compositional inverse: the series `g` in `theta_target` with
    /// `g(self(t)) = t` and `self(g(t)) = t` up to truncation.
    pub fn invert_series(&self, target_chart: usize) -> Result<Jet, JetError> {
        if !self.coeffs[0].is_zero() {
            return Err(JetError::NonzeroConstant(self.coeffs[0].to_string()));
        }
        let lead_inv = self.coeffs[1]
            .inv()
            .map_err(|_| JetError::NonUnitLinear(self.coeffs[1].to_string()))?;
        let n = self.order();
        let mut g = Jet::new(target_chart, n, vec![Expr::zero(), lead_inv.clone()])?;
        // g(f(t)) has t^m coefficient g_m c_1^m + (terms in g_1..g_{m-1}),
        // so each pass fixes one more order.
        for m in 2..=n {
            let roundtrip = g.compose(&self.retag(target_chart))?;
            let correction = &roundtrip.coeffs[m] * &lead_inv.pow(m as i32)?;
            g.coeffs[m] = &g.coeffs[m] - &correction;
        }
        Ok(g)
    }
}

pub fn jet_arith(op: JetOp, a: &Jet, b: &Jet) -> Result<Jet, JetError> {
    match op {
        JetOp::Add => a.add(b),
        JetOp::Sub => a.sub(b),
        JetOp::Mul => a.mul(b),
        JetOp::Div => a.div(b),
    }
}

/// Truncated expansion of `numer / denom`.
pub fn from_rational(numer: &Jet, denom: &Jet) -> Result<Jet, JetError> {
    numer.div(denom)
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (m, c) in self.coeffs.iter().enumerate() {
            let rendered = c.to_string();
            let bare = c.terms().count() <= 1 && !rendered.starts_with('-');
            match m {
                0 if bare => f.write_str(&rendered)?,
                0 => write!(f, "({})", rendered)?,
                1 => write!(f, " + ({})*t", rendered)?,
                _ => write!(f, " + ({})*t^{}", rendered, m)?,
            }
        }
        write!(f, " [chart {}, order {}]", self.chart, self.order())
    }
}
