//! Symbolic model of the compactified affine bundle over an abstract nerve.
//!
//! A chart `V_j` carries the fibre coordinate `eta_j` and the defining
//! function `theta_j = 1 / eta_j` of the section at infinity `Y`. The
//! gluing `eta_j = a_jk eta_k + xi_jk` gives
//!
//! ```text
//! theta_j = theta_k / (a_jk + xi_jk theta_k)
//! theta_k = a_jk theta_j / (1 - xi_jk theta_j)
//! ```
//!
//! Line bundles are stored as transition jets `g_jk = e_k / e_j` expanded in
//! the first index's coordinate `theta_j`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{self, Expr, ExprError, Gen};
use crate::jet::{Jet, JetError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("a nerve needs at least 3 charts to have triple overlaps, got {0}")]
    TooFewCharts(usize),
    #[error("genus must be at least 2, got {0}")]
    GenusTooSmall(i64),
    #[error("truncation order must be at least 1")]
    ZeroOrder,
    #[error("({0},{1}) is not an overlap of the nerve")]
    NotAnOverlap(usize, usize),
    #[error("({0},{1},{2}) is not a triple overlap of the nerve")]
    NotATriple(usize, usize, usize),
    #[error("cochains belong to different models")]
    ModelMismatch,
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Full simplex on `n` charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Nerve {
    n: usize,
}

impl Nerve {
    pub fn new(n: usize) -> Result<Nerve, ModelError> {
        if n < 3 {
            return Err(ModelError::TooFewCharts(n));
        }
        Ok(Nerve { n })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn charts(&self) -> impl Iterator<Item = usize> {
        1..=self.n
    }

    /// All ordered pairs `(j, k)` with `j != k`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (1..=n)
            .flat_map(|j| (1..=n).filter(move |&k| k != j).map(move |k| (j, k)))
            .collect()
    }

    pub fn unordered_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs().into_iter().filter(|(j, k)| j < k).collect()
    }

    /// Triples `j < k < l`.
    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        let n = self.n;
        let mut out = Vec::new();
        for j in 1..=n {
            for k in j + 1..=n {
                for l in k + 1..=n {
                    out.push((j, k, l));
                }
            }
        }
        out
    }

    /// All ordered triples of distinct charts.
    pub fn ordered_triples(&self) -> Vec<(usize, usize, usize)> {
        let n = self.n;
        let mut out = Vec::new();
        for j in 1..=n {
            for k in 1..=n {
                for l in 1..=n {
                    if j != k && k != l && j != l {
                        out.push((j, k, l));
                    }
                }
            }
        }
        out
    }

    pub fn contains_pair(&self, j: usize, k: usize) -> bool {
        j != k && (1..=self.n).contains(&j) && (1..=self.n).contains(&k)
    }

    /// The free generators `A_i, Xi_i` of the chain basis.
    pub fn free_generators(&self) -> Vec<Gen> {
        (1..self.n)
            .map(Gen::A)
            .chain((1..self.n).map(Gen::Xi))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrauertModel {
    pub nerve: Nerve,
    pub genus: i64,
    pub deg_f: i64,
    pub order: usize,
}

pub fn build_model(
    n: usize,
    genus: i64,
    deg_f: i64,
    order: usize,
) -> Result<GrauertModel, ModelError> {
    let nerve = Nerve::new(n)?;
    if genus < 2 {
        return Err(ModelError::GenusTooSmall(genus));
    }
    if order == 0 {
        return Err(ModelError::ZeroOrder);
    }
    Ok(GrauertModel {
        nerve,
        genus,
        deg_f,
        order,
    })
}

impl GrauertModel {
    fn check_pair(&self, j: usize, k: usize) -> Result<(), ModelError> {
        if self.nerve.contains_pair(j, k) {
            Ok(())
        } else {
            Err(ModelError::NotAnOverlap(j, k))
        }
    }

    /// `theta_j` as a jet in `theta_k`.
    pub fn theta_transition(&self, j: usize, k: usize) -> Result<Jet, ModelError> {
        self.check_pair(j, k)?;
        let numer = Jet::identity(k, self.order)?;
        let denom = Jet::new(k, self.order, vec![expr::a(j, k), expr::xi(j, k)])?;
        Ok(numer.div(&denom)?)
    }

    /// `theta_k = a_jk theta_j / (1 - xi_jk theta_j)` as a jet in `theta_j`,
    /// expanded directly from the closed form.
    pub fn theta_inverse(&self, j: usize, k: usize) -> Result<Jet, ModelError> {
        self.check_pair(j, k)?;
        let numer = Jet::new(j, self.order, vec![Expr::zero(), expr::a(j, k)])?;
        let denom = Jet::new(j, self.order, vec![Expr::one(), -expr::xi(j, k)])?;
        Ok(numer.div(&denom)?)
    }

    /// Pull-back of `F`: `p*m_k / p*m_j = a_jk`.
    pub fn bundle_pullback_f(&self) -> Result<LineBundleCochain, ModelError> {
        self.cochain("p*F", |j, k| {
            Ok(Jet::constant(j, self.order, expr::a(j, k))?)
        })
    }

    /// The divisor bundle `[Y]` with `v_j theta_j = v_k theta_k`.
    pub fn bundle_divisor_y(&self) -> Result<LineBundleCochain, ModelError> {
        self.cochain("[Y]", |j, k| {
            // v_k / v_j = 1 / (a_jk + xi_jk theta_k), first in theta_k
            let in_k = Jet::new(k, self.order, vec![expr::a(j, k), expr::xi(j, k)])?.recip()?;
            Ok(in_k.compose(&self.theta_inverse(j, k)?)?)
        })
    }

    /// `L = p*F (x) [Y]`.
    pub fn bundle_l(&self) -> Result<LineBundleCochain, ModelError> {
        let mut l = bundle_combine(
            BundleOp::Tensor,
            &self.bundle_pullback_f()?,
            Some(&self.bundle_divisor_y()?),
        )?;
        l.name = "L".into();
        Ok(l)
    }

    pub fn bundle_trivial(&self) -> Result<LineBundleCochain, ModelError> {
        self.cochain("O", |j, _| Ok(Jet::one(j, self.order)?))
    }

    fn cochain(
        &self,
        name: &str,
        mut build: impl FnMut(usize, usize) -> Result<Jet, ModelError>,
    ) -> Result<LineBundleCochain, ModelError> {
        let mut transitions = BTreeMap::new();
        for (j, k) in self.nerve.pairs() {
            transitions.insert((j, k), build(j, k)?);
        }
        Ok(LineBundleCochain {
            model: *self,
            name: name.to_string(),
            transitions,
        })
    }
}

/// Transition jets `g_jk = e_k / e_j` in `theta_j` for every ordered pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineBundleCochain {
    pub model: GrauertModel,
    pub name: String,
    transitions: BTreeMap<(usize, usize), Jet>,
}

impl LineBundleCochain {
    pub fn transition(&self, j: usize, k: usize) -> Result<&Jet, ModelError> {
        self.transitions
            .get(&(j, k))
            .ok_or(ModelError::NotAnOverlap(j, k))
    }

    pub fn transitions(&self) -> &BTreeMap<(usize, usize), Jet> {
        &self.transitions
    }

    /// Replaces a single transition, leaving every other pair untouched.
    pub fn with_transition(mut self, j: usize, k: usize, g: Jet) -> Result<Self, ModelError> {
        match self.transitions.get_mut(&(j, k)) {
            Some(slot) => *slot = g,
            None => return Err(ModelError::NotAnOverlap(j, k)),
        }
        Ok(self)
    }

    /// Applies `f` to every coefficient of the one transition `g_jk`.
    pub fn perturb(
        self,
        j: usize,
        k: usize,
        f: impl FnMut(&Expr) -> Result<Expr, ExprError>,
    ) -> Result<Self, ModelError> {
        let g = self.transition(j, k)?.map_coeffs(f)?;
        self.with_transition(j, k, g)
    }

    /// `g_jk * (g_kl o theta_k(theta_j)) * g_jl^{-1} - 1`, in chart `j`.
    pub fn cocycle_residual(&self, j: usize, k: usize, l: usize) -> Result<Jet, ModelError> {
        if j == k || k == l || j == l || !self.model.nerve.contains_pair(j, l) {
            return Err(ModelError::NotATriple(j, k, l));
        }
        let g_jk = self.transition(j, k)?;
        let g_kl = self.transition(k, l)?;
        let g_jl = self.transition(j, l)?;
        let g_kl_in_j = g_kl.compose(&self.model.theta_inverse(j, k)?)?;
        let product = g_jk.mul(&g_kl_in_j)?.mul(&g_jl.recip()?)?;
        Ok(product.sub(&Jet::one(j, self.model.order)?)?)
    }

    /// `g_jk * (g_kj o theta_k(theta_j)) - 1`; zero for a consistent cochain.
    pub fn compatibility_residual(&self, j: usize, k: usize) -> Result<Jet, ModelError> {
        let g_kj_in_j = self
            .transition(k, j)?
            .compose(&self.model.theta_inverse(j, k)?)?;
        let product = self.transition(j, k)?.mul(&g_kj_in_j)?;
        Ok(product.sub(&Jet::one(j, self.model.order)?)?)
    }

    pub fn restrict_to_y(&self) -> FlatCochain {
        FlatCochain {
            constants: self
                .transitions
                .iter()
                .map(|(&pair, g)| (pair, g.coeffs()[0].clone()))
                .collect(),
        }
    }
}

pub fn bundle_cocycle_residual(
    b: &LineBundleCochain,
    triple: (usize, usize, usize),
) -> Result<Jet, ModelError> {
    b.cocycle_residual(triple.0, triple.1, triple.2)
}

pub fn restrict_to_y(b: &LineBundleCochain) -> FlatCochain {
    b.restrict_to_y()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleOp {
    Tensor,
    Dual,
}

/// `Tensor` multiplies transitions pairwise; `Dual` inverts them and
/// ignores `b`.
pub fn bundle_combine(
    op: BundleOp,
    a: &LineBundleCochain,
    b: Option<&LineBundleCochain>,
) -> Result<LineBundleCochain, ModelError> {
    let mut transitions = BTreeMap::new();
    let name = match op {
        BundleOp::Tensor => {
            let b = b.ok_or(ModelError::ModelMismatch)?;
            if a.model != b.model {
                return Err(ModelError::ModelMismatch);
            }
            for (pair, g) in &a.transitions {
                transitions.insert(*pair, g.mul(b.transition(pair.0, pair.1)?)?);
            }
            format!("{} (x) {}", a.name, b.name)
        }
        BundleOp::Dual => {
            for (pair, g) in &a.transitions {
                transitions.insert(*pair, g.recip()?);
            }
            format!("({})^-1", a.name)
        }
    };
    Ok(LineBundleCochain {
        model: a.model,
        name,
        transitions,
    })
}

/// Constant terms `t_jk` of a cochain along `Y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatCochain {
    pub constants: BTreeMap<(usize, usize), Expr>,
}

impl FlatCochain {
    /// Every `t_jk` is `1`: the restricted bundle is trivial with these frames.
    pub fn is_trivial(&self) -> bool {
        self.constants.values().all(Expr::is_one)
    }

    /// Pairs whose constant is not `1`.
    pub fn nontrivial_pairs(&self) -> Vec<(usize, usize)> {
        self.constants
            .iter()
            .filter(|(_, t)| !t.is_one())
            .map(|(p, _)| *p)
            .collect()
    }

    /// `t_jk t_kl - t_jl` over all ordered triples of distinct charts.
    pub fn cocycle_holds(&self) -> bool {
        self.constants.keys().all(|&(j, k)| {
            self.constants
                .iter()
                .filter(|((k2, l), _)| *k2 == k && *l != j)
                .all(|(&(_, l), t_kl)| {
                    let t_jl = &self.constants[&(j, l)];
                    (&self.constants[&(j, k)] * t_kl - t_jl).is_zero()
                })
        })
    }
}
