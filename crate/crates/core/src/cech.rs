//! Čech 1-cochains with values in the conormal bundle of `Y`.
//!
//! A conormal entry `c_jk` stands for the section `c_jk dtheta_j` on
//! `W_jk`. Along `Y` the frames are related by `dtheta_k = a_jk dtheta_j`
//! (the linear term of `theta_k(theta_j)`), and the pulled-back frames of
//! `F` by `m_k = a_jk m_j`. Both transport factors agree, which is what
//! makes relabelling `dtheta_j -> m_j` a well-defined map of cochains.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;

use thiserror::Error;

use crate::expr::{self, parse_expr, Expr, ExprError};
use crate::grauert::{GrauertModel, LineBundleCochain, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CechError {
    #[error("restriction to Y is not normalized to 1 on pairs {0:?}")]
    NotNormalized(Vec<(usize, usize)>),
    #[error("({0},{1},{2}) is not a triple j<k<l of the nerve")]
    NotATriple(usize, usize, usize),
    #[error("cochain is missing the entry for ({0},{1})")]
    MissingEntry(usize, usize),
    #[error("cochain entry ({0},{1}) = `{2}` is not of the form -xi(j,k) (nor identically zero)")]
    ShapeMismatch(usize, usize, String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// `{(W_jk, c_jk dtheta_j)}` for every ordered pair of a full simplex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConormalCochain {
    pub nerve_size: usize,
    pub entries: BTreeMap<(usize, usize), Expr>,
}

/// `{(W_j, phi_j dtheta_j)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroCochain {
    pub entries: BTreeMap<usize, Expr>,
}

/// `{(U_jk, c_jk m_j)}` against the frames of `F`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FCochain {
    pub nerve_size: usize,
    pub entries: BTreeMap<(usize, usize), Expr>,
}

fn ordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=n).flat_map(move |j| (1..=n).filter(move |&k| k != j).map(move |k| (j, k)))
}

/// `dtheta_k / dtheta_j` on `Y`, read off the linear term of the
/// chart-change series.
pub fn conormal_transport(model: &GrauertModel, j: usize, k: usize) -> Result<Expr, CechError> {
    Ok(model.theta_inverse(j, k)?.coeffs()[1].clone())
}

/// `m_k / m_j` from the frame relation `m_j = a_jk^{-1} m_k`.
pub fn f_frame_transport(j: usize, k: usize) -> Expr {
    expr::a(j, k)
}

impl ConormalCochain {
    pub fn zero(nerve_size: usize) -> Self {
        ConormalCochain {
            nerve_size,
            entries: ordered_pairs(nerve_size)
                .map(|p| (p, Expr::zero()))
                .collect(),
        }
    }

    pub fn entry(&self, j: usize, k: usize) -> Result<&Expr, CechError> {
        self.entries
            .get(&(j, k))
            .ok_or(CechError::MissingEntry(j, k))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(Expr::is_zero)
    }

    pub fn neg(&self) -> Self {
        ConormalCochain {
            nerve_size: self.nerve_size,
            entries: self.entries.iter().map(|(p, c)| (*p, -c)).collect(),
        }
    }

    /// `c_kj a_jk + c_jk`: the (k,j) entry moved into the `dtheta_j` frame
    /// must be the negative of the (j,k) entry.
    pub fn reversal_residual(&self, j: usize, k: usize) -> Result<Expr, CechError> {
        Ok(self.entry(k, j)? * expr::a(j, k) + self.entry(j, k)?)
    }
}

impl Add for &ConormalCochain {
    type Output = ConormalCochain;
    fn add(self, rhs: &ConormalCochain) -> ConormalCochain {
        let mut entries = self.entries.clone();
        for (p, c) in &rhs.entries {
            let slot = entries.entry(*p).or_insert_with(Expr::zero);
            *slot = &*slot + c;
        }
        ConormalCochain {
            nerve_size: self.nerve_size.max(rhs.nerve_size),
            entries,
        }
    }
}

impl Add for &FCochain {
    type Output = FCochain;
    fn add(self, rhs: &FCochain) -> FCochain {
        let mut entries = self.entries.clone();
        for (p, c) in &rhs.entries {
            let slot = entries.entry(*p).or_insert_with(Expr::zero);
            *slot = &*slot + c;
        }
        FCochain {
            nerve_size: self.nerve_size.max(rhs.nerve_size),
            entries,
        }
    }
}

impl ZeroCochain {
    /// Formal unknowns `phi_1, ..., phi_n`.
    pub fn formal(n: usize) -> Self {
        ZeroCochain {
            entries: (1..=n).map(|j| (j, expr::phi(j))).collect(),
        }
    }

    pub fn constant(n: usize, value: Expr) -> Self {
        ZeroCochain {
            entries: (1..=n).map(|j| (j, value.clone())).collect(),
        }
    }

    pub fn nerve_size(&self) -> usize {
        self.entries.len()
    }
}

impl FCochain {
    pub fn entry(&self, j: usize, k: usize) -> Result<&Expr, CechError> {
        self.entries
            .get(&(j, k))
            .ok_or(CechError::MissingEntry(j, k))
    }

    /// `delta{(U_j, g_j m_j)}_jk = g_k m_k - g_j m_j`, written against `m_j`.
    pub fn coboundary(g: &ZeroCochain) -> FCochain {
        let n = g.nerve_size();
        FCochain {
            nerve_size: n,
            entries: ordered_pairs(n)
                .map(|(j, k)| {
                    let value = &g.entries[&k] * f_frame_transport(j, k) - &g.entries[&j];
                    ((j, k), value)
                })
                .collect(),
        }
    }

    pub fn reversal_residual(&self, j: usize, k: usize) -> Result<Expr, CechError> {
        Ok(self.entry(k, j)? * f_frame_transport(j, k) + self.entry(j, k)?)
    }
}

/// First-order coefficients of a cochain whose restriction to `Y` is
/// identically `1`.
pub fn extract_u1(b: &LineBundleCochain) -> Result<ConormalCochain, CechError> {
    let flat = b.restrict_to_y();
    if !flat.is_trivial() {
        return Err(CechError::NotNormalized(flat.nontrivial_pairs()));
    }
    Ok(ConormalCochain {
        nerve_size: b.model.nerve.size(),
        entries: b
            .transitions()
            .iter()
            .map(|(&pair, g)| (pair, g.coeffs()[1].clone()))
            .collect(),
    })
}

/// `c_jk + a_jk c_kl - c_jl` in the `dtheta_j` frame, for `j < k < l`.
pub fn cocycle_residual(
    c: &ConormalCochain,
    triple: (usize, usize, usize),
) -> Result<Expr, CechError> {
    let (j, k, l) = triple;
    if !(1 <= j && j < k && k < l && l <= c.nerve_size) {
        return Err(CechError::NotATriple(j, k, l));
    }
    Ok(c.entry(j, k)? + expr::a(j, k) * c.entry(k, l)? - c.entry(j, l)?)
}

/// `(delta phi)_jk = phi_k a_jk - phi_j` in the `dtheta_j` frame.
pub fn coboundary(phi: &ZeroCochain) -> ConormalCochain {
    let n = phi.nerve_size();
    ConormalCochain {
        nerve_size: n,
        entries: ordered_pairs(n)
            .map(|(j, k)| ((j, k), &phi.entries[&k] * expr::a(j, k) - &phi.entries[&j]))
            .collect(),
    }
}

/// Relabels `dtheta_j -> m_j`.
pub fn to_f_frame(c: &ConormalCochain) -> FCochain {
    FCochain {
        nerve_size: c.nerve_size,
        entries: c.entries.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairEquation {
    pub pair: (usize, usize),
    /// `(delta phi)_jk - c_jk` after normalization.
    pub equation: Expr,
    /// The expected system entry, built independently by the parser.
    pub expected: Expr,
    pub matches: bool,
}

/// Outcome of reducing `u_1 = 0` to the vanishing of `[xi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionReport {
    pub nerve_size: usize,
    pub degenerate: bool,
    pub equations: Vec<PairEquation>,
    /// `dtheta`- and `m`-frame transports agree on every pair.
    pub transport_consistent: bool,
    /// Relabelled `delta phi` equals `delta{(U_j, phi_j m_j)}` entrywise and
    /// the relabelled cochain is `-xi_jk m_j`.
    pub f_frame_matches: bool,
    /// With `phi = 0` the coboundary already equals the input (degenerate
    /// case only).
    pub trivially_exact: bool,
    pub equivalence_verified: bool,
    pub hypothesis: String,
    pub conclusion: String,
}

/// Checks that `coboundary(phi) = c` is exactly the system
/// `phi_k a_jk - phi_j = -xi_jk` and that transporting to the frames of `F`
/// turns it into `delta{(U_j, g_j m_j)} = {(U_jk, -xi_jk m_j)}`.
pub fn reduce_to_base_class(
    model: &GrauertModel,
    c: &ConormalCochain,
) -> Result<ReductionReport, CechError> {
    let n = c.nerve_size;
    let degenerate = c.is_zero();
    for (j, k) in ordered_pairs(n) {
        let entry = c.entry(j, k)?;
        if !degenerate && *entry != -expr::xi(j, k) {
            return Err(CechError::ShapeMismatch(j, k, entry.to_string()));
        }
    }

    let phi = ZeroCochain::formal(n);
    let delta = coboundary(&phi);
    let mut equations = Vec::new();
    for (j, k) in ordered_pairs(n) {
        let equation = delta.entry(j, k)? - c.entry(j, k)?;
        let text = if degenerate {
            format!("phi({k})*a({j},{k}) - phi({j})")
        } else {
            format!("phi({k})*a({j},{k}) - phi({j}) + xi({j},{k})")
        };
        let expected = parse_expr(&text, n)?;
        let matches = equation == expected;
        equations.push(PairEquation {
            pair: (j, k),
            equation,
            expected,
            matches,
        });
    }

    let mut transport_consistent = true;
    for (j, k) in ordered_pairs(n) {
        transport_consistent &= conormal_transport(model, j, k)? == f_frame_transport(j, k);
    }

    let f_delta = FCochain::coboundary(&phi);
    let f_c = to_f_frame(c);
    let mut f_frame_matches = to_f_frame(&delta) == f_delta;
    for (j, k) in ordered_pairs(n) {
        let target = if degenerate {
            Expr::zero()
        } else {
            -expr::xi(j, k)
        };
        f_frame_matches &= *f_c.entry(j, k)? == target;
    }

    let trivially_exact = degenerate && coboundary(&ZeroCochain::constant(n, Expr::zero())) == *c;
    let equivalence_verified = equations.iter().all(|e| e.matches)
        && transport_consistent
        && f_frame_matches
        && (!degenerate || trivially_exact);

    let (hypothesis, conclusion) = if degenerate {
        (
            "none".to_string(),
            "cochain is the coboundary of phi = 0; its class is zero".to_string(),
        )
    } else {
        (
            "[xi] != 0 in H^1(R, O(F))".to_string(),
            "u1 = 0 iff -[xi] = 0 in H^1(R, O(F)); with [xi] != 0 this gives u1 != 0".to_string(),
        )
    };

    Ok(ReductionReport {
        nerve_size: n,
        degenerate,
        equations,
        transport_consistent,
        f_frame_matches,
        trivially_exact,
        equivalence_verified,
        hypothesis,
        conclusion,
    })
}

fn coefficient(c: &Expr) -> String {
    if c.terms().count() > 1 {
        format!("({c})")
    } else {
        c.to_string()
    }
}

impl fmt::Display for ConormalCochain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((j, k), c) in &self.entries {
            writeln!(f, "({j},{k}): {} d_theta_{j}", coefficient(c))?;
        }
        Ok(())
    }
}

impl fmt::Display for FCochain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((j, k), c) in &self.entries {
            writeln!(f, "({j},{k}): {} m_{j}", coefficient(c))?;
        }
        Ok(())
    }
}
