//! Numeric cross-validation of the symbolic layer.
//!
//! Free generators are instantiated as polynomials in a global base
//! coordinate `x`; derived transition data `a_jk(x)`, `xi_jk(x)` are then
//! obtained by composing the affine chain maps `eta_i = A_i eta_{i+1} + Xi_i`
//! numerically, never through the symbolic rewrite rules. Every check
//! compares a symbolic jet or cochain against closed-form complex arithmetic
//! at sampled points.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cech::{self, CechError};
use crate::expr::{self, parse_expr, Expr, ExprError, Gen};
use crate::grauert::{GrauertModel, ModelError};
use crate::jet::Jet;

/// Residuals of exact identities evaluated in floating point.
pub const EXACT_TOL: f64 = 1e-10;
/// Residuals that include series truncation or finite-difference error.
pub const TRUNCATION_TOL: f64 = 1e-6;
/// Agreement of the two routes to derived transition data.
pub const RELATION_TOL: f64 = 1e-12;
/// Sample points where some `|a_jk(x)|` falls below this are redrawn.
pub const POLE_GUARD: f64 = 1e-6;
/// Step of the central divided differences.
pub const DIFF_STEP: f64 = 1e-4;
/// Fibre coordinates at which truncated series are compared.
pub const THETA_SAMPLES: [f64; 2] = [1e-2, 1e-3];

/// Sample points for comparing an order-`order` jet: `THETA_SAMPLES`,
/// shrunk below order 3 so that `theta^(order+1)` stays near `1e-8`.
pub fn theta_samples(order: usize) -> [f64; 2] {
    if order >= 3 {
        return THETA_SAMPLES;
    }
    let cap = 10f64.powf(-8.0 / (order + 1) as f64);
    THETA_SAMPLES.map(|t| t.min(cap))
}

const MAX_REDRAWS_PER_SAMPLE: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("assignment is missing free generator {0}")]
    MissingGenerator(Gen),
    #[error("{0} is not a free generator of this nerve")]
    UnknownGenerator(String),
    #[error("value of {gen} may only involve x and rationals, found {found}")]
    NotABaseFunction { gen: Gen, found: String },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("could not find a sample point away from the poles after {0} draws")]
    ResamplingExhausted(usize),
    #[error("invalid oracle configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cech(#[from] CechError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualStats {
    pub fn from_residuals(residuals: impl IntoIterator<Item = f64>, tolerance: f64) -> Self {
        let mut max = 0.0f64;
        let mut sum = 0.0;
        let mut count = 0;
        let mut nan = false;
        for r in residuals {
            nan |= r.is_nan();
            max = max.max(r);
            sum += r;
            count += 1;
        }
        let mean = if count == 0 { 0.0 } else { sum / count as f64 };
        ResidualStats {
            max,
            mean,
            count,
            tolerance,
            pass: !nan && max < tolerance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NumericModel {
    pub model: GrauertModel,
    pub assignment: BTreeMap<Gen, Expr>,
    pub samples: Vec<Complex64>,
    /// Number of sample draws rejected by the pole guard.
    pub redraws: usize,
    xi_overrides: BTreeMap<(usize, usize), Complex64>,
}

/// `A_i = i + 1`, `Xi_i = (-1)^(i+1) / (i + 1)`; on three charts this is
/// `{A_1 = 2, A_2 = 3, Xi_1 = 1/2, Xi_2 = -1/3}`.
pub fn constants_instance(n: usize) -> BTreeMap<Gen, Expr> {
    let mut gens = BTreeMap::new();
    for i in 1..n {
        let i64_i = i as i64;
        gens.insert(Gen::A(i), Expr::int(i64_i + 1));
        let sign = if i % 2 == 1 { 1 } else { -1 };
        gens.insert(Gen::Xi(i), Expr::rational(sign, i64_i + 1));
    }
    gens
}

/// `A_i = 1`, `Xi_i = 0`: every transition is the identity.
pub fn trivial_instance(n: usize) -> BTreeMap<Gen, Expr> {
    let mut gens = BTreeMap::new();
    for i in 1..n {
        gens.insert(Gen::A(i), Expr::one());
        gens.insert(Gen::Xi(i), Expr::zero());
    }
    gens
}

pub fn instantiate(
    model: &GrauertModel,
    gens: &BTreeMap<Gen, Expr>,
    samples: usize,
    seed: u64,
) -> Result<NumericModel, OracleError> {
    let free: BTreeSet<Gen> = model.nerve.free_generators().into_iter().collect();
    for g in &free {
        if !gens.contains_key(g) {
            return Err(OracleError::MissingGenerator(*g));
        }
    }
    for (g, value) in gens {
        if !free.contains(g) {
            return Err(OracleError::UnknownGenerator(g.to_string()));
        }
        if value.generators().iter().any(|h| *h != Gen::X) {
            return Err(OracleError::NotABaseFunction {
                gen: *g,
                found: value.to_string(),
            });
        }
    }
    if samples == 0 {
        return Err(OracleError::NoSamples);
    }

    let mut nm = NumericModel {
        model: *model,
        assignment: gens.clone(),
        samples: Vec::with_capacity(samples),
        redraws: 0,
        xi_overrides: BTreeMap::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while nm.samples.len() < samples {
        let mut accepted = None;
        for _ in 0..MAX_REDRAWS_PER_SAMPLE {
            let radius = rng.gen::<f64>().sqrt();
            let angle = 2.0 * PI * rng.gen::<f64>();
            let x = Complex64::from_polar(radius, angle);
            if nm.away_from_poles(x)? {
                accepted = Some(x);
                break;
            }
            nm.redraws += 1;
        }
        match accepted {
            Some(x) => nm.samples.push(x),
            None => return Err(OracleError::ResamplingExhausted(MAX_REDRAWS_PER_SAMPLE)),
        }
    }
    Ok(nm)
}

impl NumericModel {
    fn away_from_poles(&self, x: Complex64) -> Result<bool, OracleError> {
        let env = self.env(x)?;
        Ok((1..self.model.nerve.size()).all(|i| env[&Gen::A(i)].norm() >= POLE_GUARD))
    }

    /// Values of the free generators at `x`.
    pub fn env(&self, x: Complex64) -> Result<BTreeMap<Gen, Complex64>, OracleError> {
        let empty = BTreeMap::new();
        self.assignment
            .iter()
            .map(|(g, e)| Ok((*g, e.evaluate(&empty, x)?)))
            .collect()
    }

    /// `(a_jk(x), xi_jk(x))` by composing consecutive affine gluings.
    pub fn affine(
        &self,
        j: usize,
        k: usize,
        x: Complex64,
    ) -> Result<(Complex64, Complex64), OracleError> {
        let env = self.env(x)?;
        let (lo, hi) = (j.min(k), j.max(k));
        let mut a = Complex64::new(1.0, 0.0);
        let mut xi = Complex64::new(0.0, 0.0);
        for i in lo..hi {
            xi += a * env[&Gen::Xi(i)];
            a *= env[&Gen::A(i)];
        }
        if j > k {
            // eta_k = a eta_j + xi  =>  eta_j = eta_k / a - xi / a
            xi = -xi / a;
            a = a.inv();
        }
        if let Some(dx) = self.xi_overrides.get(&(j, k)) {
            xi += dx;
        }
        Ok((a, xi))
    }

    /// Shifts the numeric `xi_jk` of one ordered pair by `delta`, leaving the
    /// symbolic side untouched.
    pub fn perturb_xi(mut self, j: usize, k: usize, delta: Complex64) -> Self {
        self.xi_overrides.insert((j, k), delta);
        self
    }
}

fn eval_jet(
    jet: &Jet,
    env: &BTreeMap<Gen, Complex64>,
    x: Complex64,
    t: Complex64,
) -> Result<Complex64, ExprError> {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in jet.coeffs().iter().rev() {
        acc = acc * t + c.evaluate(env, x)?;
    }
    Ok(acc)
}

/// Compares a candidate jet for `theta_j(theta_k)` against the closed form
/// `theta_k / (a_jk + xi_jk theta_k)`.
pub fn check_transition_jet(
    nm: &NumericModel,
    j: usize,
    k: usize,
    jet: &Jet,
    tol: f64,
) -> Result<ResidualStats, OracleError> {
    let mut residuals = Vec::new();
    for &x in &nm.samples {
        let env = nm.env(x)?;
        let (a, xi) = nm.affine(j, k, x)?;
        for theta in theta_samples(jet.order()) {
            let t = Complex64::new(theta, 0.0);
            let closed = t / (a + xi * t);
            residuals.push((eval_jet(jet, &env, x, t)? - closed).norm());
        }
    }
    Ok(ResidualStats::from_residuals(residuals, tol))
}

/// Theta transitions, their series inverses and the round trip through the
/// closed forms, for every ordered pair.
pub fn check_transitions(nm: &NumericModel, tol: f64) -> Result<ResidualStats, OracleError> {
    let mut residuals = Vec::new();
    for (j, k) in nm.model.nerve.pairs() {
        let forward = nm.model.theta_transition(j, k)?;
        let backward = forward.invert_series(j).map_err(ModelError::from)?;
        residuals.push(check_transition_jet(nm, j, k, &forward, tol)?.max);
        for &x in &nm.samples {
            let env = nm.env(x)?;
            let (a, xi) = nm.affine(j, k, x)?;
            for theta in theta_samples(backward.order()) {
                let t = Complex64::new(theta, 0.0);
                let theta_k = eval_jet(&backward, &env, x, t)?;
                residuals.push((theta_k - a * t / (1.0 - xi * t)).norm());
                let back = theta_k / (a + xi * theta_k);
                residuals.push((back - t).norm());
            }
        }
    }
    Ok(ResidualStats::from_residuals(residuals, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U1Stats {
    /// Central difference of `e_k/e_j` at `theta_j = 0` against the
    /// symbolic first-order coefficient.
    pub derivative: ResidualStats,
    /// Second differences `(g(h) - 2 g(0) + g(-h)) / h^2`.
    pub linearity: ResidualStats,
}

/// `e_k / e_j = a_jk / (a_jk + xi_jk theta_k(theta_j))` in closed form.
fn l_transition(a: Complex64, xi: Complex64, theta_j: f64) -> Complex64 {
    let t = Complex64::new(theta_j, 0.0);
    let theta_k = a * t / (1.0 - xi * t);
    a / (a + xi * theta_k)
}

pub fn check_u1_numeric(nm: &NumericModel, tol: f64) -> Result<U1Stats, OracleError> {
    let u1 = cech::extract_u1(&nm.model.bundle_l()?)?;
    let h = DIFF_STEP;
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (j, k) in nm.model.nerve.pairs() {
        for &x in &nm.samples {
            let env = nm.env(x)?;
            let (a, xi) = nm.affine(j, k, x)?;
            let (plus, zero, minus) = (
                l_transition(a, xi, h),
                l_transition(a, xi, 0.0),
                l_transition(a, xi, -h),
            );
            let derivative = (plus - minus) / (2.0 * h);
            let symbolic = u1.entry(j, k)?.evaluate(&env, x)?;
            first.push((derivative - symbolic).norm());
            second.push(((plus - 2.0 * zero + minus) / (h * h)).norm());
        }
    }
    Ok(U1Stats {
        derivative: ResidualStats::from_residuals(first, tol),
        linearity: ResidualStats::from_residuals(second, tol),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CocycleStats {
    /// `g_jk g_kl g_lj - 1` of the closed-form `L` transitions.
    pub bundle: ResidualStats,
    /// `c_jk + a_jk c_kl - c_jl` with `c = -xi`.
    pub conormal: ResidualStats,
}

pub fn check_cocycles_numeric(nm: &NumericModel, tol: f64) -> Result<CocycleStats, OracleError> {
    let mut bundle = Vec::new();
    let mut conormal = Vec::new();
    for (j, k, l) in nm.model.nerve.ordered_triples() {
        for &x in &nm.samples {
            let (a_jk, xi_jk) = nm.affine(j, k, x)?;
            let (a_kl, xi_kl) = nm.affine(k, l, x)?;
            let (a_jl, xi_jl) = nm.affine(j, l, x)?;
            let (a_lj, xi_lj) = nm.affine(l, j, x)?;
            for &theta in &THETA_SAMPLES {
                let t = Complex64::new(theta, 0.0);
                let theta_k = a_jk * t / (1.0 - xi_jk * t);
                let theta_l = a_jl * t / (1.0 - xi_jl * t);
                let g_jk = a_jk / (a_jk + xi_jk * theta_k);
                let g_kl = a_kl / (a_kl + xi_kl * theta_l);
                let g_lj = a_lj / (a_lj + xi_lj * t);
                bundle.push((g_jk * g_kl * g_lj - 1.0).norm());
            }
            if j < k && k < l {
                conormal.push((-xi_jk + a_jk * -xi_kl + xi_jl).norm());
            }
        }
    }
    Ok(CocycleStats {
        bundle: ResidualStats::from_residuals(bundle, tol),
        conormal: ResidualStats::from_residuals(conormal, tol),
    })
}

/// Agreement between the numeric affine composition and the evaluated
/// symbolic normal forms of `a_jk`, `xi_jk`, relative to `max(1, |value|)`.
pub fn check_relations(nm: &NumericModel, tol: f64) -> Result<ResidualStats, OracleError> {
    let mut residuals = Vec::new();
    for (j, k) in nm.model.nerve.pairs() {
        let (sa, sxi) = (expr::a(j, k), expr::xi(j, k));
        for &x in &nm.samples {
            let env = nm.env(x)?;
            let (a, xi) = nm.affine(j, k, x)?;
            for (numeric, symbolic) in [(a, &sa), (xi, &sxi)] {
                let s = symbolic.evaluate(&env, x)?;
                residuals.push((numeric - s).norm() / s.norm().max(1.0));
            }
        }
    }
    Ok(ResidualStats::from_residuals(residuals, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub transitions: ResidualStats,
    pub u1: U1Stats,
    pub cocycles: CocycleStats,
    pub relations: ResidualStats,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.transitions.pass
            && self.u1.derivative.pass
            && self.u1.linearity.pass
            && self.cocycles.bundle.pass
            && self.cocycles.conormal.pass
            && self.relations.pass
    }
}

/// Runs every check, with `truncation_tol` for the series and
/// finite-difference families and the fixed tiers elsewhere.
pub fn run_all(nm: &NumericModel, truncation_tol: f64) -> Result<OracleReport, OracleError> {
    Ok(OracleReport {
        transitions: check_transitions(nm, truncation_tol)?,
        u1: check_u1_numeric(nm, truncation_tol)?,
        cocycles: check_cocycles_numeric(nm, EXACT_TOL)?,
        relations: check_relations(nm, RELATION_TOL)?,
    })
}

fn default_samples() -> usize {
    10
}

fn default_tolerance() -> f64 {
    TRUNCATION_TOL
}

/// JSON oracle configuration:
/// `{ "generators": { "a(1,2)": "2", "xi(1,2)": "1/2 + x" }, "samples": 10, "seed": 0, "tolerance": 1e-6 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub generators: BTreeMap<String, String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl OracleConfig {
    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        serde_json::from_str(text).map_err(|e| OracleError::Config(e.to_string()))
    }

    /// Parses keys as free generators and values as polynomials in `x`.
    pub fn assignment(&self, nerve_size: usize) -> Result<BTreeMap<Gen, Expr>, OracleError> {
        let mut out = BTreeMap::new();
        for (key, value) in &self.generators {
            let parsed = parse_expr(key, nerve_size)?;
            let gen = match parsed
                .generators()
                .into_iter()
                .collect::<Vec<_>>()
                .as_slice()
            {
                [g @ (Gen::A(_) | Gen::Xi(_))] if parsed == Expr::gen(*g) => *g,
                _ => return Err(OracleError::UnknownGenerator(key.clone())),
            };
            out.insert(gen, parse_expr(value, nerve_size)?);
        }
        Ok(out)
    }
}
