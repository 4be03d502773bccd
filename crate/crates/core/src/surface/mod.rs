//! Numerical geometry of the ruled surface and the base curve.
//!
//! The Néron–Severi lattice is spanned by the section at infinity `Y` and a
//! fibre `f`, with `Y.Y = -d`, `Y.f = 1`, `f.f = 0` for `d = deg F`.

mod certificate;
mod rules;

pub use certificate::{
    assemble_certificate, render_markdown, run_verification, Bundles, CertStep, Certificate,
    OracleSetup, Status, SubReports, VerifyParams, CITED_FAMILIES, VERDICT,
};
pub use rules::{implication_path, implication_rules, ImplicationRule, Property};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurfaceError {
    #[error("genus {0} < 2: h^0 - h^1 = {1} > 0, so h^1 >= h^0 cannot be derived")]
    GenusTooSmall(i64, i64),
    #[error("deg F must be positive for the nef/big argument, got {0}")]
    NonPositiveDegree(i64),
}

/// `alpha [Y] + beta [f]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NSClass {
    pub alpha: i64,
    pub beta: i64,
}

impl NSClass {
    pub const fn new(alpha: i64, beta: i64) -> Self {
        NSClass { alpha, beta }
    }

    pub const fn section() -> Self {
        NSClass::new(1, 0)
    }

    pub const fn fiber() -> Self {
        NSClass::new(0, 1)
    }
}

/// Intersection form with Gram matrix `[[-d, 1], [1, 0]]`.
pub fn intersect(c1: NSClass, c2: NSClass, d: i64) -> i64 {
    -d * c1.alpha * c2.alpha + c1.alpha * c2.beta + c1.beta * c2.alpha
}

/// `L = p*F (x) [Y]`, numerically `Y + d f`.
pub fn class_l(d: i64) -> NSClass {
    NSClass::new(1, d)
}

/// Riemann–Roch on a genus-`g` curve: `h^0 - h^1 = d - g + 1`.
pub fn euler_char(g: i64, d: i64) -> i64 {
    d - g + 1
}

/// The argument that a degree-one point bundle `F = O([p])` has
/// `h^1(F) > 0`: a cited premise `h^0 >= 1` followed by the arithmetic
/// `h^1 = h^0 - chi >= h^0 >= 1`.
pub fn riemann_roch_steps(genus: i64) -> Vec<CertStep> {
    let premise = CertStep::cited(
        "rr.sections-nonzero",
        "h^0(R, O([p])) >= 1: the constant functions are sections of O([p])",
        "effective-divisors: div(c) + p >= 0 for every constant c since p is effective",
        json!({ "h0_lower_bound": 1 }),
    );
    let chi = euler_char(genus, 1);
    let arithmetic = match check_h1_chain(genus) {
        Ok(h1_excess) => CertStep::new(
            "rr.h1-nonvanishing",
            "h^0 - h^1 = 1 - g + deg F = 2 - g <= 0, hence h^1 >= h^0 >= 1 and H^1(R, O(F)) != 0",
            Status::VerifiedSymbolic,
            json!({
                "genus": genus,
                "deg_f": 1,
                "chi": chi,
                "h1_minus_h0_at_least": h1_excess,
                "h1_at_least": 1 + h1_excess,
            }),
        ),
        Err(e) => CertStep::new(
            "rr.h1-nonvanishing",
            "h^0 - h^1 = 2 - g must be <= 0 to force H^1(R, O(F)) != 0",
            Status::Failed,
            json!({ "genus": genus, "deg_f": 1, "chi": chi, "error": e.to_string() }),
        ),
    };
    vec![premise, arithmetic]
}

/// `h^1 - h^0 = g - 2` when it is non-negative.
pub fn check_h1_chain(genus: i64) -> Result<i64, SurfaceError> {
    let chi = euler_char(genus, 1);
    if chi > 0 {
        return Err(SurfaceError::GenusTooSmall(genus, chi));
    }
    Ok(-chi)
}

/// Nefness by the case split over curves `Gamma` and bigness from `L^2 > 0`.
pub fn nef_big_steps(d: i64) -> Result<Vec<CertStep>, SurfaceError> {
    if d < 1 {
        return Err(SurfaceError::NonPositiveDegree(d));
    }
    let l = class_l(d);
    let l_dot_y = intersect(l, NSClass::section(), d);
    let l_dot_f = intersect(l, NSClass::fiber(), d);
    let l_sq = intersect(l, l, d);
    let y_sq = intersect(NSClass::section(), NSClass::section(), d);
    let path = implication_path(Property::Positive, Property::Nef).unwrap_or_default();

    let mut steps = vec![
        CertStep::new(
            "nef.section-self-intersection",
            "Y.Y = deg N_{Y/X} = deg F^{-1} = -d",
            status_if(y_sq == -d, Status::VerifiedNumeric),
            json!({ "Y.Y": y_sq, "deg_f": d }),
        ),
        CertStep::new(
            "nef.L-dot-Y",
            "Gamma = Y: L.Y = deg F - deg F = 0",
            status_if(l_dot_y == 0, Status::VerifiedNumeric),
            json!({ "L.Y": l_dot_y }),
        ),
        CertStep::new(
            "nef.L-dot-fiber",
            "L.f = Y.f + d f.f = 1 > 0",
            status_if(l_dot_f == 1, Status::VerifiedNumeric),
            json!({ "L.f": l_dot_f }),
        ),
        CertStep::cited(
            "nef.F-positive",
            "deg F > 0 on a curve implies F is positive",
            "positivity-implications: a line bundle of positive degree on a compact Riemann surface is positive (Griffiths-Harris, p. 148)",
            json!({ "deg_f": d }),
        ),
        CertStep::cited(
            "nef.pullback-nef",
            "p*F is semipositive, hence nef, so p*F.Gamma >= 0 for every curve Gamma",
            "positivity-implications: rule (2) positive => semipositive (definition); rule (3) semipositive => nef (Demailly, Prop. 6.10)",
            json!({ "rule_path": path }),
        ),
        CertStep::cited(
            "nef.effective-intersection",
            "[Y].Gamma > 0 if Gamma != Y meets Y, and [Y].Gamma = 0 if Gamma and Y are disjoint",
            "effective-divisors: distinct irreducible curves intersect non-negatively, positively when they meet",
            json!({}),
        ),
        CertStep::new(
            "nef.conclusion",
            "L.Gamma >= 0 for Gamma = Y, for Gamma != Y meeting Y, and for Gamma disjoint from Y; L is nef",
            Status::VerifiedSymbolic,
            json!({
                "cases": [
                    { "case": "Gamma = Y", "L.Gamma": l_dot_y },
                    { "case": "Gamma != Y, Gamma meets Y", "L.Gamma": "p*F.Gamma + [Y].Gamma > 0" },
                    { "case": "Gamma disjoint from Y", "L.Gamma": "p*F.Gamma >= 0" },
                ],
                "depends_on": ["nef.L-dot-Y", "nef.pullback-nef", "nef.effective-intersection"],
            }),
        ),
        CertStep::new(
            "big.self-intersection",
            "L^2 = (p*F)^2 + 2 p*F.Y + Y^2 = 0 + 2d - d = d > 0",
            status_if(l_sq == d && l_sq > 0, Status::VerifiedNumeric),
            json!({ "L.L": l_sq, "p*F.p*F": intersect(NSClass::new(0, d), NSClass::new(0, d), d) }),
        ),
        CertStep::cited(
            "big.criterion",
            "a nef line bundle with positive self-intersection is big",
            "positivity-implications: nef with L^2 > 0 implies big (Demailly, Cor. 8.4)",
            json!({}),
        ),
    ];
    if steps.iter().any(|s| s.status == Status::Failed) {
        steps.push(CertStep::new(
            "nef.lattice",
            "lattice arithmetic disagrees with the expected intersection numbers",
            Status::Failed,
            json!({}),
        ));
    }
    Ok(steps)
}

fn status_if(ok: bool, status: Status) -> Status {
    if ok {
        status
    } else {
        Status::Failed
    }
}
