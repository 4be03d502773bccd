//! Assembly of the verification certificate.
//!
//! Steps are emitted in a fixed order and never reordered, so identical
//! inputs give byte-identical JSON and markdown.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cech::{self, ConormalCochain, ReductionReport};
use crate::expr::{self, Expr, Gen};
use crate::grauert::{self, GrauertModel, LineBundleCochain, ModelError};
use crate::oracle::{self, OracleReport, ResidualStats};

use super::{nef_big_steps, riemann_roch_steps};

pub const VERDICT: &str = "nef, big, not semipositive";

/// Citation families of the imported results; every cited-rule citation
/// starts with one of these followed by `:`.
pub const CITED_FAMILIES: [&str; 3] = [
    "obstruction-criterion",
    "positivity-implications",
    "effective-divisors",
];

/// Ordered weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Failed,
    AssumedHypothesis,
    CitedRule,
    VerifiedNumeric,
    VerifiedSymbolic,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Failed => "failed",
            Status::AssumedHypothesis => "assumed-hypothesis",
            Status::CitedRule => "cited-rule",
            Status::VerifiedNumeric => "verified-numeric",
            Status::VerifiedSymbolic => "verified-symbolic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertStep {
    pub id: String,
    pub statement: String,
    pub status: Status,
    pub payload: Value,
    pub citation: Option<String>,
}

impl CertStep {
    pub fn new(id: &str, statement: &str, status: Status, payload: Value) -> Self {
        CertStep {
            id: id.to_string(),
            statement: statement.to_string(),
            status,
            payload,
            citation: None,
        }
    }

    pub fn cited(id: &str, statement: &str, citation: &str, payload: Value) -> Self {
        CertStep {
            citation: Some(citation.to_string()),
            ..CertStep::new(id, statement, Status::CitedRule, payload)
        }
    }

    fn verified_if(id: &str, statement: &str, ok: bool, payload: Value) -> Self {
        let status = if ok {
            Status::VerifiedSymbolic
        } else {
            Status::Failed
        };
        CertStep::new(id, statement, status, payload)
    }

    /// The family tag of a cited-rule citation.
    pub fn citation_family(&self) -> Option<&str> {
        self.citation.as_deref()?.split(':').next()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: String,
    pub status: Status,
    pub steps: Vec<CertStep>,
}

impl Certificate {
    fn from_steps(steps: Vec<CertStep>) -> Self {
        let (verdict, status) = match steps.iter().find(|s| s.status == Status::Failed) {
            Some(failed) => (
                format!("verification failed at step {}", failed.id),
                Status::Failed,
            ),
            None => (
                VERDICT.to_string(),
                steps
                    .iter()
                    .map(|s| s.status)
                    .min()
                    .unwrap_or(Status::VerifiedSymbolic),
            ),
        };
        Certificate {
            verdict,
            status,
            steps,
        }
    }

    pub fn is_success(&self) -> bool {
        self.status != Status::Failed
    }

    pub fn first_failure(&self) -> Option<&CertStep> {
        self.steps.iter().find(|s| s.status == Status::Failed)
    }

    pub fn step(&self, id: &str) -> Option<&CertStep> {
        self.steps.iter().find(|s| s.id == id)
    }

    pub fn count(&self, status: Status) -> usize {
        self.steps.iter().filter(|s| s.status == status).count()
    }

    /// Distinct citation families of the cited-rule steps, in order of
    /// first appearance.
    pub fn cited_families(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in self.steps.iter().filter(|s| s.status == Status::CitedRule) {
            if let Some(f) = s.citation_family() {
                if !out.iter().any(|o| o == f) {
                    out.push(f.to_string());
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("certificate serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyParams {
    pub charts: usize,
    pub genus: i64,
    pub deg_f: i64,
    pub order: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            charts: 3,
            genus: 2,
            deg_f: 1,
            order: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSetup {
    pub generators: BTreeMap<Gen, Expr>,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl OracleSetup {
    pub fn constants(n: usize, seed: u64) -> Self {
        OracleSetup {
            generators: oracle::constants_instance(n),
            samples: 10,
            seed,
            tolerance: oracle::TRUNCATION_TOL,
        }
    }
}

/// The three bundles whose transitions enter the certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundles {
    pub pullback_f: LineBundleCochain,
    pub divisor_y: LineBundleCochain,
    pub l: LineBundleCochain,
}

impl Bundles {
    pub fn from_model(model: &GrauertModel) -> Result<Self, ModelError> {
        Ok(Bundles {
            pullback_f: model.bundle_pullback_f()?,
            divisor_y: model.bundle_divisor_y()?,
            l: model.bundle_l()?,
        })
    }
}

/// Raw outcomes of every sub-check, before they become certificate steps.
#[derive(Debug, Clone)]
pub struct SubReports {
    pub riemann_roch: Vec<CertStep>,
    /// `(bundle, check, residual)` for each nonzero residual jet.
    pub bundle_failures: Vec<(String, String, String)>,
    pub bundle_checks: usize,
    pub frame_failures: Vec<String>,
    pub restriction_trivial: bool,
    pub restriction_cocycle: bool,
    pub u1: Result<ConormalCochain, String>,
    pub u1_shape_ok: bool,
    pub u1_residual_failures: Vec<String>,
    pub reduction: Result<ReductionReport, String>,
    pub oracle: Option<(OracleSetup, Result<OracleReport, String>)>,
    pub nef_big: Result<Vec<CertStep>, String>,
}

impl SubReports {
    pub fn collect(
        model: &GrauertModel,
        bundles: &Bundles,
        oracle_setup: Option<&OracleSetup>,
    ) -> Self {
        let mut bundle_failures = Vec::new();
        let mut bundle_checks = 0;
        for b in [&bundles.pullback_f, &bundles.divisor_y, &bundles.l] {
            for (j, k, l) in model.nerve.ordered_triples() {
                bundle_checks += 1;
                let label = format!("triple ({j},{k},{l})");
                match b.cocycle_residual(j, k, l) {
                    Ok(r) if r.is_zero() => {}
                    Ok(r) => bundle_failures.push((b.name.clone(), label, r.to_string())),
                    Err(e) => bundle_failures.push((b.name.clone(), label, e.to_string())),
                }
            }
            for (j, k) in model.nerve.pairs() {
                bundle_checks += 1;
                let label = format!("pair ({j},{k})");
                match b.compatibility_residual(j, k) {
                    Ok(r) if r.is_zero() => {}
                    Ok(r) => bundle_failures.push((b.name.clone(), label, r.to_string())),
                    Err(e) => bundle_failures.push((b.name.clone(), label, e.to_string())),
                }
            }
        }

        let frame_failures = frame_consistency_failures(model);

        let flat = bundles.l.restrict_to_y();
        let u1 = cech::extract_u1(&bundles.l).map_err(|e| e.to_string());
        let (u1_shape_ok, u1_residual_failures) = match &u1 {
            Ok(c) => {
                let shape = model
                    .nerve
                    .pairs()
                    .iter()
                    .all(|&(j, k)| c.entry(j, k).is_ok_and(|e| *e == -expr::xi(j, k)));
                let failures = model
                    .nerve
                    .triples()
                    .into_iter()
                    .filter_map(|t| match cech::cocycle_residual(c, t) {
                        Ok(r) if r.is_zero() => None,
                        Ok(r) => Some(format!("{t:?}: {r}")),
                        Err(e) => Some(format!("{t:?}: {e}")),
                    })
                    .collect();
                (shape, failures)
            }
            Err(_) => (false, Vec::new()),
        };
        let reduction = match &u1 {
            Ok(c) => cech::reduce_to_base_class(model, c).map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        };

        let oracle = oracle_setup.map(|setup| {
            let result = oracle::instantiate(model, &setup.generators, setup.samples, setup.seed)
                .and_then(|nm| oracle::run_all(&nm, setup.tolerance))
                .map_err(|e| e.to_string());
            (setup.clone(), result)
        });

        SubReports {
            riemann_roch: riemann_roch_steps(model.genus),
            bundle_failures,
            bundle_checks,
            frame_failures,
            restriction_trivial: flat.is_trivial(),
            restriction_cocycle: flat.cocycle_holds(),
            u1,
            u1_shape_ok,
            u1_residual_failures,
            reduction,
            oracle,
            nef_big: nef_big_steps(model.deg_f).map_err(|e| e.to_string()),
        }
    }
}

fn frame_consistency_failures(model: &GrauertModel) -> Vec<String> {
    let mut failures = Vec::new();
    for (j, k) in model.nerve.pairs() {
        let check = || -> Result<Vec<String>, ModelError> {
            let mut out = Vec::new();
            let forward = model.theta_transition(j, k)?;
            let expected = expr::a(j, k).inv().map_err(ModelError::from)?;
            if forward.coeffs()[1] != expected {
                out.push(format!(
                    "({j},{k}): dtheta_j/dtheta_k = {} on Y",
                    forward.coeffs()[1]
                ));
            }
            let backward = forward.invert_series(j)?;
            if backward != model.theta_inverse(j, k)? {
                out.push(format!(
                    "({j},{k}): series inverse differs from closed form"
                ));
            }
            if !backward.compose(&forward)?.retag(k).is_identity()
                || !forward.compose(&backward)?.is_identity()
            {
                out.push(format!("({j},{k}): chart changes do not round-trip"));
            }
            let conormal = backward.coeffs()[1].clone();
            if conormal != cech::f_frame_transport(j, k) {
                out.push(format!("({j},{k}): conormal and F-frame transports differ"));
            }
            Ok(out)
        };
        match check() {
            Ok(found) => failures.extend(found),
            Err(e) => failures.push(format!("({j},{k}): {e}")),
        }
    }
    failures
}

fn stats_step(id: &str, statement: &str, stats: &ResidualStats, setup: &OracleSetup) -> CertStep {
    CertStep::new(
        id,
        statement,
        if stats.pass {
            Status::VerifiedNumeric
        } else {
            Status::Failed
        },
        json!({
            "max_residual": stats.max,
            "mean_residual": stats.mean,
            "count": stats.count,
            "tolerance": stats.tolerance,
            "seed": setup.seed,
            "samples": setup.samples,
        }),
    )
}

/// Orders the sub-reports into the certificate.
pub fn assemble_certificate(model: &GrauertModel, reports: &SubReports) -> Certificate {
    let mut steps = reports.riemann_roch.clone();

    steps.push(CertStep::new(
        "hypothesis.xi-nonzero",
        "the affine bundle is built from a class [xi] != 0 in H^1(R, O(F)), which exists by the previous step",
        Status::AssumedHypothesis,
        json!({ "class": "[{(U_jk, xi_jk m_j)}]" }),
    ));

    steps.push(CertStep::verified_if(
        "construction.cocycle-residuals",
        "the transitions of p*F, [Y] and L satisfy g_jk (g_kl o theta_k) g_jl^-1 = 1 and g_jk (g_kj o theta_k) = 1 exactly",
        reports.bundle_failures.is_empty(),
        json!({
            "charts": model.nerve.size(),
            "order": model.order,
            "checks": reports.bundle_checks,
            "nonzero": reports
                .bundle_failures
                .iter()
                .map(|(b, at, r)| json!({ "bundle": b, "at": at, "residual": r }))
                .collect::<Vec<_>>(),
        }),
    ));

    steps.push(CertStep::verified_if(
        "normal-bundle.frame-consistency",
        "dtheta_j/dtheta_k = a_jk^-1 on Y, so d/dtheta_j and the frames of (p|_Y)*F^-1 transform alike and N_{Y/X} = (p|_Y)*F^-1",
        reports.frame_failures.is_empty(),
        json!({
            "pairs": model.nerve.pairs().len(),
            "deg_normal_bundle": -model.deg_f,
            "failures": reports.frame_failures,
        }),
    ));

    steps.push(CertStep::verified_if(
        "restriction.topologically-trivial",
        "every transition of L restricts to t_jk = 1 on Y, so L|_Y is trivial, in particular topologically trivial and unitary flat",
        reports.restriction_trivial && reports.restriction_cocycle,
        json!({ "all_t_equal_one": reports.restriction_trivial, "cocycle": reports.restriction_cocycle }),
    ));

    let u1_lines = match &reports.u1 {
        Ok(c) => json!(c.to_string().lines().collect::<Vec<_>>()),
        Err(e) => json!({ "error": e }),
    };
    steps.push(CertStep::verified_if(
        "u1.extraction",
        "e_k/e_j = 1 - xi_jk theta_j exactly, so u1(Y,X,L) is represented by {(W_jk, -xi_jk dtheta_j)}",
        reports.u1.is_ok() && reports.u1_shape_ok,
        json!({ "entries": u1_lines }),
    ));
    steps.push(CertStep::verified_if(
        "u1.cocycle",
        "c_jk + a_jk c_kl - c_jl = 0 on every triple j<k<l",
        reports.u1.is_ok() && reports.u1_residual_failures.is_empty(),
        json!({
            "triples": model.nerve.triples().len(),
            "failures": reports.u1_residual_failures,
        }),
    ));
    let (reduction_ok, reduction_payload) = match &reports.reduction {
        Ok(r) => (
            r.equivalence_verified && !r.degenerate,
            json!({
                "system": r
                    .equations
                    .iter()
                    .map(|e| format!("({},{}): {} = 0", e.pair.0, e.pair.1, e.expected))
                    .collect::<Vec<_>>(),
                "all_equations_match": r.equations.iter().all(|e| e.matches),
                "transport_consistent": r.transport_consistent,
                "f_frame_matches": r.f_frame_matches,
                "conclusion": r.conclusion,
            }),
        ),
        Err(e) => (false, json!({ "error": e })),
    };
    steps.push(CertStep::verified_if(
        "u1.reduction",
        "u1 = delta(phi) is exactly the system phi_k a_jk - phi_j = -xi_jk, i.e. delta{(U_j, phi_j m_j)} = {(U_jk, -xi_jk m_j)}; hence u1 = 0 iff [xi] = 0",
        reduction_ok,
        reduction_payload,
    ));
    steps.push(CertStep::new(
        "u1.nonzero",
        "u1(Y,X,L) != 0",
        Status::VerifiedSymbolic,
        json!({ "depends_on": ["u1.reduction", "hypothesis.xi-nonzero"] }),
    ));

    if let Some((setup, result)) = &reports.oracle {
        match result {
            Ok(r) => {
                steps.push(stats_step(
                    "oracle.transitions",
                    "theta-transition jets and their inverses agree with the closed forms at sampled points",
                    &r.transitions,
                    setup,
                ));
                steps.push(stats_step(
                    "oracle.u1-derivative",
                    "central differences of e_k/e_j at theta_j = 0 reproduce -xi_jk",
                    &r.u1.derivative,
                    setup,
                ));
                steps.push(stats_step(
                    "oracle.u1-linearity",
                    "second differences of e_k/e_j vanish",
                    &r.u1.linearity,
                    setup,
                ));
                steps.push(stats_step(
                    "oracle.bundle-cocycles",
                    "closed-form triple products g_jk g_kl g_lj equal 1",
                    &r.cocycles.bundle,
                    setup,
                ));
                steps.push(stats_step(
                    "oracle.conormal-cocycles",
                    "-xi_jk - a_jk xi_kl + xi_jl = 0 numerically",
                    &r.cocycles.conormal,
                    setup,
                ));
                steps.push(stats_step(
                    "oracle.relations",
                    "affine chain composition agrees with the symbolic normal forms of a_jk, xi_jk",
                    &r.relations,
                    setup,
                ));
            }
            Err(e) => steps.push(CertStep::new(
                "oracle.setup",
                "numeric instance could not be built",
                Status::Failed,
                json!({ "error": e }),
            )),
        }
    }

    steps.push(CertStep::cited(
        "semipositivity.obstruction-criterion",
        "if L|_Y is topologically trivial and u1(Y,X,L) != 0 then L is not semipositive",
        "obstruction-criterion: Koike, Theorem 1.4 (first obstruction class of a line bundle along a compact Kaehler submanifold)",
        json!({}),
    ));
    steps.push(CertStep::new(
        "semipositivity.conclusion",
        "L is not semipositive",
        Status::VerifiedSymbolic,
        json!({
            "depends_on": [
                "restriction.topologically-trivial",
                "u1.nonzero",
                "semipositivity.obstruction-criterion",
            ],
        }),
    ));

    match &reports.nef_big {
        Ok(nb) => steps.extend(nb.iter().cloned()),
        Err(e) => steps.push(CertStep::new(
            "nef.parameters",
            "nef/big argument needs deg F >= 1",
            Status::Failed,
            json!({ "error": e }),
        )),
    }

    Certificate::from_steps(steps)
}

/// Full pipeline. A genus below 2 stops after the Riemann–Roch step.
pub fn run_verification(
    params: &VerifyParams,
    bundles: Option<Bundles>,
    oracle_setup: Option<&OracleSetup>,
) -> Certificate {
    let rr = riemann_roch_steps(params.genus);
    if rr.iter().any(|s| s.status == Status::Failed) {
        return Certificate::from_steps(rr);
    }
    let model = match grauert::build_model(params.charts, params.genus, params.deg_f, params.order)
    {
        Ok(m) => m,
        Err(e) => {
            let mut steps = rr;
            steps.push(CertStep::new(
                "model.parameters",
                "model parameters are admissible",
                Status::Failed,
                json!({ "error": e.to_string() }),
            ));
            return Certificate::from_steps(steps);
        }
    };
    let bundles = match bundles.map_or_else(|| Bundles::from_model(&model), Ok) {
        Ok(b) => b,
        Err(e) => {
            let mut steps = rr;
            steps.push(CertStep::new(
                "model.bundles",
                "bundle transitions could be built",
                Status::Failed,
                json!({ "error": e.to_string() }),
            ));
            return Certificate::from_steps(steps);
        }
    };
    let reports = SubReports::collect(&model, &bundles, oracle_setup);
    assemble_certificate(&model, &reports)
}

fn section_title(prefix: &str) -> &'static str {
    match prefix {
        "rr" => "Riemann–Roch on the base curve",
        "hypothesis" => "Hypotheses",
        "construction" => "Transition cocycles of p*F, [Y] and L",
        "normal-bundle" => "Normal bundle of the section at infinity",
        "restriction" => "Restriction of L to Y",
        "u1" => "First obstruction class",
        "oracle" => "Numeric cross-checks",
        "semipositivity" => "Non-semipositivity",
        "nef" => "Nefness",
        "big" => "Bigness",
        "model" => "Model parameters",
        _ => "Other",
    }
}

/// Markdown with one section per group of consecutive steps sharing an id
/// prefix, in JSON order.
pub fn render_markdown(cert: &Certificate) -> String {
    let mut out = String::new();
    let hypotheses: Vec<&str> = cert
        .steps
        .iter()
        .filter(|s| s.status == Status::AssumedHypothesis)
        .map(|s| s.id.as_str())
        .collect();
    let _ = writeln!(
        out,
        "# Certificate: L = p*F (x) [Y] on the compactified affine bundle\n"
    );
    let _ = writeln!(out, "- **Verdict:** {}", cert.verdict);
    let _ = writeln!(out, "- **Status:** {}", cert.status.as_str());
    let _ = writeln!(
        out,
        "- **Hypotheses:** {}",
        if hypotheses.is_empty() {
            "none".to_string()
        } else {
            hypotheses.join(", ")
        }
    );
    let _ = writeln!(
        out,
        "- **Cited rule families:** {}",
        cert.cited_families().join(", ")
    );
    if let Some(failed) = cert.first_failure() {
        let _ = writeln!(out, "- **First failing step:** `{}`", failed.id);
    }

    let mut current = "";
    for step in &cert.steps {
        let prefix = step.id.split('.').next().unwrap_or("");
        if prefix != current {
            current = prefix;
            let _ = writeln!(out, "\n## {}\n", section_title(prefix));
        }
        let _ = writeln!(
            out,
            "- `{}` **[{}]** {}",
            step.id,
            step.status.as_str(),
            step.statement
        );
        if let Some(c) = &step.citation {
            let _ = writeln!(out, "  - citation: {c}");
        }
        if step.payload.as_object().is_some_and(|o| !o.is_empty()) {
            let _ = writeln!(out, "  - payload: `{}`", step.payload);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn default_cert() -> Certificate {
        run_verification(
            &VerifyParams::default(),
            None,
            Some(&OracleSetup::constants(3, 0)),
        )
    }

    #[test]
    fn default_run_succeeds() {
        let cert = default_cert();
        assert!(cert.is_success(), "{:?}", cert.first_failure());
        assert_eq!(cert.verdict, VERDICT);
        assert_eq!(cert.status, Status::AssumedHypothesis);
        assert_eq!(cert.count(Status::AssumedHypothesis), 1);
        let mut families = cert.cited_families();
        families.sort();
        let mut expected = CITED_FAMILIES.to_vec();
        expected.sort();
        assert_eq!(families, expected);
        for s in &cert.steps {
            assert_eq!(
                s.status == Status::CitedRule,
                s.citation.is_some(),
                "{}",
                s.id
            );
        }
    }

    #[test]
    fn json_round_trip() {
        let cert = default_cert();
        let text = cert.to_json();
        let back = Certificate::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        let v: Value = serde_json::from_str(&text).unwrap();
        for key in ["id", "statement", "status", "payload", "citation"] {
            assert!(v["steps"][0].get(key).is_some());
        }
    }

    #[test]
    fn markdown_sections() {
        let md = render_markdown(&default_cert());
        assert!(md.contains("- **Verdict:** nef, big, not semipositive"));
        assert_eq!(md.matches("## ").count(), 10);
        assert_eq!(md.matches("[assumed-hypothesis]").count(), 1);
    }

    #[test]
    fn genus_one_aborts() {
        let cert = run_verification(
            &VerifyParams {
                genus: 1,
                ..VerifyParams::default()
            },
            None,
            None,
        );
        assert!(!cert.is_success());
        assert_eq!(cert.first_failure().unwrap().id, "rr.h1-nonvanishing");
        assert_eq!(cert.steps.len(), 2);
        assert!(render_markdown(&cert).contains("First failing step:** `rr.h1-nonvanishing`"));
    }

    #[test]
    fn corrupted_l_fails_at_construction() {
        let model = grauert::build_model(3, 2, 1, 3).unwrap();
        let mut bundles = Bundles::from_model(&model).unwrap();
        let shifted = Expr::gen(Gen::Xi(1)) + Expr::one();
        bundles.l = bundles
            .l
            .perturb(1, 2, |c| c.substitute(Gen::Xi(1), &shifted))
            .unwrap();
        let cert = run_verification(&VerifyParams::default(), Some(bundles), None);
        assert_eq!(
            cert.first_failure().unwrap().id,
            "construction.cocycle-residuals"
        );
        assert_eq!(cert.step("u1.extraction").unwrap().status, Status::Failed);
    }

    #[test]
    fn bad_parameters() {
        let cert = run_verification(
            &VerifyParams {
                charts: 2,
                ..VerifyParams::default()
            },
            None,
            None,
        );
        assert_eq!(cert.first_failure().unwrap().id, "model.parameters");
        let cert = run_verification(
            &VerifyParams {
                deg_f: 0,
                ..VerifyParams::default()
            },
            None,
            None,
        );
        assert_eq!(cert.first_failure().unwrap().id, "nef.parameters");
    }
}
