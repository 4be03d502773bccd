//! Command-line front end.
//!
//! `dispatch` never exits the process; it returns the exit code so the
//! binary and the tests share one code path.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{CommandFactory, Parser, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::grauert::{build_model, GrauertModel};
use crate::oracle::{self, OracleConfig};
use crate::surface::{
    self, render_markdown, run_verification, Certificate, NSClass, OracleSetup, Status,
    VerifyParams,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Run the full pipeline and emit a certificate.
    Verify,
    /// Print the transition jets for one chart pair.
    Expand,
    /// Intersect two classes alpha Y + beta f.
    Intersect,
    /// Riemann–Roch on the base curve.
    Rr,
    /// Numeric cross-checks only.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Md,
}

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(
    name = "obstruction",
    about = "Symbolic certificate that L = p*F (x) [Y] on a compactified affine bundle is nef and big but not semipositive"
)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Number of charts covering the base curve.
    #[arg(long, default_value_t = 3)]
    pub charts: usize,
    #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
    pub genus: i64,
    #[arg(long = "degF", default_value_t = 1, allow_negative_numbers = true)]
    pub deg_f: i64,
    /// Truncation order of the jets.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the truncation-bearing tolerance of the oracle.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "oracle-config")]
    pub oracle_config: Option<PathBuf>,
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<(usize, usize)>,
    #[arg(long, value_parser = parse_class, allow_hyphen_values = true)]
    pub class: Option<NSClass>,
    #[arg(long, value_parser = parse_class, allow_hyphen_values = true)]
    pub class2: Option<NSClass>,
    /// Degree of F for the `rr` subcommand.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub deg: i64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Model(#[from] crate::grauert::ModelError),
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (j, k) = s.split_once(',').ok_or("expected J,K")?;
    let j = j.trim().parse().map_err(|e| format!("{e}"))?;
    let k = k.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((j, k))
}

fn parse_class(s: &str) -> Result<NSClass, String> {
    let (a, b) = s.split_once(',').ok_or("expected A,B")?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok(NSClass::new(a, b))
}

impl RunConfig {
    pub fn parse_args<I, T>(argv: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        RunConfig::try_parse_from(argv)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.charts < 3 {
            return Err(CliError::Invalid(format!(
                "--charts must be at least 3, got {}",
                self.charts
            )));
        }
        if self.order < 1 {
            return Err(CliError::Invalid("--order must be at least 1".into()));
        }
        if let Some(tol) = self.tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::Invalid(format!(
                    "--tol must be positive, got {tol}"
                )));
            }
        }
        if let Some((j, k)) = self.pair {
            let n = self.charts;
            if j == k || !(1..=n).contains(&j) || !(1..=n).contains(&k) {
                return Err(CliError::Invalid(format!(
                    "--pair {j},{k} is not an overlap of {n} charts"
                )));
            }
        }
        if self.command == Command::Intersect && (self.class.is_none() || self.class2.is_none()) {
            return Err(CliError::Invalid(
                "intersect needs --class and --class2".into(),
            ));
        }
        Ok(())
    }

    pub fn verify_params(&self) -> VerifyParams {
        VerifyParams {
            charts: self.charts,
            genus: self.genus,
            deg_f: self.deg_f,
            order: self.order,
        }
    }

    /// Oracle instance from `--oracle-config`, or the constants instance,
    /// with `--seed` and `--tol` taking precedence over the file.
    pub fn oracle_setup(&self) -> Result<OracleSetup, CliError> {
        let mut setup = match &self.oracle_config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                    path: path.clone(),
                    source,
                })?;
                let config = OracleConfig::from_json(&text)?;
                OracleSetup {
                    generators: config.assignment(self.charts)?,
                    samples: config.samples,
                    seed: config.seed,
                    tolerance: config.tolerance,
                }
            }
            None => OracleSetup::constants(self.charts, 0),
        };
        if let Some(seed) = self.seed {
            setup.seed = seed;
        }
        if let Some(tol) = self.tol {
            setup.tolerance = tol;
        }
        Ok(setup)
    }
}

pub fn render_report(cert: &Certificate, format: Format) -> String {
    match format {
        Format::Json => cert.to_json(),
        Format::Md => render_markdown(cert),
    }
}

fn expand_text(model: &GrauertModel, j: usize, k: usize) -> Result<String, CliError> {
    let mut out = String::new();
    let bundles = surface::Bundles::from_model(model)?;
    let _ = writeln!(
        out,
        "theta_{j}(theta_{k}) = {}",
        model.theta_transition(j, k)?
    );
    let _ = writeln!(out, "theta_{k}(theta_{j}) = {}", model.theta_inverse(j, k)?);
    let _ = writeln!(
        out,
        "p*F  g_{j}{k} = {}",
        bundles.pullback_f.transition(j, k)?
    );
    let _ = writeln!(
        out,
        "[Y]  g_{j}{k} = {}",
        bundles.divisor_y.transition(j, k)?
    );
    let _ = writeln!(out, "e_{k}/e_{j} = {}", bundles.l.transition(j, k)?);
    Ok(out)
}

fn rr_text(genus: i64, deg: i64) -> (String, bool) {
    let mut out = String::new();
    let chi = surface::euler_char(genus, deg);
    let _ = writeln!(
        out,
        "chi = h^0 - h^1 = deg F - g + 1 = {deg} - {genus} + 1 = {chi}"
    );
    if deg != 1 {
        let _ = writeln!(out, "h^1 - h^0 = {}", -chi);
        return (out, true);
    }
    let steps = surface::riemann_roch_steps(genus);
    let ok = steps.iter().all(|s| s.status != Status::Failed);
    match surface::check_h1_chain(genus) {
        Ok(excess) => {
            let _ = writeln!(
                out,
                "h^1 = h^0 + {excess} >= h^0 >= 1, so H^1(R, O(F)) != 0"
            );
        }
        Err(e) => {
            let _ = writeln!(out, "rejected: {e}");
        }
    }
    for s in &steps {
        let _ = writeln!(out, "[{}] {}: {}", s.status.as_str(), s.id, s.statement);
    }
    (out, ok)
}

fn oracle_text(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    let model = build_model(cfg.charts, cfg.genus, cfg.deg_f, cfg.order)?;
    let setup = cfg.oracle_setup()?;
    let nm = oracle::instantiate(&model, &setup.generators, setup.samples, setup.seed)?;
    let report = oracle::run_all(&nm, setup.tolerance)?;
    let pass = report.pass();
    let text = match cfg.format {
        Format::Json => {
            let value = json!({
                "seed": setup.seed,
                "samples": setup.samples,
                "redraws": nm.redraws,
                "pass": pass,
                "report": report,
            });
            let mut s = serde_json::to_string_pretty(&value).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Md => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "# Numeric cross-checks (seed {}, {} samples)\n",
                setup.seed, setup.samples
            );
            let _ = writeln!(s, "| check | max | mean | count | tolerance | pass |");
            let _ = writeln!(s, "|---|---|---|---|---|---|");
            for (name, st) in [
                ("transitions", report.transitions),
                ("u1 derivative", report.u1.derivative),
                ("u1 linearity", report.u1.linearity),
                ("bundle cocycles", report.cocycles.bundle),
                ("conormal cocycles", report.cocycles.conormal),
                ("relations", report.relations),
            ] {
                let _ = writeln!(
                    s,
                    "| {name} | {:.3e} | {:.3e} | {} | {:.0e} | {} |",
                    st.max, st.mean, st.count, st.tolerance, st.pass
                );
            }
            s
        }
    };
    Ok((text, pass))
}

fn execute(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Verify => {
            let setup = cfg.oracle_setup()?;
            let cert = run_verification(&cfg.verify_params(), None, Some(&setup));
            Ok((render_report(&cert, cfg.format), cert.is_success()))
        }
        Command::Expand => {
            let model = build_model(cfg.charts, cfg.genus, cfg.deg_f, cfg.order)?;
            let pairs = match cfg.pair {
                Some(p) => vec![p],
                None => model.nerve.pairs(),
            };
            let mut out = String::new();
            for (j, k) in pairs {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&expand_text(&model, j, k)?);
            }
            Ok((out, true))
        }
        Command::Intersect => {
            let (c1, c2) = (cfg.class.unwrap(), cfg.class2.unwrap());
            Ok((format!("{}\n", surface::intersect(c1, c2, cfg.deg_f)), true))
        }
        Command::Rr => Ok(rr_text(cfg.genus, cfg.deg)),
        Command::Oracle => oracle_text(cfg),
    }
}

/// Parses `argv` (program name first), runs the subcommand, and writes the
/// report to `--out` or `out`. Diagnostics go to `err`.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::parse_args(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let rendered = e.render().to_string();
            let _ = write!(target, "{rendered}");
            if e.use_stderr() && !rendered.contains("Usage:") {
                let _ = writeln!(target, "\n{}", RunConfig::command().render_usage());
            }
            return code;
        }
    };
    let (text, ok) = match execute(&cfg) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => out
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: "<stdout>".into(),
                source,
            }),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_USAGE;
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("obstruction").chain(args.iter().copied());
        let code = dispatch(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn intersect_prints_integer() {
        assert_eq!(
            run(&[
                "intersect",
                "--degF",
                "1",
                "--class",
                "1,1",
                "--class2",
                "1,1"
            ]),
            (0, "1\n".to_string(), String::new())
        );
        let (code, out, _) = run(&["intersect", "--class", "1,0", "--class2", "1,0"]);
        assert_eq!((code, out.as_str()), (0, "-1\n"));
        let (code, out, _) = run(&[
            "intersect",
            "--degF",
            "2",
            "--class",
            "1,-2",
            "--class2",
            "0,1",
        ]);
        assert_eq!((code, out.as_str()), (0, "1\n"));
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(&["frobnicate"]).0, 2);
        assert_eq!(run(&["verify", "--bogus"]).0, 2);
        assert_eq!(run(&["verify", "--charts", "2"]).0, 2);
        assert_eq!(run(&["expand", "--pair", "1,1"]).0, 2);
        assert_eq!(run(&["intersect", "--class", "1,1"]).0, 2);
        assert_eq!(
            run(&["verify", "--oracle-config", "/nonexistent/cfg.json"]).0,
            2
        );
        let (code, _, err) = run(&[]);
        assert_eq!(code, 2);
        assert!(err.contains("Usage"));
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn rr_chain() {
        let (code, out, _) = run(&["rr", "--genus", "2", "--deg", "1"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("chi = h^0 - h^1 = deg F - g + 1 = 1 - 2 + 1 = 0\n"));
        assert!(out.contains("h^1 = h^0 + 0 >= h^0 >= 1"));
        assert_eq!(run(&["rr", "--genus", "1"]).0, 1);
    }

    #[test]
    fn expand_shows_l_transition() {
        let (code, out, _) = run(&["expand", "--pair", "1,2", "--order", "2"]);
        assert_eq!(code, 0);
        assert!(
            out.contains("e_2/e_1 = 1 + (-xi(1,2))*t + (0)*t^2 [chart 1, order 2]"),
            "{out}"
        );
    }

    #[test]
    fn verify_genus_one_fails() {
        let (code, out, _) = run(&["verify", "--genus", "1", "--format", "json"]);
        assert_eq!(code, 1);
        let cert = Certificate::from_json(&out).unwrap();
        assert_eq!(cert.first_failure().unwrap().id, "rr.h1-nonvanishing");
    }
}
