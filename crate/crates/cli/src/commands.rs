//! The `check`, `constant` and `divergence` subcommands.

use std::fmt::Write as _;
use std::path::Path;

use a2w_core::estimator::{certify_saturation, estimate_a2, SymbolicAverager, Type2Averager};
use a2w_core::multivar::{estimate_a2_cubes, CubeSearchConfig, CubeSearchResult, Type1aAverager, Type1bAverager};
use a2w_core::type2::{divergence_experiment, log_spaced_indices, loglog_slope};
use a2w_core::{
    A2Report64, DenseMatrix64, Functional, Rational, SupSearchConfig64, SupSearchResult64, SymbolicPowerMatrix64,
    UnitaryFamily, Verdict,
};
use serde_json::{json, Value};

use crate::spec::{load, Weight};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_A2: i32 = 3;
pub const EXIT_SEARCH: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

/// What a subcommand prints and how the process exits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            ..Self::default()
        }
    }

    pub fn fail(code: i32, message: impl Into<String>) -> Self {
        Self {
            stderr: format!("error: {}\n", message.into()),
            code,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Grid {
    Coarse,
    Fine,
}

impl Grid {
    fn as_str(self) -> &'static str {
        match self {
            Grid::Coarse => "coarse",
            Grid::Fine => "fine",
        }
    }
}

fn header(command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!("a2w"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m
}

fn rows_json(rows: &[Vec<Rational>]) -> Value {
    json!(rows
        .iter()
        .map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn rows_text(rows: &[Vec<Rational>]) -> String {
    rows.iter()
        .map(|r| {
            format!(
                "  [{}]\n",
                r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
            )
        })
        .collect()
}

/// Exponent matrices of the weight: one for one-variable kinds, one per
/// coordinate for separable weights.
fn exponent_matrices(weight: &Weight) -> Vec<Vec<Vec<Rational>>> {
    match weight {
        Weight::Scalar(w) | Weight::Type1(w) | Weight::Type1Raw(w) => vec![w.exponent_rows()],
        Weight::Type1a(w) => (0..w.space_dim())
            .map(|c| {
                (0..w.dim())
                    .map(|i| (0..w.dim()).map(|j| w.exponent(c, i, j)).collect())
                    .collect()
            })
            .collect(),
        Weight::Type1b(w) => vec![(0..w.dim())
            .map(|i| (0..w.dim()).map(|j| w.exponent(i, j)).collect())
            .collect()],
        Weight::Type2(_) => Vec::new(),
    }
}

/// Exact A₂ decision for every supported kind.
pub fn decide(weight: &Weight) -> A2Report64 {
    match weight {
        Weight::Scalar(w) | Weight::Type1(w) | Weight::Type1Raw(w) => w.check_a2(),
        Weight::Type1a(w) => w.check_a2(),
        Weight::Type1b(w) => w.check_a2(),
        Weight::Type2(w) => match w.decide_rotation_a2() {
            Ok(report) => report,
            Err(_) => {
                // identity family: a diagonal Type 1 weight
                let diag = SymbolicPowerMatrix64::build_type1(DenseMatrix64::diagonal(w.alphas()), w.gammas())
                    .expect("dimensions agree");
                let mut report = diag.check_a2();
                report
                    .notes
                    .push("identity unitary: decided as a diagonal weight with zero off-diagonal coefficients".into());
                report
            }
        },
    }
}

fn reason_prefix(weight: &Weight) -> &'static str {
    match weight {
        Weight::Type2(w) if w.unitary_family() != UnitaryFamily::Identity => "rotation criterion: ",
        _ => "",
    }
}

/// One-line summary such as `A2: yes` or `A2: no — <first reason>`.
pub fn verdict_line(weight: &Weight, report: &A2Report64) -> String {
    let first = report
        .reasons
        .first()
        .map(|r| format!("{}{r}", reason_prefix(weight)))
        .unwrap_or_else(|| report.verdict.to_string());
    match report.verdict {
        Verdict::A2 => "A2: yes".into(),
        Verdict::Marginal => format!("A2: undecided — {first}"),
        Verdict::InconclusiveNecessaryPassed => "A2: inconclusive — necessary conditions hold".into(),
        _ => format!("A2: no — {first}"),
    }
}

fn report_json(report: &A2Report64) -> Value {
    json!({
        "verdict": report.verdict.as_str(),
        "a2": report.verdict == Verdict::A2,
        "reasons": report.reasons.iter().map(|r| json!({"code": r.code(), "message": r.to_string()})).collect::<Vec<_>>(),
        "witness": report.witness,
        "notes": report.notes,
    })
}

pub fn check(path: &Path, as_json: bool) -> Outcome {
    let (echo, weight) = match load(path) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(EXIT_USAGE, e),
    };
    let report = decide(&weight);
    let exponents = exponent_matrices(&weight);
    if as_json {
        let mut doc = header("check");
        doc.insert("spec".into(), echo);
        let mut result = report_json(&report);
        result["kind"] = json!(weight.kind());
        result["n"] = json!(weight.dim());
        result["exponents"] = json!(exponents.iter().map(|m| rows_json(m)).collect::<Vec<_>>());
        doc.insert("result".into(), result);
        return Outcome::ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).expect("serializable")
        ));
    }
    let mut out = String::new();
    let _ = writeln!(out, "kind: {} (n = {})", weight.kind(), weight.dim());
    let _ = writeln!(out, "{}", verdict_line(&weight, &report));
    let _ = writeln!(out, "verdict: {}", report.verdict);
    if !report.reasons.is_empty() {
        let _ = writeln!(out, "reasons:");
        for r in &report.reasons {
            let _ = writeln!(out, "  - {r}");
        }
    }
    if let Some(x) = report.witness {
        let _ = writeln!(out, "witness: x = {x:e}");
    }
    for (c, m) in exponents.iter().enumerate() {
        if exponents.len() > 1 {
            let _ = writeln!(out, "exponents (coordinate {}):", c + 1);
        } else {
            let _ = writeln!(out, "exponents:");
        }
        out.push_str(&rows_text(m));
    }
    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    Outcome::ok(out)
}

pub struct ConstantArgs<'a> {
    pub spec: &'a Path,
    pub functional: Functional,
    pub grid: Grid,
    pub json: bool,
    pub certify_grid: Option<usize>,
}

enum Found {
    Interval(SupSearchResult64, SupSearchConfig64),
    Cube(CubeSearchResult<f64>, CubeSearchConfig<f64>),
}

fn interval_config_json(cfg: &SupSearchConfig64) -> Value {
    json!({
        "center_grid": cfg.center_grid,
        "halflength_grid": cfg.halflength_grid,
        "refine_rounds": cfg.refine_rounds,
        "quadrature_tol": cfg.quadrature_tol,
        "max_panels": cfg.max_panels,
    })
}

fn cube_config_json(cfg: &CubeSearchConfig<f64>) -> Value {
    json!({
        "sides": cfg.sides,
        "offset_fractions": cfg.offset_fractions,
        "origin_cornered": cfg.origin_cornered,
        "origin_centered": cfg.origin_centered,
        "refine_rounds": cfg.refine_rounds,
        "quadrature_tol": cfg.quadrature_tol,
        "max_cells": cfg.max_cells,
    })
}

pub fn constant(args: &ConstantArgs<'_>) -> Outcome {
    let (echo, weight) = match load(args.spec) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(EXIT_USAGE, e),
    };
    let is_cube = matches!(weight, Weight::Type1a(_) | Weight::Type1b(_));
    if args.certify_grid.is_some() && is_cube {
        return Outcome::fail(EXIT_USAGE, "--certify-grid applies to interval searches only");
    }
    let report = decide(&weight);
    if report.verdict != Verdict::A2 {
        return Outcome::fail(
            EXIT_NOT_A2,
            format!(
                "the weight is not A2, so it has no finite constant ({})",
                verdict_line(&weight, &report)
            ),
        );
    }

    let interval_cfg = |quadrature: bool| match (quadrature, args.grid) {
        (false, Grid::Fine) => SupSearchConfig64::fine(),
        (false, Grid::Coarse) => SupSearchConfig64::coarse(),
        (true, Grid::Fine) => SupSearchConfig64::quadrature_fine(),
        (true, Grid::Coarse) => SupSearchConfig64::quadrature_coarse(),
    };
    let cube_cfg = match args.grid {
        Grid::Fine => CubeSearchConfig::fine(),
        Grid::Coarse => CubeSearchConfig::coarse(),
    };
    let mut saturation = None;
    let found = match &weight {
        Weight::Scalar(w) | Weight::Type1(w) | Weight::Type1Raw(w) => {
            let cfg = interval_cfg(false);
            SymbolicAverager::new(w).and_then(|avg| {
                if let Some(levels) = args.certify_grid {
                    saturation = Some(certify_saturation(&avg, args.functional, &cfg, levels)?);
                }
                estimate_a2(&avg, args.functional, &cfg).map(|r| Found::Interval(r, cfg))
            })
        }
        Weight::Type2(w) => {
            let cfg = interval_cfg(true);
            Type2Averager::new(w, cfg.quadrature_tol, cfg.max_panels).and_then(|avg| {
                if let Some(levels) = args.certify_grid {
                    saturation = Some(certify_saturation(&avg, args.functional, &cfg, levels)?);
                }
                estimate_a2(&avg, args.functional, &cfg).map(|r| Found::Interval(r, cfg))
            })
        }
        Weight::Type1a(w) => Type1aAverager::new(w)
            .and_then(|avg| estimate_a2_cubes(&avg, args.functional, &cube_cfg))
            .map(|r| Found::Cube(r, cube_cfg.clone())),
        Weight::Type1b(w) => Type1bAverager::new(w, cube_cfg.quadrature_tol, cube_cfg.max_cells)
            .and_then(|avg| estimate_a2_cubes(&avg, args.functional, &cube_cfg))
            .map(|r| Found::Cube(r, cube_cfg.clone())),
    };
    let found = match found {
        Ok(f) => f,
        Err(e) => return Outcome::fail(EXIT_SEARCH, format!("search failed: {e}")),
    };
    let upper_bound = match &weight {
        Weight::Scalar(w) | Weight::Type1(w) | Weight::Type1Raw(w) => w.a2_upper_bound().ok(),
        _ => None,
    };

    let (estimate, evaluations, grid_evaluations, grid_estimate, skipped, argmax, argmax_text, config) = match &found {
        Found::Interval(r, cfg) => (
            r.estimate,
            r.evaluations,
            r.grid_evaluations,
            r.grid_estimate,
            r.skipped,
            json!({"a": r.argmax.a(), "b": r.argmax.b()}),
            format!("interval [{:e}, {:e}]", r.argmax.a(), r.argmax.b()),
            interval_config_json(cfg),
        ),
        Found::Cube(r, cfg) => (
            r.estimate,
            r.evaluations,
            r.grid_evaluations,
            r.grid_estimate,
            r.skipped,
            json!({"lower": r.argmax.lower(), "side": r.argmax.side()}),
            format!(
                "cube with lower corner ({}) and side {:e}",
                r.argmax
                    .lower()
                    .iter()
                    .map(|v| format!("{v:e}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                r.argmax.side()
            ),
            cube_config_json(cfg),
        ),
    };

    if args.json {
        let mut doc = header("constant");
        doc.insert("spec".into(), echo);
        doc.insert(
            "config".into(),
            json!({"functional": args.functional.as_str(), "grid": args.grid.as_str(), "search": config}),
        );
        let mut result = json!({
            "kind": weight.kind(),
            "functional": args.functional.as_str(),
            "estimate": estimate,
            "argmax": argmax,
            "evaluations": evaluations,
            "grid_evaluations": grid_evaluations,
            "grid_estimate": grid_estimate,
            "skipped": skipped,
            "upper_bound": upper_bound,
            "notes": report.notes,
        });
        if let Some(s) = &saturation {
            result["saturation"] = json!({
                "estimates": s.estimates,
                "relative_changes": s.relative_changes,
                "saturated": s.saturated,
            });
        }
        doc.insert("result".into(), result);
        return Outcome::ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).expect("serializable")
        ));
    }

    let mut out = String::new();
    let _ = writeln!(out, "kind: {} (n = {})", weight.kind(), weight.dim());
    let _ = writeln!(out, "functional: {}", args.functional.as_str());
    let _ = writeln!(out, "grid: {}", args.grid.as_str());
    let _ = writeln!(out, "estimate: {estimate} (lower bound for the supremum)");
    let _ = writeln!(out, "argmax: {argmax_text}");
    let _ = writeln!(
        out,
        "evaluations: {evaluations} (grid {grid_evaluations}, skipped {skipped})"
    );
    if let Some(b) = upper_bound {
        let _ = writeln!(out, "upper bound (trace): {b}");
    }
    if let Some(s) = &saturation {
        let levels: Vec<String> = s.estimates.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "grid levels: {}", levels.join(", "));
        let _ = writeln!(out, "saturated: {}", if s.saturated { "yes" } else { "no" });
    }
    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    Outcome::ok(out)
}

pub struct DivergenceArgs<'a> {
    pub gamma1: &'a str,
    pub gamma2: &'a str,
    pub n_min: u64,
    pub n_max: u64,
    pub points: usize,
    pub out: Option<&'a Path>,
}

pub const CSV_HEADER: [&str; 6] = ["n", "a", "b", "avg_w", "avg_winv", "product"];

pub fn divergence(args: &DivergenceArgs<'_>) -> Outcome {
    let parse = |s: &str| crate::spec::parse_rational(s);
    let (g1, g2) = match (parse(args.gamma1), parse(args.gamma2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::fail(EXIT_USAGE, e),
    };
    let one = Rational::from_integer(1);
    if !(-one < g1 && g1 < g2 && g2 < one) {
        return Outcome::fail(
            EXIT_USAGE,
            format!("need -1 < gamma1 < gamma2 < 1, got gamma1 = {g1}, gamma2 = {g2}"),
        );
    }
    let ns = match log_spaced_indices(args.n_min, args.n_max, args.points) {
        Ok(ns) => ns,
        Err(e) => return Outcome::fail(EXIT_USAGE, e.to_string()),
    };
    let rows = match divergence_experiment::<f64>(g1, g2, &ns) {
        Ok(rows) => rows,
        Err(e) => return Outcome::fail(EXIT_SEARCH, format!("experiment failed: {e}")),
    };

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory write");
    for r in &rows {
        writer
            .write_record([
                r.n.to_string(),
                r.a.to_string(),
                r.b.to_string(),
                r.avg_w.to_string(),
                r.avg_winv.to_string(),
                r.product.to_string(),
            ])
            .expect("in-memory write");
    }
    let csv_text = String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("ASCII output");

    let theoretical = (g2 - g1) / Rational::from_integer(2);
    let slope = loglog_slope(&rows);
    let threshold = args.n_max / 1000;
    let tail: Vec<f64> = rows.iter().filter(|r| r.n >= threshold).map(|r| r.product).collect();
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);

    let mut summary = String::new();
    let _ = writeln!(summary, "gamma1 = {g1}, gamma2 = {g2}");
    let _ = writeln!(summary, "rows: {} (n = {} .. {})", rows.len(), ns[0], ns[ns.len() - 1]);
    match slope {
        Some(s) => {
            let _ = writeln!(summary, "fitted slope: {s}");
        }
        None => {
            let _ = writeln!(summary, "fitted slope: n/a (need at least two rows)");
        }
    }
    let _ = writeln!(
        summary,
        "theoretical exponent (gamma2 - gamma1)/2: {theoretical} = {}",
        *theoretical.numer() as f64 / *theoretical.denom() as f64
    );
    let _ = writeln!(
        summary,
        "products increasing over the last three decades: {}",
        if increasing { "yes" } else { "no" }
    );

    match args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &csv_text) {
                return Outcome::fail(EXIT_USAGE, format!("cannot write {}: {e}", path.display()));
            }
            let _ = writeln!(summary, "csv: {}", path.display());
            Outcome::ok(summary)
        }
        None => Outcome {
            stdout: csv_text,
            stderr: summary,
            code: EXIT_OK,
        },
    }
}
