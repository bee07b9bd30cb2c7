//! Command implementations; `main.rs` only parses arguments.

use std::fmt::Write as _;
use std::path::Path;

use psodesign_core::{
    equivalence_check, run_pso, sensitivity_profile, Design, EquivalenceReport, Problem, SearchResult,
};

use crate::config::{ProblemConfig, PsoOverrides};
use crate::design_io::{write_design, write_text, DesignFile};
use crate::error::{exit, CliError};

/// Printable result of a command plus its exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
}

/// Fixed-width table with factor-named columns and a weight column.
pub fn render_design(design: &Design, names: &[&str]) -> String {
    let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(10);
    let mut s = String::new();
    for n in names {
        let _ = write!(s, "{n:>width$} ");
    }
    let _ = writeln!(s, "{:>8}", "weight");
    for p in design.points() {
        for v in &p.setting {
            let _ = write!(s, "{:>width$} ", format!("{v:.4}"));
        }
        let _ = writeln!(s, "{:>8.4}", p.weight);
    }
    s
}

fn render_report(s: &mut String, report: &EquivalenceReport, eff_bound: f64) {
    let _ = writeln!(s, "theta:       {:.6}", report.theta);
    let _ = writeln!(s, "lower bound: {:.4} (required {:.4})", report.lower_bound, eff_bound);
    let _ = writeln!(s, "max |support residual|: {:.2e}", report.max_abs_support_residual());
    let _ = writeln!(s, "pass:        {}", if report.pass { "yes" } else { "no" });
}

fn verdict(pass: bool) -> i32 {
    if pass {
        exit::PASS
    } else {
        exit::VERIFY_FAIL
    }
}

/// Runs the swarm and renders the design; optionally writes
/// `<out>.json` and `<out>.csv`.
pub fn cmd_find(
    config: &ProblemConfig,
    problem: &Problem,
    overrides: &PsoOverrides,
    out: Option<&Path>,
) -> Result<(SearchResult, Outcome), CliError> {
    let pso = config.pso_config(overrides)?;
    let result = run_pso(problem, &pso)?;
    let names = problem.space.names();
    let mut text = String::new();
    if let Some(name) = &config.name {
        let _ = writeln!(text, "problem:     {name}");
    }
    let _ = writeln!(
        text,
        "model:       {} parameters, {} link, seed {}",
        problem.k(),
        problem.link(),
        pso.seed
    );
    text.push_str(&render_design(&result.design, &names));
    let _ = writeln!(text, "support:     {} points", result.design.len());
    let _ = writeln!(text, "log_det:     {:.6}", result.criterion);
    render_report(&mut text, &result.report, pso.eff_bound);
    let _ = writeln!(text, "resets used: {}", result.resets_used);
    if let Some(path) = out {
        let mut file = DesignFile::from_design(&result.design, &names);
        file.log_det = Some(result.criterion);
        write_design(path, &file, &result.design, &names)?;
    }
    let code = verdict(result.report.pass);
    Ok((result, Outcome { code, text }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyResult {
    pub log_det: f64,
    pub report: EquivalenceReport,
}

/// Equivalence check of a stored design; optionally writes the
/// sensitivity profile as CSV (factor columns plus `sensitivity`).
pub fn cmd_verify(
    problem: &Problem,
    design: &Design,
    resolution: usize,
    eff_bound: f64,
    profile_out: Option<&Path>,
) -> Result<(VerifyResult, Outcome), CliError> {
    let log_det = problem.log_det(design)?;
    if log_det == f64::NEG_INFINITY {
        return Err(CliError::Numerical(
            "the design's information matrix is singular".into(),
        ));
    }
    let report = equivalence_check(problem, design, resolution, eff_bound)?;
    let names = problem.space.names();
    let mut text = render_design(design, &names);
    let _ = writeln!(text, "log_det:     {log_det:.6}");
    let _ = writeln!(text, "grid points: {} (resolution {resolution})", report.grid_points);
    let _ = writeln!(
        text,
        "argmax:      [{}]",
        report
            .argmax_setting
            .iter()
            .map(|v| format!("{v:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    render_report(&mut text, &report, eff_bound);
    if let Some(path) = profile_out {
        let rows = sensitivity_profile(problem, design, resolution)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = names.clone();
        header.push("sensitivity");
        w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
        for (s, v) in rows {
            let mut rec: Vec<String> = s.iter().map(f64::to_string).collect();
            rec.push(v.to_string());
            w.write_record(&rec).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        write_text(path, &String::from_utf8_lossy(&bytes))?;
    }
    let code = verdict(report.pass);
    Ok((VerifyResult { log_det, report }, Outcome { code, text }))
}

/// D-efficiency of `design` relative to `reference`.
pub fn cmd_efficiency(problem: &Problem, design: &Design, reference: &Design) -> Result<(f64, Outcome), CliError> {
    let eff = problem.d_efficiency(design, reference)?;
    let text = format!("D-efficiency: {eff:.4}\n");
    Ok((eff, Outcome { code: exit::PASS, text }))
}
