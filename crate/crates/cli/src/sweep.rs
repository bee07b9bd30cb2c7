//! Parameter sweeps over `(beta1, beta2)` for three-parameter models.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use psodesign_core::{efficiency_under_link, minimal_support_classify, run_pso, LinkKind, Problem, PsoConfig};
use rayon::prelude::*;

use crate::design_io::write_text;
use crate::error::CliError;

/// Cells computed between checkpoints of the output file.
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum SweepMode {
    /// Efficiency of the assumed-link design under each true link.
    Misspec(Vec<LinkKind>),
    /// Whether the optimal design is minimally supported.
    MinimalSupport,
}

impl SweepMode {
    pub fn columns(&self) -> Vec<String> {
        match self {
            SweepMode::Misspec(links) => links.iter().map(|l| l.name().to_string()).collect(),
            SweepMode::MinimalSupport => vec!["minimal".into(), "support".into()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub mode: SweepMode,
    pub beta0: f64,
    pub step: f64,
    pub beta1: (f64, f64),
    pub beta2: (f64, f64),
}

impl SweepSpec {
    pub fn new(mode: SweepMode, beta0: f64, step: f64) -> Self {
        SweepSpec {
            mode,
            beta0,
            step,
            beta1: (-1.5, 1.5),
            beta2: (-3.0, 3.0),
        }
    }

    fn axis(&self, (lo, hi): (f64, f64)) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0) || !(hi >= lo) {
            return Err(CliError::Config(
                "sweep step must be positive and ranges nonempty".into(),
            ));
        }
        let n = ((hi - lo) / self.step + 1e-9).floor() as usize;
        // snap to the step grid so that cells print cleanly
        Ok((0..=n)
            .map(|i| ((lo + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect())
    }

    /// `(beta1, beta2)` cells in canonical order (beta1 slowest).
    pub fn cells(&self) -> Result<Vec<(f64, f64)>, CliError> {
        let a = self.axis(self.beta1)?;
        let b = self.axis(self.beta2)?;
        Ok(a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub beta1: f64,
    pub beta2: f64,
    pub values: Vec<f64>,
}

fn run_cell(
    problem: &Problem,
    spec: &SweepSpec,
    pso: &PsoConfig,
    index: usize,
    (b1, b2): (f64, f64),
) -> Result<SweepRow, CliError> {
    let p = problem.with_beta(vec![spec.beta0, b1, b2])?;
    let cfg = PsoConfig {
        seed: pso.seed.wrapping_add(index as u64),
        ..pso.clone()
    };
    let found = run_pso(&p, &cfg)?;
    let values = match &spec.mode {
        SweepMode::Misspec(links) => links
            .iter()
            .map(|&l| efficiency_under_link(&found.design, &p, l, &cfg))
            .collect::<Result<Vec<_>, _>>()?,
        SweepMode::MinimalSupport => {
            let minimal = minimal_support_classify(&found.design, p.k(), cfg.weight_tol);
            vec![if minimal { 1.0 } else { 0.0 }, found.design.len() as f64]
        }
    };
    Ok(SweepRow {
        beta1: b1,
        beta2: b2,
        values,
    })
}

fn key(b1: f64, b2: f64) -> (i64, i64) {
    ((b1 * 1e6).round() as i64, (b2 * 1e6).round() as i64)
}

fn render_rows(columns: &[String], rows: &BTreeMap<usize, SweepRow>) -> String {
    let mut s = String::from("beta1,beta2");
    for c in columns {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for r in rows.values() {
        let _ = write!(s, "{},{}", r.beta1, r.beta2);
        for v in &r.values {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

fn read_existing(path: &Path, columns: &[String]) -> Result<Vec<SweepRow>, CliError> {
    let Ok(text) = fs::read_to_string(path) else {
        return Ok(Vec::new());
    };
    let mut lines = text.lines();
    let expected = render_rows(columns, &BTreeMap::new());
    if lines.next() != expected.lines().next() {
        return Err(CliError::Config(format!(
            "{}: existing file has different columns; remove it or choose another output",
            path.display()
        )));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v = l
                .split(',')
                .map(|x| x.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Config(format!("{}: malformed row `{l}`", path.display())))?;
            if v.len() != columns.len() + 2 {
                return Err(CliError::Config(format!("{}: malformed row `{l}`", path.display())));
            }
            Ok(SweepRow {
                beta1: v[0],
                beta2: v[1],
                values: v[2..].to_vec(),
            })
        })
        .collect()
}

/// Runs every cell, reusing rows already present in `out` and rewriting
/// it (sorted by cell) after each batch so an interrupted sweep resumes.
pub fn cmd_sweep(
    problem: &Problem,
    pso: &PsoConfig,
    spec: &SweepSpec,
    out: Option<&Path>,
) -> Result<Vec<SweepRow>, CliError> {
    if problem.k() != 3 {
        return Err(CliError::Config(format!(
            "sweeps vary beta1 and beta2 of a three-parameter model; this model has {}",
            problem.k()
        )));
    }
    let cells = spec.cells()?;
    let columns = spec.mode.columns();
    let index: BTreeMap<(i64, i64), usize> = cells.iter().enumerate().map(|(i, &(a, b))| (key(a, b), i)).collect();
    let mut done: BTreeMap<usize, SweepRow> = BTreeMap::new();
    if let Some(path) = out {
        for row in read_existing(path, &columns)? {
            if let Some(&i) = index.get(&key(row.beta1, row.beta2)) {
                done.insert(i, row);
            }
        }
    }
    let todo: Vec<usize> = (0..cells.len()).filter(|i| !done.contains_key(i)).collect();
    for chunk in todo.chunks(CHUNK) {
        let rows = chunk
            .par_iter()
            .map(|&i| run_cell(problem, spec, pso, i, cells[i]).map(|r| (i, r)))
            .collect::<Result<Vec<_>, _>>()?;
        done.extend(rows);
        if let Some(path) = out {
            write_text(path, &render_rows(&columns, &done))?;
        }
    }
    Ok(done.into_values().collect())
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub const REPORT_QUANTILES: [f64; 5] = [0.99, 0.95, 0.90, 0.80, 0.70];

/// Quantile table of each value column.
pub fn render_summary(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let columns = spec.mode.columns();
    let _ = writeln!(s, "cells: {}", rows.len());
    if rows.is_empty() {
        return s;
    }
    match spec.mode {
        SweepMode::Misspec(_) => {
            let _ = write!(s, "{:>8}", "quantile");
            for c in &columns {
                let _ = write!(s, " {c:>8}");
            }
            s.push('\n');
            for q in REPORT_QUANTILES {
                let _ = write!(s, "{q:>8.2}");
                for j in 0..columns.len() {
                    let col: Vec<f64> = rows.iter().map(|r| r.values[j]).collect();
                    let _ = write!(s, " {:>8.4}", quantile(&col, q));
                }
                s.push('\n');
            }
        }
        SweepMode::MinimalSupport => {
            let minimal = rows.iter().filter(|r| r.values[0] == 1.0).count();
            let _ = writeln!(s, "minimally supported: {minimal}/{}", rows.len());
        }
    }
    s
}
