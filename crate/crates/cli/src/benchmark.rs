//! Random-parameter benchmarks comparing the swarm with the candidate-set
//! baselines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use psodesign_core::baselines::effective_support;
use psodesign_core::{
    fedorov_wynn, multiplicative, run_pso, CandidateSet, Factor, FactorSpace, LinkKind, ModelSpec, Problem, PsoConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::PsoOverrides;
use crate::error::CliError;

/// Relative tolerance for counting two criterion values as equal.
pub const AGREEMENT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `n` binary factors, main effects, logit.
    Factorial(usize),
    /// Two continuous factors on `[-1, 1]`, main effects, logit.
    Continuous2,
}

impl FromStr for Family {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "2x2" | "2^2" => Ok(Family::Factorial(2)),
            "2x3" | "2^3" => Ok(Family::Factorial(3)),
            "2x4" | "2^4" => Ok(Family::Factorial(4)),
            "continuous2" => Ok(Family::Continuous2),
            other => Err(CliError::Config(format!(
                "unknown family `{other}` (expected 2x2, 2x3, 2x4 or continuous2)"
            ))),
        }
    }
}

impl Family {
    pub fn space(self) -> FactorSpace {
        let factors = match self {
            Family::Factorial(n) => (1..=n).map(|i| Factor::binary(format!("x{i}"))).collect(),
            Family::Continuous2 => (1..=2)
                .map(|i| Factor::continuous(format!("x{i}"), -1.0, 1.0).expect("valid bounds"))
                .collect(),
        };
        FactorSpace::unconstrained(factors).expect("box spaces are feasible")
    }

    /// Swarm settings used for the family unless overridden.
    pub fn pso_defaults(self) -> PsoConfig {
        let base = PsoConfig {
            max_iter: 100,
            converge_tol: 1e-5,
            ..PsoConfig::default()
        };
        match self {
            Family::Factorial(n) => PsoConfig {
                n_particles: match n {
                    2 => 3,
                    3 => 8,
                    _ => 25,
                },
                max_resets: 200,
                ..base
            },
            Family::Continuous2 => PsoConfig {
                n_particles: 15,
                max_resets: 100,
                n_candidate_points: Some(6),
                eff_bound: 0.999,
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Pso,
    Multiplicative,
    FedorovWynn,
}

impl FromStr for Algorithm {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "pso" => Ok(Algorithm::Pso),
            "multiplicative" => Ok(Algorithm::Multiplicative),
            "fedorov-wynn" | "fw" => Ok(Algorithm::FedorovWynn),
            other => Err(CliError::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pso => "pso",
            Algorithm::Multiplicative => "multiplicative",
            Algorithm::FedorovWynn => "fedorov-wynn",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub family: Family,
    pub n_problems: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    /// Grid points per continuous factor for the baselines.
    pub grid_points: usize,
    pub baseline_max_iter: usize,
    pub baseline_tol: f64,
    pub pso: PsoOverrides,
}

impl BenchmarkSpec {
    pub fn new(family: Family, n_problems: usize, seed: u64) -> Self {
        BenchmarkSpec {
            family,
            n_problems,
            algorithms: vec![Algorithm::Pso, Algorithm::Multiplicative, Algorithm::FedorovWynn],
            seed,
            grid_points: 21,
            baseline_max_iter: 1000,
            baseline_tol: 1e-5,
            pso: PsoOverrides::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoRun {
    pub log_det: f64,
    pub support: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub beta: Vec<f64>,
    pub runs: BTreeMap<Algorithm, AlgoRun>,
}

pub fn rel_agree(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub spec_family: Family,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    /// Problems where both algorithms ran and agree within `tol` relative.
    pub fn agreement(&self, a: Algorithm, b: Algorithm, tol: f64) -> usize {
        self.rows
            .iter()
            .filter(|r| match (r.runs.get(&a), r.runs.get(&b)) {
                (Some(x), Some(y)) => rel_agree(x.log_det, y.log_det, tol),
                _ => false,
            })
            .count()
    }

    /// Support-size histogram of one algorithm.
    pub fn support_histogram(&self, a: Algorithm) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for r in &self.rows {
            if let Some(run) = r.runs.get(&a) {
                *h.entry(run.support).or_insert(0) += 1;
            }
        }
        h
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let algos: Vec<Algorithm> = self
            .rows
            .first()
            .map(|r| r.runs.keys().copied().collect())
            .unwrap_or_default();
        let _ = writeln!(s, "problems: {}", self.rows.len());
        for &a in &algos {
            let secs: f64 = self.rows.iter().filter_map(|r| r.runs.get(&a)).map(|r| r.seconds).sum();
            let hist = self
                .support_histogram(a)
                .iter()
                .map(|(k, v)| format!("{k}:{v}"))
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(s, "{:>15}  time {secs:>8.3}s  support {hist}", a.name());
        }
        for (i, &a) in algos.iter().enumerate() {
            for &b in &algos[i + 1..] {
                let _ = writeln!(
                    s,
                    "agreement {} vs {} (rel {AGREEMENT_TOL:e}): {}/{}",
                    a.name(),
                    b.name(),
                    self.agreement(a, b, AGREEMENT_TOL),
                    self.rows.len()
                );
            }
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let algos: Vec<Algorithm> = self
            .rows
            .first()
            .map(|r| r.runs.keys().copied().collect())
            .unwrap_or_default();
        let k = self.rows.first().map_or(0, |r| r.beta.len());
        let mut header: Vec<String> = (0..k).map(|i| format!("beta{i}")).collect();
        for a in &algos {
            header.push(format!("{}_log_det", a.name()));
            header.push(format!("{}_support", a.name()));
        }
        s.push_str(&header.join(","));
        s.push('\n');
        for r in &self.rows {
            let mut rec: Vec<String> = r.beta.iter().map(f64::to_string).collect();
            for a in &algos {
                let run = &r.runs[a];
                rec.push(run.log_det.to_string());
                rec.push(run.support.to_string());
            }
            s.push_str(&rec.join(","));
            s.push('\n');
        }
        s
    }
}

fn run_one(spec: &BenchmarkSpec, index: usize, beta: Vec<f64>) -> Result<BenchmarkRow, CliError> {
    let space = spec.family.space();
    let model = ModelSpec::main_effects(space.n_factors(), LinkKind::Logit);
    let problem = Problem::new(space, model, beta.clone())?;
    let mut runs = BTreeMap::new();
    let cands = if spec.algorithms.iter().any(|a| *a != Algorithm::Pso) {
        Some(CandidateSet::from_grid(&problem, spec.grid_points)?)
    } else {
        None
    };
    for &a in &spec.algorithms {
        let t = Instant::now();
        let (log_det, support) = match a {
            Algorithm::Pso => {
                let mut cfg = spec.pso.apply(&spec.family.pso_defaults());
                cfg.seed = spec.seed.wrapping_add(index as u64);
                let r = run_pso(&problem, &cfg)?;
                (r.criterion, r.design.len())
            }
            Algorithm::Multiplicative => {
                let r = multiplicative(
                    cands.as_ref().expect("built above"),
                    spec.baseline_max_iter,
                    spec.baseline_tol,
                )?;
                (r.log_det, effective_support(&r.weights))
            }
            Algorithm::FedorovWynn => {
                let r = fedorov_wynn(
                    cands.as_ref().expect("built above"),
                    spec.baseline_max_iter,
                    spec.baseline_tol,
                )?;
                (r.log_det, effective_support(&r.weights))
            }
        };
        runs.insert(
            a,
            AlgoRun {
                log_det,
                support,
                seconds: t.elapsed().as_secs_f64(),
            },
        );
    }
    Ok(BenchmarkRow { beta, runs })
}

/// Draws `n_problems` parameter vectors from `U(-3, 3)` and runs every
/// selected algorithm on each. Rows come back in problem order.
pub fn cmd_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkReport, CliError> {
    if spec.algorithms.is_empty() {
        return Err(CliError::Config("no algorithms selected".into()));
    }
    let k = spec.family.space().n_factors() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let betas: Vec<Vec<f64>> = (0..spec.n_problems)
        .map(|_| (0..k).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    let rows = betas
        .into_par_iter()
        .enumerate()
        .map(|(i, b)| run_one(spec, i, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchmarkReport {
        spec_family: spec.family,
        rows,
    })
}
