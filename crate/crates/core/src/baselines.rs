//! Weight-only optimizers over a fixed candidate set: the multiplicative
//! algorithm and the Fedorov-Wynn vertex-direction exchange.
//!
//! Both work with the scaled vectors `v_i = sqrt(Psi_i) x_i`, so that
//! `M(w) = sum_i w_i v_i v_i^T` and the variance function is
//! `d_i(w) = v_i^T M(w)^{-1} v_i`. At a D-optimal weighting `max_i d_i = k`.

use rayon::prelude::*;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::linalg::InfoMatrix;
use crate::model::Problem;

/// Weights below this are not counted as support by [`effective_support`].
pub const EFFECTIVE_SUPPORT_TOL: f64 = 1e-6;

/// Candidate points for weight optimization.
#[derive(Debug, Clone)]
pub struct CandidateSet<'a> {
    problem: &'a Problem,
    points: Vec<Vec<f64>>,
    scaled: Vec<Vec<f64>>,
}

impl<'a> CandidateSet<'a> {
    /// Validates that every candidate is feasible and distinct.
    pub fn new(problem: &'a Problem, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Contract("empty candidate set".into()));
        }
        let mut scaled = Vec::with_capacity(points.len());
        for p in &points {
            let x = problem.model_vector(p)?;
            if !problem.space.contains(p, crate::space::GRID_TOL) {
                return Err(Error::Domain(format!("candidate {p:?} violates a constraint")));
            }
            let eta: f64 = x.iter().zip(problem.beta.as_slice()).map(|(a, b)| a * b).sum();
            let s = crate::link::psi(problem.link(), eta)?.sqrt();
            scaled.push(x.into_iter().map(|v| v * s).collect());
        }
        let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
        sorted.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Contract("candidate points must be distinct".into()));
        }
        Ok(CandidateSet {
            problem,
            points,
            scaled,
        })
    }

    /// The constrained verification grid of the problem's space.
    pub fn from_grid(problem: &'a Problem, resolution: usize) -> Result<Self> {
        Self::new(problem, problem.space.verification_grid(resolution).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    fn info(&self, w: &[f64]) -> InfoMatrix {
        let mut m = InfoMatrix::zeros(self.problem.k());
        for (v, &wi) in self.scaled.iter().zip(w) {
            if wi > 0.0 {
                m.add_outer(wi, v);
            }
        }
        m
    }

    /// Variance function at every candidate, plus the log-determinant.
    fn variances(&self, w: &[f64]) -> Result<(Vec<f64>, f64)> {
        let chol = self.info(w).cholesky().ok_or(Error::Singular)?;
        let d = self.scaled.par_iter().map(|v| chol.quad_form_inv(v)).collect();
        Ok((d, chol.log_det()))
    }

    pub fn log_det(&self, w: &[f64]) -> f64 {
        self.info(w).log_det()
    }

    /// Design supported on the candidates with the given weights.
    pub fn design(&self, w: &[f64]) -> Result<Design> {
        Design::from_parts(self.points.clone(), w.to_vec())
    }
}

/// Outcome of a baseline run.
#[derive(Debug, Clone)]
pub struct WeightResult {
    pub weights: Vec<f64>,
    pub log_det: f64,
    pub iterations: usize,
    /// `max_i d_i - k` at the returned weights.
    pub max_excess: f64,
    /// Log-determinant after every iteration (starting at the uniform start).
    pub trace: Vec<f64>,
}

impl WeightResult {
    pub fn effective_support(&self) -> usize {
        effective_support(&self.weights)
    }
}

pub fn effective_support(weights: &[f64]) -> usize {
    weights.iter().filter(|&&w| w > EFFECTIVE_SUPPORT_TOL).count()
}

fn check_size(cands: &CandidateSet<'_>) -> Result<()> {
    let k = cands.problem.k();
    if cands.len() < k {
        return Err(Error::Contract(format!(
            "{} candidates cannot support a {k}-parameter model",
            cands.len()
        )));
    }
    Ok(())
}

fn argmax_lowest(d: &[f64]) -> (usize, f64) {
    d.iter().copied().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |best, (i, v)| if v > best.1 { (i, v) } else { best },
    )
}

/// Multiplicative algorithm `w_i <- w_i d_i / k`, from uniform weights,
/// until the largest relative weight change falls below `tol`.
pub fn multiplicative(cands: &CandidateSet<'_>, max_iter: usize, tol: f64) -> Result<WeightResult> {
    let n = cands.len();
    multiplicative_from(cands, &vec![1.0 / n as f64; n], max_iter, tol)
}

/// [`multiplicative`] started from `initial` (normalized internally).
pub fn multiplicative_from(
    cands: &CandidateSet<'_>,
    initial: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<WeightResult> {
    check_size(cands)?;
    let k = cands.problem.k() as f64;
    if initial.len() != cands.len() || initial.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Contract(
            "initial weights must be nonnegative, one per candidate".into(),
        ));
    }
    let total: f64 = initial.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Contract("initial weights sum to zero".into()));
    }
    let mut w: Vec<f64> = initial.iter().map(|v| v / total).collect();
    let (mut d, mut ld) = cands.variances(&w)?;
    let mut trace = vec![ld];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut next: Vec<f64> = w.iter().zip(&d).map(|(wi, di)| wi * di / k).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change = w
            .iter()
            .zip(&next)
            .filter(|(old, _)| **old > 0.0)
            .map(|(old, new)| ((new - old) / old).abs())
            .fold(0.0, f64::max);
        w = next;
        (d, ld) = cands.variances(&w)?;
        trace.push(ld);
        if change < tol {
            break;
        }
    }
    let max_excess = argmax_lowest(&d).1 - k;
    Ok(WeightResult {
        weights: w,
        log_det: ld,
        iterations,
        max_excess,
        trace,
    })
}

/// Fedorov-Wynn: repeatedly move mass toward the candidate of largest
/// variance with the exact D-optimal step `alpha = (d/k - 1) / (d - 1)`,
/// stopping once `d_max / k - 1 < tol`.
pub fn fedorov_wynn(cands: &CandidateSet<'_>, max_iter: usize, tol: f64) -> Result<WeightResult> {
    check_size(cands)?;
    let n = cands.len();
    let k = cands.problem.k() as f64;
    let mut w = vec![1.0 / n as f64; n];
    let (mut d, mut ld) = cands.variances(&w)?;
    let mut trace = vec![ld];
    let mut iterations = 0;
    loop {
        let (j, dmax) = argmax_lowest(&d);
        if dmax / k - 1.0 < tol || iterations >= max_iter {
            return Ok(WeightResult {
                weights: w,
                log_det: ld,
                iterations,
                max_excess: dmax - k,
                trace,
            });
        }
        iterations += 1;
        let alpha = (dmax / k - 1.0) / (dmax - 1.0);
        w.iter_mut().for_each(|v| *v *= 1.0 - alpha);
        w[j] += alpha;
        (d, ld) = cands.variances(&w)?;
        trace.push(ld);
    }
}
