//! Equivalence-theorem checks and design diagnostics.

use rayon::prelude::*;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::link::LinkKind;
use crate::model::{efficiency_lower_bound, Problem};
use crate::pso::{run_pso, PsoConfig};
use crate::space::FactorSpace;

/// Outcome of [`equivalence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// `max(0, max sensitivity)` over the grid and the support.
    pub theta: f64,
    /// Largest sensitivity found, without the clamp at zero.
    pub max_sensitivity: f64,
    /// Where the maximum was found (lowest grid point on ties).
    pub argmax_setting: Vec<f64>,
    /// `exp(-theta / k)`.
    pub lower_bound: f64,
    pub pass: bool,
    /// Sensitivity at each support point, in design order.
    pub support_residuals: Vec<f64>,
    /// Feasible grid points scanned.
    pub grid_points: usize,
}

impl EquivalenceReport {
    pub fn max_abs_support_residual(&self) -> f64 {
        self.support_residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

fn grid_setting(axes: &[Vec<f64>], mut idx: usize, out: &mut [f64]) {
    for d in (0..axes.len()).rev() {
        let n = axes[d].len();
        out[d] = axes[d][idx % n];
        idx /= n;
    }
}

// larger value wins; equal values go to the lower index
fn better(a: Option<(f64, usize)>, b: Option<(f64, usize)>) -> Option<(f64, usize)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

/// Maximum sensitivity over the feasible verification grid as
/// `(value, linear grid index, feasible points)`.
fn grid_maximum(problem: &Problem, design: &Design, resolution: usize) -> Result<(Option<(f64, usize)>, usize)> {
    let eval = problem.sensitivity_evaluator(design)?;
    let space = &problem.space;
    let axes = space.grid_axes(resolution);
    let total: usize = axes.iter().map(Vec::len).product();
    let f = space.n_factors();
    let k = problem.k();
    let (best, count) = (0..total)
        .into_par_iter()
        .map_init(
            || (vec![0.0; f], vec![0.0; k]),
            |(s, x), idx| -> Result<(Option<(f64, usize)>, usize)> {
                grid_setting(&axes, idx, s);
                if !space.on_grid_feasible(s) {
                    return Ok((None, 0));
                }
                Ok((Some((eval.at_with_buffer(s, x)?, idx)), 1))
            },
        )
        .try_reduce(|| (None, 0), |a, b| Ok((better(a.0, b.0), a.1 + b.1)))?;
    Ok((best, count))
}

/// Checks a design against the equivalence theorem.
///
/// Sensitivities are computed at every support point and over the
/// verification grid (`resolution` values per continuous factor times all
/// discrete levels, filtered by the constraints). The design passes when
/// `exp(-theta / k) >= eff_bound`.
pub fn equivalence_check(
    problem: &Problem,
    design: &Design,
    resolution: usize,
    eff_bound: f64,
) -> Result<EquivalenceReport> {
    if resolution < 2 {
        return Err(Error::Contract("grid resolution must be at least 2".into()));
    }
    if !(eff_bound > 0.0 && eff_bound < 1.0) {
        return Err(Error::Contract(format!("eff_bound {eff_bound} outside (0, 1)")));
    }
    problem.check_design(design)?;
    let eval = problem.sensitivity_evaluator(design)?;
    let support_residuals = design.settings().map(|s| eval.at(s)).collect::<Result<Vec<_>>>()?;

    let (grid_best, grid_points) = grid_maximum(problem, design, resolution)?;
    let axes = problem.space.grid_axes(resolution);
    let mut best: Option<(f64, Vec<f64>)> = grid_best.map(|(v, idx)| {
        let mut s = vec![0.0; axes.len()];
        grid_setting(&axes, idx, &mut s);
        (v, s)
    });
    for (r, s) in support_residuals.iter().zip(design.settings()) {
        let replace = match &best {
            None => true,
            Some((v, b)) => *r > *v || (*r == *v && lex_less(s, b)),
        };
        if replace {
            best = Some((*r, s.to_vec()));
        }
    }
    let (max_sensitivity, argmax_setting) = best.expect("a design has at least one point");
    if !max_sensitivity.is_finite() {
        return Err(Error::Singular);
    }
    let theta = max_sensitivity.max(0.0);
    let lower_bound = efficiency_lower_bound(theta, problem.k())?;
    Ok(EquivalenceReport {
        theta,
        max_sensitivity,
        argmax_setting,
        lower_bound,
        pass: lower_bound >= eff_bound,
        support_residuals,
        grid_points,
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Sensitivity at every feasible grid point, in grid order.
pub fn sensitivity_profile(problem: &Problem, design: &Design, resolution: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let eval = problem.sensitivity_evaluator(design)?;
    problem
        .space
        .verification_grid(resolution)
        .map(|s| {
            let v = eval.at(&s)?;
            Ok((s, v))
        })
        .collect()
}

/// `true` iff the design has exactly `k` points of weight at least
/// `weight_tol`.
pub fn minimal_support_classify(design: &Design, k: usize, weight_tol: f64) -> bool {
    design.support_size(weight_tol) == k
}

/// `true` iff every continuous coordinate of every support point (weight at
/// least `weight_tol`) sits at an end of its range.
pub fn boundary_supported(design: &Design, space: &FactorSpace, weight_tol: f64) -> bool {
    design.points().iter().filter(|p| p.weight >= weight_tol).all(|p| {
        space.factors().iter().zip(&p.setting).all(|(f, &v)| {
            f.is_discrete() || {
                let tol = 1e-6 * f.range();
                (v - f.lo()).abs() <= tol || (v - f.hi()).abs() <= tol
            }
        })
    })
}

/// D-efficiency of `design` when the true link is `true_link`, measured
/// against a design optimized by the swarm under that link.
pub fn efficiency_under_link(
    design: &Design,
    problem: &Problem,
    true_link: LinkKind,
    config: &PsoConfig,
) -> Result<f64> {
    let truth = problem.with_link(true_link);
    let reference = run_pso(&truth, config)?;
    truth.d_efficiency(design, &reference.design)
}
