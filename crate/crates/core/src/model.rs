//! Linear predictors, Fisher information and the D-criterion for binary
//! GLMs.
//!
//! For a design with weights `p_i` at settings with model vectors `x_i` the
//! information matrix is `M = sum_i p_i Psi(x_i^T beta) x_i x_i^T`. The
//! sensitivity `Psi(x^T beta) x^T M^{-1} x - k` is nonpositive over the whole
//! design space exactly when the design is D-optimal, with equality at the
//! support points.

use crate::design::Design;
use crate::error::{Error, Result};
use crate::linalg::{InfoMatrix, PivotedCholesky};
use crate::link::{psi, LinkKind};
use crate::space::FactorSpace;

/// Relative slack allowed when checking settings against factor boxes.
const DOMAIN_SLACK: f64 = 1e-9;

/// Linear predictor terms: optional intercept, main effects, then pairwise
/// interactions, in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub intercept: bool,
    pub main_effects: Vec<usize>,
    pub interactions: Vec<(usize, usize)>,
    pub link: LinkKind,
}

impl ModelSpec {
    pub fn new(intercept: bool, main_effects: Vec<usize>, interactions: Vec<(usize, usize)>, link: LinkKind) -> Self {
        ModelSpec {
            intercept,
            main_effects,
            interactions,
            link,
        }
    }

    /// Intercept plus every factor as a main effect.
    pub fn main_effects(n_factors: usize, link: LinkKind) -> Self {
        Self::new(true, (0..n_factors).collect(), Vec::new(), link)
    }

    pub fn with_link(&self, link: LinkKind) -> Self {
        ModelSpec { link, ..self.clone() }
    }

    /// Number of parameters `k`.
    pub fn n_params(&self) -> usize {
        usize::from(self.intercept) + self.main_effects.len() + self.interactions.len()
    }

    pub fn validate(&self, n_factors: usize) -> Result<()> {
        if self.n_params() == 0 {
            return Err(Error::Config("model has no terms".into()));
        }
        if let Some(&i) = self.main_effects.iter().find(|&&i| i >= n_factors) {
            return Err(Error::Config(format!(
                "main effect refers to factor {i}, but only {n_factors} factors are declared"
            )));
        }
        for &(a, b) in &self.interactions {
            if a >= n_factors || b >= n_factors {
                return Err(Error::Config(format!(
                    "interaction ({a}, {b}) refers to an undeclared factor"
                )));
            }
            if a == b {
                return Err(Error::Config(format!(
                    "interaction ({a}, {b}) must join two distinct factors"
                )));
            }
        }
        Ok(())
    }

    /// Writes the model vector of `setting` into `out` (length `k`).
    pub fn fill_model_vector(&self, setting: &[f64], out: &mut [f64]) {
        let mut j = 0;
        if self.intercept {
            out[0] = 1.0;
            j = 1;
        }
        for &f in &self.main_effects {
            out[j] = setting[f];
            j += 1;
        }
        for &(a, b) in &self.interactions {
            out[j] = setting[a] * setting[b];
            j += 1;
        }
    }

    pub fn term_names(&self, factor_names: &[&str]) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_params());
        if self.intercept {
            names.push("(Intercept)".to_string());
        }
        names.extend(self.main_effects.iter().map(|&f| factor_names[f].to_string()));
        names.extend(
            self.interactions
                .iter()
                .map(|&(a, b)| format!("{}:{}", factor_names[a], factor_names[b])),
        );
        names
    }
}

/// Nominal parameter values on the linear-predictor scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

/// A locally optimal design problem: design space, model and nominal
/// parameters.
#[derive(Debug, Clone)]
pub struct Problem {
    pub space: FactorSpace,
    pub model: ModelSpec,
    pub beta: ParamVector,
}

impl Problem {
    pub fn new(space: FactorSpace, model: ModelSpec, beta: impl Into<ParamVector>) -> Result<Self> {
        let beta = beta.into();
        model.validate(space.n_factors())?;
        if beta.len() != model.n_params() {
            return Err(Error::Config(format!(
                "beta has {} entries but the model has {} parameters",
                beta.len(),
                model.n_params()
            )));
        }
        if beta.0.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("beta must be finite".into()));
        }
        Ok(Problem { space, model, beta })
    }

    pub fn k(&self) -> usize {
        self.model.n_params()
    }

    pub fn link(&self) -> LinkKind {
        self.model.link
    }

    /// Same space and parameters under a different link.
    pub fn with_link(&self, link: LinkKind) -> Problem {
        Problem {
            space: self.space.clone(),
            model: self.model.with_link(link),
            beta: self.beta.clone(),
        }
    }

    pub fn with_beta(&self, beta: Vec<f64>) -> Result<Problem> {
        Problem::new(self.space.clone(), self.model.clone(), beta)
    }

    fn check_setting(&self, setting: &[f64]) -> Result<()> {
        if setting.len() != self.space.n_factors() {
            return Err(Error::Domain(format!(
                "setting has {} coordinates, expected {}",
                setting.len(),
                self.space.n_factors()
            )));
        }
        for (f, &v) in self.space.factors().iter().zip(setting) {
            let slack = DOMAIN_SLACK * f.range();
            let inside = if f.is_discrete() {
                f.contains(f.snap(v)) && (f.snap(v) - v).abs() <= slack
            } else {
                v >= f.lo() - slack && v <= f.hi() + slack
            };
            if !inside || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "value {v} is outside the domain of factor `{}`",
                    f.name
                )));
            }
        }
        Ok(())
    }

    /// Model vector `x` of a setting.
    pub fn model_vector(&self, setting: &[f64]) -> Result<Vec<f64>> {
        self.check_setting(setting)?;
        let mut x = vec![0.0; self.k()];
        self.model.fill_model_vector(setting, &mut x);
        Ok(x)
    }

    fn eta_of(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.beta.0).map(|(a, b)| a * b).sum()
    }

    /// `Psi(x^T beta)` for a model vector `x`.
    fn weight_of(&self, x: &[f64]) -> Result<f64> {
        psi(self.model.link, self.eta_of(x))
    }

    /// Checks dimensions and domain membership of every support point.
    pub fn check_design(&self, design: &Design) -> Result<()> {
        if design.dim() != self.space.n_factors() {
            return Err(Error::Contract(format!(
                "design has {} coordinates per point but the space has {} factors",
                design.dim(),
                self.space.n_factors()
            )));
        }
        for s in design.settings() {
            self.check_setting(s)?;
        }
        Ok(())
    }

    /// `sum_i p_i Psi(x_i^T beta) x_i x_i^T`.
    pub fn information_matrix(&self, design: &Design) -> Result<InfoMatrix> {
        self.check_design(design)?;
        self.information_matrix_unchecked(design)
    }

    /// Information matrix without domain checks (dimensions must agree).
    pub fn information_matrix_unchecked(&self, design: &Design) -> Result<InfoMatrix> {
        let k = self.k();
        let mut m = InfoMatrix::zeros(k);
        let mut x = vec![0.0; k];
        for p in design.points() {
            if p.weight == 0.0 {
                continue;
            }
            self.model.fill_model_vector(&p.setting, &mut x);
            let w = self.weight_of(&x)?;
            m.add_outer(p.weight * w, &x);
        }
        Ok(m)
    }

    /// Log-determinant of the design's information matrix; negative
    /// infinity when singular.
    pub fn log_det(&self, design: &Design) -> Result<f64> {
        Ok(self.information_matrix(design)?.log_det())
    }

    /// Sensitivity `Psi(x^T beta) x^T M^{-1} x - k` at `setting`.
    pub fn sensitivity(&self, setting: &[f64], design: &Design) -> Result<f64> {
        let eval = self.sensitivity_evaluator(design)?;
        self.check_setting(setting)?;
        eval.at(setting)
    }

    /// Factorizes the information matrix once for repeated sensitivity
    /// evaluations.
    pub fn sensitivity_evaluator(&self, design: &Design) -> Result<SensitivityEvaluator<'_>> {
        let m = self.information_matrix(design)?;
        let chol = m.cholesky().ok_or(Error::Singular)?;
        Ok(SensitivityEvaluator { problem: self, chol })
    }

    /// `(det M(design) / det M(reference))^{1/k}`.
    pub fn d_efficiency(&self, design: &Design, reference: &Design) -> Result<f64> {
        let reference_ld = self.log_det(reference)?;
        if reference_ld == f64::NEG_INFINITY {
            return Err(Error::Contract("reference design is singular".into()));
        }
        let ld = self.log_det(design)?;
        if ld == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok(((ld - reference_ld) / self.k() as f64).exp())
    }
}

/// Sensitivity function of a fixed design.
#[derive(Debug, Clone)]
pub struct SensitivityEvaluator<'a> {
    problem: &'a Problem,
    chol: PivotedCholesky,
}

impl SensitivityEvaluator<'_> {
    /// Sensitivity at `setting` (no domain check).
    pub fn at(&self, setting: &[f64]) -> Result<f64> {
        let mut x = vec![0.0; self.problem.k()];
        self.at_with_buffer(setting, &mut x)
    }

    pub fn at_with_buffer(&self, setting: &[f64], x: &mut [f64]) -> Result<f64> {
        self.problem.model.fill_model_vector(setting, x);
        let w = self.problem.weight_of(x)?;
        Ok(w * self.chol.quad_form_inv(x) - self.problem.k() as f64)
    }

    pub fn log_det(&self) -> f64 {
        self.chol.log_det()
    }
}

/// Log-determinant with a singularity sentinel.
pub fn log_det(m: &InfoMatrix) -> f64 {
    m.log_det()
}

/// Lower bound `exp(-theta / k)` on the D-efficiency of a design whose
/// sensitivity never exceeds `theta`.
pub fn efficiency_lower_bound(theta: f64, k: usize) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(Error::Contract(format!("theta must be nonnegative, got {theta}")));
    }
    if k == 0 {
        return Err(Error::Contract("k must be positive".into()));
    }
    Ok((-theta / k as f64).exp())
}
