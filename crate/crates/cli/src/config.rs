//! JSON problem definitions.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use psodesign_core::{Factor, FactorSpace, LinearConstraint, LinkKind, ModelSpec, Problem, PsoConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub name: String,
    /// Levels of a discrete factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    /// Bounds of a continuous factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

/// `lo <= coeffs . x <= hi`; a missing bound is unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_true")]
    pub intercept: bool,
    /// Factor names with a main effect; all factors when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub main_effects: Option<Vec<String>>,
    /// Two-factor interactions as pairs of factor names.
    #[serde(default)]
    pub interactions: Vec<[String; 2]>,
    #[serde(default = "default_link")]
    pub link: LinkKind,
}

fn default_link() -> LinkKind {
    LinkKind::Logit
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            intercept: true,
            main_effects: None,
            interactions: Vec::new(),
            link: LinkKind::Logit,
        }
    }
}

/// Optional overrides of the swarm defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoOverrides {
    pub n_particles: Option<usize>,
    pub max_iter: Option<usize>,
    pub max_resets: Option<usize>,
    pub converge_tol: Option<f64>,
    pub eff_bound: Option<f64>,
    pub phi1: Option<f64>,
    pub phi2: Option<f64>,
    pub inertia_start: Option<f64>,
    pub inertia_step: Option<f64>,
    pub inertia_floor: Option<f64>,
    pub n_candidate_points: Option<usize>,
    pub seed: Option<u64>,
    pub check_resolution: Option<usize>,
    pub weight_tol: Option<f64>,
    pub dist_tol: Option<f64>,
    pub polish_weights: Option<bool>,
}

impl PsoOverrides {
    pub fn apply(&self, base: &PsoConfig) -> PsoConfig {
        let mut c = base.clone();
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f {
                    c.$f = v;
                }
            )*};
        }
        set!(
            n_particles,
            max_iter,
            max_resets,
            converge_tol,
            eff_bound,
            phi1,
            phi2,
            inertia_start,
            inertia_step,
            inertia_floor,
            seed,
            check_resolution,
            weight_tol,
            dist_tol,
            polish_weights
        );
        if self.n_candidate_points.is_some() {
            c.n_candidate_points = self.n_candidate_points;
        }
        c
    }

    /// Field-wise `other` over `self`.
    pub fn merge(&self, other: &PsoOverrides) -> PsoOverrides {
        macro_rules! pick {
            ($($f:ident),*) => {
                PsoOverrides { $($f: other.$f.or(self.$f)),* }
            };
        }
        pick!(
            n_particles,
            max_iter,
            max_resets,
            converge_tol,
            eff_bound,
            phi1,
            phi2,
            inertia_start,
            inertia_step,
            inertia_floor,
            n_candidate_points,
            seed,
            check_resolution,
            weight_tol,
            dist_tol,
            polish_weights
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub factors: Vec<FactorConfig>,
    #[serde(default)]
    pub constraints: Vec<ConstraintConfig>,
    #[serde(default)]
    pub model: ModelConfig,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub pso: PsoOverrides,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid problem file: {e}")))
    }

    pub fn factor_space(&self) -> Result<FactorSpace, CliError> {
        let mut factors = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let factor = match (&f.levels, f.lo, f.hi) {
                (Some(levels), None, None) => Factor::discrete(f.name.clone(), levels.clone()),
                (None, Some(lo), Some(hi)) => Factor::continuous(f.name.clone(), lo, hi),
                _ => {
                    return Err(CliError::Config(format!(
                        "factors.{}: give either `levels` or both `lo` and `hi`",
                        f.name
                    )))
                }
            };
            factors.push(factor.map_err(|e| CliError::Config(format!("factors.{}: {e}", f.name)))?);
        }
        let mut seen = HashMap::new();
        for (i, f) in self.factors.iter().enumerate() {
            if seen.insert(f.name.as_str(), i).is_some() {
                return Err(CliError::Config(format!("factors: duplicate name `{}`", f.name)));
            }
        }
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                LinearConstraint::new(
                    c.coeffs.clone(),
                    c.lo.unwrap_or(f64::NEG_INFINITY),
                    c.hi.unwrap_or(f64::INFINITY),
                )
            })
            .collect();
        FactorSpace::new(factors, constraints).map_err(|e| CliError::Config(format!("constraints: {e}")))
    }

    fn factor_index(&self, name: &str, key: &str) -> Result<usize, CliError> {
        self.factors
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| CliError::Config(format!("{key}: unknown factor `{name}`")))
    }

    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let m = &self.model;
        let main_effects = match &m.main_effects {
            None => (0..self.factors.len()).collect(),
            Some(names) => names
                .iter()
                .map(|n| self.factor_index(n, "model.main_effects"))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let interactions = m
            .interactions
            .iter()
            .map(|[a, b]| {
                Ok((
                    self.factor_index(a, "model.interactions")?,
                    self.factor_index(b, "model.interactions")?,
                ))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(ModelSpec::new(m.intercept, main_effects, interactions, m.link))
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let space = self.factor_space()?;
        let model = self.model_spec()?;
        if self.beta.len() != model.n_params() {
            return Err(CliError::Config(format!(
                "beta: expected {} values for the model, got {}",
                model.n_params(),
                self.beta.len()
            )));
        }
        Problem::new(space, model, self.beta.clone()).map_err(|e| CliError::Config(format!("model: {e}")))
    }

    /// Swarm configuration: defaults, then the file's `pso` block, then
    /// `overrides`.
    pub fn pso_config(&self, overrides: &PsoOverrides) -> Result<PsoConfig, CliError> {
        let c = self.pso.merge(overrides).apply(&PsoConfig::default());
        c.validate().map_err(|e| CliError::Config(format!("pso: {e}")))?;
        Ok(c)
    }
}

/// Reads and validates a problem file.
pub fn load_problem(path: &Path) -> Result<(ProblemConfig, Problem), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let config = ProblemConfig::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
    let problem = config
        .problem()
        .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
    Ok((config, problem))
}
