//! Locally D-optimal approximate designs for binary-response GLMs with
//! mixed discrete and continuous factors, found by particle swarm search
//! and certified with the equivalence theorem.

pub mod baselines;
pub mod design;
pub mod error;
pub mod linalg;
pub mod link;
pub mod model;
pub mod pso;
pub mod space;
pub mod verify;

pub use baselines::{fedorov_wynn, multiplicative, multiplicative_from, CandidateSet, WeightResult};
pub use design::{Design, DesignPoint, DEFAULT_DIST_TOL, DEFAULT_WEIGHT_TOL};
pub use error::{Error, Result};
pub use linalg::{InfoMatrix, PivotedCholesky};
pub use link::{dmu_deta, mu, psi, LinkKind};
pub use model::{efficiency_lower_bound, log_det, ModelSpec, ParamVector, Problem};
pub use pso::{decode, run_pso, PsoConfig, SearchResult, Swarm};
pub use space::{Factor, FactorKind, FactorSpace, LinearConstraint};
pub use verify::{
    boundary_supported, efficiency_under_link, equivalence_check, minimal_support_classify, sensitivity_profile,
    EquivalenceReport,
};
