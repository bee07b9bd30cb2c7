//! Approximate designs: weighted support sets on the probability simplex.

use crate::error::{Error, Result};
use crate::space::FactorSpace;

/// Default weight below which a support point is dropped.
pub const DEFAULT_WEIGHT_TOL: f64 = 1e-4;
/// Default per-coordinate merge distance, as a fraction of the factor range.
pub const DEFAULT_DIST_TOL: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub setting: Vec<f64>,
    pub weight: f64,
}

impl DesignPoint {
    pub fn new(setting: Vec<f64>, weight: f64) -> Self {
        DesignPoint { setting, weight }
    }
}

/// A finite design whose weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    points: Vec<DesignPoint>,
}

impl Design {
    /// Builds a design, normalizing the weights to sum to one.
    pub fn new(points: Vec<DesignPoint>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::Contract("a design needs at least one point".into()));
        };
        let dim = first.setting.len();
        if points.iter().any(|p| p.setting.len() != dim) {
            return Err(Error::Contract("design points have different dimensions".into()));
        }
        if points
            .iter()
            .any(|p| !p.weight.is_finite() || p.weight < 0.0 || p.setting.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Contract(
                "design weights must be finite and nonnegative, settings finite".into(),
            ));
        }
        let total: f64 = points.iter().map(|p| p.weight).sum();
        if total <= 0.0 {
            return Err(Error::Contract("design weights sum to zero".into()));
        }
        let points = points
            .into_iter()
            .map(|p| DesignPoint::new(p.setting, p.weight / total))
            .collect();
        Ok(Design { points })
    }

    pub fn from_parts(settings: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if settings.len() != weights.len() {
            return Err(Error::Contract(format!(
                "{} settings but {} weights",
                settings.len(),
                weights.len()
            )));
        }
        Self::new(
            settings
                .into_iter()
                .zip(weights)
                .map(|(s, w)| DesignPoint::new(s, w))
                .collect(),
        )
    }

    /// Equal weight on every setting.
    pub fn uniform(settings: Vec<Vec<f64>>) -> Result<Self> {
        let w = vec![1.0; settings.len()];
        Self::from_parts(settings, w)
    }

    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].setting.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.weight).collect()
    }

    pub fn settings(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.setting.as_slice())
    }

    /// Number of points carrying at least `weight_tol`.
    pub fn support_size(&self, weight_tol: f64) -> usize {
        self.points.iter().filter(|p| p.weight >= weight_tol).count()
    }

    /// Same settings, new weights (renormalized).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        Self::from_parts(self.settings().map(<[f64]>::to_vec).collect(), weights.to_vec())
    }

    /// Weight-level mixture `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, other: &Design, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Contract(format!("mixing weight {alpha} outside [0, 1]")));
        }
        let points = self
            .points
            .iter()
            .map(|p| DesignPoint::new(p.setting.clone(), alpha * p.weight))
            .chain(
                other
                    .points
                    .iter()
                    .map(|p| DesignPoint::new(p.setting.clone(), (1.0 - alpha) * p.weight)),
            )
            .collect();
        Self::new(points)
    }

    /// Drops points lighter than `weight_tol`, merges points closer than
    /// `dist_tol` (per coordinate, relative to the factor range) into their
    /// weighted average, and renormalizes.
    pub fn prune_and_merge(&self, space: &FactorSpace, weight_tol: f64, dist_tol: f64) -> Result<Self> {
        let ranges = space.ranges();
        let mut kept: Vec<DesignPoint> = self.points.iter().filter(|p| p.weight >= weight_tol).cloned().collect();
        if kept.is_empty() {
            return Err(Error::Contract(format!(
                "every design point has weight below {weight_tol}"
            )));
        }
        let close = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .zip(&ranges)
                .all(|((x, y), r)| (x - y).abs() < dist_tol * r)
        };
        loop {
            let mut merged: Vec<DesignPoint> = Vec::with_capacity(kept.len());
            let mut changed = false;
            for p in kept {
                match merged.iter_mut().find(|m| close(&m.setting, &p.setting)) {
                    Some(m) => {
                        let total = m.weight + p.weight;
                        for (a, b) in m.setting.iter_mut().zip(&p.setting) {
                            *a = (*a * m.weight + b * p.weight) / total;
                        }
                        m.weight = total;
                        changed = true;
                    }
                    None => merged.push(p),
                }
            }
            kept = merged;
            if !changed {
                break;
            }
        }
        // averaging can drift off a level or a constraint boundary by rounding
        for p in &mut kept {
            space.project_discrete_in_place(&mut p.setting);
            if !space.satisfies_constraints(&p.setting) {
                let mut v = vec![0.0; p.setting.len()];
                space.repair(&mut p.setting, &mut v);
            }
        }
        Self::new(kept)
    }
}
