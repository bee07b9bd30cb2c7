//! Factor domains, linear inequality constraints, boundary repair, random
//! sampling and verification grids.

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};

/// Maximum number of constraint projection passes in [`FactorSpace::repair`].
pub const REPAIR_PASSES: usize = 10;

/// Consecutive failed draws tolerated by the samplers.
pub const MAX_SAMPLE_ATTEMPTS: usize = 1000;

/// Slack used when testing grid points against linear constraints.
pub const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum FactorKind {
    /// Finite set of strictly increasing levels.
    Discrete { levels: Vec<f64> },
    /// Closed interval `[lo, hi]`.
    Continuous { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: String,
    pub kind: FactorKind,
}

impl Factor {
    pub fn discrete(name: impl Into<String>, levels: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if levels.len() < 2 {
            return Err(Error::Config(format!(
                "discrete factor `{name}` needs at least two levels"
            )));
        }
        if levels.iter().any(|l| !l.is_finite()) || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "levels of factor `{name}` must be finite and strictly increasing"
            )));
        }
        Ok(Factor {
            name,
            kind: FactorKind::Discrete { levels },
        })
    }

    pub fn continuous(name: impl Into<String>, lo: f64, hi: f64) -> Result<Self> {
        let name = name.into();
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!(
                "continuous factor `{name}` needs finite bounds with lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Factor {
            name,
            kind: FactorKind::Continuous { lo, hi },
        })
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Factor::discrete(name, vec![-1.0, 1.0]).expect("valid levels")
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, FactorKind::Discrete { .. })
    }

    pub fn lo(&self) -> f64 {
        match &self.kind {
            FactorKind::Discrete { levels } => levels[0],
            FactorKind::Continuous { lo, .. } => *lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match &self.kind {
            FactorKind::Discrete { levels } => *levels.last().expect("nonempty"),
            FactorKind::Continuous { hi, .. } => *hi,
        }
    }

    pub fn range(&self) -> f64 {
        self.hi() - self.lo()
    }

    /// Nearest level, ties going to the lower level. Continuous factors
    /// return `value` unchanged.
    pub fn snap(&self, value: f64) -> f64 {
        match &self.kind {
            FactorKind::Continuous { .. } => value,
            FactorKind::Discrete { levels } => {
                let mut best = levels[0];
                let mut best_dist = (value - best).abs();
                for &l in &levels[1..] {
                    let d = (value - l).abs();
                    if d < best_dist {
                        best = l;
                        best_dist = d;
                    }
                }
                best
            }
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        match &self.kind {
            FactorKind::Continuous { lo, hi } => value >= *lo && value <= *hi,
            FactorKind::Discrete { levels } => levels.iter().any(|&l| l == value),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            FactorKind::Continuous { lo, hi } => rng.random_range(*lo..=*hi),
            FactorKind::Discrete { levels } => levels[rng.random_range(0..levels.len())],
        }
    }

    /// Values this factor takes on a verification grid.
    pub fn grid_values(&self, resolution: usize) -> Vec<f64> {
        match &self.kind {
            FactorKind::Discrete { levels } => levels.clone(),
            FactorKind::Continuous { lo, hi } => {
                let n = resolution.max(2);
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            *hi
                        } else {
                            lo + (hi - lo) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect()
            }
        }
    }
}

/// `lo <= coeffs . x <= hi`; either bound may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<f64>, lo: f64, hi: f64) -> Self {
        LinearConstraint { coeffs, lo, hi }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Signed distance to the violated bound (`bound - a.x`), or `None`
    /// when satisfied.
    fn residual(&self, x: &[f64]) -> Option<f64> {
        let v = self.value(x);
        if v > self.hi {
            Some(self.hi - v)
        } else if v < self.lo {
            Some(self.lo - v)
        } else {
            None
        }
    }

    pub fn satisfied(&self, x: &[f64], slack: f64) -> bool {
        let v = self.value(x);
        let scale = 1.0 + v.abs();
        v >= self.lo - slack * scale && v <= self.hi + slack * scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpace {
    factors: Vec<Factor>,
    constraints: Vec<LinearConstraint>,
}

impl FactorSpace {
    pub fn new(factors: Vec<Factor>, constraints: Vec<LinearConstraint>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Config("a design space needs at least one factor".into()));
        }
        for (i, c) in constraints.iter().enumerate() {
            if c.coeffs.len() != factors.len() {
                return Err(Error::Config(format!(
                    "constraint {i} has {} coefficients but there are {} factors",
                    c.coeffs.len(),
                    factors.len()
                )));
            }
            if c.coeffs.iter().any(|a| !a.is_finite()) || c.lo.is_nan() || c.hi.is_nan() {
                return Err(Error::Config(format!("constraint {i} has non-finite terms")));
            }
            if c.lo > c.hi {
                return Err(Error::Config(format!("constraint {i} has lo > hi")));
            }
            if c.coeffs.iter().all(|&a| a == 0.0) {
                return Err(Error::Config(format!("constraint {i} has all-zero coefficients")));
            }
        }
        let space = FactorSpace { factors, constraints };
        space.check_nonempty()?;
        Ok(space)
    }

    /// Box-only space.
    pub fn unconstrained(factors: Vec<Factor>) -> Result<Self> {
        Self::new(factors, Vec::new())
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn ranges(&self) -> Vec<f64> {
        self.factors.iter().map(Factor::range).collect()
    }

    pub fn n_discrete_combinations(&self) -> usize {
        self.factors
            .iter()
            .map(|f| match &f.kind {
                FactorKind::Discrete { levels } => levels.len(),
                FactorKind::Continuous { .. } => 1,
            })
            .product()
    }

    pub fn n_continuous(&self) -> usize {
        self.factors.iter().filter(|f| !f.is_discrete()).count()
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Ok(());
        }
        // Vertex/grid test first, then random draws pushed through repair.
        if self.verification_grid(11).next().is_some() {
            return Ok(());
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_f00d);
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            if self.draw_feasible_once(&mut rng).is_some() {
                return Ok(());
            }
        }
        Err(Error::Infeasible(
            "no setting satisfies the box and linear constraints".into(),
        ))
    }

    /// Membership test: box, discrete levels and linear constraints (with
    /// relative slack `slack` on the constraints).
    pub fn contains(&self, setting: &[f64], slack: f64) -> bool {
        setting.len() == self.factors.len()
            && self.factors.iter().zip(setting).all(|(f, &v)| f.contains(v))
            && self.constraints.iter().all(|c| c.satisfied(setting, slack))
    }

    /// Box and linear constraints, with discrete coordinates allowed
    /// anywhere between their extreme levels.
    pub fn contains_relaxed(&self, setting: &[f64], slack: f64) -> bool {
        setting.len() == self.factors.len()
            && self
                .factors
                .iter()
                .zip(setting)
                .all(|(f, &v)| v >= f.lo() && v <= f.hi())
            && self.constraints.iter().all(|c| c.satisfied(setting, slack))
    }

    pub fn satisfies_constraints(&self, setting: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.residual(setting).is_none())
    }

    /// Rounds each discrete coordinate to its nearest level (ties low).
    pub fn project_discrete(&self, setting: &[f64]) -> Vec<f64> {
        self.factors.iter().zip(setting).map(|(f, &v)| f.snap(v)).collect()
    }

    pub fn project_discrete_in_place(&self, setting: &mut [f64]) {
        for (f, v) in self.factors.iter().zip(setting.iter_mut()) {
            *v = f.snap(*v);
        }
    }

    /// Brings `setting` back into the feasible region.
    ///
    /// Coordinates are clamped to their boxes, then each violated linear
    /// constraint is repaired by moving the single continuous coordinate
    /// that reaches the constraint boundary with the smallest
    /// range-relative displacement. Every coordinate that is moved has its
    /// velocity component zeroed. Returns `false` if the point is still
    /// infeasible after [`REPAIR_PASSES`] passes.
    pub fn repair(&self, setting: &mut [f64], velocity: &mut [f64]) -> bool {
        debug_assert_eq!(setting.len(), self.factors.len());
        debug_assert_eq!(velocity.len(), self.factors.len());
        for ((f, x), v) in self.factors.iter().zip(setting.iter_mut()).zip(velocity.iter_mut()) {
            let clamped = x.clamp(f.lo(), f.hi());
            if clamped != *x || x.is_nan() {
                *x = if x.is_nan() { f.lo() } else { clamped };
                *v = 0.0;
            }
        }
        if self.constraints.is_empty() {
            return true;
        }
        for _ in 0..REPAIR_PASSES {
            let violated = self
                .constraints
                .iter()
                .filter_map(|c| {
                    c.residual(setting).map(|r| {
                        let norm = c.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt();
                        (c, r, r.abs() / norm)
                    })
                })
                .min_by(|a, b| a.2.total_cmp(&b.2));
            let Some((c, r, _)) = violated else {
                return true;
            };
            if let Some(j) = self.move_onto_boundary(c, r, setting) {
                velocity[j] = 0.0;
            } else {
                return false;
            }
        }
        self.satisfies_constraints(setting)
    }

    /// Moves one continuous coordinate toward the violated bound of `c`.
    /// Returns the moved coordinate, or `None` if no coordinate can help.
    fn move_onto_boundary(&self, c: &LinearConstraint, residual: f64, x: &mut [f64]) -> Option<usize> {
        let mut exact: Option<(usize, f64)> = None;
        let mut partial: Option<(usize, f64, f64)> = None;
        for (j, f) in self.factors.iter().enumerate() {
            let a = c.coeffs[j];
            if a == 0.0 || f.is_discrete() {
                continue;
            }
            let step = residual / a;
            let target = x[j] + step;
            if target >= f.lo() && target <= f.hi() {
                let cost = step.abs() / f.range();
                if exact.is_none_or(|(_, best)| cost < best) {
                    exact = Some((j, cost));
                }
            } else {
                let reached = target.clamp(f.lo(), f.hi());
                let gain = ((reached - x[j]) * a).abs();
                if gain > 0.0 && partial.is_none_or(|(_, _, best)| gain > best) {
                    partial = Some((j, reached, gain));
                }
            }
        }
        if let Some((j, _)) = exact {
            x[j] += residual / c.coeffs[j];
            self.settle(c, j, x);
            Some(j)
        } else if let Some((j, reached, _)) = partial {
            x[j] = reached;
            Some(j)
        } else {
            None
        }
    }

    /// Cleans up rounding after landing coordinate `j` on a bound of `c` so
    /// that the constraint holds exactly in floating point.
    fn settle(&self, c: &LinearConstraint, j: usize, x: &mut [f64]) {
        let f = &self.factors[j];
        let a = c.coeffs[j];
        for _ in 0..4 {
            match c.residual(x) {
                Some(r) => x[j] = (x[j] + r / a).clamp(f.lo(), f.hi()),
                None => return,
            }
        }
        for _ in 0..64 {
            let v = c.value(x);
            let inward = if v > c.hi {
                -a.signum()
            } else if v < c.lo {
                a.signum()
            } else {
                return;
            };
            let next = next_toward(x[j], inward);
            if next < f.lo() || next > f.hi() {
                return;
            }
            x[j] = next;
        }
    }

    /// One uniform draw (levels uniform, intervals uniform) pushed through
    /// repair; `None` if the result is infeasible after discrete projection.
    fn draw_feasible_once<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<f64>> {
        let mut x: Vec<f64> = self.factors.iter().map(|f| f.draw(rng)).collect();
        let mut v = vec![0.0; x.len()];
        if !self.repair(&mut x, &mut v) {
            return None;
        }
        self.project_discrete_in_place(&mut x);
        self.satisfies_constraints(&x).then_some(x)
    }

    /// A feasible setting drawn uniformly per coordinate and repaired.
    pub fn sample_setting<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            if let Some(x) = self.draw_feasible_once(rng) {
                return Ok(x);
            }
        }
        Err(Error::Infeasible(format!(
            "{MAX_SAMPLE_ATTEMPTS} consecutive draws could not be repaired"
        )))
    }

    /// Settings plus raw (unnormalized) `Uniform(0, 1)` weights.
    pub fn sample_raw<R: Rng + ?Sized>(&self, n_points: usize, rng: &mut R) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut settings = Vec::with_capacity(n_points);
        let mut weights = Vec::with_capacity(n_points);
        for _ in 0..n_points {
            settings.push(self.sample_setting(rng)?);
            weights.push(rng.random::<f64>());
        }
        Ok((settings, weights))
    }

    /// Lazy Cartesian grid: every discrete level combination times
    /// `resolution` equally spaced values per continuous factor, filtered by
    /// the linear constraints. The first factor varies slowest.
    pub fn verification_grid(&self, resolution: usize) -> GridIter<'_> {
        let axes = self.grid_axes(resolution);
        GridIter {
            space: self,
            idx: vec![0; axes.len()],
            axes,
            done: false,
        }
    }

    /// Per-factor grid values used by [`Self::verification_grid`].
    pub fn grid_axes(&self, resolution: usize) -> Vec<Vec<f64>> {
        self.factors.iter().map(|f| f.grid_values(resolution)).collect()
    }

    /// `true` iff a grid point passes the grid's constraint filter.
    pub fn on_grid_feasible(&self, point: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.satisfied(point, GRID_TOL))
    }

    /// Grid size before constraint filtering.
    pub fn grid_len_unfiltered(&self, resolution: usize) -> usize {
        self.factors.iter().map(|f| f.grid_values(resolution).len()).product()
    }
}

fn next_toward(x: f64, direction: f64) -> f64 {
    if x == 0.0 {
        return direction * f64::from_bits(1);
    }
    let bits = x.to_bits();
    let up = (direction > 0.0) == (x > 0.0);
    f64::from_bits(if up { bits + 1 } else { bits - 1 })
}

/// Iterator over [`FactorSpace::verification_grid`].
#[derive(Debug, Clone)]
pub struct GridIter<'a> {
    space: &'a FactorSpace,
    axes: Vec<Vec<f64>>,
    idx: Vec<usize>,
    done: bool,
}

impl GridIter<'_> {
    fn advance(&mut self) {
        for d in (0..self.idx.len()).rev() {
            self.idx[d] += 1;
            if self.idx[d] < self.axes[d].len() {
                return;
            }
            self.idx[d] = 0;
        }
        self.done = true;
    }
}

impl Iterator for GridIter<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        while !self.done {
            let point: Vec<f64> = self.idx.iter().zip(&self.axes).map(|(&i, a)| a[i]).collect();
            self.advance();
            if self.space.on_grid_feasible(&point) {
                return Some(point);
            }
        }
        None
    }
}
