//! Particle swarm search over approximate designs.
//!
//! A particle's position holds `n_candidate_points` settings followed by
//! one raw weight per point:
//!
//! ```text
//! [x_11 .. x_1f, x_21 .. x_2f, ..., x_n1 .. x_nf, w_1, .., w_n]
//! ```
//!
//! Discrete coordinates fly as continuous values between their extreme
//! levels and are rounded to the nearest level when a position is decoded.
//! Raw weights live in `[0, 1]`; decoding clamps them at zero and
//! normalizes, so a weight sitting on its lower bound removes the point
//! from the design.
//!
//! Each particle owns a ChaCha stream keyed by `(seed, reset, particle)`;
//! particles are stepped in parallel and the global best is reduced
//! sequentially with ties going to the lowest index, so a run is
//! reproducible bit for bit regardless of the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{multiplicative_from, CandidateSet};
use crate::design::{Design, DEFAULT_DIST_TOL, DEFAULT_WEIGHT_TOL};
use crate::error::{Error, Result};
use crate::model::Problem;
use crate::space::FactorSpace;
use crate::verify::{equivalence_check, EquivalenceReport};

/// Upper limit for the default number of candidate points per particle.
pub const MAX_DEFAULT_CANDIDATES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub n_particles: usize,
    pub max_iter: usize,
    pub max_resets: usize,
    /// Swarm convergence radius (range-scaled infinity norm).
    pub converge_tol: f64,
    /// Required equivalence-theorem efficiency lower bound.
    pub eff_bound: f64,
    /// Cognitive factor.
    pub phi1: f64,
    /// Social factor.
    pub phi2: f64,
    pub inertia_start: f64,
    pub inertia_step: f64,
    pub inertia_floor: f64,
    /// Points per particle; `None` means `2^n_factors` capped at 64.
    pub n_candidate_points: Option<usize>,
    pub seed: u64,
    /// Grid points per continuous factor for the equivalence check.
    pub check_resolution: usize,
    pub weight_tol: f64,
    pub dist_tol: f64,
    /// Re-optimize the weights of the pruned design on its own support
    /// before the equivalence check.
    pub polish_weights: bool,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            n_particles: 25,
            max_iter: 100,
            max_resets: 100,
            converge_tol: 1e-4,
            eff_bound: 0.99,
            phi1: 2.0,
            phi2: 2.0,
            inertia_start: 0.9,
            inertia_step: 0.01,
            inertia_floor: 0.4,
            n_candidate_points: None,
            seed: 0,
            check_resolution: 101,
            weight_tol: DEFAULT_WEIGHT_TOL,
            dist_tol: DEFAULT_DIST_TOL,
            polish_weights: true,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n_particles == 0 {
            return bad("n_particles must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if !(self.converge_tol > 0.0) {
            return bad("converge_tol must be positive");
        }
        if !(self.eff_bound > 0.0 && self.eff_bound < 1.0) {
            return bad("eff_bound must lie in (0, 1)");
        }
        if !(self.phi1 > 0.0 && self.phi2 > 0.0) {
            return bad("phi1 and phi2 must be positive");
        }
        if !(self.inertia_floor > 0.0 && self.inertia_start >= self.inertia_floor) {
            return bad("inertia must satisfy inertia_start >= inertia_floor > 0");
        }
        if !(self.inertia_step >= 0.0) {
            return bad("inertia_step must be nonnegative");
        }
        if self.n_candidate_points == Some(0) {
            return bad("n_candidate_points must be positive");
        }
        if self.check_resolution < 2 {
            return bad("check_resolution must be at least 2");
        }
        if !(self.weight_tol >= 0.0 && self.dist_tol >= 0.0) {
            return bad("weight_tol and dist_tol must be nonnegative");
        }
        Ok(())
    }

    pub fn candidate_points(&self, space: &FactorSpace) -> usize {
        self.n_candidate_points.unwrap_or_else(|| {
            1usize
                .checked_shl(space.n_factors() as u32)
                .unwrap_or(usize::MAX)
                .min(MAX_DEFAULT_CANDIDATES)
        })
    }
}

/// Inertia schedule `max(start - step * iter, floor)`.
pub fn inertia(iter: usize, config: &PsoConfig) -> f64 {
    (config.inertia_start - config.inertia_step * iter as f64).max(config.inertia_floor)
}

/// One velocity update with explicit uniform draws `u1`, `u2`:
/// `v' = delta v + phi1 u1 (pbest - pos) + phi2 u2 (gbest - pos)`.
#[allow(clippy::too_many_arguments)]
pub fn velocity_step(
    velocity: &[f64],
    position: &[f64],
    pbest: &[f64],
    gbest: &[f64],
    delta: f64,
    phi1: f64,
    phi2: f64,
    u1: &[f64],
    u2: &[f64],
) -> Vec<f64> {
    (0..velocity.len())
        .map(|j| {
            delta * velocity[j] + phi1 * u1[j] * (pbest[j] - position[j]) + phi2 * u2[j] * (gbest[j] - position[j])
        })
        .collect()
}

/// Velocity update drawing fresh component-wise `Uniform(0, 1)` factors.
pub fn velocity_update<R: Rng + ?Sized>(
    particle: &Particle,
    gbest: &[f64],
    iter: usize,
    config: &PsoConfig,
    rng: &mut R,
) -> Vec<f64> {
    let n = particle.position.len();
    let mut u1 = Vec::with_capacity(n);
    let mut u2 = Vec::with_capacity(n);
    for _ in 0..n {
        u1.push(rng.random::<f64>());
        u2.push(rng.random::<f64>());
    }
    velocity_step(
        &particle.velocity,
        &particle.position,
        &particle.pbest_position,
        gbest,
        inertia(iter, config),
        config.phi1,
        config.phi2,
        &u1,
        &u2,
    )
}

/// Geometry of the flattened particle vector.
#[derive(Debug, Clone)]
pub struct Layout {
    pub n_points: usize,
    pub n_factors: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    scale: Vec<f64>,
}

impl Layout {
    pub fn new(space: &FactorSpace, n_points: usize) -> Self {
        let f = space.n_factors();
        let dim = n_points * (f + 1);
        let mut lo = Vec::with_capacity(dim);
        let mut hi = Vec::with_capacity(dim);
        let mut scale = Vec::with_capacity(dim);
        for _ in 0..n_points {
            for factor in space.factors() {
                lo.push(factor.lo());
                hi.push(factor.hi());
                scale.push(factor.range());
            }
        }
        for _ in 0..n_points {
            lo.push(0.0);
            hi.push(1.0);
            scale.push(1.0);
        }
        Layout {
            n_points,
            n_factors: f,
            lo,
            hi,
            scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn weights_offset(&self) -> usize {
        self.n_points * self.n_factors
    }

    /// Per-coordinate scale used by the convergence test (factor ranges,
    /// 1 for weights).
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn encode(&self, settings: &[Vec<f64>], raw_weights: &[f64]) -> Vec<f64> {
        let mut pos = Vec::with_capacity(self.dim());
        for s in settings {
            pos.extend_from_slice(s);
        }
        pos.extend_from_slice(raw_weights);
        pos
    }
}

/// Splits a position into settings and weights, rounds discrete
/// coordinates, and normalizes the clamped-at-zero raw weights (uniform if
/// none is positive). No pruning is applied.
pub fn decode(position: &[f64], space: &FactorSpace, n_candidate_points: usize) -> Design {
    let f = space.n_factors();
    let offset = n_candidate_points * f;
    assert_eq!(position.len(), n_candidate_points * (f + 1), "position shape");
    let mut raw: Vec<f64> = position[offset..].iter().map(|w| w.max(0.0)).collect();
    let mut settings = Vec::with_capacity(n_candidate_points);
    for (i, w) in raw.iter_mut().enumerate() {
        let mut s = space.project_discrete(&position[i * f..(i + 1) * f]);
        if !space.satisfies_constraints(&s) {
            // rounding a discrete coordinate broke a mixed constraint
            let mut v = vec![0.0; f];
            if !space.repair(&mut s, &mut v) || !space.contains(&s, 0.0) {
                *w = 0.0;
            }
        }
        settings.push(s);
    }
    if raw.iter().all(|&w| w <= 0.0) {
        raw.iter_mut().for_each(|w| *w = 1.0);
    }
    Design::from_parts(settings, raw).expect("decoded weights are valid")
}

/// Criterion value of a position.
fn fitness(problem: &Problem, position: &[f64], n_points: usize) -> f64 {
    let design = decode(position, &problem.space, n_points);
    match problem.information_matrix_unchecked(&design) {
        Ok(m) => m.log_det(),
        Err(_) => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Criterion value at the current position.
    pub value: f64,
    pub pbest_position: Vec<f64>,
    pub pbest_value: f64,
    rng: ChaCha8Rng,
}

fn particle_rng(seed: u64, reset: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((reset as u64) << 32) | index as u64);
    rng
}

/// `true` iff every particle lies within `tol` of `gbest` in the
/// range-scaled infinity norm.
pub fn converged(particles: &[Particle], gbest: &[f64], scale: &[f64], tol: f64) -> bool {
    particles.iter().all(|p| {
        p.position
            .iter()
            .zip(gbest)
            .zip(scale)
            .all(|((x, g), s)| (x - g).abs() / s < tol)
    })
}

/// One swarm between resets.
#[derive(Debug, Clone)]
pub struct Swarm<'a> {
    problem: &'a Problem,
    config: &'a PsoConfig,
    layout: Layout,
    vmax: Vec<f64>,
    particles: Vec<Particle>,
    gbest_position: Vec<f64>,
    gbest_value: f64,
    iter: usize,
}

impl<'a> Swarm<'a> {
    /// Random initialization for restart number `reset`.
    pub fn new(problem: &'a Problem, config: &'a PsoConfig, reset: usize) -> Result<Self> {
        config.validate()?;
        let n_points = config.candidate_points(&problem.space);
        if problem.k() > n_points {
            return Err(Error::Config(format!(
                "{n_points} candidate points cannot support a {}-parameter model",
                problem.k()
            )));
        }
        let layout = Layout::new(&problem.space, n_points);
        let vmax = layout.scale.iter().map(|s| 0.5 * s).collect();
        let particles = (0..config.n_particles)
            .into_par_iter()
            .map(|i| {
                let mut rng = particle_rng(config.seed, reset, i);
                let (settings, raw) = problem.space.sample_raw(n_points, &mut rng)?;
                let position = layout.encode(&settings, &raw);
                let value = fitness(problem, &position, n_points);
                Ok(Particle {
                    velocity: vec![0.0; position.len()],
                    pbest_position: position.clone(),
                    pbest_value: value,
                    position,
                    value,
                    rng,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut swarm = Swarm {
            problem,
            config,
            layout,
            vmax,
            particles,
            gbest_position: Vec::new(),
            gbest_value: f64::NEG_INFINITY,
            iter: 0,
        };
        swarm.reduce_gbest();
        Ok(swarm)
    }

    fn reduce_gbest(&mut self) {
        let mut best = 0;
        for (i, p) in self.particles.iter().enumerate() {
            if p.pbest_value > self.particles[best].pbest_value {
                best = i;
            }
        }
        let p = &self.particles[best];
        if self.gbest_position.is_empty() || p.pbest_value > self.gbest_value {
            self.gbest_value = p.pbest_value;
            self.gbest_position = p.pbest_position.clone();
        }
    }

    /// Velocity update, move, repair, evaluate and PBest/GBest update for
    /// every particle.
    pub fn step(&mut self) {
        let iter = self.iter;
        let problem = self.problem;
        let config = self.config;
        let layout = &self.layout;
        let vmax = &self.vmax;
        let gbest = &self.gbest_position;
        self.particles.par_iter_mut().for_each(|p| {
            let mut rng = p.rng.clone();
            let mut v = velocity_update(p, gbest, iter, config, &mut rng);
            for (vj, m) in v.iter_mut().zip(vmax) {
                *vj = vj.clamp(-m, *m);
            }
            for (x, vj) in p.position.iter_mut().zip(&v) {
                *x += vj;
            }
            p.velocity = v;
            repair_position(problem, layout, &mut p.position, &mut p.velocity, &mut rng);
            p.rng = rng;
            p.value = fitness(problem, &p.position, layout.n_points);
            if p.value > p.pbest_value {
                p.pbest_value = p.value;
                p.pbest_position.clone_from(&p.position);
            }
        });
        self.iter += 1;
        self.reduce_gbest();
    }

    pub fn iteration(&self) -> usize {
        self.iter
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn gbest_position(&self) -> &[f64] {
        &self.gbest_position
    }

    pub fn gbest_value(&self) -> f64 {
        self.gbest_value
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn is_converged(&self) -> bool {
        converged(
            &self.particles,
            &self.gbest_position,
            self.layout.scale(),
            self.config.converge_tol,
        )
    }

    pub fn decode(&self, position: &[f64]) -> Design {
        decode(position, &self.problem.space, self.layout.n_points)
    }
}

/// Boundary repair of every point block and weight; points that cannot be
/// repaired are redrawn with zero velocity.
fn repair_position(
    problem: &Problem,
    layout: &Layout,
    position: &mut [f64],
    velocity: &mut [f64],
    rng: &mut ChaCha8Rng,
) {
    let f = layout.n_factors;
    let space = &problem.space;
    for i in 0..layout.n_points {
        let block = i * f..(i + 1) * f;
        if !space.repair(&mut position[block.clone()], &mut velocity[block.clone()]) {
            if let Ok(s) = space.sample_setting(rng) {
                position[block.clone()].copy_from_slice(&s);
            }
            velocity[block].iter_mut().for_each(|v| *v = 0.0);
        }
    }
    for j in layout.weights_offset()..layout.dim() {
        let c = position[j].clamp(layout.lo[j], layout.hi[j]);
        if c != position[j] {
            position[j] = c;
            velocity[j] = 0.0;
        }
    }
}

const POLISH_MAX_ITER: usize = 20_000;
const POLISH_TOL: f64 = 1e-10;

/// Multiplicative weight refinement on the design's own support, started
/// from its current weights. `None` when the support cannot carry the model.
fn polish(problem: &Problem, design: &Design, config: &PsoConfig) -> Result<Option<(Design, f64)>> {
    if design.len() < problem.k() {
        return Ok(None);
    }
    let cands = match CandidateSet::new(problem, design.settings().map(<[f64]>::to_vec).collect()) {
        Ok(c) => c,
        Err(_) => return Ok(None),
    };
    let fit = match multiplicative_from(&cands, &design.weights(), POLISH_MAX_ITER, POLISH_TOL) {
        Ok(f) => f,
        Err(Error::Singular) => return Ok(None),
        Err(e) => return Err(e),
    };
    let refined = cands
        .design(&fit.weights)?
        .prune_and_merge(&problem.space, config.weight_tol, config.dist_tol)?;
    let criterion = problem.information_matrix_unchecked(&refined)?.log_det();
    Ok(Some((refined, criterion)))
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Pruned and merged best design.
    pub design: Design,
    /// Log-determinant of `design`'s information matrix.
    pub criterion: f64,
    pub report: EquivalenceReport,
    pub resets_used: usize,
    /// Iterations performed by the final swarm.
    pub iterations_last: usize,
    /// Best-so-far criterion after initialization and after every iteration,
    /// across all resets.
    pub trace: Vec<f64>,
    /// Best swarm criterion, before pruning and weight refinement.
    pub raw_criterion: f64,
}

/// Runs the swarm with equivalence-gated resets and returns the best design
/// found.
pub fn run_pso(problem: &Problem, config: &PsoConfig) -> Result<SearchResult> {
    config.validate()?;
    let mut best_position: Vec<f64> = Vec::new();
    let mut best_value = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut resets_used = 0;
    let mut last: Option<(Design, f64, EquivalenceReport)> = None;

    for reset in 0..=config.max_resets {
        let mut swarm = Swarm::new(problem, config, reset)?;
        let mut absorb = |swarm: &Swarm<'_>, trace: &mut Vec<f64>| {
            if best_position.is_empty() || swarm.gbest_value() > best_value {
                best_value = swarm.gbest_value();
                best_position = swarm.gbest_position().to_vec();
            }
            trace.push(best_value);
        };
        absorb(&swarm, &mut trace);
        while swarm.iteration() < config.max_iter {
            swarm.step();
            absorb(&swarm, &mut trace);
            if swarm.is_converged() {
                break;
            }
        }
        let iterations_last = swarm.iteration();

        if best_value > f64::NEG_INFINITY {
            let raw = swarm.decode(&best_position);
            let mut design = raw.prune_and_merge(&problem.space, config.weight_tol, config.dist_tol)?;
            let mut criterion = problem.information_matrix_unchecked(&design)?.log_det();
            if config.polish_weights && criterion > f64::NEG_INFINITY {
                if let Some((d, c)) = polish(problem, &design, config)? {
                    if c > criterion {
                        design = d;
                        criterion = c;
                    }
                }
            }
            let report = if criterion > f64::NEG_INFINITY {
                Some(equivalence_check(
                    problem,
                    &design,
                    config.check_resolution,
                    config.eff_bound,
                )?)
            } else {
                None
            };
            if let Some(report) = report {
                let pass = report.pass;
                last = Some((design, criterion, report));
                if pass {
                    let (design, criterion, report) = last.take().expect("just set");
                    return Ok(SearchResult {
                        design,
                        criterion,
                        report,
                        resets_used,
                        iterations_last,
                        trace,
                        raw_criterion: best_value,
                    });
                }
            }
        }
        if reset == config.max_resets {
            return match last {
                Some((design, criterion, report)) => Ok(SearchResult {
                    design,
                    criterion,
                    report,
                    resets_used,
                    iterations_last,
                    trace,
                    raw_criterion: best_value,
                }),
                None => Err(Error::Singular),
            };
        }
        resets_used += 1;
    }
    unreachable!("loop returns on the last reset")
}
