use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use psodesign_core::{
    equivalence_check, fedorov_wynn, multiplicative, run_pso, CandidateSet, Design, Factor, FactorSpace, LinkKind,
    ModelSpec, Problem, PsoConfig, Swarm,
};

fn three_factor(x3: f64) -> Problem {
    let space = FactorSpace::unconstrained(vec![
        Factor::continuous("x1", -2.0, 2.0).unwrap(),
        Factor::continuous("x2", -1.0, 1.0).unwrap(),
        Factor::continuous("x3", -x3, x3).unwrap(),
    ])
    .unwrap();
    Problem::new(
        space,
        ModelSpec::main_effects(3, LinkKind::Logit),
        vec![1.0, -0.5, 0.5, 1.0],
    )
    .unwrap()
}

fn two_factor() -> Problem {
    let space = FactorSpace::unconstrained(vec![
        Factor::continuous("x1", -1.0, 1.0).unwrap(),
        Factor::continuous("x2", -1.0, 1.0).unwrap(),
    ])
    .unwrap();
    Problem::new(space, ModelSpec::main_effects(2, LinkKind::Logit), vec![0.5, -1.2, 2.0]).unwrap()
}

fn four_point() -> Design {
    Design::uniform(vec![
        vec![-2.0, -1.0, -2.544],
        vec![-2.0, 1.0, -1.457],
        vec![2.0, -1.0, 1.544],
        vec![2.0, 1.0, -1.544],
    ])
    .unwrap()
}

fn criterion_eval(c: &mut Criterion) {
    let p = three_factor(10.0);
    let d = four_point();
    c.bench_function("log_det/4x4", |b| b.iter(|| p.log_det(&d).unwrap()));
    c.bench_function("equivalence_check/101^3", |b| {
        b.iter(|| equivalence_check(&p, &d, 101, 0.99).unwrap())
    });
}

fn swarm(c: &mut Criterion) {
    let p = three_factor(10.0);
    let cfg = PsoConfig {
        n_particles: 25,
        ..PsoConfig::default()
    };
    c.bench_function("swarm_step/25x8", |b| {
        b.iter_batched(
            || Swarm::new(&p, &cfg, 0).unwrap(),
            |mut s| s.step(),
            BatchSize::SmallInput,
        )
    });
    let mut g = c.benchmark_group("run_pso");
    g.sample_size(10);
    g.bench_function("three_factor", |b| {
        let cfg = PsoConfig {
            n_particles: 25,
            max_iter: 150,
            seed: 2,
            ..PsoConfig::default()
        };
        b.iter(|| run_pso(&p, &cfg).unwrap())
    });
    g.finish();
}

fn baselines(c: &mut Criterion) {
    let p = two_factor();
    let cands = CandidateSet::from_grid(&p, 21).unwrap();
    let mut g = c.benchmark_group("baselines/21x21");
    g.sample_size(20);
    g.bench_function("multiplicative", |b| {
        b.iter(|| multiplicative(&cands, 1000, 1e-5).unwrap())
    });
    g.bench_function("fedorov_wynn", |b| b.iter(|| fedorov_wynn(&cands, 1000, 1e-5).unwrap()));
    g.finish();
}

criterion_group!(benches, criterion_eval, swarm, baselines);
criterion_main!(benches);
