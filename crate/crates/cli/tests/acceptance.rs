//! End-to-end acceptance run. Prints one PASS/FAIL line per check and
//! exits nonzero if any check fails that is not listed in `KNOWN_GAPS`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use psodesign_cli::benchmark::{cmd_benchmark, Algorithm, BenchmarkSpec, Family};
use psodesign_cli::sweep::{cmd_sweep, quantile, SweepMode, SweepSpec};
use psodesign_cli::{cmd_find, load_design, load_problem, PsoOverrides};
use psodesign_core::{
    equivalence_check, fedorov_wynn, multiplicative, psi, run_pso, CandidateSet, Design, Factor, FactorSpace,
    LinearConstraint, LinkKind, ModelSpec, Problem, PsoConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

/// Checks that fail for reasons recorded in the project notes; they are
/// reported but do not fail the run.
const KNOWN_GAPS: &[&str] = &["misspec-cloglog"];

fn presets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("presets")
}

fn preset(name: &str) -> PathBuf {
    presets().join(format!("{name}.json"))
}

fn reference(name: &str, space: &FactorSpace) -> Design {
    load_design(&presets().join("designs").join(format!("{name}.json")), space).unwrap()
}

struct Check {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn timed<F: FnOnce() -> (bool, String)>(id: &'static str, limit: Duration, f: F) -> Check {
    let t = Instant::now();
    let (ok, detail) = f();
    let elapsed = t.elapsed();
    let in_time = elapsed <= limit;
    Check {
        id,
        pass: ok && in_time,
        detail: format!(
            "{detail}; {:.2}s (limit {}s){}",
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { " TOO SLOW" }
        ),
    }
}

/// For each reference point, the closest found point by range-scaled
/// distance: `(found, reference)` pairs.
fn pair_points<'a>(found: &'a Design, reference: &'a Design, ranges: &[f64]) -> Vec<(&'a [f64], f64, &'a [f64], f64)> {
    reference
        .points()
        .iter()
        .map(|r| {
            let f = found
                .points()
                .iter()
                .min_by(|a, b| {
                    let d = |p: &[f64]| {
                        p.iter()
                            .zip(&r.setting)
                            .zip(ranges)
                            .map(|((x, y), s)| ((x - y) / s).powi(2))
                            .sum::<f64>()
                    };
                    d(&a.setting).total_cmp(&d(&b.setting))
                })
                .unwrap();
            (f.setting.as_slice(), f.weight, r.setting.as_slice(), r.weight)
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn three_factor() -> (bool, String) {
    let (config, problem) = load_problem(&preset("three_factor")).unwrap();
    let (found, _) = cmd_find(&config, &problem, &PsoOverrides::default(), None).unwrap();
    let four = reference("three_factor_4point", &problem.space);
    let eight = reference("three_factor_8point", &problem.space);
    let eight_ld = problem.log_det(&eight).unwrap();
    let pairs = pair_points(&found.design, &four, &[1.0, 1.0, 1.0]);
    let coord_err = pairs
        .iter()
        .flat_map(|(f, _, r, _)| f.iter().zip(r.iter()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let weight_err = found
        .design
        .weights()
        .iter()
        .map(|w| (w - 0.25).abs())
        .fold(0.0, f64::max);
    let ld_err = rel(found.criterion, eight_ld);
    let ok = found.design.len() == 4
        && weight_err <= 0.01
        && coord_err <= 0.02
        && ld_err <= 0.005
        && found.report.lower_bound >= 0.99;
    (
        ok,
        format!(
            "{} points, max |coord err| {coord_err:.4}, max |weight err| {weight_err:.4}, log_det {:.5} vs {eight_ld:.5} (rel {ld_err:.1e}), bound {:.4}",
            found.design.len(),
            found.criterion,
            found.report.lower_bound
        ),
    )
}

fn three_factor_restricted() -> (bool, String) {
    let (config, problem) = load_problem(&preset("three_factor_restricted")).unwrap();
    let (found, _) = cmd_find(&config, &problem, &PsoOverrides::default(), None).unwrap();
    let printed = reference("three_factor_restricted", &problem.space);
    let ref_ld = problem.log_det(&printed).unwrap();
    let ld_err = rel(found.criterion, ref_ld);
    let ok = ld_err <= 0.005 && found.report.pass && found.report.max_sensitivity <= 1e-2;
    (
        ok,
        format!(
            "{} points, log_det {:.5} vs {ref_ld:.5} (rel {ld_err:.1e}), max sensitivity {:.4}, bound {:.4}",
            found.design.len(),
            found.criterion,
            found.report.max_sensitivity,
            found.report.lower_bound
        ),
    )
}

/// Uniform full factorial: every discrete combination crossed with the
/// given values of the last (continuous) factor.
fn factorial(n_binary: usize, values: &[f64]) -> Design {
    let mut settings = Vec::new();
    for mask in 0..1usize << n_binary {
        for &v in values {
            let mut s: Vec<f64> = (0..n_binary)
                .map(|b| if mask >> (n_binary - 1 - b) & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            s.push(v);
            settings.push(s);
        }
    }
    Design::uniform(settings).unwrap()
}

fn steps(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn odor_factorials() -> (bool, String) {
    let (_, problem) = load_problem(&preset("odor")).unwrap();
    let optimal = reference("odor", &problem.space);
    let expected = [
        (1.0, 496, 0.5610),
        (3.0, 176, 0.5675),
        (5.0, 112, 0.5730),
        (10.0, 64, 0.5831),
        (15.0, 48, 0.5896),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (step, count, want) in expected {
        let d = factorial(4, &steps(5.0, 35.0, step));
        let e = problem.d_efficiency(&d, &optimal).unwrap();
        ok &= d.len() == count && (e - want).abs() <= 0.005;
        parts.push(format!("{count}:{e:.4}/{want}"));
    }
    (ok, parts.join(" "))
}

fn esd_factorial() -> (bool, String) {
    let (_, problem) = load_problem(&preset("esd")).unwrap();
    let optimal = reference("esd", &problem.space);
    let d = factorial(4, &steps(25.0, 45.0, 5.0));
    let e = problem.d_efficiency(&d, &optimal).unwrap();
    (
        d.len() == 80 && (e - 0.3285).abs() <= 0.005,
        format!("80-point factorial efficiency {e:.4} (target 0.3285)"),
    )
}

fn flashing() -> (bool, String) {
    let (config, problem) = load_problem(&preset("flashing")).unwrap();
    let (found, _) = cmd_find(&config, &problem, &PsoOverrides::default(), None).unwrap();
    let printed = reference("flashing", &problem.space);
    let feasible = found.design.settings().all(|s| {
        let v = 10.0 * s[0] + s[1];
        (5600.0..=5800.0).contains(&v)
    });
    let pairs = pair_points(&found.design, &printed, &problem.space.ranges());
    let weight_err = pairs.iter().map(|(_, fw, _, rw)| (fw - rw).abs()).fold(0.0, f64::max);
    let pressure_err = pairs.iter().map(|(f, _, r, _)| (f[1] - r[1]).abs()).fold(0.0, f64::max);
    let ref_ld = problem.log_det(&printed).unwrap();
    let ld_err = rel(found.criterion, ref_ld);
    let ok = feasible && found.design.len() == 3 && weight_err <= 0.01 && pressure_err <= 1.0 && ld_err <= 0.005;
    (
        ok,
        format!(
            "{} points, constraint held: {feasible}, max |weight err| {weight_err:.4}, max |pressure err| {pressure_err:.3}, log_det {:.5} vs {ref_ld:.5}",
            found.design.len(),
            found.criterion
        ),
    )
}

fn continuous_benchmark() -> (bool, String) {
    let spec = BenchmarkSpec::new(Family::Continuous2, 50, 2024);
    let report = cmd_benchmark(&spec).unwrap();
    let good = report
        .rows
        .iter()
        .filter(|r| {
            let pso = r.runs[&Algorithm::Pso].log_det;
            let m = r.runs[&Algorithm::Multiplicative].log_det;
            let fw = r.runs[&Algorithm::FedorovWynn].log_det;
            pso >= m - 1e-6 && pso >= fw - 1e-6 && (m - fw).abs() <= 1e-3 * m.abs().max(fw.abs())
        })
        .count();
    (
        good >= 48,
        format!("{good}/50 problems with swarm >= both baselines and baselines agreeing"),
    )
}

fn one_factor() -> (bool, String) {
    // exhaustive search over symmetric equal-weight pairs on a 1e-4 grid;
    // with zero intercept det M = (x Psi(x))^2
    let oracle = (1..=40_000)
        .map(|i| i as f64 * 1e-4)
        .map(|x| (x, x * x.exp() / (1.0 + x.exp()).powi(2)))
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
        .0;
    let (config, problem) = load_problem(&preset("one_factor")).unwrap();
    let (found, _) = cmd_find(&config, &problem, &PsoOverrides::default(), None).unwrap();
    let mut xs: Vec<f64> = found.design.settings().map(|s| s[0]).collect();
    xs.sort_by(f64::total_cmp);
    let ok = xs.len() == 2
        && (oracle - 1.5434).abs() <= 1e-3
        && (xs[0] + 1.5434).abs() <= 0.01
        && (xs[1] - 1.5434).abs() <= 0.01
        && (xs[0] + oracle).abs() <= 0.01
        && (xs[1] - oracle).abs() <= 0.01
        && found.design.weights().iter().all(|w| (w - 0.5).abs() <= 0.01);
    (
        ok,
        format!(
            "points {xs:.4?}, weights {:.4?}, oracle x = {oracle:.4}",
            found.design.weights()
        ),
    )
}

fn properties() -> (bool, String) {
    let mut failures: Vec<&str> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // weight function against central differences of the smaller tail
    let tails = |link: LinkKind, e: f64| -> (f64, f64) {
        let t = e.exp();
        match link {
            LinkKind::Logit => (1.0 / (1.0 + (-e).exp()), 1.0 / (1.0 + t)),
            LinkKind::Probit => {
                let c = |z: f64| 0.5 * erfc(-z / std::f64::consts::SQRT_2);
                (c(e), c(-e))
            }
            LinkKind::Cloglog => (1.0 - (-t).exp(), (-t).exp()),
            LinkKind::Loglog => ((-t).exp(), 1.0 - (-t).exp()),
        }
    };
    for link in LinkKind::ALL {
        for _ in 0..1000 {
            let eta: f64 = rng.random_range(-5.0..5.0);
            let (lo, up) = tails(link, eta);
            let pick = |e: f64| if lo <= up { tails(link, e).0 } else { -tails(link, e).1 };
            let h = 1e-6;
            let d = (pick(eta + h) - pick(eta - h)) / (2.0 * h);
            let want = d * d / (lo.clamp(1e-12, 1.0 - 1e-12) * up.clamp(1e-12, 1.0 - 1e-12));
            if (psi(link, eta).unwrap() - want).abs() > 1e-5 * want {
                failures.push("psi finite differences");
                break;
            }
        }
    }

    let space = FactorSpace::unconstrained(vec![
        Factor::binary("a"),
        Factor::continuous("b", -1.0, 1.0).unwrap(),
        Factor::continuous("c", 0.0, 10.0).unwrap(),
    ])
    .unwrap();
    let p = Problem::new(
        space.clone(),
        ModelSpec::main_effects(3, LinkKind::Logit),
        vec![0.3, -0.8, 0.5, -0.1],
    )
    .unwrap();
    let mut random_design = |n: usize| {
        let (s, w) = space.sample_raw(n, &mut rng).unwrap();
        Design::from_parts(s, w.iter().map(|w| w + 0.05).collect()).unwrap()
    };
    for _ in 0..100 {
        let (d1, d2) = (random_design(6), random_design(6));
        let mixed = p.information_matrix(&d1.mix(&d2, 0.3).unwrap()).unwrap().into_matrix();
        let want = p.information_matrix(&d1).unwrap().into_matrix() * 0.3
            + p.information_matrix(&d2).unwrap().into_matrix() * 0.7;
        if (mixed - &want).amax() > 1e-12 * want.amax().max(1.0) {
            failures.push("information additivity");
            break;
        }
        if p.log_det(&d1).unwrap() < -40.0 {
            continue;
        }
        let k = p.k() as f64;
        let total: f64 = d1
            .points()
            .iter()
            .map(|q| q.weight * (p.sensitivity(&q.setting, &d1).unwrap() + k))
            .sum();
        if (total - k).abs() > 1e-9 {
            failures.push("sensitivity trace identity");
            break;
        }
    }

    let cands = CandidateSet::from_grid(&p, 11).unwrap();
    for r in [
        multiplicative(&cands, 300, 1e-9).unwrap(),
        fedorov_wynn(&cands, 300, 1e-9).unwrap(),
    ] {
        if !r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-10) {
            failures.push("baseline monotone log_det");
        }
    }

    let (_, sy) = load_problem(&preset("three_factor_restricted")).unwrap();
    let cfg = PsoConfig {
        n_particles: 15,
        max_iter: 60,
        max_resets: 2,
        seed: 3,
        ..PsoConfig::default()
    };
    let a = run_pso(&sy, &cfg).unwrap();
    if !a.trace.windows(2).all(|w| w[1] >= w[0]) {
        failures.push("gbest monotone trace");
    }
    let b = run_pso(&sy, &cfg).unwrap();
    if a.criterion.to_bits() != b.criterion.to_bits() || a.design != b.design || a.trace != b.trace {
        failures.push("fixed-seed reproducibility");
    }

    let flashing = FactorSpace::new(
        vec![
            Factor::continuous("T", 450.0, 460.0).unwrap(),
            Factor::continuous("P", 1000.0, 1300.0).unwrap(),
        ],
        vec![LinearConstraint::new(vec![10.0, 1.0], 5600.0, 5800.0)],
    )
    .unwrap();
    for _ in 0..1000 {
        let mut x = vec![rng.random_range(430.0..480.0), rng.random_range(900.0..1400.0)];
        let mut v = vec![0.0; 2];
        flashing.repair(&mut x, &mut v);
        let mut y = x.clone();
        flashing.repair(&mut y, &mut v);
        if (x[0] - y[0]).abs() > 1e-12 || (x[1] - y[1]).abs() > 1e-12 || !flashing.contains(&x, 1e-9) {
            failures.push("repair idempotence");
            break;
        }
    }

    let coarse = equivalence_check(&sy, &a.design, 101, 0.99).unwrap();
    let fine = equivalence_check(&sy, &a.design, 201, 0.99).unwrap();
    if (coarse.lower_bound - fine.lower_bound).abs() >= 0.005 {
        failures.push("resolution doubling");
    }

    if failures.is_empty() {
        (true, "all eight property groups hold".into())
    } else {
        (false, format!("failed: {}", failures.join(", ")))
    }
}

struct Misspec {
    probit_q99: f64,
    cloglog_q90: f64,
    cells: usize,
}

fn misspec_sweep() -> Misspec {
    let (config, problem) = load_problem(&preset("mixed_two_factor")).unwrap();
    let pso = config.pso_config(&PsoOverrides::default()).unwrap();
    let spec = SweepSpec::new(SweepMode::Misspec(vec![LinkKind::Probit, LinkKind::Cloglog]), 1.0, 0.5);
    let rows = cmd_sweep(&problem, &pso, &spec, None).unwrap();
    let col = |j: usize| rows.iter().map(|r| r.values[j]).collect::<Vec<_>>();
    Misspec {
        probit_q99: quantile(&col(0), 0.99),
        cloglog_q90: quantile(&col(1), 0.90),
        cells: rows.len(),
    }
}

fn main() -> ExitCode {
    // the test harness passes filter and format flags; only `--list` matters
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    if let Err(e) = psodesign_cli::init_workers() {
        eprintln!("{}", e.message());
    }
    let mut checks = vec![
        timed("three-factor", Duration::from_secs(30), three_factor),
        timed(
            "three-factor-restricted",
            Duration::from_secs(120),
            three_factor_restricted,
        ),
        timed("odor-factorials", Duration::from_secs(1), odor_factorials),
        timed("esd-factorial", Duration::from_secs(1), esd_factorial),
        timed("flashing", Duration::from_secs(120), flashing),
        timed("benchmark-continuous2", Duration::from_secs(300), continuous_benchmark),
        timed("one-factor", Duration::from_secs(30), one_factor),
        timed("properties", Duration::from_secs(60), properties),
    ];
    let t = Instant::now();
    let m = misspec_sweep();
    let elapsed = t.elapsed();
    let in_time = elapsed <= Duration::from_secs(1800);
    checks.push(Check {
        id: "misspec-probit",
        pass: m.probit_q99 >= 0.99 && in_time,
        detail: format!(
            "{} cells, probit 0.99-quantile {:.4}; {:.1}s",
            m.cells,
            m.probit_q99,
            elapsed.as_secs_f64()
        ),
    });
    checks.push(Check {
        id: "misspec-cloglog",
        pass: (m.cloglog_q90 - 0.9488).abs() <= 0.05 && in_time,
        detail: format!("cloglog 0.90-quantile {:.4} (target 0.9488 +/- 0.05)", m.cloglog_q90),
    });

    let mut unexpected = 0;
    for c in &checks {
        let known = KNOWN_GAPS.contains(&c.id);
        let tag = match (c.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known gap)",
            (false, false) => "FAIL",
        };
        println!("{tag} {}: {}", c.id, c.detail);
        if !c.pass && !known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
