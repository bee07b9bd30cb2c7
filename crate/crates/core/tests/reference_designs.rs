use psodesign_core::{
    equivalence_check, multiplicative_from, CandidateSet, Design, Factor, FactorSpace, LinearConstraint, LinkKind,
    ModelSpec, Problem,
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

fn four_point() -> Design {
    Design::uniform(vec![
        vec![-2.0, -1.0, -2.544],
        vec![-2.0, 1.0, -1.457],
        vec![2.0, -1.0, 1.544],
        vec![2.0, 1.0, -1.544],
    ])
    .unwrap()
}

fn esd() -> Problem {
    let mut f: Vec<Factor> = ["A", "B", "ESD", "Pulse"].into_iter().map(Factor::binary).collect();
    f.push(Factor::continuous("Voltage", 25.0, 45.0).unwrap());
    Problem::new(
        FactorSpace::unconstrained(f).unwrap(),
        ModelSpec::new(true, (0..5).collect(), vec![(2, 3)], LinkKind::Logit),
        vec![-7.5, 1.5, -0.2, -0.15, 0.25, 0.35, 0.4],
    )
    .unwrap()
}

fn esd_design() -> Design {
    let rows: [[f64; 6]; 14] = [
        [-1., -1., -1., -1., 25.00, 0.0765],
        [-1., -1., -1., -1., 27.55, 0.0133],
        [-1., -1., -1., 1., 28.68, 0.0731],
        [-1., -1., -1., 1., 25.00, 0.0355],
        [-1., -1., 1., -1., 25.00, 0.1164],
        [-1., -1., 1., 1., 25.00, 0.0855],
        [-1., 1., -1., -1., 29.06, 0.0056],
        [-1., 1., -1., -1., 25.00, 0.0882],
        [-1., 1., -1., 1., 25.00, 0.1012],
        [-1., 1., 1., -1., 25.00, 0.0344],
        [-1., 1., 1., -1., 32.77, 0.1312],
        [-1., 1., 1., 1., 25.00, 0.0922],
        [1., -1., 1., -1., 25.00, 0.0138],
        [1., 1., 1., -1., 25.00, 0.1330],
    ];
    Design::from_parts(
        rows.iter().map(|r| r[..5].to_vec()).collect(),
        rows.iter().map(|r| r[5]).collect(),
    )
    .unwrap()
}

fn flashing() -> Problem {
    let space = FactorSpace::new(
        vec![
            Factor::continuous("Temperature", 450.0, 460.0).unwrap(),
            Factor::continuous("Pressure", 1000.0, 1300.0).unwrap(),
        ],
        vec![LinearConstraint::new(vec![10.0, 1.0], 5600.0, 5800.0)],
    )
    .unwrap();
    Problem::new(
        space,
        ModelSpec::main_effects(2, LinkKind::Logit),
        vec![0.05, 0.003, 0.007],
    )
    .unwrap()
}

/// Re-solves the weights on a fixed support; printed weights are rounded
/// to a few decimals, which is enough to shift sensitivities by ~1e-2.
fn refit_weights(p: &Problem, d: &Design) -> Design {
    let settings: Vec<Vec<f64>> = d.settings().map(<[f64]>::to_vec).collect();
    let cands = CandidateSet::new(p, settings).unwrap();
    let w = multiplicative_from(&cands, &d.weights(), 100_000, 1e-12).unwrap();
    d.with_weights(&w.weights).unwrap()
}

#[test]
fn four_point_design_has_zero_sensitivity_at_its_support() {
    let p = three_factor(10.0);
    let d = four_point();
    for pt in d.points() {
        assert!(p.sensitivity(&pt.setting, &d).unwrap().abs() < 1e-2);
    }
    assert!(equivalence_check(&p, &d, 201, 0.99).unwrap().pass);
}

#[test]
fn eight_point_and_four_point_designs_are_equally_good() {
    let p = three_factor(10.0);
    let eight = Design::uniform(vec![
        vec![-2.0, -1.0, -0.456],
        vec![-2.0, -1.0, -2.544],
        vec![-2.0, 1.0, -1.456],
        vec![-2.0, 1.0, -3.544],
        vec![2.0, -1.0, 1.544],
        vec![2.0, -1.0, -0.544],
        vec![2.0, 1.0, 0.544],
        vec![2.0, 1.0, -1.544],
    ])
    .unwrap();
    let e = p.d_efficiency(&four_point(), &eight).unwrap();
    assert!((e - 1.0).abs() < 1e-3, "{e}");
}

#[test]
fn esd_design_support_residuals_vanish_once_weights_are_refit() {
    let p = esd();
    let printed = esd_design();
    assert!(equivalence_check(&p, &printed, 101, 0.99).unwrap().pass);
    let d = refit_weights(&p, &printed);
    for pt in d.points() {
        assert!(p.sensitivity(&pt.setting, &d).unwrap().abs() < 1e-2);
    }
}

#[test]
fn constrained_flashing_design_is_optimal_on_the_feasible_grid() {
    let p = flashing();
    let d = Design::uniform(vec![vec![450.0, 1100.0], vec![460.0, 1200.0], vec![460.0, 1000.0]]).unwrap();
    let r = equivalence_check(&p, &d, 101, 0.99).unwrap();
    assert!(r.max_sensitivity <= 1e-2, "{}", r.max_sensitivity);
    let printed = d.with_weights(&[0.334, 0.335, 0.331]).unwrap();
    assert!(equivalence_check(&p, &printed, 101, 0.99).unwrap().pass);
}
