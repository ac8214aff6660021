mod common;

use std::sync::Arc;

use exterior_heat::{
    assemble_operator, build_grid, classify_boundary, compute_profile, evolve, kernel_column, mass,
    parabolic_profile, step, DiscreteOperator, DomainSpec, Field, Hole, MaskShape, OuterCondition,
    ProfileOptions, SolverOptions, Stepping, ThetaSpec, TimeSchedule,
};

fn operator(spec: &DomainSpec<f64>, theta: f64, outer: OuterCondition) -> DiscreteOperator<f64> {
    let grid = Arc::new(build_grid(spec).unwrap());
    let mut spec_theta = ThetaSpec::constant(theta, outer);
    let first = spec_theta.components[0].clone();
    spec_theta.components.resize(grid.hole_components(), first);
    let bc = classify_boundary(&grid, &spec_theta).unwrap();
    assemble_operator(grid, &bc, 0.0).unwrap()
}

fn solver() -> SolverOptions {
    SolverOptions::with_tol(1e-12)
}

#[test]
fn planar_ladder_decays_like_inverse_log() {
    let base = DomainSpec::radial(2, 1.0, 4.0, 0.05);
    let theta = ThetaSpec::constant(0.0, OuterCondition::FixedOne);
    let options = ProfileOptions {
        window_radius: Some(2.0),
        ..ProfileOptions::default()
    };
    let result = compute_profile(&base, &theta, &[4.0, 8.0, 16.0, 32.0], &options).unwrap();
    let values = result.ladder_values_at(&[2.0]);
    for (v, big_r) in values.iter().zip([4.0, 8.0, 16.0, 32.0]) {
        let exact = common::annulus_profile(2, 1.0, big_r, 0.0, 2.0);
        assert!((v - exact).abs() < 1e-3, "R={big_r}: {v} vs {exact}");
    }
    assert!((values[0] - 0.5).abs() < 1e-3 && (values[3] - 0.2).abs() < 1e-3);
    assert!(!result.converged);
    assert!(result.monotonicity_excess <= 1e-9);
}

#[test]
fn spatial_ladder_settles_in_three_dimensions() {
    let base = DomainSpec::radial(3, 1.0, 8.0, 0.05);
    let theta = ThetaSpec::constant(0.5, OuterCondition::FixedOne);
    let result = compute_profile(
        &base,
        &theta,
        &[8.0, 16.0, 32.0, 64.0],
        &ProfileOptions::default(),
    )
    .unwrap();
    let diffs: Vec<f64> = result.ladder.iter().filter_map(|s| s.sup_diff).collect();
    for w in diffs.windows(2) {
        assert!(w[1] < w[0], "{diffs:?}");
    }
    let exact = common::annulus_profile(3, 1.0, 64.0, 0.5, 2.0);
    assert!((result.value_at(&[2.0]) - exact).abs() < 1e-3);
}

#[test]
fn profile_is_bounded_and_ordered_in_theta() {
    let base = DomainSpec::cartesian(2, Hole::Ball { radius: 1.0 }, 4.0, 0.25);
    let options = ProfileOptions::default();
    let mut previous: Option<Field<f64>> = None;
    for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let spec = ThetaSpec::constant(theta, OuterCondition::FixedOne);
        let phi = compute_profile(&base, &spec, &[4.0, 6.0], &options)
            .unwrap()
            .phi;
        for &v in phi.values() {
            assert!((-1e-10..=1.0 + 1e-10).contains(&v), "theta={theta}: {v}");
        }
        if let Some(prev) = &previous {
            for (a, b) in prev.values().iter().zip(phi.values()) {
                assert!(b - a >= -1e-9, "theta={theta}: {a} > {b}");
            }
        }
        previous = Some(phi);
    }
}

#[test]
fn bigger_hole_lowers_the_profile() {
    let small = DomainSpec::cartesian(2, Hole::Ball { radius: 0.5 }, 4.0, 0.25);
    let big = DomainSpec::cartesian(
        2,
        Hole::Mask(vec![
            MaskShape::Ball {
                center: vec![0.0, 0.0],
                radius: 0.5,
            },
            MaskShape::Box {
                center: vec![0.75, 0.0],
                half_widths: vec![0.5, 0.25],
            },
        ]),
        4.0,
        0.25,
    );
    let theta = ThetaSpec::constant(0.0, OuterCondition::FixedOne);
    let opts = ProfileOptions::default();
    let a = compute_profile(&small, &theta, &[4.0], &opts).unwrap().phi;
    let b = compute_profile(&big, &theta, &[4.0], &opts).unwrap().phi;
    let grid_b = b.grid();
    for i in 0..grid_b.node_count() {
        let j = a
            .grid()
            .node_at(&grid_b.key(i))
            .expect("big-hole grid is a subset");
        assert!(b.values()[i] <= a.values()[j] + 1e-9);
    }
}

fn bump(op: &DiscreteOperator<f64>, center: f64) -> Field<f64> {
    let grid = op.grid().clone();
    let mut f = Field::from_fn(grid.clone(), |i| (-(grid.radius(i) - center).powi(2)).exp());
    op.impose(&mut f);
    f
}

#[test]
fn steps_contract_and_preserve_order() {
    let spec = DomainSpec::cartesian(2, Hole::Ball { radius: 1.0 }, 4.0, 0.25);
    for theta in [0.0, 0.5, 1.0] {
        for outer in [OuterCondition::Dirichlet0, OuterCondition::Neumann0] {
            let op = operator(&spec, theta, outer);
            let u = bump(&op, 2.0);
            let v = Field::from_fn(op.grid().clone(), |i| u.values()[i] * 1.5 + 0.25);
            let mut v = v;
            op.impose(&mut v);
            let su = step(&op, &u, 0.1, &solver()).unwrap();
            let sv = step(&op, &v, 0.1, &solver()).unwrap();
            assert!(su.max_abs() <= u.max_abs() * (1.0 + 1e-12));
            for (a, b) in su.values().iter().zip(sv.values()) {
                assert!(b - a >= -1e-12, "{a} > {b}");
            }
        }
    }
}

#[test]
fn evolution_restarts_from_a_snapshot() {
    let spec = DomainSpec::radial(3, 1.0, 6.0, 0.1);
    let op = operator(&spec, 0.4, OuterCondition::Dirichlet0);
    let u0 = bump(&op, 2.5);
    let stepping = Stepping::Fixed(0.05);
    let full = evolve(
        &op,
        &u0,
        &TimeSchedule::new(vec![0.5, 1.0], stepping).unwrap(),
        &solver(),
    )
    .unwrap();
    let half = evolve(
        &op,
        &u0,
        &TimeSchedule::new(vec![0.5], stepping).unwrap(),
        &solver(),
    )
    .unwrap();
    let rest = evolve(
        &op,
        half.final_field(),
        &TimeSchedule::new(vec![0.5], stepping).unwrap(),
        &solver(),
    )
    .unwrap();
    for (a, b) in full
        .final_field()
        .values()
        .iter()
        .zip(rest.final_field().values())
    {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn kernel_is_symmetric_on_a_mask_domain() {
    let spec = DomainSpec::cartesian(
        2,
        Hole::Mask(vec![MaskShape::Box {
            center: vec![0.0, 0.0],
            half_widths: vec![0.75, 0.25],
        }]),
        3.0,
        0.25,
    );
    let op = operator(&spec, 0.3, OuterCondition::Dirichlet0);
    let grid = op.grid().clone();
    let x = grid.nearest_node(&[1.25, 0.5]);
    let y = grid.nearest_node(&[-0.5, -1.0]);
    let stepping = Stepping::Fixed(0.025);
    let kx = kernel_column(&op, x, 0.5, stepping, &solver()).unwrap();
    let ky = kernel_column(&op, y, 0.5, stepping, &solver()).unwrap();
    let (a, b) = (kx.values()[y], ky.values()[x]);
    assert!(a > 0.0);
    assert!((a - b).abs() <= 1e-9 * a.abs(), "{a} vs {b}");
}

#[test]
fn kernel_grows_with_theta() {
    let spec = DomainSpec::radial(2, 1.0, 5.0, 0.1);
    let stepping = Stepping::Fixed(0.02);
    let mut previous: Option<Field<f64>> = None;
    for theta in [0.0, 0.3, 0.6, 1.0] {
        let op = operator(&spec, theta, OuterCondition::Neumann0);
        let node = op.grid().nearest_node(&[1.5]);
        let k = kernel_column(&op, node, 0.4, stepping, &solver()).unwrap();
        if let Some(prev) = &previous {
            for (a, b) in prev.values().iter().zip(k.values()) {
                assert!(
                    b - a >= -1e-10 * b.abs().max(1e-12),
                    "theta={theta}: {a} > {b}"
                );
            }
        }
        previous = Some(k);
    }
}

#[test]
fn planar_sup_norm_decays_like_inverse_time() {
    let spec = DomainSpec::radial(2, 1.0, 200.0, 0.25);
    let op = operator(&spec, 1.0, OuterCondition::Neumann0);
    let u0 = bump(&op, 2.0);
    let schedule = TimeSchedule::new(
        vec![10.0, 100.0],
        Stepping::Geometric {
            dt0: 0.01,
            growth: 1.05,
        },
    )
    .unwrap();
    let result = evolve(&op, &u0, &schedule, &solver()).unwrap();
    let sup: Vec<f64> = result.snapshots.iter().map(|(_, u)| u.max_abs()).collect();
    let slope = (sup[1] / sup[0]).ln() / 10f64.ln();
    assert!((slope + 1.0).abs() <= 0.15, "slope {slope}");
    let drift = (mass(result.final_field()) - mass(&u0)).abs() / mass(&u0);
    assert!(drift < 1e-9);
}

#[test]
fn parabolic_profile_is_one_for_neumann() {
    let spec = DomainSpec::radial(2, 1.0, 8.0, 0.1);
    let op = operator(&spec, 1.0, OuterCondition::FixedOne);
    let p = parabolic_profile(&op, &[1.0, 10.0], Stepping::Fixed(0.05), &solver()).unwrap();
    for &v in p.field.values() {
        assert!((v - 1.0).abs() < 1e-10);
    }
    assert!(p.warnings.is_empty());
}

#[test]
fn planar_parabolic_profile_decreases_in_time() {
    let spec = DomainSpec::radial(2, 1.0, 40.0, 0.1);
    let op = operator(&spec, 0.0, OuterCondition::FixedOne);
    let times = [1.0, 4.0, 16.0, 64.0];
    let p = parabolic_profile(
        &op,
        &times,
        Stepping::Geometric {
            dt0: 0.01,
            growth: 1.05,
        },
        &solver(),
    )
    .unwrap();
    let node = op.grid().nearest_node(&[2.0]);
    let values: Vec<f64> = p.snapshots.iter().map(|(_, u)| u.values()[node]).collect();
    for w in values.windows(2) {
        assert!(w[1] < w[0], "{values:?}");
    }
    assert!(p.monotonicity_excess <= 1e-10);
}
