mod common;

use std::sync::Arc;

use exterior_heat::mass::relative_drift;
use exterior_heat::{
    assemble_operator, asymptotic_mass, build_grid, classify_boundary, compute_profile,
    conserved_functional, evolve, mass, DomainSpec, Field, InitialShape, OuterCondition,
    ProfileOptions, SolverOptions, Stepping, ThetaSpec, TimeSchedule,
};

fn annulus() -> InitialShape {
    InitialShape::IndicatorAnnulus {
        inner: 1.5,
        outer: 2.5,
    }
}

fn profile_opts() -> ProfileOptions<f64> {
    ProfileOptions {
        window_radius: Some(3.0),
        ..ProfileOptions::default()
    }
}

#[test]
fn neumann_keeps_all_mass() {
    let base = DomainSpec::radial(3, 1.0, 8.0, 0.05);
    let theta = ThetaSpec::constant(1.0, OuterCondition::FixedOne);
    let profile = compute_profile(&base, &theta, &[8.0, 16.0], &profile_opts()).unwrap();
    let u0 = annulus().sample(profile.grid()).unwrap();
    let m_inf = asymptotic_mass(&u0, &profile).unwrap();
    assert!((m_inf - mass(&u0)).abs() < 1e-9 * mass(&u0));
}

#[test]
fn planar_asymptotic_mass_vanishes_along_the_ladder() {
    let base = DomainSpec::radial(2, 1.0, 8.0, 0.05);
    let theta = ThetaSpec::constant(0.5, OuterCondition::FixedOne);
    let ladder = [8.0, 32.0, 128.0, 512.0];
    let masses: Vec<f64> = ladder
        .iter()
        .map(|&r| {
            let p = compute_profile(&base, &theta, &[r], &profile_opts()).unwrap();
            let u0 = annulus().sample(p.grid()).unwrap();
            asymptotic_mass(&u0, &p).unwrap() / mass(&u0)
        })
        .collect();
    for (m, &r) in masses.iter().zip(&ladder) {
        let bound = common::annulus_profile(2, 1.0, r, 0.5, 2.5);
        assert!(*m <= bound + 1e-3, "R={r}: {m} > {bound}");
    }
    for w in masses.windows(2) {
        assert!(w[1] < w[0], "{masses:?}");
    }
    assert!(masses[3] < 0.5 * masses[0]);
}

#[test]
fn asymptotic_mass_grows_with_theta() {
    let base = DomainSpec::radial(3, 1.0, 8.0, 0.05);
    let mut previous = -1.0;
    for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let spec = ThetaSpec::constant(theta, OuterCondition::FixedOne);
        let p = compute_profile(&base, &spec, &[8.0, 16.0], &profile_opts()).unwrap();
        let u0 = annulus().sample(p.grid()).unwrap();
        let m = asymptotic_mass(&u0, &p).unwrap();
        assert!(m > previous, "theta={theta}: {m} <= {previous}");
        previous = m;
    }
}

#[test]
fn support_outside_the_window_is_rejected() {
    let base = DomainSpec::radial(3, 1.0, 8.0, 0.1);
    let theta = ThetaSpec::constant(0.5, OuterCondition::FixedOne);
    let p = compute_profile(&base, &theta, &[8.0], &profile_opts()).unwrap();
    let wide = InitialShape::IndicatorAnnulus {
        inner: 2.0,
        outer: 5.0,
    };
    let u0 = wide.sample(p.grid()).unwrap();
    assert!(asymptotic_mass(&u0, &p).is_err());
}

#[test]
fn functional_with_unit_profile_is_the_mass() {
    let spec = DomainSpec::radial(3, 1.0, 12.0, 0.1);
    let grid = Arc::new(build_grid(&spec).unwrap());
    let theta = ThetaSpec::constant(1.0, OuterCondition::Neumann0);
    let bc = classify_boundary(&grid, &theta).unwrap();
    let op = assemble_operator(grid.clone(), &bc, 0.0).unwrap();
    let u0 = annulus().sample(&grid).unwrap();
    let schedule = TimeSchedule::new(vec![0.5, 2.0, 5.0], Stepping::Fixed(0.05)).unwrap();
    let result = evolve(&op, &u0, &schedule, &SolverOptions::with_tol(1e-12)).unwrap();
    let one = Field::constant(grid, 1.0);
    let series: Vec<(f64, f64)> = conserved_functional(&u0, &result, &one).unwrap();
    for ((t, f), (tm, m)) in series.iter().zip(&result.mass_trace.points) {
        assert_eq!(t, tm);
        assert!((f - m).abs() < 1e-12 * m.abs(), "{f} vs {m}");
    }
    assert!(relative_drift(&series) < 1e-9);
}

#[test]
fn dirichlet_mass_decreases_towards_the_asymptote() {
    let base = DomainSpec::radial(3, 1.0, 32.0, 0.1);
    let theta = ThetaSpec::constant(0.0, OuterCondition::FixedOne);
    let p = compute_profile(&base, &theta, &[32.0], &profile_opts()).unwrap();
    let grid = p.grid().clone();
    let u0 = annulus().sample(&grid).unwrap();
    let m_inf = asymptotic_mass(&u0, &p).unwrap();
    let bc = classify_boundary(&grid, &theta.with_outer(OuterCondition::Neumann0)).unwrap();
    let op = assemble_operator(grid, &bc, 0.0).unwrap();
    let schedule =
        TimeSchedule::new(vec![1.0, 4.0, 16.0], Stepping::geometric_for(op.grid())).unwrap();
    let result = evolve(&op, &u0, &schedule, &SolverOptions::with_tol(1e-12)).unwrap();
    let masses: Vec<f64> = result.mass_trace.masses().collect();
    for w in masses.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!(
        *masses.last().unwrap() > m_inf * 0.99,
        "{masses:?} vs {m_inf}"
    );
}
