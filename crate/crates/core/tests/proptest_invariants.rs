use std::sync::Arc;

use exterior_heat::mass::fit_power_law;
use exterior_heat::{
    assemble_operator, build_grid, classify_boundary, closed_form_profile, mass, robin_coefficient,
    step, DomainSpec, Field, OuterCondition, SolverOptions, Stepping, ThetaSpec, TimeSchedule,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn robin_coefficient_decreases(a in 0.001f64..0.999, b in 0.001f64..0.999) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        let blo = robin_coefficient(lo).unwrap().finite().unwrap();
        let bhi = robin_coefficient(hi).unwrap().finite().unwrap();
        prop_assert!(blo > bhi && bhi > 0.0);
    }

    #[test]
    fn closed_forms_are_bounded_and_monotone(
        n in 1usize..=4,
        r in 0.2f64..2.0,
        span in 0.5f64..20.0,
        theta in 0.0f64..1.0,
        frac in 0.0f64..1.0,
    ) {
        let big_r = r + span;
        let s = r + frac * span;
        let v = closed_form_profile(n, r, theta, s, Some(big_r)).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        let outer = closed_form_profile(n, r, theta, (s + 0.1).min(big_r), Some(big_r)).unwrap();
        prop_assert!(outer >= v - 1e-12);
        let more = closed_form_profile(n, r, (theta + 0.05).min(1.0), s, Some(big_r)).unwrap();
        prop_assert!(more >= v - 1e-12);
        if n >= 3 {
            let limit = closed_form_profile(n, r, theta, s, None).unwrap();
            prop_assert!(limit <= v + 1e-12);
        }
    }

    #[test]
    fn schedules_land_on_every_output(
        t1 in 0.01f64..5.0,
        gaps in prop::collection::vec(0.01f64..5.0, 0..5),
        dt0 in 0.001f64..0.5,
        growth in 1.0f64..1.3,
    ) {
        let mut times = vec![t1];
        for g in gaps {
            times.push(times.last().unwrap() + g);
        }
        let schedule = TimeSchedule::new(times.clone(), Stepping::Geometric { dt0, growth }).unwrap();
        let mut t = 0.0;
        let mut hit = Vec::new();
        for (dt, out) in schedule.steps() {
            prop_assert!(dt > 0.0);
            t += dt;
            if let Some(k) = out {
                prop_assert!((t - times[k]).abs() <= 1e-9 * times[k]);
                t = times[k];
                hit.push(k);
            }
        }
        prop_assert_eq!(hit, (0..times.len()).collect::<Vec<_>>());
    }

    #[test]
    fn steps_keep_sign_and_do_not_create_mass(
        n in 1usize..=3,
        theta in 0.0f64..=1.0,
        dt in 0.001f64..2.0,
        seed in prop::collection::vec(0.0f64..1.0, 8),
    ) {
        let grid = Arc::new(build_grid(&DomainSpec::radial(n, 1.0, 3.0, 0.25)).unwrap());
        let bc = classify_boundary(&grid, &ThetaSpec::constant(theta, OuterCondition::Dirichlet0)).unwrap();
        let op = assemble_operator(grid.clone(), &bc, 0.0).unwrap();
        let mut u = Field::from_fn(grid, |i| seed[i % seed.len()]);
        op.impose(&mut u);
        let next = step(&op, &u, dt, &SolverOptions::with_tol(1e-12)).unwrap();
        let scale = u.max_abs().max(1e-300);
        prop_assert!(next.values().iter().all(|&v| v >= -1e-10 * scale));
        prop_assert!(mass(&next) <= mass(&u) * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn power_law_fit_recovers_parameters(p in -2.0f64..-0.1, amp in 0.01f64..100.0) {
        let points: Vec<(f64, f64)> = (0..12)
            .map(|k| {
                let t = 10f64.powf(1.0 + k as f64 / 11.0);
                (t, amp * t.powf(p))
            })
            .collect();
        let fit = fit_power_law(&points).unwrap();
        prop_assert!((fit.exponent - p).abs() < 1e-9);
        prop_assert!((fit.amplitude - amp).abs() < 1e-8 * amp);
    }
}
