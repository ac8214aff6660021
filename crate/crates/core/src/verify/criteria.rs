//! The acceptance criteria, each reproduced at desk scale.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::boundary::{classify_boundary, OuterCondition, ThetaSpec};
use crate::error::Result;
use crate::field::Field;
use crate::geometry::{build_grid, DomainSpec, Hole, MaskShape};
use crate::heat::{evolve, parabolic_profile, Stepping, TimeSchedule};
use crate::initial::InitialShape;
use crate::linsolve::SolverOptions;
use crate::mass::{
    asymptotic_mass, conserved_functional, dirichlet_ball_eigenpair, fit_decay_exponent, mass,
    relative_drift, slow_decay_construct, SlowDecayOptions,
};
use crate::operator::{assemble_operator, DiscreteOperator};
use crate::profile::{
    closed_form_profile, compute_profile, profile_constant, solve_truncated_profile, ProfileOptions,
};
use crate::verify::oracles::{annulus_asymptotic_mass_3d, ball_eigenvalue};
use crate::verify::properties::{run_properties, PropertyOptions};
use crate::verify::{CriteriaOptions, Measurement, Outcome};

fn outcome(id: &str, title: &str, measurements: Vec<Measurement>, start: Instant) -> Outcome {
    Outcome::new(id, title, measurements, Some(start.elapsed().as_secs_f64()))
}

fn failed(id: &str, title: &str, err: crate::error::Error, start: Instant) -> Outcome {
    let mut o = outcome(id, title, vec![], start);
    o.passed = false;
    o.error = Some(err.to_string());
    o
}

fn run(id: &str, title: &str, body: impl FnOnce() -> Result<Vec<Measurement>>) -> Outcome {
    let start = Instant::now();
    match body() {
        Ok(m) => outcome(id, title, m, start),
        Err(e) => failed(id, title, e, start),
    }
}

fn op_for(
    grid: &Arc<crate::geometry::Grid<f64>>,
    theta: &ThetaSpec<f64>,
) -> Result<DiscreteOperator<f64>> {
    let bc = classify_boundary(grid, theta)?;
    assemble_operator(grid.clone(), &bc, 0.0)
}

fn maybe_par<T: Send, R: Send>(
    items: Vec<T>,
    parallel: bool,
    f: impl Fn(T) -> R + Sync + Send,
) -> Vec<R> {
    if parallel {
        items.into_par_iter().map(f).collect()
    } else {
        items.into_iter().map(f).collect()
    }
}

/// Radial truncated profiles against the closed form of the annulus problem.
pub fn closed_form_profiles(opts: &CriteriaOptions) -> Outcome {
    run("C1", "closed-form truncated profiles", || {
        let cases: Vec<(usize, f64)> = (1..=3)
            .flat_map(|n| [0.0, 0.25, 0.5, 0.75].map(|t| (n, t)))
            .collect();
        let results = maybe_par(cases, opts.parallel, |(n, theta)| -> Result<Measurement> {
            let spec = DomainSpec::radial(n, 1.0, 4.0, 0.01);
            let phi = solve_truncated_profile(
                &spec,
                &ThetaSpec::constant(theta, OuterCondition::FixedOne),
                &SolverOptions::with_tol(1e-12),
            )?;
            let grid = phi.grid();
            let mut sup = 0.0f64;
            for i in 0..grid.node_count() {
                let exact = closed_form_profile(n, 1.0, theta, grid.radius(i), Some(4.0))?;
                sup = sup.max((phi.values()[i] - exact).abs());
            }
            let limit = if theta == 0.0 { 0.01 } else { 0.03 };
            Ok(Measurement::at_most(
                format!("sup error N={n} theta={theta}"),
                sup,
                limit,
            ))
        });
        results.into_iter().collect()
    })
}

/// Limit profile for `N = 3` against `1 - 1/(C |x|)` and `C_{1/2} = 2`.
pub fn limit_profile(opts: &CriteriaOptions) -> Outcome {
    run("C2", "limit profile and profile constant", || {
        let base = DomainSpec::radial(3, 1.0f64, 4.0, 0.05);
        let options = ProfileOptions {
            solver: SolverOptions::with_tol(1e-12),
            ..ProfileOptions::default()
        };
        let results = maybe_par(
            vec![0.0, 0.5],
            opts.parallel,
            |theta| -> Result<Vec<Measurement>> {
                let res = compute_profile(
                    &base,
                    &ThetaSpec::constant(theta, OuterCondition::FixedOne),
                    &[4.0, 8.0, 16.0, 32.0],
                    &options,
                )?;
                let c = profile_constant(3, theta, 1.0);
                let exact = 1.0 - 1.0 / (c * 2.0);
                Ok(vec![
                    Measurement::at_most(
                        format!("|Phi(2) - (1 - 1/(2C))| theta={theta}"),
                        (res.value_at(&[2.0]) - exact).abs(),
                        0.02,
                    ),
                    Measurement::at_most(
                        format!("ladder increase theta={theta}"),
                        res.monotonicity_excess,
                        1e-9,
                    ),
                ])
            },
        );
        let mut out = vec![Measurement::at_most(
            "|C_{1/2} - 2|",
            (profile_constant(3, 0.5f64, 1.0) - 2.0).abs(),
            1e-12,
        )];
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    })
}

/// `N = 2` ladder follows `log 2 / log R`; `N = 3` stays above the
/// enclosing-ball lower bound.
pub fn dimension_dichotomy(opts: &CriteriaOptions) -> Outcome {
    run("C3", "dimension dichotomy", || {
        let two = || -> Result<Vec<Measurement>> {
            let ladder = [4.0f64, 8.0, 16.0, 32.0, 64.0, 128.0];
            let res = compute_profile(
                &DomainSpec::radial(2, 1.0, 4.0, 0.05),
                &ThetaSpec::constant(0.0, OuterCondition::FixedOne),
                &ladder,
                &ProfileOptions {
                    solver: SolverOptions::with_tol(1e-12),
                    ..ProfileOptions::default()
                },
            )?;
            let values = res.ladder_values_at(&[2.0]);
            let mut worst = 0.0f64;
            for (v, r) in values.iter().zip(ladder) {
                let law = 2f64.ln() / r.ln();
                worst = worst.max((v / law - 1.0).abs());
            }
            let increase = values
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(vec![
                Measurement::at_most("N=2 relative error vs log 2/log R", worst, 0.02),
                Measurement::at_most("N=2 largest increase along the ladder", increase, 0.0),
                Measurement::at_most(
                    "N=2 last/first ladder value",
                    values[values.len() - 1] / values[0],
                    0.5,
                ),
            ])
        };
        let three = || -> Result<Vec<Measurement>> {
            let h = 0.25;
            let base = DomainSpec::cartesian(
                3,
                Hole::Mask(vec![MaskShape::Box {
                    center: vec![0.0; 3],
                    half_widths: vec![0.5; 3],
                }]),
                4.0,
                h,
            );
            let res = compute_profile(
                &base,
                &ThetaSpec::constant(0.0, OuterCondition::FixedOne),
                &[4.0, 8.0],
                &ProfileOptions {
                    solver: SolverOptions::with_tol(1e-10),
                    ..ProfileOptions::default()
                },
            )?;
            let grid = res.grid();
            // Dirichlet data sit on masked nodes, all inside |x| <= extent.
            let c = grid.hole_extent() + h;
            let mut below = f64::NEG_INFINITY;
            let mut above = f64::NEG_INFINITY;
            for i in 0..grid.node_count() {
                let v = res.phi.values()[i];
                below = below.max(1.0 - c / grid.radius(i) - v);
                above = above.max(v - 1.0);
            }
            Ok(vec![
                Measurement::at_most("N=3 max(1 - C/|x| - Phi)", below, 1e-9),
                Measurement::at_most("N=3 max(Phi - 1)", above, 1e-9),
                Measurement::at_most("N=3 ladder increase", res.monotonicity_excess, 1e-8),
            ])
        };
        let (a, b) = if opts.parallel {
            rayon::join(two, three)
        } else {
            (two(), three())
        };
        let mut out = a?;
        out.extend(b?);
        Ok(out)
    })
}

fn annulus(grid: &Arc<crate::geometry::Grid<f64>>) -> Result<Field<f64>> {
    InitialShape::IndicatorAnnulus {
        inner: 2.0,
        outer: 3.0,
    }
    .sample(grid)
}

/// Neumann evolution keeps its mass over at least 1000 steps.
pub fn neumann_conservation(_opts: &CriteriaOptions) -> Outcome {
    run("C4", "Neumann mass conservation", || {
        let grid = Arc::new(build_grid(&DomainSpec::radial(3, 1.0, 10.0, 0.05))?);
        let op = op_for(&grid, &ThetaSpec::constant(1.0, OuterCondition::Neumann0))?;
        let u0 = annulus(&grid)?;
        let times: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let schedule = TimeSchedule::new(times, Stepping::Fixed(0.01))?;
        let res = evolve(&op, &u0, &schedule, &SolverOptions::with_tol(1e-13))?;
        Ok(vec![
            Measurement::at_least("steps", res.steps as f64, 1000.0),
            Measurement::at_most(
                "relative mass drift",
                relative_drift(&res.mass_trace.points),
                1e-8,
            ),
        ])
    })
}

/// Parabolic and elliptic profiles agree; `Phi_h` is a fixed point of `S_h`.
pub fn profiles_coincide(_opts: &CriteriaOptions) -> Outcome {
    run("C5", "elliptic and parabolic profiles coincide", || {
        let h = 0.05;
        let theta = ThetaSpec::constant(0.0, OuterCondition::FixedOne);
        let tight = SolverOptions::with_tol(1e-12);
        let res = compute_profile(
            &DomainSpec::radial(3, 1.0, 16.0, h),
            &theta,
            &[16.0, 32.0],
            &ProfileOptions {
                window_radius: Some(8.0),
                solver: tight,
                ..ProfileOptions::default()
            },
        )?;
        let phi = &res.phi;
        let op = op_for(phi.grid(), &theta)?;
        let parabolic = parabolic_profile(
            &op,
            &[10.0, 100.0, 1e3, 1e4, 1e5],
            Stepping::Geometric {
                dt0: h * h,
                growth: 1.05,
            },
            &tight,
        )?;
        let mut rel = 0.0f64;
        for &i in &res.window_nodes {
            let (p, e) = (parabolic.field.values()[i], phi.values()[i]);
            if e > 0.0 {
                rel = rel.max((p - e).abs() / e);
            } else {
                rel = rel.max(p.abs());
            }
        }
        let schedule = TimeSchedule::new(vec![1.0, 5.0, 10.0, 50.0], Stepping::Fixed(0.5))?;
        let fixed = evolve(&op, phi, &schedule, &SolverOptions::with_tol(1e-13))?;
        let mut moved = 0.0f64;
        for (_, snap) in &fixed.snapshots {
            for (a, b) in snap.values().iter().zip(phi.values()) {
                moved = moved.max((a - b).abs());
            }
        }
        Ok(vec![
            Measurement::at_most("max relative gap on window", rel, 0.02),
            Measurement::at_most("max |S(t) Phi - Phi|", moved, 1e-8),
            Measurement::at_most("S(t) 1 increase", parabolic.monotonicity_excess, 1e-9),
        ])
    })
}

/// `<u0, Phi_h>` for the annulus indicator and the conserved functional.
pub fn asymptotic_mass_formula(_opts: &CriteriaOptions) -> Outcome {
    run("C6", "asymptotic mass formula", || {
        let h = 0.05;
        let res = compute_profile(
            &DomainSpec::radial(3, 1.0, 32.0, h),
            &ThetaSpec::constant(0.0, OuterCondition::FixedOne),
            &[32.0, 64.0, 128.0, 256.0],
            &ProfileOptions {
                window_radius: Some(16.0),
                solver: SolverOptions::with_tol(1e-12),
                ..ProfileOptions::default()
            },
        )?;
        let grid = res.grid().clone();
        let u0 = annulus(&grid)?;
        let m_inf = asymptotic_mass(&u0, &res)?;
        let oracle = annulus_asymptotic_mass_3d(2.0, 3.0, 1.0);

        let op = op_for(&grid, &ThetaSpec::constant(0.0, OuterCondition::Dirichlet0))?;
        let schedule = TimeSchedule::log_spaced(
            0.1,
            50.0,
            20,
            Stepping::Geometric {
                dt0: h * h,
                growth: 1.05,
            },
        )?;
        let evo = evolve(&op, &u0, &schedule, &SolverOptions::with_tol(1e-12))?;
        let functional = conserved_functional(&u0, &evo, &res.phi)?;
        Ok(vec![
            Measurement::at_most(
                "relative error of <u0, Phi_h> vs 46 pi/3",
                (m_inf / oracle - 1.0).abs(),
                0.02,
            ),
            Measurement::at_most(
                "relative drift of <u(t), Phi_h>",
                relative_drift(&functional),
                1e-6,
            ),
            Measurement::info("<u0, Phi_h>", m_inf),
        ])
    })
}

/// Mass decay exponent `-(N-2)/2` for `N = 3`.
pub fn decay_rate(_opts: &CriteriaOptions) -> Outcome {
    run("C7", "mass decay rate", || {
        let h = 0.1;
        let theta = ThetaSpec::constant(0.0, OuterCondition::FixedOne);
        let res = compute_profile(
            &DomainSpec::radial(3, 1.0, 64.0, h),
            &theta,
            &[64.0, 128.0, 256.0, 512.0, 1024.0],
            &ProfileOptions {
                window_radius: Some(32.0),
                solver: SolverOptions::with_tol(1e-12),
                ..ProfileOptions::default()
            },
        )?;
        let grid = Arc::new(build_grid(&DomainSpec::radial(3, 1.0, 256.0, h))?);
        let u0 = annulus(&grid)?;
        let m_inf = asymptotic_mass(&u0, &res)?;
        let op = op_for(&grid, &theta.with_outer(OuterCondition::Dirichlet0))?;
        let schedule = TimeSchedule::log_spaced(
            10.0,
            1000.0,
            41,
            Stepping::Geometric {
                dt0: h * h,
                growth: 1.05,
            },
        )?;
        let evo = evolve(&op, &u0, &schedule, &SolverOptions::with_tol(1e-12))?;
        let fit = fit_decay_exponent(&evo.mass_trace, m_inf, (10.0, 1000.0))?;
        Ok(vec![
            Measurement::within("fitted exponent", fit.exponent, -0.6, -0.4),
            Measurement::at_least("r^2", fit.r_squared, 0.98),
            Measurement::at_most("truncation warnings", evo.warnings.len() as f64, 0.0),
        ])
    })
}

/// Slow-decay plan invariants and the single-bump lower bound.
pub fn slow_decay(_opts: &CriteriaOptions) -> Outcome {
    run("C8", "slow decay construction", || {
        let h = 0.2;
        let g = |t: f64| if t <= 1.0 { 1.0 } else { 1.0 / t };
        let plan_domain = DomainSpec::cartesian(2, Hole::Ball { radius: 1.0 }, 1e3, h);
        let plan = slow_decay_construct(
            &plan_domain,
            &g,
            "min(1, 1/t)",
            &SlowDecayOptions {
                bumps: 5,
                ..SlowDecayOptions::default()
            },
        )?;
        let invariants = plan.check_invariants().is_ok();
        let b1 = plan.bumps[0].clone();
        let extent = b1.center + b1.radius + 4.0 * b1.time.sqrt();
        let big_r = (extent / h).ceil() * h + h;
        let grid = Arc::new(build_grid(&DomainSpec::cartesian(
            2,
            Hole::Ball { radius: 1.0 },
            big_r,
            h,
        ))?);
        let u0 = plan.initial_datum(&grid, &[1])?;
        let op = op_for(&grid, &ThetaSpec::constant(0.0, OuterCondition::Dirichlet0))?;
        let schedule = TimeSchedule::new(
            vec![b1.time],
            Stepping::Geometric {
                dt0: h * h,
                growth: 1.05,
            },
        )?;
        let evo = evolve(&op, &u0, &schedule, &SolverOptions::with_tol(1e-10))?;
        let m = mass(evo.final_field());
        Ok(vec![
            Measurement::at_least(
                "plan invariants hold (1 = yes)",
                f64::from(u8::from(invariants)),
                1.0,
            ),
            Measurement::at_least("bumps planned", plan.bumps.len() as f64, 5.0),
            Measurement::at_least("mass at t_1", m, 0.95 * 0.25),
            Measurement::info("initial bump mass", mass(&u0)),
        ])
    })
}

/// Randomised comparison-principle suite.
pub fn property_suite(opts: &CriteriaOptions) -> Outcome {
    run("C9", "property suites", || {
        let report = run_properties(&PropertyOptions {
            cases: opts.property_cases.max(50),
            seed: opts.seed,
            assembly: opts.assembly,
            parallel: opts.parallel,
        });
        let mut out = vec![Measurement::at_most(
            "largest grid",
            report.max_nodes as f64,
            1e4,
        )];
        for c in &report.checks {
            out.push(Measurement::at_least(
                format!("{} runs", c.property),
                c.runs as f64,
                50.0,
            ));
            out.push(Measurement::at_most(
                format!("{} violations", c.property),
                c.violations as f64,
                0.0,
            ));
        }
        Ok(out)
    })
}

/// First Dirichlet eigenvalues of the unit ball.
pub fn eigenpairs(opts: &CriteriaOptions) -> Outcome {
    run("C10", "ball eigenpair oracle", || {
        let results = maybe_par(vec![1, 2, 3], opts.parallel, |n| -> Result<Measurement> {
            let e = dirichlet_ball_eigenpair::<f64>(n, 1000)?;
            Ok(Measurement::at_most(
                format!("relative error lambda N={n}"),
                (e.lambda / ball_eigenvalue(n) - 1.0).abs(),
                1e-3,
            ))
        });
        results.into_iter().collect()
    })
}

pub type Criterion = fn(&CriteriaOptions) -> Outcome;

pub const ALL: [Criterion; 10] = [
    closed_form_profiles,
    limit_profile,
    dimension_dichotomy,
    neumann_conservation,
    profiles_coincide,
    asymptotic_mass_formula,
    decay_rate,
    slow_decay,
    property_suite,
    eigenpairs,
];
