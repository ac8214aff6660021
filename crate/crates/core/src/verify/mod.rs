//! Self-checks: a quick tier of small exact checks and the full acceptance
//! criteria. Failures are reported as data, never as errors.

pub mod criteria;
pub mod oracles;
pub mod properties;

use std::sync::Arc;

use serde::Serialize;

use crate::boundary::{
    classify_boundary, robin_coefficient, OuterCondition, RobinCoefficient, ThetaSpec,
};
use crate::error::Result;
use crate::field::Field;
use crate::geometry::{build_grid, DomainSpec, Hole, MaskShape};
use crate::linsolve::SolverOptions;
use crate::mass::{dirichlet_ball_eigenpair, fit_decay_exponent, mass, MassTrace};
use crate::operator::{assemble_operator_with, AssemblyOptions};
use crate::profile::{closed_form_profile, solve_truncated_profile};

pub use properties::{run_properties, PropertyCheck, PropertyOptions, PropertyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Measurement {
    pub fn within(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: Some(lower),
            upper: Some(upper),
            passed: value >= lower && value <= upper,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: None,
            upper: Some(upper),
            passed: value <= upper,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, lower: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: Some(lower),
            upper: None,
            passed: value >= lower,
        }
    }

    /// Relative distance to the nearest nonzero bound; smaller is tighter.
    pub fn margin(&self) -> Option<f64> {
        let usable = |b: &f64| b.is_finite() && *b != 0.0;
        let lo = self
            .lower
            .filter(usable)
            .map(|l| (self.value - l) / l.abs());
        let hi = self
            .upper
            .filter(usable)
            .map(|u| (u - self.value) / u.abs());
        match (lo, hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
        .filter(|m| m.is_finite())
    }

    /// A reported value with no bound.
    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: None,
            upper: None,
            passed: value.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    pub error: Option<String>,
    /// Wall time; absent for the quick tier so that its summaries are reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

impl Outcome {
    pub fn new(
        id: &str,
        title: &str,
        measurements: Vec<Measurement>,
        seconds: Option<f64>,
    ) -> Self {
        Self {
            id: id.to_string(),
            title: title.to_string(),
            passed: !measurements.is_empty() && measurements.iter().all(|m| m.passed),
            measurements,
            error: None,
            seconds,
        }
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let worst = self
            .measurements
            .iter()
            .find(|m| !m.passed)
            .or_else(|| {
                self.measurements
                    .iter()
                    .filter(|m| m.margin().is_some())
                    .min_by(|a, b| a.margin().partial_cmp(&b.margin()).expect("finite margins"))
            })
            .or_else(|| self.measurements.first());
        let detail = match (&self.error, worst) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(m)) => {
                let bound = match (m.lower, m.upper) {
                    (Some(l), Some(u)) => format!(" in [{l}, {u}]"),
                    (None, Some(u)) => format!(" <= {u}"),
                    (Some(l), None) => format!(" >= {l}"),
                    (None, None) => String::new(),
                };
                format!("{} = {:.6e}{bound}", m.name, m.value)
            }
            (None, None) => String::new(),
        };
        format!("{status} {} {}: {detail}", self.id, self.title)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaOptions {
    pub assembly: AssemblyOptions,
    pub property_cases: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        Self {
            assembly: AssemblyOptions::default(),
            property_cases: 60,
            seed: PropertyOptions::default().seed,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub level: VerifyLevel,
    pub passed: bool,
    pub outcomes: Vec<Outcome>,
}

impl VerifySummary {
    pub fn failures(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

fn check(id: &str, title: &str, body: impl FnOnce() -> Result<Vec<Measurement>>) -> Outcome {
    match body() {
        Ok(m) => Outcome::new(id, title, m, None),
        Err(e) => Outcome {
            id: id.to_string(),
            title: title.to_string(),
            passed: false,
            measurements: vec![],
            error: Some(e.to_string()),
            seconds: None,
        },
    }
}

fn quick_checks(options: &CriteriaOptions) -> Vec<Outcome> {
    vec![
        check("Q1", "closed-form profile examples", || {
            let e = std::f64::consts::E;
            Ok(vec![
                Measurement::at_most(
                    "N=3 R=2 at 1.5",
                    (closed_form_profile(3, 1.0f64, 0.0, 1.5, Some(2.0))? - 2.0 / 3.0).abs(),
                    1e-14,
                ),
                Measurement::at_most(
                    "N=3 theta=1/2 limit at 2",
                    (closed_form_profile(3, 1.0f64, 0.5, 2.0, None)? - 0.75).abs(),
                    1e-14,
                ),
                Measurement::at_most(
                    "N=2 R=e^2 at e",
                    (closed_form_profile(2, 1.0, 0.0, e, Some(e * e))? - 0.5).abs(),
                    1e-14,
                ),
            ])
        }),
        check("Q2", "Robin coefficients", || {
            let finite = |t: f64| -> Result<f64> {
                Ok(match robin_coefficient(t)? {
                    RobinCoefficient::Finite(b) => b,
                    RobinCoefficient::Infinite => f64::INFINITY,
                })
            };
            Ok(vec![
                Measurement::at_most("b(1)", finite(1.0)?.abs(), 0.0),
                Measurement::at_most("|b(1/2) - 1|", (finite(0.5)? - 1.0).abs(), 1e-15),
                Measurement::at_least("b(0)", finite(0.0)?, f64::INFINITY),
            ])
        }),
        check("Q3", "quadrature and discrete delta", || {
            let grid = Arc::new(build_grid(&DomainSpec::radial(3, 1.0, 2.0, 0.01))?);
            let exact = 28.0 * std::f64::consts::PI / 3.0;
            Ok(vec![
                Measurement::at_most(
                    "relative volume error N=3",
                    (mass(&Field::constant(grid.clone(), 1.0)) / exact - 1.0).abs(),
                    1e-3,
                ),
                Measurement::at_most(
                    "|mass(delta) - 1|",
                    (mass(&Field::delta(grid, 40)) - 1.0).abs(),
                    1e-14,
                ),
            ])
        }),
        check("Q4", "M-matrix assembly", || {
            let square = Hole::Mask(vec![MaskShape::Box {
                center: vec![0.0, 0.0],
                half_widths: vec![0.5, 0.5],
            }]);
            let mut out = Vec::new();
            for (name, spec) in [
                ("radial N=3", DomainSpec::radial(3, 1.0, 3.0, 0.1)),
                ("cartesian N=2", DomainSpec::cartesian(2, square, 3.0, 0.25)),
            ] {
                let grid = Arc::new(build_grid(&spec)?);
                let bc = classify_boundary(
                    &grid,
                    &ThetaSpec::constant(0.4, OuterCondition::Dirichlet0),
                )?;
                let op = assemble_operator_with(grid, &bc, 0.0, options.assembly)?;
                let ok = op.is_m_matrix() && op.stiffness().is_symmetric(1e-12);
                out.push(Measurement::at_least(
                    format!("{name} symmetric M-matrix (1 = yes)"),
                    f64::from(u8::from(ok)),
                    1.0,
                ));
            }
            Ok(out)
        }),
        check("Q5", "small truncated profile", || {
            let phi = solve_truncated_profile(
                &DomainSpec::radial(3, 1.0f64, 2.0, 0.01),
                &ThetaSpec::constant(0.0, OuterCondition::FixedOne),
                &SolverOptions::with_tol(1e-12),
            )?;
            let i = phi.grid().nearest_node(&[1.5]);
            Ok(vec![Measurement::at_most(
                "|phi_2(1.5) - 2/3|",
                (phi.values()[i] - 2.0 / 3.0).abs(),
                1e-4,
            )])
        }),
        check("Q6", "coarse eigenvalues", || {
            (1..=3)
                .map(|n| {
                    let e = dirichlet_ball_eigenpair::<f64>(n, 200)?;
                    Ok(Measurement::at_most(
                        format!("relative error lambda N={n}"),
                        (e.lambda / oracles::ball_eigenvalue(n) - 1.0).abs(),
                        1e-2,
                    ))
                })
                .collect()
        }),
        check("Q7", "synthetic decay fit", || {
            let trace = MassTrace::new(
                (0..20)
                    .map(|k| {
                        let t = 10f64.powf(1.0 + k as f64 / 10.0);
                        (t, 5.0 + t.powf(-0.5))
                    })
                    .collect(),
                "synthetic",
            );
            let fit = fit_decay_exponent(&trace, 5.0, (1.0, 1e4))?;
            Ok(vec![
                Measurement::at_most("|exponent + 1/2|", (fit.exponent + 0.5).abs(), 1e-6),
                Measurement::at_most("|amplitude - 1|", (fit.amplitude - 1.0).abs(), 1e-6),
            ])
        }),
        check("Q8", "small property suite", || {
            let report = run_properties(&PropertyOptions {
                cases: 10,
                seed: options.seed,
                assembly: options.assembly,
                parallel: options.parallel,
            });
            Ok(report
                .checks
                .iter()
                .map(|c| {
                    Measurement::at_most(
                        format!("{} violations", c.property),
                        c.violations as f64,
                        0.0,
                    )
                })
                .collect())
        }),
    ]
}

/// Runs the quick checks or the acceptance criteria.
pub fn verify_suite(level: VerifyLevel, options: &CriteriaOptions) -> VerifySummary {
    let outcomes = match level {
        VerifyLevel::Quick => quick_checks(options),
        VerifyLevel::Full => criteria::ALL.iter().map(|c| c(options)).collect(),
    };
    VerifySummary {
        level,
        passed: outcomes.iter().all(|o| o.passed),
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_tier_passes_and_repeats_exactly() {
        let a = verify_suite(VerifyLevel::Quick, &CriteriaOptions::default());
        assert!(a.passed, "{:#?}", a.failures().collect::<Vec<_>>());
        let b = verify_suite(VerifyLevel::Quick, &CriteriaOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn quick_tier_catches_the_flipped_robin_fixture() {
        let options = CriteriaOptions {
            assembly: AssemblyOptions {
                flip_robin_sign: true,
            },
            ..CriteriaOptions::default()
        };
        let summary = verify_suite(VerifyLevel::Quick, &options);
        assert!(!summary.passed);
        assert!(summary.failures().any(|o| o.id == "Q8"));
    }

    #[test]
    fn outcome_line_names_the_failing_measurement() {
        let o = Outcome::new(
            "C0",
            "demo",
            vec![
                Measurement::at_most("a", 1.0, 2.0),
                Measurement::at_most("b", 3.0, 2.0),
            ],
            None,
        );
        assert!(!o.passed);
        assert!(o.line().starts_with("FAIL C0 demo: b = 3.000000e0 <= 2"));
    }
}
