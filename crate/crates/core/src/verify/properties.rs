//! Randomised comparison-principle checks on small grids.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{classify_boundary, OuterCondition, ThetaExpr, ThetaField, ThetaSpec};
use crate::error::Result;
use crate::field::Field;
use crate::geometry::{build_grid, DomainSpec, Grid, Hole, MaskShape};
use crate::heat::{evolve, kernel_column, Stepping, TimeSchedule};
use crate::linsolve::SolverOptions;
use crate::operator::{assemble_operator_with, AssemblyOptions, DiscreteOperator};

pub const ORDER: &str = "order-preservation";
pub const ABSOLUTE: &str = "absolute-value-bound";
pub const DUALITY: &str = "duality-symmetry";
pub const THETA_SOLUTION: &str = "theta-ordering-solutions";
pub const THETA_KERNEL: &str = "theta-ordering-kernels";
pub const DOMAIN: &str = "domain-monotonicity";

const PROPERTIES: [&str; 6] = [
    ORDER,
    ABSOLUTE,
    DUALITY,
    THETA_SOLUTION,
    THETA_KERNEL,
    DOMAIN,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyOptions {
    pub cases: usize,
    pub seed: u64,
    pub assembly: AssemblyOptions,
    /// Run cases in parallel; results do not depend on this.
    pub parallel: bool,
}

impl Default for PropertyOptions {
    fn default() -> Self {
        Self {
            cases: 60,
            seed: 20240611,
            assembly: AssemblyOptions::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub property: &'static str,
    pub runs: usize,
    pub violations: usize,
    /// Largest excess over the allowed slack, relative to the data scale.
    pub worst_excess: f64,
    /// Seeds of the first few violating cases.
    pub failing_seeds: Vec<u64>,
}

impl PropertyCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub cases: usize,
    pub max_nodes: usize,
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(PropertyCheck::passed)
    }

    pub fn check(&self, property: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.property == property)
    }
}

/// Relative slack for pointwise comparisons and the duality test.
const SLACK: f64 = 1e-9;
const DUALITY_TOL: f64 = 1e-8;

struct Outcome {
    property: &'static str,
    /// `None` when the property was not exercised by the case.
    excess: Option<f64>,
}

struct CaseResult {
    seed: u64,
    nodes: usize,
    outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone)]
struct Case {
    spec: DomainSpec<f64>,
    /// Larger hole nested in the main one, for domain monotonicity.
    inner_spec: DomainSpec<f64>,
    theta_lo: ThetaSpec<f64>,
    theta_hi: ThetaSpec<f64>,
    time: f64,
    steps: usize,
}

fn draw_case(rng: &mut ChaCha8Rng) -> Case {
    let outer = if rng.gen_bool(0.5) {
        OuterCondition::Dirichlet0
    } else {
        OuterCondition::Neumann0
    };
    let cartesian = rng.gen_bool(0.5);
    let (spec, inner_spec, sampled) = if cartesian {
        let h = [0.2, 0.25][rng.gen_range(0..2)];
        let big_r = rng.gen_range(2.5..4.5);
        let r = rng.gen_range(0.5..1.0);
        let hole = if rng.gen_bool(0.5) {
            Hole::Ball { radius: r }
        } else {
            Hole::Mask(vec![MaskShape::Box {
                center: vec![0.0, 0.0],
                half_widths: vec![r, r * rng.gen_range(0.5..1.0)],
            }])
        };
        let spec = DomainSpec::cartesian(2, hole, big_r, h);
        let inner = DomainSpec::cartesian(2, Hole::Ball { radius: r + 0.6 }, big_r, h);
        (spec, inner, rng.gen_bool(0.5))
    } else {
        let n = rng.gen_range(1..=3);
        let h: f64 = [0.05, 0.1, 0.2][rng.gen_range(0..3)];
        let big_r: f64 = rng.gen_range(3.0..6.0);
        let big_r = 1.0 + ((big_r - 1.0) / h).round() * h;
        let spec = DomainSpec::radial(n, 1.0, big_r, h);
        let inner = DomainSpec::radial(n, 1.0 + 5.0 * h, big_r, h);
        (spec, inner, false)
    };
    let (theta_lo, theta_hi) = if sampled {
        let mean = rng.gen_range(0.2..0.5);
        let amplitude = rng.gen_range(0.0..0.15);
        let shift = rng.gen_range(0.05..0.4);
        let harmonic = rng.gen_range(1..4);
        let field = |m: f64| {
            ThetaField::Sampled(ThetaExpr::Angular {
                mean: m,
                amplitude,
                harmonic,
            })
        };
        (
            ThetaSpec {
                components: vec![field(mean)],
                outer,
            },
            ThetaSpec {
                components: vec![field(mean + shift)],
                outer,
            },
        )
    } else {
        let a: f64 = if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen_range(0.0..1.0)
        };
        let b: f64 = if rng.gen_bool(0.2) {
            1.0
        } else {
            rng.gen_range(0.0..1.0)
        };
        (
            ThetaSpec::constant(a.min(b), outer),
            ThetaSpec::constant(a.max(b), outer),
        )
    };
    Case {
        spec,
        inner_spec,
        theta_lo,
        theta_hi,
        time: rng.gen_range(0.05..1.0),
        steps: rng.gen_range(1..=5),
    }
}

fn operator(
    grid: &Arc<Grid<f64>>,
    theta: &ThetaSpec<f64>,
    assembly: AssemblyOptions,
) -> Result<DiscreteOperator<f64>> {
    let bc = classify_boundary(grid, theta)?;
    assemble_operator_with(grid.clone(), &bc, 0.0, assembly)
}

fn random_field(rng: &mut ChaCha8Rng, grid: &Arc<Grid<f64>>, signed: bool) -> Field<f64> {
    let density = rng.gen_range(0.05..1.0);
    let values: Vec<f64> = (0..grid.node_count())
        .map(|_| {
            if rng.gen_bool(density) {
                let v = rng.gen_range(0.0..1.0);
                if signed && rng.gen_bool(0.5) {
                    -v
                } else {
                    v
                }
            } else {
                0.0
            }
        })
        .collect();
    Field::new(grid.clone(), values).expect("length matches")
}

/// `max(a - b)` scaled by `scale`, negative when `a <= b` everywhere.
fn excess_over(a: &Field<f64>, b: &Field<f64>, scale: f64) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) / scale)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn flow(
    op: &DiscreteOperator<f64>,
    u: &Field<f64>,
    case: &Case,
    solver: &SolverOptions,
) -> Result<Field<f64>> {
    let schedule = TimeSchedule::new(
        vec![case.time],
        Stepping::Fixed(case.time / case.steps as f64),
    )?;
    Ok(evolve(op, u, &schedule, solver)?.final_field().clone())
}

fn run_case(seed: u64, assembly: AssemblyOptions) -> CaseResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let case = draw_case(&mut rng);
    let solver = SolverOptions::with_tol(1e-13);
    let mut outcomes = Vec::new();
    let failed = |property| Outcome {
        property,
        excess: Some(f64::INFINITY),
    };
    let grid = match build_grid(&case.spec) {
        Ok(g) => Arc::new(g),
        Err(_) => {
            return CaseResult {
                seed,
                nodes: 0,
                outcomes: PROPERTIES.iter().map(|&p| failed(p)).collect(),
            }
        }
    };
    let nodes = grid.node_count();

    let u = random_field(&mut rng, &grid, false);
    let f = random_field(&mut rng, &grid, true);
    let g = random_field(&mut rng, &grid, true);
    let y = rng.gen_range(0..nodes);

    // Properties of a single semigroup.
    let single = (|| -> Result<Vec<Outcome>> {
        let op = operator(&grid, &case.theta_lo, assembly)?;
        let mut u = u.clone();
        let mut f = f.clone();
        let mut g = g.clone();
        op.impose(&mut u);
        op.impose(&mut f);
        op.impose(&mut g);
        let su = flow(&op, &u, &case, &solver)?;
        let scale = u.max_abs().max(f64::MIN_POSITIVE);
        let order = su
            .values()
            .iter()
            .map(|v| -v / scale)
            .fold(f64::NEG_INFINITY, f64::max);

        let sf = flow(&op, &f, &case, &solver)?;
        let s_abs_f = flow(&op, &f.map(f64::abs), &case, &solver)?;
        let scale_f = f.max_abs().max(f64::MIN_POSITIVE);
        let absolute = excess_over(&sf.map(f64::abs), &s_abs_f, scale_f);

        let sg = flow(&op, &g, &case, &solver)?;
        let lhs = sf.dot(&g)?;
        let rhs = f.dot(&sg)?;
        let norm = f.norm() * g.norm();
        let duality = if norm > 0.0 {
            (lhs - rhs).abs() / norm
        } else {
            0.0
        };
        Ok(vec![
            Outcome {
                property: ORDER,
                excess: Some(order - SLACK),
            },
            Outcome {
                property: ABSOLUTE,
                excess: Some(absolute - SLACK),
            },
            Outcome {
                property: DUALITY,
                excess: Some(duality - DUALITY_TOL),
            },
        ])
    })();
    match single {
        Ok(o) => outcomes.extend(o),
        Err(_) => outcomes.extend([ORDER, ABSOLUTE, DUALITY].map(failed)),
    }

    // Comparison in theta.
    let theta = (|| -> Result<Vec<Outcome>> {
        let lo = operator(&grid, &case.theta_lo, assembly)?;
        let hi = operator(&grid, &case.theta_hi, assembly)?;
        let mut u = u.clone();
        lo.impose(&mut u);
        let scale = u.max_abs().max(f64::MIN_POSITIVE);
        let a = flow(&lo, &u, &case, &solver)?;
        let b = flow(&hi, &u, &case, &solver)?;
        let solutions = excess_over(&a, &b, scale);
        let stepping = Stepping::Fixed(case.time / case.steps as f64);
        let ka = kernel_column(&lo, y, case.time, stepping, &solver)?;
        let kb = kernel_column(&hi, y, case.time, stepping, &solver)?;
        let kernels = excess_over(
            &ka,
            &kb,
            ka.max_abs().max(kb.max_abs()).max(f64::MIN_POSITIVE),
        );
        Ok(vec![
            Outcome {
                property: THETA_SOLUTION,
                excess: Some(solutions - SLACK),
            },
            Outcome {
                property: THETA_KERNEL,
                excess: Some(kernels - SLACK),
            },
        ])
    })();
    match theta {
        Ok(o) => outcomes.extend(o),
        Err(_) => outcomes.extend([THETA_SOLUTION, THETA_KERNEL].map(failed)),
    }

    // Comparison in the domain: Dirichlet holes, the larger hole gives less.
    let domain = (|| -> Result<Outcome> {
        let inner = Arc::new(build_grid(&case.inner_spec)?);
        let dirichlet = ThetaSpec::constant(0.0, case.theta_lo.outer);
        let big = operator(&grid, &dirichlet, AssemblyOptions::default())?;
        let small = operator(&inner, &dirichlet, AssemblyOptions::default())?;
        let locate = |i: usize| -> Option<usize> {
            match inner.backend() {
                crate::geometry::Backend::Cartesian => grid.node_at(&inner.key(i)),
                crate::geometry::Backend::Radial => {
                    let j = grid.nearest_node(&[inner.radius(i)]);
                    ((grid.radius(j) - inner.radius(i)).abs() < 1e-9).then_some(j)
                }
            }
        };
        let map: Vec<usize> = (0..inner.node_count())
            .map(|i| locate(i).ok_or(crate::error::Error::GridMismatch))
            .collect::<Result<_>>()?;
        let mut v = Field::from_fn(inner.clone(), |i| u.values()[map[i]]);
        small.impose(&mut v);
        let mut w = Field::zeros(grid.clone());
        for (i, &j) in map.iter().enumerate() {
            w.values_mut()[j] = v.values()[i];
        }
        let scale = v.max_abs().max(f64::MIN_POSITIVE);
        let sv = flow(&small, &v, &case, &solver)?;
        let sw = flow(&big, &w, &case, &solver)?;
        let excess = map
            .iter()
            .enumerate()
            .map(|(i, &j)| (sv.values()[i] - sw.values()[j]) / scale)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Outcome {
            property: DOMAIN,
            excess: Some(excess - SLACK),
        })
    })();
    outcomes.push(domain.unwrap_or_else(|_| failed(DOMAIN)));
    CaseResult {
        seed,
        nodes,
        outcomes,
    }
}

fn case_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs the property suite on `options.cases` random small grids.
pub fn run_properties(options: &PropertyOptions) -> PropertyReport {
    let seeds: Vec<u64> = (0..options.cases)
        .map(|k| case_seed(options.seed, k))
        .collect();
    let results: Vec<CaseResult> = if options.parallel {
        seeds
            .par_iter()
            .map(|&s| run_case(s, options.assembly))
            .collect()
    } else {
        seeds
            .iter()
            .map(|&s| run_case(s, options.assembly))
            .collect()
    };
    let checks = PROPERTIES
        .iter()
        .map(|&property| {
            let mut check = PropertyCheck {
                property,
                runs: 0,
                violations: 0,
                worst_excess: f64::NEG_INFINITY,
                failing_seeds: Vec::new(),
            };
            for case in &results {
                for o in case.outcomes.iter().filter(|o| o.property == property) {
                    let Some(excess) = o.excess else { continue };
                    check.runs += 1;
                    check.worst_excess = check.worst_excess.max(excess);
                    if excess > 0.0 {
                        check.violations += 1;
                        if check.failing_seeds.len() < 5 {
                            check.failing_seeds.push(case.seed);
                        }
                    }
                }
            }
            check
        })
        .collect();
    PropertyReport {
        cases: options.cases,
        max_nodes: results.iter().map(|r| r.nodes).max().unwrap_or(0),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let options = PropertyOptions {
            cases: 8,
            ..PropertyOptions::default()
        };
        let a = run_properties(&options);
        assert!(a.passed(), "{a:#?}");
        let b = run_properties(&PropertyOptions {
            parallel: false,
            ..options
        });
        assert_eq!(a, b);
    }

    #[test]
    fn flipped_robin_sign_breaks_theta_ordering() {
        let options = PropertyOptions {
            cases: 12,
            assembly: AssemblyOptions {
                flip_robin_sign: true,
            },
            ..PropertyOptions::default()
        };
        let report = run_properties(&options);
        assert!(!report.check(THETA_SOLUTION).unwrap().passed());
    }
}
