//! Task dispatch: builds the numerical objects from a config and writes outputs.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use exterior_heat::mass::{fit_decay_exponent, relative_drift, slow_decay_construct};
use exterior_heat::verify::{verify_suite, CriteriaOptions};
use exterior_heat::{
    assemble_operator, asymptotic_mass, build_grid, classify_boundary, closed_form_profile,
    compute_profile, conserved_functional, evolve, kernel_column, mass, parabolic_profile,
    DiscreteOperator, DomainSpec, EvolutionResult, Grid, Hole, OuterCondition, ProfileOptions,
    ProfileResult, SlowDecayOptions, SolverOptions, Stepping, TimeSchedule,
};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::{fit_components, ConfigError, ExperimentConfig, Task};
use crate::output::{write_field, write_json, Cell, CsvTable};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerics(#[from] exterior_heat::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, RunError>;

/// Command-line overrides applied on top of the config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub single_thread: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub task: Task,
    pub out_dir: PathBuf,
    /// Files written, relative to `out_dir`, in write order.
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    /// `Some(false)` when a verification run found failures.
    pub passed: Option<bool>,
    pub summary: Map<String, Value>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }
}

pub fn run_experiment(
    config: &ExperimentConfig,
    task: Task,
    options: &RunOptions,
) -> Result<RunReport> {
    let mut config = config.clone();
    if let Some(tol) = options.tol {
        config.solver.tol = tol;
    }
    config.validate(task)?;
    let out_dir = options
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)?;
    let mut w = Writer {
        dir: out_dir.clone(),
        files: Vec::new(),
    };
    let mut warnings = Vec::new();
    let mut passed = None;
    let solver = config.solver_options()?;
    let summary = match task {
        Task::Profile => run_profile(&config, &solver, &mut w)?,
        Task::Pprofile => run_pprofile(&config, &solver, &mut w, &mut warnings)?,
        Task::Evolve => run_evolve(&config, &solver, &mut w, &mut warnings)?,
        Task::Kernel => run_kernel(&config, &solver, &mut w)?,
        Task::Mass | Task::Rates => run_mass(&config, task, &solver, &mut w, &mut warnings)?,
        Task::Slowdecay => run_slowdecay(&config, &solver, &mut w, &mut warnings)?,
        Task::Verify => {
            let (s, ok) = run_verify(&config, options, &mut w)?;
            passed = Some(ok);
            s
        }
    };

    let mut report = Map::new();
    report.insert("task".into(), json!(task.name()));
    report.insert("warnings".into(), json!(warnings));
    report.insert("outputs".into(), json!(w.files));
    report.insert("solver_tol".into(), json!(solver.tol));
    for (k, v) in &summary {
        report.insert(k.clone(), v.clone());
    }
    write_json(&out_dir.join("report.json"), &report)?;
    w.files.push("report.json".into());
    Ok(RunReport {
        task,
        out_dir,
        files: w.files,
        warnings,
        passed,
        summary,
    })
}

fn grid_of(spec: &DomainSpec<f64>) -> Result<Arc<Grid<f64>>> {
    Ok(Arc::new(build_grid(spec)?))
}

fn operator(
    config: &ExperimentConfig,
    task: Task,
    grid: &Arc<Grid<f64>>,
    outer: OuterCondition,
) -> Result<DiscreteOperator<f64>> {
    let mut theta = config.theta_spec(task, outer)?;
    fit_components(&mut theta, grid);
    let bc = classify_boundary(grid, &theta)?;
    Ok(assemble_operator(grid.clone(), &bc, 0.0)?)
}

fn dump_matrix(
    config: &ExperimentConfig,
    op: &DiscreteOperator<f64>,
    w: &mut Writer,
) -> Result<()> {
    if config.output.matrix {
        let file = File::create(w.path("matrix.coo"))?;
        op.write_coordinate(BufWriter::new(file))?;
    }
    Ok(())
}

fn profile_options(config: &ExperimentConfig, solver: &SolverOptions) -> ProfileOptions<f64> {
    let p = config.profile.as_ref().expect("validated");
    ProfileOptions {
        window_radius: p.window_radius,
        window_tol: p.window_tol.unwrap_or(1e-3),
        solver: *solver,
    }
}

fn ladder_profile(
    config: &ExperimentConfig,
    task: Task,
    solver: &SolverOptions,
) -> Result<ProfileResult<f64>> {
    let base = config.domain_spec(task)?;
    let (ladder, _) = config.profile_ladder(task)?;
    let mut theta = config.theta_spec(task, OuterCondition::FixedOne)?;
    fit_components(
        &mut theta,
        &grid_of(&base.with_truncation_radius(ladder[0]))?,
    );
    Ok(compute_profile(
        &base,
        &theta,
        &ladder,
        &profile_options(config, solver),
    )?)
}

fn run_profile(
    config: &ExperimentConfig,
    solver: &SolverOptions,
    w: &mut Writer,
) -> Result<Map<String, Value>> {
    let task = Task::Profile;
    let result = ladder_profile(config, task, solver)?;
    let grid = result.grid().clone();
    let big_r = grid.truncation_radius();
    let theta = config
        .theta_spec(task, OuterCondition::FixedOne)?
        .uniform_constant();
    let reference = match (grid.hole(), theta) {
        (Hole::Ball { radius }, Some(t)) => Some((*radius, t)),
        _ => None,
    };

    let phi = &result.phi;
    let mut table = CsvTable::create(
        &w.path("profile.csv"),
        &crate::output::node_header(phi, &["phi", "closed_form"]),
    )?;
    let mut sup_err: Option<f64> = None;
    for (i, &v) in phi.values().iter().enumerate() {
        let exact = match reference {
            Some((r, t)) => Some(closed_form_profile(
                grid.dimension(),
                r,
                t,
                grid.radius(i).max(r),
                Some(big_r),
            )?),
            None => None,
        };
        if let Some(e) = exact {
            sup_err = Some(sup_err.unwrap_or(0.0).max((v - e).abs()));
        }
        let mut cells = crate::output::node_cells(phi, i);
        cells.push(Cell::Float(v));
        cells.push(exact.into());
        table.row(cells)?;
    }
    table.finish()?;

    let mut ladder = CsvTable::create(
        &w.path("ladder.csv"),
        &["radius", "sup_diff", "iterations", "relative_residual"],
    )?;
    for s in &result.ladder {
        ladder.row(vec![
            s.radius.into(),
            s.sup_diff.into(),
            s.solve.iterations.into(),
            s.solve.relative_residual.into(),
        ])?;
    }
    ladder.finish()?;
    dump_matrix(
        config,
        &operator(config, task, &grid, OuterCondition::FixedOne)?,
        w,
    )?;

    let mut s = Map::new();
    s.insert("converged".into(), json!(result.converged));
    s.insert("window_radius".into(), json!(result.window_radius));
    s.insert("last_sup_diff".into(), json!(result.last_sup_diff()));
    s.insert(
        "monotonicity_excess".into(),
        json!(result.monotonicity_excess),
    );
    s.insert("closed_form_sup_error".into(), json!(sup_err));
    s.insert("nodes".into(), json!(grid.node_count()));
    s.insert("theta".into(), json!(result.theta));
    s.insert("domain".into(), json!(result.domain));
    Ok(s)
}

fn run_pprofile(
    config: &ExperimentConfig,
    solver: &SolverOptions,
    w: &mut Writer,
    warnings: &mut Vec<String>,
) -> Result<Map<String, Value>> {
    let task = Task::Pprofile;
    let spec = config.domain_spec(task)?;
    let grid = grid_of(&spec)?;
    let op = operator(config, task, &grid, OuterCondition::FixedOne)?;
    let schedule = config.schedule(task, spec.spacing)?;
    let p = parabolic_profile(&op, &schedule.times, schedule.stepping, solver)?;
    write_field(&w.path("pprofile.csv"), &p.field, "u")?;
    let mut trace = CsvTable::create(
        &w.path("pprofile_trace.csv"),
        &["t", "min_u", "mass_deficit"],
    )?;
    for (t, u) in &p.snapshots {
        let min = u.values().iter().copied().fold(f64::INFINITY, f64::min);
        let deficit: f64 = u
            .values()
            .iter()
            .zip(grid.weights())
            .map(|(v, wt)| (1.0 - v) * wt)
            .sum();
        trace.row(vec![(*t).into(), min.into(), deficit.into()])?;
    }
    trace.finish()?;
    dump_matrix(config, &op, w)?;
    warnings.extend(p.warnings.iter().map(ToString::to_string));

    let mut s = Map::new();
    s.insert("final_time".into(), json!(schedule.times.last()));
    s.insert("monotonicity_excess".into(), json!(p.monotonicity_excess));
    s.insert("front_deviation".into(), json!(p.front_deviation));
    s.insert("nodes".into(), json!(grid.node_count()));
    Ok(s)
}

fn write_traces(evo: &EvolutionResult<f64>, w: &mut Writer) -> Result<()> {
    let first = &evo.snapshots[0].1;
    let mut snaps = CsvTable::create(&w.path("snapshots.csv"), &{
        let mut h = vec!["t".to_string()];
        h.extend(crate::output::node_header(first, &["u"]));
        h
    })?;
    for (t, u) in &evo.snapshots {
        for (i, &v) in u.values().iter().enumerate() {
            let mut cells = vec![Cell::Float(*t)];
            cells.extend(crate::output::node_cells(u, i));
            cells.push(Cell::Float(v));
            snaps.row(cells)?;
        }
    }
    snaps.finish()?;
    let mut flux = CsvTable::create(&w.path("flux.csv"), &["t", "rate", "cumulative"])?;
    for f in &evo.outer_flux {
        flux.row(vec![f.time.into(), f.rate.into(), f.cumulative.into()])?;
    }
    flux.finish()?;
    Ok(())
}

fn run_evolve(
    config: &ExperimentConfig,
    solver: &SolverOptions,
    w: &mut Writer,
    warnings: &mut Vec<String>,
) -> Result<Map<String, Value>> {
    let task = Task::Evolve;
    let spec = config.domain_spec(task)?;
    let grid = grid_of(&spec)?;
    let op = operator(
        config,
        task,
        &grid,
        config.outer(OuterCondition::Dirichlet0),
    )?;
    let mut u0 = config.u0.as_ref().expect("validated").sample(&grid)?;
    op.impose(&mut u0);
    let schedule = config.schedule(task, spec.spacing)?;
    let evo = evolve(&op, &u0, &schedule, solver)?;
    let mut table = CsvTable::create(&w.path("mass.csv"), &["t", "m"])?;
    for &(t, m) in &evo.mass_trace.points {
        table.row(vec![t.into(), m.into()])?;
    }
    table.finish()?;
    write_traces(&evo, w)?;
    dump_matrix(config, &op, w)?;
    warnings.extend(evo.warnings.iter().map(ToString::to_string));

    let mut s = Map::new();
    s.insert("initial_mass".into(), json!(mass(&u0)));
    s.insert("final_mass".into(), json!(mass(evo.final_field())));
    s.insert("final_sup".into(), json!(evo.final_field().max_abs()));
    s.insert("steps".into(), json!(evo.steps));
    s.insert("solver_iterations".into(), json!(evo.solver_iterations));
    s.insert("nodes".into(), json!(grid.node_count()));
    Ok(s)
}

fn run_kernel(
    config: &ExperimentConfig,
    solver: &SolverOptions,
    w: &mut Writer,
) -> Result<Map<String, Value>> {
    let task = Task::Kernel;
    let spec = config.domain_spec(task)?;
    let grid = grid_of(&spec)?;
    let op = operator(
        config,
        task,
        &grid,
        config.outer(OuterCondition::Dirichlet0),
    )?;
    let k = config.kernel.as_ref().expect("validated");
    let point: Vec<f64> = if grid.backend() == exterior_heat::Backend::Radial {
        vec![k.source.iter().map(|x| x * x).sum::<f64>().sqrt()]
    } else {
        k.source.clone()
    };
    let node = grid.nearest_node(&point);
    let stepping: Stepping<f64> = config.stepping(spec.spacing)?;
    let column = kernel_column(&op, node, k.time, stepping, solver)?;
    write_field(&w.path("kernel.csv"), &column, "k")?;
    dump_matrix(config, &op, w)?;

    let mut s = Map::new();
    s.insert("source_node".into(), json!(node));
    s.insert("source_coords".into(), json!(grid.coords(node)));
    s.insert("time".into(), json!(k.time));
    s.insert("mass".into(), json!(mass(&column)));
    s.insert("peak".into(), json!(column.max_abs()));
    s.insert("nodes".into(), json!(grid.node_count()));
    Ok(s)
}

fn run_mass(
    config: &ExperimentConfig,
    task: Task,
    solver: &SolverOptions,
    w: &mut Writer,
    warnings: &mut Vec<String>,
) -> Result<Map<String, Value>> {
    let profile = ladder_profile(config, task, solver)?;
    let shape = config.u0.as_ref().expect("validated");
    let m_inf = asymptotic_mass(&shape.sample(profile.grid())?, &profile)?;

    let spec = config.domain_spec(task)?;
    let grid = grid_of(&spec)?;
    let op = operator(
        config,
        task,
        &grid,
        config.outer(OuterCondition::Dirichlet0),
    )?;
    let mut u0 = shape.sample(&grid)?;
    op.impose(&mut u0);
    let schedule: TimeSchedule<f64> = config.schedule(task, spec.spacing)?;
    let evo = evolve(&op, &u0, &schedule, solver)?;
    let functional = if grid.is_nested_with(profile.grid()) || profile.grid().is_nested_with(&grid)
    {
        Some(relative_drift(&conserved_functional(
            &u0,
            &evo,
            &profile.phi,
        )?))
    } else {
        None
    };

    let mut table = CsvTable::create(&w.path("mass.csv"), &["t", "m", "m_inf", "residual"])?;
    for &(t, m) in &evo.mass_trace.points {
        table.row(vec![t.into(), m.into(), m_inf.into(), (m - m_inf).into()])?;
    }
    table.finish()?;
    dump_matrix(config, &op, w)?;
    warnings.extend(evo.warnings.iter().map(ToString::to_string));
    if !profile.converged {
        let diff = profile
            .last_sup_diff()
            .map_or("n/a".into(), |d| format!("{d:.3e}"));
        warnings.push(format!(
            "profile ladder did not settle on the window (last sup difference {diff})"
        ));
    }

    let mut s = Map::new();
    s.insert("m_inf".into(), json!(m_inf));
    s.insert("initial_mass".into(), json!(mass(&u0)));
    s.insert("final_mass".into(), json!(mass(evo.final_field())));
    s.insert("functional_drift".into(), json!(functional));
    s.insert("profile_converged".into(), json!(profile.converged));
    s.insert(
        "profile_radius".into(),
        json!(profile.grid().truncation_radius()),
    );
    s.insert("steps".into(), json!(evo.steps));
    if task == Task::Rates {
        let r = config.rates.as_ref().expect("validated");
        let fit = fit_decay_exponent(&evo.mass_trace, m_inf, (r.window[0], r.window[1]))?;
        s.insert(
            "fit".into(),
            json!({
                "exponent": fit.exponent,
                "amplitude": fit.amplitude,
                "r_squared": fit.r_squared,
                "points": fit.points,
                "window": r.window,
            }),
        );
    }
    Ok(s)
}

fn run_slowdecay(
    config: &ExperimentConfig,
    solver: &SolverOptions,
    w: &mut Writer,
    warnings: &mut Vec<String>,
) -> Result<Map<String, Value>> {
    let task = Task::Slowdecay;
    let sd = config.slowdecay.as_ref().expect("validated");
    let domain = config.domain_spec(task)?;
    let g = sd.g;
    let plan = slow_decay_construct(
        &domain,
        &|t: f64| g.eval(t),
        &g.describe(),
        &SlowDecayOptions {
            bumps: sd.bumps,
            eigen_resolution: sd.eigen_resolution,
            max_extent: sd.max_extent,
        },
    )?;
    let invariants = plan.check_invariants();
    if let Err(e) = &invariants {
        warnings.push(format!("plan invariants violated: {e}"));
    }
    let bumps: Vec<Value> = plan
        .bumps
        .iter()
        .map(|b| json!({"n": b.n, "time": b.time, "radius": b.radius, "center": b.center, "weight": b.weight}))
        .collect();
    write_json(
        &w.path("plan.json"),
        &json!({
            "dimension": plan.dimension,
            "g": plan.g,
            "lambda": plan.lambda(),
            "spacing": plan.spacing,
            "hole_extent": plan.hole_extent,
            "required_extent": plan.required_extent(),
            "invariants_hold": invariants.is_ok(),
            "bumps": bumps,
        }),
    )?;
    let mut table = CsvTable::create(
        &w.path("bumps.csv"),
        &["n", "time", "radius", "center", "weight"],
    )?;
    for b in &plan.bumps {
        table.row(vec![
            b.n.into(),
            b.time.into(),
            b.radius.into(),
            b.center.into(),
            b.weight.into(),
        ])?;
    }
    table.finish()?;

    let mut s = Map::new();
    s.insert("bumps".into(), json!(plan.bumps.len()));
    s.insert("invariants_hold".into(), json!(invariants.is_ok()));
    s.insert("required_extent".into(), json!(plan.required_extent()));
    if let Some(n) = sd.simulate {
        let b = plan
            .bumps
            .iter()
            .find(|b| b.n == n)
            .expect("validated index")
            .clone();
        let h = domain.spacing;
        // Room for the bump plus four diffusion lengths before the outer boundary.
        let extent = b.center + b.radius + 4.0 * b.time.sqrt();
        let sim = domain.with_truncation_radius((extent / h).ceil() * h + h);
        let grid = grid_of(&sim)?;
        let mut u0 = plan.initial_datum(&grid, &[n])?;
        let mut theta = exterior_heat::ThetaSpec::constant(0.0, OuterCondition::Dirichlet0);
        fit_components(&mut theta, &grid);
        let bc = classify_boundary(&grid, &theta)?;
        let op = assemble_operator(grid.clone(), &bc, 0.0)?;
        op.impose(&mut u0);
        let times: Vec<f64> = [0.125, 0.25, 0.5, 1.0].iter().map(|f| f * b.time).collect();
        let schedule = TimeSchedule::new(times, config.stepping(h)?)?;
        let evo = evolve(&op, &u0, &schedule, solver)?;
        let mut trace = CsvTable::create(&w.path("mass.csv"), &["t", "m", "g"])?;
        for &(t, m) in &evo.mass_trace.points {
            trace.row(vec![t.into(), m.into(), g.eval(t).into()])?;
        }
        trace.finish()?;
        dump_matrix(config, &op, w)?;
        warnings.extend(evo.warnings.iter().map(ToString::to_string));
        let m = mass(evo.final_field());
        s.insert(
            "simulation".into(),
            json!({
                "bump": n,
                "time": b.time,
                "initial_mass": mass(&u0),
                "mass_at_time": m,
                "g_at_time": g.eval(b.time),
                "nodes": grid.node_count(),
            }),
        );
    }
    Ok(s)
}

fn run_verify(
    config: &ExperimentConfig,
    options: &RunOptions,
    w: &mut Writer,
) -> Result<(Map<String, Value>, bool)> {
    let (level, cases, seed) = config.verify_settings()?;
    let defaults = CriteriaOptions::default();
    let criteria = CriteriaOptions {
        property_cases: cases.unwrap_or(defaults.property_cases),
        seed: seed.unwrap_or(defaults.seed),
        parallel: !options.single_thread,
        ..defaults
    };
    let mut summary = verify_suite(level, &criteria);
    // Wall times would make reports differ between identical runs.
    for o in &mut summary.outcomes {
        o.seconds = None;
    }
    for o in &summary.outcomes {
        println!("{}", o.line());
    }
    write_json(&w.path("verify.json"), &summary)?;
    let mut s = Map::new();
    s.insert(
        "level".into(),
        serde_json::to_value(summary.level).expect("plain enum"),
    );
    s.insert("passed".into(), json!(summary.passed));
    s.insert(
        "failures".into(),
        json!(summary.failures().map(|o| o.id.clone()).collect::<Vec<_>>()),
    );
    Ok((s, summary.passed))
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    Ok(ExperimentConfig::from_json(&text)?)
}
