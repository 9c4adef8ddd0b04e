//! The five commands. Each resolves its problem, runs the library, and
//! writes its CSV plus a `meta.txt` with the resolved configuration.

use std::path::Path;

use compact_scheme::analysis::{
    build_reference, convergence_table, evaluate_regimes, iteration_study, richardson_table, select_efficient,
    ConvergenceStudy, RegimeGrid, StudyLadder,
};
use compact_scheme::{integrate, NodeState, ProblemSpec, TimeGrid};

use crate::config::{AnyProblem, Command, RunConfig, StepChoice};
use crate::error::{CliError, Result};
use crate::output::{fmt_float, fmt_opt, write_meta, CsvTable};

/// Where output goes and how chatty to be.
pub struct Sink<'a> {
    pub dir: &'a Path,
    pub quiet: bool,
}

impl Sink<'_> {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

macro_rules! with_problem {
    ($problem:expr, $f:ident($($arg:expr),*)) => {
        match $problem {
            AnyProblem::Scalar(p) => $f(p, $($arg),*),
            AnyProblem::Pair(p) => $f(p, $($arg),*),
            AnyProblem::Complex(p) => $f(p, $($arg),*),
        }
    };
}

pub fn execute(cfg: &RunConfig, sink: &Sink) -> Result<()> {
    std::fs::create_dir_all(sink.dir)?;
    let problem = cfg.build_problem()?;
    match cfg.command {
        Command::Run => with_problem!(&problem, run(cfg, sink)),
        Command::Converge | Command::Richardson => with_problem!(&problem, converge(cfg, sink)),
        Command::Iterations => with_problem!(&problem, iterations(cfg, sink)),
        Command::Efficiency => with_problem!(&problem, efficiency(cfg, sink)),
    }
}

fn base_meta<V: NodeState>(cfg: &RunConfig, p: &ProblemSpec<V>) -> Vec<(String, String)> {
    let mut meta = vec![("command".to_string(), cfg.command.name().to_string())];
    meta.extend(cfg.resolved.iter().map(|(k, v)| (format!("config.{k}"), v.clone())));
    meta.push(("problem.name".into(), p.name.clone()));
    meta.push(("problem.domain".into(), format!("{} {}", fmt_float(p.domain.0), fmt_float(p.domain.1))));
    meta.push(("problem.t_final".into(), fmt_float(p.t_final)));
    meta.extend(p.metadata.iter().map(|(k, v)| (format!("problem.{k}"), v.clone())));
    meta
}

fn run<V: NodeState>(p: &ProblemSpec<V>, cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let n = cfg.n[0];
    let grid = p.grid(n)?;
    let time = match &cfg.step {
        StepChoice::Nu(nu) => StudyLadder::new(p, nu[0], n)?.time_grid(n)?,
        StepChoice::Tau(tau) => TimeGrid::covering(p.t_final, *tau)?,
    };
    let report = integrate(p, &grid, &time, cfg.predictors[0], &cfg.relaxation)?;

    let names = V::KIND.component_names();
    let mut header = vec!["x"];
    header.extend(names);
    let mut solution = CsvTable::new(&header);
    for (j, v) in report.state.values().iter().enumerate() {
        let mut row = vec![fmt_float(grid.x(j))];
        row.extend(v.components()[..names.len()].iter().map(|&c| fmt_float(c)));
        solution.push(row);
    }
    solution.write(&sink.dir.join("solution.csv"))?;

    let mut stats = CsvTable::new(&["step", "iterations", "max_correction"]);
    for (k, s) in report.steps.iter().enumerate() {
        stats.push(vec![(k + 1).to_string(), s.iterations.to_string(), fmt_float(s.final_max_correction)]);
    }
    stats.write(&sink.dir.join("stats.csv"))?;

    let mut meta = base_meta(cfg, p);
    meta.extend([
        ("run.n".to_string(), n.to_string()),
        ("run.courant".to_string(), fmt_float(report.courant)),
        ("run.tau".to_string(), fmt_float(report.tau)),
        ("run.steps".to_string(), report.steps.len().to_string()),
        ("run.t_final".to_string(), fmt_float(report.t_final)),
        ("run.total_sweeps".to_string(), report.total_sweeps().to_string()),
    ]);
    write_meta(&sink.dir.join("meta.txt"), &meta)?;
    sink.say(format!(
        "{}: N={n}, nu={:.4}, {} steps to t={:.4}, {:.2} sweeps/step, {:.3}s",
        p.name,
        report.courant,
        report.steps.len(),
        report.t_final,
        report.average_iterations(),
        report.wall_time.as_secs_f64()
    ));
    Ok(())
}

fn study_table(study: &ConvergenceStudy) -> CsvTable {
    let components: Vec<&str> = study.rows[0].errors.components.iter().map(|c| c.name).collect();
    let mut header: Vec<String> = vec!["N".into(), "error_C".into(), "error_L2".into()];
    for name in &components {
        header.push(format!("error_C_{name}"));
        header.push(format!("error_L2_{name}"));
    }
    header.push("rate".into());
    for name in &components {
        header.push(format!("rate_{name}"));
    }
    let mut table = CsvTable { header, rows: Vec::new() };
    for row in &study.rows {
        let mut r = vec![row.n.to_string(), fmt_float(row.errors.c_norm), fmt_float(row.errors.l2_norm)];
        for c in &row.errors.components {
            r.push(fmt_float(c.c_norm));
            r.push(fmt_float(c.l2_norm));
        }
        r.push(fmt_opt(row.rate));
        if !components.is_empty() {
            for k in 0..components.len() {
                r.push(fmt_opt(row.component_rates.get(k).copied().flatten()));
            }
        }
        table.push(r);
    }
    table
}

fn converge<V: NodeState>(p: &ProblemSpec<V>, cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let nu = cfg.nus()[0];
    let finest = *cfg.n.last().expect("non-empty N list");
    let refinement = if cfg.command == Command::Richardson { 2 * finest } else { finest };
    let source = cfg.reference.source(p, refinement);
    let predictor = cfg.predictors[0];
    let study = if cfg.command == Command::Richardson {
        richardson_table(p, predictor, nu, &cfg.n, &cfg.relaxation, source)?
    } else {
        convergence_table(p, predictor, nu, &cfg.n, &cfg.relaxation, source)?
    };
    let file = format!("{}.csv", if cfg.command == Command::Richardson { "richardson" } else { "converge" });
    study_table(&study).write(&sink.dir.join(&file))?;

    let mut meta = base_meta(cfg, p);
    meta.push(("study.nu_effective".into(), fmt_float(study.ladder.nu_effective)));
    meta.push(("study.base_intervals".into(), study.ladder.base_intervals.to_string()));
    meta.push(("study.base_steps".into(), study.ladder.base_steps.to_string()));
    meta.push((
        "study.reference".into(),
        study.reference_intervals.map_or("analytic".to_string(), |n| format!("mesh {n}")),
    ));
    if let Some(d) = study.reference_self_difference {
        meta.push(("study.reference_self_difference".into(), fmt_float(d)));
        let finest_error = study.rows.last().unwrap().errors.c_norm;
        if d >= 0.01 * finest_error {
            eprintln!(
                "warning: reference self-difference {d:.2e} is not below 1% of the finest error {finest_error:.2e}; \
                 refine `reference`"
            );
        }
    }
    write_meta(&sink.dir.join("meta.txt"), &meta)?;
    for row in &study.rows {
        sink.say(format!(
            "N={:>5}  C={:.3e}  L2={:.3e}  rate={}",
            row.n,
            row.errors.c_norm,
            row.errors.l2_norm,
            row.rate.map_or("-".into(), |r| format!("{r:.2}"))
        ));
    }
    Ok(())
}

fn iterations<V: NodeState>(p: &ProblemSpec<V>, cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let records = iteration_study(p, &cfg.predictors, &cfg.nus(), &cfg.n, &cfg.deltas, &cfg.relaxation)?;
    let mut table = CsvTable::new(&["nu", "delta", "N", "predictor", "avg_iterations"]);
    for r in &records {
        table.push(vec![
            fmt_float(r.nu),
            fmt_float(r.delta),
            r.n.to_string(),
            r.predictor.name().to_string(),
            fmt_float(r.average_iterations),
        ]);
        sink.say(format!(
            "nu={:<5} delta={:.0e} N={:>5} {:<5} {:.2}",
            r.nu,
            r.delta,
            r.n,
            r.predictor.name(),
            r.average_iterations
        ));
    }
    table.write(&sink.dir.join("iterations.csv"))?;
    write_meta(&sink.dir.join("meta.txt"), &base_meta(cfg, p))?;
    Ok(())
}

fn efficiency<V: NodeState>(p: &ProblemSpec<V>, cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let regimes = RegimeGrid {
        predictors: cfg.predictors.clone(),
        ns: cfg.n.clone(),
        deltas: cfg.deltas.clone(),
        nus: cfg.nus(),
    };
    let n_min = *regimes.ns.iter().min().unwrap();
    let n_max = *regimes.ns.iter().max().unwrap();
    let nu_min = regimes.nus.iter().copied().fold(f64::INFINITY, f64::min);
    let ladder = StudyLadder::new(p, nu_min, n_min)?;
    let reference = build_reference(
        p,
        &ladder,
        cfg.reference.source(p, n_max),
        compact_scheme::PredictorKind::AdamsBashforth,
        &cfg.relaxation,
    )?;
    let evaluated = evaluate_regimes(p, &regimes, &cfg.relaxation, &reference, cfg.repeats)?;

    let mut all = CsvTable::new(&["predictor", "N", "delta", "nu", "error", "time_s", "avg_iterations", "total_sweeps"]);
    for r in &evaluated {
        all.push(vec![
            r.predictor.name().to_string(),
            r.n.to_string(),
            fmt_float(r.delta),
            fmt_float(r.nu),
            fmt_float(r.error),
            fmt_float(r.wall_time.as_secs_f64()),
            fmt_float(r.average_iterations),
            r.total_sweeps.to_string(),
        ]);
    }
    all.write(&sink.dir.join("efficiency_regimes.csv"))?;

    let chosen = select_efficient(&evaluated, &cfg.targets);
    let mut table = CsvTable::new(&["target_error", "predictor", "N", "delta", "nu", "time_s", "avg_iterations"]);
    for r in &chosen {
        table.push(vec![
            fmt_float(r.target),
            r.predictor.name().to_string(),
            r.n.to_string(),
            fmt_float(r.delta),
            fmt_float(r.nu),
            fmt_float(r.wall_time.as_secs_f64()),
            fmt_float(r.average_iterations),
        ]);
        sink.say(format!(
            "target {:.0e}: N={} nu={} delta={:.0e} {} ({:.4}s, error {:.2e})",
            r.target,
            r.n,
            r.nu,
            r.delta,
            r.predictor.name(),
            r.wall_time.as_secs_f64(),
            r.error
        ));
    }
    for &t in &cfg.targets {
        if !chosen.iter().any(|r| r.target == t) {
            sink.say(format!("target {t:.0e}: no regime in the grid reaches it"));
        }
    }
    table.write(&sink.dir.join("efficiency.csv"))?;

    let mut meta = base_meta(cfg, p);
    meta.push(("study.reference".into(), reference.intervals().map_or("analytic".into(), |n| format!("mesh {n}"))));
    if let Some(d) = reference.self_difference() {
        meta.push(("study.reference_self_difference".into(), fmt_float(d)));
    }
    write_meta(&sink.dir.join("meta.txt"), &meta)?;
    Ok(())
}

impl From<CliError> for std::process::ExitCode {
    fn from(e: CliError) -> Self {
        std::process::ExitCode::from(e.exit_code())
    }
}
