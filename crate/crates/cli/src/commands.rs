use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use compacton_core::bounds::{compute_bounds, InitialData};
use compacton_core::convergence::{convergence_study, ConvergenceReport};
use compacton_core::timestepper::{run, RunStatus};
use rayon::prelude::*;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{self, FileEntry, Manifest};
use crate::{EXIT_BLOWUP, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Bounds,
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Bounds => "bounds",
            Command::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub directory: PathBuf,
    pub exit_code: i32,
    pub summary: String,
}

/// A config with its output directory already resolved.
#[derive(Debug, Clone)]
pub struct Job {
    pub label: String,
    pub config: Config,
}

/// Resolve config arguments (paths or recipe names) into jobs. With `out` and a single
/// argument the output goes to `out`; with several, to `out/<label>`.
pub fn plan(args: &[String], out: Option<&Path>) -> Result<Vec<Job>, CliError> {
    let mut jobs = Vec::with_capacity(args.len());
    for arg in args {
        let mut config = Config::resolve(arg)?;
        let label = Path::new(arg).file_stem().map_or_else(|| arg.clone(), |s| s.to_string_lossy().into_owned());
        match out {
            Some(dir) if args.len() == 1 => config.output.directory = dir.to_path_buf(),
            Some(dir) => config.output.directory = dir.join(&label),
            None => {}
        }
        jobs.push(Job { label, config });
    }
    for (i, a) in jobs.iter().enumerate() {
        if let Some(b) = jobs[..i].iter().find(|b| b.config.output.directory == a.config.output.directory) {
            return Err(CliError::Config(format!(
                "{} and {} both write to {}",
                b.label,
                a.label,
                a.config.output.directory.display()
            )));
        }
    }
    Ok(jobs)
}

/// `min(jobs, COMPACTON_LAB_THREADS)`, at least 1.
pub fn effective_threads(jobs: usize, cap: Option<&str>) -> usize {
    let cap = cap.and_then(|c| c.trim().parse::<usize>().ok()).filter(|&c| c > 0).unwrap_or(usize::MAX);
    jobs.min(cap).max(1)
}

/// Run every job on a pool of `threads` workers; results come back in job order.
pub fn execute_all(command: Command, jobs: &[Job], threads: usize) -> Vec<Result<Outcome, CliError>> {
    if threads <= 1 || jobs.len() <= 1 {
        return jobs.iter().map(|j| execute(command, &j.config)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| jobs.par_iter().map(|j| execute(command, &j.config)).collect())
}

pub fn execute(command: Command, config: &Config) -> Result<Outcome, CliError> {
    match command {
        Command::Simulate => simulate(config),
        Command::Bounds => bounds(config),
        Command::Convergence => convergence(config),
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn finish(
    command: Command,
    config: &Config,
    started: String,
    status: &str,
    events: Vec<compacton_core::timestepper::Event>,
    files: Vec<FileEntry>,
) -> Result<(), CliError> {
    let manifest = Manifest {
        command: command.name().into(),
        version: crate::VERSION.into(),
        config: config.clone(),
        started,
        finished: now(),
        status: status.into(),
        events,
        files,
    };
    output::write_json(&config.output.directory.join(output::MANIFEST), &manifest)
}

pub fn simulate(config: &Config) -> Result<Outcome, CliError> {
    let started = now();
    let dir = &config.output.directory;
    output::ensure_dir(dir)?;
    let out = run(&config.run_config())?;

    let files = vec![
        output::write_snapshots(dir, &out.trajectory)?,
        output::write_diagnostics(dir, &out.diagnostics)?,
        output::write_events(dir, &out.events)?,
    ];
    let status = match out.status {
        RunStatus::Completed => "completed",
        RunStatus::Blowup => "blowup",
    };
    finish(Command::Simulate, config, started, status, out.events.clone(), files)?;

    let mut summary = format!("{}: {status} at t = {:.6} after {} steps", config.equation, out.final_state.t, out.final_state.step);
    for e in &out.events {
        summary.push_str(&format!("\n  {:?} at t = {:.4}: {}", e.kind, e.t, e.detail));
    }
    let exit_code = if out.status == RunStatus::Blowup { EXIT_BLOWUP } else { EXIT_OK };
    Ok(Outcome { directory: dir.clone(), exit_code, summary })
}

pub fn bounds(config: &Config) -> Result<Outcome, CliError> {
    let started = now();
    let dir = &config.output.directory;
    let domain = (config.grid.x_left, config.grid.x_right);
    let report = compute_bounds(&config.equation, InitialData::Pointwise { ic: &config.ic, domain })?;
    output::ensure_dir(dir)?;
    output::write_json(&dir.join(output::BOUNDS), &report)?;
    let files = vec![FileEntry { name: output::BOUNDS.into(), rows: 1 }];
    finish(Command::Bounds, config, started, "completed", Vec::new(), files)?;

    let t2 = report.t2.map_or(String::new(), |t| format!(", T2 = {t:.2}"));
    let summary = format!(
        "{}: T1 = {:.2}{t2}, T3 = {:.2} (I1 = {:.6}, d = {:.6}, min = {:.2})",
        config.equation,
        report.t1,
        report.t3,
        report.i1,
        report.d,
        report.min_bound()
    );
    Ok(Outcome { directory: dir.clone(), exit_code: EXIT_OK, summary })
}

pub fn convergence(config: &Config) -> Result<Outcome, CliError> {
    let started = now();
    let dir = &config.output.directory;
    if !config.ic.is_smooth() {
        eprintln!("warning: the initial condition is not smooth; expect degraded orders");
    }
    let report = convergence_study(&config.run_config())?;
    output::ensure_dir(dir)?;
    let files = vec![
        write_convergence_csv(dir, &report)?,
        {
            output::write_json(&dir.join(output::CONVERGENCE_REPORT), &report)?;
            FileEntry { name: output::CONVERGENCE_REPORT.into(), rows: 1 }
        },
    ];
    finish(Command::Convergence, config, started, "completed", Vec::new(), files)?;

    let [_, k1, k2] = report.ladder;
    let order = |o: Option<f64>| o.map_or("degenerate".to_string(), |o| format!("{o:.3}"));
    let mut summary = format!("{}: spatial order (L2, K = {k1} -> {k2}) {}", config.equation, order(report.solution.order()));
    if let (Some(avg), Some(nodal)) = (&report.rhs_cell_average, &report.rhs_nodal) {
        summary.push_str(&format!(
            "; rhs consistency order {} (cell averages), {} (nodal)",
            order(avg.order()),
            order(nodal.order())
        ));
    }
    Ok(Outcome { directory: dir.clone(), exit_code: EXIT_OK, summary })
}

/// `quantity,k,value,error,order,status`: row `i` is ladder level `i`. For differences
/// the error sits on the coarser level of its pair; orders on the finer level.
pub fn write_convergence_csv(dir: &Path, report: &ConvergenceReport) -> Result<FileEntry, CliError> {
    let path = dir.join(output::CONVERGENCE);
    let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["quantity", "k", "value", "error", "order", "status"])?;
    let opt = |v: Option<&f64>| v.filter(|v| v.is_finite()).map_or(String::new(), |v| output::fmt(*v));
    let mut rows = 0;
    for row in report.rows() {
        let status = serde_json::to_value(row.status)?;
        let status = status.as_str().unwrap_or_default().to_string();
        for (i, k) in report.ladder.iter().enumerate() {
            let order = if i == 0 { None } else { row.orders.get(i - 1) };
            w.write_record([
                row.quantity.as_str(),
                &k.to_string(),
                &opt(Some(&row.values[i])),
                &opt(row.errors.get(i)),
                &opt(order),
                &status,
            ])?;
            rows += 1;
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(FileEntry { name: output::CONVERGENCE.into(), rows })
}
