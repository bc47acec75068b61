//! Runs the rows of a study.

use std::time::Instant;

use eplp_core::eplp::{single_level, solve_fine, EplpSolver};
use eplp_core::fem::norms::{compute_errors, ErrorTriple};
use eplp_core::problems::ManufacturedProblem;
use eplp_core::ExtensionMode;

use crate::config::{RowSpec, StudyConfig};
use crate::report::{ReportRow, ScalingBlock, StudyReport};
use crate::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Every local domain is the whole square.
    pub override_extension_full: bool,
}

impl RunOptions {
    fn extension(&self) -> ExtensionMode {
        if self.override_extension_full {
            ExtensionMode::Full
        } else {
            ExtensionMode::OneLayer
        }
    }
}

fn problem(cfg: &StudyConfig) -> Result<ManufacturedProblem<f64>, CliError> {
    Ok(ManufacturedProblem::new(cfg.problem, cfg.nu)?)
}

fn row_from(method: &str, spec: &RowSpec, k: Option<usize>, e: ErrorTriple<f64>, time: f64) -> ReportRow {
    ReportRow {
        method: method.into(),
        coarse_h: spec.coarse_h(),
        fine_h: spec.fine_h(),
        k,
        err_u_h1: Some(e.u_h1),
        ord_u_h1: None,
        err_p_l2: Some(e.p_l2),
        ord_p_l2: None,
        err_u_l2: Some(e.u_l2),
        ord_u_l2: None,
        wall_time_s: time,
        max_coarse_residual: None,
        failure: None,
    }
}

fn failed_row(method: &str, spec: &RowSpec, k: Option<usize>, err: &CliError, time: f64) -> ReportRow {
    ReportRow {
        method: method.into(),
        coarse_h: spec.coarse_h(),
        fine_h: spec.fine_h(),
        k,
        err_u_h1: None,
        ord_u_h1: None,
        err_p_l2: None,
        ord_p_l2: None,
        err_u_l2: None,
        ord_u_l2: None,
        wall_time_s: time,
        max_coarse_residual: None,
        failure: Some(err.to_string()),
    }
}

/// Standard Galerkin solve on the fine mesh of a row.
pub fn run_sfem_row(cfg: &StudyConfig, spec: &RowSpec) -> ReportRow {
    let started = Instant::now();
    let result = (|| -> Result<ErrorTriple<f64>, CliError> {
        let pb = problem(cfg)?;
        let tl = single_level::<f64>(spec.n_coarse * spec.m_refine, cfg.family)?;
        let s = solve_fine(&tl, &|x| pb.body_force(x), cfg.nu, cfg.tol)?;
        Ok(compute_errors(&tl, &s, |x| pb.exact(x)))
    })();
    let time = started.elapsed().as_secs_f64();
    match result {
        Ok(e) => row_from("sfem", spec, None, e, time),
        Err(err) => failed_row("sfem", spec, None, &err, time),
    }
}

/// Two-grid run of a row. The wall time covers setup and all cycles.
pub fn run_eplp_row(cfg: &StudyConfig, spec: &RowSpec, opts: &RunOptions) -> ReportRow {
    let started = Instant::now();
    let ecfg = cfg.eplp_config(spec, opts.extension());
    let k = ecfg.iterations().ok();
    let result = (|| -> Result<_, CliError> {
        let pb = problem(cfg)?;
        let solver = EplpSolver::new(ecfg)?;
        Ok(solver.run(&pb)?)
    })();
    let time = started.elapsed().as_secs_f64();
    match result {
        Ok(run) => {
            let mut row = row_from("eplp", spec, Some(run.iterations), *run.trace.last().expect("trace"), time);
            row.max_coarse_residual = run.coarse_residuals.iter().copied().reduce(f64::max);
            row
        }
        Err(err) => failed_row("eplp", spec, k, &err, time),
    }
}

/// Every row of the study, SFEM section first when both methods run.
/// A failing row is recorded and the study continues.
pub fn run_study(cfg: &StudyConfig, opts: &RunOptions) -> Result<StudyReport, CliError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    if cfg.method.runs_sfem() {
        rows.extend(cfg.rows.iter().map(|r| run_sfem_row(cfg, r)));
    }
    if cfg.method.runs_eplp() {
        rows.extend(cfg.rows.iter().map(|r| run_eplp_row(cfg, r, opts)));
    }
    let mut report = StudyReport { rows, scaling: None };
    report.compute_orders();
    Ok(report)
}

/// Times the first row of the study for each thread count and checks that
/// the error columns agree exactly.
pub fn speedup_study(cfg: &StudyConfig, threads: &[usize], opts: &RunOptions) -> Result<StudyReport, CliError> {
    cfg.validate()?;
    if threads.is_empty() || threads.contains(&0) {
        return Err(CliError::Config("thread list must be nonempty and positive".into()));
    }
    let spec = cfg.rows[0];
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for &j in threads {
        let mut c = cfg.clone();
        c.threads = Some(j);
        let row = run_eplp_row(&c, &spec, opts);
        if let Some(f) = &row.failure {
            return Err(CliError::Run(format!("{j} threads: {f}")));
        }
        timings.push((j, row.wall_time_s));
        rows.push(row);
    }
    let same =
        |a: &ReportRow, b: &ReportRow| (a.err_u_h1, a.err_p_l2, a.err_u_l2) == (b.err_u_h1, b.err_p_l2, b.err_u_l2);
    let identical = rows.iter().all(|r| same(r, &rows[0]));
    let k = rows[0].k.unwrap_or(0);
    let scaling = ScalingBlock::from_timings(spec.coarse_h(), spec.fine_h(), k, &timings, identical);
    Ok(StudyReport { rows: vec![rows.swap_remove(0)], scaling: Some(scaling) })
}

/// Ring-wise correction energies around patch `j` on the first row's meshes,
/// with every local domain extended to the whole square.
pub fn decay_profile(cfg: &StudyConfig, j: usize) -> Result<Vec<f64>, CliError> {
    cfg.validate()?;
    let spec = cfg.rows[0];
    let pb = problem(cfg)?;
    let solver = EplpSolver::new(cfg.eplp_config(&spec, ExtensionMode::Full))?;
    Ok(solver.decay_profile(j, &|x| pb.body_force(x), spec.n_coarse + 1)?)
}
