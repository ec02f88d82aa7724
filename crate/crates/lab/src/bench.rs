//! Experiment sweeps over mesh levels, viscosities and augmentation
//! parameters, with CSV emission.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use stokes_core::fem::{
    assemble_load, interpolate, relative_errors_pressure, relative_l2_error_velocity, BoundaryCondition, ElementPair,
    MixedSpace,
};
use stokes_core::manufactured::{manufactured_case, CaseKind, ManufacturedCase, DEFAULT_WAVE};
use stokes_core::mesh::{build_unit_square_mesh, Mesh};
use stokes_core::multigrid::AmgMode;
use stokes_core::sparse::vector::{norm1, sub};
use stokes_core::stokes::{
    compute_tau, coupled_residual, method1_solve, method2_solve, projection_step, schur_residual, BmbtMass,
    HierarchyKind, NullspacePolicy, SchurPrecondKind, SolverOptions, StokesRhs, StokesSystem, VelocityPrecond,
    VelocityPrecondKind,
};

/// CSV header of [`emit_csv`].
pub const CSV_HEADER: [&str; 13] = [
    "method",
    "precond",
    "level",
    "dofs",
    "mu",
    "lambda",
    "outer_iters",
    "inner_iters",
    "vel_err",
    "press_err",
    "wall_s",
    "eff_ms",
    "converged",
];

/// Inner tolerance of the residual recomputation after Method 1.
const VERIFY_INNER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Method1,
    Method2,
    Projection,
    VelocityOnly,
    BmbtOnly,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Method1 => "method1",
            Method::Method2 => "method2",
            Method::Projection => "projection",
            Method::VelocityOnly => "velocity_only",
            Method::BmbtOnly => "bmbt_only",
        }
    }
}

/// Mesh family of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    /// `n × n` jittered squares; a level value is `n`.
    UnitSquare { perturbation: f64 },
    /// A given mesh; a level value is a number of red refinements of it.
    Loaded(Mesh),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub levels: Vec<usize>,
    pub elements: ElementPair,
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub method: Method,
    pub velocity_precond: VelocityPrecond,
    pub schur_precond: SchurPrecondKind,
    pub rel_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub mesh: MeshSource,
    /// Wave number of the manufactured fields.
    pub wave: f64,
    pub policy: NullspacePolicy,
    /// Count AMG setup inside the wall time.
    pub include_setup_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            levels: vec![8, 16, 32],
            elements: ElementPair::P2P1,
            mu: vec![1.0, 1e-2, 1e-4],
            lambda: vec![0.0],
            method: Method::Method1,
            velocity_precond: VelocityPrecond::A3_2VC,
            schur_precond: SchurPrecondKind::CLambda { a: AmgMode::TWO_VC },
            rel_tol: 1e-10,
            restart: 200,
            max_iter: 1000,
            seed: 1,
            threads: 1,
            output: None,
            mesh: MeshSource::UnitSquare { perturbation: 0.2 },
            wave: DEFAULT_WAVE,
            policy: NullspacePolicy::ProjectMeanZero,
            include_setup_time: false,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("`{0}` must not be empty")]
    EmptySweep(&'static str),
    #[error("tolerance {0} outside (0, 1)")]
    Tolerance(f64),
    #[error("{0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.levels.is_empty() {
            return Err(ConfigError::EmptySweep("levels"));
        }
        if self.mu.is_empty() {
            return Err(ConfigError::EmptySweep("mu"));
        }
        if self.lambda.is_empty() {
            return Err(ConfigError::EmptySweep("lambda"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(ConfigError::Tolerance(self.rel_tol));
        }
        if self.restart == 0 || self.max_iter == 0 || self.threads == 0 {
            return Err(ConfigError::Invalid(
                "restart, max_iter and threads must be positive".into(),
            ));
        }
        if let Some(&mu) = self.mu.iter().find(|&&m| !(m > 0.0 && m.is_finite())) {
            return Err(ConfigError::Invalid(format!("mu = {mu} must be positive")));
        }
        if let Some(&l) = self.lambda.iter().find(|&&l| !(l >= 0.0 && l.is_finite())) {
            return Err(ConfigError::Invalid(format!("lambda = {l} must be non-negative")));
        }
        if let MeshSource::UnitSquare { .. } = self.mesh {
            if self.levels.contains(&0) {
                return Err(ConfigError::Invalid("mesh level n must be at least 1".into()));
            }
        }
        let open = matches!(&self.mesh, MeshSource::Loaded(m) if m.has_open_boundary());
        if open != (self.policy == NullspacePolicy::OpenBoundary) {
            return Err(ConfigError::Invalid(
                "the open-boundary policy goes with, and only with, a mesh with an open side".into(),
            ));
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            restart: self.restart,
            max_iter: self.max_iter,
            ..SolverOptions::with_tol(self.rel_tol)
        }
    }

    /// Mesh of one level.
    pub fn build_mesh(&self, level: usize) -> stokes_core::Result<Mesh> {
        match &self.mesh {
            MeshSource::UnitSquare { perturbation } => build_unit_square_mesh(level, *perturbation, self.seed),
            MeshSource::Loaded(m) => Ok((0..level).fold(m.clone(), |m, _| m.refine())),
        }
    }

    /// Short label of the preconditioners in use.
    pub fn precond_label(&self) -> String {
        match self.method {
            Method::Method1 | Method::BmbtOnly => schur_label(self.schur_precond),
            Method::Method2 => format!(
                "{}+{}",
                schur_label(self.schur_precond),
                velocity_label(self.velocity_precond)
            ),
            Method::Projection => "a3-2vc".into(),
            Method::VelocityOnly => velocity_label(self.velocity_precond),
        }
    }
}

pub fn mode_label(m: AmgMode) -> String {
    match m {
        AmgMode::TH => "th".into(),
        AmgMode::FixedVCycles(k) => format!("{k}vc"),
        AmgMode::ToThreshold(t) => format!("th{t:e}"),
    }
}

pub fn velocity_label(v: VelocityPrecond) -> String {
    let k = match v.kind {
        VelocityPrecondKind::A1 => "a1",
        VelocityPrecondKind::A2 => "a2",
        VelocityPrecondKind::A3 => "a3",
    };
    format!("{k}-{}", mode_label(v.mode))
}

pub fn schur_label(s: SchurPrecondKind) -> String {
    match s {
        SchurPrecondKind::C { a, b } => format!("c-{}-{}", mode_label(a), mode_label(b)),
        SchurPrecondKind::CLambda { a } => format!("clambda-{}", mode_label(a)),
        SchurPrecondKind::CDelta { a, b } => format!("cdelta-{}-{}", mode_label(a), mode_label(b)),
    }
}

/// Mass inverse of a `bmbt_only` run, read off the Schur preconditioner.
pub fn bmbt_mass(s: SchurPrecondKind) -> BmbtMass {
    match s {
        SchurPrecondKind::C { b, .. } if b.is_fixed() => BmbtMass::Consistent2Vc,
        SchurPrecondKind::C { .. } | SchurPrecondKind::CDelta { .. } => BmbtMass::ConsistentTh,
        SchurPrecondKind::CLambda { .. } => BmbtMass::Lumped,
    }
}

/// One `(level, μ, λ)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub method: String,
    pub precond: String,
    pub level: usize,
    /// Velocity plus pressure unknowns, wall unknowns included.
    pub dofs: usize,
    pub mu: f64,
    pub lambda: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub vel_err: Option<f64>,
    pub press_err: Option<f64>,
    pub press_err_l1: Option<f64>,
    pub wall_s: f64,
    pub eff_ms: f64,
    pub converged: bool,
    /// Outer relative residual history.
    pub history: Vec<f64>,
    /// Largest `final residual / tolerance` over every converged Krylov
    /// report of the run, outer residuals recomputed independently.
    pub worst_residual_ratio: f64,
    pub error: Option<String>,
}

/// `wall × processes / dofs` in milliseconds.
pub fn compute_eff(wall_time_s: f64, process_count: usize, total_dofs: usize) -> f64 {
    wall_time_s * 1e3 * process_count as f64 / total_dofs as f64
}

/// All records of a sweep, in `(level, μ, λ)` order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub records: Vec<RunRecord>,
}

impl ExperimentReport {
    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }
}

/// Runs every `(level, μ, λ)` combination. A failing run is recorded with
/// `converged = false` and the sweep continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ConfigError> {
    config.validate()?;
    let mut tasks = Vec::new();
    for &level in &config.levels {
        for &mu in &config.mu {
            for &lambda in &config.lambda {
                tasks.push((level, mu, lambda));
            }
        }
    }
    let slots: Vec<Mutex<Option<RunRecord>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(&(level, mu, lambda)) = tasks.get(i) else {
            break;
        };
        *slots[i].lock().unwrap() = Some(run_one(config, i, level, mu, lambda));
    };
    let threads = config.threads.min(tasks.len());
    if threads <= 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(worker);
            }
        });
    }
    let records = slots.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect();
    Ok(ExperimentReport { records })
}

struct Outcome {
    outer_iters: usize,
    inner_iters: usize,
    vel_err: Option<f64>,
    press_err: Option<(f64, f64)>,
    wall_s: f64,
    converged: bool,
    history: Vec<f64>,
    worst: f64,
}

fn run_one(config: &ExperimentConfig, run_id: usize, level: usize, mu: f64, lambda: f64) -> RunRecord {
    let mut record = RunRecord {
        run_id,
        method: config.method.name().into(),
        precond: config.precond_label(),
        level,
        dofs: 0,
        mu,
        lambda,
        outer_iters: 0,
        inner_iters: 0,
        vel_err: None,
        press_err: None,
        press_err_l1: None,
        wall_s: 0.0,
        eff_ms: 0.0,
        converged: false,
        history: Vec::new(),
        worst_residual_ratio: 0.0,
        error: None,
    };
    let result = build_system(config, level, mu, lambda).and_then(|(sys, case)| {
        record.dofs = sys.space.n_velocity() + sys.space.n_pressure();
        execute(config, &sys, &case)
    });
    match result {
        Ok(o) => {
            record.outer_iters = o.outer_iters;
            record.inner_iters = o.inner_iters;
            record.vel_err = o.vel_err;
            record.press_err = o.press_err.map(|e| e.0);
            record.press_err_l1 = o.press_err.map(|e| e.1);
            record.wall_s = o.wall_s;
            record.eff_ms = if record.dofs > 0 {
                compute_eff(o.wall_s, 1, record.dofs)
            } else {
                0.0
            };
            record.converged = o.converged;
            record.history = o.history;
            record.worst_residual_ratio = o.worst;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

fn build_system(
    config: &ExperimentConfig,
    level: usize,
    mu: f64,
    lambda: f64,
) -> stokes_core::Result<(StokesSystem, ManufacturedCase)> {
    let space = MixedSpace::new(config.build_mesh(level)?, config.elements)?;
    let tau = compute_tau(space.n_velocity_nodes())?;
    let kind = match config.method {
        Method::VelocityOnly => CaseKind::NonDivFree,
        _ => CaseKind::DivFree,
    };
    let case = manufactured_case(kind, config.wave, mu, lambda, tau);
    let bc = match config.method {
        Method::BmbtOnly => BoundaryCondition::homogeneous(&space),
        _ => BoundaryCondition::from_velocity(&space, |x, y| case.velocity(x, y)),
    };
    let sys = StokesSystem::with_boundary(space, tau, mu, lambda, config.policy, bc)?;
    Ok((sys, case))
}

/// Hierarchies a method touches, built before the clock starts unless
/// setup time is requested.
fn hierarchies(config: &ExperimentConfig, lambda: f64) -> Vec<HierarchyKind> {
    let mut h = Vec::new();
    let schur = |h: &mut Vec<HierarchyKind>| {
        h.push(HierarchyKind::MassPressure);
        match config.schur_precond {
            SchurPrecondKind::C { .. } => {
                h.extend([HierarchyKind::MassVelocity, HierarchyKind::ShiftedPressureLaplacian])
            }
            SchurPrecondKind::CLambda { .. } => h.push(HierarchyKind::ShiftedPressureLaplacian),
            SchurPrecondKind::CDelta { .. } => h.push(HierarchyKind::PressureLaplacian),
        }
    };
    match config.method {
        Method::Method1 => {
            h.push(HierarchyKind::Velocity(VelocityPrecondKind::A3));
            schur(&mut h);
        }
        Method::Method2 => {
            h.push(HierarchyKind::Velocity(config.velocity_precond.kind));
            schur(&mut h);
        }
        Method::Projection => h.extend([
            HierarchyKind::Velocity(VelocityPrecondKind::A3),
            HierarchyKind::PressureLaplacian,
            HierarchyKind::MassPressure,
        ]),
        Method::VelocityOnly => h.push(HierarchyKind::Velocity(config.velocity_precond.kind)),
        Method::BmbtOnly => {
            h.push(HierarchyKind::ShiftedPressureLaplacian);
            if bmbt_mass(config.schur_precond) != BmbtMass::Lumped {
                h.push(HierarchyKind::MassVelocity);
            }
        }
    }
    if lambda > 0.0 && config.method != Method::BmbtOnly {
        h.push(HierarchyKind::MassPressure);
    }
    h
}

fn worst_ratio(sys: &StokesSystem) -> f64 {
    sys.records()
        .iter()
        .filter(|r| r.converged)
        .map(|r| r.final_residual / r.rel_tol)
        .fold(0.0, f64::max)
}

fn execute(config: &ExperimentConfig, sys: &StokesSystem, case: &ManufacturedCase) -> stokes_core::Result<Outcome> {
    let opts = config.solver_options();
    if !config.include_setup_time {
        sys.prepare(&hierarchies(config, sys.lambda))?;
    }
    let vel_err = |u: &[f64]| relative_l2_error_velocity(&sys.full_velocity(u), &sys.space, |x, y| case.velocity(x, y));
    let press_err =
        |p: &[f64]| relative_errors_pressure(p, &sys.space, |x, y| case.pressure(x, y)).map(|e| (e.l2, e.l1));
    let stokes_rhs = || sys.rhs_from_forcing(|x, y| case.stokes_forcing(x, y));
    match config.method {
        Method::Method1 | Method::Method2 | Method::Projection => {
            let rhs = stokes_rhs()?;
            sys.clear_records();
            let clock = Instant::now();
            let (u, p, outer, inner, converged, history) = match config.method {
                Method::Method1 => {
                    let (u, p, r) = method1_solve(sys, &rhs, config.schur_precond, &opts)?;
                    let inner = r.inner.total_iterations();
                    (u, p, r.outer.iterations, inner, r.converged, r.outer.relative_residuals)
                }
                Method::Method2 => {
                    let (u, p, r) = method2_solve(sys, &rhs, config.schur_precond, config.velocity_precond, &opts)?;
                    let inner = r.inner.total_iterations();
                    (u, p, r.outer.iterations, inner, r.converged, r.outer.relative_residuals)
                }
                _ => {
                    let (u, p, r) = projection_step(sys, &rhs, &opts)?;
                    let inner = r.laplacian.iterations + r.mass.iterations;
                    (
                        u,
                        p,
                        r.velocity.iterations,
                        inner,
                        r.converged,
                        r.velocity.relative_residuals,
                    )
                }
            };
            let wall_s = clock.elapsed().as_secs_f64();
            let mut worst = worst_ratio(sys);
            if converged {
                worst = worst.max(independent_outer_residual(config, sys, &rhs, &u, &p)? / opts.rel_tol);
            }
            Ok(Outcome {
                outer_iters: outer,
                inner_iters: inner,
                vel_err: Some(vel_err(&u)?),
                press_err: Some(press_err(&p)?),
                wall_s,
                converged,
                history,
                worst,
            })
        }
        Method::VelocityOnly => {
            let load = assemble_load(&sys.space, |x, y| case.velocity_forcing(x, y));
            let f = sys.velocity_rhs(&load)?;
            sys.clear_records();
            let clock = Instant::now();
            let (u, rep) = sys.solve_velocity(&f, config.velocity_precond, opts.rel_tol)?;
            let wall_s = clock.elapsed().as_secs_f64();
            Ok(Outcome {
                outer_iters: rep.iterations,
                inner_iters: 0,
                vel_err: Some(vel_err(&u)?),
                press_err: None,
                wall_s,
                converged: rep.converged,
                history: rep.relative_residuals,
                worst: worst_ratio(sys),
            })
        }
        Method::BmbtOnly => {
            let mass = bmbt_mass(config.schur_precond);
            let mut p = interpolate(|x, y| case.pressure(x, y), &sys.space.pressure);
            sys.project(&mut p);
            let rhs = bmbt_product(sys, &p, mass)?;
            sys.clear_records();
            let clock = Instant::now();
            let (x, rep) = sys.solve_bmbt(&rhs, mass, opts.rel_tol)?;
            let wall_s = clock.elapsed().as_secs_f64();
            let mut x = x;
            sys.project(&mut x);
            let l1 = norm1(&sub(&x, &p)) / norm1(&p);
            Ok(Outcome {
                outer_iters: rep.iterations,
                inner_iters: 0,
                vel_err: None,
                press_err: Some((l1, l1)),
                wall_s,
                converged: rep.converged,
                history: rep.relative_residuals,
                worst: worst_ratio(sys),
            })
        }
    }
}

/// `B·mass⁻¹·Bᵀ p`, with the consistent mass inverted well below the
/// solver tolerance.
fn bmbt_product(sys: &StokesSystem, p: &[f64], mass: BmbtMass) -> stokes_core::Result<Vec<f64>> {
    let w = sys.bt.spmv(p)?;
    let z = match mass {
        BmbtMass::Lumped => w.iter().zip(&sys.lumped_v).map(|(a, d)| a / d).collect(),
        _ => {
            sys.hierarchy(HierarchyKind::MassVelocity)?
                .apply(&w, AmgMode::ToThreshold(1e-13))?
                .x
        }
    };
    let mut y = sys.b.spmv(&z)?;
    sys.project(&mut y);
    Ok(y)
}

fn independent_outer_residual(
    config: &ExperimentConfig,
    sys: &StokesSystem,
    rhs: &StokesRhs,
    u: &[f64],
    p: &[f64],
) -> stokes_core::Result<f64> {
    match config.method {
        Method::Method1 => schur_residual(sys, rhs, p, VERIFY_INNER_TOL),
        Method::Method2 => coupled_residual(sys, rhs, u, p),
        _ => Ok(0.0),
    }
}

/// Path of the residual history of run `run_id`.
pub fn history_path(path: &Path, run_id: usize) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(format!(".hist.{run_id}.csv"));
    PathBuf::from(s)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Writes the records to `path` and each residual history to
/// [`history_path`].
pub fn emit_csv(report: &ExperimentReport, path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in &report.records {
        w.write_record([
            r.method.clone(),
            r.precond.clone(),
            r.level.to_string(),
            r.dofs.to_string(),
            format!("{:e}", r.mu),
            format!("{:e}", r.lambda),
            r.outer_iters.to_string(),
            r.inner_iters.to_string(),
            opt(r.vel_err),
            opt(r.press_err),
            format!("{:e}", r.wall_s),
            format!("{:e}", r.eff_ms),
            r.converged.to_string(),
        ])?;
        let mut h = csv::Writer::from_path(history_path(path, r.run_id))?;
        h.write_record(["iteration", "rel_residual"])?;
        for (i, v) in r.history.iter().enumerate() {
            h.write_record([i.to_string(), format!("{v:e}")])?;
        }
        h.flush()?;
    }
    w.flush()?;
    Ok(())
}

/// A row of the CSV read back.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub method: String,
    pub precond: String,
    pub level: usize,
    pub dofs: usize,
    pub mu: f64,
    pub lambda: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub vel_err: Option<f64>,
    pub press_err: Option<f64>,
    pub wall_s: f64,
    pub eff_ms: f64,
    pub converged: bool,
}

impl From<&RunRecord> for CsvRow {
    fn from(r: &RunRecord) -> Self {
        Self {
            method: r.method.clone(),
            precond: r.precond.clone(),
            level: r.level,
            dofs: r.dofs,
            mu: r.mu,
            lambda: r.lambda,
            outer_iters: r.outer_iters,
            inner_iters: r.inner_iters,
            vel_err: r.vel_err,
            press_err: r.press_err,
            wall_s: r.wall_s,
            eff_ms: r.eff_ms,
            converged: r.converged,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: bad `{column}` value `{value}`")]
    Field {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>, ReadError> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(ReadError::Header(header));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        fn parse<T: std::str::FromStr>(row: usize, column: &'static str, v: &str) -> Result<T, ReadError> {
            v.parse().map_err(|_| ReadError::Field {
                row,
                column,
                value: v.into(),
            })
        }
        let parse_opt = |c: usize| -> Result<Option<f64>, ReadError> {
            match field(c) {
                "" => Ok(None),
                v => parse(i, CSV_HEADER[c], v).map(Some),
            }
        };
        rows.push(CsvRow {
            method: field(0).into(),
            precond: field(1).into(),
            level: parse(i, "level", field(2))?,
            dofs: parse(i, "dofs", field(3))?,
            mu: parse(i, "mu", field(4))?,
            lambda: parse(i, "lambda", field(5))?,
            outer_iters: parse(i, "outer_iters", field(6))?,
            inner_iters: parse(i, "inner_iters", field(7))?,
            vel_err: parse_opt(8)?,
            press_err: parse_opt(9)?,
            wall_s: parse(i, "wall_s", field(10))?,
            eff_ms: parse(i, "eff_ms", field(11))?,
            converged: parse(i, "converged", field(12))?,
        });
    }
    Ok(rows)
}

/// Human-readable table of a report.
pub struct Summary<'a>(pub &'a ExperimentReport);

impl fmt::Display for Summary<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<13} {:<22} {:>5} {:>8} {:>8} {:>6} {:>6} {:>7} {:>10} {:>10} {:>9} {:>9} {:>4}",
            "method",
            "precond",
            "level",
            "dofs",
            "mu",
            "lambda",
            "outer",
            "inner",
            "vel_err",
            "press_err",
            "wall_s",
            "eff_ms",
            "ok"
        )?;
        let e = |v: Option<f64>| v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
        for r in &self.0.records {
            writeln!(
                f,
                "{:<13} {:<22} {:>5} {:>8} {:>8.0e} {:>6} {:>6} {:>7} {:>10} {:>10} {:>9.3} {:>9.5} {:>4}",
                r.method,
                r.precond,
                r.level,
                r.dofs,
                r.mu,
                r.lambda,
                r.outer_iters,
                r.inner_iters,
                e(r.vel_err),
                e(r.press_err),
                r.wall_s,
                r.eff_ms,
                if r.converged { "yes" } else { "NO" }
            )?;
            if let Some(err) = &r.error {
                writeln!(f, "    run {} failed: {err}", r.run_id)?;
            }
        }
        Ok(())
    }
}

/// Relative L² velocity and pressure errors of a solved system.
pub fn solution_errors(
    sys: &StokesSystem,
    case: &ManufacturedCase,
    u: &[f64],
    p: &[f64],
) -> stokes_core::Result<(f64, f64)> {
    let ve = relative_l2_error_velocity(&sys.full_velocity(u), &sys.space, |x, y| case.velocity(x, y))?;
    let pe = relative_errors_pressure(p, &sys.space, |x, y| case.pressure(x, y))?.l2;
    Ok((ve, pe))
}

/// The system and manufactured case of one run, as [`run_experiment`]
/// builds them.
pub fn system_for(
    config: &ExperimentConfig,
    level: usize,
    mu: f64,
    lambda: f64,
) -> stokes_core::Result<(StokesSystem, ManufacturedCase)> {
    build_system(config, level, mu, lambda)
}

impl std::str::FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "method1" | "m1" => Ok(Method::Method1),
            "method2" | "m2" => Ok(Method::Method2),
            "projection" => Ok(Method::Projection),
            "velocity_only" => Ok(Method::VelocityOnly),
            "bmbt_only" => Ok(Method::BmbtOnly),
            _ => Err(ConfigError::Invalid(format!("unknown method `{s}`"))),
        }
    }
}

/// `2vc`, `<k>vc` or `th`.
pub fn parse_mode(s: &str) -> Result<AmgMode, ConfigError> {
    let bad = || ConfigError::Invalid(format!("unknown AMG mode `{s}`, expected `th` or `<k>vc`"));
    if s == "th" {
        return Ok(AmgMode::TH);
    }
    let k: usize = s.strip_suffix("vc").ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if k == 0 {
        return Err(bad());
    }
    Ok(AmgMode::FixedVCycles(k))
}

/// `a1-2vc`, `a2-th`, `a3-2vc`, ...
pub fn parse_velocity_precond(s: &str) -> Result<VelocityPrecond, ConfigError> {
    let (k, m) = s
        .split_once('-')
        .ok_or_else(|| ConfigError::Invalid(format!("velocity preconditioner `{s}` is not `<a1|a2|a3>-<mode>`")))?;
    let kind = match k {
        "a1" => VelocityPrecondKind::A1,
        "a2" => VelocityPrecondKind::A2,
        "a3" => VelocityPrecondKind::A3,
        _ => return Err(ConfigError::Invalid(format!("unknown velocity preconditioner `{k}`"))),
    };
    Ok(VelocityPrecond {
        kind,
        mode: parse_mode(m)?,
    })
}

/// `c-<a>-<b>`, `clambda-<a>` or `cdelta-<a>-<b>`.
pub fn parse_schur_precond(s: &str) -> Result<SchurPrecondKind, ConfigError> {
    let parts: Vec<&str> = s.split('-').collect();
    match parts.as_slice() {
        ["c", a, b] => Ok(SchurPrecondKind::C {
            a: parse_mode(a)?,
            b: parse_mode(b)?,
        }),
        ["clambda", a] => Ok(SchurPrecondKind::CLambda { a: parse_mode(a)? }),
        ["cdelta", a, b] => Ok(SchurPrecondKind::CDelta {
            a: parse_mode(a)?,
            b: parse_mode(b)?,
        }),
        _ => Err(ConfigError::Invalid(format!("unknown Schur preconditioner `{s}`"))),
    }
}
