use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use stokes_core::fem::ElementPair;
use stokes_core::stokes::NullspacePolicy;
use stokes_lab::bench::{
    emit_csv, parse_schur_precond, parse_velocity_precond, run_experiment, system_for, ExperimentConfig, MeshSource,
    Method, Summary,
};
use stokes_lab::io::{read_mesh, write_matrix, write_mesh};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Elements {
    P2p1,
    P3p2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Method1,
    Method2,
    Projection,
    VelocityOnly,
    BmbtOnly,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Project,
    Pinned,
}

/// Augmented Lagrangian solvers for the generalized Stokes problem on
/// jittered unit-square meshes.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Mesh levels: `n` for an n×n unit square, or refinement counts with
    /// `--load-mesh`.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    levels: Vec<usize>,
    #[arg(long, value_enum, default_value = "p2p1")]
    elements: Elements,
    #[arg(long, value_delimiter = ',', default_value = "1,1e-2,1e-4")]
    mu: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    lambda: Vec<f64>,
    #[arg(long, value_enum, default_value = "method1")]
    method: MethodArg,
    /// `a1|a2|a3` followed by `-2vc` or `-th`.
    #[arg(long, default_value = "a3-2vc")]
    vel_precond: String,
    /// `c-<a>-<b>`, `clambda-<a>` or `cdelta-<a>-<b>`, modes `2vc` or `th`.
    #[arg(long, default_value = "clambda-2vc")]
    schur_precond: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    restart: usize,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Seed of the vertex jitter.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    perturbation: f64,
    /// Wave number of the manufactured solution; defaults to 16π.
    #[arg(long)]
    wave: Option<f64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Pressure nullspace handling on closed meshes.
    #[arg(long, value_enum, default_value = "project")]
    policy: PolicyArg,
    /// CSV output; residual histories go next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for Matrix Market dumps of the first run's operators.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
    /// Writes the first level's mesh.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
    /// Coarse mesh to refine instead of the unit square.
    #[arg(long)]
    load_mesh: Option<PathBuf>,
    #[arg(long)]
    include_setup_time: bool,
}

impl Cli {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let defaults = ExperimentConfig::default();
        let mesh = match &self.load_mesh {
            Some(path) => MeshSource::Loaded(read_mesh(path)?),
            None => MeshSource::UnitSquare {
                perturbation: self.perturbation,
            },
        };
        let open = matches!(&mesh, MeshSource::Loaded(m) if m.has_open_boundary());
        let policy = match (open, self.policy) {
            (true, _) => NullspacePolicy::OpenBoundary,
            (false, PolicyArg::Project) => NullspacePolicy::ProjectMeanZero,
            (false, PolicyArg::Pinned) => NullspacePolicy::Pinned,
        };
        Ok(ExperimentConfig {
            levels: self.levels.clone(),
            elements: match self.elements {
                Elements::P2p1 => ElementPair::P2P1,
                Elements::P3p2 => ElementPair::P3P2,
            },
            mu: self.mu.clone(),
            lambda: self.lambda.clone(),
            method: match self.method {
                MethodArg::Method1 => Method::Method1,
                MethodArg::Method2 => Method::Method2,
                MethodArg::Projection => Method::Projection,
                MethodArg::VelocityOnly => Method::VelocityOnly,
                MethodArg::BmbtOnly => Method::BmbtOnly,
            },
            velocity_precond: parse_velocity_precond(&self.vel_precond)?,
            schur_precond: parse_schur_precond(&self.schur_precond)?,
            rel_tol: self.tol,
            restart: self.restart,
            max_iter: self.max_iter,
            seed: self.seed,
            threads: self.threads,
            output: self.out.clone(),
            mesh,
            wave: self.wave.unwrap_or(defaults.wave),
            policy,
            include_setup_time: self.include_setup_time,
        })
    }
}

fn dump(config: &ExperimentConfig, matrices: Option<&PathBuf>, mesh: Option<&PathBuf>) -> anyhow::Result<()> {
    let level = config.levels[0];
    if let Some(path) = mesh {
        write_mesh(&config.build_mesh(level)?, path)?;
    }
    if let Some(dir) = matrices {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let (sys, _) = system_for(config, level, config.mu[0], config.lambda[0])?;
        for (name, m) in [
            ("a", &sys.a),
            ("m_v", &sys.m_v),
            ("l_v", &sys.l_v),
            ("e_v", &sys.e_v),
            ("b", &sys.b),
            ("m_q", &sys.m_q),
            ("l_q", &sys.l_q),
        ] {
            write_matrix(m, &dir.join(format!("{name}.mtx")))?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let config = cli.config()?;
    config.validate()?;
    dump(&config, cli.dump_matrix.as_ref(), cli.dump_mesh.as_ref())?;
    let report = run_experiment(&config)?;
    print!("{}", Summary(&report));
    if let Some(out) = &config.output {
        emit_csv(&report, out).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(report.all_converged())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some runs did not converge");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
