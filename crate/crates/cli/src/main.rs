mod checks;
mod commands;
mod config;
mod error;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bandlab::ensemble::{EntryKind, ShapeKind};
use config::{Command, DiagramCheck, Grid, RunConfig, Suite};
use error::CliError;

#[derive(Parser)]
#[command(name = "bandlab", version, about = "Random band matrix laboratory")]
struct Cli {
    /// JSON run config, or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: bandlab-out/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "BANDLAB_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long = "d", global = true)]
    d: Option<usize>,
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    #[arg(long = "W", global = true)]
    w: Option<usize>,
    #[arg(long, global = true, value_parser = parse_shape)]
    shape: Option<ShapeKind>,
    #[arg(long, global = true)]
    scale: Option<f64>,
    #[arg(long, global = true, value_parser = parse_dist)]
    dist: Option<EntryKind>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    complex: Option<bool>,
    /// Truncation exponent δ.
    #[arg(long, global = true)]
    delta: Option<f64>,
}

impl EnsembleArgs {
    fn any(&self) -> bool {
        self.d.is_some()
            || self.n.is_some()
            || self.w.is_some()
            || self.shape.is_some()
            || self.scale.is_some()
            || self.dist.is_some()
            || self.complex.is_some()
            || self.delta.is_some()
    }
}

fn parse_json_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_shape(s: &str) -> Result<ShapeKind, String> {
    parse_json_enum(s)
}

fn parse_dist(s: &str) -> Result<EntryKind, String> {
    parse_json_enum(s)
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [min, max, step] = parts[..] else {
        return Err("expected min:max:step".into());
    };
    if !(step > 0.0 && max > min) {
        return Err("need max > min and step > 0".into());
    }
    let points = ((max - min) / step).round() as usize + 1;
    Ok(Grid { min, max, points })
}

#[derive(Subcommand)]
enum Sub {
    /// Sample one matrix and export its upper triangle.
    Gen {
        #[arg(long)]
        realization: Option<u64>,
    },
    /// Propagate the state at the origin to time t.
    Evolve {
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        residual_target: Option<f64>,
        #[arg(long)]
        realization: Option<u64>,
    },
    /// Monte Carlo diffusion profile, optionally with rescaled weak tests.
    Diffusion {
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long = "T")]
        big_t: Option<f64>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        residual_target: Option<f64>,
    },
    /// Tabulate the limiting density L(T, X) in one dimension.
    Limit {
        #[arg(long = "T")]
        big_t: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        /// `min:max:step`, e.g. `-4:4:0.05`.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
        grid: Option<Grid>,
        #[arg(long)]
        grid_min: Option<f64>,
        #[arg(long)]
        grid_max: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Exhaustive pairing and tree checks.
    Diagrams {
        #[arg(long, value_enum)]
        check: Option<DiagramCheck>,
        #[arg(long)]
        max_edges: Option<usize>,
    },
    /// Largest-eigenvalue exceedance experiment.
    Edge {
        /// Wigner size (σ² = 1/M) when no ensemble is given.
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        rel_tol: Option<f64>,
    },
    /// Run exact-identity suites.
    Verify {
        #[arg(value_enum)]
        suite: Option<Suite>,
        /// Largest degree in the nonbacktracking suite (direct path sums stop at 6).
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        seeds: Option<usize>,
    },
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let command = match cli.command {
        Sub::Gen { .. } => Command::Gen,
        Sub::Evolve { .. } => Command::Evolve,
        Sub::Diffusion { .. } => Command::Diffusion,
        Sub::Limit { .. } => Command::Limit,
        Sub::Diagrams { .. } => Command::Diagrams,
        Sub::Edge { .. } => Command::Edge,
        Sub::Verify { .. } => Command::Verify,
    };
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::new(command),
    };
    if cfg.command != command {
        return Err(CliError::Validation(format!(
            "command: config is for `{:?}`, invoked `{:?}`",
            cfg.command, command
        )));
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let p = &mut cfg.params;
    match &cli.command {
        Sub::Gen { realization } => set(&mut p.realization, *realization),
        Sub::Evolve { t, residual_target, realization } => {
            set(&mut p.t, *t);
            set(&mut p.residual_target, *residual_target);
            set(&mut p.realization, *realization);
        }
        Sub::Diffusion { t, kappa, big_t, realizations, residual_target } => {
            set(&mut p.t, *t);
            set(&mut p.kappa, *kappa);
            set(&mut p.big_t, *big_t);
            set(&mut p.realizations, *realizations);
            set(&mut p.residual_target, *residual_target);
        }
        Sub::Limit { big_t, sigma, grid, grid_min, grid_max, grid_points, nodes } => {
            set(&mut p.big_t, *big_t);
            set(&mut p.sigma, *sigma);
            set(&mut p.grid, grid.clone());
            set(&mut p.quadrature_nodes, *nodes);
            if grid_min.is_some() || grid_max.is_some() || grid_points.is_some() {
                let g = p.grid.get_or_insert(Grid { min: -4.0, max: 4.0, points: 161 });
                g.min = grid_min.unwrap_or(g.min);
                g.max = grid_max.unwrap_or(g.max);
                g.points = grid_points.unwrap_or(g.points);
            }
        }
        Sub::Diagrams { check, max_edges } => {
            set(&mut p.check, *check);
            set(&mut p.max_edges, *max_edges);
        }
        Sub::Edge { m, epsilon, trials, rel_tol } => {
            set(&mut p.m, *m);
            set(&mut p.epsilon, *epsilon);
            set(&mut p.trials, *trials);
            set(&mut p.rel_tol, *rel_tol);
        }
        Sub::Verify { suite, n_max, seeds } => {
            set(&mut p.suite, *suite);
            set(&mut p.n_max, *n_max);
            set(&mut p.seeds, *seeds);
        }
    }
    let a = &cli.ensemble;
    if a.any() {
        let mut e = match cfg.ensemble.take().or_else(|| cfg.default_ensemble()) {
            Some(e) => e,
            None => return Err(CliError::Validation(format!("ensemble: `{command:?}` takes no ensemble"))),
        };
        e.d = a.d.unwrap_or(e.d);
        e.n = a.n.unwrap_or(e.n);
        e.w = a.w.unwrap_or(e.w);
        e.shape.kind = a.shape.unwrap_or(e.shape.kind);
        e.shape.params.scale = a.scale.unwrap_or(e.shape.params.scale);
        e.dist.kind = a.dist.unwrap_or(e.dist.kind);
        e.dist.complex = a.complex.unwrap_or(e.dist.complex);
        if a.delta.is_some() {
            e.dist.delta = a.delta;
        }
        cfg.ensemble = Some(e);
    }
    cfg.resolve()
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Validation("threads: must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("threads: {e}")))?;
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_threads(cli.threads)?;
    let cfg = build_config(&cli)?;
    let name = serde_json::to_string(&cfg.command).unwrap().trim_matches('"').to_string();
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("bandlab-out").join(&name));
    let mut outputs = output::Outputs::new(&dir, &cfg)?;
    log::info!("config {}", outputs.config_hash());
    let outcome = commands::run(&cfg, &mut outputs)?;
    let manifest = outputs.finish()?;
    for line in &outcome.lines {
        println!("{line}");
    }
    println!("manifest: {}", manifest.display());
    match outcome.failure {
        Some(f) => Err(CliError::CheckFailed(f)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
