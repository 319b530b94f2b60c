//! Command-line front end: a JSON run configuration plus four subcommands
//! (simulate, equilibrium, sweep, design) that emit CSV and JSON artifacts
//! for external plotting. Flags override config fields; identical config and
//! seed produce byte-identical outputs.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use crate::design::{design_fixed_d, design_free_d, volume_curve, DesignSpec};
use crate::dmap::{
    default_grid, existence_range, profile_from_samples, sample_point, SweepSample,
};
use crate::dynamics::{simulate, ChemostatConfig, SimOptions, State};
use crate::equilibria::{equilibria, washout_is_unique};
use crate::error::Error;

/// Exit codes: 0 success, 2 configuration error, 3 numeric failure.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io error: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "chemostat",
    version,
    about = "Simulation, equilibrium analysis and volume-optimal design of a \
             chemostat with a lateral diffusive compartment"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the model forward in time and summarize the outcome
    Simulate(SimulateArgs),
    /// Compute the steady states and their stability
    Equilibrium(CommonArgs),
    /// Sample the steady-state response over a diffusion-rate grid
    Sweep(SweepArgs),
    /// Find the minimal-volume configuration for a target output level
    Design(DesignArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON run configuration file
    #[arg(long)]
    config: PathBuf,
    /// Override the tank-1 volume
    #[arg(long)]
    v1: Option<f64>,
    /// Override the tank-2 volume
    #[arg(long)]
    v2: Option<f64>,
    /// Override the flow rate
    #[arg(long)]
    q: Option<f64>,
    /// Override the inlet concentration
    #[arg(long = "s-in")]
    s_in: Option<f64>,
    /// Override the diffusion rate
    #[arg(long)]
    d: Option<f64>,
    /// Main artifact path (CSV or JSON depending on the subcommand);
    /// defaults to the config's path, else standard output
    #[arg(long)]
    output: Option<PathBuf>,
    /// Sidecar summary JSON path
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Integration horizon; defaults to 1e3 V/Q
    #[arg(long)]
    horizon: Option<f64>,
    /// Initial state as s1,x1,s2,x2; defaults to a seeded random state
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    initial: Option<Vec<f64>>,
    /// Seed for the random initial state
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of grid points
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Lower grid end (log-spaced grids only)
    #[arg(long = "d-min")]
    d_min: Option<f64>,
    /// Upper grid end
    #[arg(long = "d-max")]
    d_max: Option<f64>,
    /// Fraction of the existence bound to sweep up to (finite-range case)
    #[arg(long = "d-bar-fraction")]
    d_bar_fraction: Option<f64>,
    /// Worker threads for grid evaluation
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct DesignArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Target steady output substrate level
    #[arg(long)]
    sref: Option<f64>,
    /// Optimize volumes at this fixed diffusion rate
    #[arg(long = "fixed-d", conflicts_with = "free_d")]
    fixed_d: Option<f64>,
    /// Optimize the diffusion rate too
    #[arg(long = "free-d")]
    free_d: bool,
    /// Emit the optimal-volume-versus-d curve as CSV
    #[arg(long)]
    curve: bool,
    /// Number of curve grid points
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Upper end of the curve grid
    #[arg(long = "d-max")]
    d_max: Option<f64>,
    /// Worker threads for curve evaluation
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

/// The JSON run configuration. Unknown fields are rejected; the shape is
/// documented in docs/config.schema.json.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    chemostat: ChemostatConfig,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    simulate: Option<SimulateConfig>,
    #[serde(default)]
    equilibrium: Option<EquilibriumConfig>,
    #[serde(default)]
    sweep: Option<SweepConfig>,
    #[serde(default)]
    design: Option<DesignConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    #[serde(default)]
    horizon: Option<f64>,
    #[serde(default)]
    initial: Option<[f64; 4]>,
    #[serde(default)]
    rtol: Option<f64>,
    #[serde(default)]
    atol: Option<f64>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EquilibriumConfig {
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    d_min: Option<f64>,
    #[serde(default)]
    d_max: Option<f64>,
    #[serde(default)]
    d_bar_fraction: Option<f64>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignConfig {
    #[serde(default)]
    s_ref: Option<f64>,
    /// "fixed" or "free"
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    curve: Option<bool>,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    d_max: Option<f64>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    summary: Option<PathBuf>,
}

/// Parse `args`, run, report errors on standard error, and return the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path with code 0
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Equilibrium(a) => cmd_equilibrium(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Design(a) => cmd_design(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn load_config(common: &CommonArgs) -> CliResult<RunConfig> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut run: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    if let Some(v) = common.v1 {
        run.chemostat.v1 = v;
    }
    if let Some(v) = common.v2 {
        run.chemostat.v2 = v;
    }
    if let Some(v) = common.q {
        run.chemostat.q = v;
    }
    if let Some(v) = common.s_in {
        run.chemostat.s_in = v;
    }
    if let Some(v) = common.d {
        run.chemostat.d = v;
    }
    run.chemostat.validate()?;
    Ok(run)
}

fn write_artifact(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => {
            fs::write(p, bytes)?;
        }
        None => {
            std::io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

fn random_state(rng: &mut ChaCha8Rng, s_in: f64) -> State {
    // nonnegative, bounded by the inlet scale
    State::new(
        rng.gen_range(0.0..s_in),
        rng.gen_range(0.0..s_in),
        rng.gen_range(0.0..s_in),
        rng.gen_range(0.0..s_in),
    )
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let run = load_config(&args.common)?;
    let config = &run.chemostat;
    if !(config.v1 > 0.0) || !(config.v2 > 0.0) {
        return Err(CliError::Config(
            "simulate needs V1 > 0 and V2 > 0".into(),
        ));
    }
    let sim_cfg = run.simulate.clone().unwrap_or_default();
    let horizon = args
        .horizon
        .or(sim_cfg.horizon)
        .unwrap_or(1e3 * config.total_volume() / config.q);
    let initial = if let Some(v) = &args.initial {
        if v.len() != 4 {
            return Err(CliError::Config(format!(
                "--initial needs 4 values s1,x1,s2,x2, got {}",
                v.len()
            )));
        }
        State::new(v[0], v[1], v[2], v[3])
    } else if let Some(v) = sim_cfg.initial {
        State::from_array(v)
    } else {
        let seed = args.seed.or(run.seed).unwrap_or(0);
        random_state(&mut ChaCha8Rng::seed_from_u64(seed), config.s_in)
    };
    let mut options = SimOptions::default();
    if let Some(r) = sim_cfg.rtol {
        options.rtol = r;
    }
    if let Some(a) = sim_cfg.atol {
        options.atol = a;
    }

    let traj = simulate(config, initial, horizon, &options)
        .map_err(|e| CliError::Numeric(e.to_string()))?;

    let eqs = equilibria(config)?;
    let terminal = traj.last_state();
    let converged_to = eqs
        .iter()
        .find(|eq| terminal.max_abs_diff(&eq.state()) < 1e-4 * config.s_in)
        .map(|eq| format!("{:?}", eq.kind).to_lowercase());
    let summary = json!({
        "initial_state": initial,
        "terminal_state": terminal,
        "time": traj.times.last().unwrap(),
        "reached_steady_state": traj.reached_steady_state,
        "washout_is_unique": washout_is_unique(config),
        "converged_to": converged_to,
        "equilibria": eqs,
    });

    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    let output = args.common.output.clone().or(sim_cfg.output);
    let summary_path = args.common.summary.clone().or(sim_cfg.summary);
    if let Some(p) = &output {
        write_artifact(Some(p), &csv)?;
    }
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write_artifact(summary_path.as_deref(), text.as_bytes())?;
    Ok(())
}

fn cmd_equilibrium(args: CommonArgs) -> CliResult<()> {
    let run = load_config(&args)?;
    let eqs = equilibria(&run.chemostat)?;
    let out = json!({
        "washout_is_unique": washout_is_unique(&run.chemostat),
        "equilibria": eqs,
    });
    let path = args
        .output
        .clone()
        .or(run.equilibrium.and_then(|e| e.output));
    let mut text = serde_json::to_string_pretty(&out).expect("report serializes");
    text.push('\n');
    write_artifact(path.as_deref(), text.as_bytes())?;
    Ok(())
}

/// Apply `f` to every item on `jobs` threads, preserving order.
fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    let mut out: Vec<Vec<R>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        for h in handles {
            out.push(h.join().expect("worker panicked"));
        }
    });
    out.into_iter().flatten().collect()
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let run = load_config(&args.common)?;
    let config = &run.chemostat;
    let sweep_cfg = run.sweep.clone().unwrap_or_default();
    let n = args.grid_n.or(sweep_cfg.n).unwrap_or(100);
    let fraction = args.d_bar_fraction.or(sweep_cfg.d_bar_fraction);

    let case = existence_range(config)?;
    let grid = match (args.d_min.or(sweep_cfg.d_min), args.d_max.or(sweep_cfg.d_max)) {
        (Some(lo), Some(hi)) if lo > 0.0 && hi > lo => {
            let ratio = (hi / lo).ln();
            (0..n)
                .map(|i| lo * (ratio * i as f64 / (n - 1).max(1) as f64).exp())
                .collect()
        }
        _ => default_grid(config, n, fraction)?,
    };

    let samples: Vec<crate::error::Result<SweepSample>> =
        parallel_map(&grid, args.jobs, |&d| sample_point(config, d, &case));
    let samples = samples
        .into_iter()
        .collect::<crate::error::Result<Vec<_>>>()?;
    let profile = profile_from_samples(config, samples)?;

    let mut csv = Vec::new();
    profile.write_csv(&mut csv)?;
    let output = args.common.output.clone().or(sweep_cfg.output);
    write_artifact(output.as_deref(), &csv)?;
    let summary_path = args.common.summary.clone().or(sweep_cfg.summary);
    if let Some(p) = summary_path {
        let mut text =
            serde_json::to_string_pretty(&profile.summary_json()).expect("summary serializes");
        text.push('\n');
        write_artifact(Some(&p), text.as_bytes())?;
    }
    Ok(())
}

fn cmd_design(args: DesignArgs) -> CliResult<()> {
    let run = load_config(&args.common)?;
    let design_cfg = run.design.clone().unwrap_or_default();
    let s_ref = args
        .sref
        .or(design_cfg.s_ref)
        .ok_or_else(|| CliError::Config("design needs s_ref (config design.s_ref or --sref)".into()))?;

    let mode_fixed_d = if let Some(d) = args.fixed_d {
        Some(d)
    } else if args.free_d {
        None
    } else {
        match design_cfg.mode.as_deref() {
            Some("free") | None => None,
            Some("fixed") => Some(run.chemostat.d),
            Some(other) => {
                return Err(CliError::Config(format!(
                    "design mode must be \"fixed\" or \"free\", got {other:?}"
                )))
            }
        }
    };

    let spec = DesignSpec {
        q: run.chemostat.q,
        s_in: run.chemostat.s_in,
        s_ref,
        growth: run.chemostat.growth.clone(),
        d: mode_fixed_d,
    };
    let result = match mode_fixed_d {
        Some(_) => design_fixed_d(&spec)?,
        None => design_free_d(&spec)?,
    };

    let curve_requested = args.curve || design_cfg.curve.unwrap_or(false);
    let output = args.common.output.clone().or(design_cfg.output);
    if curve_requested {
        let n = args.grid_n.or(design_cfg.n).unwrap_or(200);
        let d_hi = args.d_max.or(design_cfg.d_max).unwrap_or(if result.d > 0.0 {
            3.0 * result.d
        } else {
            3.0 * spec.q
        });
        let grid: Vec<f64> = (0..=n).map(|i| d_hi * i as f64 / n as f64).collect();
        let free_spec = DesignSpec { d: None, ..spec.clone() };
        let samples = parallel_map(&grid, args.jobs, |&d| {
            volume_curve(&free_spec, &[d]).map(|mut v| v.pop().expect("one sample"))
        });
        let mut csv = Vec::new();
        write!(csv, "d,V_opt,kind\r\n")?;
        for s in samples {
            let s = s?;
            match (s.volume, s.kind) {
                (Some(v), Some(k)) => {
                    let kind = serde_json::to_value(k).expect("kind serializes");
                    write!(csv, "{:.16e},{:.16e},{}\r\n", s.d, v, kind.as_str().unwrap())?;
                }
                _ => write!(csv, "{:.16e},,\r\n", s.d)?,
            }
        }
        write_artifact(output.as_deref(), &csv)?;
        let summary_path = args.common.summary.clone().or(design_cfg.summary);
        if let Some(p) = summary_path {
            let mut text = serde_json::to_string_pretty(&result).expect("result serializes");
            text.push('\n');
            write_artifact(Some(&p), text.as_bytes())?;
        }
    } else {
        let mut text = serde_json::to_string_pretty(&result).expect("result serializes");
        text.push('\n');
        write_artifact(output.as_deref(), text.as_bytes())?;
    }
    Ok(())
}
