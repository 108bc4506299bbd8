use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mirsim::harness::{
    convergence_trace, load_scene_config, run_sweep, write_csv, Axis, ExperimentSpec, TimingMode,
};
use mirsim::scene::SceneConfig;
use mirsim::solution::Method;
use mirsim::wmmse_pc::WmmseOptions;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "mirsim",
    about = "Multi-IRS directional-modulation link simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write one CSV row per (value, method, rep).
    Sweep(SweepArgs),
    /// Record the per-iteration objective trace of one method.
    Trace(TraceArgs),
    /// Print the fully resolved scene configuration.
    ShowConfig(ConfigArg),
}

#[derive(Args)]
struct ConfigArg {
    /// Scene config file (TOML, flat keys); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Sweep axis: N_I, K, P_I, beta, or distance.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values (watts for P_I, meters for distance).
    #[arg(long)]
    values: String,
    /// Comma-separated methods, or "all".
    #[arg(long, default_value = "all")]
    methods: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Total power P_T for beta sweeps, watts.
    #[arg(long, default_value_t = 1.0)]
    p_total: f64,
    /// Record wall-clock runtimes (breaks byte-for-byte reproducibility).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Method: nsp-zf-pa, wmmse-pc, or max-tr-svd.
    #[arg(long)]
    method: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn load_config(arg: &ConfigArg) -> Result<SceneConfig> {
    match &arg.config {
        None => Ok(SceneConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(load_scene_config(&text)?)
        }
    }
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Method::ALL.to_vec());
    }
    s.split(',')
        .map(|m| Method::from_str(m).map_err(anyhow::Error::msg))
        .collect()
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid axis value '{v}'"))
        })
        .collect()
}

/// Exit codes: 0 success, 1 config error, 2 when some sweep points failed.
fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    match run(cli) {
        Ok(point_failures) => {
            if point_failures {
                2
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep(args) => {
            if args.jobs > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(args.jobs)
                    .build_global()
                    .context("building worker pool")?;
            }
            let base = load_config(&args.config)?;
            let axis = Axis::from_str(&args.axis).map_err(anyhow::Error::msg)?;
            let mut spec = ExperimentSpec::new(
                base,
                parse_methods(&args.methods)?,
                axis,
                parse_values(&args.values)?,
            );
            spec.base_seed = args.seed;
            spec.repetitions = args.reps;
            spec.p_total_w = args.p_total;
            spec.timing = if args.timing {
                TimingMode::Measured
            } else {
                TimingMode::Zeroed
            };
            let rows = run_sweep(&spec)?;
            write_csv(&rows, &args.out)?;
            let failures = rows.iter().filter(|r| !r.status.is_ok()).count();
            println!(
                "wrote {} rows to {} ({} failed)",
                rows.len(),
                args.out.display(),
                failures
            );
            Ok(failures > 0)
        }
        Command::Trace(args) => {
            let cfg = load_config(&args.config)?;
            let method = Method::from_str(&args.method).map_err(anyhow::Error::msg)?;
            let opts = WmmseOptions {
                seed: args.seed,
                ..WmmseOptions::default()
            };
            let trace = convergence_trace(method, &cfg, &opts)?;
            let mut out = String::from("iteration,objective\n");
            for (i, v) in &trace {
                out.push_str(&format!("{i},{v:.11e}\n"));
            }
            std::fs::write(&args.out, out)
                .with_context(|| format!("writing {}", args.out.display()))?;
            println!(
                "wrote {} trace points to {}",
                trace.len(),
                args.out.display()
            );
            Ok(false)
        }
        Command::ShowConfig(arg) => {
            let cfg = load_config(&arg)?;
            let resolved = SceneConfig {
                irs_pos: Some(cfg.resolved_irs_positions()),
                per_irs_power_split: Some(cfg.power_split()),
                ..cfg
            };
            print!(
                "{}",
                toml::to_string(&resolved).context("serializing config")?
            );
            Ok(false)
        }
    }
}
