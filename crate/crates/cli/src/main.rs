use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aqmrd_core::experiment::{
    self, compare_report, parse_runs, render_aggregates, render_runs, write_atomic, write_traces,
    ExperimentConfig, SweepParam,
};
use aqmrd_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aqmrd",
    version,
    about = "Dumbbell AQM experiments: single runs, sweeps and RED comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (scheme, sources, seed, max_th, buffer) combination and write one CSV row each.
    Run(Overrides),
    /// Sweep one parameter and write seed-aggregated rows.
    Sweep {
        /// Parameter to sweep: sources, max_th or buffer.
        #[arg(long)]
        param: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print comparison tables against RED, from run CSVs or a fresh run.
    Compare {
        /// Run CSV files produced by `aqmrd run`. Without any, the scenario is run first.
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args, Default)]
struct Overrides {
    /// key = value configuration file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated scheme names (aqmrd, red, ared, tred, rem, pi, sfq, droptail).
    #[arg(long)]
    scheme: Option<String>,
    /// Source counts, e.g. `25,50` or `12..100:8`.
    #[arg(long)]
    sources: Option<String>,
    /// Seeds, e.g. `1..5`.
    #[arg(long)]
    seeds: Option<String>,
    /// Simulated seconds per run.
    #[arg(long)]
    duration: Option<String>,
    #[arg(long = "max-th")]
    max_th: Option<String>,
    /// Fixed min_th; defaults to max_th / 3.
    #[arg(long = "min-th")]
    min_th: Option<String>,
    /// Buffer capacity in packets (list allowed).
    #[arg(long)]
    buffer: Option<String>,
    #[arg(long)]
    wq: Option<String>,
    #[arg(long)]
    maxp: Option<String>,
    #[arg(long = "x-factor")]
    x_factor: Option<String>,
    #[arg(long = "sample-interval")]
    sample_interval: Option<String>,
    /// unit_prob or p2_fallback.
    #[arg(long = "above-mid-mode")]
    above_mid_mode: Option<String>,
    /// Bottleneck bandwidth in bits/s.
    #[arg(long)]
    bandwidth: Option<String>,
    /// TCP window cap in packets.
    #[arg(long = "max-window")]
    max_window: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a per-run trace of (t, q, avg, davg, mid_th) samples.
    #[arg(long)]
    trace: bool,
    /// Directory for trace files.
    #[arg(long = "trace-dir")]
    trace_dir: Option<PathBuf>,
}

impl Overrides {
    fn load(&self) -> aqmrd_core::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        let flags = [
            ("scheme", &self.scheme),
            ("sources", &self.sources),
            ("seeds", &self.seeds),
            ("duration", &self.duration),
            ("max_th", &self.max_th),
            ("min_th", &self.min_th),
            ("buffer", &self.buffer),
            ("wq", &self.wq),
            ("maxp", &self.maxp),
            ("x_factor", &self.x_factor),
            ("sample_interval", &self.sample_interval),
            ("above_mid_mode", &self.above_mid_mode),
            ("bandwidth", &self.bandwidth),
            ("max_window", &self.max_window),
            ("jobs", &self.jobs),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if self.trace {
            cfg.trace = true;
        }
        if let Some(dir) = &self.trace_dir {
            cfg.trace_dir = Some(dir.clone());
        }
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, text: &str) -> aqmrd_core::Result<()> {
    match out {
        Some(path) => write_atomic(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn trace_dir(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &cfg.trace_dir {
        return dir.clone();
    }
    match &cfg.out {
        Some(out) => {
            let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
            out.with_file_name(format!("{stem}_traces"))
        }
        None => PathBuf::from("traces"),
    }
}

fn run(cli: Cli) -> aqmrd_core::Result<()> {
    match cli.command {
        Command::Run(o) => {
            let cfg = o.load()?;
            let output = experiment::run_scenario(&cfg)?;
            let csv = render_runs(&cfg, &output.rows)?;
            if cfg.trace {
                let paths = write_traces(&trace_dir(&cfg), &output.traces)?;
                eprintln!(
                    "wrote {} trace files to {}",
                    paths.len(),
                    trace_dir(&cfg).display()
                );
            }
            emit(cfg.out.as_deref(), &csv)?;
            eprintln!("{} runs, config hash {}", output.rows.len(), cfg.hash());
        }
        Command::Sweep { param, overrides } => {
            let param: SweepParam = param.parse()?;
            let cfg = overrides.load()?;
            let output = experiment::sweep(&cfg, param)?;
            let csv = render_aggregates(&cfg, param.as_str(), &output.rows)?;
            if cfg.trace {
                write_traces(&trace_dir(&cfg), &output.runs.traces)?;
            }
            emit(cfg.out.as_deref(), &csv)?;
            eprintln!(
                "{} points from {} runs",
                output.rows.len(),
                output.runs.rows.len()
            );
        }
        Command::Compare { inputs, overrides } => {
            let cfg = overrides.load()?;
            let mut rows = Vec::new();
            if inputs.is_empty() {
                rows = experiment::run_scenario(&cfg)?.rows;
            }
            for path in &inputs {
                let text = std::fs::read_to_string(path)?;
                rows.extend(parse_runs(&text)?);
            }
            emit(cfg.out.as_deref(), &compare_report(&rows)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } => 2,
                Error::Invariant(_) => 3,
                _ => 1,
            })
        }
    }
}
