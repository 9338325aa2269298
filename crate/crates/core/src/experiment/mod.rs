//! Experiment orchestration: scenario grids, parameter sweeps, CSV output
//! and comparison tables.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::aqm::DisciplineKind;
use crate::error::{Error, Result};
use crate::metrics::{self, RunMetrics, TraceSample};
use crate::sim::Simulation;

mod config;
pub mod output;
mod report;

pub use config::{even_levels, ExperimentConfig, ScenarioPoint, DEFAULT_SCHEMES};
pub use output::{parse_runs, render_aggregates, render_runs, render_trace, sig6, write_atomic};
pub use report::compare_report;

/// One simulation's headline measures.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub discipline: DisciplineKind,
    pub n_sources: usize,
    pub seed: u64,
    pub max_th: f64,
    pub min_th: f64,
    pub buffer: usize,
    pub duration: f64,
    pub throughput_bps: f64,
    pub relative_throughput: f64,
    pub mean_qdelay_s: Option<f64>,
    pub e_avg_pkts: Option<f64>,
    pub e_q_pkts: Option<f64>,
    pub loss_ratio_pct: Option<f64>,
}

impl RunRow {
    pub fn from_metrics(point: &ScenarioPoint, m: &RunMetrics, bandwidth: f64) -> Self {
        RunRow {
            discipline: point.discipline,
            n_sources: point.n_sources,
            seed: point.seed,
            max_th: point.max_th,
            min_th: point.min_th,
            buffer: point.buffer,
            duration: m.duration,
            throughput_bps: metrics::throughput(m),
            relative_throughput: metrics::relative_throughput(m, bandwidth),
            mean_qdelay_s: metrics::mean_queuing_delay(m),
            e_avg_pkts: m.e_avg(),
            e_q_pkts: m.e_q(),
            loss_ratio_pct: metrics::loss_ratio(m),
        }
    }

    /// Metric values in [`output::METRIC_COLUMNS`] order.
    pub fn metric_values(&self) -> [Option<f64>; 6] {
        [
            Some(self.throughput_bps),
            Some(self.relative_throughput),
            self.mean_qdelay_s,
            self.e_avg_pkts,
            self.e_q_pkts,
            self.loss_ratio_pct,
        ]
    }
}

/// Seed-aggregated measures at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub discipline: DisciplineKind,
    pub level: f64,
    pub n_sources: usize,
    pub max_th: f64,
    pub min_th: f64,
    pub buffer: usize,
    pub duration: f64,
    pub seeds: usize,
    /// `(mean, median)` per metric, [`output::METRIC_COLUMNS`] order.
    pub metrics: [(Option<f64>, Option<f64>); 6],
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<RunRow>,
    /// Per-run sample traces, keyed by file name, when tracing is on.
    pub traces: Vec<(String, Vec<TraceSample>)>,
}

fn trace_name(p: &ScenarioPoint) -> String {
    format!(
        "{}_n{}_s{}_mt{}_b{}.csv",
        p.discipline,
        p.n_sources,
        p.seed,
        sig6(p.max_th),
        p.buffer
    )
}

fn run_points(cfg: &ExperimentConfig, points: &[ScenarioPoint]) -> Result<RunOutput> {
    for p in points {
        cfg.sim_config(p).gateway.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let bandwidth = cfg.link.bottleneck_bandwidth;
    let results: Vec<(RunRow, Option<Vec<TraceSample>>)> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let mut m = Simulation::new(&cfg.sim_config(p))?.run(cfg.duration)?;
                let trace = m.trace.take();
                Ok((RunRow::from_metrics(p, &m, bandwidth), trace))
            })
            .collect::<Result<_>>()
    })?;
    let mut out = RunOutput {
        rows: Vec::with_capacity(results.len()),
        traces: Vec::new(),
    };
    for (p, (row, trace)) in points.iter().zip(results) {
        out.rows.push(row);
        if let Some(t) = trace {
            out.traces.push((trace_name(p), t));
        }
    }
    Ok(out)
}

/// Runs every (discipline, N, seed, max_th, buffer) combination.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    run_points(cfg, &cfg.points())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Sources,
    MaxTh,
    Buffer,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Sources => "sources",
            SweepParam::MaxTh => "max_th",
            SweepParam::Buffer => "buffer",
        }
    }

    /// Levels used when the configuration does not list any.
    pub fn default_levels(self) -> Vec<f64> {
        match self {
            SweepParam::Sources => even_levels(12.0, 100.0, 8),
            SweepParam::MaxTh => even_levels(18.0, 48.0, 6),
            SweepParam::Buffer => even_levels(40.0, 160.0, 7),
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "sources" | "n" | "load" => Ok(SweepParam::Sources),
            "max_th" | "maxth" => Ok(SweepParam::MaxTh),
            "buffer" | "buffer_size" => Ok(SweepParam::Buffer),
            other => Err(Error::config(
                "param",
                format!("unknown sweep parameter `{other}` (expected sources, max_th or buffer)"),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub param: SweepParam,
    pub rows: Vec<AggregateRow>,
    pub runs: RunOutput,
}

/// Load level used for the max_th and buffer sweeps unless sources are given.
pub const SWEEP_DEFAULT_SOURCES: usize = 75;

/// Sweeps one parameter, running every seed at each level and aggregating.
///
/// Without an explicit level list the reference levels are used. In a buffer
/// sweep `max_th` is capped at the buffer size so the smaller buffers stay valid.
pub fn sweep(cfg: &ExperimentConfig, param: SweepParam) -> Result<SweepOutput> {
    let mut cfg = cfg.clone();
    let levels: Vec<f64> = match param {
        SweepParam::Sources if cfg.is_explicit("sources") => {
            cfg.sources.iter().map(|&n| n as f64).collect()
        }
        SweepParam::MaxTh if cfg.is_explicit("max_th") => cfg.max_th.clone(),
        SweepParam::Buffer if cfg.is_explicit("buffer") => {
            cfg.buffer.iter().map(|&b| b as f64).collect()
        }
        _ => param.default_levels(),
    };
    if param != SweepParam::Sources && !cfg.is_explicit("sources") {
        cfg.sources = vec![SWEEP_DEFAULT_SOURCES];
    }
    match param {
        SweepParam::Sources => cfg.sources = levels.iter().map(|&l| l as usize).collect(),
        SweepParam::MaxTh => cfg.max_th = levels.clone(),
        SweepParam::Buffer => cfg.buffer = levels.iter().map(|&l| l as usize).collect(),
    }

    let mut points = Vec::new();
    for mut p in cfg.points() {
        if param == SweepParam::Buffer && p.max_th > p.buffer as f64 {
            p.max_th = p.buffer as f64;
            p.min_th = cfg.min_th.unwrap_or(p.max_th / 3.0);
        }
        points.push(p);
    }
    // Validate everything except the buffer/max_th pairs handled above.
    let mut check = cfg.clone();
    check.buffer = vec![usize::MAX >> 1];
    check.max_th = vec![cfg.max_th[0]];
    check.validate()?;
    let runs = run_points(&cfg, &points)?;

    let level_of = |r: &RunRow| match param {
        SweepParam::Sources => r.n_sources as f64,
        SweepParam::MaxTh => r.max_th,
        SweepParam::Buffer => r.buffer as f64,
    };
    let mut groups: BTreeMap<(DisciplineKind, usize, u64, u64, usize), Vec<&RunRow>> =
        BTreeMap::new();
    for r in &runs.rows {
        let key = (
            r.discipline,
            r.n_sources,
            level_of(r).to_bits(),
            r.max_th.to_bits(),
            r.buffer,
        );
        groups.entry(key).or_default().push(r);
    }
    let mut rows: Vec<AggregateRow> = groups
        .into_values()
        .map(|g| {
            let first = g[0];
            let mut metrics = [(None, None); 6];
            for (i, slot) in metrics.iter_mut().enumerate() {
                let vals: Vec<f64> = g.iter().filter_map(|r| r.metric_values()[i]).collect();
                *slot = (metrics::mean(&vals), metrics::median(&vals));
            }
            AggregateRow {
                discipline: first.discipline,
                level: level_of(first),
                n_sources: first.n_sources,
                max_th: first.max_th,
                min_th: first.min_th,
                buffer: first.buffer,
                duration: first.duration,
                seeds: g.len(),
                metrics,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.discipline
            .cmp(&b.discipline)
            .then(a.level.total_cmp(&b.level))
            .then(a.n_sources.cmp(&b.n_sources))
            .then(a.max_th.total_cmp(&b.max_th))
            .then(a.buffer.cmp(&b.buffer))
    });
    Ok(SweepOutput { param, rows, runs })
}

/// Writes traces into `dir` (created if needed). Returns the paths written.
pub fn write_traces(
    dir: &std::path::Path,
    traces: &[(String, Vec<TraceSample>)],
) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (name, trace) in traces {
        let path = dir.join(name);
        write_atomic(&path, &render_trace(trace)?)?;
        paths.push(path);
    }
    Ok(paths)
}
