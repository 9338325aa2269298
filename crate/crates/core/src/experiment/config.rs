//! Experiment configuration: defaults, `key = value` files and overrides.
//!
//! Every source of settings (file lines, command-line flags) is reduced to
//! key/value pairs and applied in order, so later sources win.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::aqm::{AboveMidMode, DisciplineKind, GatewayParams};
use crate::error::{Error, Result};
use crate::sim::{LinkParams, SimConfig, TcpParams};

/// The schemes compared in the reference tables.
pub const DEFAULT_SCHEMES: [DisciplineKind; 7] = [
    DisciplineKind::Red,
    DisciplineKind::AdaptiveRed,
    DisciplineKind::Sfq,
    DisciplineKind::Rem,
    DisciplineKind::Pi,
    DisciplineKind::Tred,
    DisciplineKind::Aqmrd,
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub schemes: Vec<DisciplineKind>,
    pub sources: Vec<usize>,
    pub seeds: Vec<u64>,
    pub duration: f64,
    pub max_th: Vec<f64>,
    /// Fixed `min_th`; `None` means `max_th / 3` at every point.
    pub min_th: Option<f64>,
    pub buffer: Vec<usize>,
    pub w_q: f64,
    pub max_p: f64,
    pub x_factor: f64,
    pub sample_interval: f64,
    pub above_mid_mode: AboveMidMode,
    pub link: LinkParams,
    pub tcp: TcpParams,
    pub out: Option<PathBuf>,
    pub trace: bool,
    pub trace_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    explicit: BTreeSet<&'static str>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let gw = GatewayParams::default();
        ExperimentConfig {
            schemes: DEFAULT_SCHEMES.to_vec(),
            sources: vec![25, 50, 75, 100],
            seeds: (1..=5).collect(),
            duration: 100.0,
            max_th: vec![gw.max_th],
            min_th: None,
            buffer: vec![gw.buffer_capacity],
            w_q: gw.w_q,
            max_p: gw.max_p,
            x_factor: gw.x,
            sample_interval: gw.sample_interval,
            above_mid_mode: gw.above_mid_mode,
            link: LinkParams::default(),
            tcp: TcpParams::default(),
            out: None,
            trace: false,
            trace_dir: None,
            jobs: None,
            explicit: BTreeSet::new(),
        }
    }
}

/// One simulation in a scenario grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioPoint {
    pub discipline: DisciplineKind,
    pub n_sources: usize,
    pub seed: u64,
    pub max_th: f64,
    pub min_th: f64,
    pub buffer: usize,
}

fn bad(field: &str, value: &str, what: &str) -> Error {
    Error::config(field, format!("cannot parse `{value}` as {what}"))
}

fn parse_scalar<T: FromStr>(field: &str, value: &str, what: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(field, value, what))
}

fn parse_bool(field: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(bad(field, value, "a boolean")),
    }
}

/// `n` evenly spaced levels from `lo` to `hi` inclusive, rounded half away from zero.
pub fn even_levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).round())
            .collect(),
    }
}

/// Parses `a,b,c`, `lo..hi` (inclusive, step 1) or `lo..hi:count`.
fn parse_list(field: &str, value: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, count) = match rest.split_once(':') {
                Some((hi, count)) => (hi, Some(count)),
                None => (rest, None),
            };
            let lo: f64 = parse_scalar(field, lo, "a number")?;
            let hi: f64 = parse_scalar(field, hi, "a number")?;
            if hi < lo {
                return Err(Error::config(field, format!("empty range `{part}`")));
            }
            match count {
                Some(c) => {
                    let c: usize = parse_scalar(field, c, "a level count")?;
                    out.extend(even_levels(lo, hi, c));
                }
                None => {
                    let mut x = lo;
                    while x <= hi {
                        out.push(x);
                        x += 1.0;
                    }
                }
            }
        } else {
            out.push(parse_scalar(field, part, "a number")?);
        }
    }
    if out.is_empty() {
        return Err(Error::config(field, "list is empty"));
    }
    Ok(out)
}

fn parse_count_list(field: &str, value: &str) -> Result<Vec<u64>> {
    parse_list(field, value)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
                Ok(x as u64)
            } else {
                Err(Error::config(
                    field,
                    format!("{x} is not a non-negative integer"),
                ))
            }
        })
        .collect()
}

impl ExperimentConfig {
    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Sets one option. Keys accept `-` or `_` separators.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key
            .trim()
            .trim_start_matches("--")
            .replace('-', "_")
            .to_ascii_lowercase();
        let field: &'static str = match key.as_str() {
            "scheme" | "schemes" => {
                let schemes = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(DisciplineKind::from_str)
                    .collect::<Result<Vec<_>>>()?;
                if schemes.is_empty() {
                    return Err(Error::config("scheme", "list is empty"));
                }
                self.schemes = schemes;
                "scheme"
            }
            "sources" => {
                self.sources = parse_count_list("sources", value)?
                    .into_iter()
                    .map(|n| n as usize)
                    .collect();
                "sources"
            }
            "seeds" => {
                self.seeds = parse_count_list("seeds", value)?;
                "seeds"
            }
            "duration" => {
                self.duration = parse_scalar("duration", value, "seconds")?;
                "duration"
            }
            "max_th" => {
                self.max_th = parse_list("max_th", value)?;
                "max_th"
            }
            "min_th" => {
                self.min_th = match value.trim() {
                    "" | "auto" => None,
                    v => Some(parse_scalar("min_th", v, "packets")?),
                };
                "min_th"
            }
            "buffer" => {
                self.buffer = parse_count_list("buffer", value)?
                    .into_iter()
                    .map(|n| n as usize)
                    .collect();
                "buffer"
            }
            "wq" | "w_q" => {
                self.w_q = parse_scalar("wq", value, "a weight")?;
                "wq"
            }
            "maxp" | "max_p" => {
                self.max_p = parse_scalar("maxp", value, "a probability")?;
                "maxp"
            }
            "x_factor" | "x" => {
                self.x_factor = parse_scalar("x_factor", value, "a factor")?;
                "x_factor"
            }
            "sample_interval" => {
                self.sample_interval = parse_scalar("sample_interval", value, "seconds")?;
                "sample_interval"
            }
            "above_mid_mode" => {
                self.above_mid_mode = value.parse()?;
                "above_mid_mode"
            }
            "bandwidth" => {
                self.link.bottleneck_bandwidth = parse_scalar("bandwidth", value, "bits/s")?;
                "bandwidth"
            }
            "bottleneck_delay" => {
                self.link.bottleneck_prop_delay =
                    parse_scalar("bottleneck_delay", value, "seconds")?;
                "bottleneck_delay"
            }
            "access_bandwidth" => {
                self.link.access_bandwidth = parse_scalar("access_bandwidth", value, "bits/s")?;
                "access_bandwidth"
            }
            "max_window" => {
                let w: f64 = parse_scalar("max_window", value, "packets")?;
                self.tcp.max_window = w;
                self.tcp.initial_ssthresh = w;
                "max_window"
            }
            "packet_size" => {
                self.tcp.packet_size = parse_scalar("packet_size", value, "bytes")?;
                "packet_size"
            }
            "out" => {
                self.out = Some(PathBuf::from(value.trim()));
                "out"
            }
            "trace" => {
                self.trace = parse_bool("trace", value)?;
                "trace"
            }
            "trace_dir" => {
                self.trace_dir = Some(PathBuf::from(value.trim()));
                "trace_dir"
            }
            "jobs" => {
                self.jobs = Some(parse_scalar("jobs", value, "a thread count")?);
                "jobs"
            }
            other => return Err(Error::config(other, "unknown option")),
        };
        self.explicit.insert(field);
        Ok(())
    }

    /// Whether `field` was set by a file or an override rather than defaulted.
    pub fn is_explicit(&self, field: &str) -> bool {
        self.explicit.contains(field)
    }

    pub fn gateway(&self, max_th: f64, buffer: usize) -> GatewayParams {
        GatewayParams {
            w_q: self.w_q,
            max_p: self.max_p,
            min_th: self.min_th.unwrap_or(max_th / 3.0),
            max_th,
            buffer_capacity: buffer,
            x: self.x_factor,
            sample_interval: self.sample_interval,
            above_mid_mode: self.above_mid_mode,
        }
    }

    pub fn sim_config(&self, point: &ScenarioPoint) -> SimConfig {
        SimConfig {
            n_sources: point.n_sources,
            seed: point.seed,
            link: self.link,
            tcp: self.tcp,
            gateway: GatewayParams {
                min_th: point.min_th,
                ..self.gateway(point.max_th, point.buffer)
            },
            discipline: point.discipline,
            trace: self.trace,
        }
    }

    /// Checks list non-emptiness and every grid point's parameters.
    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("scheme", self.schemes.is_empty()),
            ("sources", self.sources.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("max_th", self.max_th.is_empty()),
            ("buffer", self.buffer.is_empty()),
        ];
        for (field, empty) in lists {
            if empty {
                return Err(Error::config(field, "list is empty"));
            }
        }
        if self.sources.contains(&0) {
            return Err(Error::config("sources", "need at least one source"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config(
                "duration",
                format!("{} must be positive", self.duration),
            ));
        }
        if self.jobs == Some(0) {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        if self.tcp.max_window.is_nan() || self.tcp.max_window < 1.0 {
            return Err(Error::config("max_window", "must be at least 1 packet"));
        }
        if self.tcp.packet_size == 0 {
            return Err(Error::config("packet_size", "must be positive"));
        }
        self.link.validate()?;
        for &max_th in &self.max_th {
            for &buffer in &self.buffer {
                self.gateway(max_th, buffer).validate()?;
            }
        }
        Ok(())
    }

    /// Cartesian grid of (discipline, N, seed, max_th, buffer), in sorted order.
    pub fn points(&self) -> Vec<ScenarioPoint> {
        let mut pts = Vec::new();
        for &discipline in &self.schemes {
            for &n_sources in &self.sources {
                for &seed in &self.seeds {
                    for &max_th in &self.max_th {
                        for &buffer in &self.buffer {
                            pts.push(ScenarioPoint {
                                discipline,
                                n_sources,
                                seed,
                                max_th,
                                min_th: self.min_th.unwrap_or(max_th / 3.0),
                                buffer,
                            });
                        }
                    }
                }
            }
        }
        sort_points(&mut pts);
        pts.dedup();
        pts
    }

    /// Canonical text of every setting that affects simulation results.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let join = |v: &[String]| v.join(",");
        let _ = writeln!(
            s,
            "schemes={}",
            join(
                &self
                    .schemes
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
            )
        );
        let _ = writeln!(
            s,
            "sources={}",
            join(
                &self
                    .sources
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
            )
        );
        let _ = writeln!(
            s,
            "seeds={}",
            join(&self.seeds.iter().map(|n| n.to_string()).collect::<Vec<_>>())
        );
        let _ = writeln!(s, "duration={:?}", self.duration);
        let _ = writeln!(
            s,
            "max_th={}",
            join(
                &self
                    .max_th
                    .iter()
                    .map(|x| format!("{x:?}"))
                    .collect::<Vec<_>>()
            )
        );
        let _ = writeln!(s, "min_th={:?}", self.min_th);
        let _ = writeln!(
            s,
            "buffer={}",
            join(
                &self
                    .buffer
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
            )
        );
        let _ = writeln!(
            s,
            "wq={:?} maxp={:?} x={:?}",
            self.w_q, self.max_p, self.x_factor
        );
        let _ = writeln!(
            s,
            "sample_interval={:?} above_mid_mode={}",
            self.sample_interval, self.above_mid_mode
        );
        let _ = writeln!(s, "link={:?}", self.link);
        let _ = writeln!(s, "tcp={:?}", self.tcp);
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }
}

pub(crate) fn sort_points(pts: &mut [ScenarioPoint]) {
    pts.sort_by(|a, b| {
        a.discipline
            .cmp(&b.discipline)
            .then(a.n_sources.cmp(&b.n_sources))
            .then(a.seed.cmp(&b.seed))
            .then(a.max_th.total_cmp(&b.max_th))
            .then(a.buffer.cmp(&b.buffer))
    });
}
