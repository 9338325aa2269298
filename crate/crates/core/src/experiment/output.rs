//! CSV rendering and parsing for run and sweep results.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::aqm::DisciplineKind;
use crate::error::{Error, Result};
use crate::metrics::TraceSample;

use super::{AggregateRow, ExperimentConfig, RunRow};

pub const RUN_COLUMNS: [&str; 13] = [
    "discipline",
    "n_sources",
    "seed",
    "max_th",
    "min_th",
    "buffer",
    "duration",
    "throughput_bps",
    "relative_throughput",
    "mean_qdelay_s",
    "e_avg_pkts",
    "e_q_pkts",
    "loss_ratio_pct",
];

/// Metric columns shared by run rows and sweep aggregates.
pub const METRIC_COLUMNS: [&str; 6] = [
    "throughput_bps",
    "relative_throughput",
    "mean_qdelay_s",
    "e_avg_pkts",
    "e_q_pkts",
    "loss_ratio_pct",
];

/// Formats with six significant digits, like C's `%.6g`.
pub fn sig6(x: f64) -> String {
    const DIGITS: i32 = 6;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            sign,
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

fn metadata(cfg: &ExperimentConfig, kind: &str) -> String {
    let seeds: Vec<String> = cfg.seeds.iter().map(u64::to_string).collect();
    format!(
        "# aqmrd {kind}\n# config_hash={}\n# seeds={}\n# above_mid_mode={}\n# max_window={}\n",
        cfg.hash(),
        seeds.join(","),
        cfg.above_mid_mode,
        sig6(cfg.tcp.max_window),
    )
}

pub fn render_runs(cfg: &ExperimentConfig, rows: &[RunRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RUN_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.discipline.as_str().to_string(),
            r.n_sources.to_string(),
            r.seed.to_string(),
            sig6(r.max_th),
            sig6(r.min_th),
            r.buffer.to_string(),
            sig6(r.duration),
            sig6(r.throughput_bps),
            sig6(r.relative_throughput),
            opt(r.mean_qdelay_s),
            opt(r.e_avg_pkts),
            opt(r.e_q_pkts),
            opt(r.loss_ratio_pct),
        ])?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(metadata(cfg, "run") + &String::from_utf8(body).expect("csv is utf-8"))
}

pub fn render_aggregates(
    cfg: &ExperimentConfig,
    param: &str,
    rows: &[AggregateRow],
) -> Result<String> {
    let mut header: Vec<String> = [
        "discipline",
        "param",
        "level",
        "n_sources",
        "max_th",
        "min_th",
        "buffer",
        "duration",
        "seeds",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for m in METRIC_COLUMNS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_median"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.discipline.as_str().to_string(),
            param.to_string(),
            sig6(r.level),
            r.n_sources.to_string(),
            sig6(r.max_th),
            sig6(r.min_th),
            r.buffer.to_string(),
            sig6(r.duration),
            r.seeds.to_string(),
        ];
        for (mean, median) in &r.metrics {
            rec.push(opt(*mean));
            rec.push(opt(*median));
        }
        w.write_record(&rec)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(metadata(cfg, &format!("sweep {param}")) + &String::from_utf8(body).expect("csv is utf-8"))
}

pub fn render_trace(trace: &[TraceSample]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "q", "avg", "davg", "mid_th"])?;
    for s in trace {
        w.write_record([
            sig6(s.t),
            s.q.to_string(),
            sig6(s.avg),
            opt(s.davg),
            opt(s.mid_th),
        ])?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(body).expect("csv is utf-8"))
}

fn field(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<&str> {
    rec.get(idx)
        .ok_or_else(|| Error::Report(format!("line {line}: missing column {}", RUN_COLUMNS[idx])))
}

fn num<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<T> {
    let s = field(rec, idx, line)?;
    s.parse()
        .map_err(|_| Error::Report(format!("line {line}: bad {} `{s}`", RUN_COLUMNS[idx])))
}

fn opt_num(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<Option<f64>> {
    let s = field(rec, idx, line)?;
    if s.is_empty() {
        Ok(None)
    } else {
        num(rec, idx, line).map(Some)
    }
}

/// Parses a run CSV (as written by [`render_runs`]).
pub fn parse_runs(text: &str) -> Result<Vec<RunRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(RUN_COLUMNS.iter().copied()) {
        return Err(Error::Report(format!(
            "unexpected columns `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let discipline: DisciplineKind = field(&rec, 0, line)?
            .parse()
            .map_err(|e| Error::Report(format!("line {line}: {e}")))?;
        rows.push(RunRow {
            discipline,
            n_sources: num(&rec, 1, line)?,
            seed: num(&rec, 2, line)?,
            max_th: num(&rec, 3, line)?,
            min_th: num(&rec, 4, line)?,
            buffer: num(&rec, 5, line)?,
            duration: num(&rec, 6, line)?,
            throughput_bps: num(&rec, 7, line)?,
            relative_throughput: num(&rec, 8, line)?,
            mean_qdelay_s: opt_num(&rec, 9, line)?,
            e_avg_pkts: opt_num(&rec, 10, line)?,
            e_q_pkts: opt_num(&rec, 11, line)?,
            loss_ratio_pct: opt_num(&rec, 12, line)?,
        });
    }
    Ok(rows)
}

/// Writes `contents` to `path` via a sibling temporary file and rename, so a
/// failure never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
