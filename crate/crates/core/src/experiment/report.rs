//! Comparison tables against the RED baseline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::aqm::DisciplineKind;
use crate::error::{Error, Result};
use crate::metrics::{median, percent_change, Change};

use super::RunRow;

struct Table {
    title: &'static str,
    metric: fn(&RunRow) -> Option<f64>,
    precision: usize,
    change: Option<(&'static str, Change)>,
}

const TABLES: [Table; 5] = [
    Table {
        title: "E[Queuing Delay] (s)",
        metric: |r| r.mean_qdelay_s,
        precision: 5,
        change: Some((
            "Percentage Reduction in Expected Queuing Delay with respect to RED",
            Change::Reduction,
        )),
    },
    Table {
        title: "Time Average of Average Queue Size (packets)",
        metric: |r| r.e_avg_pkts,
        precision: 2,
        change: Some((
            "Percentage Reduction in the Expected Average Queue Size with respect to RED",
            Change::Reduction,
        )),
    },
    Table {
        title: "Expected Instantaneous Queue Size (packets)",
        metric: |r| r.e_q_pkts,
        precision: 2,
        change: Some((
            "Percentage Reduction in the Expected Instantaneous Queue Size with respect to RED",
            Change::Reduction,
        )),
    },
    Table {
        title: "Average Loss-ratio (%)",
        metric: |r| r.loss_ratio_pct,
        precision: 3,
        change: Some((
            "Percentage Increase in Average Loss-ratio over RED",
            Change::Increase,
        )),
    },
    Table {
        title: "Relative Throughput",
        metric: |r| Some(r.relative_throughput),
        precision: 4,
        change: None,
    },
];

/// Column key: (N, max_th bits, buffer).
type Column = (usize, u64, usize);

/// Renders absolute and percent-vs-RED tables from per-seed run rows.
///
/// Each cell is the median over seeds. Every (N, seed, max_th, buffer) group
/// present in the input must contain a RED row.
pub fn compare_report(rows: &[RunRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Report("no rows to compare".into()));
    }
    let groups: BTreeSet<(usize, u64, u64, usize)> = rows
        .iter()
        .map(|r| (r.n_sources, r.seed, r.max_th.to_bits(), r.buffer))
        .collect();
    let red: BTreeSet<_> = rows
        .iter()
        .filter(|r| r.discipline == DisciplineKind::Red)
        .map(|r| (r.n_sources, r.seed, r.max_th.to_bits(), r.buffer))
        .collect();
    if let Some(&(n, seed, mt, b)) = groups.difference(&red).next() {
        return Err(Error::Report(format!(
            "missing RED baseline row for N={n} seed={seed} max_th={} buffer={b}",
            f64::from_bits(mt)
        )));
    }

    let columns: BTreeSet<Column> = rows
        .iter()
        .map(|r| (r.n_sources, r.max_th.to_bits(), r.buffer))
        .collect();
    let uniform = columns
        .iter()
        .map(|c| (c.1, c.2))
        .collect::<BTreeSet<_>>()
        .len()
        == 1;
    let label = |c: &Column| {
        if uniform {
            format!("N={}", c.0)
        } else {
            format!("N={} mt={} B={}", c.0, f64::from_bits(c.1), c.2)
        }
    };
    let disciplines: BTreeSet<DisciplineKind> = rows.iter().map(|r| r.discipline).collect();
    let mut order: Vec<DisciplineKind> = vec![DisciplineKind::Red];
    order.extend(
        disciplines
            .iter()
            .copied()
            .filter(|&d| d != DisciplineKind::Red),
    );

    let mut by_cell: BTreeMap<(DisciplineKind, Column), Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        by_cell
            .entry((r.discipline, (r.n_sources, r.max_th.to_bits(), r.buffer)))
            .or_default()
            .push(r);
    }
    let cell = |d: DisciplineKind, c: &Column, metric: fn(&RunRow) -> Option<f64>| -> Option<f64> {
        let vals: Vec<f64> = by_cell
            .get(&(d, *c))?
            .iter()
            .filter_map(|r| metric(r))
            .collect();
        median(&vals)
    };

    let name_width = order
        .iter()
        .map(|d| d.label().len())
        .max()
        .unwrap_or(0)
        .max(14);
    let col_width = columns
        .iter()
        .map(|c| label(c).len())
        .max()
        .unwrap_or(0)
        .max(10);
    let header = |out: &mut String, title: &str| {
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:<name_width$}", "AQM");
        for c in &columns {
            let _ = write!(out, " | {:>col_width$}", label(c));
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{}",
            "-".repeat(name_width + columns.len() * (col_width + 3))
        );
    };

    let mut out = String::new();
    for t in &TABLES {
        header(&mut out, t.title);
        for &d in &order {
            let _ = write!(out, "{:<name_width$}", d.label());
            for c in &columns {
                let v = cell(d, c, t.metric).map_or("-".to_string(), |v| {
                    format!("{v:.prec$}", prec = t.precision)
                });
                let _ = write!(out, " | {v:>col_width$}");
            }
            let _ = writeln!(out);
        }
        let _ = writeln!(out);

        if let Some((title, sign)) = t.change {
            header(&mut out, title);
            for &d in &order {
                let _ = write!(out, "{:<name_width$}", d.label());
                for c in &columns {
                    let pct = match (cell(d, c, t.metric), cell(DisciplineKind::Red, c, t.metric)) {
                        (Some(s), Some(r)) => percent_change(s, r, sign),
                        _ => None,
                    };
                    let v = pct.map_or("-".to_string(), |p| format!("{p:+.2}%"));
                    let _ = write!(out, " | {v:>col_width$}");
                }
                let _ = writeln!(out);
            }
            let _ = writeln!(out);
        }
    }
    Ok(out)
}
