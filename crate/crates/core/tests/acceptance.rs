//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;

use aqmrd_core::aqm::aqmrd::init_mid_th;
use aqmrd_core::aqm::red::red_idle_adjust;
use aqmrd_core::aqm::{effective_drop_prob, AqmrdState, Arrival, Red, RedState};
use aqmrd_core::experiment::{render_runs, run_scenario, write_atomic, ExperimentConfig, RunRow};
use aqmrd_core::metrics::{median, percent_change, Change};
use aqmrd_core::sim::{SimConfig, Simulation};
use aqmrd_core::{Discipline, DisciplineKind, GatewayParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Relative tolerance for the closed-form examples.
const FORMULA_RTOL: f64 = 1e-12;
/// Significance level for the inter-drop uniformity test.
const CHI2_ALPHA: f64 = 0.05;
const GAP_TRIALS: usize = 100_000;
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const DURATION: f64 = 100.0;
/// Reference percent changes at N=100 (avg, delay, loss, E[q]), reported only.
const REFERENCE_PCT: [(&str, f64); 4] = [
    ("E[avg]", 19.43),
    ("delay", 17.74),
    ("loss", 46.40),
    ("E[q]", 19.55),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn close(got: f64, want: f64) -> bool {
    if want == 0.0 {
        got == 0.0
    } else {
        ((got - want) / want).abs() <= FORMULA_RTOL
    }
}

fn formulas() -> Outcome {
    let gw = GatewayParams::default();
    let st = |avg: f64, davg: f64, q_prev: f64, mid_th: f64| AqmrdState {
        avg,
        davg,
        q_prev,
        mid_th,
        count: 0,
    };
    let mut failures = Vec::new();
    let mut flags = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        if !close(got, want) {
            failures.push(format!("{name}: got {got}, want {want}"));
        }
    };

    let s = st(10.0, 0.0, 10.0, 32.0).update_ewma(10.0, &gw);
    check("ewma fixed point avg", s.avg, 10.0);
    check("ewma fixed point davg", s.davg, 0.0);
    let s = st(10.0, 0.0, 10.0, 32.0).update_ewma(20.0, &gw);
    check("ewma avg", s.avg, 10.0 * 0.998 + 20.0 * 0.002);
    check("ewma avg literal", s.avg, 10.02);
    check("ewma davg", s.davg, 0.02);
    let unit = GatewayParams { w_q: 1.0, ..gw };
    let s = st(3.5, -2.0, 3.0, 32.0).update_ewma(7.0, &unit);
    check("w_q=1 avg", s.avg, 7.0);
    check("w_q=1 davg", s.davg, 4.0);

    check(
        "mid_th davg<0",
        st(20.0, -0.5, 0.0, 30.0).adapt_mid_th(&gw).mid_th,
        31.0,
    );
    check(
        "mid_th davg>0",
        st(20.0, 0.5, 0.0, 30.0).adapt_mid_th(&gw).mid_th,
        29.0,
    );
    check(
        "mid_th clamp",
        st(20.0, 0.5, 0.0, 16.0).adapt_mid_th(&gw).mid_th,
        16.0,
    );

    for (x, want) in [(2.0, 32.0), (1.0, 16.0), (3.0, 48.0)] {
        check(
            &format!("init mid_th x={x}"),
            init_mid_th(&GatewayParams { x, ..gw }).unwrap(),
            want,
        );
    }

    check(
        "p1",
        st(20.0, 0.1, 0.0, 32.0).base_drop_prob(&gw),
        0.1 * 4.0 / 16.0,
    );
    check(
        "p1 literal",
        st(20.0, 0.1, 0.0, 32.0).base_drop_prob(&gw),
        0.025,
    );
    check("p2", st(32.0, -0.1, 0.0, 32.0).base_drop_prob(&gw), 0.05);
    check(
        "p below min_th",
        st(10.0, 0.3, 0.0, 32.0).base_drop_prob(&gw),
        0.0,
    );
    check(
        "p at max_th",
        st(48.0, -0.1, 0.0, 32.0).base_drop_prob(&gw),
        1.0,
    );

    check("p_a count=10", effective_drop_prob(0.05, 10), 0.05 / 0.5);
    check("p_a count=0", effective_drop_prob(0.05, 0), 0.05);
    check("p_a saturation", effective_drop_prob(0.1, 10), 1.0);

    let (v, s) = st(50.0, 0.0, 50.0, 32.0).on_arrival(10, 0.99, &gw);
    check("forced drop p", v.p_applied, 1.0);
    if !v.is_drop() || s.count != -1 {
        flags.push(format!("forced drop: {v:?}, count {}", s.count));
    }
    let (v, _) = st(10.0, 0.0, 10.0, 32.0).on_arrival(64, 0.99, &gw);
    if !(v.is_drop() && v.overflow) {
        flags.push(format!("overflow: {v:?}"));
    }

    let mut red = Red::new(gw, 4e-4);
    red.state = RedState {
        avg: 32.0,
        count: 0,
        idle_since: None,
    };
    let v = red.on_arrival(&Arrival::new(32, 0.999, 1.0));
    check("RED p_a", v.p_applied, 0.05);

    let mut decayed = 10.0;
    for _ in 0..100 {
        decayed *= 0.998;
    }
    let idle = red_idle_adjust(
        RedState {
            avg: 10.0,
            ..RedState::default()
        },
        0.002,
        100.0 * 4e-4 + 1e-9,
        4e-4,
    );
    check("idle decay", idle.avg, decayed);
    failures.extend(flags);

    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "all worked examples within 1e-12 relative".into()
        } else {
            failures.join("; ")
        },
    }
}

fn mid_th_containment() -> Outcome {
    let (mut lo, mut hi, mut samples) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for n in [25, 50] {
        for seed in SEEDS {
            let mut cfg = SimConfig::new(DisciplineKind::Aqmrd, n, seed);
            cfg.trace = true;
            let m = Simulation::new(&cfg).unwrap().run(DURATION).unwrap();
            for s in m.trace.unwrap() {
                let mid = s.mid_th.expect("AQMRD exposes mid_th");
                lo = lo.min(mid);
                hi = hi.max(mid);
                samples += 1;
            }
        }
    }
    Outcome {
        pass: samples > 0 && lo >= 16.0 && hi <= 48.0,
        detail: format!("{samples} samples, mid_th in [{lo}, {hi}]"),
    }
}

type Metric = fn(&RunRow) -> Option<f64>;

/// Median over seeds of `metric` for each (discipline, N).
fn medians(rows: &[RunRow], metric: Metric) -> BTreeMap<(DisciplineKind, usize), f64> {
    let mut groups: BTreeMap<(DisciplineKind, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        if let Some(v) = metric(r) {
            groups
                .entry((r.discipline, r.n_sources))
                .or_default()
                .push(v);
        }
    }
    groups
        .into_iter()
        .map(|(k, v)| (k, median(&v).unwrap()))
        .collect()
}

fn high_load(rows: &[RunRow]) -> Outcome {
    let metrics: [(Metric, Change); 4] = [
        (|r| r.e_avg_pkts, Change::Reduction),
        (|r| r.mean_qdelay_s, Change::Reduction),
        (|r| r.loss_ratio_pct, Change::Increase),
        (|r| r.e_q_pkts, Change::Reduction),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for ((metric, sign), (name, reference)) in metrics.into_iter().zip(REFERENCE_PCT) {
        let med = medians(rows, metric);
        let a = med[&(DisciplineKind::Aqmrd, 100)];
        let r = med[&(DisciplineKind::Red, 100)];
        let pct = percent_change(a, r, sign).unwrap();
        pass &= pct > 0.0;
        let within = pct >= reference / 3.0 && pct <= reference * 3.0;
        parts.push(format!(
            "{name} AQMRD {a:.5} vs RED {r:.5} ({pct:+.2}%, reference {reference:+.2}%, {} factor 3)",
            if within { "within" } else { "outside" }
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn moderate_load(rows: &[RunRow]) -> Outcome {
    let med = medians(rows, |r| r.e_avg_pkts);
    let (a, r) = (
        med[&(DisciplineKind::Aqmrd, 50)],
        med[&(DisciplineKind::Red, 50)],
    );
    Outcome {
        pass: a < r,
        detail: format!(
            "N=50 E[avg] AQMRD {a:.3} < RED {r:.3} ({:+.2}%)",
            percent_change(a, r, Change::Reduction).unwrap()
        ),
    }
}

fn ared_ordering(rows: &[RunRow]) -> Outcome {
    let med = medians(rows, |r| r.e_avg_pkts);
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [50, 75] {
        let (ared, a) = (
            med[&(DisciplineKind::AdaptiveRed, n)],
            med[&(DisciplineKind::Aqmrd, n)],
        );
        pass &= ared > a;
        parts.push(format!("N={n} E[avg] ARED {ared:.3} > AQMRD {a:.3}"));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn conservation_and_determinism(extra_runs: usize) -> Outcome {
    let mut unconserved = Vec::new();
    let mut runs = extra_runs;
    for kind in DisciplineKind::ALL {
        for n in [2, 25, 100] {
            for seed in [1, 2] {
                match Simulation::new(&SimConfig::new(kind, n, seed))
                    .unwrap()
                    .run(30.0)
                {
                    Ok(m) if m.is_conserved() => {}
                    Ok(m) => unconserved.push(format!("{kind} N={n} seed={seed}: {m:?}")),
                    Err(e) => unconserved.push(format!("{kind} N={n} seed={seed}: {e}")),
                }
                runs += 1;
            }
        }
    }

    let cfg = ExperimentConfig::from_text(
        "scheme = red, aqmrd, sfq\nsources = 10, 40\nseeds = 1..3\nduration = 20",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let rows = run_scenario(&cfg).unwrap().rows;
        let path = dir.path().join(format!("run{i}.csv"));
        write_atomic(&path, &render_runs(&cfg, &rows).unwrap()).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    let identical = files[0] == files[1];
    Outcome {
        pass: unconserved.is_empty() && identical,
        detail: format!(
            "{runs} runs conserved{}; repeated CSV {} ({} bytes)",
            if unconserved.is_empty() {
                String::new()
            } else {
                format!(", violations: {}", unconserved.join("; "))
            },
            if identical {
                "byte-identical"
            } else {
                "differs"
            },
            files[0].len()
        ),
    }
}

fn drop_gap_uniformity() -> Outcome {
    let gw = GatewayParams::default();
    let p_b = 0.05;
    let categories = (1.0_f64 / p_b).ceil() as usize;
    let mut red = Red::new(gw, 4e-4);
    red.state = RedState {
        avg: 32.0,
        count: 0,
        idle_since: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = vec![0u64; categories];
    let (mut gap, mut gaps, mut out_of_range, mut drift) = (0usize, 0usize, 0usize, 0.0f64);
    while gaps < GAP_TRIALS {
        let v = red.on_arrival(&Arrival::new(32, rng.gen(), 0.0));
        drift = drift.max((red.state.avg - 32.0).abs());
        gap += 1;
        if v.is_drop() {
            match counts.get_mut(gap - 1) {
                Some(c) => *c += 1,
                None => out_of_range += 1,
            }
            gaps += 1;
            gap = 0;
        }
    }
    let expected = GAP_TRIALS as f64 / categories as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p_value = 1.0 - ChiSquared::new((categories - 1) as f64).unwrap().cdf(stat);
    Outcome {
        pass: out_of_range == 0 && drift < 1e-9 && p_value > CHI2_ALPHA,
        detail: format!(
            "{GAP_TRIALS} gaps over 1..{categories}: chi2 = {stat:.2}, p = {p_value:.3}, {out_of_range} out of range"
        ),
    }
}

fn light_load() -> Outcome {
    let mut pass = true;
    let mut worst_avg = 0.0f64;
    let mut early = 0;
    for kind in [DisciplineKind::Red, DisciplineKind::Aqmrd] {
        for seed in SEEDS {
            let mut cfg = SimConfig::new(kind, 2, seed);
            cfg.trace = true;
            let m = Simulation::new(&cfg).unwrap().run(DURATION).unwrap();
            let max_avg = m.trace.unwrap().iter().map(|s| s.avg).fold(0.0, f64::max);
            worst_avg = worst_avg.max(max_avg);
            early += m.early_drops;
            pass &= max_avg < 16.0 && m.early_drops == 0;
        }
    }
    Outcome {
        pass,
        detail: format!("N=2 max sampled avg {worst_avg:.4} < 16, early drops {early}"),
    }
}

fn main() {
    let cfg = ExperimentConfig::from_text(&format!(
        "scheme = red, ared, aqmrd\nsources = 50, 75, 100\nseeds = 1..5\nduration = {DURATION}"
    ))
    .unwrap();
    let load_rows = run_scenario(&cfg).expect("load scenarios").rows;

    let results = [
        ("formula exactness", formulas()),
        ("mid_th containment", mid_th_containment()),
        ("high-load directional claims", high_load(&load_rows)),
        ("moderate-load E[avg]", moderate_load(&load_rows)),
        ("Adaptive-RED queue ordering", ared_ordering(&load_rows)),
        (
            "conservation and determinism",
            conservation_and_determinism(load_rows.len()),
        ),
        ("RED inter-drop uniformity", drop_gap_uniformity()),
        ("light-load sanity", light_load()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {name}: {}", i + 1, outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
