use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aqmrd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aqmrd"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn aqmrd")
}

const QUICK: [&str; 6] = ["--sources", "4,8", "--seeds", "1..2", "--duration", "3"];

#[test]
fn run_writes_one_row_per_combination() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--scheme", "red,aqmrd", "--out", "runs.csv"];
    args.extend(QUICK);
    let out = aqmrd(&args, dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert!(text.starts_with("# aqmrd run\n# config_hash="));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        data[0],
        "discipline,n_sources,seed,max_th,min_th,buffer,duration,throughput_bps,relative_throughput,mean_qdelay_s,e_avg_pkts,e_q_pkts,loss_ratio_pct"
    );
    assert_eq!(data.len(), 1 + 2 * 2 * 2);
    assert!(data[1].starts_with("aqmrd,4,1,48,16,64,3,"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let mut args = vec![
            "run",
            "--scheme",
            "aqmrd,sfq,rem",
            "--jobs",
            "3",
            "--out",
            name,
        ];
        args.extend(QUICK);
        assert!(aqmrd(&args, dir.path()).status.success());
    }
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        vec!["run", "--wq", "1.5", "--out", "x.csv"],
        vec!["run", "--scheme", "blue", "--out", "x.csv"],
        vec!["run", "--min-th", "50", "--out", "x.csv"],
        vec!["run", "--x-factor", "4", "--out", "x.csv"],
        vec!["sweep", "--param", "rtt", "--out", "x.csv"],
    ] {
        let out = aqmrd(&bad, dir.path());
        assert_eq!(out.status.code(), Some(2), "{bad:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains("invalid"),
            "{bad:?}"
        );
        assert!(!dir.path().join("x.csv").exists());
    }
}

#[test]
fn file_settings_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.conf"),
        "# quick\nscheme = red\nsources = 3\nseeds = 1\nduration = 2\nmax_th = 30\n",
    )
    .unwrap();
    let out = aqmrd(
        &["run", "--config", "exp.conf", "--max-th", "36"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("red,")).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("red,3,1,36,12,64,2,"), "{}", rows[0]);
}

#[test]
fn compare_reads_run_files_and_needs_red() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--scheme", "red,aqmrd", "--out", "both.csv"];
    args.extend(QUICK);
    assert!(aqmrd(&args, dir.path()).status.success());
    let out = aqmrd(&["compare", "both.csv"], dir.path());
    assert!(out.status.success());
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("with respect to RED"));
    assert!(report.contains("AQMRD"));

    let mut args = vec!["run", "--scheme", "aqmrd", "--out", "only.csv"];
    args.extend(QUICK);
    assert!(aqmrd(&args, dir.path()).status.success());
    let out = aqmrd(&["compare", "only.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("RED"));
}

#[test]
fn sweep_and_trace_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = aqmrd(
        &[
            "sweep",
            "--param",
            "max_th",
            "--scheme",
            "aqmrd",
            "--seeds",
            "1",
            "--duration",
            "1",
            "--out",
            "s.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let levels: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("aqmrd,"))
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(levels, ["18", "24", "30", "36", "42", "48"]);

    let out = aqmrd(
        &[
            "run",
            "--scheme",
            "aqmrd",
            "--sources",
            "2",
            "--seeds",
            "1",
            "--duration",
            "1",
            "--trace",
            "--trace-dir",
            "tr",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let trace = fs::read_to_string(dir.path().join("tr/aqmrd_n2_s1_mt48_b64.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("t,q,avg,davg,mid_th"));
    assert_eq!(trace.lines().count(), 1 + 101);
}
