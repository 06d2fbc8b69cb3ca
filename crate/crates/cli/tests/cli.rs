use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_polyrand");

fn polyrand(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn jk_count_prints_the_count() {
    let o = polyrand(&["--suite", "jk-count", "P=3", "m=3", "k=2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "15\n");
}

#[test]
fn cantor_scan_defaults_respect_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cantor.csv");
    let o = polyrand(&["--suite", "cantor-scan", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("# cantor-scan v1\n"));
    assert!(csv.contains("\nabscissa,statistic,lower,upper,pass\n"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 199_151);
    let max = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(max <= 0.97336);
}

#[test]
fn sandwich_on_empty_tail_is_identically_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("s.csv");
    std::fs::write(
        &cfg,
        r#"{"suite": "qf-sandwich", "seed": 3,
            "params": {"spec": {"k": 3, "head_variance": 2.0, "head_shift": [0.5]},
                       "u_grid": [0.5, 1, 2, 4, 8, 16, 32]}}"#,
    )
    .unwrap();
    let o = polyrand(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 7);
    for r in rows {
        assert!((r[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn json_output_parses() {
    let o = polyrand(&["--suite", "weyl", "--format", "json", "p_grid=[5,50]"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["name"], "weyl");
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes() {
    // config errors
    assert_eq!(polyrand(&[]).status.code(), Some(2));
    assert_eq!(polyrand(&["--suite", "weyl", "bogus=1"]).status.code(), Some(2));
    assert_eq!(polyrand(&["--suite", "nope"]).status.code(), Some(2));
    assert_eq!(polyrand(&["--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    assert_eq!(polyrand(&["--suite", "jk-count", "k=0"]).status.code(), Some(2));
    // infeasible
    assert_eq!(polyrand(&["--suite", "jk-count", "p=50", "k=4", "method=enumerate"]).status.code(), Some(3));
    // bound violation: a cantor scan against an impossible bound
    let o = polyrand(&["--suite", "cantor-scan", "t_max=20", "upper=0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bound violated"));
}

#[test]
fn dry_run_never_executes() {
    let o = polyrand(&["--suite", "jk-count", "p=50", "k=4", "method=enumerate", "--dry-run"]);
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["operations"].as_f64().unwrap(), 50f64.powi(8));
    assert_eq!(v["feasible"], false);

    let o = polyrand(&["--suite", "jk-count", "p=50", "k=2", "--dry-run"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["feasible"], true);

    // the MC estimate is linear in the sample count
    let ops = |n: &str| {
        let o = polyrand(&["--suite", "ik", &format!("options.n_mc={n}"), "--dry-run"]);
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["operations"].as_f64().unwrap()
    };
    assert!((ops("40000") / ops("10000") - 4.0).abs() < 1e-12);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"suite": "jk-count", "params": {"p": 4, "m": 3, "k": 2}}"#).unwrap();
    let o = polyrand(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "28\n");
    let o = polyrand(&["--config", cfg.to_str().unwrap(), "p=3"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "15\n");
}

#[test]
fn help_documents_defaults() {
    let o = polyrand(&["--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for s in ["cantor-scan", "qf-sandwich", "stability", "EXIT CODES", "\"t_min\":8.5"] {
        assert!(text.contains(s), "missing {s}");
    }
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let out = dir.join(name);
    let mut all = vec!["--out", out.to_str().unwrap()];
    all.extend_from_slice(args);
    assert_eq!(polyrand(&all).status.code(), Some(0));
    std::fs::read(out).unwrap()
}

#[test]
fn seeds_matter_and_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["--suite", "cp-test", "n_samples=20000"];
    let a = run_to(dir.path(), "a", &[&base[..], &["--seed", "1"]].concat());
    let b = run_to(dir.path(), "b", &[&base[..], &["--seed", "1", "--jobs", "3"]].concat());
    let c = run_to(dir.path(), "c", &[&base[..], &["--seed", "2"]].concat());
    assert_eq!(a, b);
    assert_ne!(a, c);
}
