use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ncvx(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncvx"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn only_file(dir: &Path, prefix: &str, ext: &str) -> PathBuf {
    let mut hits: Vec<PathBuf> = std::fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let n = p.file_name().unwrap().to_string_lossy();
            n.starts_with(prefix) && n.ends_with(ext)
        })
        .collect();
    assert_eq!(hits.len(), 1, "{prefix}*{ext} in {dir:?}");
    hits.pop().unwrap()
}

fn records(path: &Path) -> (Vec<String>, Vec<BTreeMap<String, String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect();
    (header, rows)
}

const QCQG_FAMILY: &str = r#"
[family]
kind = "qcqg"
mu = 1.0
tau = 0.5
delta = 0.1
seed = 1
"#;

const RSI_SWEEP: &str = r#"
horizons = [1024, 2048, 4096, 8192, 16384, 32768]

[family]
kind = "rsi"
mu = 1.0
L = 4.0
sigma = 1.0
delta = 1.0
m = 2
seed = 3
"#;

#[test]
fn verify_default_family_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "v.toml", QCQG_FAMILY);
    let o = ncvx(dir.path(), &["verify", "--config", cfg.to_str().unwrap()]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    for p in ["Qc", "Qg", "Smooth", "GradFd"] {
        assert!(out.lines().any(|l| l.starts_with(p) && l.contains("pass")), "{p} in {out}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(only_file(dir.path(), "verify-", ".json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 10);
}

#[test]
fn verify_wrong_tau_fails_with_witness() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "v.toml", &format!("{QCQG_FAMILY}\n[verify]\ntau = 1.0\nsamples = 1000\n"));
    let o = ncvx(dir.path(), &["verify", "--config", cfg.to_str().unwrap()]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{out}");
    assert!(out.lines().any(|l| l.starts_with("Qc") && l.contains("FAIL")), "{out}");
    assert!(out.contains("witness for Qc"), "{out}");
}

#[test]
fn verify_counterexamples() {
    let dir = TempDir::new().unwrap();
    let ok = write(dir.path(), "c.toml", "counterexample = \"rsi-not-starsc\"\n[verify]\nsamples = 2000\n");
    let o = ncvx(dir.path(), &["verify", "--config", ok.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let bad = write(dir.path(), "c2.toml", "counterexample = \"rsi-not-starsc\"\n[verify]\nsamples = 2000\nmu = 2.0\n");
    let o = ncvx(dir.path(), &["verify", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let empty = write(d, "empty.toml", "");
    let blank = write(d, "blank.toml", "seeds = [1]\n");
    let bad = write(d, "bad.toml", "[family\n");
    let unknown = write(d, "unknown.toml", "colour = 3\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["verify", "--config", empty.to_str().unwrap()],
        vec!["verify", "--config", blank.to_str().unwrap()],
        vec!["verify", "--config", bad.to_str().unwrap()],
        vec!["verify", "--config", unknown.to_str().unwrap()],
        vec!["verify", "--config", "missing.toml"],
        vec!["verify"],
        vec!["game", "--config", blank.to_str().unwrap()],
        vec!["verify", "--config", empty.to_str().unwrap(), "--seeds", "x"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = ncvx(d, &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn sweep_needs_seeds_and_increasing_horizons() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.toml", RSI_SWEEP);
    let o = ncvx(dir.path(), &["rate-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write(dir.path(), "s2.toml", &RSI_SWEEP.replace("[1024, 2048", "[2048, 1024"));
    let o = ncvx(dir.path(), &["rate-sweep", "--config", cfg.to_str().unwrap(), "--seeds", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn qc_sgd_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "qc.toml",
        "horizons = [10]\nseeds = [1]\n[family]\nkind = \"qc\"\nmu = 1.0\nL = 1.0\ntau = 0.5\nD = 32.0\ndelta = 0.2\nm = 4\n",
    );
    for cmd in ["run-sgd", "rate-sweep"] {
        let o = ncvx(dir.path(), &[cmd, "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("not implemented"));
    }
}

#[test]
fn rsi_rate_sweep_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.toml", RSI_SWEEP);
    let o = ncvx(dir.path(), &["rate-sweep", "--config", cfg.to_str().unwrap(), "--seeds", "0..32"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");

    let csv = only_file(dir.path(), "rate-sweep-", ".csv");
    let (header, rows) = records(&csv);
    assert_eq!(header, ["config_hash", "family", "algorithm", "T", "seed", "gap", "error"]);
    assert_eq!(rows.len(), 6 * 32);
    let mut by_t: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        by_t.entry(r["T"].parse().unwrap()).or_default().push(r["gap"].parse().unwrap());
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        by_t.iter().map(|(t, g)| ((*t as f64).ln(), (g.iter().sum::<f64>() / g.len() as f64).ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / 6.0, ly.iter().sum::<f64>() / 6.0);
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((-1.3..=-0.7).contains(&slope), "slope {slope}");
    assert!(out.contains(&format!("fitted slope {slope:.3}")), "{out}");

    let svg = std::fs::read_to_string(only_file(dir.path(), "rate-sweep-", ".svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(&format!("fitted slope {slope:.3}")));
    let stem = csv.file_stem().unwrap().to_string_lossy().to_string();
    assert!(only_file(dir.path(), "rate-sweep-", ".svg").ends_with(format!("{stem}.svg")));
}

#[test]
fn csv_is_deterministic_and_attributable() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.toml", &RSI_SWEEP.replace("4096, 8192, 16384, 32768", "4096"));
    let run = |workers: &str| {
        let o = ncvx(dir.path(), &["run-sgd", "--config", cfg.to_str().unwrap(), "--seeds", "0..6", "--workers", workers]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(only_file(dir.path(), "run-sgd-", ".csv")).unwrap()
    };
    let a = run("1");
    let b = run("3");
    assert_eq!(a, b);

    let path = only_file(dir.path(), "run-sgd-", ".csv");
    let hash = path.file_stem().unwrap().to_string_lossy().trim_start_matches("run-sgd-").to_string();
    let (_, rows) = records(&path);
    assert_eq!(rows.len(), 18);
    let mut keys: Vec<(String, String)> = rows.iter().map(|r| (r["T"].clone(), r["seed"].clone())).collect();
    assert!(rows.iter().all(|r| r["config_hash"] == hash && r["error"].is_empty()));
    assert!(rows.iter().all(|r| r["queries"] == r["T"]));
    keys.dedup();
    assert_eq!(keys.len(), 18);
}

#[test]
fn json_and_toml_configs_agree() {
    let dir = TempDir::new().unwrap();
    let toml = write(dir.path(), "lb.toml", "horizons = [1000, 100000]\n[lower_bound]\nkind = \"rsi\"\nmu = 1.0\nL = 100.0\nsigma = 2.0\n");
    let json = write(
        dir.path(),
        "lb.json",
        r#"{"horizons": [1000, 100000], "lower_bound": {"kind": "rsi", "mu": 1.0, "L": 100.0, "sigma": 2.0}}"#,
    );
    let a = ncvx(dir.path(), &["lower-bound", "--config", toml.to_str().unwrap()]);
    let b = ncvx(dir.path(), &["lower-bound", "--config", json.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));

    let (_, rows) = records(&only_file(dir.path(), "lower-bound-", ".csv"));
    for r in rows {
        let t: f64 = r["T"].parse().unwrap();
        let lg = (5.0f64 * 100.0 * 100.0).ln() / 1.25f64.ln();
        let want = (1.0 / 4.0) * (4.0 / (26.0 * lg * t)).sqrt();
        let got: f64 = r["delta_star"].parse().unwrap();
        assert!((got / want - 1.0).abs() < 1e-12, "Δ* {got} vs {want}");
        let bound: f64 = r["bound"].parse().unwrap();
        assert!((bound / (100.0 / 2.0 * want * want / 4.0) - 1.0).abs() < 1e-9, "bound {bound}");
    }
}

#[test]
fn lower_bound_threshold_errors_are_recorded() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "lb.toml",
        "horizons = [1, 1000000]\n[lower_bound]\nkind = \"qc\"\nmu = 1.0\ntau = 0.5\nL = 1.0\nD = 1.0\nsigma = 1.0\n",
    );
    let o = ncvx(dir.path(), &["lower-bound", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let (_, rows) = records(&only_file(dir.path(), "lower-bound-", ".csv"));
    assert!(!rows[0]["error"].is_empty() && rows[0]["bound"].is_empty());
    assert!(rows[1]["error"].is_empty() && rows[1]["bound"].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn bisect_runs_within_budget() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "b.toml",
        "horizons = [20000, 200000]\n[bisect]\nmu = 1.0\nL = 4.0\nD = 4.0\nsigma = 0.5\ndelta = 0.1\nobjective = { kind = \"quadratic\", curvature = 2.0, center = -0.7 }\n",
    );
    let o = ncvx(dir.path(), &["run-bisect", "--config", cfg.to_str().unwrap(), "--seeds", "0..10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let (header, rows) = records(&only_file(dir.path(), "run-bisect-", ".csv"));
    assert_eq!(
        header,
        ["config_hash", "objective", "T", "seed", "x_hat", "gap", "queries", "theorem_bound", "iterations", "stopped_early", "error"]
    );
    assert_eq!(rows.len(), 20);
    for r in &rows {
        let t: u64 = r["T"].parse().unwrap();
        assert!(r["queries"].parse::<u64>().unwrap() <= t);
        let x: f64 = r["x_hat"].parse().unwrap();
        let gap: f64 = r["gap"].parse().unwrap();
        assert!((gap - (x + 0.7f64).powi(2)).abs() < 1e-12);
    }
    let bad = write(dir.path(), "b2.toml", "seeds = [1]\n[bisect]\nmu = 1.0\nL = 0.5\nD = 4.0\nsigma = 0.5\ndelta = 0.1\nobjective = { kind = \"piecewise\", shift = 0.0 }\n");
    assert_eq!(ncvx(dir.path(), &["run-bisect", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn game_players() {
    let dir = TempDir::new().unwrap();
    let base = "seeds = [7, 8]\n[family]\nkind = \"qcqg\"\nmu = 1.0\ntau = 1.0\ndelta = 0.1\nm = 4\nseed = 5\n";
    let clair = write(dir.path(), "c.toml", &format!("{base}[game]\nalgorithm = \"clairvoyant\"\ntrials = 40\nhorizon = 10\n"));
    let o = ncvx(dir.path(), &["game", "--config", clair.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(only_file(dir.path(), "game-", ".json")).unwrap()).unwrap();
    for g in json.as_array().unwrap() {
        assert_eq!(g["result"]["misid_rate"], 0.0);
        assert_eq!(g["result"]["avg_gap"], 0.0);
    }
    let (_, rows) = records(&only_file(dir.path(), "game-", ".csv"));
    assert_eq!(rows.len(), 80);
    assert!(rows.iter().all(|r| r["identified"] == "true" && r["queries"] == "0"));

    let dir = TempDir::new().unwrap();
    let sgd = write(dir.path(), "s.toml", &format!("{base}[game]\nalgorithm = \"sgd\"\ntrials = 8\nhorizon = 200\n"));
    let first = ncvx(dir.path(), &["game", "--config", sgd.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0));
    let a = std::fs::read(only_file(dir.path(), "game-", ".json")).unwrap();
    let second = ncvx(dir.path(), &["game", "--config", sgd.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(a, std::fs::read(only_file(dir.path(), "game-", ".json")).unwrap());
    let (_, rows) = records(&only_file(dir.path(), "game-", ".csv"));
    assert!(rows.iter().all(|r| r["queries"] == "200"));
}
