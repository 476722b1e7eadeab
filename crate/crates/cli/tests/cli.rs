use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lasso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lasso")).args(args).output().unwrap()
}

fn run(cmd: &str, config: &Path, out: &Path) -> Output {
    lasso(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn bump(s: f64) -> f64 {
    let r = (s - 0.5) / 0.3;
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - r * r).powi(4)
    }
}

/// Target file with rows `edge,x,phi1,phi2` at step `1/n`.
fn target_csv(l: f64, a: f64, n: usize, f: impl Fn(usize, f64) -> (f64, f64)) -> String {
    let mut s = String::from("edge,x,phi1,phi2\n");
    for (e, len) in [(0, l), (1, a), (2, a)] {
        let m = (len * n as f64).round() as usize;
        for i in 0..=m {
            let x = i as f64 / n as f64;
            let (p, v) = f(e, x);
            writeln!(s, "e{},{x},{p},{v}", e + 1).unwrap();
        }
    }
    s
}

fn golden_target(e: usize, x: f64) -> (f64, f64) {
    let scale = [1.0, 0.5, -1.0][e];
    (scale * bump(x), 0.8 * scale * bump(x))
}

#[test]
fn spectrum_lists_the_double_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[geometry]\nl = 1.0\na = 1.0\n[spectrum]\nomega_max = 20.0\n");
    let out = dir.path().join("out");
    assert!(run("spectrum", &cfg, &out).status.success());
    let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let doubles: Vec<&str> = csv
        .lines()
        .skip(1)
        .filter(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[1].parse::<f64>().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-9 && f[2] == "2"
        })
        .collect();
    assert_eq!(doubles.len(), 2);
    assert!(json(out.join("summary.json"))["min_gap"].as_f64().unwrap() == 0.0);
}

#[test]
fn zero_target_gives_zero_controls() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.csv", &target_csv(1.0, 1.0, 50, |_, _| (0.0, 0.0)));
    let cfg = write(
        dir.path(),
        "c.toml",
        "[geometry]\nl = 1.0\na = 1.0\n[grid]\nresolution = 50\n[synthesize]\nproblem = \"p1\"\nmode = \"exact\"\ntarget = \"t.csv\"\n",
    );
    let out = dir.path().join("out");
    assert!(run("synthesize", &cfg, &out).status.success());
    let controls = std::fs::read_to_string(out.join("controls.csv")).unwrap();
    for row in controls.lines().skip(1) {
        assert!(row.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0), "{row}");
    }
    let norms = &json(out.join("report.json"))["report"]["norms"];
    assert_eq!(norms["f1_l2"].as_f64().unwrap(), 0.0);
    assert_eq!(norms["f2_h1"].as_f64().unwrap(), 0.0);
}

fn golden(dir: &Path) -> PathBuf {
    write(dir, "t.csv", &target_csv(1.0, 1.0, 200, golden_target));
    write(
        dir,
        "golden.toml",
        "[geometry]\nl = 1.0\na = 1.0\n[potential]\nkind = \"zero\"\n[grid]\nresolution = 200\n\
         [synthesize]\nproblem = \"p1\"\nmode = \"exact\"\ntarget = \"t.csv\"\n\
         [verify]\nproblem = \"p1\"\ncontrols = \"out/controls.csv\"\ntarget = \"t.csv\"\n\
         [simulate]\nproblem = \"p1\"\ncontrols = \"out/controls.csv\"\ncfl = 1.0\n",
    )
}

#[test]
fn golden_synthesis_verifies_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = golden(dir.path());
    let out = dir.path().join("out");
    let r = run("synthesize", &cfg, &out);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report = json(out.join("report.json"));
    let metric = report["verified_metric"].as_f64().unwrap();
    assert!(metric <= 0.02, "{metric}");
    assert_eq!(report["report"]["time_horizon"].as_f64().unwrap(), 4.0);

    let check = dir.path().join("check");
    assert!(run("verify", &cfg, &check).status.success());
    let v = json(check.join("verify.json"));
    assert!((v["verified_error"]["combined_rel"].as_f64().unwrap() - metric).abs() < 1e-12);

    let sim = dir.path().join("sim");
    assert!(run("simulate", &cfg, &sim).status.success());
    let s = json(sim.join("summary.json"));
    assert_eq!(s["t_end"].as_f64().unwrap(), 4.0);
    let state = std::fs::read_to_string(sim.join("final_state.csv")).unwrap();
    assert_eq!(state.lines().next().unwrap(), "edge,x,u,u_t");
    assert_eq!(state.lines().count(), 1 + 3 * 201);
}

#[test]
fn missing_target_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[geometry]\nl = 1.0\na = 1.0\n[synthesize]\nproblem = \"p1\"\nmode = \"shape\"\ntarget = \"nowhere.csv\"\n",
    );
    let r = run("synthesize", &cfg, &dir.path().join("out"));
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("nowhere.csv"));
}

#[test]
fn malformed_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (i, text) in [
        "[geometry]\nl = 1.0\na = nan\n",
        "[geometry]\nl = 1.0\na = 1.0\ncolour = 3\n",
        "[geometry]\nl = 1.0\n",
        "[geometry]\nl = 1.0\na = 1.0\n",
    ]
    .iter()
    .enumerate()
    {
        let cfg = write(dir.path(), &format!("c{i}.toml"), text);
        assert_eq!(run("spectrum", &cfg, &out).status.code(), Some(2), "{text}");
    }
    let missing = lasso(&["spectrum", "--config", "/does/not/exist.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn synthesis_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.csv", &target_csv(1.0, 1.0, 50, golden_target));
    let cfg = write(
        dir.path(),
        "c.toml",
        "[geometry]\nl = 1.0\na = 1.0\n[grid]\nresolution = 50\n\
         [synthesize]\nproblem = \"p2\"\nmode = \"shape\"\nepsilon = 1.5\ntarget = \"t.csv\"\n",
    );
    let r = run("synthesize", &cfg, &dir.path().join("out"));
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("pulse width"));
}

#[test]
fn interior_demo_leaves_the_constant_mode_alone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[geometry]\nl = 1.0\na = 1.0\n[grid]\nresolution = 50\n[demo]\nwhich = \"interior_only\"\n");
    let out = dir.path().join("out");
    assert!(run("demo", &cfg, &out).status.success());
    let d = json(out.join("demo.json"));
    assert!(d["max_a1"].as_f64().unwrap() < 1e-10);
    assert_eq!(d["seed"].as_u64().unwrap(), 42);
    assert_eq!(d["trials"].as_u64().unwrap(), 10);
}

#[test]
fn golden_ratio_gaps_shrink() {
    let dir = tempfile::tempdir().unwrap();
    let a = 305.0 / 987.0;
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!("[geometry]\nl = 1.0\na = {a}\n[gap]\nomega_max = 450.0\ncounts = [20, 200]\nclusters = [13, 34, 89]\n"),
    );
    let out = dir.path().join("out");
    assert!(run("gap", &cfg, &out).status.success());
    let g = json(out.join("gap.json"));
    assert_eq!(g["decreasing"], Value::Bool(true));
    for c in g["clusters"].as_array().unwrap() {
        assert!(c["roots"].is_array(), "{c}");
    }
    let dens: Vec<u64> = g["convergents"].as_array().unwrap().iter().map(|p| p[1].as_u64().unwrap()).collect();
    assert_eq!(&dens[1..6], &[1, 2, 3, 5, 8]);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.csv", &target_csv(1.0, 0.5, 40, |e, x| golden_target(e, if e == 0 { x } else { 2.0 * x })));
    let cfg = write(
        dir.path(),
        "c.toml",
        "[geometry]\nl = 1.0\na = 0.5\n[potential]\nkind = \"constant\"\nvalue = 0.7\n[grid]\nresolution = 40\n\
         [synthesize]\nproblem = \"p2\"\nmode = \"exact\"\ntarget = \"t.csv\"\n[demo]\nwhich = \"boundary_only\"\ntrials = 3\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(run("synthesize", &cfg, out).status.success());
    }
    for f in ["controls.csv", "report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // the demo needs the zero potential
    assert_eq!(run("demo", &cfg, &a).status.code(), Some(2));
    let seeded = |out: &Path, seed: &str| {
        let cfg0 = write(dir.path(), "d.toml", "[geometry]\nl = 1.0\na = 0.5\n[grid]\nresolution = 40\n[demo]\nwhich = \"boundary_only\"\ntrials = 3\n");
        let r = lasso(&["demo", "--config", cfg0.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
        assert!(r.status.success());
        std::fs::read(out.join("demo.json")).unwrap()
    };
    assert_eq!(seeded(&a, "7"), seeded(&b, "7"));
    assert_ne!(seeded(&a, "7"), seeded(&b, "8"));
}
