use std::path::Path;
use std::process::{Command, Output};

use synctrl_core::dynsys::{integrate, NetworkSpec, OscillatorParams, Tolerances};
use synctrl_core::WORST_COST;

fn synctrl(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_synctrl"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn table(dir: &Path, name: &str) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(dir.join("out").join(name)).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    rdr.records().map(|r| r.unwrap().iter().map(str::to_owned).collect()).collect()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

const SHORT: &str = r#"
[system]
omega0 = "ln(4)"
omega1 = "ln(4) + 0.04"
c = 0.022
periods = 40
n = 800
"#;

#[test]
fn single_point_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SHORT}\n[sweep]\ndelta_omega = [0.015]\nc = [0.022]\n");
    let out = synctrl(dir.path(), &cfg, &["sweep"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = table(dir.path(), "sweep.csv");
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "0.015");
    assert_eq!(rows[0][1], "0.022");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty_c = format!("{SHORT}\n[sweep]\ndelta_omega = [0.015]\nc = []\n");
    assert_eq!(synctrl(dir.path(), &empty_c, &["sweep"]).status.code(), Some(2));
    let unknown = format!("{SHORT}\nfoo = 1\n");
    assert_eq!(synctrl(dir.path(), &unknown, &["sweep"]).status.code(), Some(2));
    assert_eq!(synctrl(dir.path(), SHORT, &["gp"]).status.code(), Some(2));
    assert_eq!(synctrl(dir.path(), SHORT, &["continue"]).status.code(), Some(2));
    assert_eq!(synctrl(dir.path(), "[continuation]\n", &["continue"]).status.code(), Some(2));
    let bad_gp = format!("{SHORT}\n[gp]\ncost = \"sync\"\ncrossover_prob = 0.9\nmutation_prob = 0.3\n");
    assert_eq!(synctrl(dir.path(), &bad_gp, &["gp"]).status.code(), Some(2));
}

#[test]
fn expression_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["-x2d", "mul(x0d)", "foo(x0d)", "x0d +"] {
        let out = synctrl(dir.path(), SHORT, &["simulate", "--expr", bad]);
        assert_eq!(out.status.code(), Some(3), "{bad}");
    }
}

#[test]
fn zero_control_matches_uncontrolled_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = synctrl(dir.path(), SHORT, &["simulate", "--expr", "0"]);
    assert!(out.status.success());
    let w0 = 4f64.ln();
    let osc = |omega| OscillatorParams { omega, alpha: 0.1, beta: 1.0 };
    let spec = NetworkSpec::diffusive_pair(osc(w0), osc(w0 + 0.04), 0.022);
    let tn = 40.0 * 2.0 * std::f64::consts::PI / w0;
    let tol = Tolerances { max_steps: 100_000, ..Tolerances::default() };
    let base = integrate(&spec, &[1.0, 0.0, 1.0, 0.0], 0.0, tn, 800, &tol).unwrap();
    let rows = table(dir.path(), "trajectory.csv");
    assert_eq!(rows.len(), 801);
    for (j, row) in rows.iter().enumerate() {
        let s = base.sample(j);
        for i in 0..4 {
            assert_eq!(row[i + 1].parse::<f64>().unwrap().to_bits(), s[i].to_bits());
        }
    }
}

#[test]
fn diverged_run_reports_sentinel_costs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SHORT}\n[simulate]\nconstants = [3]\n");
    let out = synctrl(dir.path(), &cfg, &["simulate", "--expr", "mul(x0d, exp(exp(k)))"]);
    assert!(out.status.success());
    let costs = &table(dir.path(), "costs.csv")[0];
    assert_eq!(costs[2].parse::<f64>().unwrap(), WORST_COST);
    assert_eq!(costs[3].parse::<f64>().unwrap(), WORST_COST);
    assert_eq!(costs[4], "1");
}

#[test]
fn gp_with_zero_generations_keeps_initial_front() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SHORT}\n[gp]\ncost = \"sync\"\npopulation = 6\ngenerations = 0\nseed = 5\n");
    let out = synctrl(dir.path(), &cfg, &["gp"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let hist = table(dir.path(), "history.csv");
    assert_eq!(hist.len(), 1);
    assert_eq!(hist[0][0], "0");
    assert_eq!(hist[0][4], "6");
    let front = table(dir.path(), "front.csv");
    assert!(!front.is_empty());
    let best: f64 = front[0][0].parse().unwrap();
    assert_eq!(best, hist[0][1].parse::<f64>().unwrap());
}

#[test]
fn banner_and_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SHORT}\n[gp]\ncost = \"sync\"\npopulation = 4\ngenerations = 0\n");
    assert!(synctrl(dir.path(), &cfg, &["gp"]).status.success());
    let with = read(dir.path(), "front.csv");
    let lines: Vec<&str> = with.lines().collect();
    assert!(lines[0].starts_with("# synctrl 0.1.0 gp "));
    assert!(lines[1].starts_with("# config-hash sha256:"));

    assert!(synctrl(dir.path(), &cfg, &["gp", "--no-banner", "--jobs", "2"]).status.success());
    let without = read(dir.path(), "front.csv");
    assert_eq!(without.lines().next(), Some(lines[1]));
    assert_eq!(&without, &with.lines().skip(1).map(|l| format!("{l}\n")).collect::<String>());

    assert!(synctrl(dir.path(), &cfg, &["gp", "--no-banner", "--seed", "9"]).status.success());
    let reseeded = read(dir.path(), "front.csv");
    assert_ne!(reseeded.lines().next(), Some(lines[1]));
}

#[test]
fn uncoupled_family_ends_at_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[system]
alpha = 0.1
beta = 1

[continuation]
delta_omega = 0
[[continuation.branch]]
active = "k"
fixed = [0]
range = [0, 0.3]
start = 0.05
seed = { r0 = 1.4, r1 = 1.4, dtheta = 3.1 }
"#;
    let out = synctrl(dir.path(), cfg, &["continue"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = table(dir.path(), "branches.csv");
    let up: Vec<&Vec<String>> = rows.iter().filter(|r| r[4] == "increasing").collect();
    let last = up.last().unwrap();
    assert_eq!(last[12], "amplitude_collapse");
    assert!((last[6].parse::<f64>().unwrap() - 0.1).abs() < 1e-4);
    for r in &up {
        let k: f64 = r[6].parse().unwrap();
        let r0: f64 = r[7].parse().unwrap();
        assert!((r0 - 2.0 * ((0.1 - k) / 0.1).sqrt()).abs() < 1e-8);
    }
    let down: Vec<&Vec<String>> = rows.iter().filter(|r| r[4] == "decreasing").collect();
    assert!(!down.is_empty());
}

#[test]
fn contour_rows_hold_their_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[system]
omega0 = "ln(4)"
omega1 = "ln(4) + 0.015"

[continuation]
ds_max = 0.01
[[continuation.contour]]
component = "r1"
levels = [1.6, 1.7]
c = 0.022
k = 0.01
c_range = [0, 0.2]
k_range = [0, 0.1]
"#;
    let out = synctrl(dir.path(), cfg, &["continue"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = table(dir.path(), "contours.csv");
    for level in ["1.6", "1.7"] {
        let line: Vec<&Vec<String>> = rows.iter().filter(|r| r[2] == level).collect();
        assert!(line.len() > 10, "{level}");
        for r in line {
            let want: f64 = level.parse().unwrap();
            assert!((r[8].parse::<f64>().unwrap() - want).abs() < 1e-9);
            let (c, k): (f64, f64) = (r[5].parse().unwrap(), r[6].parse().unwrap());
            assert!((0.0..=0.2).contains(&c) && (0.0..=0.1).contains(&k));
        }
    }
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            synctrl::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 4);
}
