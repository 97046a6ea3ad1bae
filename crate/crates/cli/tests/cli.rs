use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use safechain_cli::commands::{prepare, Overrides};
use safechain_cli::config;

const SHORT: &str = r#"
[controller]
kp = 4.0
kd = 4.0

[scenario]
t_final = 1.0
dt = 0.01
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_safechain"))
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn simulate_writes_consistent_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "a.cfg", SHORT);
    let out = dir.path().join("run");
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("trajectory.csv"));
    let (n, m) = (2, 2);
    let width = 1 + 2 * n * m + m + n + 1;
    assert_eq!(rows[0].len(), width);
    assert_eq!(rows[0][0], "t");
    assert_eq!(rows[0][width - 1], "branch");
    assert_eq!(rows.len(), 1 + 101);
    for r in &rows[1..] {
        assert_eq!(r.len(), width);
        assert!(r[width - 1] == "passthrough" || r[width - 1] == "corrected");
        for v in &r[..width - 1] {
            v.parse::<f64>().unwrap();
        }
    }
    let metrics: toml::Table = std::fs::read_to_string(out.join("metrics.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(metrics["mode"].as_str(), Some("srcbf"));
    assert!(metrics["min_h1"].as_float().unwrap() > 0.0);
}

#[test]
fn halving_dt_doubles_the_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "a.cfg",
        "[scenario]\nt_final = 0.5\ndt = 0.001\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&a),
        "--controller",
        "nominal"
    ])
    .status
    .success());
    assert!(run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&b),
        "--controller",
        "nominal",
        "--dt",
        "0.002"
    ])
    .status
    .success());
    let (ra, rb) = (
        csv_rows(&a.join("trajectory.csv")),
        csv_rows(&b.join("trajectory.csv")),
    );
    assert_eq!(ra.len() - 1, 501);
    assert_eq!(rb.len() - 1, 251);
    assert!(rb[1..].iter().all(|r| r.last().unwrap() == "nominal"));
}

#[test]
fn plots_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "a.cfg", SHORT);
    let out = dir.path().join("cmp");
    let o = run(&["compare", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    for mode in ["nominal", "sbcbf", "srcbf"] {
        assert!(table.contains(mode));
        assert!(out.join(format!("{mode}_trajectory.csv")).exists());
    }
    for name in ["xy.svg", "h1.svg", "input.svg"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        let polylines = doc
            .descendants()
            .filter(|n| n.has_tag_name("polyline"))
            .count();
        assert_eq!(polylines, 3, "{name}");
        let circles = doc
            .descendants()
            .filter(|n| n.has_tag_name("circle"))
            .count();
        assert_eq!(circles, usize::from(name == "xy.svg"), "{name}");
    }
}

#[test]
fn effective_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "a.cfg",
        &format!("{SHORT}\n[gains]\nmargin = 0.3\n"),
    );
    let out = dir.path().join("run");
    let overrides = Overrides {
        seed: Some(9),
        out: Some(out.clone()),
        ..Overrides::default()
    };
    let (_, first) = prepare(&cfg, &overrides).unwrap();
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--seed",
        "9",
    ]);
    assert!(o.status.success());
    let written = out.join("config.toml");
    let (again, second) = prepare(&written, &Overrides::default()).unwrap();
    assert_eq!(
        format!("{:?}", first.scenario),
        format!("{:?}", second.scenario)
    );
    assert_eq!(again.scenario.seed, 9);
    // Writing the resolved config again is a fixed point.
    assert_eq!(again.to_toml(), std::fs::read_to_string(&written).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write_cfg(
        dir.path(),
        "a.cfg",
        "[scenario]\nt_final = 1.0\nspeed = 2\n",
    );
    let o = run(&["simulate", "--config", s(&bad_key)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("speed"));
    let bad_dim = write_cfg(dir.path(), "b.cfg", "[scenario]\nx0 = [0.0]\n");
    assert_eq!(
        run(&["check-gains", "--config", s(&bad_dim)]).status.code(),
        Some(2)
    );
    let missing = dir.path().join("nope.cfg");
    assert_eq!(
        run(&["simulate", "--config", s(&missing)]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["simulate", "--bogus"]).status.code(), Some(2));
}

#[test]
fn unsafe_start_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let inside = write_cfg(
        dir.path(),
        "a.cfg",
        "[scenario]\nx0 = [2.0, 2.2, 0.0, 0.0]\n",
    );
    let o = run(&["check-gains", "--config", s(&inside)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("level 1"));
    // Fixed gains too small for level 2: moving fast toward the obstacle.
    let fast = write_cfg(
        dir.path(),
        "b.cfg",
        "[gains]\nrho = [0.1, 1.0]\n[scenario]\nx0 = [-1.0, -1.0, 3.0, 3.0]\n",
    );
    let o = run(&["check-gains", "--config", s(&fast)]);
    assert_eq!(o.status.code(), Some(4));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(
        table
            .lines()
            .any(|l| l.starts_with('2') && l.ends_with("no")),
        "{table}"
    );
    let o = run(&[
        "simulate",
        "--config",
        s(&fast),
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn runtime_failure_exits_3_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    // The gain function stops being defined at t = 0.5.
    let cfg = write_cfg(
        dir.path(),
        "a.cfg",
        "[gains.upsilon]\nkind = \"prescribed-time\"\nupsilon0 = 0.5\nhorizon = 0.5\n[scenario]\nt_final = 1.0\ndt = 0.01\n",
    );
    let out = dir.path().join("run");
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = csv_rows(&out.join("trajectory.csv"));
    assert!(rows.len() > 2 && rows.len() < 102);
}

#[test]
fn triple_integrator_reports_three_levels() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("presets/triple_demo.cfg");
    let o = run(&["check-gains", "--config", s(&path)]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| l.ends_with("yes")).collect();
    assert_eq!(rows.len(), 3, "{text}");
    assert!(text.starts_with("gains (auto)"));
}

#[test]
fn bundled_presets_are_found_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .current_dir(dir.path())
        .args(["check-gains", "--config", "paper_fig1.cfg"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("gains (fixed): [2.700000, 3.000000]"));
    let parsed = config::load(Path::new("paper_fig1.cfg")).unwrap();
    assert_eq!(parsed, config::parse(config::PAPER_FIG1).unwrap());
}
