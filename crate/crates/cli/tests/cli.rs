use hydro_fpv_cli::commands::{OracleReport, RunSummary};
use hydro_fpv_cli::output::{read_trajectory_csv, trajectory_csv};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

/// Copy of the bundled config with absolute data paths, edited by `edit`, written to `dir`.
fn config_in(dir: &Path, edit: impl Fn(String) -> String) -> PathBuf {
    let mut text = std::fs::read_to_string(fixture_dir().join("config.toml")).unwrap();
    for f in ["price.csv", "solar.csv", "inflow.csv", "head.csv"] {
        let abs = fixture_dir().join(f);
        text = text.replace(
            &format!("\"{f}\""),
            &format!("{:?}", abs.display().to_string()),
        );
    }
    let path = dir.join("config.toml");
    std::fs::write(&path, edit(text)).unwrap();
    path
}

fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydro-fpv"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn bundled_files_match_generator() {
    for (name, text) in hydro_fpv_cli::bundle::render() {
        let on_disk = std::fs::read_to_string(fixture_dir().join(name)).unwrap();
        assert!(on_disk == text, "{name} is stale; regenerate with `hydro-fpv fixture --out crates/cli/fixtures/synthetic`");
    }
}

#[test]
fn price_hits_contracts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_ok(&run(&fixture_dir().join("config.toml"), &out, &["price"]));
    let summary: RunSummary =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.months.len(), 2);
    for m in &summary.months {
        assert!(m.residual_m3.abs() / m.target_m3 <= 1e-4, "{m:?}");
        assert_eq!(m.iterations, Some(20));
        assert_eq!(m.monotone, Some(true));
    }
    assert!(summary.mass_balance_error <= 1e-9);
    assert!(summary.max_ramp_violation_m3 <= 1e-9);
    let rows = read_trajectory_csv(&std::fs::read(out.join("trajectory.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 744 + 672);
    assert_eq!(rows[744].timestamp, "2023-02-01T00:00:00");
}

#[test]
fn simulate_reproduces_price_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let priced = tmp.path().join("priced");
    let cfg = config_in(tmp.path(), |t| {
        t + "\n[simulate]\nsummary = \"priced/summary.json\"\n"
    });
    assert_ok(&run(&cfg, &priced, &["price"]));
    let simulated = tmp.path().join("simulated");
    assert_ok(&run(&cfg, &simulated, &["simulate"]));
    let a = std::fs::read(priced.join("trajectory.csv")).unwrap();
    let b = std::fs::read(simulated.join("trajectory.csv")).unwrap();
    assert!(
        a == b,
        "simulated trajectory differs from priced trajectory"
    );
}

#[test]
fn trajectory_csv_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_ok(&run(&fixture_dir().join("config.toml"), &out, &["price"]));
    let bytes = std::fs::read(out.join("trajectory.csv")).unwrap();
    let rows = read_trajectory_csv(&bytes).unwrap();
    assert_eq!(trajectory_csv(&rows).unwrap(), bytes);
}

#[test]
fn oracle_gap_within_two_percent() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_ok(&run(
        &fixture_dir().join("config.toml"),
        &out,
        &["oracle-check"],
    ));
    let r: OracleReport =
        serde_json::from_slice(&std::fs::read(out.join("oracle_check.json")).unwrap()).unwrap();
    assert_eq!(r.steps, 6);
    assert!(r.relative_gap <= 0.02, "{r:?}");
    assert!(
        (r.oracle_release_m3 - r.target_m3).abs() <= r.bucket_width_m3,
        "{r:?}"
    );
}

#[test]
fn fit_head_reports_r_squared() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_ok(&run(
        &fixture_dir().join("config.toml"),
        &out,
        &["fit-head"],
    ));
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("head_fit.json")).unwrap()).unwrap();
    assert!(v["r_squared"].as_f64().unwrap() >= 0.99);
    assert_eq!(v["points"], 25);
}

#[test]
fn monte_carlo_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config_in(tmp.path(), |t| t.replace("runs = 200", "runs = 3"));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    assert_ok(&run(&cfg, &a, &["--seed", "7", "monte-carlo"]));
    assert_ok(&run(&cfg, &b, &["--seed", "7", "monte-carlo"]));
    assert_ok(&run(&cfg, &c, &["--seed", "8", "monte-carlo"]));
    let read = |d: &Path| std::fs::read_to_string(d.join("monte_carlo_runs.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(read(&a).lines().count(), 1 + 5 * 3);
}

fn expect_failure(config: &Path, code: i32, kind: &str) {
    let out = config.parent().unwrap().join("out");
    let o = run(config, &out, &["price"]);
    assert_eq!(
        o.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], kind);
    assert_eq!(err["exit_code"], code);
    assert!(!out.exists(), "outputs written despite failure");
}

#[test]
fn bad_config_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    expect_failure(&tmp.path().join("missing.toml"), 2, "config");

    let d = tmp.path().join("syntax");
    std::fs::create_dir(&d).unwrap();
    expect_failure(
        &config_in(&d, |t| t.replace("[initial]", "[initial")),
        2,
        "config",
    );

    let d = tmp.path().join("unknown_key");
    std::fs::create_dir(&d).unwrap();
    expect_failure(
        &config_in(&d, |t| t + "\n[system]\ntransmision = 1.0\n"),
        2,
        "config",
    );

    let d = tmp.path().join("contract_count");
    std::fs::create_dir(&d).unwrap();
    expect_failure(
        &config_in(&d, |t| t.replace("release_m3 = [", "release_m3 = [1.0, ")),
        2,
        "config",
    );

    let d = tmp.path().join("too_big");
    std::fs::create_dir(&d).unwrap();
    expect_failure(
        &config_in(&d, |t| t.replace("360020.3000000006", "1e9")),
        4,
        "validation",
    );

    let d = tmp.path().join("infeasible");
    std::fs::create_dir(&d).unwrap();
    expect_failure(
        &config_in(&d, |t| t.replace("360020.3000000006", "526500.0")),
        7,
        "pricer",
    );
}

#[test]
fn ingest_errors_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let price = std::fs::read_to_string(fixture_dir().join("price.csv")).unwrap();

    let gap = tmp.path().join("gap");
    std::fs::create_dir(&gap).unwrap();
    let lines: Vec<&str> = price
        .lines()
        .filter(|l| !l.starts_with("2023-01-05T07:00:00"))
        .collect();
    std::fs::write(gap.join("price.csv"), lines.join("\n") + "\n").unwrap();
    let cfg = config_in(&gap, |t| {
        let abs = fixture_dir().join("price.csv").display().to_string();
        t.replace(&format!("{abs:?}"), "\"price.csv\"")
    });
    expect_failure(&cfg, 3, "ingest");
    let o = run(&cfg, &gap.join("out"), &["price"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("2023-01-05T07:00:00"));

    let short = tmp.path().join("short");
    std::fs::create_dir(&short).unwrap();
    let lines: Vec<&str> = price.lines().take(1 + 24 * 30).collect();
    std::fs::write(short.join("price.csv"), lines.join("\n") + "\n").unwrap();
    let cfg = config_in(&short, |t| {
        let abs = fixture_dir().join("price.csv").display().to_string();
        t.replace(&format!("{abs:?}"), "\"price.csv\"")
    });
    expect_failure(&cfg, 3, "ingest");
}
