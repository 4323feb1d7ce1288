use std::path::Path;
use std::process::{Command, Output};

use blk_core::cli::{read_diagnostics, RunConfig, CSV_VERSION_LINE};

fn blk(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blk"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn blk")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn run_preset_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = blk(
        &["run", "--preset", "thm61", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let series = read_diagnostics(&out.join("diagnostics.csv")).unwrap();
    assert!(series.len() > 100);
    assert!((series.last().unwrap().t - 2.0).abs() < 1e-9);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["blow_up"], false);
    assert_eq!(summary["preset"], "thm61");
    let cfg = RunConfig::load(&out.join("config.toml")).unwrap();
    assert_eq!(cfg, RunConfig::preset("thm61").unwrap());
}

#[test]
fn config_file_round_trip_and_bad_key() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset("thm62").unwrap();
    cfg.solver.t_end = 0.05;
    let good = dir.path().join("good.toml");
    std::fs::write(&good, cfg.to_toml().unwrap()).unwrap();
    let o = blk(&["run", "--config", good.to_str().unwrap(), "--out", "g"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("g/diagnostics.csv").exists());

    let bad = dir.path().join("bad.toml");
    let text = cfg.to_toml().unwrap().replace("[solver]", "[solver]\ntimestep = 0.1");
    std::fs::write(&bad, text).unwrap();
    let o = blk(&["run", "--config", bad.to_str().unwrap(), "--out", "b"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("timestep"));

    let o = blk(&["run", "--config", "missing.toml"], dir.path());
    assert_eq!(code(&o), 4);
}

#[test]
fn unstable_preset_blows_up_with_partial_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = blk(&["run", "--preset", "unstable", "--out", "u"], dir.path());
    assert_eq!(code(&o), 3);
    let text = std::fs::read_to_string(dir.path().join("u/diagnostics.csv")).unwrap();
    assert!(text.starts_with(CSV_VERSION_LINE));
    let series = read_diagnostics(&dir.path().join("u/diagnostics.csv")).unwrap();
    assert!(!series.is_empty() && series.last().unwrap().t < 5.0);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("u/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["blow_up"], true);
}

#[test]
fn decay_presets_and_hypothesis_failure() {
    let dir = tempfile::tempdir().unwrap();
    for (id, chi) in [("thm61", 4.0), ("thm62", 12.0)] {
        let o = blk(&["decay", "--preset", id, "--out", id], dir.path());
        assert_eq!(code(&o), 0, "{id}: {}", String::from_utf8_lossy(&o.stdout));
        let r: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(id).join("decay_report.json")).unwrap())
                .unwrap();
        assert_eq!(r["status"], "pass");
        assert!((r["report"]["chi_theory"].as_f64().unwrap() - chi).abs() < 1e-12);
    }
    let o = blk(
        &["decay", "--preset", "thm63", "--amplitude", "10", "--out", "v"],
        dir.path(),
    );
    assert_eq!(code(&o), 5);
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("v/decay_report.json")).unwrap()).unwrap();
    assert_eq!(r["status"], "hypothesis_not_met");
    assert!(r["report"].is_null());
    assert!(!dir.path().join("v/diagnostics.csv").exists());

    let o = blk(&["decay", "--preset", "unstable"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn inequality_sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = blk(
            &["verify-inequalities", "--seed", "3", "--count", "20", "--out", out],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    let a = std::fs::read(dir.path().join("a/inequalities.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/inequalities.json")).unwrap();
    assert_eq!(a, b);
    let o = blk(&["verify-inequalities", "--count", "0", "--out", "z"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn convergence_needs_three_levels_and_zero_solution_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = blk(&["convergence", "--nx", "64", "--out", "c"], dir.path());
    assert_eq!(code(&o), 2);
    let o = blk(
        &[
            "convergence",
            "--amplitude",
            "0",
            "--nx",
            "16,20,24",
            "--dt",
            "1e-2,5e-3,2.5e-3",
            "--spatial-dt",
            "1e-2",
            "--temporal-nx",
            "16",
            "--t-end",
            "0.05",
            "--out",
            "z",
        ],
        dir.path(),
    );
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("z/convergence.json")).unwrap()).unwrap();
    for study in ["spatial", "temporal"] {
        assert!(r[study]["errors"]
            .as_array()
            .unwrap()
            .iter()
            .all(|e| e.as_f64() == Some(0.0)));
    }
    // orders are undefined (0/0), so the study does not claim a pass
    assert_eq!(code(&o), 1);
}

#[test]
fn preset_command_prints_loadable_toml() {
    let dir = tempfile::tempdir().unwrap();
    let o = blk(&["preset", "thm64"], dir.path());
    assert_eq!(code(&o), 0);
    let cfg = RunConfig::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg, RunConfig::preset("thm64").unwrap());
}
