//! Subcommand behavior not covered by the acceptance suite: fail-fast
//! configuration errors, report format agreement, and output determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_werewolf"))
}

fn run_games(out: &Path, games: u32, seed: u64) {
    let status = bin()
        .args(["run", "--games", &games.to_string(), "--seed", &seed.to_string(), "--out"])
        .arg(out)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn llm_mode_without_endpoint_fails_before_any_game() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let output = bin()
        .args(["run", "--games", "1", "--mode", "llm", "--out"])
        .arg(&out)
        .env_remove("WEREWOLF_ENDPOINT")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("endpoint"));
    assert!(!out.exists(), "no output directory may be created on config errors");
}

#[test]
fn single_mock_game_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let started = std::time::Instant::now();
    run_games(&dir.path().join("run"), 1, 3);
    assert!(started.elapsed().as_secs() < 5);
}

#[test]
fn analyze_on_empty_directory_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin().args(["analyze", "--logs"]).arg(dir.path()).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("manifest"));
}

#[test]
fn refuses_non_empty_output_dir_without_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_games(&out, 1, 5);
    let output = bin()
        .args(["run", "--games", "1", "--seed", "5", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    let status = bin()
        .args(["run", "--games", "1", "--seed", "5", "--overwrite", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn clean_run_validates_with_zero_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_games(&out, 3, 11);
    let output = bin().arg("validate").arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&output.stdout).contains("0 violation(s)"));
}

#[test]
fn analyze_writes_report_and_trends_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_games(&out, 3, 21);
    let status = bin().args(["analyze", "--logs"]).arg(&out).status().unwrap();
    assert!(status.success());
    assert!(out.join("report.md").exists());
    let trends = std::fs::read_to_string(out.join("suspicion_trends.csv")).unwrap();
    assert!(trends.starts_with("round,role,mean_suspicion,sem,flagged_fraction"));
    assert!(trends.lines().count() > 1);
}

#[test]
fn report_regeneration_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_games(&out, 3, 31);
    for _ in 0..2 {
        let status = bin()
            .args(["analyze", "--logs"])
            .arg(&out)
            .args(["--format", "markdown", "--out"])
            .arg(dir.path().join("r1.md"))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let status = bin()
        .args(["analyze", "--logs"])
        .arg(&out)
        .args(["--format", "markdown", "--out"])
        .arg(dir.path().join("r2.md"))
        .status()
        .unwrap();
    assert!(status.success());
    let a = std::fs::read_to_string(dir.path().join("r1.md")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("r2.md")).unwrap();
    assert_eq!(a, b);
}

/// Report assembly over a 100-game run stays well under the time budget.
#[test]
fn hundred_game_report_is_fast() {
    use werewolf_engine::agents::MockBackend;
    use werewolf_engine::config::GameConfig;
    use werewolf_engine::log::MemorySink;
    use werewolf_engine::metrics::{extract_game, run_report};
    use werewolf_engine::runner::GameRunner;

    let games: Vec<_> = (0..100u64)
        .map(|seed| {
            let mut backend = MockBackend;
            let mut sink = MemorySink::new(format!("g{seed:04}"));
            GameRunner::new(GameConfig::with_seed(seed), &mut backend, &mut sink)
                .unwrap()
                .run()
                .unwrap();
            extract_game(&sink.records).unwrap()
        })
        .collect();

    let started = std::time::Instant::now();
    let report = run_report(&games).unwrap();
    let elapsed = started.elapsed();
    assert_eq!(report.meta.games, 100);
    assert!(report.meta.total_statements > 1000);
    assert!(elapsed.as_secs() < 60, "report generation took {elapsed:?}");
}

/// Numeric values in the CSV and JSON renderings must agree exactly.
#[test]
fn csv_and_json_reports_agree_numerically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_games(&out, 5, 61);
    for format in ["csv", "json"] {
        let status = bin()
            .args(["analyze", "--logs"])
            .arg(&out)
            .args(["--format", format, "--out"])
            .arg(dir.path().join(format!("report.{format}")))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();

    // Pull one CSV section into rows of fields.
    let section = |name: &str| -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        let mut inside = false;
        for line in csv.lines() {
            if let Some(header) = line.strip_prefix("# ") {
                inside = header == name;
                continue;
            }
            if inside && !line.is_empty() {
                rows.push(line.split(',').map(str::to_string).collect());
            }
        }
        assert!(!rows.is_empty(), "missing CSV section {name}");
        rows
    };

    // Per-role: csv columns mean_suspicion (3) and mean_flagged (5).
    for row in &section("per_role")[1..] {
        let role = &row[0];
        let json_row = json["per_role"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["role"].as_str().unwrap().eq_ignore_ascii_case(role))
            .unwrap();
        assert_eq!(row[3].parse::<f64>().unwrap(), json_row["mean_suspicion"].as_f64().unwrap());
        assert_eq!(row[5].parse::<f64>().unwrap(), json_row["mean_flagged"].as_f64().unwrap());
    }

    // Calibration: brier/roc_auc/auprc per group.
    for row in &section("calibration")[1..] {
        let group = &row[0];
        let json_row = json["calibration"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["group"].as_str().unwrap() == group)
            .unwrap();
        for (i, key) in [(2, "brier"), (3, "roc_auc"), (4, "auprc")] {
            assert_eq!(
                row[i].parse::<f64>().unwrap(),
                json_row[key].as_f64().unwrap(),
                "{group}.{key}"
            );
        }
    }

    // Trends: mean suspicion per (round, role).
    for row in &section("trends")[1..] {
        let round: u64 = row[0].parse().unwrap();
        let json_cell = json["trends"]["cells"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| {
                c["round"].as_u64().unwrap() == round
                    && c["role"].as_str().unwrap().eq_ignore_ascii_case(&row[1])
            })
            .unwrap();
        assert_eq!(
            row[2].parse::<f64>().unwrap(),
            json_cell["mean_suspicion"].as_f64().unwrap()
        );
    }

    // Cross-perception cells.
    for row in &section("cross_smoothed")[1..] {
        if row[2].is_empty() || row[2] == "n/a" {
            continue;
        }
        let cell = &json["cross_smoothed"]["cells"][row[0].to_lowercase()][row[1].to_lowercase()];
        assert_eq!(row[2].parse::<f64>().unwrap(), cell.as_f64().unwrap());
    }
}
