//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them).
//!
//! 1. determinism       — byte-identical reruns (timestamps masked), clean replays, < 30 s
//! 2. smoothing         — 0-ulp agreement with the recurrence oracle + closed form
//! 3. metric oracles    — ROC/AUPRC/Theil–Sen/Brier vs brute-force oracles
//! 4. confusion math    — published-count arithmetic + report footnote
//! 5. trend recovery    — injected slopes recovered; CIs separate from round 3
//! 6. report complete   — all six tables, zero absent cells on 20 mock games
//! 7. prompt hygiene    — zero role/scratchpad leaks across 20 mock games
//! 8. robustness        — mutated logs produce the designated exit codes
//! 9. game rules        — exhaustive vote tally + night protection grid

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use werewolf_engine::agents::{scan_prompt_hygiene, MockBackend};
use werewolf_engine::config::GameConfig;
use werewolf_engine::deception::{DeceptionType, PeerAnalysis, SelfAnalysis, Statement, StatementId, SuspicionMatrix};
use werewolf_engine::game::{new_game, resolve_night, tally_votes, NightActions, Phase, PlayerId, Role, Vote};
use werewolf_engine::log::{
    BackendKind, Event, EventRecord, EventSink, GameStartedPayload, MemorySink, RoleAssignedPayload,
    RosterEntry, Visibility,
};
use werewolf_engine::metrics::{
    extract_game, figure_csv, run_report, ConfusionCounts, GameData, ACCURACY_FOOTNOTE, CI95_Z,
};
use werewolf_engine::runner::GameRunner;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_werewolf"))
}

fn mask_wall_time(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let marker = "\"wall_time\":\"";
    let mut rest = text;
    while let Some(pos) = rest.find(marker) {
        let value_start = pos + marker.len();
        let value_len = rest[value_start..].find('"').expect("closing quote");
        out.push_str(&rest[..value_start]);
        rest = &rest[value_start + value_len..];
    }
    out.push_str(rest);
    out
}

fn pass(criterion: &str) {
    println!("ACCEPTANCE {criterion}: PASS");
}

fn run_mock_games(count: u64, base_seed: u64) -> Vec<(Vec<EventRecord>, GameData)> {
    (0..count)
        .map(|i| {
            let seed = base_seed + i;
            let mut backend = MockBackend;
            let mut sink = MemorySink::new(format!("g{i:04}"));
            let runner = GameRunner::new(GameConfig::with_seed(seed), &mut backend, &mut sink).unwrap();
            runner.run().unwrap();
            let data = extract_game(&sink.records).unwrap();
            (sink.records, data)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// 1. Determinism
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_determinism() {
    let started = std::time::Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let run_a = dir.path().join("a");
    let run_b = dir.path().join("b");
    for out in [&run_a, &run_b] {
        let status = bin()
            .args(["run", "--games", "5", "--mode", "mock", "--seed", "42", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for i in 0..5 {
        let name = format!("g{i:04}.ndjson");
        let a = std::fs::read_to_string(run_a.join(&name)).unwrap();
        let b = std::fs::read_to_string(run_b.join(&name)).unwrap();
        assert_eq!(mask_wall_time(&a), mask_wall_time(&b), "log {name} differs between reruns");

        let status = bin().arg("replay").arg(run_a.join(&name)).status().unwrap();
        assert_eq!(status.code(), Some(0), "replay of {name} failed");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "two runs plus replays took {elapsed:?}");
    pass("1 (determinism)");
}

// ---------------------------------------------------------------------------
// 2. Smoothing exactness
// ---------------------------------------------------------------------------

#[test]
fn acceptance_2_smoothing_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5100);
    let alpha = 0.7f64;
    for _ in 0..1000 {
        let d0: f64 = rng.random();
        let steps = rng.random_range(1..=25);
        let sequence: Vec<f64> = (0..steps).map(|_| rng.random()).collect();

        // Implementation path: a real matrix seeded to d0 via one update with
        // alpha = 1 (exact assignment).
        let mut matrix = SuspicionMatrix::new([PlayerId(0), PlayerId(1)]);
        matrix.update(PlayerId(0), PlayerId(1), d0, 1.0).unwrap();
        // Oracle: the displayed recurrence, folded directly.
        let mut oracle = d0;
        for &s in &sequence {
            let step = matrix.update(PlayerId(0), PlayerId(1), s, alpha).unwrap();
            oracle = alpha * s + (1.0 - alpha) * oracle;
            assert_eq!(
                step.updated.to_bits(),
                oracle.to_bits(),
                "matrix and recurrence oracle disagree at the bit level"
            );
        }

        // Closed form under constant input k: |D_n - k| = (1-a)^n |D_0 - k|.
        let k: f64 = rng.random();
        let n: i32 = rng.random_range(1..=20);
        let mut d = d0;
        for _ in 0..n {
            d = alpha * k + (1.0 - alpha) * d;
        }
        let expected = (1.0 - alpha).powi(n) * (d0 - k).abs();
        assert!(
            ((d - k).abs() - expected).abs() < 1e-12,
            "closed form violated: {} vs {}",
            (d - k).abs(),
            expected
        );
    }
    pass("2 (smoothing exactness)");
}

// ---------------------------------------------------------------------------
// 3. Metrics oracle equivalence
// ---------------------------------------------------------------------------

fn roc_oracle(pairs: &[(f64, bool)]) -> Option<f64> {
    let pos: Vec<f64> = pairs.iter().filter(|(_, d)| *d).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = pairs.iter().filter(|(_, d)| !*d).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut score = 0.0;
    for &p in &pos {
        for &n in &neg {
            score += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    Some(score / (pos.len() as f64 * neg.len() as f64))
}

fn auprc_oracle(pairs: &[(f64, bool)]) -> Option<f64> {
    let total_pos = pairs.iter().filter(|(_, d)| *d).count();
    if total_pos == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = pairs.iter().map(|(s, _)| *s).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for &t in &thresholds {
        // Recount from scratch at each threshold.
        let tp = pairs.iter().filter(|&&(s, d)| s >= t && d).count();
        let fp = pairs.iter().filter(|&&(s, d)| s >= t && !d).count();
        let recall = tp as f64 / total_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(area)
}

fn theil_sen_oracle(points: &[(f64, f64)]) -> Option<f64> {
    let mut slopes: Vec<f64> = Vec::new();
    for (i, &(xi, yi)) in points.iter().enumerate() {
        for &(xj, yj) in points.iter().skip(i + 1) {
            if xi != xj {
                slopes.push((yj - yi) / (xj - xi));
            }
        }
    }
    if slopes.is_empty() {
        return None;
    }
    slopes.sort_by(|a, b| a.total_cmp(b));
    let m = slopes.len();
    Some(if m % 2 == 1 { slopes[m / 2] } else { (slopes[m / 2 - 1] + slopes[m / 2]) / 2.0 })
}

#[test]
fn acceptance_3_metric_oracle_equivalence() {
    use werewolf_engine::metrics::{auprc, brier, roc_auc, theil_sen};
    let mut rng = ChaCha8Rng::seed_from_u64(0x0D0C);
    let mut roc_checked = 0;
    let mut pr_checked = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=60);
        // Mixed ties: half the scores land on a coarse grid.
        let pairs: Vec<(f64, bool)> = (0..n)
            .map(|_| {
                let s = if rng.random_bool(0.5) {
                    rng.random_range(0..=10) as f64 / 10.0
                } else {
                    rng.random()
                };
                (s, rng.random_bool(0.4))
            })
            .collect();

        if let Some(expected) = roc_oracle(&pairs) {
            let got = roc_auc(&pairs).unwrap();
            assert!((got - expected).abs() < 1e-12, "roc {got} vs oracle {expected}");
            roc_checked += 1;
        } else {
            assert!(roc_auc(&pairs).is_err());
        }
        if let Some(expected) = auprc_oracle(&pairs) {
            let got = auprc(&pairs).unwrap();
            assert!((got - expected).abs() < 1e-12, "auprc {got} vs oracle {expected}");
            pr_checked += 1;
        } else {
            assert!(auprc(&pairs).is_err());
        }

        // Brier against a direct mean.
        let direct: f64 = pairs
            .iter()
            .map(|&(s, d)| (s - if d { 1.0 } else { 0.0 }).powi(2))
            .sum::<f64>()
            / pairs.len() as f64;
        assert!((brier(&pairs).unwrap() - direct).abs() < 1e-15);

        // Theil–Sen against the all-pairs oracle, exactly.
        let points: Vec<(f64, f64)> = (0..rng.random_range(2..=12))
            .map(|i| {
                let x = if rng.random_bool(0.2) { (i / 2) as f64 } else { i as f64 };
                (x, rng.random_range(-10.0..10.0))
            })
            .collect();
        assert_eq!(theil_sen(&points), theil_sen_oracle(&points));
    }
    assert!(roc_checked >= 150, "tie mix starved the ROC check ({roc_checked})");
    assert!(pr_checked >= 150);
    pass("3 (metric oracle equivalence)");
}

// ---------------------------------------------------------------------------
// 4. Confusion arithmetic
// ---------------------------------------------------------------------------

#[test]
fn acceptance_4_confusion_arithmetic() {
    let counts = ConfusionCounts { true_pos: 702, true_neg: 270, false_pos: 213, false_neg: 526 };
    let precision = counts.precision().unwrap();
    let accuracy = counts.accuracy().unwrap();
    assert!((precision - 0.767).abs() <= 0.001, "precision {precision}");
    assert!((accuracy - 0.568).abs() <= 0.001, "accuracy {accuracy}");

    // The divergence note ships in every rendered report.
    let games: Vec<GameData> = run_mock_games(2, 400).into_iter().map(|(_, g)| g).collect();
    let report = run_report(&games).unwrap();
    assert!(report.to_markdown().contains(ACCURACY_FOOTNOTE));
    assert!(ACCURACY_FOOTNOTE.contains("standard formulas"));
    pass("4 (confusion arithmetic)");
}

// ---------------------------------------------------------------------------
// 5. Trend recovery on synthetic logs
// ---------------------------------------------------------------------------

/// Build a minimal but schema-complete log: fixed roster, six rounds, four
/// statements per round (two by a werewolf, two by a villager), judged by all
/// seven observers with controlled suspicion scores.
fn synthetic_game(seed: u64, game_index: u64) -> Vec<EventRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (game_index << 20));
    let mut sink = MemorySink::new(format!("synth{game_index:04}"));
    let config = GameConfig { seed: game_index, ..GameConfig::default() };

    let names = ["Ava", "Ben", "Chloe", "Dara", "Emma", "Felix", "Grace", "Raj"];
    let roles = [
        Role::Villager,
        Role::Villager,
        Role::Villager,
        Role::Villager,
        Role::Werewolf,
        Role::Werewolf,
        Role::Seer,
        Role::Doctor,
    ];
    let roster: Vec<RosterEntry> = names
        .iter()
        .enumerate()
        .map(|(i, n)| RosterEntry { id: PlayerId(i as u8), name: n.to_string() })
        .collect();
    sink.append(
        Visibility::Public,
        Event::GameStarted(GameStartedPayload {
            game_id: sink.game_id().to_string(),
            backend: BackendKind::Mock,
            config,
            roster,
        }),
    )
    .unwrap();
    for (i, role) in roles.iter().enumerate() {
        sink.append(
            Visibility::Researcher,
            Event::RoleAssigned(RoleAssignedPayload {
                player: PlayerId(i as u8),
                name: names[i].to_string(),
                role: *role,
            }),
        )
        .unwrap();
    }

    let mut statement_id = 0u32;
    for round in 1..=6u32 {
        // Per-(game, round) offsets shared by all statements in the round.
        let wolf_noise: f64 = rng.random_range(-0.03..0.03);
        let villager_noise: f64 = rng.random_range(-0.03..0.03);
        for (speaker, base) in [
            (PlayerId(4), 0.52 + 0.016 * (round - 1) as f64 + wolf_noise),
            (PlayerId(0), 0.45 + villager_noise),
            (PlayerId(5), 0.52 + 0.016 * (round - 1) as f64 + wolf_noise),
            (PlayerId(1), 0.45 + villager_noise),
        ] {
            statement_id += 1;
            let stmt = Statement {
                id: StatementId(statement_id),
                speaker,
                round,
                phase: Phase::DayDebate,
                turn_index: 0,
                text: format!("statement {statement_id}"),
            };
            sink.append(Visibility::Public, Event::StatementMade(stmt.clone())).unwrap();
            let speaker_is_wolf = roles[speaker.0 as usize] == Role::Werewolf;
            sink.append(
                Visibility::Researcher,
                Event::SelfAnalysisRecorded(SelfAnalysis {
                    statement: stmt.id,
                    deceptive: speaker_is_wolf,
                    confidence: 0.9,
                    dtype: if speaker_is_wolf { DeceptionType::Misdirection } else { DeceptionType::None },
                    reasoning: String::new(),
                }),
            )
            .unwrap();
            for observer in (0..8u8).map(PlayerId).filter(|&o| o != speaker) {
                let s = (base + rng.random_range(-0.01..0.01)).clamp(0.0, 1.0);
                sink.append(
                    Visibility::Researcher,
                    Event::PeerAnalysisRecorded(PeerAnalysis {
                        statement: stmt.id,
                        observer,
                        deceptive: s > 0.5,
                        confidence: 0.7,
                        dtype_guess: DeceptionType::None,
                        suspicion: s,
                        reasoning: String::new(),
                    }),
                )
                .unwrap();
            }
        }
    }
    sink.records
}

#[test]
fn acceptance_5_trend_recovery() {
    let games: Vec<GameData> = (0..100)
        .map(|i| extract_game(&synthetic_game(0x7EDD, i)).unwrap())
        .collect();
    let report = run_report(&games).unwrap();

    let wolf_slope = report.trends.slopes_pp_per_round[&Role::Werewolf].expect("wolf slope");
    let villager_slope = report.trends.slopes_pp_per_round[&Role::Villager].expect("villager slope");
    assert!((wolf_slope - 1.6).abs() <= 0.2, "werewolf slope {wolf_slope} pp/round");
    assert!(villager_slope.abs() <= 0.2, "villager slope {villager_slope} pp/round");

    // 95% CIs from the emitted figure CSV: separated from round 3 onward.
    let csv = figure_csv(&report.trends);
    let mut cells: std::collections::BTreeMap<(u32, String), (f64, f64)> = Default::default();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let round: u32 = fields[0].parse().unwrap();
        let role = fields[1].to_string();
        let mean: f64 = fields[2].parse().unwrap();
        let sem: f64 = fields[3].parse().unwrap();
        cells.insert((round, role), (mean, sem));
    }
    for round in 3..=6u32 {
        let (wolf_mean, wolf_sem) = cells[&(round, "Werewolf".to_string())];
        let (villager_mean, villager_sem) = cells[&(round, "Villager".to_string())];
        let wolf_low = wolf_mean - CI95_Z * wolf_sem;
        let villager_high = villager_mean + CI95_Z * villager_sem;
        assert!(
            wolf_low > villager_high,
            "round {round}: CIs overlap (wolf ≥ {wolf_low}, villager ≤ {villager_high})"
        );
    }
    pass("5 (trend recovery)");
}

// ---------------------------------------------------------------------------
// 6. Report completeness
// ---------------------------------------------------------------------------

#[test]
fn acceptance_6_report_completeness() {
    let games: Vec<GameData> = run_mock_games(20, 100).into_iter().map(|(_, g)| g).collect();
    let report = run_report(&games).unwrap();

    let absent = report.absent_cells();
    assert!(absent.is_empty(), "absent value cells: {absent:?}");

    let md = report.to_markdown();
    for section in [
        "## Per-role statistics",
        "## Cross-perception matrix (final smoothed suspicion)",
        "## Cross-perception matrix (raw mean suspicion)",
        "## Observer accuracy",
        "## Calibration and threshold metrics",
        "## Suspicion trends by round",
        "## Deception-type effects",
    ] {
        assert!(md.contains(section), "missing section {section}");
    }
    // Every deception type occurs in 20 mock games.
    for row in &report.types {
        assert!(row.count > 0, "type {} has no statements", row.dtype);
    }
    pass("6 (report completeness)");
}

// ---------------------------------------------------------------------------
// 7. Information hygiene
// ---------------------------------------------------------------------------

#[test]
fn acceptance_7_information_hygiene() {
    let games = run_mock_games(20, 200);
    let mut prompts = 0usize;
    for (records, _) in &games {
        prompts += records
            .iter()
            .filter(|r| matches!(r.event, Event::PromptIssued(_)))
            .count();
        let violations = scan_prompt_hygiene(records);
        assert!(violations.is_empty(), "{violations:?}");
    }
    assert!(prompts > 5_000, "scan covered only {prompts} prompts");
    pass("7 (information hygiene)");
}

// ---------------------------------------------------------------------------
// 8. Robustness under log mutations
// ---------------------------------------------------------------------------

fn fresh_run(dir: &Path) -> PathBuf {
    let out = dir.join("run");
    let status = bin()
        .args(["run", "--games", "1", "--mode", "mock", "--seed", "9"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    out.join("g0000.ndjson")
}

#[test]
fn acceptance_8_mutation_robustness() {
    let dir = tempfile::tempdir().unwrap();
    let clean = fresh_run(dir.path());
    let text = std::fs::read_to_string(&clean).unwrap();

    // (a) One edited suspicion value → replay mismatch, exit 5, field named.
    let edited_path = dir.path().join("edited.ndjson");
    let mut edited: Vec<String> = text.lines().map(str::to_string).collect();
    let idx = edited
        .iter()
        .position(|l| l.contains("\"kind\":\"SuspicionUpdated\""))
        .expect("log has suspicion updates");
    let mut value: serde_json::Value = serde_json::from_str(&edited[idx]).unwrap();
    value["payload"]["updated"] = serde_json::json!(0.123456789);
    edited[idx] = value.to_string();
    std::fs::write(&edited_path, edited.join("\n") + "\n").unwrap();
    let output = bin().arg("replay").arg(&edited_path).output().unwrap();
    assert_eq!(output.status.code(), Some(5));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("SuspicionMatrix"), "diagnostic: {stderr}");

    // (b) A gapped sequence → validation violation naming expected vs found.
    let gapped_path = dir.path().join("gapped.ndjson");
    let gapped: Vec<&str> = text.lines().enumerate().filter(|(i, _)| *i != 5).map(|(_, l)| l).collect();
    std::fs::write(&gapped_path, gapped.join("\n") + "\n").unwrap();
    let output = bin().arg("validate").arg(&gapped_path).output().unwrap();
    assert_eq!(output.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("expected seq 6"), "diagnostic: {stdout}");
    assert!(stdout.contains("found 7"), "diagnostic: {stdout}");

    // (c) One malformed line → exactly one violation with file:line.
    let malformed_path = dir.path().join("malformed.ndjson");
    let mut malformed: Vec<String> = text.lines().map(str::to_string).collect();
    malformed.insert(3, "{definitely not json".to_string());
    std::fs::write(&malformed_path, malformed.join("\n") + "\n").unwrap();
    let output = bin().arg("validate").arg(&malformed_path).output().unwrap();
    assert_eq!(output.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(
        stdout.lines().filter(|l| l.contains("unparseable")).count(),
        1,
        "diagnostics: {stdout}"
    );
    assert!(stdout.contains("malformed.ndjson:line 4"), "diagnostics: {stdout}");

    // (d) A truncated file → partial replay with its own exit code.
    let truncated_path = dir.path().join("truncated.ndjson");
    std::fs::write(&truncated_path, &text.as_bytes()[..text.len() * 4 / 5]).unwrap();
    let output = bin().arg("replay").arg(&truncated_path).output().unwrap();
    assert_eq!(output.status.code(), Some(6));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("partial replay"), "report: {stdout}");

    pass("8 (mutation robustness)");
}

// ---------------------------------------------------------------------------
// 9. Game-rule properties
// ---------------------------------------------------------------------------

#[test]
fn acceptance_9_game_rule_properties() {
    // Exhaustive vote enumeration for |living| <= 5: exile iff strict majority.
    for n in 1usize..=5 {
        let living: BTreeSet<PlayerId> = (0..n as u8).map(PlayerId).collect();
        let mut choice = vec![0usize; n];
        loop {
            let votes: Vec<Vote> = (0..n)
                .map(|voter| {
                    let options: Vec<Option<PlayerId>> = std::iter::once(None)
                        .chain(
                            (0..n as u8)
                                .map(PlayerId)
                                .filter(|&t| t != PlayerId(voter as u8))
                                .map(Some),
                        )
                        .collect();
                    Vote { voter: PlayerId(voter as u8), target: options[choice[voter]] }
                })
                .collect();
            let mut counts = std::collections::BTreeMap::new();
            for v in &votes {
                if let Some(t) = v.target {
                    *counts.entry(t).or_insert(0usize) += 1;
                }
            }
            let oracle = counts.iter().find(|(_, &c)| 2 * c > n).map(|(&t, _)| t);
            assert_eq!(tally_votes(&votes, &living).unwrap(), oracle);

            let mut i = 0;
            loop {
                if i == n {
                    break;
                }
                choice[i] += 1;
                if choice[i] < n {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }

    // Night protection over the full 8x8 (target, protect) grid.
    let base = new_game(GameConfig::with_seed(77)).unwrap();
    let seer = base.living_with_role(Role::Seer).unwrap();
    for target in 0..8u8 {
        for protect in 0..8u8 {
            let mut state = base.clone();
            let seer_target = state.living().find(|p| p.id != seer).unwrap().id;
            let actions = NightActions {
                wolf_target: Some(PlayerId(target)),
                doctor_protect: Some(PlayerId(protect)),
                seer_target: Some(seer_target),
            };
            match resolve_night(&mut state, &actions) {
                Ok(outcome) => {
                    assert_eq!(outcome.protected_save, target == protect);
                    assert_eq!(outcome.eliminated.is_none(), target == protect);
                }
                Err(_) => {
                    assert!(base.player(PlayerId(target)).unwrap().role.is_wolf());
                }
            }
        }
    }
    pass("9 (game-rule properties)");
}
