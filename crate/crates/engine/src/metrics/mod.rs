//! Evaluation suite over completed event logs: per-role deception stats,
//! cross-perception matrices, observer accuracy, calibration, temporal
//! trends, and deception-type effects.

mod report;
pub mod stats;

pub use report::{figure_csv, RunReport, ACCURACY_FOOTNOTE};
pub use stats::{auprc, brier, roc_auc, theil_sen, ConfusionCounts, MetricAbsence, CI95_Z};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deception::{DeceptionType, StatementId, SuspicionMatrix};
use crate::game::{PlayerId, Role, Winner};
use crate::log::{BackendKind, Event, EventRecord, Visibility};
use crate::metrics::stats::{mean, sem};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no games to analyze")]
    Empty,
    #[error("mixed backend modes in one report: {a} and {b}")]
    MixedModes { a: BackendKind, b: BackendKind },
    #[error("mixed game settings in one report (config hashes {a} and {b})")]
    MixedConfig { a: String, b: String },
    #[error("game {game_id} is incomplete: {detail}")]
    Incomplete { game_id: String, detail: String },
}

/// One analyzed statement: the speaker's self-label joined to its metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementRow {
    pub id: StatementId,
    pub round: u32,
    pub speaker: PlayerId,
    pub speaker_role: Role,
    pub deceptive: bool,
    pub dtype: DeceptionType,
}

/// One (statement, observer) judgment pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRow {
    pub statement: StatementId,
    pub round: u32,
    pub speaker_role: Role,
    pub observer: PlayerId,
    pub observer_role: Role,
    pub suspicion: f64,
    pub flagged: bool,
    pub speaker_deceptive: bool,
}

/// Everything the metrics need from one game's log.
#[derive(Debug, Clone)]
pub struct GameData {
    pub game_id: String,
    pub seed: u64,
    pub backend: BackendKind,
    pub settings_hash: String,
    pub roles: BTreeMap<PlayerId, Role>,
    pub statements: Vec<StatementRow>,
    pub judgments: Vec<JudgmentRow>,
    pub final_matrix: SuspicionMatrix,
    pub winner: Option<Winner>,
    pub rounds: u32,
}

/// Pull the metric-relevant rows out of one game's records.
pub fn extract_game(records: &[EventRecord]) -> Result<GameData, MetricsError> {
    let game_id = records
        .first()
        .map(|r| r.game_id.clone())
        .unwrap_or_else(|| "<empty>".to_string());
    let incomplete = |detail: String| MetricsError::Incomplete { game_id: game_id.clone(), detail };

    let mut seed = 0;
    let mut backend = None;
    let mut settings_hash = String::new();
    let mut roles: BTreeMap<PlayerId, Role> = BTreeMap::new();
    let mut final_matrix: Option<SuspicionMatrix> = None;
    let mut statements: BTreeMap<StatementId, (u32, PlayerId)> = BTreeMap::new();
    let mut self_labels: BTreeMap<StatementId, (bool, DeceptionType)> = BTreeMap::new();
    let mut peer_rows: Vec<(StatementId, PlayerId, f64, bool)> = Vec::new();
    let mut winner = None;
    let mut rounds = 0u32;

    for record in records {
        match &record.event {
            Event::GameStarted(p) => {
                seed = p.config.seed;
                backend = Some(p.backend);
                let mut base = p.config.clone();
                base.seed = 0;
                settings_hash = base.content_hash();
                final_matrix = Some(SuspicionMatrix::new(p.roster.iter().map(|e| e.id)));
            }
            Event::RoleAssigned(a) if record.visibility == Visibility::Researcher => {
                roles.insert(a.player, a.role);
            }
            Event::StatementMade(s) => {
                statements.insert(s.id, (s.round, s.speaker));
                rounds = rounds.max(s.round);
            }
            Event::SelfAnalysisRecorded(a) => {
                self_labels.insert(a.statement, (a.deceptive, a.dtype));
            }
            Event::PeerAnalysisRecorded(a) => {
                peer_rows.push((a.statement, a.observer, a.suspicion, a.deceptive));
            }
            Event::SuspicionUpdated(u) => {
                // The recorded values are authoritative here; replay is the
                // path that re-derives and cross-checks them.
                if let Some(m) = final_matrix.as_mut() {
                    m.set_exact(u.observer, u.target, u.updated);
                }
            }
            Event::NightActionsResolved(p) if record.visibility == Visibility::Researcher => {
                rounds = rounds.max(p.round);
            }
            Event::VictoryDeclared(p) => {
                winner = Some(p.winner);
            }
            _ => {}
        }
    }

    let backend = backend.ok_or_else(|| incomplete("missing GameStarted record".into()))?;
    let final_matrix = final_matrix.expect("set alongside backend");
    if roles.is_empty() {
        return Err(incomplete("no role assignments".into()));
    }

    let mut statement_rows = Vec::with_capacity(statements.len());
    for (id, (round, speaker)) in &statements {
        let (deceptive, dtype) = self_labels
            .get(id)
            .copied()
            .ok_or_else(|| incomplete(format!("statement {id} has no self-analysis")))?;
        let speaker_role = *roles
            .get(speaker)
            .ok_or_else(|| incomplete(format!("speaker {speaker} has no role assignment")))?;
        statement_rows.push(StatementRow {
            id: *id,
            round: *round,
            speaker: *speaker,
            speaker_role,
            deceptive,
            dtype,
        });
    }

    let mut judgment_rows = Vec::with_capacity(peer_rows.len());
    for (stmt, observer, suspicion, flagged) in peer_rows {
        let (round, speaker) = *statements
            .get(&stmt)
            .ok_or_else(|| incomplete(format!("peer analysis references unknown statement {stmt}")))?;
        let (speaker_deceptive, _) = *self_labels
            .get(&stmt)
            .ok_or_else(|| incomplete(format!("statement {stmt} has no self-analysis")))?;
        judgment_rows.push(JudgmentRow {
            statement: stmt,
            round,
            speaker_role: roles[&speaker],
            observer,
            observer_role: *roles
                .get(&observer)
                .ok_or_else(|| incomplete(format!("observer {observer} has no role assignment")))?,
            suspicion,
            flagged,
            speaker_deceptive,
        });
    }

    Ok(GameData {
        game_id,
        seed,
        backend,
        settings_hash,
        roles,
        statements: statement_rows,
        judgments: judgment_rows,
        final_matrix,
        winner,
        rounds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerRoleStats {
    pub role: Role,
    pub statements: u64,
    pub self_deceptions: u64,
    /// Pooled mean of raw peer suspicion over (statement, observer) pairs.
    pub mean_suspicion: Option<f64>,
    /// Across-game SEM of the per-game means.
    pub suspicion_sem: Option<f64>,
    pub mean_flagged: Option<f64>,
    pub flagged_sem: Option<f64>,
}

/// Per-role statistics over speaker roles.
pub fn per_role_stats(games: &[GameData]) -> Vec<PerRoleStats> {
    Role::ALL
        .into_iter()
        .map(|role| {
            let mut statements = 0u64;
            let mut self_deceptions = 0u64;
            let mut pooled_s = Vec::new();
            let mut pooled_f = Vec::new();
            let mut per_game_s = Vec::new();
            let mut per_game_f = Vec::new();
            for game in games {
                for s in game.statements.iter().filter(|s| s.speaker_role == role) {
                    statements += 1;
                    self_deceptions += s.deceptive as u64;
                }
                let game_s: Vec<f64> = game
                    .judgments
                    .iter()
                    .filter(|j| j.speaker_role == role)
                    .map(|j| j.suspicion)
                    .collect();
                let game_f: Vec<f64> = game
                    .judgments
                    .iter()
                    .filter(|j| j.speaker_role == role)
                    .map(|j| j.flagged as u8 as f64)
                    .collect();
                pooled_s.extend_from_slice(&game_s);
                pooled_f.extend_from_slice(&game_f);
                if let Some(m) = mean(&game_s) {
                    per_game_s.push(m);
                }
                if let Some(m) = mean(&game_f) {
                    per_game_f.push(m);
                }
            }
            PerRoleStats {
                role,
                statements,
                self_deceptions,
                mean_suspicion: mean(&pooled_s),
                suspicion_sem: sem(&per_game_s),
                mean_flagged: mean(&pooled_f),
                flagged_sem: sem(&per_game_f),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossMode {
    /// Final smoothed suspicion values, averaged over player pairs.
    Smoothed,
    /// Raw per-statement suspicion scores, averaged over judgment pairs.
    RawMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPerception {
    pub mode: CrossMode,
    /// cells[observer_role][target_role]; distinct-player same-role pairs are
    /// included, self-pairs are excluded by construction.
    pub cells: BTreeMap<Role, BTreeMap<Role, Option<f64>>>,
    /// Role pairs no roster in the set can realize with distinct players
    /// (e.g. seer→seer with a single seer). These render as n/a and are not
    /// counted as absent values.
    pub not_applicable: Vec<(Role, Role)>,
}

pub fn cross_perception(games: &[GameData], mode: CrossMode) -> CrossPerception {
    let mut sums: BTreeMap<(Role, Role), (f64, u64)> = BTreeMap::new();
    for game in games {
        match mode {
            CrossMode::Smoothed => {
                for (observer, target, value) in game.final_matrix.pairs() {
                    let key = (game.roles[&observer], game.roles[&target]);
                    let entry = sums.entry(key).or_insert((0.0, 0));
                    entry.0 += value;
                    entry.1 += 1;
                }
            }
            CrossMode::RawMean => {
                for j in &game.judgments {
                    let key = (j.observer_role, j.speaker_role);
                    let entry = sums.entry(key).or_insert((0.0, 0));
                    entry.0 += j.suspicion;
                    entry.1 += 1;
                }
            }
        }
    }

    let mut realizable: BTreeSet<(Role, Role)> = BTreeSet::new();
    for game in games {
        let mut counts: BTreeMap<Role, u32> = BTreeMap::new();
        for role in game.roles.values() {
            *counts.entry(*role).or_insert(0) += 1;
        }
        for observer_role in Role::ALL {
            for target_role in Role::ALL {
                let o = counts.get(&observer_role).copied().unwrap_or(0);
                let t = counts.get(&target_role).copied().unwrap_or(0);
                let ok = if observer_role == target_role { o >= 2 } else { o >= 1 && t >= 1 };
                if ok {
                    realizable.insert((observer_role, target_role));
                }
            }
        }
    }

    let mut cells = BTreeMap::new();
    let mut not_applicable = Vec::new();
    for observer_role in Role::ALL {
        let mut row = BTreeMap::new();
        for target_role in Role::ALL {
            let cell = sums
                .get(&(observer_role, target_role))
                .map(|(total, n)| total / *n as f64);
            if !realizable.contains(&(observer_role, target_role)) {
                not_applicable.push((observer_role, target_role));
            }
            row.insert(target_role, cell);
        }
        cells.insert(observer_role, row);
    }
    CrossPerception { mode, cells, not_applicable }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    /// Observer role, or "overall" for the pooled row.
    pub group: String,
    pub counts: ConfusionCounts,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn accuracy_row(group: impl Into<String>, counts: ConfusionCounts) -> AccuracyRow {
    AccuracyRow {
        group: group.into(),
        accuracy: counts.accuracy(),
        precision: counts.precision(),
        recall: counts.recall(),
        f1: counts.f1(),
        counts,
    }
}

/// Observer accuracy against speaker self-labels, grouped by observer role,
/// with a pooled overall row.
pub fn observer_accuracy(games: &[GameData]) -> Vec<AccuracyRow> {
    let mut by_role: BTreeMap<Role, ConfusionCounts> = BTreeMap::new();
    for game in games {
        for j in &game.judgments {
            by_role.entry(j.observer_role).or_default().add(j.flagged, j.speaker_deceptive);
        }
    }
    let mut rows: Vec<AccuracyRow> = Role::ALL
        .into_iter()
        .map(|role| accuracy_row(role.label().to_lowercase(), by_role.get(&role).copied().unwrap_or_default()))
        .collect();
    let mut overall = ConfusionCounts::default();
    for c in by_role.values() {
        overall.merge(c);
    }
    rows.push(accuracy_row("overall", overall));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    /// Observer role, or "overall".
    pub group: String,
    pub pairs: u64,
    pub brier: Option<f64>,
    pub roc_auc: Option<f64>,
    pub auprc: Option<f64>,
    /// Diagnostic for any absent value.
    pub note: Option<String>,
}

fn calibration_from_pairs(group: &str, pairs: &[(f64, bool)]) -> CalibrationRow {
    let mut notes = Vec::new();
    let brier_v = brier(pairs);
    if brier_v.is_none() {
        notes.push("brier: empty input".to_string());
    }
    let roc = match roc_auc(pairs) {
        Ok(v) => Some(v),
        Err(reason) => {
            notes.push(format!("roc_auc: {reason}"));
            None
        }
    };
    let pr = match auprc(pairs) {
        Ok(v) => Some(v),
        Err(reason) => {
            notes.push(format!("auprc: {reason}"));
            None
        }
    };
    CalibrationRow {
        group: group.to_string(),
        pairs: pairs.len() as u64,
        brier: brier_v,
        roc_auc: roc,
        auprc: pr,
        note: if notes.is_empty() { None } else { Some(notes.join("; ")) },
    }
}

/// Suspicion-as-probability quality per observer role: Brier, ROC AUC, AUPRC
/// against speaker self-labels.
pub fn calibration(games: &[GameData]) -> Vec<CalibrationRow> {
    let mut by_role: BTreeMap<Role, Vec<(f64, bool)>> = BTreeMap::new();
    let mut all = Vec::new();
    for game in games {
        for j in &game.judgments {
            by_role.entry(j.observer_role).or_default().push((j.suspicion, j.speaker_deceptive));
            all.push((j.suspicion, j.speaker_deceptive));
        }
    }
    let mut rows: Vec<CalibrationRow> = Role::ALL
        .into_iter()
        .map(|role| {
            calibration_from_pairs(
                &role.label().to_lowercase(),
                by_role.get(&role).map(Vec::as_slice).unwrap_or(&[]),
            )
        })
        .collect();
    rows.push(calibration_from_pairs("overall", &all));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCell {
    pub round: u32,
    pub role: Role,
    /// Mean over games of the per-game mean suspicion toward this role.
    pub mean_suspicion: f64,
    pub sem: Option<f64>,
    pub ci95_half_width: Option<f64>,
    pub games: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedCell {
    pub round: u32,
    pub flagged_fraction: f64,
    pub sem: Option<f64>,
    pub games: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    /// Long-format cells; (round, role) combinations observed in fewer than
    /// two games are omitted rather than zero-filled.
    pub cells: Vec<TrendCell>,
    pub flagged: Vec<FlaggedCell>,
    /// Theil–Sen slope of per-round mean suspicion, in percentage points per
    /// round, per target role.
    pub slopes_pp_per_round: BTreeMap<Role, Option<f64>>,
    pub flagged_slope_pp_per_round: Option<f64>,
}

/// Round-level suspicion trends per target role plus the overall flagged
/// fraction, with across-game SEM and 95% CI half-widths.
pub fn round_trends(games: &[GameData]) -> TrendReport {
    // (round, role) -> per-game means
    let mut suspicion: BTreeMap<(u32, Role), Vec<f64>> = BTreeMap::new();
    let mut flagged: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for game in games {
        let mut local_s: BTreeMap<(u32, Role), Vec<f64>> = BTreeMap::new();
        let mut local_f: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for j in &game.judgments {
            local_s.entry((j.round, j.speaker_role)).or_default().push(j.suspicion);
            local_f.entry(j.round).or_default().push(j.flagged as u8 as f64);
        }
        for (key, values) in local_s {
            suspicion.entry(key).or_default().push(mean(&values).expect("non-empty"));
        }
        for (round, values) in local_f {
            flagged.entry(round).or_default().push(mean(&values).expect("non-empty"));
        }
    }

    let cells: Vec<TrendCell> = suspicion
        .iter()
        .filter(|(_, means)| means.len() >= 2)
        .map(|(&(round, role), means)| {
            let s = sem(means);
            TrendCell {
                round,
                role,
                mean_suspicion: mean(means).expect("non-empty"),
                sem: s,
                ci95_half_width: s.map(|v| CI95_Z * v),
                games: means.len() as u64,
            }
        })
        .collect();

    let flagged_cells: Vec<FlaggedCell> = flagged
        .iter()
        .filter(|(_, means)| means.len() >= 2)
        .map(|(&round, means)| FlaggedCell {
            round,
            flagged_fraction: mean(means).expect("non-empty"),
            sem: sem(means),
            games: means.len() as u64,
        })
        .collect();

    let mut slopes = BTreeMap::new();
    for role in Role::ALL {
        let points: Vec<(f64, f64)> = cells
            .iter()
            .filter(|c| c.role == role)
            .map(|c| (c.round as f64, c.mean_suspicion))
            .collect();
        slopes.insert(role, theil_sen(&points).map(|s| s * 100.0));
    }
    let flagged_points: Vec<(f64, f64)> = flagged_cells
        .iter()
        .map(|c| (c.round as f64, c.flagged_fraction))
        .collect();

    TrendReport {
        cells,
        flagged: flagged_cells,
        slopes_pp_per_round: slopes,
        flagged_slope_pp_per_round: theil_sen(&flagged_points).map(|s| s * 100.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeEffectRow {
    pub dtype: DeceptionType,
    pub count: u64,
    pub mean_suspicion: Option<f64>,
    pub mean_flagged: Option<f64>,
}

/// Peer response grouped by the speaker's self-labeled deception type. All
/// five categories are always present; zero-count rows have absent means.
pub fn type_effects(games: &[GameData]) -> Vec<TypeEffectRow> {
    let mut by_type: BTreeMap<DeceptionType, (u64, Vec<f64>, Vec<f64>)> = DeceptionType::ALL
        .into_iter()
        .map(|t| (t, (0, Vec::new(), Vec::new())))
        .collect();
    for game in games {
        let dtype_of: BTreeMap<StatementId, DeceptionType> =
            game.statements.iter().map(|s| (s.id, s.dtype)).collect();
        for s in &game.statements {
            by_type.get_mut(&s.dtype).expect("all types present").0 += 1;
        }
        for j in &game.judgments {
            let entry = by_type.get_mut(&dtype_of[&j.statement]).expect("all types present");
            entry.1.push(j.suspicion);
            entry.2.push(j.flagged as u8 as f64);
        }
    }
    DeceptionType::ALL
        .into_iter()
        .map(|dtype| {
            let (count, s, f) = &by_type[&dtype];
            TypeEffectRow {
                dtype,
                count: *count,
                mean_suspicion: mean(s),
                mean_flagged: mean(f),
            }
        })
        .collect()
}

/// Assemble the full report. Refuses mixed backend modes and mixed game
/// settings.
pub fn run_report(games: &[GameData]) -> Result<RunReport, MetricsError> {
    if games.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mode = games[0].backend;
    let settings = games[0].settings_hash.clone();
    for g in games {
        if g.backend != mode {
            return Err(MetricsError::MixedModes { a: mode, b: g.backend });
        }
        if g.settings_hash != settings {
            return Err(MetricsError::MixedConfig { a: settings, b: g.settings_hash.clone() });
        }
    }
    let mut games_sorted: Vec<&GameData> = games.iter().collect();
    games_sorted.sort_by(|a, b| a.game_id.cmp(&b.game_id));
    let owned: Vec<GameData> = games_sorted.into_iter().cloned().collect();

    Ok(RunReport::assemble(&owned, mode, settings))
}
