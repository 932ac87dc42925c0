//! Pure fold over an event stream, reconstructing game state and the
//! suspicion matrix and cross-checking every recorded value on the way.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;
use thiserror::Error;

use super::{Event, EventRecord};
use crate::config::GameConfig;
use crate::deception::{smoothed, SuspicionMatrix};
use crate::game::{GameState, Phase, Player, PlayerId, Role, Winner};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("log has no GameStarted record")]
    MissingStart,
    #[error("sequence gap: expected seq {expected}, found {found}")]
    Gap { expected: u64, found: u64 },
    #[error("no role assignment for {0} before first snapshot")]
    RoleMissing(PlayerId),
    #[error("replay diverged at seq {seq} ({field}): recorded {recorded}, replayed {replayed}")]
    Mismatch { seq: u64, field: String, recorded: String, replayed: String },
    #[error("suspicion update at seq {seq} references unknown pair ({observer}, {target})")]
    UnknownPair { seq: u64, observer: PlayerId, target: PlayerId },
}

#[derive(Debug)]
pub struct ReplayOutcome {
    pub state: GameState,
    pub matrix: SuspicionMatrix,
    pub records: usize,
    pub statements: u32,
    pub snapshots_verified: usize,
    /// True when the log contains a declared result and a snapshot at or
    /// after it; false indicates a partial (truncated or aborted) log.
    pub complete: bool,
}

struct Fold {
    config: GameConfig,
    roster: Vec<(PlayerId, String)>,
    roles: BTreeMap<PlayerId, Role>,
    alive: BTreeSet<PlayerId>,
    round: u32,
    phase: Phase,
    winner: Option<Winner>,
    matrix: SuspicionMatrix,
}

impl Fold {
    fn state(&self) -> Result<GameState, ReplayError> {
        let players = self
            .roster
            .iter()
            .map(|(id, name)| {
                let role = self.roles.get(id).copied().ok_or(ReplayError::RoleMissing(*id))?;
                Ok(Player {
                    id: *id,
                    display_name: name.clone(),
                    role,
                    alive: self.alive.contains(id),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GameState {
            config: self.config.clone(),
            players,
            round: self.round,
            phase: self.phase,
            winner: self.winner,
        })
    }
}

/// Walk two JSON values in lockstep and return the first divergent path as
/// `(path, left, right)`.
fn first_divergence(a: &Value, b: &Value, path: String) -> Option<(String, String, String)> {
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            for (k, va) in ma {
                match mb.get(k) {
                    Some(vb) => {
                        if let Some(d) = first_divergence(va, vb, format!("{path}.{k}")) {
                            return Some(d);
                        }
                    }
                    None => return Some((format!("{path}.{k}"), va.to_string(), "<absent>".into())),
                }
            }
            for k in mb.keys() {
                if !ma.contains_key(k) {
                    return Some((format!("{path}.{k}"), "<absent>".into(), mb[k].to_string()));
                }
            }
            None
        }
        (Value::Array(xa), Value::Array(xb)) => {
            for (i, (va, vb)) in xa.iter().zip(xb.iter()).enumerate() {
                if let Some(d) = first_divergence(va, vb, format!("{path}[{i}]")) {
                    return Some(d);
                }
            }
            if xa.len() != xb.len() {
                return Some((format!("{path}.len"), xa.len().to_string(), xb.len().to_string()));
            }
            None
        }
        _ => {
            if a == b {
                None
            } else {
                Some((path, a.to_string(), b.to_string()))
            }
        }
    }
}

fn compare_snapshot<T: serde::Serialize>(
    seq: u64,
    field: &str,
    recorded: &T,
    replayed: &T,
) -> Result<(), ReplayError> {
    let ra = serde_json::to_value(recorded).expect("serializable");
    let rb = serde_json::to_value(replayed).expect("serializable");
    if let Some((path, rec, rep)) = first_divergence(&ra, &rb, field.to_string()) {
        return Err(ReplayError::Mismatch { seq, field: path, recorded: rec, replayed: rep });
    }
    Ok(())
}

pub fn replay(records: &[EventRecord]) -> Result<ReplayOutcome, ReplayError> {
    let mut fold: Option<Fold> = None;
    let mut statements = 0u32;
    let mut snapshots_verified = 0usize;
    let mut victory_seen = false;
    let mut snapshot_after_victory = false;

    for (expected_seq, rec) in (1u64..).zip(records.iter()) {
        if rec.seq != expected_seq {
            return Err(ReplayError::Gap { expected: expected_seq, found: rec.seq });
        }

        if let Event::GameStarted(p) = &rec.event {
            let roster: Vec<(PlayerId, String)> =
                p.roster.iter().map(|r| (r.id, r.name.clone())).collect();
            let ids: Vec<PlayerId> = roster.iter().map(|(id, _)| *id).collect();
            fold = Some(Fold {
                config: p.config.clone(),
                alive: ids.iter().copied().collect(),
                matrix: SuspicionMatrix::new(ids),
                roster,
                roles: BTreeMap::new(),
                round: 1,
                phase: Phase::Night,
                winner: None,
            });
            continue;
        }
        let fold = fold.as_mut().ok_or(ReplayError::MissingStart)?;

        match &rec.event {
            Event::GameStarted(_) => unreachable!(),
            Event::RoleAssigned(p) => {
                fold.roles.insert(p.player, p.role);
            }
            Event::NightActionsResolved(p) => {
                if let Some(victim) = p.eliminated {
                    fold.alive.remove(&victim);
                }
            }
            Event::ExileResolved(p) => {
                if let Some(exiled) = p.exiled {
                    fold.alive.remove(&exiled);
                }
            }
            Event::PhaseAdvanced(p) => {
                fold.phase = p.to;
                fold.round = p.round;
            }
            Event::VictoryDeclared(p) => {
                fold.winner = Some(p.winner);
                fold.phase = Phase::Ended;
                victory_seen = true;
            }
            Event::SuspicionUpdated(u) => {
                let current = fold.matrix.get(u.observer, u.target).ok_or(ReplayError::UnknownPair {
                    seq: rec.seq,
                    observer: u.observer,
                    target: u.target,
                })?;
                if current.to_bits() != u.previous.to_bits() {
                    return Err(ReplayError::Mismatch {
                        seq: rec.seq,
                        field: "SuspicionMatrix.previous".into(),
                        recorded: format!("{}", u.previous),
                        replayed: format!("{}", current),
                    });
                }
                let recomputed = smoothed(fold.config.alpha, u.suspicion, current);
                if recomputed.to_bits() != u.updated.to_bits() {
                    return Err(ReplayError::Mismatch {
                        seq: rec.seq,
                        field: "SuspicionMatrix.updated".into(),
                        recorded: format!("{}", u.updated),
                        replayed: format!("{}", recomputed),
                    });
                }
                fold.matrix
                    .update(u.observer, u.target, u.suspicion, fold.config.alpha)
                    .map_err(|_| ReplayError::UnknownPair {
                        seq: rec.seq,
                        observer: u.observer,
                        target: u.target,
                    })?;
            }
            Event::StatementMade(_) => statements += 1,
            Event::StateSnapshot(p) => {
                let replayed_state = fold.state()?;
                compare_snapshot(rec.seq, "state", &p.state, &replayed_state)?;
                compare_snapshot(rec.seq, "matrix", &p.matrix, &fold.matrix)?;
                snapshots_verified += 1;
                if victory_seen {
                    snapshot_after_victory = true;
                }
            }
            // No state effect.
            Event::BidsCollected(_)
            | Event::PromptIssued(_)
            | Event::RawOutput(_)
            | Event::RepairApplied(_)
            | Event::SelfAnalysisRecorded(_)
            | Event::PeerAnalysisRecorded(_)
            | Event::VotesCast(_)
            | Event::GameAborted(_) => {}
        }
    }

    let fold = fold.ok_or(ReplayError::MissingStart)?;
    Ok(ReplayOutcome {
        state: fold.state()?,
        matrix: fold.matrix,
        records: records.len(),
        statements,
        snapshots_verified,
        complete: victory_seen && snapshot_after_victory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divergence_reports_first_field() {
        let a = serde_json::json!({"x": 1, "nested": {"y": [1, 2, 3]}});
        let b = serde_json::json!({"x": 1, "nested": {"y": [1, 9, 3]}});
        let d = first_divergence(&a, &b, "root".into()).unwrap();
        assert_eq!(d.0, "root.nested.y[1]");
        assert_eq!(d.1, "2");
        assert_eq!(d.2, "9");
    }

    #[test]
    fn empty_log_is_missing_start() {
        assert!(matches!(replay(&[]), Err(ReplayError::MissingStart)));
    }
}
