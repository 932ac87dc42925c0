//! Append-only NDJSON event streams with periodic state snapshots.
//!
//! One record per line, sequence numbers gapless from 1, every record tagged
//! with a visibility scope. Timestamps are recorded but excluded from all
//! equality and determinism checks.

mod reader;
mod replay;
mod sink;
mod time;

pub use reader::{read_log, validate_file, validate_records, ParsedLog, ReadLogError, Violation};
pub use replay::{replay, ReplayError, ReplayOutcome};
pub use sink::{EventSink, FileSink, MemorySink};
pub use time::now_iso8601;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::GameConfig;
use crate::deception::{PeerAnalysis, SelfAnalysis, Statement, StatementId, SuspicionMatrix};
use crate::game::{GameState, Phase, PlayerId, Role, Vote, Winner};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("record serialization failed: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("sequence violation: expected {expected}, found {found}")]
    SeqViolation { expected: u64, found: u64 },
}

/// Who may see a record. Researchers reading the raw file see everything;
/// the tags exist so an agent-visible view can be reconstructed exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "snake_case")]
pub enum Visibility {
    Public,
    Researcher,
    Role { role: Role },
    Private { player: PlayerId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Mock,
    ModelGateway,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendKind::Mock => f.write_str("mock"),
            BackendKind::ModelGateway => f.write_str("llm"),
        }
    }
}

/// Decision point an agent was asked to resolve; tags prompt/output records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionTag {
    NightAction,
    Bid,
    Utterance,
    SelfAnalysis,
    PeerAnalysis,
    Vote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: PlayerId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameStartedPayload {
    pub game_id: String,
    pub backend: BackendKind,
    pub config: GameConfig,
    pub roster: Vec<RosterEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleAssignedPayload {
    pub player: PlayerId,
    pub name: String,
    pub role: Role,
}

/// Night resolution. The same kind is emitted several times with different
/// visibility scopes; fields a scope must not see are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NightPayload {
    pub round: u32,
    pub eliminated: Option<PlayerId>,
    pub protected_save: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wolf_proposals: Option<Vec<WolfProposal>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wolf_target: Option<PlayerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doctor_protect: Option<PlayerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seer_target: Option<PlayerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seer_learned: Option<Role>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolfProposal {
    pub wolf: PlayerId,
    pub target: PlayerId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidRecord {
    pub player: PlayerId,
    pub value: u8,
    pub credibility: f64,
    pub effective: f64,
    pub mentions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidsPayload {
    pub round: u32,
    pub turn_index: u32,
    pub bids: Vec<BidRecord>,
    pub order: Vec<PlayerId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptPayload {
    pub player: PlayerId,
    pub decision: DecisionTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statement: Option<StatementId>,
    /// Omitted when prompt-body logging is disabled in config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawOutputPayload {
    pub player: PlayerId,
    pub decision: DecisionTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statement: Option<StatementId>,
    /// Verbatim backend reply, logged before any parsing or repair.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairPayload {
    pub player: PlayerId,
    pub decision: DecisionTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statement: Option<StatementId>,
    /// Field names that fell back to conservative defaults.
    pub defaulted: Vec<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspicionUpdatedPayload {
    pub observer: PlayerId,
    pub target: PlayerId,
    pub statement: StatementId,
    /// The observer's raw suspicion score for this statement.
    pub suspicion: f64,
    pub previous: f64,
    pub updated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotesPayload {
    pub round: u32,
    pub votes: Vec<Vote>,
    pub tally: BTreeMap<PlayerId, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExilePayload {
    pub round: u32,
    pub exiled: Option<PlayerId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePayload {
    pub from: Phase,
    pub to: Phase,
    pub round: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPayload {
    pub state: GameState,
    pub matrix: SuspicionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictoryPayload {
    pub winner: Winner,
    pub round: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortPayload {
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Event {
    GameStarted(GameStartedPayload),
    RoleAssigned(RoleAssignedPayload),
    NightActionsResolved(NightPayload),
    BidsCollected(BidsPayload),
    PromptIssued(PromptPayload),
    RawOutput(RawOutputPayload),
    RepairApplied(RepairPayload),
    StatementMade(Statement),
    SelfAnalysisRecorded(SelfAnalysis),
    PeerAnalysisRecorded(PeerAnalysis),
    SuspicionUpdated(SuspicionUpdatedPayload),
    VotesCast(VotesPayload),
    ExileResolved(ExilePayload),
    PhaseAdvanced(PhasePayload),
    StateSnapshot(SnapshotPayload),
    VictoryDeclared(VictoryPayload),
    GameAborted(AbortPayload),
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::GameStarted(_) => "GameStarted",
            Event::RoleAssigned(_) => "RoleAssigned",
            Event::NightActionsResolved(_) => "NightActionsResolved",
            Event::BidsCollected(_) => "BidsCollected",
            Event::PromptIssued(_) => "PromptIssued",
            Event::RawOutput(_) => "RawOutput",
            Event::RepairApplied(_) => "RepairApplied",
            Event::StatementMade(_) => "StatementMade",
            Event::SelfAnalysisRecorded(_) => "SelfAnalysisRecorded",
            Event::PeerAnalysisRecorded(_) => "PeerAnalysisRecorded",
            Event::SuspicionUpdated(_) => "SuspicionUpdated",
            Event::VotesCast(_) => "VotesCast",
            Event::ExileResolved(_) => "ExileResolved",
            Event::PhaseAdvanced(_) => "PhaseAdvanced",
            Event::StateSnapshot(_) => "StateSnapshot",
            Event::VictoryDeclared(_) => "VictoryDeclared",
            Event::GameAborted(_) => "GameAborted",
        }
    }
}

/// One NDJSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub game_id: String,
    pub seq: u64,
    /// ISO-8601 UTC; excluded from determinism checks.
    pub wall_time: String,
    pub visibility: Visibility,
    #[serde(flatten)]
    pub event: Event,
}

impl EventRecord {
    /// Whether this record belongs to the information set of `player`
    /// holding `role`: public records, records scoped to the role or the
    /// player, and the player's own role assignment.
    pub fn visible_to(&self, player: PlayerId, role: Role) -> bool {
        match self.visibility {
            Visibility::Public => true,
            Visibility::Role { role: r } => r == role,
            Visibility::Private { player: p } => p == player,
            Visibility::Researcher => {
                matches!(&self.event, Event::RoleAssigned(a) if a.player == player)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trips_with_kind_and_payload_fields() {
        let record = EventRecord {
            game_id: "g0000".into(),
            seq: 1,
            wall_time: "1970-01-01T00:00:00.000000Z".into(),
            visibility: Visibility::Public,
            event: Event::PhaseAdvanced(PhasePayload {
                from: Phase::Night,
                to: Phase::DayDebate,
                round: 1,
            }),
        };
        let line = serde_json::to_string(&record).unwrap();
        assert!(line.contains("\"kind\":\"PhaseAdvanced\""));
        assert!(line.contains("\"payload\""));
        assert!(!line.contains('\n'));
        let back: EventRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, record);
    }

    #[test]
    fn float_payloads_round_trip_bit_exact() {
        let values = [0.1 + 0.2, 1.0 / 3.0, 0.85, f64::MIN_POSITIVE];
        for v in values {
            let record = EventRecord {
                game_id: "g".into(),
                seq: 1,
                wall_time: String::new(),
                visibility: Visibility::Private { player: PlayerId(1) },
                event: Event::SuspicionUpdated(SuspicionUpdatedPayload {
                    observer: PlayerId(1),
                    target: PlayerId(0),
                    statement: StatementId(1),
                    suspicion: v,
                    previous: v,
                    updated: v,
                }),
            };
            let line = serde_json::to_string(&record).unwrap();
            let back: EventRecord = serde_json::from_str(&line).unwrap();
            match back.event {
                Event::SuspicionUpdated(u) => {
                    assert_eq!(u.suspicion.to_bits(), v.to_bits());
                    assert_eq!(u.updated.to_bits(), v.to_bits());
                }
                _ => panic!("wrong kind"),
            }
        }
    }

    #[test]
    fn visibility_scoping() {
        let rec = |visibility| EventRecord {
            game_id: "g".into(),
            seq: 1,
            wall_time: String::new(),
            visibility,
            event: Event::ExileResolved(ExilePayload { round: 1, exiled: None }),
        };
        assert!(rec(Visibility::Public).visible_to(PlayerId(0), Role::Villager));
        assert!(rec(Visibility::Role { role: Role::Werewolf }).visible_to(PlayerId(0), Role::Werewolf));
        assert!(!rec(Visibility::Role { role: Role::Werewolf }).visible_to(PlayerId(0), Role::Seer));
        assert!(rec(Visibility::Private { player: PlayerId(2) }).visible_to(PlayerId(2), Role::Villager));
        assert!(!rec(Visibility::Private { player: PlayerId(2) }).visible_to(PlayerId(3), Role::Villager));
        assert!(!rec(Visibility::Researcher).visible_to(PlayerId(0), Role::Villager));
    }

    #[test]
    fn own_role_assignment_is_visible() {
        let rec = EventRecord {
            game_id: "g".into(),
            seq: 2,
            wall_time: String::new(),
            visibility: Visibility::Researcher,
            event: Event::RoleAssigned(RoleAssignedPayload {
                player: PlayerId(3),
                name: "Dara".into(),
                role: Role::Seer,
            }),
        };
        assert!(rec.visible_to(PlayerId(3), Role::Seer));
        assert!(!rec.visible_to(PlayerId(4), Role::Villager));
    }
}
