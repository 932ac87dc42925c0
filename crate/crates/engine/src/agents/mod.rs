//! Agent behavior: role-scoped contexts, decision requests, the deterministic
//! mock backend, the HTTP model gateway, and malformed-output repair.
//!
//! Both backends speak the same contract: given a context and a prompt they
//! return a raw reply string, which is always logged verbatim before the
//! engine parses (and, when needed, repairs) it into a decision.

mod context;
mod gateway;
mod hygiene;
mod mock;
mod prompts;
mod repair;

pub use context::{context_from_log, ContextError};
pub use gateway::{GatewayConfig, ModelGateway};
pub use hygiene::{scan_prompt_hygiene, HygieneViolation};
pub use mock::{mock_peer_analysis, mock_self_analysis, MockBackend, ACCUSE_CUES, CLAIM_CUES, HEDGE_CUES};
pub use prompts::build_prompt;
pub use repair::{canonical_reply, repair_output, Repaired};

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::debate::Bid;
use crate::deception::{PeerAnalysis, SelfAnalysis, Statement};
use crate::game::{Phase, PlayerId, Role, Winner};
use crate::log::{BackendKind, DecisionTag};

/// Number of recent public history items carried into a context (and so into
/// prompts). Fixed so regenerated contexts match live ones exactly.
pub const HISTORY_WINDOW: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerRef {
    pub id: PlayerId,
    pub name: String,
}

/// A public, prompt-renderable item of game history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HistoryItem {
    Night { round: u32, eliminated: Option<PlayerId>, saved: bool },
    Statement { round: u32, speaker: PlayerId, text: String },
    Votes { round: u32, pairs: Vec<(PlayerId, Option<PlayerId>)> },
    Exile { round: u32, exiled: Option<PlayerId> },
    Victory { winner: Winner },
}

impl HistoryItem {
    /// Map a public event to its history item, if it contributes one. Live
    /// context building and log-based regeneration share this function.
    pub fn from_public_event(event: &crate::log::Event) -> Option<HistoryItem> {
        use crate::log::Event;
        match event {
            Event::NightActionsResolved(p) => Some(HistoryItem::Night {
                round: p.round,
                eliminated: p.eliminated,
                saved: p.protected_save,
            }),
            Event::StatementMade(s) => Some(HistoryItem::Statement {
                round: s.round,
                speaker: s.speaker,
                text: s.text.clone(),
            }),
            Event::VotesCast(p) => Some(HistoryItem::Votes {
                round: p.round,
                pairs: p.votes.iter().map(|v| (v.voter, v.target)).collect(),
            }),
            Event::ExileResolved(p) => Some(HistoryItem::Exile { round: p.round, exiled: p.exiled }),
            Event::VictoryDeclared(p) => Some(HistoryItem::Victory { winner: p.winner }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeerResult {
    pub round: u32,
    pub target: PlayerId,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionRecord {
    pub round: u32,
    pub target: PlayerId,
}

/// Role-scoped night knowledge. Anything outside an agent's entitlement is
/// structurally absent, not merely hidden at render time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NightKnowledge {
    Villager,
    Werewolf { partner: Option<PlayerRef> },
    Seer { results: Vec<SeerResult> },
    Doctor { protected: Vec<ProtectionRecord> },
}

/// Everything an agent may see when making one decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentContext {
    pub player: PlayerId,
    pub name: String,
    pub role: Role,
    pub round: u32,
    pub phase: Phase,
    /// Full public roster; names are public from game start.
    pub players: Vec<PlayerRef>,
    pub living: BTreeSet<PlayerId>,
    /// Most recent public events, capped at [`HISTORY_WINDOW`].
    pub history: Vec<HistoryItem>,
    /// The agent's own accumulated private notes.
    pub scratchpad: String,
    pub night_knowledge: NightKnowledge,
    /// The agent's current smoothed suspicion of every other player.
    pub suspicion_row: BTreeMap<PlayerId, f64>,
}

impl AgentContext {
    pub fn name_of(&self, id: PlayerId) -> &str {
        self.players
            .iter()
            .find(|p| p.id == id)
            .map(|p| p.name.as_str())
            .unwrap_or("?")
    }

    pub fn living_others(&self) -> Vec<PlayerId> {
        self.living.iter().copied().filter(|&p| p != self.player).collect()
    }
}

/// What the engine is asking the agent to produce.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionRequest {
    NightAction,
    Bid,
    Utterance { turn_index: u32 },
    SelfAssessment { statement: Statement },
    PeerAssessment { statement: Statement },
    Vote,
}

impl DecisionRequest {
    pub fn tag(&self) -> DecisionTag {
        match self {
            DecisionRequest::NightAction => DecisionTag::NightAction,
            DecisionRequest::Bid => DecisionTag::Bid,
            DecisionRequest::Utterance { .. } => DecisionTag::Utterance,
            DecisionRequest::SelfAssessment { .. } => DecisionTag::SelfAnalysis,
            DecisionRequest::PeerAssessment { .. } => DecisionTag::PeerAnalysis,
            DecisionRequest::Vote => DecisionTag::Vote,
        }
    }

    pub fn statement_id(&self) -> Option<crate::deception::StatementId> {
        match self {
            DecisionRequest::SelfAssessment { statement } | DecisionRequest::PeerAssessment { statement } => {
                Some(statement.id)
            }
            _ => None,
        }
    }
}

/// A parsed agent decision; the variant always matches the request.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentDecision {
    NightAction { target: PlayerId },
    Bid(Bid),
    Utterance { text: String, scratchpad: String },
    SelfAnalysis(SelfAnalysis),
    PeerAnalysis(PeerAnalysis),
    Vote { target: Option<PlayerId> },
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("model endpoint unreachable after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("model endpoint rejected the request with status {status}")]
    Rejected { status: u16 },
    #[error("gateway configuration invalid: {0}")]
    Config(String),
}

/// A decision backend. Implementations must be deterministic given the same
/// context, request, and RNG state (the gateway is exempt: determinism in
/// model mode is up to the endpoint).
pub trait AgentBackend {
    fn kind(&self) -> BackendKind;

    /// Produce the raw reply for one decision. The caller logs it verbatim
    /// and then parses/repairs it.
    fn reply(
        &mut self,
        ctx: &AgentContext,
        req: &DecisionRequest,
        prompt: &str,
        rng: &mut ChaCha8Rng,
    ) -> Result<String, BackendError>;
}
