//! Rebuild an agent's context from the event log alone.
//!
//! This is the independent route for checking visibility soundness: filtering
//! a log to the records a player may see and folding them must yield exactly
//! the context the live runner handed that player's agent.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::repair::scratchpad_delta;
use super::{
    AgentContext, HistoryItem, NightKnowledge, PlayerRef, ProtectionRecord, SeerResult, HISTORY_WINDOW,
};
use crate::deception::INITIAL_SUSPICION;
use crate::game::{Phase, PlayerId, Role};
use crate::log::{DecisionTag, Event, EventRecord, Visibility};

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("log has no GameStarted record")]
    MissingStart,
    #[error("no role assignment found for {0}")]
    MissingRole(PlayerId),
}

/// Fold the records visible to `player` into the context they would hold at
/// the end of the given prefix.
pub fn context_from_log(records: &[EventRecord], player: PlayerId) -> Result<AgentContext, ContextError> {
    let roster: Vec<PlayerRef> = records
        .iter()
        .find_map(|r| match &r.event {
            Event::GameStarted(p) => Some(
                p.roster
                    .iter()
                    .map(|e| PlayerRef { id: e.id, name: e.name.clone() })
                    .collect(),
            ),
            _ => None,
        })
        .ok_or(ContextError::MissingStart)?;

    let (name, role) = records
        .iter()
        .find_map(|r| match &r.event {
            Event::RoleAssigned(a) if a.player == player => Some((a.name.clone(), a.role)),
            _ => None,
        })
        .ok_or(ContextError::MissingRole(player))?;

    let mut living: BTreeSet<PlayerId> = roster.iter().map(|p| p.id).collect();
    let mut history: Vec<HistoryItem> = Vec::new();
    let mut scratchpad = String::new();
    let mut round = 1u32;
    let mut phase = Phase::Night;
    let mut suspicion_row: BTreeMap<PlayerId, f64> = roster
        .iter()
        .filter(|p| p.id != player)
        .map(|p| (p.id, INITIAL_SUSPICION))
        .collect();
    let mut wolf_partner: Option<PlayerRef> = None;
    let mut seer_results: Vec<SeerResult> = Vec::new();
    let mut protections: Vec<ProtectionRecord> = Vec::new();

    for record in records {
        if !record.visible_to(player, role) {
            continue;
        }
        if record.visibility == Visibility::Public {
            if let Some(item) = HistoryItem::from_public_event(&record.event) {
                history.push(item);
            }
        }
        match &record.event {
            Event::RoleAssigned(a) => {
                if record.visibility == (Visibility::Role { role: Role::Werewolf })
                    && a.player != player
                {
                    wolf_partner = Some(PlayerRef { id: a.player, name: a.name.clone() });
                }
            }
            Event::NightActionsResolved(p) => {
                if let Some(victim) = p.eliminated {
                    living.remove(&victim);
                }
                if let (Some(target), Some(learned)) = (p.seer_target, p.seer_learned) {
                    if record.visibility == (Visibility::Private { player }) {
                        seer_results.push(SeerResult { round: p.round, target, role: learned });
                    }
                }
                if let Some(target) = p.doctor_protect {
                    if record.visibility == (Visibility::Private { player }) {
                        protections.push(ProtectionRecord { round: p.round, target });
                    }
                }
            }
            Event::ExileResolved(p) => {
                if let Some(exiled) = p.exiled {
                    living.remove(&exiled);
                }
            }
            Event::PhaseAdvanced(p) => {
                phase = p.to;
                round = p.round;
            }
            Event::RawOutput(p) if p.player == player && p.decision == DecisionTag::Utterance => {
                let delta = scratchpad_delta(&p.raw);
                if !delta.is_empty() {
                    scratchpad.push_str(&delta);
                    scratchpad.push('\n');
                }
            }
            Event::SuspicionUpdated(u) if u.observer == player => {
                suspicion_row.insert(u.target, u.updated);
            }
            _ => {}
        }
    }

    if history.len() > HISTORY_WINDOW {
        history.drain(..history.len() - HISTORY_WINDOW);
    }

    let night_knowledge = match role {
        Role::Villager => NightKnowledge::Villager,
        Role::Werewolf => NightKnowledge::Werewolf { partner: wolf_partner },
        Role::Seer => NightKnowledge::Seer { results: seer_results },
        Role::Doctor => NightKnowledge::Doctor { protected: protections },
    };

    Ok(AgentContext {
        player,
        name,
        role,
        round,
        phase,
        players: roster,
        living,
        history,
        scratchpad,
        night_knowledge,
        suspicion_row,
    })
}
