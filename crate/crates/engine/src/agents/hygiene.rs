//! Information-hygiene scanner for assembled prompts.
//!
//! Streams a full (researcher-view) log and flags any prompt that exposes a
//! hidden role pairing or another agent's scratchpad text. Legitimate
//! knowledge is whitelisted: a werewolf may see the other wolf named as a
//! werewolf, and the seer may see results for players already inspected.

use std::collections::{BTreeMap, BTreeSet};

use super::repair::scratchpad_delta;
use crate::game::{PlayerId, Role};
use crate::log::{DecisionTag, Event, EventRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct HygieneViolation {
    pub seq: u64,
    pub player: PlayerId,
    pub detail: String,
}

fn role_word(role: Role) -> &'static str {
    match role {
        Role::Villager => "villager",
        Role::Werewolf => "werewolf",
        Role::Seer => "seer",
        Role::Doctor => "doctor",
    }
}

/// Scan every `PromptIssued` record with a body. Returns all violations; an
/// empty result means no prompt ever paired a foreign player's name with
/// their hidden role on one line, and no prompt contained another agent's
/// scratchpad text.
pub fn scan_prompt_hygiene(records: &[EventRecord]) -> Vec<HygieneViolation> {
    let mut roles: BTreeMap<PlayerId, Role> = BTreeMap::new();
    let mut names: BTreeMap<PlayerId, String> = BTreeMap::new();
    let mut seer_known: BTreeMap<PlayerId, BTreeSet<PlayerId>> = BTreeMap::new();
    let mut scratch_deltas: Vec<(PlayerId, String)> = Vec::new();
    let mut violations = Vec::new();

    for record in records {
        match &record.event {
            Event::RoleAssigned(a) => {
                roles.insert(a.player, a.role);
                names.insert(a.player, a.name.to_lowercase());
            }
            Event::NightActionsResolved(p) => {
                if let Some(target) = p.seer_target {
                    // Attribute to every living seer; the roster has one.
                    for (&pid, &role) in &roles {
                        if role == Role::Seer {
                            seer_known.entry(pid).or_default().insert(target);
                        }
                    }
                }
            }
            Event::RawOutput(p) if p.decision == DecisionTag::Utterance => {
                let delta = scratchpad_delta(&p.raw);
                if !delta.is_empty() {
                    scratch_deltas.push((p.player, delta));
                }
            }
            Event::PromptIssued(p) => {
                let Some(text) = &p.text else { continue };
                let owner = p.player;
                let owner_role = roles.get(&owner).copied();
                let text_lc = text.to_lowercase();

                for (&other, other_role) in &roles {
                    if other == owner {
                        continue;
                    }
                    let legitimate = match (owner_role, other_role) {
                        (Some(Role::Werewolf), Role::Werewolf) => true,
                        (Some(Role::Seer), _) => seer_known
                            .get(&owner)
                            .map(|known| known.contains(&other))
                            .unwrap_or(false),
                        _ => false,
                    };
                    if legitimate {
                        continue;
                    }
                    let name = &names[&other];
                    let word = role_word(*other_role);
                    for line in text_lc.lines() {
                        if line.contains(name.as_str()) && line.contains(word) {
                            violations.push(HygieneViolation {
                                seq: record.seq,
                                player: owner,
                                detail: format!(
                                    "prompt line pairs {} with role {}: {:?}",
                                    name, word, line
                                ),
                            });
                            break;
                        }
                    }
                }

                for (author, delta) in &scratch_deltas {
                    if *author != owner && text.contains(delta.as_str()) {
                        violations.push(HygieneViolation {
                            seq: record.seq,
                            player: owner,
                            detail: format!("prompt contains {author}'s scratchpad text {delta:?}"),
                        });
                    }
                }
            }
            _ => {}
        }
    }
    violations
}
