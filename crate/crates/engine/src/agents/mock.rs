//! Deterministic mock backend for ablation runs.
//!
//! Decisions come from stable hashes and the game's seeded RNG; analyses come
//! from fixed text-cue rules. The constants are arbitrary by design: this
//! mode validates the plumbing (smoothing, aggregation, logging), not the
//! semantics of deception.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AgentBackend, AgentContext, AgentDecision, BackendError, DecisionRequest};
use crate::debate::Bid;
use crate::deception::{DeceptionType, PeerAnalysis, SelfAnalysis, Statement};
use crate::game::{PlayerId, Role};
use crate::hash::fnv1a_parts;
use crate::log::BackendKind;

pub const HEDGE_CUES: [&str; 4] = ["maybe", "perhaps", "not sure", "possibly"];
pub const ACCUSE_CUES: [&str; 5] = ["suspect", "suspicious", "lying", "liar", "wolf"];
pub const CLAIM_CUES: [&str; 4] = ["i am", "i saw", "i protected", "i investigated"];

fn count_cues(text_lc: &str, cues: &[&str]) -> u32 {
    let mut n = 0;
    for cue in cues {
        let mut rest = text_lc;
        while let Some(pos) = rest.find(cue) {
            n += 1;
            rest = &rest[pos + cue.len()..];
        }
    }
    n
}

fn has_cue(text_lc: &str, cues: &[&str]) -> bool {
    cues.iter().any(|c| text_lc.contains(c))
}

/// Fixed-rule self label. Werewolves always self-report deception, typed by
/// the strongest cue present; other roles admit deception only when hedging.
pub fn mock_self_analysis(statement: &Statement, speaker_role: Role) -> SelfAnalysis {
    let text_lc = statement.text.to_lowercase();
    let claim = has_cue(&text_lc, &CLAIM_CUES);
    let accuse = has_cue(&text_lc, &ACCUSE_CUES);
    let hedge = has_cue(&text_lc, &HEDGE_CUES);

    let (deceptive, dtype, confidence) = if speaker_role == Role::Werewolf {
        let dtype = if claim {
            DeceptionType::Fabrication
        } else if accuse {
            DeceptionType::Misdirection
        } else if hedge {
            DeceptionType::Distortion
        } else {
            DeceptionType::Omission
        };
        (true, dtype, 0.9)
    } else if hedge {
        (true, DeceptionType::Omission, 0.6)
    } else {
        (false, DeceptionType::None, 0.9)
    };

    SelfAnalysis {
        statement: statement.id,
        deceptive,
        confidence,
        dtype,
        reasoning: format!(
            "fixed-rule self label (claim={}, accuse={}, hedge={})",
            claim, accuse, hedge
        ),
    }
}

/// Fixed-rule peer judgment: suspicion from cue counts plus a small stable
/// per-(text, observer) jitter, clamped to [0, 1].
pub fn mock_peer_analysis(statement: &Statement, observer: PlayerId) -> PeerAnalysis {
    let text_lc = statement.text.to_lowercase();
    let accuse_n = count_cues(&text_lc, &ACCUSE_CUES);
    let hedge = has_cue(&text_lc, &HEDGE_CUES);
    let jitter = (fnv1a_parts(&[b"peer", statement.text.as_bytes(), &[observer.0]]) % 11) as f64 / 100.0;
    let suspicion = (0.3 + 0.1 * accuse_n as f64 + if hedge { 0.2 } else { 0.0 } + jitter).clamp(0.0, 1.0);

    PeerAnalysis {
        statement: statement.id,
        observer,
        deceptive: suspicion > 0.5,
        confidence: 0.7,
        dtype_guess: if hedge { DeceptionType::Omission } else { DeceptionType::None },
        suspicion,
        reasoning: format!("fixed-rule peer judgment (accuse={}, hedge={})", accuse_n, hedge),
    }
}

fn pick(rng: &mut ChaCha8Rng, candidates: &[PlayerId]) -> PlayerId {
    candidates[rng.random_range(0..candidates.len())]
}

fn night_candidates(ctx: &AgentContext) -> Vec<PlayerId> {
    match ctx.role {
        // Wolves never target pack members; the partner is the only other
        // wolf an agent can identify, which is exactly the wolf to exclude.
        Role::Werewolf => {
            let partner = match &ctx.night_knowledge {
                super::NightKnowledge::Werewolf { partner } => partner.as_ref().map(|p| p.id),
                _ => None,
            };
            ctx.living
                .iter()
                .copied()
                .filter(|&p| p != ctx.player && Some(p) != partner)
                .collect()
        }
        Role::Doctor => ctx.living.iter().copied().collect(),
        _ => ctx.living_others(),
    }
}

fn mock_utterance(ctx: &AgentContext, turn_index: u32, rng: &mut ChaCha8Rng) -> AgentDecision {
    let others = ctx.living_others();
    let target = pick(rng, &others);
    let target_name = ctx.name_of(target).to_string();
    let h = fnv1a_parts(&[
        b"utterance",
        &[ctx.player.0],
        &ctx.round.to_le_bytes(),
        &turn_index.to_le_bytes(),
    ]);
    // Odd parity selects a hedged template; the next bits pick within group.
    let text = if h & 1 == 1 {
        if (h >> 1) & 1 == 1 {
            format!("maybe {} is lying", target_name)
        } else {
            format!("perhaps {} can explain", target_name)
        }
    } else {
        match (h >> 1) % 3 {
            0 => format!("I suspect {}", target_name),
            1 => format!("I trust {}", target_name),
            _ => format!("I am certain about {}", target_name),
        }
    };
    let scratchpad = format!("[{} r{}t{}] watching {}", ctx.name, ctx.round, turn_index, target_name);
    AgentDecision::Utterance { text, scratchpad }
}

/// Deterministic decision rules for every request kind.
pub fn mock_decide(ctx: &AgentContext, req: &DecisionRequest, rng: &mut ChaCha8Rng) -> AgentDecision {
    match req {
        DecisionRequest::NightAction => AgentDecision::NightAction { target: pick(rng, &night_candidates(ctx)) },
        DecisionRequest::Bid => {
            let value = (fnv1a_parts(&[b"bid", &[ctx.player.0], &ctx.round.to_le_bytes()]) % 11) as u8;
            AgentDecision::Bid(Bid { player: ctx.player, value })
        }
        DecisionRequest::Utterance { turn_index } => mock_utterance(ctx, *turn_index, rng),
        DecisionRequest::SelfAssessment { statement } => {
            AgentDecision::SelfAnalysis(mock_self_analysis(statement, ctx.role))
        }
        DecisionRequest::PeerAssessment { statement } => {
            AgentDecision::PeerAnalysis(mock_peer_analysis(statement, ctx.player))
        }
        DecisionRequest::Vote => AgentDecision::Vote { target: Some(pick(rng, &ctx.living_others())) },
    }
}

/// The ablation backend: replies with the canonical JSON encoding of the
/// fixed-rule decision, exercising the same parse path as model output.
pub struct MockBackend;

impl AgentBackend for MockBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }

    fn reply(
        &mut self,
        ctx: &AgentContext,
        req: &DecisionRequest,
        _prompt: &str,
        rng: &mut ChaCha8Rng,
    ) -> Result<String, BackendError> {
        let decision = mock_decide(ctx, req, rng);
        Ok(super::canonical_reply(&decision, ctx))
    }
}
