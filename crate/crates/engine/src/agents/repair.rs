//! Strict parsing of raw backend replies, with conservative defaults for
//! anything malformed.
//!
//! Repair is total: every raw string becomes a valid decision. Defaults are
//! chosen to be inert — bid 0, abstain, honest self label, neutral suspicion
//! — and each defaulted field is reported so the runner can log a repair
//! event. Repairing an already-repaired reply changes nothing.

use serde_json::Value;

use super::{AgentContext, AgentDecision, DecisionRequest};
use crate::debate::Bid;
use crate::deception::{DeceptionType, PeerAnalysis, SelfAnalysis};
use crate::game::{PlayerId, Role};

#[derive(Debug, Clone, PartialEq)]
pub struct Repaired {
    pub decision: AgentDecision,
    /// Names of fields that fell back to defaults; empty means a clean parse.
    pub defaulted: Vec<String>,
    pub reason: Option<String>,
}

impl Repaired {
    pub fn was_repaired(&self) -> bool {
        !self.defaulted.is_empty() || self.reason.is_some()
    }
}

/// Canonical wire encoding of a decision — what a well-behaved backend
/// replies. The mock backend emits exactly this, and repair of this encoding
/// is always clean.
pub fn canonical_reply(decision: &AgentDecision, ctx: &AgentContext) -> String {
    let value = match decision {
        AgentDecision::NightAction { target } => serde_json::json!({ "target": ctx.name_of(*target) }),
        AgentDecision::Bid(bid) => serde_json::json!({ "bid": bid.value }),
        AgentDecision::Utterance { text, scratchpad } => {
            serde_json::json!({ "statement": text, "scratchpad": scratchpad })
        }
        AgentDecision::SelfAnalysis(a) => serde_json::json!({
            "deceptive": a.deceptive,
            "confidence": a.confidence,
            "type": a.dtype.label(),
            "reasoning": a.reasoning,
        }),
        AgentDecision::PeerAnalysis(a) => serde_json::json!({
            "deceptive": a.deceptive,
            "confidence": a.confidence,
            "type": a.dtype_guess.label(),
            "suspicion": a.suspicion,
            "reasoning": a.reasoning,
        }),
        AgentDecision::Vote { target } => match target {
            Some(t) => serde_json::json!({ "vote": ctx.name_of(*t) }),
            None => serde_json::json!({ "vote": null }),
        },
    };
    value.to_string()
}

/// Extract a JSON object from a raw reply: the whole string, a fenced block,
/// or the first balanced `{...}` span.
fn extract_object(raw: &str) -> Option<Value> {
    let trimmed = raw.trim();
    if let Ok(v @ Value::Object(_)) = serde_json::from_str::<Value>(trimmed) {
        return Some(v);
    }
    let start = trimmed.find('{')?;
    let bytes = trimmed.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return serde_json::from_str::<Value>(&trimmed[start..=i])
                        .ok()
                        .filter(Value::is_object);
                }
            }
            _ => {}
        }
    }
    None
}

fn unit_interval(obj: &Value, key: &str) -> Option<f64> {
    obj.get(key)?.as_f64().filter(|v| (0.0..=1.0).contains(v))
}

/// Resolve a name to a living player, case-insensitively.
fn resolve_living(ctx: &AgentContext, name: &str) -> Option<PlayerId> {
    let needle = name.trim().to_lowercase();
    ctx.players
        .iter()
        .find(|p| ctx.living.contains(&p.id) && p.name.to_lowercase() == needle)
        .map(|p| p.id)
}

fn night_default(ctx: &AgentContext) -> PlayerId {
    night_valid_targets(ctx)[0]
}

fn night_valid_targets(ctx: &AgentContext) -> Vec<PlayerId> {
    let partner = match &ctx.night_knowledge {
        super::NightKnowledge::Werewolf { partner } => partner.as_ref().map(|p| p.id),
        _ => None,
    };
    ctx.living
        .iter()
        .copied()
        .filter(|&p| match ctx.role {
            Role::Werewolf => p != ctx.player && Some(p) != partner,
            Role::Doctor => true,
            _ => p != ctx.player,
        })
        .collect()
}

fn first_text_line(raw: &str) -> Option<String> {
    raw.lines().map(str::trim).find(|l| !l.is_empty()).map(str::to_string)
}

/// The scratchpad delta an utterance reply carries, by the same rule repair
/// applies: a string `scratchpad` field or nothing.
pub(crate) fn scratchpad_delta(raw: &str) -> String {
    match extract_object(raw) {
        Some(obj) => obj
            .get("scratchpad")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_default(),
        None => String::new(),
    }
}

/// Parse `raw` into the decision `req` asked for, applying conservative
/// defaults wherever the reply is malformed. Total: never fails.
pub fn repair_output(raw: &str, req: &DecisionRequest, ctx: &AgentContext) -> Repaired {
    let obj = extract_object(raw);
    let mut defaulted: Vec<String> = Vec::new();
    let parse_failed = obj.is_none();
    let obj = obj.unwrap_or(Value::Null);

    let decision = match req {
        DecisionRequest::Bid => {
            let value = obj
                .get("bid")
                .and_then(Value::as_u64)
                .filter(|&v| v <= crate::debate::MAX_BID as u64)
                .map(|v| v as u8);
            let value = value.unwrap_or_else(|| {
                defaulted.push("bid".into());
                0
            });
            AgentDecision::Bid(Bid { player: ctx.player, value })
        }
        DecisionRequest::Vote => {
            let target = match obj.get("vote") {
                Some(Value::Null) => Some(None),
                Some(Value::String(name)) => {
                    resolve_living(ctx, name).filter(|&t| t != ctx.player).map(Some)
                }
                _ => None,
            };
            let target = target.unwrap_or_else(|| {
                defaulted.push("vote".into());
                None
            });
            AgentDecision::Vote { target }
        }
        DecisionRequest::NightAction => {
            let valid = night_valid_targets(ctx);
            let target = obj
                .get("target")
                .and_then(Value::as_str)
                .and_then(|name| resolve_living(ctx, name))
                .filter(|t| valid.contains(t));
            let target = target.unwrap_or_else(|| {
                defaulted.push("target".into());
                night_default(ctx)
            });
            AgentDecision::NightAction { target }
        }
        DecisionRequest::Utterance { .. } => {
            let text = obj
                .get("statement")
                .and_then(Value::as_str)
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string);
            let text = text.unwrap_or_else(|| {
                defaulted.push("statement".into());
                first_text_line(raw).unwrap_or_else(|| "(silent)".to_string())
            });
            let scratchpad = match obj.get("scratchpad") {
                Some(Value::String(s)) => s.clone(),
                _ => {
                    defaulted.push("scratchpad".into());
                    String::new()
                }
            };
            AgentDecision::Utterance { text, scratchpad }
        }
        DecisionRequest::SelfAssessment { statement } => {
            let mut deceptive = match obj.get("deceptive").and_then(Value::as_bool) {
                Some(v) => v,
                None => {
                    defaulted.push("deceptive".into());
                    false
                }
            };
            let confidence = unit_interval(&obj, "confidence").unwrap_or_else(|| {
                defaulted.push("confidence".into());
                0.5
            });
            let mut dtype = obj
                .get("type")
                .and_then(Value::as_str)
                .and_then(DeceptionType::parse)
                .unwrap_or_else(|| {
                    defaulted.push("type".into());
                    DeceptionType::None
                });
            // An inconsistent label pair collapses to the honest default.
            if deceptive != (dtype != DeceptionType::None) {
                defaulted.push("deceptive/type".into());
                deceptive = false;
                dtype = DeceptionType::None;
            }
            let reasoning = obj
                .get("reasoning")
                .and_then(Value::as_str)
                .map(str::to_string)
                .unwrap_or_else(|| {
                    defaulted.push("reasoning".into());
                    "[unparseable]".to_string()
                });
            AgentDecision::SelfAnalysis(SelfAnalysis {
                statement: statement.id,
                deceptive,
                confidence,
                dtype,
                reasoning,
            })
        }
        DecisionRequest::PeerAssessment { statement } => {
            let deceptive = match obj.get("deceptive").and_then(Value::as_bool) {
                Some(v) => v,
                None => {
                    defaulted.push("deceptive".into());
                    false
                }
            };
            let confidence = unit_interval(&obj, "confidence").unwrap_or_else(|| {
                defaulted.push("confidence".into());
                0.5
            });
            let suspicion = unit_interval(&obj, "suspicion").unwrap_or_else(|| {
                defaulted.push("suspicion".into());
                0.5
            });
            let dtype_guess = obj
                .get("type")
                .and_then(Value::as_str)
                .and_then(DeceptionType::parse)
                .unwrap_or_else(|| {
                    defaulted.push("type".into());
                    DeceptionType::None
                });
            let reasoning = obj
                .get("reasoning")
                .and_then(Value::as_str)
                .map(str::to_string)
                .unwrap_or_else(|| {
                    defaulted.push("reasoning".into());
                    "[unparseable]".to_string()
                });
            AgentDecision::PeerAnalysis(PeerAnalysis {
                statement: statement.id,
                observer: ctx.player,
                deceptive,
                confidence,
                dtype_guess,
                suspicion,
                reasoning,
            })
        }
    };

    let reason = if parse_failed {
        Some("reply is not a JSON object".to_string())
    } else if defaulted.is_empty() {
        None
    } else {
        Some(format!("missing or invalid fields: {}", defaulted.join(", ")))
    };
    Repaired { decision, defaulted, reason }
}
