//! Debate scheduling: integer bids, mention-biased tie-breaking, and
//! overbid decay.
//!
//! Ordering is a deterministic sort on effective bid; randomness enters only
//! through the seeded shuffle that settles ties left over after the mention
//! bias.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::OverbidPolicy;
use crate::deception::Statement;
use crate::game::PlayerId;

pub const MAX_BID: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bid {
    pub player: PlayerId,
    pub value: u8,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DebateError {
    #[error("bid {value} from {player} exceeds {MAX_BID}")]
    BidOutOfRange { player: PlayerId, value: u8 },
    #[error("duplicate bid from {0}")]
    DuplicateBidder(PlayerId),
}

/// Per-player speaking credibility in `[floor, 1.0]`. Starts at 1.0 and only
/// decays; see [`InfluenceLedger::apply_overbid_decay`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceLedger {
    credibility: BTreeMap<PlayerId, f64>,
    policy: OverbidPolicy,
}

impl InfluenceLedger {
    pub fn new(players: impl IntoIterator<Item = PlayerId>, policy: OverbidPolicy) -> Self {
        Self {
            credibility: players.into_iter().map(|p| (p, 1.0)).collect(),
            policy,
        }
    }

    pub fn credibility(&self, player: PlayerId) -> f64 {
        self.credibility.get(&player).copied().unwrap_or(1.0)
    }

    /// Apply decay after `speaker` won a turn with `bid_value`: bids at or
    /// above the policy threshold multiply credibility down, clamped to the
    /// floor. Lower bids leave it unchanged.
    pub fn apply_overbid_decay(&mut self, speaker: PlayerId, bid_value: u8) {
        if bid_value >= self.policy.threshold {
            let entry = self.credibility.entry(speaker).or_insert(1.0);
            *entry = (*entry * self.policy.multiplier).max(self.policy.floor);
        }
    }
}

/// Mention counts extracted from the immediately preceding turn's statement.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionSet(pub BTreeMap<PlayerId, u32>);

impl MentionSet {
    pub fn count(&self, player: PlayerId) -> u32 {
        self.0.get(&player).copied().unwrap_or(0)
    }
}

fn count_occurrences(haystack: &str, needle: &str) -> u32 {
    if needle.is_empty() {
        return 0;
    }
    let mut n = 0;
    let mut rest = haystack;
    while let Some(pos) = rest.find(needle) {
        n += 1;
        rest = &rest[pos + needle.len()..];
    }
    n
}

/// Count case-insensitive occurrences of each living player's display name in
/// the previous statement. First turn (no statement) yields all zeros.
pub fn extract_mentions(previous: Option<&Statement>, living: &[(PlayerId, &str)]) -> MentionSet {
    let mut set = MentionSet::default();
    let text = match previous {
        Some(s) => s.text.to_lowercase(),
        None => return set,
    };
    for (id, name) in living {
        let n = count_occurrences(&text, &name.to_lowercase());
        if n > 0 {
            set.0.insert(*id, n);
        }
    }
    set
}

/// A bid weighted by the bidder's current credibility.
pub fn effective_bid(bid: &Bid, ledger: &InfluenceLedger) -> f64 {
    bid.value as f64 * ledger.credibility(bid.player)
}

/// Order speakers for one debate turn: descending effective bid, ties broken
/// toward players mentioned in the prior turn, remaining ties settled by a
/// seeded shuffle. Deterministic for a fixed `(bids, ledger, mentions, rng)`.
pub fn order_speakers(
    bids: &[Bid],
    ledger: &InfluenceLedger,
    mentions: &MentionSet,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PlayerId>, DebateError> {
    let mut seen = std::collections::BTreeSet::new();
    for bid in bids {
        if bid.value > MAX_BID {
            return Err(DebateError::BidOutOfRange { player: bid.player, value: bid.value });
        }
        if !seen.insert(bid.player) {
            return Err(DebateError::DuplicateBidder(bid.player));
        }
    }

    let mut entries: Vec<(PlayerId, f64, u32)> = bids
        .iter()
        .map(|b| (b.player, effective_bid(b, ledger), mentions.count(b.player)))
        .collect();
    // The shuffle decides nothing except the order within exact
    // (effective bid, mentions) ties; the stable sort preserves it there.
    entries.sort_by_key(|(p, _, _)| *p);
    entries.shuffle(rng);
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.2.cmp(&a.2)));
    Ok(entries.into_iter().map(|(p, _, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Phase;
    use rand::SeedableRng;

    fn ledger(players: &[PlayerId]) -> InfluenceLedger {
        InfluenceLedger::new(players.iter().copied(), OverbidPolicy::default())
    }

    fn stmt(text: &str) -> Statement {
        Statement {
            id: crate::deception::StatementId(1),
            speaker: PlayerId(0),
            round: 1,
            phase: Phase::DayDebate,
            turn_index: 0,
            text: text.to_string(),
        }
    }

    #[test]
    fn mentions_from_prior_statement() {
        let living = [(PlayerId(0), "Raj"), (PlayerId(1), "Emma")];
        let s = stmt("Raj's hesitation is suspicious");
        let m = extract_mentions(Some(&s), &living);
        assert_eq!(m.count(PlayerId(0)), 1);
        assert_eq!(m.count(PlayerId(1)), 0);
    }

    #[test]
    fn no_prior_statement_all_zero() {
        let living = [(PlayerId(0), "Raj"), (PlayerId(1), "Emma")];
        let m = extract_mentions(None, &living);
        assert!(living.iter().all(|(id, _)| m.count(*id) == 0));
    }

    #[test]
    fn repeated_mentions_counted() {
        // Oracle: plain substring count.
        let living = [(PlayerId(1), "Emma")];
        let s = stmt("Emma, Emma, answer");
        let m = extract_mentions(Some(&s), &living);
        assert_eq!(m.count(PlayerId(1)), 2);
    }

    #[test]
    fn effective_bid_scales_by_credibility() {
        let players = [PlayerId(0)];
        let mut l = ledger(&players);
        let bid = Bid { player: PlayerId(0), value: 10 };
        assert!((effective_bid(&bid, &l) - 10.0).abs() < 1e-12);

        // Decay to the floor, then a max bid is worth 2.5.
        for _ in 0..20 {
            l.apply_overbid_decay(PlayerId(0), 10);
        }
        assert!((l.credibility(PlayerId(0)) - 0.25).abs() < 1e-12);
        assert!((effective_bid(&bid, &l) - 2.5).abs() < 1e-12);

        // One decay step: 6 * 0.8 = 4.8.
        let mut l = ledger(&players);
        l.apply_overbid_decay(PlayerId(0), 9);
        let bid6 = Bid { player: PlayerId(0), value: 6 };
        assert!((effective_bid(&bid6, &l) - 4.8).abs() < 1e-12);
    }

    #[test]
    fn decay_threshold_and_floor() {
        let players = [PlayerId(0)];
        let mut l = ledger(&players);
        l.apply_overbid_decay(PlayerId(0), 9);
        assert!((l.credibility(PlayerId(0)) - 0.8).abs() < 1e-12);

        let mut l = ledger(&players);
        l.apply_overbid_decay(PlayerId(0), 5);
        assert!((l.credibility(PlayerId(0)) - 1.0).abs() < 1e-12);

        // Floor clamp from just above it.
        let mut l = InfluenceLedger {
            credibility: [(PlayerId(0), 0.26)].into_iter().collect(),
            policy: OverbidPolicy::default(),
        };
        l.apply_overbid_decay(PlayerId(0), 10);
        assert!((l.credibility(PlayerId(0)) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn mention_bias_breaks_ties() {
        let players = [PlayerId(0), PlayerId(1), PlayerId(2)];
        let l = ledger(&players);
        let bids = [
            Bid { player: PlayerId(0), value: 5 },
            Bid { player: PlayerId(1), value: 3 },
            Bid { player: PlayerId(2), value: 3 },
        ];
        let mut mentions = MentionSet::default();
        mentions.0.insert(PlayerId(2), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let order = order_speakers(&bids, &l, &mentions, &mut rng).unwrap();
        assert_eq!(order, vec![PlayerId(0), PlayerId(2), PlayerId(1)]);
    }

    #[test]
    fn credibility_outweighs_raw_bid() {
        // Effective bids: 10 * 0.25 = 2.5 < 3 * 1.0.
        let players = [PlayerId(0), PlayerId(1)];
        let mut l = ledger(&players);
        for _ in 0..20 {
            l.apply_overbid_decay(PlayerId(0), 10);
        }
        let bids = [
            Bid { player: PlayerId(0), value: 10 },
            Bid { player: PlayerId(1), value: 3 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let order = order_speakers(&bids, &l, &MentionSet::default(), &mut rng).unwrap();
        assert_eq!(order, vec![PlayerId(1), PlayerId(0)]);
    }

    #[test]
    fn all_zero_bids_shuffle_is_seeded() {
        let players: Vec<PlayerId> = (0..6).map(PlayerId).collect();
        let l = ledger(&players);
        let bids: Vec<Bid> = players.iter().map(|&p| Bid { player: p, value: 0 }).collect();
        let order_with_seed = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order_speakers(&bids, &l, &MentionSet::default(), &mut rng).unwrap()
        };
        assert_eq!(order_with_seed(42), order_with_seed(42));
    }

    #[test]
    fn duplicate_bidder_rejected() {
        let players = [PlayerId(0)];
        let l = ledger(&players);
        let bids = [
            Bid { player: PlayerId(0), value: 1 },
            Bid { player: PlayerId(0), value: 2 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            order_speakers(&bids, &l, &MentionSet::default(), &mut rng),
            Err(DebateError::DuplicateBidder(_))
        ));
    }
}
