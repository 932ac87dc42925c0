//! Game configuration and validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::fnv1a;

/// Number of players holding each role at game start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterCounts {
    pub villagers: u8,
    pub werewolves: u8,
    pub seers: u8,
    pub doctors: u8,
}

impl Default for RosterCounts {
    fn default() -> Self {
        Self { villagers: 4, werewolves: 2, seers: 1, doctors: 1 }
    }
}

impl RosterCounts {
    pub fn total(&self) -> usize {
        self.villagers as usize + self.werewolves as usize + self.seers as usize + self.doctors as usize
    }
}

/// Credibility penalty applied after a speaker wins a turn with a high bid.
///
/// The constants are arbitrary tuning knobs, kept in config so ablations can
/// override them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverbidPolicy {
    /// Bids at or above this value trigger decay.
    pub threshold: u8,
    /// Multiplier applied to credibility on decay.
    pub multiplier: f64,
    /// Credibility never drops below this floor.
    pub floor: f64,
}

impl Default for OverbidPolicy {
    fn default() -> Self {
        Self { threshold: 8, multiplier: 0.8, floor: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub roster: RosterCounts,
    /// Exponential-smoothing factor for suspicion updates, in (0, 1].
    pub alpha: f64,
    /// Hard cap on rounds; the game ends undecided once it is exceeded.
    pub max_rounds: u32,
    pub max_debate_turns_per_day: u32,
    pub max_turns_per_player_per_day: u32,
    pub seed: u64,
    pub overbid: OverbidPolicy,
    /// When false, `PromptIssued` records omit the prompt body (the log keeps
    /// the metadata so sequence checks still hold).
    pub log_prompt_bodies: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            roster: RosterCounts::default(),
            alpha: 0.7,
            max_rounds: 10,
            max_debate_turns_per_day: 8,
            max_turns_per_player_per_day: 2,
            seed: 0,
            overbid: OverbidPolicy::default(),
            log_prompt_bodies: true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("roster must be exactly 4 villagers, 2 werewolves, 1 seer, 1 doctor; got {villagers}/{werewolves}/{seers}/{doctors}")]
    InvalidRoster { villagers: u8, werewolves: u8, seers: u8, doctors: u8 },
    #[error("alpha must be in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("{name} must be at least 1")]
    ZeroCap { name: &'static str },
    #[error("overbid policy invalid: multiplier must be in (0, 1], floor in (0, 1]")]
    InvalidOverbid,
}

impl GameConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = self.roster;
        if (r.villagers, r.werewolves, r.seers, r.doctors) != (4, 2, 1, 1) {
            return Err(ConfigError::InvalidRoster {
                villagers: r.villagers,
                werewolves: r.werewolves,
                seers: r.seers,
                doctors: r.doctors,
            });
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(ConfigError::InvalidAlpha(self.alpha));
        }
        if self.max_rounds < 1 {
            return Err(ConfigError::ZeroCap { name: "max_rounds" });
        }
        if self.max_debate_turns_per_day < 1 {
            return Err(ConfigError::ZeroCap { name: "max_debate_turns_per_day" });
        }
        if self.max_turns_per_player_per_day < 1 {
            return Err(ConfigError::ZeroCap { name: "max_turns_per_player_per_day" });
        }
        let o = self.overbid;
        if !(o.multiplier > 0.0 && o.multiplier <= 1.0 && o.floor > 0.0 && o.floor <= 1.0) {
            return Err(ConfigError::InvalidOverbid);
        }
        Ok(())
    }

    /// Stable fingerprint of the configuration, recorded in run manifests.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        assert!(GameConfig::default().validate().is_ok());
    }

    #[test]
    fn rejects_bad_roster() {
        let mut cfg = GameConfig::default();
        cfg.roster.werewolves = 3;
        assert!(matches!(cfg.validate(), Err(ConfigError::InvalidRoster { .. })));
    }

    #[test]
    fn rejects_alpha_out_of_range() {
        for alpha in [0.0, 1.2, -0.3, f64::NAN] {
            let cfg = GameConfig { alpha, ..GameConfig::default() };
            assert!(matches!(cfg.validate(), Err(ConfigError::InvalidAlpha(_))), "{alpha}");
        }
        let cfg = GameConfig { alpha: 1.0, ..GameConfig::default() };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn content_hash_tracks_content() {
        let a = GameConfig::with_seed(1);
        let b = GameConfig::with_seed(2);
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash(), GameConfig::with_seed(1).content_hash());
    }
}
