//! Deterministic Werewolf simulation engine with statement-level deception
//! measurement.
//!
//! A game runs eight role-assigned agents (villagers, werewolves, a seer, a
//! doctor) through night/day cycles with bid-ordered debate. Every public
//! statement is annotated twice — a self-assessment by the speaker and a
//! judgment by each living observer — and each observer's suspicion of each
//! player evolves by exponential smoothing. Everything is written to an
//! append-only NDJSON event log that supports exact replay, and the metrics
//! module turns log sets into the full evaluation suite (per-role stats,
//! cross-perception matrices, observer accuracy, calibration, trends, and
//! deception-type effects).
//!
//! Agents are pluggable: a deterministic mock backend for reproducible
//! ablation runs, or an HTTP chat-completion gateway for model-backed games.

pub mod agents;
pub mod config;
pub mod debate;
pub mod deception;
pub mod game;
pub mod hash;
pub mod log;
pub mod metrics;
pub mod runner;

pub use config::{GameConfig, OverbidPolicy, RosterCounts};
pub use game::{GameState, Phase, PlayerId, Role, Winner};
pub use runner::{GameRunner, RunError, RunSummary};
