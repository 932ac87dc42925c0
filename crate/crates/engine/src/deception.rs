//! Statement-level deception records and smoothed suspicion dynamics.
//!
//! Every public statement carries one self-analysis from the speaker and one
//! peer analysis per living observer. Each peer's continuous suspicion score
//! feeds an exponentially smoothed per-(observer, target) trajectory.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Phase, PlayerId};
use crate::log::{Event, EventRecord, EventSink, LogError, SuspicionUpdatedPayload, Visibility};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeceptionType {
    None,
    Omission,
    Distortion,
    Misdirection,
    Fabrication,
}

impl DeceptionType {
    pub const ALL: [DeceptionType; 5] = [
        DeceptionType::None,
        DeceptionType::Omission,
        DeceptionType::Distortion,
        DeceptionType::Misdirection,
        DeceptionType::Fabrication,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DeceptionType::None => "none",
            DeceptionType::Omission => "omission",
            DeceptionType::Distortion => "distortion",
            DeceptionType::Misdirection => "misdirection",
            DeceptionType::Fabrication => "fabrication",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.label() == s)
    }
}

impl fmt::Display for DeceptionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Game-local statement identifier, assigned sequentially from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatementId(pub u32);

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub id: StatementId,
    pub speaker: PlayerId,
    pub round: u32,
    pub phase: Phase,
    pub turn_index: u32,
    pub text: String,
}

/// The speaker's own honesty label for one statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfAnalysis {
    pub statement: StatementId,
    pub deceptive: bool,
    pub confidence: f64,
    pub dtype: DeceptionType,
    pub reasoning: String,
}

/// One observer's judgment of another player's statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerAnalysis {
    pub statement: StatementId,
    pub observer: PlayerId,
    pub deceptive: bool,
    pub confidence: f64,
    pub dtype_guess: DeceptionType,
    pub suspicion: f64,
    pub reasoning: String,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("self-analysis refers to {found}, expected {expected}")]
    SelfAnalysisWrongStatement { expected: StatementId, found: StatementId },
    #[error("peer analysis from {observer} refers to {found}, expected {expected}")]
    PeerAnalysisWrongStatement { observer: PlayerId, expected: StatementId, found: StatementId },
    #[error("self-analysis inconsistent: deceptive={deceptive} with type {dtype}")]
    SelfLabelMismatch { deceptive: bool, dtype: DeceptionType },
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("suspicion {0} outside [0, 1]")]
    SuspicionOutOfRange(f64),
    #[error("smoothing factor {0} outside (0, 1]")]
    AlphaOutOfRange(f64),
    #[error("observer {0} judged their own statement")]
    ObserverIsSpeaker(PlayerId),
    #[error("missing peer analysis from living observer {0}")]
    MissingObserver(PlayerId),
    #[error("duplicate peer analysis from {0}")]
    DuplicateObserver(PlayerId),
    #[error("peer analysis from {0}, who is not a living observer")]
    UnexpectedObserver(PlayerId),
    #[error("suspicion update for observer == target ({0})")]
    SelfSuspicion(PlayerId),
    #[error("unknown suspicion pair ({observer}, {target})")]
    UnknownPair { observer: PlayerId, target: PlayerId },
    #[error(transparent)]
    Log(#[from] LogError),
}

impl SelfAnalysis {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(ProtocolError::ConfidenceOutOfRange(self.confidence));
        }
        let consistent = self.deceptive == (self.dtype != DeceptionType::None);
        if !consistent {
            return Err(ProtocolError::SelfLabelMismatch { deceptive: self.deceptive, dtype: self.dtype });
        }
        Ok(())
    }
}

impl PeerAnalysis {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(ProtocolError::ConfidenceOutOfRange(self.confidence));
        }
        if !(0.0..=1.0).contains(&self.suspicion) {
            return Err(ProtocolError::SuspicionOutOfRange(self.suspicion));
        }
        Ok(())
    }
}

/// One exponential-smoothing step: new evidence `s` weighted by `alpha`
/// against the running value.
pub fn smoothed(alpha: f64, s: f64, previous: f64) -> f64 {
    alpha * s + (1.0 - alpha) * previous
}

pub const INITIAL_SUSPICION: f64 = 0.5;

/// Per-(observer, target) smoothed suspicion, initialized to 0.5 for every
/// ordered pair of distinct players. Entries for dead observers freeze at
/// their last value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuspicionMatrix {
    entries: BTreeMap<PlayerId, BTreeMap<PlayerId, f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuspicionStep {
    pub previous: f64,
    pub updated: f64,
}

impl SuspicionMatrix {
    pub fn new(players: impl IntoIterator<Item = PlayerId> + Clone) -> Self {
        let ids: Vec<PlayerId> = players.into_iter().collect();
        let mut entries = BTreeMap::new();
        for &o in &ids {
            let row: BTreeMap<PlayerId, f64> = ids
                .iter()
                .filter(|&&t| t != o)
                .map(|&t| (t, INITIAL_SUSPICION))
                .collect();
            entries.insert(o, row);
        }
        Self { entries }
    }

    pub fn get(&self, observer: PlayerId, target: PlayerId) -> Option<f64> {
        self.entries.get(&observer).and_then(|row| row.get(&target)).copied()
    }

    pub fn row(&self, observer: PlayerId) -> impl Iterator<Item = (PlayerId, f64)> + '_ {
        self.entries
            .get(&observer)
            .into_iter()
            .flat_map(|row| row.iter().map(|(&t, &v)| (t, v)))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (PlayerId, PlayerId, f64)> + '_ {
        self.entries
            .iter()
            .flat_map(|(&o, row)| row.iter().map(move |(&t, &v)| (o, t, v)))
    }

    /// Overwrite one entry with an exact recorded value; used when
    /// reconstructing a matrix from logged updates.
    pub(crate) fn set_exact(&mut self, observer: PlayerId, target: PlayerId, value: f64) {
        if let Some(cell) = self.entries.get_mut(&observer).and_then(|row| row.get_mut(&target)) {
            *cell = value;
        }
    }

    /// Apply one smoothing step for `(observer, target)` with new evidence
    /// `s`, returning the previous and updated values.
    pub fn update(
        &mut self,
        observer: PlayerId,
        target: PlayerId,
        s: f64,
        alpha: f64,
    ) -> Result<SuspicionStep, ProtocolError> {
        if observer == target {
            return Err(ProtocolError::SelfSuspicion(observer));
        }
        if !(0.0..=1.0).contains(&s) {
            return Err(ProtocolError::SuspicionOutOfRange(s));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ProtocolError::AlphaOutOfRange(alpha));
        }
        let cell = self
            .entries
            .get_mut(&observer)
            .and_then(|row| row.get_mut(&target))
            .ok_or(ProtocolError::UnknownPair { observer, target })?;
        let previous = *cell;
        let updated = smoothed(alpha, s, previous);
        *cell = updated;
        Ok(SuspicionStep { previous, updated })
    }
}

/// Persist a statement's analyses to the event log, then fold each observer's
/// suspicion score into the matrix. Requires exactly one peer analysis per
/// living non-speaker; observer updates run in observer-id order (each
/// touches a distinct entry, so order does not affect the result).
pub fn record_statement_round(
    statement: &Statement,
    self_analysis: &SelfAnalysis,
    peers: &[PeerAnalysis],
    matrix: &mut SuspicionMatrix,
    living: &BTreeSet<PlayerId>,
    alpha: f64,
    sink: &mut dyn EventSink,
) -> Result<(), ProtocolError> {
    if self_analysis.statement != statement.id {
        return Err(ProtocolError::SelfAnalysisWrongStatement {
            expected: statement.id,
            found: self_analysis.statement,
        });
    }
    self_analysis.validate()?;

    let mut by_observer: BTreeMap<PlayerId, &PeerAnalysis> = BTreeMap::new();
    for peer in peers {
        if peer.statement != statement.id {
            return Err(ProtocolError::PeerAnalysisWrongStatement {
                observer: peer.observer,
                expected: statement.id,
                found: peer.statement,
            });
        }
        if peer.observer == statement.speaker {
            return Err(ProtocolError::ObserverIsSpeaker(peer.observer));
        }
        if !living.contains(&peer.observer) {
            return Err(ProtocolError::UnexpectedObserver(peer.observer));
        }
        peer.validate()?;
        if by_observer.insert(peer.observer, peer).is_some() {
            return Err(ProtocolError::DuplicateObserver(peer.observer));
        }
    }
    for &p in living {
        if p != statement.speaker && !by_observer.contains_key(&p) {
            return Err(ProtocolError::MissingObserver(p));
        }
    }

    sink.append(Visibility::Researcher, Event::SelfAnalysisRecorded(self_analysis.clone()))?;
    for peer in by_observer.values() {
        sink.append(Visibility::Researcher, Event::PeerAnalysisRecorded((*peer).clone()))?;
    }
    for (observer, peer) in &by_observer {
        let step = matrix.update(*observer, statement.speaker, peer.suspicion, alpha)?;
        sink.append(
            Visibility::Private { player: *observer },
            Event::SuspicionUpdated(SuspicionUpdatedPayload {
                observer: *observer,
                target: statement.speaker,
                statement: statement.id,
                suspicion: peer.suspicion,
                previous: step.previous,
                updated: step.updated,
            }),
        )?;
    }
    Ok(())
}

/// The post-update suspicion values one observer held toward one target, in
/// event order. Unknown pairs yield an empty list.
pub fn suspicion_trajectory(
    records: &[EventRecord],
    observer: PlayerId,
    target: PlayerId,
) -> Vec<(StatementId, f64)> {
    records
        .iter()
        .filter_map(|r| match &r.event {
            Event::SuspicionUpdated(u) if u.observer == observer && u.target == target => {
                Some((u.statement, u.updated))
            }
            _ => None,
        })
        .collect()
}
