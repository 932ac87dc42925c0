//! Roles, phase state machine, night resolution, voting, and victory checks.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, GameConfig};

/// Index of a player within a game, assigned at creation and never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PlayerId(pub u8);

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

// JSON object keys are always strings, so a PlayerId used as a map key
// round-trips as "3" while a value position stays numeric. Accept both.
impl<'de> Deserialize<'de> for PlayerId {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        struct IdVisitor;
        impl serde::de::Visitor<'_> for IdVisitor {
            type Value = PlayerId;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a player index as an integer or digit string")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<PlayerId, E> {
                u8::try_from(v)
                    .map(PlayerId)
                    .map_err(|_| E::custom(format!("player index {v} out of range")))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<PlayerId, E> {
                u8::try_from(v)
                    .map(PlayerId)
                    .map_err(|_| E::custom(format!("player index {v} out of range")))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<PlayerId, E> {
                v.parse::<u8>()
                    .map(PlayerId)
                    .map_err(|_| E::custom(format!("invalid player index {v:?}")))
            }
        }
        deserializer.deserialize_any(IdVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Villager,
    Werewolf,
    Seer,
    Doctor,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Villager, Role::Werewolf, Role::Seer, Role::Doctor];

    pub fn is_wolf(self) -> bool {
        self == Role::Werewolf
    }

    pub fn label(self) -> &'static str {
        match self {
            Role::Villager => "Villager",
            Role::Werewolf => "Werewolf",
            Role::Seer => "Seer",
            Role::Doctor => "Doctor",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Night,
    DayDebate,
    DayVote,
    Ended,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Night => "night",
            Phase::DayDebate => "day debate",
            Phase::DayVote => "day vote",
            Phase::Ended => "ended",
        }
    }
}

/// Final result of a game. `Undecided` marks games stopped by the round cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Villagers,
    Werewolves,
    Undecided,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Winner::Villagers => f.write_str("villagers"),
            Winner::Werewolves => f.write_str("werewolves"),
            Winner::Undecided => f.write_str("undecided"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub id: PlayerId,
    pub display_name: String,
    pub role: Role,
    pub alive: bool,
}

/// Fixed name pool. No name is a substring of another (mention extraction
/// relies on that), and none contains a mock-analyzer cue word.
pub const PLAYER_NAMES: [&str; 8] = ["Ava", "Ben", "Chloe", "Dara", "Emma", "Felix", "Grace", "Raj"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub config: GameConfig,
    pub players: Vec<Player>,
    /// 1-based round counter; a round is one night plus the following day.
    pub round: u32,
    pub phase: Phase,
    pub winner: Option<Winner>,
}

#[derive(Debug, Error)]
pub enum GameError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("expected phase {required:?}, game is in {found:?}")]
    WrongPhase { required: Phase, found: Phase },
    #[error("game already ended")]
    AlreadyEnded,
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
    #[error("{0} is dead and cannot be targeted")]
    TargetDead(PlayerId),
    #[error("werewolves cannot target one of their own")]
    WolfTargetsWolf,
    #[error("the seer cannot inspect themself")]
    SeerSelfInspect,
    #[error("night action for {role} is {problem}")]
    NightActionMismatch { role: Role, problem: &'static str },
    #[error("duplicate vote from {0}")]
    DuplicateVoter(PlayerId),
    #[error("vote from {0}, who is not living")]
    VoterNotLiving(PlayerId),
    #[error("missing vote from living player {0}")]
    MissingVote(PlayerId),
    #[error("vote target {0} is invalid (dead, unknown, or self)")]
    InvalidVoteTarget(PlayerId),
}

impl GameState {
    pub fn player(&self, id: PlayerId) -> Result<&Player, GameError> {
        self.players.get(id.0 as usize).ok_or(GameError::UnknownPlayer(id))
    }

    pub fn name(&self, id: PlayerId) -> &str {
        self.players
            .get(id.0 as usize)
            .map(|p| p.display_name.as_str())
            .unwrap_or("?")
    }

    pub fn living(&self) -> impl Iterator<Item = &Player> {
        self.players.iter().filter(|p| p.alive)
    }

    pub fn living_ids(&self) -> Vec<PlayerId> {
        self.living().map(|p| p.id).collect()
    }

    pub fn living_set(&self) -> BTreeSet<PlayerId> {
        self.living().map(|p| p.id).collect()
    }

    pub fn living_count(&self) -> usize {
        self.living().count()
    }

    pub fn living_wolves(&self) -> usize {
        self.living().filter(|p| p.role.is_wolf()).count()
    }

    pub fn living_non_wolves(&self) -> usize {
        self.living().filter(|p| !p.role.is_wolf()).count()
    }

    /// First living player holding `role`, by creation index.
    pub fn living_with_role(&self, role: Role) -> Option<PlayerId> {
        self.living().find(|p| p.role == role).map(|p| p.id)
    }

    pub fn mark_dead(&mut self, id: PlayerId) {
        if let Some(p) = self.players.get_mut(id.0 as usize) {
            p.alive = false;
        }
    }
}

/// The three night choices. A field is `None` exactly when no living player
/// holds the acting role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NightActions {
    pub wolf_target: Option<PlayerId>,
    pub doctor_protect: Option<PlayerId>,
    pub seer_target: Option<PlayerId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NightOutcome {
    pub eliminated: Option<PlayerId>,
    pub protected_save: bool,
    /// Visible to the seer only; callers must scope it accordingly.
    pub seer_learned: Option<(PlayerId, Role)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub voter: PlayerId,
    /// `None` is an abstention.
    pub target: Option<PlayerId>,
}

/// Result of one `advance_phase` call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTransition {
    pub from: Phase,
    pub to: Phase,
    pub round: u32,
    pub winner: Option<Winner>,
}

/// Create a fresh game: eight players, roles dealt by a seeded shuffle of the
/// fixed multiset, round 1, night phase.
pub fn new_game(config: GameConfig) -> Result<GameState, GameError> {
    config.validate()?;
    let r = config.roster;
    let mut roles = Vec::with_capacity(r.total());
    roles.extend(std::iter::repeat_n(Role::Villager, r.villagers as usize));
    roles.extend(std::iter::repeat_n(Role::Werewolf, r.werewolves as usize));
    roles.extend(std::iter::repeat_n(Role::Seer, r.seers as usize));
    roles.extend(std::iter::repeat_n(Role::Doctor, r.doctors as usize));

    // Stream 1 of the game seed is reserved for the role shuffle; the
    // simulation draws from stream 2 so the sequences never overlap.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    roles.shuffle(&mut rng);

    let players = roles
        .into_iter()
        .enumerate()
        .map(|(i, role)| Player {
            id: PlayerId(i as u8),
            display_name: PLAYER_NAMES[i].to_string(),
            role,
            alive: true,
        })
        .collect();

    Ok(GameState { config, players, round: 1, phase: Phase::Night, winner: None })
}

/// Simultaneous night resolution: the doctor's protection cancels the wolf
/// kill when they coincide; the seer privately learns the inspected role.
/// Marks the victim dead on the passed state.
pub fn resolve_night(state: &mut GameState, actions: &NightActions) -> Result<NightOutcome, GameError> {
    if state.phase != Phase::Night {
        return Err(GameError::WrongPhase { required: Phase::Night, found: state.phase });
    }

    let wolves_alive = state.living_wolves() > 0;
    let doctor = state.living_with_role(Role::Doctor);
    let seer = state.living_with_role(Role::Seer);

    match (wolves_alive, actions.wolf_target) {
        (true, None) => return Err(GameError::NightActionMismatch { role: Role::Werewolf, problem: "missing" }),
        (false, Some(_)) => return Err(GameError::NightActionMismatch { role: Role::Werewolf, problem: "present with no living werewolf" }),
        _ => {}
    }
    match (doctor, actions.doctor_protect) {
        (Some(_), None) => return Err(GameError::NightActionMismatch { role: Role::Doctor, problem: "missing" }),
        (None, Some(_)) => return Err(GameError::NightActionMismatch { role: Role::Doctor, problem: "present with no living doctor" }),
        _ => {}
    }
    match (seer, actions.seer_target) {
        (Some(_), None) => return Err(GameError::NightActionMismatch { role: Role::Seer, problem: "missing" }),
        (None, Some(_)) => return Err(GameError::NightActionMismatch { role: Role::Seer, problem: "present with no living seer" }),
        _ => {}
    }

    for target in [actions.wolf_target, actions.doctor_protect, actions.seer_target].into_iter().flatten() {
        if !state.player(target)?.alive {
            return Err(GameError::TargetDead(target));
        }
    }
    if let Some(t) = actions.wolf_target {
        if state.player(t)?.role.is_wolf() {
            return Err(GameError::WolfTargetsWolf);
        }
    }
    if let (Some(seer_id), Some(t)) = (seer, actions.seer_target) {
        if t == seer_id {
            return Err(GameError::SeerSelfInspect);
        }
    }

    let protected_save = match (actions.wolf_target, actions.doctor_protect) {
        (Some(kill), Some(protect)) => kill == protect,
        _ => false,
    };
    let eliminated = match actions.wolf_target {
        Some(kill) if !protected_save => Some(kill),
        _ => None,
    };
    if let Some(victim) = eliminated {
        state.mark_dead(victim);
    }
    let seer_learned = match actions.seer_target {
        Some(t) => Some((t, state.player(t)?.role)),
        None => None,
    };

    Ok(NightOutcome { eliminated, protected_save, seer_learned })
}

/// Strict-majority tally: a player is exiled only when they receive more than
/// half of the living players' votes, abstentions included in the
/// denominator. No majority, no exile — there is no tie-breaking.
pub fn tally_votes(votes: &[Vote], living: &BTreeSet<PlayerId>) -> Result<Option<PlayerId>, GameError> {
    let mut seen = BTreeSet::new();
    let mut counts: std::collections::BTreeMap<PlayerId, usize> = std::collections::BTreeMap::new();
    for vote in votes {
        if !living.contains(&vote.voter) {
            return Err(GameError::VoterNotLiving(vote.voter));
        }
        if !seen.insert(vote.voter) {
            return Err(GameError::DuplicateVoter(vote.voter));
        }
        if let Some(target) = vote.target {
            if target == vote.voter || !living.contains(&target) {
                return Err(GameError::InvalidVoteTarget(target));
            }
            *counts.entry(target).or_insert(0) += 1;
        }
    }
    if let Some(missing) = living.iter().find(|p| !seen.contains(p)) {
        return Err(GameError::MissingVote(*missing));
    }

    Ok(counts
        .into_iter()
        .find(|(_, n)| n * 2 > living.len())
        .map(|(target, _)| target))
}

/// Victory conditions, checked on the current state:
/// villagers win with no living wolves, wolves win at numeric parity, and the
/// game ends undecided once the round counter passes the cap.
pub fn check_victory(state: &GameState) -> Option<Winner> {
    if state.living_wolves() == 0 {
        return Some(Winner::Villagers);
    }
    if state.living_wolves() >= state.living_non_wolves() {
        return Some(Winner::Werewolves);
    }
    if state.round > state.config.max_rounds {
        return Some(Winner::Undecided);
    }
    None
}

/// Apply the legal phase transition, checking victory when leaving the night
/// and vote phases. Entering `Ended` sets the winner.
pub fn advance_phase(state: &mut GameState) -> Result<PhaseTransition, GameError> {
    let from = state.phase;
    let to = match from {
        Phase::Ended => return Err(GameError::AlreadyEnded),
        Phase::Night => match check_victory(state) {
            Some(w) => {
                state.winner = Some(w);
                Phase::Ended
            }
            None => Phase::DayDebate,
        },
        Phase::DayDebate => Phase::DayVote,
        Phase::DayVote => match check_victory(state) {
            Some(w) => {
                state.winner = Some(w);
                Phase::Ended
            }
            None => {
                state.round += 1;
                if state.round > state.config.max_rounds {
                    state.winner = Some(Winner::Undecided);
                    Phase::Ended
                } else {
                    Phase::Night
                }
            }
        },
    };
    state.phase = to;
    Ok(PhaseTransition { from, to, round: state.round, winner: state.winner })
}
