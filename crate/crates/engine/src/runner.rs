//! Drives one full game: night actions, bid-ordered debate with per-statement
//! analyses, voting, and victory — logging every event as it happens.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agents::{
    build_prompt, repair_output, AgentBackend, AgentContext, AgentDecision, BackendError,
    DecisionRequest, HistoryItem, NightKnowledge, PlayerRef, ProtectionRecord, SeerResult,
    HISTORY_WINDOW,
};
use crate::config::GameConfig;
use crate::debate::{extract_mentions, order_speakers, Bid, InfluenceLedger};
use crate::deception::{
    record_statement_round, ProtocolError, Statement, StatementId, SuspicionMatrix,
};
use crate::game::{
    advance_phase, new_game, resolve_night, tally_votes, GameError, GameState, NightActions, Phase,
    PlayerId, Role, Vote, Winner,
};
use crate::log::{
    AbortPayload, BidRecord, BidsPayload, Event, EventSink, ExilePayload, GameStartedPayload,
    LogError, NightPayload, PhasePayload, PromptPayload, RawOutputPayload, RepairPayload,
    RoleAssignedPayload, RosterEntry, SnapshotPayload, VictoryPayload, Visibility, VotesPayload,
    WolfProposal,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("backend failure while deciding for {player}: {source}")]
    Backend { player: PlayerId, source: BackendError },
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub game_id: String,
    pub seed: u64,
    pub winner: Winner,
    pub rounds: u32,
    pub statements: u32,
    pub events: u64,
    pub final_state: GameState,
    pub final_matrix: SuspicionMatrix,
}

/// Observation hook used by tests: called with the log length and the exact
/// context handed to an agent, for every decision.
pub type ContextProbe<'a> = Box<dyn FnMut(u64, &AgentContext) + 'a>;

pub struct GameRunner<'a> {
    state: GameState,
    matrix: SuspicionMatrix,
    ledger: InfluenceLedger,
    rng: ChaCha8Rng,
    backend: &'a mut dyn AgentBackend,
    sink: &'a mut dyn EventSink,
    scratchpads: BTreeMap<PlayerId, String>,
    history: Vec<HistoryItem>,
    seer_results: Vec<SeerResult>,
    protections: Vec<ProtectionRecord>,
    next_statement: u32,
    statements: u32,
    pub context_probe: Option<ContextProbe<'a>>,
}

impl<'a> GameRunner<'a> {
    pub fn new(
        config: GameConfig,
        backend: &'a mut dyn AgentBackend,
        sink: &'a mut dyn EventSink,
    ) -> Result<Self, RunError> {
        let state = new_game(config.clone())?;
        let ids: Vec<PlayerId> = state.players.iter().map(|p| p.id).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(2);
        Ok(Self {
            matrix: SuspicionMatrix::new(ids.clone()),
            ledger: InfluenceLedger::new(ids, config.overbid),
            rng,
            backend,
            sink,
            scratchpads: BTreeMap::new(),
            history: Vec::new(),
            seer_results: Vec::new(),
            protections: Vec::new(),
            next_statement: 0,
            statements: 0,
            state,
            context_probe: None,
        })
    }

    pub fn run(mut self) -> Result<RunSummary, RunError> {
        self.emit_start()?;
        loop {
            match self.state.phase {
                Phase::Night => self.night()?,
                Phase::DayDebate => self.debate()?,
                Phase::DayVote => self.vote()?,
                Phase::Ended => break,
            }
        }
        Ok(RunSummary {
            game_id: self.sink.game_id().to_string(),
            seed: self.state.config.seed,
            winner: self.state.winner.unwrap_or(Winner::Undecided),
            rounds: self.state.round.min(self.state.config.max_rounds),
            statements: self.statements,
            events: self.sink.last_seq(),
            final_state: self.state,
            final_matrix: self.matrix,
        })
    }

    fn emit_start(&mut self) -> Result<(), RunError> {
        let roster: Vec<RosterEntry> = self
            .state
            .players
            .iter()
            .map(|p| RosterEntry { id: p.id, name: p.display_name.clone() })
            .collect();
        self.sink.append(
            Visibility::Public,
            Event::GameStarted(GameStartedPayload {
                game_id: self.sink.game_id().to_string(),
                backend: self.backend.kind(),
                config: self.state.config.clone(),
                roster,
            }),
        )?;
        for p in &self.state.players {
            self.sink.append(
                Visibility::Researcher,
                Event::RoleAssigned(RoleAssignedPayload {
                    player: p.id,
                    name: p.display_name.clone(),
                    role: p.role,
                }),
            )?;
        }
        // Wolves learn each other at game start.
        let wolves: Vec<(PlayerId, String)> = self
            .state
            .players
            .iter()
            .filter(|p| p.role.is_wolf())
            .map(|p| (p.id, p.display_name.clone()))
            .collect();
        for (id, name) in &wolves {
            self.sink.append(
                Visibility::Role { role: Role::Werewolf },
                Event::RoleAssigned(RoleAssignedPayload {
                    player: *id,
                    name: name.clone(),
                    role: Role::Werewolf,
                }),
            )?;
        }
        self.snapshot()?;
        Ok(())
    }

    fn snapshot(&mut self) -> Result<(), RunError> {
        self.sink.append(
            Visibility::Researcher,
            Event::StateSnapshot(SnapshotPayload {
                state: self.state.clone(),
                matrix: self.matrix.clone(),
            }),
        )?;
        Ok(())
    }

    fn build_context(&self, player: PlayerId) -> AgentContext {
        let me = &self.state.players[player.0 as usize];
        let players: Vec<PlayerRef> = self
            .state
            .players
            .iter()
            .map(|p| PlayerRef { id: p.id, name: p.display_name.clone() })
            .collect();
        let night_knowledge = match me.role {
            Role::Villager => NightKnowledge::Villager,
            Role::Werewolf => NightKnowledge::Werewolf {
                partner: self
                    .state
                    .players
                    .iter()
                    .find(|p| p.role.is_wolf() && p.id != player)
                    .map(|p| PlayerRef { id: p.id, name: p.display_name.clone() }),
            },
            Role::Seer => NightKnowledge::Seer { results: self.seer_results.clone() },
            Role::Doctor => NightKnowledge::Doctor { protected: self.protections.clone() },
        };
        let mut history = self.history.clone();
        if history.len() > HISTORY_WINDOW {
            history.drain(..history.len() - HISTORY_WINDOW);
        }
        AgentContext {
            player,
            name: me.display_name.clone(),
            role: me.role,
            round: self.state.round,
            phase: self.state.phase,
            players,
            living: self.state.living_set(),
            history,
            scratchpad: self.scratchpads.get(&player).cloned().unwrap_or_default(),
            night_knowledge,
            suspicion_row: self.matrix.row(player).collect(),
        }
    }

    /// One decision: build the scoped context, log the prompt, get the raw
    /// reply, log it verbatim, then parse with repair (logging any repair).
    fn decide(&mut self, player: PlayerId, req: &DecisionRequest) -> Result<AgentDecision, RunError> {
        let ctx = self.build_context(player);
        if let Some(probe) = self.context_probe.as_mut() {
            probe(self.sink.last_seq(), &ctx);
        }
        let prompt = build_prompt(&ctx, req);
        self.sink.append(
            Visibility::Private { player },
            Event::PromptIssued(PromptPayload {
                player,
                decision: req.tag(),
                statement: req.statement_id(),
                text: self.state.config.log_prompt_bodies.then(|| prompt.clone()),
            }),
        )?;
        let raw = match self.backend.reply(&ctx, req, &prompt, &mut self.rng) {
            Ok(raw) => raw,
            Err(source) => {
                self.sink.append(
                    Visibility::Public,
                    Event::GameAborted(AbortPayload {
                        reason: format!("backend failure while deciding for {player}: {source}"),
                    }),
                )?;
                return Err(RunError::Backend { player, source });
            }
        };
        self.sink.append(
            Visibility::Private { player },
            Event::RawOutput(RawOutputPayload {
                player,
                decision: req.tag(),
                statement: req.statement_id(),
                raw: raw.clone(),
            }),
        )?;
        let repaired = repair_output(&raw, req, &ctx);
        if repaired.was_repaired() {
            self.sink.append(
                Visibility::Researcher,
                Event::RepairApplied(RepairPayload {
                    player,
                    decision: req.tag(),
                    statement: req.statement_id(),
                    defaulted: repaired.defaulted.clone(),
                    reason: repaired.reason.clone().unwrap_or_default(),
                }),
            )?;
        }
        Ok(repaired.decision)
    }

    fn night_target(&mut self, player: PlayerId) -> Result<PlayerId, RunError> {
        match self.decide(player, &DecisionRequest::NightAction)? {
            AgentDecision::NightAction { target } => Ok(target),
            _ => unreachable!("repair guarantees the variant matches the request"),
        }
    }

    fn push_public_history(&mut self, event: &Event) {
        if let Some(item) = HistoryItem::from_public_event(event) {
            self.history.push(item);
        }
    }

    fn emit_public(&mut self, event: Event) -> Result<(), RunError> {
        self.push_public_history(&event);
        self.sink.append(Visibility::Public, event)?;
        Ok(())
    }

    fn night(&mut self) -> Result<(), RunError> {
        let round = self.state.round;
        let wolves: Vec<PlayerId> = self
            .state
            .living()
            .filter(|p| p.role.is_wolf())
            .map(|p| p.id)
            .collect();
        let mut proposals: Vec<WolfProposal> = Vec::new();
        for wolf in &wolves {
            let target = self.night_target(*wolf)?;
            proposals.push(WolfProposal { wolf: *wolf, target });
        }
        // With two living wolves the senior one (lower creation index)
        // prevails when proposals differ.
        let wolf_target = proposals.first().map(|p| p.target);

        let doctor = self.state.living_with_role(Role::Doctor);
        let doctor_protect = match doctor {
            Some(d) => Some(self.night_target(d)?),
            None => None,
        };
        let seer = self.state.living_with_role(Role::Seer);
        let seer_target = match seer {
            Some(s) => Some(self.night_target(s)?),
            None => None,
        };

        let actions = NightActions { wolf_target, doctor_protect, seer_target };
        let outcome = resolve_night(&mut self.state, &actions)?;

        if let Some((target, role)) = outcome.seer_learned {
            self.seer_results.push(SeerResult { round, target, role });
        }
        if let Some(target) = doctor_protect {
            self.protections.push(ProtectionRecord { round, target });
        }

        let base = NightPayload {
            round,
            eliminated: outcome.eliminated,
            protected_save: outcome.protected_save,
            wolf_proposals: None,
            wolf_target: None,
            doctor_protect: None,
            seer_target: None,
            seer_learned: None,
        };
        self.sink.append(
            Visibility::Researcher,
            Event::NightActionsResolved(NightPayload {
                wolf_proposals: Some(proposals.clone()),
                wolf_target,
                doctor_protect,
                seer_target,
                seer_learned: outcome.seer_learned.map(|(_, r)| r),
                ..base.clone()
            }),
        )?;
        if !wolves.is_empty() {
            self.sink.append(
                Visibility::Role { role: Role::Werewolf },
                Event::NightActionsResolved(NightPayload {
                    wolf_proposals: Some(proposals),
                    wolf_target,
                    eliminated: None,
                    protected_save: false,
                    ..base.clone()
                }),
            )?;
        }
        if let (Some(s), Some(target)) = (seer, seer_target) {
            self.sink.append(
                Visibility::Private { player: s },
                Event::NightActionsResolved(NightPayload {
                    seer_target: Some(target),
                    seer_learned: outcome.seer_learned.map(|(_, r)| r),
                    eliminated: None,
                    protected_save: false,
                    ..base.clone()
                }),
            )?;
        }
        if let (Some(d), Some(target)) = (doctor, doctor_protect) {
            self.sink.append(
                Visibility::Private { player: d },
                Event::NightActionsResolved(NightPayload {
                    doctor_protect: Some(target),
                    eliminated: None,
                    protected_save: false,
                    ..base.clone()
                }),
            )?;
        }
        self.emit_public(Event::NightActionsResolved(base))?;
        self.advance()
    }

    fn debate(&mut self) -> Result<(), RunError> {
        let round = self.state.round;
        let cap_turns = self.state.config.max_debate_turns_per_day;
        let cap_per_player = self.state.config.max_turns_per_player_per_day;
        let mut spoken: BTreeMap<PlayerId, u32> = BTreeMap::new();
        let mut previous: Option<Statement> = None;

        for turn_index in 0..cap_turns {
            let living = self.state.living_ids();
            let eligible: Vec<PlayerId> = living
                .iter()
                .copied()
                .filter(|p| spoken.get(p).copied().unwrap_or(0) < cap_per_player)
                .collect();
            if eligible.is_empty() {
                break;
            }

            let living_names: Vec<(PlayerId, String)> = living
                .iter()
                .map(|&id| (id, self.state.name(id).to_string()))
                .collect();
            let name_refs: Vec<(PlayerId, &str)> =
                living_names.iter().map(|(id, n)| (*id, n.as_str())).collect();
            let mentions = extract_mentions(previous.as_ref(), &name_refs);

            let mut bids: Vec<Bid> = Vec::with_capacity(living.len());
            for &player in &living {
                match self.decide(player, &DecisionRequest::Bid)? {
                    AgentDecision::Bid(bid) => bids.push(bid),
                    _ => unreachable!("repair guarantees the variant matches the request"),
                }
            }
            let order = order_speakers(&bids, &self.ledger, &mentions, &mut self.rng)
                .expect("runner collects one bid per living player");

            let records: Vec<BidRecord> = bids
                .iter()
                .map(|b| BidRecord {
                    player: b.player,
                    value: b.value,
                    credibility: self.ledger.credibility(b.player),
                    effective: crate::debate::effective_bid(b, &self.ledger),
                    mentions: mentions.count(b.player),
                })
                .collect();
            self.sink.append(
                Visibility::Researcher,
                Event::BidsCollected(BidsPayload { round, turn_index, bids: records, order: order.clone() }),
            )?;

            let speaker = *order
                .iter()
                .find(|p| eligible.contains(p))
                .expect("eligible speakers are a subset of the ordering");
            let speaker_bid = bids.iter().find(|b| b.player == speaker).map(|b| b.value).unwrap_or(0);

            let (text, scratchpad_delta) =
                match self.decide(speaker, &DecisionRequest::Utterance { turn_index })? {
                    AgentDecision::Utterance { text, scratchpad } => (text, scratchpad),
                    _ => unreachable!("repair guarantees the variant matches the request"),
                };
            self.next_statement += 1;
            let statement = Statement {
                id: StatementId(self.next_statement),
                speaker,
                round,
                phase: Phase::DayDebate,
                turn_index,
                text,
            };
            self.emit_public(Event::StatementMade(statement.clone()))?;
            if !scratchpad_delta.is_empty() {
                let pad = self.scratchpads.entry(speaker).or_default();
                pad.push_str(&scratchpad_delta);
                pad.push('\n');
            }
            self.statements += 1;

            let self_analysis =
                match self.decide(speaker, &DecisionRequest::SelfAssessment { statement: statement.clone() })? {
                    AgentDecision::SelfAnalysis(a) => a,
                    _ => unreachable!("repair guarantees the variant matches the request"),
                };
            let mut peers = Vec::new();
            for &observer in &living {
                if observer == speaker {
                    continue;
                }
                match self.decide(observer, &DecisionRequest::PeerAssessment { statement: statement.clone() })? {
                    AgentDecision::PeerAnalysis(a) => peers.push(a),
                    _ => unreachable!("repair guarantees the variant matches the request"),
                }
            }
            record_statement_round(
                &statement,
                &self_analysis,
                &peers,
                &mut self.matrix,
                &self.state.living_set(),
                self.state.config.alpha,
                self.sink,
            )?;

            self.ledger.apply_overbid_decay(speaker, speaker_bid);
            *spoken.entry(speaker).or_insert(0) += 1;
            previous = Some(statement);
        }
        self.advance()
    }

    fn vote(&mut self) -> Result<(), RunError> {
        let round = self.state.round;
        let living = self.state.living_set();
        let mut votes: Vec<Vote> = Vec::new();
        for &voter in &living {
            match self.decide(voter, &DecisionRequest::Vote)? {
                AgentDecision::Vote { target } => votes.push(Vote { voter, target }),
                _ => unreachable!("repair guarantees the variant matches the request"),
            }
        }
        let exiled = tally_votes(&votes, &living)?;

        let mut tally: BTreeMap<PlayerId, u32> = BTreeMap::new();
        for v in &votes {
            if let Some(t) = v.target {
                *tally.entry(t).or_insert(0) += 1;
            }
        }
        self.emit_public(Event::VotesCast(VotesPayload { round, votes, tally }))?;
        self.emit_public(Event::ExileResolved(ExilePayload { round, exiled }))?;
        if let Some(victim) = exiled {
            self.state.mark_dead(victim);
        }
        self.advance()
    }

    /// Advance the phase machine, emitting the transition and, when a round
    /// or the game completes, the snapshot and victory records.
    fn advance(&mut self) -> Result<(), RunError> {
        let transition = advance_phase(&mut self.state)?;
        self.emit_public(Event::PhaseAdvanced(PhasePayload {
            from: transition.from,
            to: transition.to,
            round: transition.round,
        }))?;
        if transition.to == Phase::Ended {
            let winner = transition.winner.unwrap_or(Winner::Undecided);
            self.emit_public(Event::VictoryDeclared(VictoryPayload { winner, round: transition.round }))?;
            self.snapshot()?;
        } else if transition.from == Phase::DayVote {
            self.snapshot()?;
        }
        Ok(())
    }
}
