//! In-process broadcast sessions.
//!
//! Agents speak in turn order A, B1, …, Bm onto an append-only log. Each agent
//! computes its token and final reconstruction from its own state only; Eve
//! sees exactly the log.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eavesdropper::{probability_report, AnalysisError, SafetyReport};
use crate::protocol::{
    alice_token, bob_announcement, check_execution, deal_random, reconstruct_deal, Agent, Card, Deal,
    InvalidExecution, ProtocolError, Run, SuitableParams, Token, Variant,
};
use crate::transcript::Transcript;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("session is already complete")]
    SessionComplete,
    #[error("session is not complete yet")]
    SessionIncomplete,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// What one agent knows: its hand and the broadcasts so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub agent: Agent,
    pub hand: BTreeSet<Card>,
    pub observed: Run,
    pub reconstruction: Option<Deal>,
}

#[derive(Debug, Clone)]
pub struct Session {
    params: SuitableParams,
    variant: Variant,
    deck: BTreeSet<Card>,
    deal: Deal,
    log: Run,
    agents: Vec<AgentState>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub reconstructions: BTreeMap<Agent, Deal>,
    pub report: SafetyReport,
}

/// Deals `deck` at random from `seed`; the same seed drives Alice's choices.
pub fn new_session(
    params: &SuitableParams,
    deck: &BTreeSet<Card>,
    seed: u64,
    variant: Variant,
) -> Result<Session, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deal = deal_random(params, deck, &mut rng)?;
    Ok(Session::assemble(params, deal, rng, variant))
}

impl Session {
    /// A session over a given deal.
    pub fn with_deal(params: &SuitableParams, deal: Deal, seed: u64, variant: Variant) -> Result<Session, HarnessError> {
        if deal.sizes() != params.tau().sizes() {
            let actual = deal.cards().len();
            return Err(ProtocolError::DeckSizeMismatch { expected: params.deck_size(), actual }.into());
        }
        Ok(Session::assemble(params, deal, ChaCha8Rng::seed_from_u64(seed), variant))
    }

    fn assemble(params: &SuitableParams, deal: Deal, rng: ChaCha8Rng, variant: Variant) -> Session {
        let agents = params
            .agents()
            .map(|agent| AgentState {
                agent,
                hand: deal.hand(agent).clone(),
                observed: Run::new(),
                reconstruction: None,
            })
            .collect();
        Session { params: params.clone(), variant, deck: deal.cards(), deal, log: Run::new(), agents, rng }
    }

    pub fn params(&self) -> &SuitableParams {
        &self.params
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn deck(&self) -> &BTreeSet<Card> {
        &self.deck
    }

    pub fn deal(&self) -> &Deal {
        &self.deal
    }

    pub fn log(&self) -> &Run {
        &self.log
    }

    /// Everything the eavesdropper intercepts.
    pub fn eve_view(&self) -> &Run {
        &self.log
    }

    pub fn agent(&self, agent: Agent) -> &AgentState {
        &self.agents[agent.index()]
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn is_complete(&self) -> bool {
        self.log.is_complete(self.params.m())
    }

    /// Lets the next agent broadcast; returns the token it sent.
    pub fn step(&mut self) -> Result<&Token, HarnessError> {
        let speaker = self.log.next_agent(self.params.m()).ok_or(HarnessError::SessionComplete)?;
        let state = &self.agents[speaker.index()];
        let token = match speaker {
            Agent::Alice => Token::Assignment(alice_token(&state.hand, &self.deck, &self.params, &mut self.rng)?),
            Agent::Bob(_) => {
                let f = state.observed.assignment().expect("Alice speaks first");
                Token::Projection(bob_announcement(self.variant, f, &state.hand, &self.params)?)
            }
        };
        self.log.push(token.clone())?;
        for state in &mut self.agents {
            state.observed.push(token.clone())?;
        }
        if self.is_complete() {
            for state in &mut self.agents {
                let deal = reconstruct_deal(state.agent, &state.hand, &state.observed, &self.params, self.variant)?;
                state.reconstruction = Some(deal);
            }
        }
        Ok(self.log.tokens().last().expect("just pushed"))
    }

    pub fn run_to_completion(&mut self) -> Result<(), HarnessError> {
        while !self.is_complete() {
            self.step()?;
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<Outcome, HarnessError> {
        if !self.is_complete() {
            return Err(HarnessError::SessionIncomplete);
        }
        let reconstructions = self
            .agents
            .iter()
            .map(|s| (s.agent, s.reconstruction.clone().expect("set on completion")))
            .collect();
        let report = probability_report(self.eve_view(), &self.params, self.variant)?;
        Ok(Outcome { reconstructions, report })
    }

    pub fn transcript(&self) -> Transcript {
        Transcript::new(&self.params, self.variant, &self.log)
    }
}

/// Result of checking a transcript against a claimed deal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub execution: Result<(), InvalidExecution>,
    /// Agents whose reconstruction differs from the deal or fails.
    pub uninformed: Vec<Agent>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.execution.is_ok() && self.uninformed.is_empty()
    }
}

pub fn verify(params: &SuitableParams, variant: Variant, run: &Run, deal: &Deal) -> Verification {
    let execution = check_execution(deal, run, params, variant);
    let uninformed = params
        .agents()
        .filter(|&a| reconstruct_deal(a, deal.hand(a), run, params, variant).as_ref() != Ok(deal))
        .collect();
    Verification { execution, uninformed }
}
