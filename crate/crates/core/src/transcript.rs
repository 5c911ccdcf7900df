//! JSON files: run transcripts and deals.
//!
//! Projection point lists are sorted lexicographically and the assignment map
//! by card id, so equal runs serialize to identical bytes.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::protocol::{
    validate_suitable, Agent, Assignment, Card, Deal, ParamsError, ProtocolError, Run, SuitableParams, Token,
    Variant,
};

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamsError),
    #[error("malformed transcript: {0}")]
    Malformed(String),
}

impl From<ProtocolError> for TranscriptError {
    fn from(e: ProtocolError) -> Self {
        TranscriptError::Malformed(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub m: usize,
    pub q: u64,
    pub d: usize,
    pub tau: Vec<usize>,
}

impl ParamsRecord {
    pub fn from_params(p: &SuitableParams) -> Self {
        ParamsRecord { m: p.m(), q: p.q(), d: p.d(), tau: p.tau().sizes().to_vec() }
    }

    pub fn validate(&self) -> Result<SuitableParams, ParamsError> {
        validate_suitable(self.m, self.q, self.d, &self.tau)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TokenRecord {
    Assignment { map: Vec<(Card, Point)> },
    Projection { points: Vec<Point> },
}

fn is_shifted(v: &Variant) -> bool {
    *v == Variant::Shifted
}

/// A public transcript. The variant is written only for the unshifted baseline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub params: ParamsRecord,
    pub tokens: Vec<TokenRecord>,
    #[serde(default, skip_serializing_if = "is_shifted")]
    pub variant: Variant,
}

impl Transcript {
    pub fn new(params: &SuitableParams, variant: Variant, run: &Run) -> Transcript {
        let tokens = run
            .tokens()
            .iter()
            .map(|t| match t {
                Token::Assignment(f) => TokenRecord::Assignment {
                    map: f.iter().map(|(c, p)| (c, p.clone())).collect(),
                },
                // BTreeSet iteration is already lexicographic
                Token::Projection(x) => TokenRecord::Projection { points: x.iter().cloned().collect() },
            })
            .collect();
        Transcript { params: ParamsRecord::from_params(params), tokens, variant }
    }

    pub fn params(&self) -> Result<SuitableParams, TranscriptError> {
        Ok(self.params.validate()?)
    }

    /// Rebuilds the run; duplicate cards or points make the transcript malformed.
    pub fn run(&self) -> Result<Run, TranscriptError> {
        let mut run = Run::new();
        for record in &self.tokens {
            let token = match record {
                TokenRecord::Assignment { map } => Token::Assignment(Assignment::from_pairs(map.iter().cloned())?),
                TokenRecord::Projection { points } => {
                    let set: BTreeSet<Point> = points.iter().cloned().collect();
                    if set.len() != points.len() {
                        return Err(TranscriptError::Malformed("repeated point in a projection".into()));
                    }
                    Token::Projection(set)
                }
            };
            run.push(token)?;
        }
        Ok(run)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcripts always serialize")
    }

    pub fn from_json(s: &str) -> Result<Transcript, TranscriptError> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DealRecord {
    pub tau: Vec<usize>,
    pub hands: IndexMap<Agent, Vec<Card>>,
}

impl DealRecord {
    pub fn from_deal(deal: &Deal) -> DealRecord {
        DealRecord {
            tau: deal.sizes(),
            hands: deal
                .hands()
                .iter()
                .enumerate()
                .map(|(i, h)| (Agent::from_index(i), h.iter().copied().collect()))
                .collect(),
        }
    }

    pub fn to_deal(&self) -> Result<Deal, TranscriptError> {
        let mut hands = Vec::with_capacity(self.tau.len());
        for (i, &size) in self.tau.iter().enumerate() {
            let agent = Agent::from_index(i);
            let cards = self
                .hands
                .get(&agent)
                .ok_or_else(|| TranscriptError::Malformed(format!("missing hand for {agent}")))?;
            let hand: BTreeSet<Card> = cards.iter().copied().collect();
            if hand.len() != size || cards.len() != size {
                return Err(TranscriptError::Malformed(format!("{agent} should hold {size} distinct cards")));
            }
            hands.push(hand);
        }
        if self.hands.len() != self.tau.len() {
            return Err(TranscriptError::Malformed("hands listed for unknown agents".into()));
        }
        Ok(Deal::from_hands(hands)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("deals always serialize")
    }

    pub fn from_json(s: &str) -> Result<DealRecord, TranscriptError> {
        Ok(serde_json::from_str(s)?)
    }
}
