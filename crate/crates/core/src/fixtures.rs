//! The 16-card, three-agent example over the plane F_4^2.
//!
//! Card `i` sits at `(i / 4, i % 4)` in canonical values, where F_4 is
//! `{0, 1, φ, φ²} = {0, 1, 2, 3}`. B1 holds the cards on `(1,1)` and `(φ²,φ²)`,
//! B2 those on `(0,0)` and `(φ,φ)`, and Alice the twelve off the diagonal.

use std::collections::BTreeSet;

use crate::geometry::{Point, TransversalHyperplane};
use crate::protocol::{
    bob_announcement, validate_suitable, Agent, Assignment, Card, Deal, Run, SuitableParams, Token, Variant,
};

pub const PHI: u32 = 2;
pub const PHI2: u32 = 3;

pub fn worked_example_params() -> SuitableParams {
    validate_suitable(2, 4, 1, &[12, 2, 2]).expect("(12,2,2) over F_4 is suitable")
}

pub fn card_at(x: u32, y: u32) -> Card {
    Card(4 * x + y)
}

pub fn worked_example_assignment() -> Assignment {
    Assignment::from_pairs((0..16).map(|i| (Card(i), Point(vec![i / 4, i % 4])))).expect("distinct cards")
}

pub fn worked_example_deal() -> Deal {
    let bob: BTreeSet<Card> = [card_at(1, 1), card_at(PHI2, PHI2)].into();
    let cath: BTreeSet<Card> = [card_at(0, 0), card_at(PHI, PHI)].into();
    let alice = (0..16).map(Card).filter(|c| !bob.contains(c) && !cath.contains(c)).collect();
    Deal::from_hands(vec![alice, bob, cath]).expect("disjoint hands")
}

/// The line `y = x`.
pub fn diagonal() -> TransversalHyperplane {
    TransversalHyperplane { slope: vec![1], intercept: 0 }
}

/// The line `y = φx`.
pub fn phi_line() -> TransversalHyperplane {
    TransversalHyperplane { slope: vec![PHI], intercept: 0 }
}

/// Full run for the pinned assignment and deal.
pub fn worked_example_run(variant: Variant) -> Run {
    let params = worked_example_params();
    let deal = worked_example_deal();
    let f = worked_example_assignment();
    let mut run = Run::new();
    run.push(Token::Assignment(f.clone())).unwrap();
    for k in 1..=2 {
        let x = bob_announcement(variant, &f, deal.hand(Agent::Bob(k)), &params).unwrap();
        run.push(Token::Projection(x)).unwrap();
    }
    run
}
