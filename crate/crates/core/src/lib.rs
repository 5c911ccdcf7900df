//! Perfectly safe aggregation of a dealt deck of cards.
//!
//! `m + 1` agents each hold a hand from a deck of `q^{d+1}` cards. Alice maps
//! the cards onto the points of F_q^{d+1} so that the cards she does not hold
//! form a transversal hyperplane; every other agent then announces the
//! projections of their points shifted by that hyperplane's slope. Afterwards
//! every agent knows the whole deal, while an eavesdropper who sees every
//! announcement assigns each card to each agent with exactly its prior
//! probability.
//!
//! - [`field`]: GF(p^k) arithmetic.
//! - [`geometry`]: transversal hyperplanes and shifted projections.
//! - [`protocol`]: deals, tokens, runs, execution checks and reconstruction.
//! - [`eavesdropper`]: possible deals and exact posterior probabilities.
//! - [`params`]: balanced suitable parameters.
//! - [`harness`] and [`transcript`]: sessions and their JSON files.

pub mod eavesdropper;
pub mod field;
pub mod fixtures;
pub mod geometry;
pub mod harness;
pub mod params;
pub mod protocol;
pub mod transcript;

pub use eavesdropper::{probability_report, SafetyReport};
pub use field::{Field, FieldElement, FieldError, FieldSpec};
pub use geometry::{AffineSpace, Point, TransversalHyperplane};
pub use harness::{new_session, Session};
pub use protocol::{validate_suitable, Agent, Card, Deal, Run, SuitableParams, Token, Variant};
