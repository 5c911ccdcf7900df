//! The shifted projection protocol.
//!
//! Alice maps every card to a point of F_q^{d+1} so that the cards she does
//! not hold form a transversal hyperplane `V`, and broadcasts that map. Each
//! Bob `B_k` then broadcasts the shifted projections of his points,
//! `X_k = { π(f(c)) + σ(V) : c ∈ H_{B_k} }`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{is_prime_power, Field};
use crate::geometry::{AffineSpace, GeometryError, Point, TransversalHyperplane};

/// Upper bound on q^{d+1}; every point of the ambient space gets a card.
pub const MAX_DECK: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Card(pub u32);

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Cards `0..n`.
pub fn standard_deck(n: usize) -> BTreeSet<Card> {
    (0..n as u32).map(Card).collect()
}

/// Alice, or Bob number `k` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agent {
    Alice,
    Bob(usize),
}

impl Agent {
    /// Position in turn order and in distribution types.
    pub fn index(self) -> usize {
        match self {
            Agent::Alice => 0,
            Agent::Bob(k) => k,
        }
    }

    pub fn from_index(i: usize) -> Agent {
        if i == 0 {
            Agent::Alice
        } else {
            Agent::Bob(i)
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Agent::Alice => write!(f, "A"),
            Agent::Bob(k) => write!(f, "B{k}"),
        }
    }
}

impl FromStr for Agent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(Agent::Alice),
            _ => s
                .strip_prefix('B')
                .and_then(|k| k.parse().ok())
                .filter(|&k| k > 0)
                .map(Agent::Bob)
                .ok_or_else(|| format!("unknown agent {s:?}")),
        }
    }
}

impl Serialize for Agent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Agent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hand sizes `(τ_A, τ_{B_1}, …, τ_{B_m})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistributionType(Vec<usize>);

impl DistributionType {
    pub fn new(sizes: Vec<usize>) -> Result<Self, ParamsError> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(ParamsError::EmptyHand);
        }
        Ok(DistributionType(sizes))
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn size(&self, agent: Agent) -> usize {
        self.0[agent.index()]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn agents(&self) -> impl Iterator<Item = Agent> {
        (0..self.0.len()).map(Agent::from_index)
    }
}

impl fmt::Display for DistributionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("need at least two agents besides Alice (m = {0})")]
    TooFewAgents(usize),
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("q = {q} must exceed m = {m}")]
    QNotAboveM { q: u64, m: usize },
    #[error("dimension d must be positive")]
    ZeroDimension,
    #[error("deck of size q^(d+1) is too large")]
    TooLarge,
    #[error("distribution type lists {actual} agents, expected {expected}")]
    AgentCountMismatch { expected: usize, actual: usize },
    #[error("every hand must be non-empty")]
    EmptyHand,
    #[error("total deck size {actual} differs from q^(d+1) = {expected}")]
    TotalSizeWrong { expected: u64, actual: usize },
    #[error("Alice must hold q^(d+1) - q^d = {expected} cards, not {actual}")]
    AliceSizeWrong { expected: u64, actual: usize },
    #[error("B{bob} holds {actual} cards, needs more than q^(d-1) = {bound}")]
    BobTooSmall { bob: usize, actual: usize, bound: u64 },
    #[error("parameters are infeasible: {0}")]
    InfeasibleParams(String),
}

/// A validated `(m, q, d, τ)` bundle.
#[derive(Debug, Clone)]
pub struct SuitableParams {
    m: usize,
    q: u64,
    d: usize,
    tau: DistributionType,
    space: AffineSpace,
}

impl PartialEq for SuitableParams {
    fn eq(&self, other: &Self) -> bool {
        (self.m, self.q, self.d, &self.tau) == (other.m, other.q, other.d, &other.tau)
    }
}

impl Eq for SuitableParams {}

impl SuitableParams {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn tau(&self) -> &DistributionType {
        &self.tau
    }

    pub fn space(&self) -> &AffineSpace {
        &self.space
    }

    pub fn deck_size(&self) -> usize {
        self.tau.total()
    }

    pub fn agents(&self) -> impl Iterator<Item = Agent> {
        self.tau.agents()
    }
}

/// Checks the suitability constraints in order and reports the first violation.
pub fn validate_suitable(m: usize, q: u64, d: usize, tau: &[usize]) -> Result<SuitableParams, ParamsError> {
    if m <= 1 {
        return Err(ParamsError::TooFewAgents(m));
    }
    if !is_prime_power(q) {
        return Err(ParamsError::NotPrimePower(q));
    }
    if q <= m as u64 {
        return Err(ParamsError::QNotAboveM { q, m });
    }
    if d == 0 {
        return Err(ParamsError::ZeroDimension);
    }
    let total = q
        .checked_pow(d as u32 + 1)
        .filter(|&t| t <= MAX_DECK)
        .ok_or(ParamsError::TooLarge)?;
    let plane = total / q;
    let bound = plane / q;
    if tau.len() != m + 1 {
        return Err(ParamsError::AgentCountMismatch { expected: m + 1, actual: tau.len() });
    }
    let tau = DistributionType::new(tau.to_vec())?;
    if tau.total() as u64 != total {
        return Err(ParamsError::TotalSizeWrong { expected: total, actual: tau.total() });
    }
    if tau.size(Agent::Alice) as u64 != total - plane {
        return Err(ParamsError::AliceSizeWrong { expected: total - plane, actual: tau.size(Agent::Alice) });
    }
    for k in 1..=m {
        let actual = tau.size(Agent::Bob(k));
        if actual as u64 <= bound {
            return Err(ParamsError::BobTooSmall { bob: k, actual, bound });
        }
    }
    let field = Field::new(q).map_err(|_| ParamsError::NotPrimePower(q))?;
    Ok(SuitableParams { m, q, d, tau, space: AffineSpace::new(field, d) })
}

/// A partition of the deck into hands, indexed by agent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Deal {
    hands: Vec<BTreeSet<Card>>,
}

impl Deal {
    /// Fails if two hands share a card.
    pub fn from_hands(hands: Vec<BTreeSet<Card>>) -> Result<Deal, ProtocolError> {
        let mut seen = BTreeSet::new();
        for hand in &hands {
            for &c in hand {
                if !seen.insert(c) {
                    return Err(ProtocolError::DuplicateCard(c));
                }
            }
        }
        Ok(Deal { hands })
    }

    pub fn hand(&self, agent: Agent) -> &BTreeSet<Card> {
        &self.hands[agent.index()]
    }

    pub fn hands(&self) -> &[BTreeSet<Card>] {
        &self.hands
    }

    pub fn holder(&self, card: Card) -> Option<Agent> {
        self.hands.iter().position(|h| h.contains(&card)).map(Agent::from_index)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.hands.iter().map(BTreeSet::len).collect()
    }

    pub fn cards(&self) -> BTreeSet<Card> {
        self.hands.iter().flatten().copied().collect()
    }
}

/// Alice's announcement: an assignment of cards to ambient points.
///
/// Transcripts may carry maps that are not bijections, so that is checked
/// separately by [`Assignment::is_bijection`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    forward: BTreeMap<Card, Point>,
    backward: BTreeMap<Point, Card>,
}

impl Assignment {
    pub fn from_pairs<I: IntoIterator<Item = (Card, Point)>>(pairs: I) -> Result<Self, ProtocolError> {
        let mut forward = BTreeMap::new();
        let mut backward = BTreeMap::new();
        for (card, point) in pairs {
            if forward.insert(card, point.clone()).is_some() {
                return Err(ProtocolError::DuplicateCard(card));
            }
            backward.insert(point, card);
        }
        Ok(Assignment { forward, backward })
    }

    pub fn point(&self, card: Card) -> Option<&Point> {
        self.forward.get(&card)
    }

    pub fn card_at(&self, point: &Point) -> Option<Card> {
        self.backward.get(point).copied()
    }

    /// Pairs sorted by card.
    pub fn iter(&self) -> impl Iterator<Item = (Card, &Point)> {
        self.forward.iter().map(|(&c, p)| (c, p))
    }

    pub fn cards(&self) -> impl Iterator<Item = Card> + '_ {
        self.forward.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// True iff this maps its cards one-to-one onto every point of F_q^{d+1}.
    pub fn is_bijection(&self, space: &AffineSpace) -> bool {
        self.forward.len() as u64 == space.ambient_size()
            && self.backward.len() == self.forward.len()
            && self
                .backward
                .keys()
                .all(|p| p.dim() == space.d() + 1 && p.coords().iter().all(|&c| c < space.q()))
    }

    pub fn image<'a, I>(&self, hand: I) -> Result<Vec<Point>, ProtocolError>
    where
        I: IntoIterator<Item = &'a Card>,
    {
        hand.into_iter()
            .map(|c| self.point(*c).cloned().ok_or(ProtocolError::UnknownCard(*c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Assignment(Assignment),
    Projection(BTreeSet<Point>),
}

/// The public transcript: an assignment followed by projection sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Run {
    tokens: Vec<Token>,
}

impl Run {
    pub fn new() -> Run {
        Run::default()
    }

    pub fn from_tokens(tokens: Vec<Token>) -> Result<Run, ProtocolError> {
        let mut run = Run::new();
        for t in tokens {
            run.push(t)?;
        }
        Ok(run)
    }

    /// Appends a token; the first must be an assignment and the rest projections.
    pub fn push(&mut self, token: Token) -> Result<(), ProtocolError> {
        match (&token, self.tokens.is_empty()) {
            (Token::Assignment(_), true) | (Token::Projection(_), false) => {
                self.tokens.push(token);
                Ok(())
            }
            _ => Err(ProtocolError::TokenOrder(self.tokens.len())),
        }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn assignment(&self) -> Option<&Assignment> {
        match self.tokens.first() {
            Some(Token::Assignment(f)) => Some(f),
            _ => None,
        }
    }

    /// Announced sets `X_1, X_2, …` so far.
    pub fn projections(&self) -> impl Iterator<Item = &BTreeSet<Point>> {
        self.tokens.iter().filter_map(|t| match t {
            Token::Projection(x) => Some(x),
            Token::Assignment(_) => None,
        })
    }

    /// Whose turn it is after this run, or `None` when complete.
    pub fn next_agent(&self, m: usize) -> Option<Agent> {
        (self.tokens.len() <= m).then(|| Agent::from_index(self.tokens.len()))
    }

    pub fn is_complete(&self, m: usize) -> bool {
        self.tokens.len() == m + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("deck has {actual} cards, expected {expected}")]
    DeckSizeMismatch { expected: usize, actual: usize },
    #[error("{agent} holds {actual} cards, expected {expected}")]
    HandSizeWrong { agent: Agent, expected: usize, actual: usize },
    #[error("card {0} appears more than once")]
    DuplicateCard(Card),
    #[error("card {0} is not part of the deck or assignment")]
    UnknownCard(Card),
    #[error("hand does not lie on the hyperplane")]
    HandNotOnHyperplane,
    #[error("token {0} is out of order")]
    TokenOrder(usize),
    #[error("malformed run: {0}")]
    MalformedRun(String),
    #[error("inconsistent run: {0}")]
    InconsistentRun(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Which announcement the Bobs make.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `π(w) + σ(V)`: perfectly safe.
    #[default]
    Shifted,
    /// `π(w)`: only weakly safe.
    Unshifted,
}

impl Variant {
    pub fn announce(self, space: &AffineSpace, v: &TransversalHyperplane, w: &Point) -> Result<Point, GeometryError> {
        match self {
            Variant::Shifted => space.shift_down(v, w),
            Variant::Unshifted => {
                if !space.contains(v, w)? {
                    return Err(GeometryError::PointNotOnHyperplane(w.clone()));
                }
                space.project(w)
            }
        }
    }

    pub fn recover(self, space: &AffineSpace, v: &TransversalHyperplane, y: &Point) -> Result<Point, GeometryError> {
        match self {
            Variant::Shifted => space.shift_up(v, y),
            Variant::Unshifted => space.lift(v, y),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Shifted => "shifted",
            Variant::Unshifted => "unshifted",
        })
    }
}

fn check_deck(params: &SuitableParams, deck: &BTreeSet<Card>) -> Result<(), ProtocolError> {
    if deck.len() != params.deck_size() {
        return Err(ProtocolError::DeckSizeMismatch { expected: params.deck_size(), actual: deck.len() });
    }
    Ok(())
}

/// Deals the deck uniformly at random according to `τ`.
pub fn deal_random<R: Rng + ?Sized>(
    params: &SuitableParams,
    deck: &BTreeSet<Card>,
    rng: &mut R,
) -> Result<Deal, ProtocolError> {
    check_deck(params, deck)?;
    let mut cards: Vec<Card> = deck.iter().copied().collect();
    cards.shuffle(rng);
    let mut rest = cards.as_slice();
    let mut hands = Vec::with_capacity(params.m() + 1);
    for &size in params.tau().sizes() {
        let (hand, tail) = rest.split_at(size);
        hands.push(hand.iter().copied().collect());
        rest = tail;
    }
    Deal::from_hands(hands)
}

/// Alice's announcement for a fixed hidden hyperplane: uniform bijections of
/// her hand onto the complement of `v` and of the other cards onto `v`.
pub fn alice_token_on<R: Rng + ?Sized>(
    hand_a: &BTreeSet<Card>,
    deck: &BTreeSet<Card>,
    params: &SuitableParams,
    v: &TransversalHyperplane,
    rng: &mut R,
) -> Result<Assignment, ProtocolError> {
    check_deck(params, deck)?;
    let expected = params.tau().size(Agent::Alice);
    if hand_a.len() != expected {
        return Err(ProtocolError::HandSizeWrong { agent: Agent::Alice, expected, actual: hand_a.len() });
    }
    if let Some(&c) = hand_a.iter().find(|c| !deck.contains(c)) {
        return Err(ProtocolError::UnknownCard(c));
    }
    let space = params.space();
    let (mut on, mut off): (Vec<Point>, Vec<Point>) = space
        .ambient_points()
        .partition(|x| space.contains(v, x).expect("dimensions fixed by params"));
    off.shuffle(rng);
    on.shuffle(rng);
    let others = deck.iter().filter(|c| !hand_a.contains(c));
    Assignment::from_pairs(hand_a.iter().copied().zip(off).chain(others.copied().zip(on)))
}

/// Alice's announcement: a uniformly random valid assignment.
pub fn alice_token<R: Rng + ?Sized>(
    hand_a: &BTreeSet<Card>,
    deck: &BTreeSet<Card>,
    params: &SuitableParams,
    rng: &mut R,
) -> Result<Assignment, ProtocolError> {
    let space = params.space();
    let index = rng.gen_range(0..space.ambient_size());
    let v = space.transversal_hyperplanes().nth(index as usize).expect("index below q^(d+1)");
    alice_token_on(hand_a, deck, params, &v, rng)
}

/// The hyperplane formed by the points Alice does not hold.
pub fn alice_hyperplane(
    f: &Assignment,
    hand_a: &BTreeSet<Card>,
    params: &SuitableParams,
) -> Result<TransversalHyperplane, ProtocolError> {
    let space = params.space();
    if !f.is_bijection(space) {
        return Err(ProtocolError::InconsistentRun("assignment is not a bijection".into()));
    }
    let held: BTreeSet<Point> = f.image(hand_a)?.into_iter().collect();
    let complement: Vec<Point> = space.ambient_points().filter(|x| !held.contains(x)).collect();
    space
        .as_transversal(&complement)
        .ok_or_else(|| ProtocolError::InconsistentRun("complement of Alice's hand is not transversal".into()))
}

/// The unique transversal hyperplane containing `f[hand]`.
pub fn infer_hyperplane(
    f: &Assignment,
    hand: &BTreeSet<Card>,
    params: &SuitableParams,
) -> Result<TransversalHyperplane, ProtocolError> {
    let points = f.image(hand)?;
    Ok(params.space().unique_hyperplane_containing(&points)?)
}

/// `X = { Proj↓_V(f(c)) : c ∈ hand }`.
pub fn bob_token(
    f: &Assignment,
    v: &TransversalHyperplane,
    hand: &BTreeSet<Card>,
    params: &SuitableParams,
) -> Result<BTreeSet<Point>, ProtocolError> {
    announce(Variant::Shifted, f, v, hand, params)
}

/// `X = π[f[hand]]`; the weakly safe baseline.
pub fn bob_token_unshifted(
    f: &Assignment,
    hand: &BTreeSet<Card>,
    params: &SuitableParams,
) -> Result<BTreeSet<Point>, ProtocolError> {
    f.image(hand)?
        .iter()
        .map(|w| params.space().project(w).map_err(ProtocolError::from))
        .collect()
}

fn announce(
    variant: Variant,
    f: &Assignment,
    v: &TransversalHyperplane,
    hand: &BTreeSet<Card>,
    params: &SuitableParams,
) -> Result<BTreeSet<Point>, ProtocolError> {
    let space = params.space();
    f.image(hand)?
        .iter()
        .map(|w| {
            variant.announce(space, v, w).map_err(|e| match e {
                GeometryError::PointNotOnHyperplane(_) => ProtocolError::HandNotOnHyperplane,
                e => e.into(),
            })
        })
        .collect()
}

/// Announcement of `B_k` computed from his own view: his hand and the assignment.
pub fn bob_announcement(
    variant: Variant,
    f: &Assignment,
    hand: &BTreeSet<Card>,
    params: &SuitableParams,
) -> Result<BTreeSet<Point>, ProtocolError> {
    let v = infer_hyperplane(f, hand, params)?;
    match variant {
        Variant::Shifted => bob_token(f, &v, hand, params),
        Variant::Unshifted => bob_token_unshifted(f, hand, params),
    }
}

/// Produces a full run `(f, X_1, …, X_m)` in turn order.
pub fn run_protocol<R: Rng + ?Sized>(
    deal: &Deal,
    params: &SuitableParams,
    variant: Variant,
    rng: &mut R,
) -> Result<Run, ProtocolError> {
    let deck = deal.cards();
    if deal.sizes() != params.tau().sizes() {
        return Err(ProtocolError::DeckSizeMismatch { expected: params.deck_size(), actual: deck.len() });
    }
    let f = alice_token(deal.hand(Agent::Alice), &deck, params, rng)?;
    let mut run = Run::new();
    run.push(Token::Assignment(f.clone()))?;
    for k in 1..=params.m() {
        let x = bob_announcement(variant, &f, deal.hand(Agent::Bob(k)), params)?;
        run.push(Token::Projection(x))?;
    }
    Ok(run)
}

/// Why a (deal, run) pair is not an execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum InvalidExecution {
    #[error("run is longer than m + 1 tokens")]
    WrongLength,
    #[error("deal is not of the distribution type")]
    WrongDealType,
    #[error("assignment is not a bijection from the deck onto F_q^(d+1)")]
    NotBijection,
    #[error("complement of Alice's image is not a transversal hyperplane")]
    ComplementNotTransversal,
    #[error("announcement of B{bob} does not match the deal")]
    WrongProjection { bob: usize },
}

/// Checks that every token of `run` is legal for `deal` at its position.
pub fn check_execution(
    deal: &Deal,
    run: &Run,
    params: &SuitableParams,
    variant: Variant,
) -> Result<(), InvalidExecution> {
    if run.len() > params.m() + 1 {
        return Err(InvalidExecution::WrongLength);
    }
    if deal.sizes() != params.tau().sizes() {
        return Err(InvalidExecution::WrongDealType);
    }
    let Some(f) = run.assignment() else {
        return Ok(());
    };
    let space = params.space();
    if !f.is_bijection(space) || deal.hands().iter().flatten().any(|c| f.point(*c).is_none()) {
        return Err(InvalidExecution::NotBijection);
    }
    let v = alice_hyperplane(f, deal.hand(Agent::Alice), params)
        .map_err(|_| InvalidExecution::ComplementNotTransversal)?;
    for (i, x) in run.projections().enumerate() {
        let bob = i + 1;
        let expected = announce(variant, f, &v, deal.hand(Agent::Bob(bob)), params)
            .map_err(|_| InvalidExecution::WrongProjection { bob })?;
        if &expected != x {
            return Err(InvalidExecution::WrongProjection { bob });
        }
    }
    Ok(())
}

pub fn is_valid_execution(deal: &Deal, run: &Run, params: &SuitableParams, variant: Variant) -> bool {
    check_execution(deal, run, params, variant).is_ok()
}

/// Checks that `run` is complete, `f` is a bijection and the announced sets
/// partition F_q^d with `|X_k| = τ_{B_k}`.
pub fn check_well_formed(run: &Run, params: &SuitableParams) -> Result<(), ProtocolError> {
    let malformed = |msg: &str| Err(ProtocolError::MalformedRun(msg.to_string()));
    if !run.is_complete(params.m()) {
        return malformed("run is not complete");
    }
    let space = params.space();
    let f = run.assignment().expect("complete runs start with an assignment");
    if !f.is_bijection(space) {
        return malformed("assignment is not a bijection onto F_q^(d+1)");
    }
    let mut union = BTreeSet::new();
    for (i, x) in run.projections().enumerate() {
        if x.len() != params.tau().size(Agent::Bob(i + 1)) {
            return malformed("announced set has the wrong size");
        }
        for y in x {
            if y.dim() != space.d() || y.coords().iter().any(|&c| c >= space.q()) {
                return malformed("announced point is not in F_q^d");
            }
            if !union.insert(y) {
                return malformed("announced sets overlap");
            }
        }
    }
    Ok(())
}

/// The deal consistent with `run` when Alice's complement is `v`:
/// Alice holds `f⁻¹[F_q^{d+1} ∖ V]` and `B_k` holds `f⁻¹[Proj↑_V[X_k]]`.
pub fn hyperplane_deal(
    run: &Run,
    v: &TransversalHyperplane,
    params: &SuitableParams,
    variant: Variant,
) -> Result<Deal, ProtocolError> {
    check_well_formed(run, params)?;
    let space = params.space();
    let f = run.assignment().expect("checked");
    let mut hands = Vec::with_capacity(params.m() + 1);
    hands.push(f.iter().filter(|(_, p)| !space.contains(v, p).unwrap_or(false)).map(|(c, _)| c).collect());
    for x in run.projections() {
        let hand = x
            .iter()
            .map(|y| {
                let w = variant.recover(space, v, y)?;
                f.card_at(&w).ok_or_else(|| ProtocolError::MalformedRun(format!("no card at {w}")))
            })
            .collect::<Result<BTreeSet<Card>, ProtocolError>>()?;
        hands.push(hand);
    }
    Deal::from_hands(hands)
}

/// What `agent` concludes from its own hand and the complete run.
pub fn reconstruct_deal(
    agent: Agent,
    own_hand: &BTreeSet<Card>,
    run: &Run,
    params: &SuitableParams,
    variant: Variant,
) -> Result<Deal, ProtocolError> {
    check_well_formed(run, params)?;
    let f = run.assignment().expect("checked");
    let inconsistent = |e: ProtocolError| ProtocolError::InconsistentRun(e.to_string());
    let v = match agent {
        Agent::Alice => alice_hyperplane(f, own_hand, params)?,
        Agent::Bob(k) if k <= params.m() => infer_hyperplane(f, own_hand, params).map_err(inconsistent)?,
        Agent::Bob(k) => return Err(ProtocolError::InconsistentRun(format!("no agent B{k}"))),
    };
    let deal = hyperplane_deal(run, &v, params, variant)?;
    if deal.hand(agent) != own_hand {
        return Err(ProtocolError::InconsistentRun(format!("{agent}'s hand is not the one implied by the run")));
    }
    check_execution(&deal, run, params, variant)
        .map_err(|e| ProtocolError::InconsistentRun(e.to_string()))?;
    Ok(deal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, PHI, PHI2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hand(ids: &[u32]) -> BTreeSet<Card> {
        ids.iter().copied().map(Card).collect()
    }

    fn pts(c: &[&[u32]]) -> BTreeSet<Point> {
        c.iter().map(|p| Point(p.to_vec())).collect()
    }

    #[test]
    fn suitable_examples() {
        assert!(validate_suitable(2, 4, 1, &[12, 2, 2]).is_ok());
        assert!(validate_suitable(2, 3, 2, &[18, 4, 5]).is_ok());
        assert_eq!(
            validate_suitable(2, 4, 1, &[12, 1, 3]).unwrap_err(),
            ParamsError::BobTooSmall { bob: 1, actual: 1, bound: 1 }
        );
    }

    #[test]
    fn each_constraint_has_its_error() {
        assert_eq!(validate_suitable(1, 4, 1, &[12, 4]).unwrap_err(), ParamsError::TooFewAgents(1));
        assert_eq!(validate_suitable(2, 6, 1, &[30, 3, 3]).unwrap_err(), ParamsError::NotPrimePower(6));
        assert_eq!(validate_suitable(3, 3, 2, &[18, 3, 3, 3]).unwrap_err(), ParamsError::QNotAboveM { q: 3, m: 3 });
        assert_eq!(validate_suitable(2, 4, 0, &[3, 1, 0]).unwrap_err(), ParamsError::ZeroDimension);
        assert!(matches!(validate_suitable(2, 4, 1, &[12, 4]), Err(ParamsError::AgentCountMismatch { .. })));
        assert!(matches!(validate_suitable(2, 4, 1, &[12, 2, 3]), Err(ParamsError::TotalSizeWrong { .. })));
        assert!(matches!(validate_suitable(2, 4, 1, &[11, 3, 2]), Err(ParamsError::AliceSizeWrong { .. })));
        assert!(matches!(validate_suitable(2, 4, 1, &[12, 0, 4]), Err(ParamsError::EmptyHand)));
        assert_eq!(validate_suitable(2, 1024, 3, &[1, 1, 1]).unwrap_err(), ParamsError::TooLarge);
    }

    #[test]
    fn agent_names_round_trip() {
        for a in [Agent::Alice, Agent::Bob(1), Agent::Bob(12)] {
            assert_eq!(a.to_string().parse::<Agent>().unwrap(), a);
        }
        assert!("B0".parse::<Agent>().is_err());
        assert!("C".parse::<Agent>().is_err());
    }

    #[test]
    fn random_deal_respects_type_and_seed() {
        let params = fixtures::worked_example_params();
        let deck = standard_deck(16);
        let deal = deal_random(&params, &deck, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(deal.sizes(), vec![12, 2, 2]);
        assert_eq!(deal.cards(), deck);
        let again = deal_random(&params, &deck, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(deal, again);
        assert_eq!(
            deal_random(&params, &standard_deck(15), &mut ChaCha8Rng::seed_from_u64(9)).unwrap_err(),
            ProtocolError::DeckSizeMismatch { expected: 16, actual: 15 }
        );
    }

    #[test]
    fn alice_hand_size_is_checked() {
        let params = fixtures::worked_example_params();
        let err = alice_token(&hand(&[0, 1]), &standard_deck(16), &params, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(err, Err(ProtocolError::HandSizeWrong { agent: Agent::Alice, .. })));
    }

    #[test]
    fn alice_token_leaves_a_transversal_complement() {
        let params = fixtures::worked_example_params();
        let deal = fixtures::worked_example_deal();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let f = alice_token(deal.hand(Agent::Alice), &deal.cards(), &params, &mut rng).unwrap();
            assert!(f.is_bijection(params.space()));
            assert!(alice_hyperplane(&f, deal.hand(Agent::Alice), &params).is_ok());
        }
    }

    #[test]
    fn fixture_announcements() {
        let params = fixtures::worked_example_params();
        let deal = fixtures::worked_example_deal();
        let f = fixtures::worked_example_assignment();
        let v = infer_hyperplane(&f, deal.hand(Agent::Bob(1)), &params).unwrap();
        assert_eq!(v, fixtures::diagonal());
        assert_eq!(bob_token(&f, &v, deal.hand(Agent::Bob(1)), &params).unwrap(), pts(&[&[0], &[PHI]]));
        assert_eq!(bob_token(&f, &v, deal.hand(Agent::Bob(2)), &params).unwrap(), pts(&[&[1], &[PHI2]]));
        assert_eq!(bob_token_unshifted(&f, deal.hand(Agent::Bob(1)), &params).unwrap(), pts(&[&[1], &[PHI2]]));
        assert_eq!(bob_token_unshifted(&f, deal.hand(Agent::Bob(2)), &params).unwrap(), pts(&[&[0], &[PHI]]));
        assert!(bob_token_unshifted(&f, &BTreeSet::new(), &params).unwrap().is_empty());
        // Alice's cards are off the line.
        assert_eq!(
            bob_token(&f, &v, &hand(&[1]), &params).unwrap_err(),
            ProtocolError::HandNotOnHyperplane
        );
    }

    #[test]
    fn single_card_hand_is_ambiguous() {
        let params = fixtures::worked_example_params();
        let f = fixtures::worked_example_assignment();
        assert_eq!(
            infer_hyperplane(&f, &hand(&[0]), &params).unwrap_err(),
            ProtocolError::Geometry(GeometryError::Ambiguous(4))
        );
    }

    #[test]
    fn infer_matches_exhaustive_scan() {
        let params = validate_suitable(2, 3, 2, &[18, 4, 5]).unwrap();
        let deck = standard_deck(27);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let deal = deal_random(&params, &deck, &mut rng).unwrap();
            let f = alice_token(deal.hand(Agent::Alice), &deck, &params, &mut rng).unwrap();
            for k in 1..=2 {
                let points = f.image(deal.hand(Agent::Bob(k))).unwrap();
                let space = params.space();
                let scan: Vec<_> = space
                    .transversal_hyperplanes()
                    .filter(|v| points.iter().all(|x| space.contains(v, x).unwrap()))
                    .collect();
                assert_eq!(scan.len(), 1);
                assert_eq!(infer_hyperplane(&f, deal.hand(Agent::Bob(k)), &params).unwrap(), scan[0]);
            }
        }
    }

    #[test]
    fn fixture_run_is_the_worked_transcript() {
        let run = fixtures::worked_example_run(Variant::Shifted);
        let proj: Vec<_> = run.projections().cloned().collect();
        assert_eq!(proj, vec![pts(&[&[0], &[PHI]]), pts(&[&[1], &[PHI2]])]);
    }

    #[test]
    fn run_protocol_produces_valid_executions() {
        let params = validate_suitable(3, 4, 2, &[48, 5, 5, 6]).unwrap();
        let deck = standard_deck(64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for variant in [Variant::Shifted, Variant::Unshifted] {
            let deal = deal_random(&params, &deck, &mut rng).unwrap();
            let run = run_protocol(&deal, &params, variant, &mut rng).unwrap();
            assert_eq!(run.len(), 4);
            assert_eq!(check_execution(&deal, &run, &params, variant), Ok(()));
            // every prefix is an execution too
            for n in 0..run.len() {
                let prefix = Run::from_tokens(run.tokens()[..n].to_vec()).unwrap();
                assert!(is_valid_execution(&deal, &prefix, &params, variant));
            }
        }
    }

    #[test]
    fn tampered_projection_is_rejected() {
        let params = fixtures::worked_example_params();
        let deal = fixtures::worked_example_deal();
        let run = fixtures::worked_example_run(Variant::Shifted);
        let mut tokens = run.tokens().to_vec();
        tokens[1] = Token::Projection(pts(&[&[0], &[1]]));
        let bad = Run::from_tokens(tokens).unwrap();
        assert_eq!(
            check_execution(&deal, &bad, &params, Variant::Shifted),
            Err(InvalidExecution::WrongProjection { bob: 1 })
        );
    }

    #[test]
    fn invalid_reason_codes() {
        let params = fixtures::worked_example_params();
        let deal = fixtures::worked_example_deal();
        let run = fixtures::worked_example_run(Variant::Shifted);

        let mut tokens = run.tokens().to_vec();
        tokens.push(Token::Projection(BTreeSet::new()));
        let long = Run::from_tokens(tokens).unwrap();
        assert_eq!(check_execution(&deal, &long, &params, Variant::Shifted), Err(InvalidExecution::WrongLength));

        // Two cards swapped between Alice and Bob: Alice's complement is no longer a line.
        let mut hands = deal.hands().to_vec();
        hands[0].remove(&Card(1));
        hands[0].insert(Card(5));
        hands[1].remove(&Card(5));
        hands[1].insert(Card(1));
        let swapped = Deal::from_hands(hands).unwrap();
        assert_eq!(
            check_execution(&swapped, &run, &params, Variant::Shifted),
            Err(InvalidExecution::ComplementNotTransversal)
        );

        let f = fixtures::worked_example_assignment();
        let mut pairs: Vec<(Card, Point)> = f.iter().map(|(c, p)| (c, p.clone())).collect();
        pairs[1].1 = pairs[0].1.clone();
        let not_bij = Run::from_tokens(vec![Token::Assignment(Assignment::from_pairs(pairs).unwrap())]).unwrap();
        assert_eq!(check_execution(&deal, &not_bij, &params, Variant::Shifted), Err(InvalidExecution::NotBijection));

        let small = Deal::from_hands(vec![hand(&[0]), hand(&[1]), hand(&[2])]).unwrap();
        assert_eq!(check_execution(&small, &run, &params, Variant::Shifted), Err(InvalidExecution::WrongDealType));
    }

    #[test]
    fn run_token_order_is_enforced() {
        let mut run = Run::new();
        assert_eq!(run.push(Token::Projection(BTreeSet::new())), Err(ProtocolError::TokenOrder(0)));
        let f = fixtures::worked_example_assignment();
        run.push(Token::Assignment(f.clone())).unwrap();
        assert_eq!(run.push(Token::Assignment(f)), Err(ProtocolError::TokenOrder(1)));
        assert_eq!(run.next_agent(2), Some(Agent::Bob(1)));
    }

    #[test]
    fn alice_reconstructs_the_worked_deal() {
        let params = fixtures::worked_example_params();
        let deal = fixtures::worked_example_deal();
        let run = fixtures::worked_example_run(Variant::Shifted);
        let got = reconstruct_deal(Agent::Alice, deal.hand(Agent::Alice), &run, &params, Variant::Shifted).unwrap();
        assert_eq!(got.hand(Agent::Bob(1)), &hand(&[5, 15]));
        assert_eq!(got.hand(Agent::Bob(2)), &hand(&[0, 10]));
        for agent in params.agents() {
            assert_eq!(reconstruct_deal(agent, deal.hand(agent), &run, &params, Variant::Shifted).unwrap(), deal);
        }
    }

    #[test]
    fn reconstruction_rejects_foreign_hands() {
        let params = fixtures::worked_example_params();
        let run = fixtures::worked_example_run(Variant::Shifted);
        // Cards at (0,0) and (1,0) determine the line y = 0, inconsistent with B1's announcement.
        let err = reconstruct_deal(Agent::Bob(1), &hand(&[0, 4]), &run, &params, Variant::Shifted).unwrap_err();
        assert!(matches!(err, ProtocolError::InconsistentRun(_)));
        let err = reconstruct_deal(Agent::Bob(1), &hand(&[0, 1]), &run, &params, Variant::Shifted).unwrap_err();
        assert!(matches!(err, ProtocolError::InconsistentRun(_)));
        let incomplete = Run::from_tokens(run.tokens()[..2].to_vec()).unwrap();
        assert!(matches!(
            reconstruct_deal(Agent::Alice, &BTreeSet::new(), &incomplete, &params, Variant::Shifted),
            Err(ProtocolError::MalformedRun(_))
        ));
    }

    #[test]
    fn bob_token_set_is_a_single_choice() {
        // Two deals equal on B_k's hand and consistent with the run give the same token.
        let params = fixtures::worked_example_params();
        let run = fixtures::worked_example_run(Variant::Shifted);
        let space = params.space();
        let f = fixtures::worked_example_assignment();
        let bob_hand = hand(&[5, 15]);
        for v in space.transversal_hyperplanes() {
            let deal = hyperplane_deal(&run, &v, &params, Variant::Shifted).unwrap();
            if deal.hand(Agent::Bob(1)) == &bob_hand {
                let x = bob_announcement(Variant::Shifted, &f, &bob_hand, &params).unwrap();
                assert_eq!(Some(&x), run.projections().next());
            }
        }
    }
}
