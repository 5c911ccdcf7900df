//! Eve's view: which deals are consistent with an intercepted run, and what
//! she can infer about each card's holder.
//!
//! Both protocol variants are equitative (Alice's token count does not depend
//! on the deal, each Bob has exactly one legal token), so the posterior that
//! `P` holds `c` is the fraction of possible deals in which it does. Every
//! function here takes the public run and parameters, never a hand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use indexmap::IndexMap;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::TransversalHyperplane;
use crate::protocol::{
    check_well_formed, hyperplane_deal, is_valid_execution, Agent, Card, Deal, ProtocolError, Run,
    SuitableParams, Variant,
};

/// Hard limit on the number of deals the brute-force oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

pub type Probability = Ratio<u64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("malformed run: {0}")]
    MalformedRun(String),
    #[error("{0} candidate deals exceed the enumeration limit")]
    TooLarge(u128),
}

impl From<ProtocolError> for AnalysisError {
    fn from(e: ProtocolError) -> Self {
        AnalysisError::MalformedRun(e.to_string())
    }
}

/// A possible deal, indexed by the hyperplane Alice would have left open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateDeal {
    pub hyperplane: TransversalHyperplane,
    pub deal: Deal,
}

pub fn candidate_deal(
    run: &Run,
    v: &TransversalHyperplane,
    params: &SuitableParams,
    variant: Variant,
) -> Result<CandidateDeal, AnalysisError> {
    let deal = hyperplane_deal(run, v, params, variant)?;
    Ok(CandidateDeal { hyperplane: v.clone(), deal })
}

/// One candidate per transversal hyperplane, in hyperplane order.
pub fn possible_deals(run: &Run, params: &SuitableParams, variant: Variant) -> Result<Vec<CandidateDeal>, AnalysisError> {
    check_well_formed(run, params)?;
    params
        .space()
        .transversal_hyperplanes()
        .map(|v| candidate_deal(run, &v, params, variant))
        .collect()
}

/// Number of deals of the given type: `n! / Π τ_P!`, saturating.
pub fn multinomial(sizes: &[usize]) -> u128 {
    let mut remaining: u128 = sizes.iter().map(|&s| s as u128).sum();
    let mut total: u128 = 1;
    for &s in sizes {
        let mut binom: u128 = 1;
        for i in 0..s as u128 {
            binom = match binom.checked_mul(remaining - i) {
                Some(b) => b / (i + 1),
                None => return u128::MAX,
            };
        }
        total = total.saturating_mul(binom);
        remaining -= s as u128;
    }
    total
}

/// Every deal of type `τ` over `deck` that forms an execution with `run`,
/// found by enumerating all multinomial partitions.
pub fn brute_force_possible_deals(
    run: &Run,
    params: &SuitableParams,
    variant: Variant,
    deck: &BTreeSet<Card>,
) -> Result<BTreeSet<Deal>, AnalysisError> {
    let sizes = params.tau().sizes();
    if deck.len() != params.deck_size() {
        return Err(AnalysisError::MalformedRun("deck size does not match the distribution type".into()));
    }
    let count = multinomial(sizes);
    if count > BRUTE_FORCE_LIMIT {
        return Err(AnalysisError::TooLarge(count));
    }
    let cards: Vec<Card> = deck.iter().copied().collect();
    let mut found = BTreeSet::new();
    let mut hands = Vec::with_capacity(sizes.len());
    enumerate_partitions(&cards, sizes, &mut hands, &mut |hands| {
        let deal = Deal::from_hands(hands.to_vec()).expect("partition");
        if is_valid_execution(&deal, run, params, variant) {
            found.insert(deal);
        }
    });
    Ok(found)
}

fn enumerate_partitions(
    remaining: &[Card],
    sizes: &[usize],
    hands: &mut Vec<BTreeSet<Card>>,
    visit: &mut dyn FnMut(&[BTreeSet<Card>]),
) {
    let Some((&size, rest_sizes)) = sizes.split_first() else {
        if remaining.is_empty() {
            visit(hands);
        }
        return;
    };
    let mut chosen = Vec::with_capacity(size);
    choose(remaining, 0, size, &mut chosen, &mut |chosen| {
        let hand: BTreeSet<Card> = chosen.iter().copied().collect();
        let rest: Vec<Card> = remaining.iter().copied().filter(|c| !hand.contains(c)).collect();
        hands.push(hand);
        enumerate_partitions(&rest, rest_sizes, hands, visit);
        hands.pop();
    });
}

fn choose(items: &[Card], start: usize, k: usize, chosen: &mut Vec<Card>, visit: &mut dyn FnMut(&[Card])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let needed = k - chosen.len();
    if items.len() < start + needed {
        return;
    }
    for i in start..=items.len() - needed {
        chosen.push(items[i]);
        choose(items, i + 1, k, chosen, visit);
        chosen.pop();
    }
}

/// Exact posteriors `P(c ∈ H_P | ρ)` for every card and agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyReport {
    pub agents: Vec<Agent>,
    pub priors: Vec<Probability>,
    /// Per card, one probability per agent in turn order.
    pub cells: BTreeMap<Card, Vec<Probability>>,
    pub weakly_safe: bool,
    pub perfectly_safe: bool,
}

impl SafetyReport {
    pub fn probability(&self, card: Card, agent: Agent) -> Option<Probability> {
        self.cells.get(&card).and_then(|row| row.get(agent.index())).copied()
    }

    /// Card × agent table of fractions.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let width = 9;
        let _ = write!(out, "{:>6}", "card");
        for a in &self.agents {
            let _ = write!(out, "{:>width$}", a.to_string());
        }
        out.push('\n');
        let _ = write!(out, "{:>6}", "prior");
        for p in &self.priors {
            let _ = write!(out, "{:>width$}", p.to_string());
        }
        out.push('\n');
        for (card, row) in &self.cells {
            let _ = write!(out, "{:>6}", card.to_string());
            for p in row {
                let _ = write!(out, "{:>width$}", p.to_string());
            }
            out.push('\n');
        }
        let _ = writeln!(out, "weakly safe: {}", self.weakly_safe);
        let _ = writeln!(out, "perfectly safe: {}", self.perfectly_safe);
        out
    }
}

pub fn priors(params: &SuitableParams) -> Vec<Probability> {
    let total = params.deck_size() as u64;
    params.tau().sizes().iter().map(|&s| Ratio::new(s as u64, total)).collect()
}

pub fn probability_report(run: &Run, params: &SuitableParams, variant: Variant) -> Result<SafetyReport, AnalysisError> {
    let candidates = possible_deals(run, params, variant)?;
    let n_agents = params.m() + 1;
    let mut counts: BTreeMap<Card, Vec<u64>> =
        run.assignment().expect("checked").cards().map(|c| (c, vec![0; n_agents])).collect();
    for cand in &candidates {
        for (i, hand) in cand.deal.hands().iter().enumerate() {
            for c in hand {
                counts.get_mut(c).expect("deal over the assignment's cards")[i] += 1;
            }
        }
    }
    let total = candidates.len() as u64;
    let cells = counts
        .into_iter()
        .map(|(c, row)| (c, row.into_iter().map(|n| Ratio::new(n, total)).collect()))
        .collect();
    let mut report = SafetyReport {
        agents: params.agents().collect(),
        priors: priors(params),
        cells,
        weakly_safe: false,
        perfectly_safe: false,
    };
    report.weakly_safe = check_weak_safety(&report);
    report.perfectly_safe = check_perfect_safety(&report, params);
    Ok(report)
}

/// Every card has at least two agents who might hold it.
pub fn check_weak_safety(report: &SafetyReport) -> bool {
    report
        .cells
        .values()
        .all(|row| row.iter().filter(|p| **p > Ratio::from_integer(0)).count() >= 2)
}

/// Every posterior equals its prior `τ_P / |τ|` exactly.
pub fn check_perfect_safety(report: &SafetyReport, params: &SuitableParams) -> bool {
    let priors = priors(params);
    report.cells.len() == params.deck_size() && report.cells.values().all(|row| row == &priors)
}

#[derive(Serialize, Deserialize)]
struct ReportWire {
    priors: IndexMap<Agent, [u64; 2]>,
    cells: Vec<CellWire>,
    weakly_safe: bool,
    perfectly_safe: bool,
}

#[derive(Serialize, Deserialize)]
struct CellWire {
    card: Card,
    agent: Agent,
    num: u64,
    den: u64,
}

impl Serialize for SafetyReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let wire = ReportWire {
            priors: self.agents.iter().zip(&self.priors).map(|(a, p)| (*a, [*p.numer(), *p.denom()])).collect(),
            cells: self
                .cells
                .iter()
                .flat_map(|(&card, row)| {
                    self.agents.iter().zip(row).map(move |(&agent, p)| CellWire {
                        card,
                        agent,
                        num: *p.numer(),
                        den: *p.denom(),
                    })
                })
                .collect(),
            weakly_safe: self.weakly_safe,
            perfectly_safe: self.perfectly_safe,
        };
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SafetyReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = ReportWire::deserialize(d)?;
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                Err(D::Error::custom("zero denominator"))
            } else {
                Ok(Ratio::new(num, den))
            }
        };
        let agents: Vec<Agent> = wire.priors.keys().copied().collect();
        let priors = wire.priors.values().map(|[n, d]| ratio(*n, *d)).collect::<Result<_, _>>()?;
        let mut cells: BTreeMap<Card, Vec<Probability>> = BTreeMap::new();
        for cell in wire.cells {
            let idx = agents
                .iter()
                .position(|a| *a == cell.agent)
                .ok_or_else(|| D::Error::custom(format!("unknown agent {}", cell.agent)))?;
            let row = cells.entry(cell.card).or_insert_with(|| vec![Ratio::from_integer(0); agents.len()]);
            row[idx] = ratio(cell.num, cell.den)?;
        }
        Ok(SafetyReport { agents, priors, cells, weakly_safe: wire.weakly_safe, perfectly_safe: wire.perfectly_safe })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, card_at, PHI, PHI2};
    use crate::protocol::{deal_random, run_protocol, standard_deck, validate_suitable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hand(ids: &[Card]) -> BTreeSet<Card> {
        ids.iter().copied().collect()
    }

    #[test]
    fn candidate_for_the_true_line_is_the_true_deal() {
        let params = fixtures::worked_example_params();
        let run = fixtures::worked_example_run(Variant::Shifted);
        let cand = candidate_deal(&run, &fixtures::diagonal(), &params, Variant::Shifted).unwrap();
        assert_eq!(cand.deal, fixtures::worked_example_deal());
    }

    #[test]
    fn candidate_for_phi_line_gives_bob_the_origin() {
        let params = fixtures::worked_example_params();
        let run = fixtures::worked_example_run(Variant::Shifted);
        let cand = candidate_deal(&run, &fixtures::phi_line(), &params, Variant::Shifted).unwrap();
        assert_eq!(cand.deal.hand(Agent::Bob(1)), &hand(&[card_at(0, 0), card_at(PHI, PHI2)]));
        assert_eq!(cand.deal.hand(Agent::Bob(2)), &hand(&[card_at(1, PHI), card_at(PHI2, 1)]));
        assert!(is_valid_execution(&cand.deal, &run, &params, Variant::Shifted));
    }

    #[test]
    fn possible_deals_have_distinct_alice_hands() {
        let params = fixtures::worked_example_params();
        let run = fixtures::worked_example_run(Variant::Shifted);
        let cands = possible_deals(&run, &params, Variant::Shifted).unwrap();
        assert_eq!(cands.len(), 16);
        let alice: BTreeSet<_> = cands.iter().map(|c| c.deal.hand(Agent::Alice).clone()).collect();
        assert_eq!(alice.len(), 16);
        assert!(cands.iter().any(|c| c.deal == fixtures::worked_example_deal()));
    }

    #[test]
    fn worked_example_posteriors_equal_priors() {
        let params = fixtures::worked_example_params();
        let run = fixtures::worked_example_run(Variant::Shifted);
        let report = probability_report(&run, &params, Variant::Shifted).unwrap();
        let origin = card_at(0, 0);
        assert_eq!(report.probability(origin, Agent::Alice), Some(Ratio::new(12, 16)));
        assert_eq!(report.probability(origin, Agent::Bob(1)), Some(Ratio::new(2, 16)));
        assert_eq!(report.probability(origin, Agent::Bob(2)), Some(Ratio::new(2, 16)));
        assert!(report.weakly_safe && report.perfectly_safe);
    }

    #[test]
    fn unshifted_baseline_leaks() {
        let params = fixtures::worked_example_params();
        let run = fixtures::worked_example_run(Variant::Unshifted);
        let report = probability_report(&run, &params, Variant::Unshifted).unwrap();
        assert_eq!(report.probability(card_at(0, 0), Agent::Bob(1)), Some(Ratio::from_integer(0)));
        assert!(report.weakly_safe);
        assert!(!report.perfectly_safe);
    }

    #[test]
    fn certain_holder_is_not_weakly_safe() {
        let params = fixtures::worked_example_params();
        let run = fixtures::worked_example_run(Variant::Shifted);
        let mut report = probability_report(&run, &params, Variant::Shifted).unwrap();
        report.cells.insert(Card(3), vec![Ratio::from_integer(1), Ratio::from_integer(0), Ratio::from_integer(0)]);
        assert!(!check_weak_safety(&report));
        assert!(!check_perfect_safety(&report, &params));
        let mut priors_only = report.clone();
        for row in priors_only.cells.values_mut() {
            *row = priors(&params);
        }
        assert!(check_perfect_safety(&priors_only, &params));
    }

    #[test]
    fn malformed_runs_are_rejected() {
        let params = fixtures::worked_example_params();
        let run = fixtures::worked_example_run(Variant::Shifted);
        let partial = Run::from_tokens(run.tokens()[..2].to_vec()).unwrap();
        assert!(matches!(probability_report(&partial, &params, Variant::Shifted), Err(AnalysisError::MalformedRun(_))));
        let mut tokens = run.tokens().to_vec();
        tokens[2] = tokens[1].clone();
        let overlapping = Run::from_tokens(tokens).unwrap();
        assert!(matches!(possible_deals(&overlapping, &params, Variant::Shifted), Err(AnalysisError::MalformedRun(_))));
    }

    #[test]
    fn multinomial_counts() {
        assert_eq!(multinomial(&[12, 2, 2]), 10920);
        assert_eq!(multinomial(&[16]), 1);
        assert_eq!(multinomial(&[1, 1, 1]), 6);
        assert!(multinomial(&[48, 5, 5, 6]) > BRUTE_FORCE_LIMIT);
    }

    #[test]
    fn brute_force_guard() {
        let params = validate_suitable(3, 4, 2, &[48, 5, 5, 6]).unwrap();
        let deck = standard_deck(64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let deal = deal_random(&params, &deck, &mut rng).unwrap();
        let run = run_protocol(&deal, &params, Variant::Shifted, &mut rng).unwrap();
        assert!(matches!(
            brute_force_possible_deals(&run, &params, Variant::Shifted, &deck),
            Err(AnalysisError::TooLarge(_))
        ));
    }

    #[test]
    fn partitions_enumerate_every_deal_once() {
        let cards: Vec<Card> = (0..6).map(Card).collect();
        let mut seen = BTreeSet::new();
        let mut n = 0;
        enumerate_partitions(&cards, &[3, 2, 1], &mut Vec::new(), &mut |h| {
            n += 1;
            seen.insert(h.to_vec());
        });
        assert_eq!(n, 60);
        assert_eq!(seen.len(), 60);
        // a single agent holding everything: exactly one partition
        let mut single = 0;
        enumerate_partitions(&cards, &[6], &mut Vec::new(), &mut |_| single += 1);
        assert_eq!(single, 1);
    }

    #[test]
    fn report_json_shape() {
        let params = fixtures::worked_example_params();
        let run = fixtures::worked_example_run(Variant::Shifted);
        let report = probability_report(&run, &params, Variant::Shifted).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["priors"]["A"], serde_json::json!([3, 4]));
        assert_eq!(json["priors"]["B2"], serde_json::json!([1, 8]));
        assert_eq!(json["cells"][0], serde_json::json!({"card": 0, "agent": "A", "num": 3, "den": 4}));
        assert_eq!(json["cells"].as_array().unwrap().len(), 48);
        assert_eq!(json["perfectly_safe"], true);
        let back: SafetyReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, report);
        assert!(report.render_table().contains("perfectly safe: true"));
    }
}
