//! Test-side oracle: decides executions by direct evaluation, without the
//! library's hyperplane solver or reconstruction code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cardshare::protocol::{Agent, Card, Deal, Run, SuitableParams, Variant};
use cardshare::Point;
use num_rational::Ratio;

/// Every vector in F_q^n, as raw values.
fn vectors(q: u32, n: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v| (0..q).map(move |c| [v.clone(), vec![c]].concat())).collect();
    }
    out
}

/// Whether `(deal, run)` is an execution, checked from first principles.
pub fn is_execution(deal: &Deal, run: &Run, params: &SuitableParams, variant: Variant) -> bool {
    let f = params.space().field().clone();
    let (q, d) = (params.q() as u32, params.d());
    let Some(assign) = run.assignment() else { return false };
    let alice: BTreeSet<&Point> = deal.hand(Agent::Alice).iter().map(|c| assign.point(*c).unwrap()).collect();
    let rest: Vec<Point> = vectors(q, d + 1).into_iter().map(Point).filter(|p| !alice.contains(p)).collect();
    let eval = |a: &[u32], b: u32, x: &[u32]| a.iter().zip(x).fold(b, |acc, (&ai, &xi)| f.add(acc, f.mul(ai, xi)));
    // the slope and intercept whose graph is exactly `rest`
    let plane = vectors(q, d + 1).into_iter().find(|ab| {
        let (a, b) = ab.split_at(d);
        rest.len() == q.pow(d as u32) as usize && rest.iter().all(|p| eval(a, b[0], &p.0[..d]) == p.0[d])
    });
    let Some(ab) = plane else { return false };
    let slope = &ab[..d];
    run.projections().enumerate().all(|(i, x)| {
        let said: BTreeSet<Point> = deal
            .hand(Agent::Bob(i + 1))
            .iter()
            .map(|c| {
                let w = &assign.point(*c).unwrap().0;
                match variant {
                    Variant::Shifted => Point(w[..d].iter().zip(slope).map(|(&wi, &a)| f.add(wi, a)).collect()),
                    Variant::Unshifted => Point(w[..d].to_vec()),
                }
            })
            .collect();
        &said == x
    })
}

/// All deals of the given sizes over `deck`.
pub fn all_deals(deck: &[Card], sizes: &[usize]) -> Vec<Deal> {
    fn go(rest: &[Card], sizes: &[usize], acc: &mut Vec<BTreeSet<Card>>, out: &mut Vec<Deal>) {
        let Some((&k, tail)) = sizes.split_first() else {
            out.push(Deal::from_hands(acc.clone()).unwrap());
            return;
        };
        let n = rest.len();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let hand = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| rest[i]).collect();
            let left: Vec<Card> = (0..n).filter(|i| mask >> i & 1 == 0).map(|i| rest[i]).collect();
            acc.push(hand);
            go(&left, tail, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(deck, sizes, &mut Vec::new(), &mut out);
    out
}

/// Posterior table `card -> [P(agent holds card)]` over the oracle's deal set.
pub fn posteriors(deals: &[Deal], agents: usize) -> BTreeMap<Card, Vec<Ratio<u64>>> {
    let mut counts: BTreeMap<Card, Vec<u64>> = BTreeMap::new();
    for deal in deals {
        for (i, hand) in deal.hands().iter().enumerate() {
            for &c in hand {
                counts.entry(c).or_insert_with(|| vec![0; agents])[i] += 1;
            }
        }
    }
    let n = deals.len() as u64;
    counts.into_iter().map(|(c, row)| (c, row.into_iter().map(|k| Ratio::new(k, n)).collect())).collect()
}
