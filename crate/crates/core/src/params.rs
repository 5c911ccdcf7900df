//! Choosing suitable, reasonably balanced parameters for `m + 1` agents.
//!
//! With `q ∈ (m, 2m]` a prime power and `d > 1`, Alice holds
//! `q^{d+1} − q^d` cards and the Bobs share `q^d`, each holding more than
//! `a = q^{d−1}` and every hand staying below `4m²a`.

use serde::{Deserialize, Serialize};

use crate::field::is_prime_power;
use crate::protocol::{validate_suitable, DistributionType, ParamsError};

/// Witness that every hand size lies strictly between `lower` and `upper`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceCertificate {
    pub a: u64,
    pub lower: u64,
    pub upper: u64,
    pub sizes: Vec<usize>,
}

impl BalanceCertificate {
    pub fn new(m: usize, q: u64, d: usize, sizes: &[usize]) -> BalanceCertificate {
        let a = q.pow(d as u32 - 1);
        BalanceCertificate { a, lower: a, upper: 4 * (m as u64).pow(2) * a, sizes: sizes.to_vec() }
    }

    pub fn holds(&self) -> bool {
        self.sizes.iter().all(|&s| self.lower < s as u64 && (s as u64) < self.upper)
    }
}

/// The smallest prime power in `(m, 2m]`; the power of two in that window
/// guarantees one exists.
pub fn prime_power_above(m: u64) -> u64 {
    assert!(m >= 1, "m must be positive");
    (m + 1..=2 * m).find(|&q| is_prime_power(q)).expect("a power of two lies in (m, 2m]")
}

fn check_preconditions(m: usize, q: u64, d: usize) -> Result<(), ParamsError> {
    if m <= 1 {
        return Err(ParamsError::TooFewAgents(m));
    }
    if !is_prime_power(q) {
        return Err(ParamsError::NotPrimePower(q));
    }
    if q <= m as u64 {
        return Err(ParamsError::QNotAboveM { q, m });
    }
    if d <= 1 {
        return Err(ParamsError::InfeasibleParams(format!("d = {d} must exceed 1")));
    }
    Ok(())
}

/// Splits the `q^d` non-Alice cards as evenly as possible, larger hands last.
pub fn even_split_tau(m: usize, q: u64, d: usize) -> Vec<usize> {
    let total = q.pow(d as u32 + 1) as usize;
    let plane = total / q as usize;
    let (base, extra) = (plane / m, plane % m);
    let mut sizes = vec![total - plane];
    sizes.extend((0..m).map(|k| base + usize::from(k >= m - extra)));
    sizes
}

/// Balanced distribution type for `(m, q, d)` with its certificate.
pub fn balanced_tau(m: usize, q: u64, d: usize) -> Result<(DistributionType, BalanceCertificate), ParamsError> {
    check_preconditions(m, q, d)?;
    finish(m, q, d, even_split_tau(m, q, d))
}

/// `τ_{B_k} = q^{d−1} + 1` for `k < m`, with `B_m` taking the rest.
pub fn minimal_bobs_tau(m: usize, q: u64, d: usize) -> Result<(DistributionType, BalanceCertificate), ParamsError> {
    check_preconditions(m, q, d)?;
    let total = q.pow(d as u32 + 1);
    let plane = total / q;
    let small = plane / q + 1;
    let last = plane as i64 - (m as i64 - 1) * small as i64;
    if last <= (plane / q) as i64 {
        return Err(ParamsError::InfeasibleParams(format!("last hand would hold {last} cards")));
    }
    let mut sizes = vec![(total - plane) as usize];
    sizes.extend(std::iter::repeat_n(small as usize, m - 1));
    sizes.push(last as usize);
    finish(m, q, d, sizes)
}

fn finish(m: usize, q: u64, d: usize, sizes: Vec<usize>) -> Result<(DistributionType, BalanceCertificate), ParamsError> {
    let params = validate_suitable(m, q, d, &sizes)?;
    let cert = BalanceCertificate::new(m, q, d, &sizes);
    if !cert.holds() {
        return Err(ParamsError::InfeasibleParams("hand sizes outside (a, 4m²a)".into()));
    }
    Ok((params.tau().clone(), cert))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamRow {
    pub tau: DistributionType,
    pub m: usize,
    pub q: u64,
    pub d: usize,
}

/// Balanced rows for `2 ≤ m ≤ max_m` and `2 ≤ d ≤ max_d`, using the smallest
/// prime power above `m`. Rows whose deck would be too large are skipped.
pub fn parameter_table(max_m: usize, max_d: usize) -> Vec<ParamRow> {
    let mut rows = Vec::new();
    for m in 2..=max_m {
        rows.extend(parameter_rows(m, 2..=max_d));
    }
    rows
}

pub fn parameter_rows(m: usize, ds: impl IntoIterator<Item = usize>) -> Vec<ParamRow> {
    let q = prime_power_above(m as u64);
    ds.into_iter()
        .filter_map(|d| balanced_tau(m, q, d).ok().map(|(tau, _)| ParamRow { tau, m, q, d }))
        .collect()
}

/// Aligned text rendering of a table.
pub fn render_table(rows: &[ParamRow]) -> String {
    let taus: Vec<String> = rows.iter().map(|r| r.tau.to_string()).collect();
    let width = taus.iter().map(String::len).max().unwrap_or(0).max(3);
    let mut out = format!("{:<width$}  {:>3}  {:>3}  {:>3}\n", "tau", "m", "q", "d");
    for (row, tau) in rows.iter().zip(&taus) {
        out.push_str(&format!("{tau:<width$}  {:>3}  {:>3}  {:>3}\n", row.m, row.q, row.d));
    }
    out
}
