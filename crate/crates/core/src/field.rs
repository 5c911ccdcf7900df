//! Arithmetic in GF(p^k).
//!
//! An element is stored as its canonical integer `Σ c_i · p^i`, where `c_i` are
//! the coefficients of its polynomial representative modulo the field's
//! defining polynomial. Prime fields go through the same code path with the
//! degree-one modulus `x`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest order for which full addition/multiplication tables are cached.
const TABLE_LIMIT: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not a prime power")]
    NotAPrimePower(u64),
    #[error("field order {0} is too large")]
    TooLarge(u64),
    #[error("elements belong to different fields (GF({0}) vs GF({1}))")]
    SpecMismatch(u32, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {value} is not an element of GF({q})")]
    OutOfRange { value: u32, q: u32 },
    #[error("invalid field spec: {0}")]
    InvalidSpec(String),
}

/// Returns `(p, k)` with `q = p^k` and `p` prime, or `None`.
pub fn prime_power_decomposition(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q && !q.is_multiple_of(p) {
        p += 1;
    }
    if !q.is_multiple_of(p) {
        // q itself is prime
        return Some((q, 1));
    }
    let mut rest = q;
    let mut k = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

pub fn is_prime_power(q: u64) -> bool {
    prime_power_decomposition(q).is_some()
}

/// Parameters identifying a finite field: characteristic, degree and the
/// monic irreducible modulus (coefficients low-to-high, length `k + 1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FieldSpecWire", into = "FieldSpecWire")]
pub struct FieldSpec {
    pub p: u32,
    pub k: u32,
    pub q: u32,
    pub modulus: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct FieldSpecWire {
    p: u32,
    k: u32,
    modulus: Vec<u32>,
}

impl From<FieldSpec> for FieldSpecWire {
    fn from(s: FieldSpec) -> Self {
        FieldSpecWire { p: s.p, k: s.k, modulus: s.modulus }
    }
}

impl TryFrom<FieldSpecWire> for FieldSpec {
    type Error = FieldError;

    fn try_from(w: FieldSpecWire) -> Result<Self, FieldError> {
        FieldSpec::from_parts(w.p, w.k, w.modulus)
    }
}

impl FieldSpec {
    /// Validates an explicitly given modulus.
    pub fn from_parts(p: u32, k: u32, modulus: Vec<u32>) -> Result<Self, FieldError> {
        if k == 0 {
            return Err(FieldError::InvalidSpec("degree must be at least 1".into()));
        }
        match prime_power_decomposition(p as u64) {
            Some((_, 1)) => {}
            _ => return Err(FieldError::InvalidSpec(format!("{p} is not prime"))),
        }
        let q = (p as u64)
            .checked_pow(k)
            .filter(|&q| q <= u32::MAX as u64)
            .ok_or(FieldError::TooLarge(u64::MAX))?;
        if modulus.len() != k as usize + 1 || modulus[k as usize] != 1 {
            return Err(FieldError::InvalidSpec("modulus must be monic of degree k".into()));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(FieldError::InvalidSpec("modulus coefficient out of range".into()));
        }
        if !is_irreducible(&modulus, p) {
            return Err(FieldError::InvalidSpec("modulus is reducible".into()));
        }
        Ok(FieldSpec { p, k, q: q as u32, modulus })
    }
}

// Dense polynomials over F_p, coefficients low-to-high, possibly with
// trailing zeros.

fn poly_degree(a: &[u32]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

fn inv_mod_prime(a: u32, p: u32) -> u32 {
    // a^(p-2) mod p
    let (mut base, mut exp, mut acc) = (a as u64 % p as u64, p as u64 - 2, 1u64);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        exp >>= 1;
    }
    acc as u32
}

/// Remainder of `a` divided by the nonzero polynomial `b`.
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    let db = poly_degree(b).expect("division by zero polynomial");
    let lead_inv = inv_mod_prime(b[db], p) as u64;
    let p64 = p as u64;
    while let Some(dr) = r.iter().rposition(|&c| c % p64 != 0) {
        if dr < db {
            break;
        }
        let factor = (r[dr] % p64) * lead_inv % p64;
        let shift = dr - db;
        for (i, &bc) in b.iter().enumerate().take(db + 1) {
            let sub = factor * bc as u64 % p64;
            r[shift + i] = (r[shift + i] % p64 + p64 - sub) % p64;
        }
    }
    r.into_iter().map(|c| (c % p64) as u32).collect()
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
fn is_irreducible(f: &[u32], p: u32) -> bool {
    let Some(deg) = poly_degree(f) else {
        return false;
    };
    if deg == 0 {
        return false;
    }
    for div_deg in 1..=deg / 2 {
        let count = (p as u64).pow(div_deg as u32);
        for code in 0..count {
            let mut divisor = digits(code, p, div_deg);
            divisor.push(1);
            if poly_degree(&poly_rem(f, &divisor, p)).is_none() {
                return false;
            }
        }
    }
    true
}

fn digits(mut value: u64, p: u32, len: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((value % p as u64) as u32);
        value /= p as u64;
    }
    out
}

struct FieldInner {
    spec: FieldSpec,
    // Row-major q×q tables; empty when q > TABLE_LIMIT.
    add_table: Vec<u32>,
    mul_table: Vec<u32>,
    neg_table: Vec<u32>,
    inv_table: Vec<u32>,
}

/// A constructed field. Cloning is cheap.
#[derive(Clone)]
pub struct Field(Arc<FieldInner>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.0.spec.q)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl Eq for Field {}

impl Field {
    /// Builds GF(q) using the lexicographically smallest monic irreducible
    /// polynomial of degree k (coefficients compared from the constant term up).
    pub fn new(q: u64) -> Result<Field, FieldError> {
        let (p, k) = prime_power_decomposition(q).ok_or(FieldError::NotAPrimePower(q))?;
        if q > u32::MAX as u64 {
            return Err(FieldError::TooLarge(q));
        }
        let p = p as u32;
        let k_us = k as usize;
        // Candidate order: c_0 most significant, then c_1, ...
        let count = (p as u64).pow(k);
        let modulus = (0..count)
            .map(|code| {
                let mut coeffs = digits(code, p, k_us);
                coeffs.reverse();
                coeffs.push(1);
                coeffs
            })
            .find(|cand| is_irreducible(cand, p))
            .expect("an irreducible polynomial of every degree exists");
        Ok(Self::from_spec(FieldSpec { p, k, q: q as u32, modulus }))
    }

    pub fn from_spec(spec: FieldSpec) -> Field {
        let q = spec.q;
        let mut inner = FieldInner {
            spec,
            add_table: Vec::new(),
            mul_table: Vec::new(),
            neg_table: Vec::new(),
            inv_table: Vec::new(),
        };
        if q <= TABLE_LIMIT {
            let n = q as usize;
            let mut add_table = vec![0; n * n];
            let mut mul_table = vec![0; n * n];
            for a in 0..q {
                for b in 0..q {
                    add_table[a as usize * n + b as usize] = inner.add_direct(a, b);
                    mul_table[a as usize * n + b as usize] = inner.mul_direct(a, b);
                }
            }
            inner.neg_table = (0..q).map(|a| inner.neg_direct(a)).collect();
            inner.inv_table = (0..q)
                .map(|a| {
                    if a == 0 {
                        0
                    } else {
                        (1..q).find(|&b| mul_table[a as usize * n + b as usize] == 1).unwrap()
                    }
                })
                .collect();
            inner.add_table = add_table;
            inner.mul_table = mul_table;
        }
        Field(Arc::new(inner))
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.0.spec
    }

    pub fn order(&self) -> u32 {
        self.0.spec.q
    }

    pub fn characteristic(&self) -> u32 {
        self.0.spec.p
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, FieldError> {
        if value >= self.order() {
            return Err(FieldError::OutOfRange { value, q: self.order() });
        }
        Ok(FieldElement { field: self.clone(), value })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { field: self.clone(), value: 0 }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { field: self.clone(), value: 1 }
    }

    /// All elements in canonical-value order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.order()).map(move |value| FieldElement { field: self.clone(), value })
    }

    /// Coefficient vector (low-to-high, length k) of a canonical value.
    pub fn decode(&self, value: u32) -> Vec<u32> {
        digits(value as u64, self.0.spec.p, self.0.spec.k as usize)
    }

    pub fn encode(&self, coeffs: &[u32]) -> u32 {
        let p = self.0.spec.p;
        coeffs.iter().rev().fold(0, |acc, &c| acc * p + c)
    }

    // Operations on canonical values. Callers guarantee the values are in
    // range; `FieldElement` is the checked interface.

    pub fn add(&self, a: u32, b: u32) -> u32 {
        let inner = &*self.0;
        if inner.add_table.is_empty() {
            inner.add_direct(a, b)
        } else {
            inner.add_table[a as usize * inner.spec.q as usize + b as usize]
        }
    }

    pub fn neg(&self, a: u32) -> u32 {
        let inner = &*self.0;
        if inner.neg_table.is_empty() {
            inner.neg_direct(a)
        } else {
            inner.neg_table[a as usize]
        }
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let inner = &*self.0;
        if inner.mul_table.is_empty() {
            inner.mul_direct(a, b)
        } else {
            inner.mul_table[a as usize * inner.spec.q as usize + b as usize]
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let inner = &*self.0;
        if inner.inv_table.is_empty() {
            // a^(q-2)
            Some(self.pow(a, inner.spec.q as u64 - 2))
        } else {
            Some(inner.inv_table[a as usize])
        }
    }

    pub fn pow(&self, a: u32, mut exp: u64) -> u32 {
        let (mut base, mut acc) = (a, 1);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }
}

impl FieldInner {
    fn add_direct(&self, a: u32, b: u32) -> u32 {
        let p = self.spec.p;
        let (mut a, mut b, mut place, mut out) = (a, b, 1u32, 0u32);
        for _ in 0..self.spec.k {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place = place.wrapping_mul(p);
        }
        out
    }

    fn neg_direct(&self, a: u32) -> u32 {
        let p = self.spec.p;
        let (mut a, mut place, mut out) = (a, 1u32, 0u32);
        for _ in 0..self.spec.k {
            out += ((p - a % p) % p) * place;
            a /= p;
            place = place.wrapping_mul(p);
        }
        out
    }

    fn mul_direct(&self, a: u32, b: u32) -> u32 {
        let (p, k) = (self.spec.p, self.spec.k as usize);
        let ca = digits(a as u64, p, k);
        let cb = digits(b as u64, p, k);
        let mut prod = vec![0u64; 2 * k - 1];
        for (i, &x) in ca.iter().enumerate() {
            for (j, &y) in cb.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
            }
        }
        let prod: Vec<u32> = prod.into_iter().map(|c| c as u32).collect();
        let rem = poly_rem(&prod, &self.spec.modulus, p);
        rem.iter().take(k).rev().fold(0, |acc, &c| acc * p + c)
    }
}

/// An element of a specific field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    field: Field,
    value: u32,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@GF({})", self.value, self.field.order())
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl FieldElement {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coefficients(&self) -> Vec<u32> {
        self.field.decode(self.value)
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &FieldElement) -> Result<(), FieldError> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(FieldError::SpecMismatch(self.field.order(), other.field.order()))
        }
    }

    fn with(&self, value: u32) -> FieldElement {
        FieldElement { field: self.field.clone(), value }
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(other)?;
        Ok(self.with(self.field.add(self.value, other.value)))
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(other)?;
        Ok(self.with(self.field.sub(self.value, other.value)))
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(other)?;
        Ok(self.with(self.field.mul(self.value, other.value)))
    }

    pub fn neg(&self) -> FieldElement {
        self.with(self.field.neg(self.value))
    }

    pub fn inv(&self) -> Result<FieldElement, FieldError> {
        self.field.inv(self.value).map(|v| self.with(v)).ok_or(FieldError::DivisionByZero)
    }

    pub fn pow(&self, exp: u64) -> FieldElement {
        self.with(self.field.pow(self.value, exp))
    }
}
