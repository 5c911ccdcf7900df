//! Transversal hyperplanes of F_q^{d+1} and the shifted projection maps.
//!
//! A transversal hyperplane is the graph of `x_{d+1} = a·x + b` with slope
//! `a ∈ F_q^d` and intercept `b ∈ F_q`. Points are vectors of canonical field
//! values; ambient points have `d + 1` coordinates, projected points `d`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::Field;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("expected a point of dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("coordinate {value} is not an element of GF({q})")]
    CoordinateOutOfRange { value: u32, q: u32 },
    #[error("point {0} does not lie on the hyperplane")]
    PointNotOnHyperplane(Point),
    #[error("no transversal hyperplane contains the given points")]
    NoneContains,
    #[error("{0} transversal hyperplanes contain the given points")]
    Ambiguous(u64),
    #[error("empty point set")]
    Empty,
}

/// A vector of canonical field values. Orders lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<u32>);

impl Point {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for Point {
    fn from(v: Vec<u32>) -> Self {
        Point(v)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Graph of `x_{d+1} = slope · (x_1..x_d) + intercept`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransversalHyperplane {
    pub slope: Vec<u32>,
    pub intercept: u32,
}

impl fmt::Display for TransversalHyperplane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x_{} =", self.slope.len() + 1)?;
        for (i, a) in self.slope.iter().enumerate() {
            write!(f, " {a}·x_{} +", i + 1)?;
        }
        write!(f, " {}", self.intercept)
    }
}

/// The ambient space F_q^{d+1} together with its projection F_q^d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSpace {
    field: Field,
    d: usize,
}

impl AffineSpace {
    /// `d` is the dimension of the projected space and must be positive.
    pub fn new(field: Field, d: usize) -> AffineSpace {
        assert!(d > 0, "projected dimension must be positive");
        AffineSpace { field, d }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.order()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// q^{d+1}
    pub fn ambient_size(&self) -> u64 {
        (self.q() as u64).pow(self.d as u32 + 1)
    }

    /// q^d
    pub fn hyperplane_size(&self) -> u64 {
        (self.q() as u64).pow(self.d as u32)
    }

    fn check_point(&self, x: &Point, dim: usize) -> Result<(), GeometryError> {
        if x.dim() != dim {
            return Err(GeometryError::DimensionMismatch { expected: dim, actual: x.dim() });
        }
        let q = self.q();
        if let Some(&value) = x.0.iter().find(|&&c| c >= q) {
            return Err(GeometryError::CoordinateOutOfRange { value, q });
        }
        Ok(())
    }

    fn check_hyperplane(&self, v: &TransversalHyperplane) -> Result<(), GeometryError> {
        if v.slope.len() != self.d {
            return Err(GeometryError::DimensionMismatch { expected: self.d, actual: v.slope.len() });
        }
        let q = self.q();
        if let Some(&value) = v.slope.iter().chain([&v.intercept]).find(|&&c| c >= q) {
            return Err(GeometryError::CoordinateOutOfRange { value, q });
        }
        Ok(())
    }

    /// Points of F_q^n in lexicographic order, first coordinate most significant.
    fn vectors(&self, n: usize) -> impl Iterator<Item = Vec<u32>> {
        let q = self.q() as u64;
        let count = q.pow(n as u32);
        (0..count).map(move |mut idx| {
            let mut v = vec![0u32; n];
            for slot in v.iter_mut().rev() {
                *slot = (idx % q) as u32;
                idx /= q;
            }
            v
        })
    }

    /// All q^{d+1} points of the ambient space, lexicographically.
    pub fn ambient_points(&self) -> impl Iterator<Item = Point> {
        self.vectors(self.d + 1).map(Point)
    }

    /// All q^d points of the projected space, lexicographically.
    pub fn projected_points(&self) -> impl Iterator<Item = Point> {
        self.vectors(self.d).map(Point)
    }

    /// a·x + b for x ∈ F_q^d.
    fn evaluate(&self, v: &TransversalHyperplane, x: &[u32]) -> u32 {
        let f = &self.field;
        v.slope
            .iter()
            .zip(x)
            .fold(v.intercept, |acc, (&a, &xi)| f.add(acc, f.mul(a, xi)))
    }

    pub fn contains(&self, v: &TransversalHyperplane, x: &Point) -> Result<bool, GeometryError> {
        self.check_hyperplane(v)?;
        self.check_point(x, self.d + 1)?;
        Ok(self.evaluate(v, &x.0[..self.d]) == x.0[self.d])
    }

    /// All q^{d+1} transversal hyperplanes ordered by slope, then intercept.
    pub fn transversal_hyperplanes(&self) -> impl Iterator<Item = TransversalHyperplane> {
        let d = self.d;
        self.vectors(d + 1).map(move |mut v| {
            let intercept = v.pop().unwrap();
            TransversalHyperplane { slope: v, intercept }
        })
    }

    /// The q^d transversal hyperplanes through `x`, ordered by slope.
    pub fn through_point(&self, x: &Point) -> Result<Vec<TransversalHyperplane>, GeometryError> {
        self.check_point(x, self.d + 1)?;
        let f = &self.field;
        let last = x.0[self.d];
        Ok(self
            .vectors(self.d)
            .map(|slope| {
                let zero = TransversalHyperplane { slope, intercept: 0 };
                let intercept = f.sub(last, self.evaluate(&zero, &x.0[..self.d]));
                TransversalHyperplane { slope: zero.slope, intercept }
            })
            .collect())
    }

    /// The hyperplane through `x` with the given slope.
    pub fn through_point_with_slope(
        &self,
        x: &Point,
        slope: &Point,
    ) -> Result<TransversalHyperplane, GeometryError> {
        self.check_point(x, self.d + 1)?;
        self.check_point(slope, self.d)?;
        let probe = TransversalHyperplane { slope: slope.0.clone(), intercept: 0 };
        let intercept = self.field.sub(x.0[self.d], self.evaluate(&probe, &x.0[..self.d]));
        Ok(TransversalHyperplane { slope: slope.0.clone(), intercept })
    }

    pub fn slope(&self, v: &TransversalHyperplane) -> Point {
        Point(v.slope.clone())
    }

    /// Drops the last coordinate.
    pub fn project(&self, x: &Point) -> Result<Point, GeometryError> {
        self.check_point(x, self.d + 1)?;
        Ok(Point(x.0[..self.d].to_vec()))
    }

    /// The unique point of `v` projecting onto `y`.
    pub fn lift(&self, v: &TransversalHyperplane, y: &Point) -> Result<Point, GeometryError> {
        self.check_hyperplane(v)?;
        self.check_point(y, self.d)?;
        let mut coords = y.0.clone();
        coords.push(self.evaluate(v, &y.0));
        Ok(Point(coords))
    }

    /// `project(w) + slope(v)` for `w` on `v`.
    pub fn shift_down(&self, v: &TransversalHyperplane, w: &Point) -> Result<Point, GeometryError> {
        if !self.contains(v, w)? {
            return Err(GeometryError::PointNotOnHyperplane(w.clone()));
        }
        let f = &self.field;
        Ok(Point(w.0[..self.d].iter().zip(&v.slope).map(|(&x, &a)| f.add(x, a)).collect()))
    }

    /// `lift(v, y - slope(v))`; inverse of [`AffineSpace::shift_down`].
    pub fn shift_up(&self, v: &TransversalHyperplane, y: &Point) -> Result<Point, GeometryError> {
        self.check_hyperplane(v)?;
        self.check_point(y, self.d)?;
        let f = &self.field;
        let shifted = Point(y.0.iter().zip(&v.slope).map(|(&x, &a)| f.sub(x, a)).collect());
        self.lift(v, &shifted)
    }

    /// Solves `a·π(x) + b = x_{d+1}` for every given point by Gaussian
    /// elimination over F_q in the unknowns `(a_1, …, a_d, b)`.
    pub fn unique_hyperplane_containing<'a, I>(&self, points: I) -> Result<TransversalHyperplane, GeometryError>
    where
        I: IntoIterator<Item = &'a Point>,
    {
        let f = &self.field;
        let n = self.d + 1;
        // Augmented rows [x_1 .. x_d, 1 | x_{d+1}].
        let mut rows: Vec<Vec<u32>> = Vec::new();
        for x in points {
            self.check_point(x, n)?;
            let mut row = x.0[..self.d].to_vec();
            row.push(1);
            row.push(x.0[self.d]);
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(GeometryError::Empty);
        }

        let mut pivots = Vec::with_capacity(n);
        let mut rank = 0;
        for col in 0..n {
            let Some(r) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
                continue;
            };
            rows.swap(rank, r);
            let scale = f.inv(rows[rank][col]).unwrap();
            for entry in &mut rows[rank][col..] {
                *entry = f.mul(*entry, scale);
            }
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[col] != 0 {
                    let factor = row[col];
                    for (entry, &p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                        *entry = f.sub(*entry, f.mul(factor, p));
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }

        // A leftover row 0 = c with c ≠ 0 means the system is inconsistent.
        if rows[rank..].iter().any(|row| row[n] != 0) {
            return Err(GeometryError::NoneContains);
        }
        if rank < n {
            return Err(GeometryError::Ambiguous((self.q() as u64).pow((n - rank) as u32)));
        }
        let mut solution = vec![0u32; n];
        for (r, &col) in pivots.iter().enumerate() {
            solution[col] = rows[r][n];
        }
        let intercept = solution.pop().unwrap();
        Ok(TransversalHyperplane { slope: solution, intercept })
    }

    /// Recognises a point set as a transversal hyperplane, if it is one.
    pub fn as_transversal(&self, points: &[Point]) -> Option<TransversalHyperplane> {
        if points.len() as u64 != self.hyperplane_size() {
            return None;
        }
        let v = self.unique_hyperplane_containing(points).ok()?;
        // q^d points on a hyperplane of size q^d: equality iff all distinct.
        let mut sorted = points.to_vec();
        sorted.sort();
        sorted.dedup();
        (sorted.len() == points.len()).then_some(v)
    }
}
