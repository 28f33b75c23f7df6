//! Half-open axis-aligned boxes `∏ (lowerᵢ, upperᵢ]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfOpenBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl HalfOpenBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidParameter(
                "box must have at least one axis".into(),
            ));
        }
        if lower.iter().chain(upper.iter()).any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("box bounds must not be NaN".into()));
        }
        Ok(Self { lower, upper })
    }

    pub(crate) fn from_parts(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        debug_assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    /// `Q_n = (−2^n, 2^n]^d`.
    pub fn cube(dim: usize, n: i32) -> Self {
        let r = 2f64.powi(n);
        Self {
            lower: vec![-r; dim],
            upper: vec![r; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_empty(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(a, b)| a >= b)
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| b - a)
            .product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Membership with the half-open convention: lower faces excluded, upper faces included.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| a < v && v <= b)
    }

    pub fn intersect(&self, other: &HalfOpenBox) -> HalfOpenBox {
        let lower = self
            .lower
            .iter()
            .zip(&other.lower)
            .map(|(a, b)| a.max(*b))
            .collect();
        let upper = self
            .upper
            .iter()
            .zip(&other.upper)
            .map(|(a, b)| a.min(*b))
            .collect();
        HalfOpenBox { lower, upper }
    }

    /// `self \ other` as at most `2d` disjoint boxes, via an axis sweep.
    pub fn subtract(&self, other: &HalfOpenBox) -> Vec<HalfOpenBox> {
        if self.is_empty() {
            return Vec::new();
        }
        let overlap = self.intersect(other);
        if overlap.is_empty() {
            return vec![self.clone()];
        }
        let mut pieces = Vec::new();
        let mut rest = self.clone();
        for axis in 0..self.dim() {
            if rest.lower[axis] < overlap.lower[axis] {
                let mut below = rest.clone();
                below.upper[axis] = overlap.lower[axis];
                pieces.push(below);
            }
            if overlap.upper[axis] < rest.upper[axis] {
                let mut above = rest.clone();
                above.lower[axis] = overlap.upper[axis];
                pieces.push(above);
            }
            rest.lower[axis] = overlap.lower[axis];
            rest.upper[axis] = overlap.upper[axis];
        }
        pieces
    }

    pub fn scaled(&self, factor: f64) -> HalfOpenBox {
        debug_assert!(factor > 0.0);
        HalfOpenBox {
            lower: self.lower.iter().map(|v| v * factor).collect(),
            upper: self.upper.iter().map(|v| v * factor).collect(),
        }
    }

    /// The one-dimensional interval along `axis`.
    pub fn axis(&self, axis: usize) -> (f64, f64) {
        (self.lower[axis], self.upper[axis])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(lo: &[f64], hi: &[f64]) -> HalfOpenBox {
        HalfOpenBox::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn half_open_membership() {
        let unit = b(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(unit.contains(&[1.0, 1.0]));
        assert!(!unit.contains(&[0.0, 0.5]));
        assert!(unit.contains(&[0.5, 1.0]));
    }

    #[test]
    fn annulus_by_subtraction() {
        let outer = HalfOpenBox::cube(1, 2);
        let inner = HalfOpenBox::cube(1, 1);
        let pieces = outer.subtract(&inner);
        assert_eq!(pieces, vec![b(&[-4.0], &[-2.0]), b(&[2.0], &[4.0])]);
    }

    #[test]
    fn subtraction_preserves_volume() {
        let outer = HalfOpenBox::cube(3, 2);
        let inner = HalfOpenBox::cube(3, 1);
        let pieces = outer.subtract(&inner);
        assert!(pieces.len() <= 6);
        let vol: f64 = pieces.iter().map(|p| p.volume()).sum();
        assert_eq!(vol, 8f64.powi(3) - 4f64.powi(3));
        for (i, p) in pieces.iter().enumerate() {
            for q in &pieces[i + 1..] {
                assert!(p.intersect(q).is_empty());
            }
        }
    }

    #[test]
    fn disjoint_subtraction_is_identity() {
        let a = b(&[0.0], &[1.0]);
        let c = b(&[1.0], &[2.0]);
        assert_eq!(a.subtract(&c), vec![a.clone()]);
    }
}
