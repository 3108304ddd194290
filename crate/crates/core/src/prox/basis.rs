//! Projection onto a finite basis expansion (plus constants).

use crate::penalty::{orthonormalize, raw_basis, BasisFamily};

#[derive(Debug, Clone)]
pub struct BasisProjector {
    weights: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl BasisProjector {
    pub fn new(knots: &[f64], weights: &[f64], m: usize, family: BasisFamily) -> Self {
        let basis = orthonormalize(&raw_basis(knots, m, family), weights);
        BasisProjector {
            weights: weights.to_vec(),
            basis,
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Weighted least-squares projection of `r` onto the span.
    pub fn project(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; r.len()];
        for q in &self.basis {
            let c: f64 = r.iter().zip(q).zip(&self.weights).map(|((a, b), w)| w * a * b).sum();
            out.iter_mut().zip(q).for_each(|(o, b)| *o += c * b);
        }
        out
    }
}
