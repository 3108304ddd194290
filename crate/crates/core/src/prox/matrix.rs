//! Explicit-matrix seminorms `||D f||_q`, solved through their duals.

use nalgebra::{DMatrix, DVector};

use crate::error::{GsamError, Result};
use crate::penalty::lq_norm;
use crate::qp::{ball_ls, bvls};

pub fn to_matrix(d: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = d.len();
    let cols = d.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows, cols, |i, j| d[i][j])
}

/// Prox of `gamma ||D f||_q` under the weighted norm, for `q` in {1, 2}.
///
/// With `B = W^-1/2 D'` and `c = W^1/2 r` the dual is a bounded least-squares
/// problem in `u` and the primal is `f = r - W^-1 D' u`.
#[derive(Debug, Clone)]
pub struct MatrixProx {
    d: DMatrix<f64>,
    q: f64,
    weights: Vec<f64>,
    b: DMatrix<f64>,
}

impl MatrixProx {
    pub fn new(d: &[Vec<f64>], q: f64, weights: &[f64]) -> Result<Self> {
        let d = to_matrix(d);
        if d.ncols() != weights.len() {
            return Err(GsamError::DimensionMismatch {
                expected: d.ncols(),
                found: weights.len(),
                context: "penalty matrix columns vs knots",
            });
        }
        if q != 1.0 && q != 2.0 {
            return Err(GsamError::Unsupported(format!("prox for matrix seminorm with q = {q}")));
        }
        let b = DMatrix::from_fn(d.ncols(), d.nrows(), |c, i| d[(i, c)] / weights[c].sqrt());
        Ok(MatrixProx {
            d,
            q,
            weights: weights.to_vec(),
            b,
        })
    }

    pub fn solve(&self, r: &[f64], gamma: f64) -> Result<Vec<f64>> {
        if gamma <= 0.0 || self.d.nrows() == 0 {
            return Ok(r.to_vec());
        }
        let c = DVector::from_iterator(r.len(), r.iter().zip(&self.weights).map(|(a, w)| a * w.sqrt()));
        let u = if self.q == 1.0 {
            let mrows = self.d.nrows();
            let sol = bvls(&self.b, &c, &vec![-gamma; mrows], &vec![gamma; mrows]);
            if !sol.converged {
                return Err(GsamError::Solver {
                    solver: "matrix seminorm dual",
                    iterations: sol.iterations,
                    residual: sol.residual,
                });
            }
            sol.x
        } else {
            ball_ls(&self.b, &c, gamma)?
        };
        let dtu = self.d.transpose() * u;
        Ok(r.iter()
            .zip(dtu.iter())
            .zip(&self.weights)
            .map(|((ri, di), wi)| ri - di / wi)
            .collect())
    }
}

/// `||D (D'D)^+ v||_qd` with `1/q + 1/qd = 1`: the dual of `f -> ||D f||_q`
/// at `v`, or `+inf` when `v` is not in the row space of `D`.
pub fn dual_norm_matrix(d: &DMatrix<f64>, v: &[f64], q: f64) -> Result<f64> {
    if v.len() != d.ncols() {
        return Err(GsamError::DimensionMismatch {
            expected: d.ncols(),
            found: v.len(),
            context: "dual norm vector vs matrix columns",
        });
    }
    if !(q >= 1.0) {
        return Err(GsamError::InvalidArgument(format!("q must be >= 1, got {q}")));
    }
    let vv = DVector::from_column_slice(v);
    let vnorm = vv.norm();
    if vnorm == 0.0 {
        return Ok(0.0);
    }
    if d.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    let svd = d.clone().svd(true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let s = &svd.singular_values;
    let smax = s.max();
    let mut z = DVector::zeros(d.nrows());
    let mut proj = DVector::zeros(d.ncols());
    for i in 0..s.len() {
        if s[i] <= 1e-10 * smax {
            continue;
        }
        let coef = vt.row(i).transpose().dot(&vv);
        proj.axpy(coef, &vt.row(i).transpose(), 1.0);
        z.axpy(coef / s[i], &u.column(i), 1.0);
    }
    if (&vv - &proj).norm() > 1e-8 * vnorm {
        return Ok(f64::INFINITY);
    }
    let qd = if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    };
    Ok(lq_norm(z.as_slice(), qd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_q2_is_self_dual() {
        let d = DMatrix::<f64>::identity(3, 3);
        let v = [3.0, -4.0, 12.0];
        assert!((dual_norm_matrix(&d, &v, 2.0).unwrap() - 13.0).abs() < 1e-12);
        assert_eq!(dual_norm_matrix(&d, &[0.0; 3], 2.0).unwrap(), 0.0);
    }

    #[test]
    fn q1_dual_matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let d = DMatrix::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0));
            let w = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let v = d.transpose() * &w;
            // vertices of {z in range(D) : ||z||_1 <= 1} are +-e_i when D has full row rank
            let pinv = d.clone().pseudo_inverse(1e-14).unwrap();
            let mut best: f64 = 0.0;
            for i in 0..4 {
                let mut e: DVector<f64> = DVector::zeros(4);
                e[i] = 1.0;
                let f = &pinv * e;
                best = best.max(v.dot(&f).abs());
            }
            let dual = dual_norm_matrix(&d, v.as_slice(), 1.0).unwrap();
            assert!((dual - best).abs() < 1e-10 * (1.0 + best), "{dual} vs {best}");
        }
    }

    #[test]
    fn outside_row_space_is_infinite() {
        let d = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert!(dual_norm_matrix(&d, &[1.0, 1.0], 2.0).unwrap().is_infinite());
        assert!((dual_norm_matrix(&d, &[1.0, -1.0], 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_prox_reduces_to_fused_for_differences() {
        let m = 6;
        let d: Vec<Vec<f64>> = (0..m - 1)
            .map(|i| {
                let mut row = vec![0.0; m];
                row[i] = -1.0;
                row[i + 1] = 1.0;
                row
            })
            .collect();
        let w = vec![1.0 / m as f64; m];
        let r = [0.0, 1.0, 0.5, 3.0, 2.5, 2.0];
        let p = MatrixProx::new(&d, 1.0, &w).unwrap();
        let f = p.solve(&r, 0.05).unwrap();
        let g = crate::prox::fused::tv_denoise_weighted(&r, &w, 0.05);
        for (a, b) in f.iter().zip(&g) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
