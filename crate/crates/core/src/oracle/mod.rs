//! Slow reference solvers and optimality certificates for tests.
//!
//! Every penalty is rewritten in one of a few dense canonical forms. The
//! univariate oracle runs smoothing continuation with damped Newton steps,
//! then polishes candidate sparsity patterns by exact Newton solves on the
//! matching subspace and keeps the candidate with the best KKT certificate.

mod fine_grid;
mod newton;

use nalgebra::{DMatrix, DVector};

use crate::data::{weighted_norm, Dataset};
use crate::error::{GsamError, Result};
use crate::model::AdditiveModel;
use crate::penalty::{raw_basis, trend_operator, Direction, PenaltySpec, SplineSystem};
use crate::qp::{ball_ls, bvls};

pub use fine_grid::sobolev_fine_grid;

use newton::{minimize, Smoothing};

pub const ORACLE_MAX_KNOTS: usize = 200;

/// Dense canonical form of a structural penalty.
#[derive(Debug, Clone)]
pub enum Form {
    /// `||D f||_1`
    L1(DMatrix<f64>),
    /// `||L f||_2`
    L2(DMatrix<f64>),
    /// indicator of `A f >= 0`
    Cone(DMatrix<f64>),
    /// indicator of `f in range(B)`, with `B` orthonormal
    Subspace(DMatrix<f64>),
    /// `f' K f`
    Quadratic(DMatrix<f64>),
}

fn dense(rows: Vec<Vec<f64>>, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j])
}

/// `L` with `||L f||^2 = int f''^2` for the natural interpolating spline.
fn spline_root(knots: &[f64]) -> Result<DMatrix<f64>> {
    let m = knots.len();
    if m < 3 {
        return Ok(DMatrix::zeros(0, m));
    }
    let sys = SplineSystem::new(knots);
    let k = m - 2;
    let mut r = DMatrix::zeros(k, k);
    let mut qt = DMatrix::zeros(k, m);
    for c in 0..k {
        r[(c, c)] = sys.r_diag[c];
        if c + 1 < k {
            r[(c, c + 1)] = sys.r_off[c];
            r[(c + 1, c)] = sys.r_off[c];
        }
        let q = sys.q_column(c);
        for (d, v) in q.iter().enumerate() {
            qt[(c, c + d)] = *v;
        }
    }
    let chol = r
        .cholesky()
        .ok_or_else(|| GsamError::Oracle("spline roughness matrix not positive definite".into()))?;
    chol.l()
        .solve_lower_triangular(&qt)
        .ok_or_else(|| GsamError::Oracle("singular spline factor".into()))
}

/// Orthonormal basis of the column space of `a`.
fn range_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax)
        .collect();
    DMatrix::from_fn(a.nrows(), keep.len(), |i, k| u[(i, keep[k])])
}

/// Orthonormal basis of `{f : a f = 0}`.
pub(crate) fn null_space(a: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::identity(m, m);
    }
    let rows = a.nrows().max(m);
    let mut sq = DMatrix::zeros(rows, m);
    sq.rows_mut(0, a.nrows()).copy_from(a);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested V'");
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(f64::MIN_POSITIVE);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol)
        .collect();
    DMatrix::from_fn(m, null.len(), |i, k| vt[(null[k], i)])
}

pub fn canonical(knots: &[f64], spec: &PenaltySpec) -> Result<Form> {
    spec.validate()?;
    let m = knots.len();
    Ok(match spec {
        PenaltySpec::TrendFilter { order } => Form::L1(dense(trend_operator(knots, *order).to_dense(), m)),
        PenaltySpec::SobolevSpline => Form::L2(spline_root(knots)?),
        PenaltySpec::SobolevSquared => {
            let l = spline_root(knots)?;
            Form::Quadratic(l.transpose() * l)
        }
        PenaltySpec::BasisSubspace { m: size, family } => {
            let cols = raw_basis(knots, *size, *family);
            let b = DMatrix::from_fn(m, cols.len(), |i, k| cols[k][i]);
            Form::Subspace(range_basis(&b))
        }
        PenaltySpec::Isotonic { direction } => {
            let sign = if *direction == Direction::Increasing { 1.0 } else { -1.0 };
            let mut a = DMatrix::zeros(m.saturating_sub(1), m);
            for i in 0..m.saturating_sub(1) {
                a[(i, i)] = -sign;
                a[(i, i + 1)] = sign;
            }
            Form::Cone(a)
        }
        PenaltySpec::MatrixSeminorm { d, q } => {
            if d.first().map_or(0, |r| r.len()) != m {
                return Err(GsamError::DimensionMismatch {
                    expected: m,
                    found: d.first().map_or(0, |r| r.len()),
                    context: "penalty matrix columns vs knots",
                });
            }
            let mat = dense(d.clone(), m);
            if *q == 1.0 {
                Form::L1(mat)
            } else if *q == 2.0 {
                Form::L2(mat)
            } else {
                return Err(GsamError::Unsupported(format!("oracle for matrix seminorm with q = {q}")));
            }
        }
    })
}

/// One weighted prox instance in canonical form, weights summing to one.
pub(crate) struct Instance<'a> {
    pub r: &'a [f64],
    pub w: Vec<f64>,
    pub gamma: f64,
    pub kappa: f64,
    pub form: &'a Form,
}

impl Instance<'_> {
    pub fn m(&self) -> usize {
        self.r.len()
    }

    pub fn penalty(&self, f: &[f64]) -> f64 {
        let fv = DVector::from_column_slice(f);
        let scale = 1.0 + fv.amax();
        match self.form {
            Form::L1(d) => (d * &fv).lp_norm(1),
            Form::L2(l) => (l * &fv).norm(),
            Form::Quadratic(k) => fv.dot(&(k * &fv)),
            Form::Cone(a) => {
                if (a * &fv).iter().all(|z| *z >= -1e-12 * scale) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Form::Subspace(b) => {
                let resid = &fv - b * (b.transpose() * &fv);
                if resid.norm() <= 1e-9 * scale {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn objective(&self, f: &[f64]) -> f64 {
        let diff: Vec<f64> = self.r.iter().zip(f).map(|(a, b)| a - b).collect();
        let pen = if self.gamma > 0.0 || matches!(self.form, Form::Cone(_) | Form::Subspace(_)) {
            let p = self.penalty(f);
            if p.is_infinite() {
                return f64::INFINITY;
            }
            self.gamma * p
        } else {
            0.0
        };
        0.5 * weighted_norm(&diff, &self.w).powi(2) + pen + self.kappa * weighted_norm(f, &self.w)
    }
}

fn unit_weights(weights: &[f64]) -> Vec<f64> {
    let s: f64 = weights.iter().sum();
    weights.iter().map(|v| v / s).collect()
}

fn check_inputs(knots: &[f64], r: &[f64], weights: &[f64], gamma: f64, kappa: f64) -> Result<()> {
    let m = knots.len();
    if m == 0 || r.len() != m || weights.len() != m {
        return Err(GsamError::DimensionMismatch {
            expected: m,
            found: if r.len() != m { r.len() } else { weights.len() },
            context: "oracle inputs",
        });
    }
    if m > ORACLE_MAX_KNOTS {
        return Err(GsamError::InvalidArgument(format!(
            "oracle limited to {ORACLE_MAX_KNOTS} knots, got {m}"
        )));
    }
    if weights.iter().any(|w| !(*w > 0.0)) || !(gamma >= 0.0 && kappa >= 0.0) {
        return Err(GsamError::InvalidArgument("oracle needs positive weights, non-negative gamma and kappa".into()));
    }
    if r.iter().chain(knots).any(|v| !v.is_finite()) {
        return Err(GsamError::NonFinite("oracle inputs".into()));
    }
    Ok(())
}

/// Minimal stationarity residual of `f` for
/// `1/2 ||r - f||_n^2 + gamma P(f) + kappa ||f||_n`, measured in the dual
/// weighted norm, minimised over all admissible subgradients and divided by
/// `1 +` the sizes of the fit and penalty terms (the penalty term measured by
/// its operator norm when that is larger). Violated indicator
/// constraints add their size.
pub fn kkt_certificate(
    knots: &[f64],
    f: &[f64],
    r: &[f64],
    weights: &[f64],
    gamma: f64,
    kappa: f64,
    spec: &PenaltySpec,
) -> Result<f64> {
    check_inputs(knots, r, weights, gamma, kappa)?;
    if f.len() != knots.len() {
        return Err(GsamError::DimensionMismatch {
            expected: knots.len(),
            found: f.len(),
            context: "certificate candidate",
        });
    }
    let form = canonical(knots, spec)?;
    let inst = Instance {
        r,
        w: unit_weights(weights),
        gamma,
        kappa,
        form: &form,
    };
    Ok(certificate(&inst, f))
}

pub(crate) fn certificate(inst: &Instance, f: &[f64]) -> f64 {
    let m = inst.m();
    let w = &inst.w;
    let fv = DVector::from_column_slice(f);
    let rnorm = weighted_norm(inst.r, w);
    let fnorm = weighted_norm(f, w);
    let at_zero = fnorm <= 1e-13 * (1.0 + rnorm);
    let mut a = DVector::from_fn(m, |i, _| w[i] * (f[i] - inst.r[i]));
    if !at_zero && inst.kappa > 0.0 {
        a.axpy(inst.kappa / fnorm, &DVector::from_fn(m, |i, _| w[i] * f[i]), 1.0);
    }
    // penalty terms whose subgradient is already determined
    let mut fixed = DVector::zeros(m);
    // multiplier columns with bounds, or a single ball block
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    let mut ball: Option<(DMatrix<f64>, f64)> = None;
    let mut infeasible = 0.0;
    let fscale = 1.0 + fv.amax();
    let inv_sqrt: Vec<f64> = w.iter().map(|v| 1.0 / v.sqrt()).collect();
    // size of the penalty operator acting on a bounded multiplier
    let op_norm = |mat: &DMatrix<f64>| {
        mat.row_iter()
            .map(|row| row.iter().zip(&inv_sqrt).map(|(a, b)| (a * b).powi(2)).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    };
    let mut op_scale = 0.0;
    match inst.form {
        Form::L1(d) => {
            op_scale = inst.gamma * op_norm(d);
            let z = d * &fv;
            for (i, zi) in z.iter().enumerate() {
                let row = d.row(i).transpose();
                // rounding in f moves z_i by about eps |d_i|_1 |f|
                if zi.abs() > 1e-9 * fscale * row.lp_norm(1) {
                    fixed.axpy(inst.gamma * zi.signum(), &row, 1.0);
                } else if inst.gamma > 0.0 {
                    cols.push(row * inst.gamma);
                    lo.push(-1.0);
                    hi.push(1.0);
                }
            }
        }
        Form::L2(l) => {
            op_scale = inst.gamma * op_norm(l);
            let z = l * &fv;
            let zn = z.norm();
            if zn > 1e-9 * (1.0 + (l * DVector::from_column_slice(inst.r)).norm()) {
                fixed.axpy(inst.gamma / zn, &(l.transpose() * z), 1.0);
            } else if inst.gamma > 0.0 && l.nrows() > 0 {
                ball = Some((l.transpose(), inst.gamma));
            }
        }
        Form::Quadratic(k) => {
            op_scale = 2.0 * inst.gamma * op_norm(k) * fv.norm();
            fixed.axpy(2.0 * inst.gamma, &(k * &fv), 1.0)
        }
        Form::Cone(amat) => {
            let z = amat * &fv;
            for (i, zi) in z.iter().enumerate() {
                let zt = 1e-10 * fscale * amat.row(i).lp_norm(1);
                if *zi < -zt {
                    infeasible += -zi;
                }
                if *zi <= zt {
                    cols.push(-amat.row(i).transpose());
                    lo.push(0.0);
                    hi.push(f64::INFINITY);
                }
            }
        }
        Form::Subspace(b) => {
            infeasible += (&fv - b * (b.transpose() * &fv)).norm();
            let comp = null_space(&b.transpose(), m);
            for c in comp.column_iter() {
                cols.push(c.into_owned());
                lo.push(f64::NEG_INFINITY);
                hi.push(f64::INFINITY);
            }
        }
    }
    let dual = |v: &DVector<f64>| DVector::from_fn(m, |i, _| v[i] * inv_sqrt[i]);
    let target = -dual(&(&a + &fixed));
    let scaled = |mat: &DMatrix<f64>| DMatrix::from_fn(m, mat.ncols(), |i, j| mat[(i, j)] * inv_sqrt[i]);
    let chosen: DVector<f64> = if let Some((lt, radius)) = ball {
        let bm = scaled(&lt);
        match ball_ls(&bm, &target, radius) {
            Ok(u) => &bm * u,
            Err(_) => return f64::INFINITY,
        }
    } else if cols.is_empty() {
        DVector::zeros(m)
    } else {
        let bm = scaled(&DMatrix::from_columns(&cols));
        let sol = bvls(&bm, &target, &lo, &hi);
        &bm * &sol.x
    };
    let resid = (&chosen - &target).norm();
    // relative to the size of the terms that have to cancel; rounding in f
    // is amplified by the operator norm
    let scale = 1.0 + dual(&a).norm() + (dual(&fixed) + &chosen).norm().max(op_scale);
    let stationarity = if at_zero { (resid - inst.kappa).max(0.0) } else { resid };
    stationarity / scale + infeasible
}

/// Reference minimiser of `1/2 ||r - f||_n^2 + gamma P(f) + kappa ||f||_n`,
/// certified to `tol (1 + ||r||_n)`.
#[allow(clippy::too_many_arguments)]
pub fn oracle_univariate(
    knots: &[f64],
    r: &[f64],
    weights: &[f64],
    gamma: f64,
    kappa: f64,
    spec: &PenaltySpec,
    tol: f64,
) -> Result<Vec<f64>> {
    check_inputs(knots, r, weights, gamma, kappa)?;
    let form = canonical(knots, spec)?;
    let inst = Instance {
        r,
        w: unit_weights(weights),
        gamma,
        kappa,
        form: &form,
    };
    let bound = tol * (1.0 + weighted_norm(r, &inst.w));
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for cand in candidates(&inst)? {
        if cand.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let cert = certificate(&inst, &cand);
        let obj = inst.objective(&cand);
        let better = match &best {
            None => true,
            Some((c, o, _)) => {
                if cert <= bound && *c <= bound {
                    obj < *o - 1e-14 * (1.0 + o.abs())
                } else {
                    cert < *c
                }
            }
        };
        if better {
            best = Some((cert, obj, cand));
        }
    }
    match best {
        Some((cert, _, f)) if cert <= bound => Ok(f),
        Some((cert, _, _)) => Err(GsamError::Oracle(format!(
            "no candidate certified: best residual {cert:.3e} > {bound:.3e}"
        ))),
        None => Err(GsamError::Oracle("no finite candidate".into())),
    }
}

fn candidates(inst: &Instance) -> Result<Vec<Vec<f64>>> {
    let m = inst.m();
    let mut out = vec![vec![0.0; m]];
    if let Form::Subspace(b) = inst.form {
        out.push(subspace_solution(inst, b));
        return Ok(out);
    }
    let scale = 1.0 + inst.r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // smoothing continuation on the full space
    let mut f = match inst.form {
        Form::Cone(a) => interior_start(a, inst.r),
        _ => inst.r.to_vec(),
    };
    let eye = DMatrix::identity(m, m);
    let mut mu = 1e-1 * scale;
    while mu >= 1e-11 * scale {
        f = minimize(inst, &eye, &f, Smoothing::uniform(mu))?;
        mu *= 0.1;
    }
    out.push(f.clone());
    let fv = DVector::from_column_slice(&f);
    let exact = Smoothing::uniform(0.0);
    match inst.form {
        Form::L1(mat) | Form::Cone(mat) => {
            let z = mat * &fv;
            let zmax = z.amax();
            let mut seen: Vec<Vec<usize>> = Vec::new();
            for e in 2..=11 {
                let thr = 10f64.powi(-e) * (1.0 + zmax);
                let rows: Vec<usize> = (0..z.len())
                    .filter(|&i| if matches!(inst.form, Form::Cone(_)) { z[i] <= thr } else { z[i].abs() <= thr })
                    .collect();
                if seen.contains(&rows) {
                    continue;
                }
                seen.push(rows.clone());
                let sub = DMatrix::from_fn(rows.len(), m, |i, j| mat[(rows[i], j)]);
                let basis = null_space(&sub, m);
                if basis.ncols() == 0 {
                    continue;
                }
                let start = &basis * (basis.transpose() * &fv);
                out.push(minimize(inst, &basis, start.as_slice(), exact)?);
            }
        }
        Form::L2(l) => {
            out.push(minimize(inst, &eye, &f, exact)?);
            let basis = null_space(l, m);
            if basis.ncols() > 0 {
                let start = &basis * (basis.transpose() * &fv);
                out.push(minimize(inst, &basis, start.as_slice(), exact)?);
            }
        }
        Form::Quadratic(_) => out.push(minimize(inst, &eye, &f, exact)?),
        Form::Subspace(_) => unreachable!(),
    }
    Ok(out)
}

/// Closed form: with `G = W^1/2 B = U S V'`, the problem in `d = S V' c` is
/// a single-group lasso.
fn subspace_solution(inst: &Instance, b: &DMatrix<f64>) -> Vec<f64> {
    let m = inst.m();
    if b.ncols() == 0 {
        return vec![0.0; m];
    }
    let sw: Vec<f64> = inst.w.iter().map(|v| v.sqrt()).collect();
    let g = DMatrix::from_fn(m, b.ncols(), |i, j| sw[i] * b[(i, j)]);
    let u = range_basis(&g);
    let wr = DVector::from_fn(m, |i, _| sw[i] * inst.r[i]);
    let mut d = u.transpose() * wr;
    let dn = d.norm();
    let shrink = if dn > inst.kappa { 1.0 - inst.kappa / dn } else { 0.0 };
    d *= shrink;
    let h = u * d;
    (0..m).map(|i| h[i] / sw[i]).collect()
}

/// A point strictly inside `{A f > 0}` near `r`.
fn interior_start(a: &DMatrix<f64>, r: &[f64]) -> Vec<f64> {
    let m = r.len();
    if a.nrows() == 0 {
        return r.to_vec();
    }
    let sign = if a[(0, 1)] > 0.0 { 1.0 } else { -1.0 };
    let mean = r.iter().sum::<f64>() / m as f64;
    let spread = 1e-2 * (1.0 + r.iter().fold(0.0f64, |acc, v| acc.max((v - mean).abs())));
    (0..m)
        .map(|i| mean + sign * spread * (i as f64 - 0.5 * (m - 1) as f64) / m as f64)
        .collect()
}

/// Objective of `model` on `data`, recomputed observation by observation from
/// the canonical penalty forms.
pub fn objective_direct(model: &AdditiveModel, data: &Dataset) -> Result<f64> {
    if model.p() != data.p() {
        return Err(GsamError::DimensionMismatch {
            expected: model.p(),
            found: data.p(),
            context: "model vs data features",
        });
    }
    let n = data.n();
    let mut loss = 0.0;
    for i in 0..n {
        let mut theta = model.intercept;
        for (j, c) in model.components.iter().enumerate() {
            theta += c.eval(data.x()[(i, j)]);
        }
        loss += model.loss.value(data.y()[i], theta);
    }
    loss /= n as f64;
    let (w_st, w_sp) = match model.omega {
        Some(om) => (om * model.lambda * model.lambda, (1.0 - om) * model.lambda),
        None => (model.lambda * model.lambda, model.lambda),
    };
    let mut pen = 0.0;
    for (j, c) in model.components.iter().enumerate() {
        let values: Vec<f64> = (0..n).map(|i| c.eval(data.x()[(i, j)])).collect();
        let norm = (values.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let inst = Instance {
            r: &c.values,
            w: vec![1.0; c.values.len()],
            gamma: 1.0,
            kappa: 0.0,
            form: &canonical(&c.knots, &model.penalty)?,
        };
        let p = match inst.form {
            Form::Cone(_) | Form::Subspace(_) => 0.0,
            _ => inst.penalty(&c.values),
        };
        pen += w_st * p + w_sp * norm;
    }
    Ok(loss + pen)
}

/// Component MSE recomputed row by row.
pub fn component_mse_direct(model: &AdditiveModel, x: &DMatrix<f64>, truth: &[Vec<f64>]) -> f64 {
    let n = x.nrows();
    let mut total = 0.0;
    for i in 0..n {
        let mut d = 0.0;
        for (j, c) in model.components.iter().enumerate() {
            d += c.eval(x[(i, j)]) - truth[j][i];
        }
        total += d * d;
    }
    total / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::BasisFamily;

    fn knots(m: usize) -> Vec<f64> {
        (0..m).map(|i| i as f64 * 0.5 + 0.1 * (i % 3) as f64).collect()
    }

    fn specs() -> Vec<PenaltySpec> {
        vec![
            PenaltySpec::TrendFilter { order: 0 },
            PenaltySpec::TrendFilter { order: 1 },
            PenaltySpec::TrendFilter { order: 2 },
            PenaltySpec::SobolevSpline,
            PenaltySpec::SobolevSquared,
            PenaltySpec::BasisSubspace {
                m: 2,
                family: BasisFamily::Polynomial,
            },
            PenaltySpec::Isotonic {
                direction: Direction::Decreasing,
            },
        ]
    }

    #[test]
    fn zero_penalties_return_targets() {
        let k = knots(7);
        let r = vec![0.5, -1.0, 2.0, 0.0, 1.5, -0.5, 0.25];
        for spec in specs().into_iter().take(5) {
            let f = oracle_univariate(&k, &r, &[1.0; 7], 0.0, 0.0, &spec, 1e-10).unwrap();
            for (a, b) in f.iter().zip(&r) {
                assert!((a - b).abs() < 1e-9, "{spec:?}");
            }
            assert!(kkt_certificate(&k, &r, &r, &[1.0; 7], 0.0, 0.0, &spec).unwrap() < 1e-14);
        }
    }

    #[test]
    fn large_kappa_gives_zero() {
        let k = knots(6);
        let r = vec![1.0, -2.0, 0.5, 0.3, 2.0, -1.0];
        let rn = weighted_norm(&r, &[1.0 / 6.0; 6]);
        for spec in specs() {
            let f = oracle_univariate(&k, &r, &[1.0; 6], 0.3, rn, &spec, 1e-10).unwrap();
            assert!(f.iter().all(|v| *v == 0.0), "{spec:?}");
        }
    }

    #[test]
    fn certificates_certify_and_reject() {
        let k = knots(9);
        let r: Vec<f64> = k.iter().map(|x| (1.7 * x).sin() + 0.3 * x).collect();
        let w: Vec<f64> = (0..9).map(|i| 1.0 + (i % 2) as f64).collect();
        for spec in specs() {
            let f = oracle_univariate(&k, &r, &w, 0.05, 0.1, &spec, 1e-10).unwrap_or_else(|e| panic!("{spec:?} {e}"));
            let c = kkt_certificate(&k, &f, &r, &w, 0.05, 0.1, &spec).unwrap();
            assert!(c <= 1e-9, "{spec:?} {c}");
            let moved: Vec<f64> = f.iter().map(|v| v + 0.1).collect();
            assert!(kkt_certificate(&k, &moved, &r, &w, 0.05, 0.1, &spec).unwrap() > 1e-4, "{spec:?}");
        }
    }

    #[test]
    fn fused_two_point_example() {
        let f = oracle_univariate(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 1.0], 10.0, 0.0, &PenaltySpec::TrendFilter { order: 0 }, 1e-10)
            .unwrap();
        assert!((f[0] - 0.5).abs() < 1e-12 && (f[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_oversized_problems() {
        let k: Vec<f64> = (0..201).map(f64::from).collect();
        let r = vec![0.0; 201];
        assert!(oracle_univariate(&k, &r, &vec![1.0; 201], 0.1, 0.1, &PenaltySpec::SobolevSpline, 1e-10).is_err());
    }
}
