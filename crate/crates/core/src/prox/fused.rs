//! Exact weighted 1-D fused lasso by dynamic programming.
//!
//! Solves `min_b 1/2 sum w_i (y_i - b_i)^2 + lam sum |b_{i+1} - b_i|` in linear
//! time. The derivative of the running message is piecewise linear; its knots
//! live in a double-ended buffer with per-knot slope/offset increments.

pub fn tv_denoise_weighted(y: &[f64], w: &[f64], lam: f64) -> Vec<f64> {
    let n = y.len();
    if n <= 1 || lam <= 0.0 {
        return y.to_vec();
    }
    // message knots as (location, slope increment, offset increment),
    // interleaved so each scan step touches one cache line; zero-filled
    // arrays come from the allocator lazily, and only the ends are touched
    let mut knots = vec![[0.0f64; 3]; 2 * n];
    let mut tm = vec![0.0; n - 1];
    let mut tp = vec![0.0; n - 1];

    tm[0] = -lam / w[0] + y[0];
    tp[0] = lam / w[0] + y[0];
    let mut l = n - 1;
    let mut r = n;
    knots[l] = [tm[0], w[0], -w[0] * y[0] + lam];
    knots[r] = [tp[0], -w[0], w[0] * y[0] + lam];
    let mut afirst = w[1];
    let mut bfirst = -lam - w[1] * y[1];
    let mut alast = -w[1];
    let mut blast = w[1] * y[1] - lam;

    for k in 1..n - 1 {
        let (mut alo, mut blo) = (afirst, bfirst);
        let mut lo = l;
        while lo <= r {
            let [x, a, b] = knots[lo];
            if alo * x + blo > -lam {
                break;
            }
            alo += a;
            blo += b;
            lo += 1;
        }
        tm[k] = (-lam - blo) / alo;
        l = lo - 1;
        knots[l][0] = tm[k];

        let (mut ahi, mut bhi) = (alast, blast);
        let mut hi = r as isize;
        while hi >= l as isize {
            let [x, a, b] = knots[hi as usize];
            if -ahi * x - bhi < lam {
                break;
            }
            ahi += a;
            bhi += b;
            hi -= 1;
        }
        tp[k] = (lam + bhi) / (-ahi);
        r = (hi + 1) as usize;
        knots[r][0] = tp[k];

        knots[l][1] = alo;
        knots[l][2] = blo + lam;
        knots[r][1] = ahi;
        knots[r][2] = bhi + lam;
        afirst = w[k + 1];
        bfirst = -lam - w[k + 1] * y[k + 1];
        alast = -w[k + 1];
        blast = w[k + 1] * y[k + 1] - lam;
    }

    let (mut alo, mut blo) = (afirst, bfirst);
    let mut lo = l;
    while lo <= r {
        let [x, a, b] = knots[lo];
        if alo * x + blo > 0.0 {
            break;
        }
        alo += a;
        blo += b;
        lo += 1;
    }
    let mut beta = vec![0.0; n];
    beta[n - 1] = -blo / alo;
    for k in (0..n - 1).rev() {
        beta[k] = beta[k + 1].clamp(tm[k], tp[k]);
    }
    beta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(y: &[f64], w: &[f64], lam: f64, b: &[f64]) -> f64 {
        let fit: f64 = y.iter().zip(b).zip(w).map(|((y, b), w)| 0.5 * w * (y - b).powi(2)).sum();
        fit + lam * b.windows(2).map(|p| (p[1] - p[0]).abs()).sum::<f64>()
    }

    #[test]
    fn two_points_fuse_to_weighted_mean() {
        let b = tv_denoise_weighted(&[0.0, 1.0], &[0.5, 0.5], 10.0);
        assert!((b[0] - 0.5).abs() < 1e-15 && (b[1] - 0.5).abs() < 1e-15);
        let b = tv_denoise_weighted(&[0.0, 1.0], &[0.25, 0.75], 10.0);
        assert!((b[0] - 0.75).abs() < 1e-15 && (b[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn two_points_shrink_when_lambda_small() {
        // jump shrinks by lam / w on each side
        let b = tv_denoise_weighted(&[0.0, 1.0], &[0.5, 0.5], 0.1);
        assert!((b[0] - 0.2).abs() < 1e-15 && (b[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn no_perturbation_improves_the_solution() {
        let y = [1.0, 3.0, -0.5, 2.0, 2.2, 0.0, 4.0, 3.5];
        let w = [0.1, 0.2, 0.05, 0.15, 0.1, 0.2, 0.1, 0.1];
        for lam in [0.01, 0.1, 0.3, 2.0] {
            let b = tv_denoise_weighted(&y, &w, lam);
            let base = objective(&y, &w, lam, &b);
            for i in 0..y.len() {
                for d in [-1e-4, 1e-4] {
                    let mut p = b.clone();
                    p[i] += d;
                    assert!(objective(&y, &w, lam, &p) >= base - 1e-15);
                }
            }
            // also shifting fused runs together
            for start in 0..y.len() {
                for end in start + 1..=y.len() {
                    for d in [-1e-4, 1e-4] {
                        let mut p = b.clone();
                        p[start..end].iter_mut().for_each(|v| *v += d);
                        assert!(objective(&y, &w, lam, &p) >= base - 1e-15);
                    }
                }
            }
        }
    }
}
