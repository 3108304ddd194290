//! Weighted pool-adjacent-violators.

/// Weighted least-squares nondecreasing fit.
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    // blocks: (weighted mean, total weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        let mut cur = (yi, wi, 1usize);
        while let Some(&(m, wt, len)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let tw = wt + cur.1;
            cur = ((m * wt + cur.0 * cur.1) / tw, tw, len + cur.2);
        }
        blocks.push(cur);
    }
    let mut out = Vec::with_capacity(y.len());
    for (m, _, len) in blocks {
        out.extend(std::iter::repeat(m).take(len));
    }
    out
}

pub fn antitonic(y: &[f64], w: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    pava(&neg, w).into_iter().map(|v| -v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_example() {
        assert_eq!(pava(&[3.0, 1.0, 2.0], &[1.0; 3]), vec![2.0, 2.0, 2.0]);
        assert_eq!(pava(&[1.0, 3.0, 2.0, 4.0], &[1.0; 4]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn weights_shift_pooled_means() {
        let f = pava(&[2.0, 0.0], &[3.0, 1.0]);
        assert_eq!(f, vec![1.5, 1.5]);
    }

    #[test]
    fn decreasing_variant() {
        assert_eq!(antitonic(&[1.0, 3.0, 2.0], &[1.0; 3]), vec![2.0, 2.0, 2.0]);
    }
}
