//! Elementwise and rowwise activation functions.

use super::Matrix;

/// Numerically stable softmax (max-shifted).
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    softmax_inplace(&mut out);
    out
}

pub fn softmax_inplace(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    let cols = m.cols();
    if cols > 0 {
        for row in out.data_mut().chunks_exact_mut(cols) {
            softmax_inplace(row);
        }
    }
    out
}

/// `ln Σ exp(v)`, max-shifted. Returns `-inf` for an empty slice or when
/// every entry is `-inf`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        for p in softmax(&[1.0, 1.0, 1.0]) {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let s = softmax(&[3f64.ln(), 0.0]);
        assert!((s[0] - 0.75).abs() < 1e-15);
        assert!((s[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let s = softmax(&[1000.0, 0.0, -1000.0]);
        assert!(s.iter().all(|p| p.is_finite()));
        assert_eq!(s[0], 1.0);
    }

    #[test]
    fn sigmoid_is_symmetric() {
        for x in [-50.0, -3.0, -0.1, 0.0, 0.2, 4.0, 60.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let v = [0.3, -1.2, 2.0];
        let direct = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&v) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn softmax_on_simplex_and_shift_invariant(
            v in prop::collection::vec(-30.0f64..30.0, 1..12),
            c in -100.0f64..100.0,
        ) {
            let s = softmax(&v);
            let sum: f64 = s.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(s.iter().all(|&p| p > 0.0));
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let t = softmax(&shifted);
            for (a, b) in s.iter().zip(&t) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
