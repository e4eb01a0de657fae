//! Total-variation penalized least squares in one dimension, reduced to the
//! Lasso on the lower-triangular all-ones design.
//!
//! With `beta_j = f_j - f_{j-1}` (and `f_0 = 0`) the TV objective
//! `(1/n)||y - f||^2 + lambda ||f||_TV` equals twice the Lasso objective at
//! penalty `lambda / 2`, so minimizers coincide; the wrapped fit carries the
//! KKT certificate of the Lasso route.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{fit_lasso_with, FitOptions, LassoFit, RegressionInstance};
use crate::linalg::DesignMatrix;

/// A TV fit: the signal estimate plus the underlying Lasso fit on the
/// triangular design.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TvFit {
    pub signal_estimate: Vec<f64>,
    pub lambda: f64,
    pub lasso: LassoFit,
}

/// The `n x n` lower-triangular all-ones design, `x_{ij} = 1(i >= j)`.
///
/// Column `j` (one-based) has squared norm `n - j + 1 <= n`.
pub fn tv_design(n: usize) -> Result<DesignMatrix> {
    if n == 0 {
        return Err(Error::domain("n", "must be at least 1"));
    }
    DesignMatrix::new(DMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            1.0
        } else {
            0.0
        }
    }))
}

/// Checks whether a design is exactly the triangular TV design.
pub fn is_tv_design(x: &DesignMatrix) -> bool {
    if x.n() != x.p() {
        return false;
    }
    let m = x.matrix();
    for j in 0..x.p() {
        for i in 0..x.n() {
            let expected = if i >= j { 1.0 } else { 0.0 };
            if m[(i, j)] != expected {
                return false;
            }
        }
    }
    true
}

/// The total-variation seminorm `sum_i |f_i - f_{i-1}|` with `f_0 = 0`, so
/// the first coordinate is penalized.
pub fn tv_norm(f: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut total = 0.0;
    for &v in f {
        total += (v - prev).abs();
        prev = v;
    }
    total
}

/// Signal to difference vector: `beta_j = f_j - f_{j-1}`, `f_0 = 0`.
pub fn differences(f: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    f.iter()
        .map(|&v| {
            let d = v - prev;
            prev = v;
            d
        })
        .collect()
}

/// Difference vector back to the signal: `f = X beta` (cumulative sums).
pub fn cumulative(beta: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    beta.iter()
        .map(|&b| {
            acc += b;
            acc
        })
        .collect()
}

/// Minimizes `(1/n)||y - f||^2 + lambda ||f||_TV` by fitting the Lasso on
/// the triangular design at penalty `lambda / 2` (the factor reconciles the
/// `1/n` and `1/(2n)` normalizations of the two objectives).
pub fn fit_tv(y: &[f64], lambda: f64) -> Result<TvFit> {
    fit_tv_with(y, lambda, &FitOptions::default())
}

/// [`fit_tv`] with explicit solver controls.
pub fn fit_tv_with(y: &[f64], lambda: f64, opts: &FitOptions) -> Result<TvFit> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain("lambda", "must be positive and finite"));
    }
    let n = y.len();
    let x = tv_design(n)?;
    let inst = RegressionInstance::new(x, y.to_vec())?;
    let lasso = fit_lasso_with(&inst, lambda / 2.0, None, opts)?;
    let signal_estimate = cumulative(&lasso.coefficients);
    Ok(TvFit {
        signal_estimate,
        lambda,
        lasso,
    })
}

/// The TV objective `(1/n)||y - f||^2 + lambda ||f||_TV`.
pub fn tv_objective(y: &[f64], f: &[f64], lambda: f64) -> f64 {
    let n = y.len() as f64;
    let rss: f64 = y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
    rss / n + lambda * tv_norm(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn design_small_cases() {
        let x = tv_design(1).unwrap();
        assert_eq!(x.matrix()[(0, 0)], 1.0);
        let x = tv_design(3).unwrap();
        let expected = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(x.matrix()[(i, j)], expected[i][j]);
            }
        }
        assert!(is_tv_design(&x));
    }

    #[test]
    fn neighboring_column_correlation() {
        // corr(x^j, x^{j+1}) = sqrt((n - j) / (n - j + 1)); at n = 100, j = 1
        // this is sqrt(99/100) ~ 0.994987.
        let x = tv_design(100).unwrap();
        let a = x.column(0);
        let b = x.column(1);
        let corr = a.dot(&b) / (a.norm() * b.norm());
        assert_abs_diff_eq!(corr, (99.0_f64 / 100.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(corr, 0.994987, epsilon = 1e-6);
    }

    #[test]
    fn tv_norm_examples() {
        assert_eq!(tv_norm(&[0.0, 0.0]), 0.0);
        assert_eq!(tv_norm(&[1.0, 1.0, 1.0]), 1.0);
        assert_eq!(tv_norm(&[1.0, 3.0, 2.0]), 4.0);
    }

    #[test]
    fn fit_zero_signal() {
        let fit = fit_tv(&[0.0, 0.0, 0.0], 0.7).unwrap();
        assert!(fit.signal_estimate.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn large_lambda_kills_the_fit() {
        let y = vec![0.4, -1.0, 2.0, 0.3];
        let n = y.len() as f64;
        // lambda >= 2 max_j |sum_{i >= j} y_i| / n forces f = 0.
        let max_suffix = (0..y.len())
            .map(|j| y[j..].iter().sum::<f64>().abs())
            .fold(0.0, f64::max);
        let fit = fit_tv(&y, 2.0 * max_suffix / n * 1.0001).unwrap();
        assert!(fit.signal_estimate.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_point_closed_form() {
        // y = (1, 1), lambda = 0.5: one block, mean shrunk by
        // n*lambda / (2 * block length) = 0.25, so f = (0.75, 0.75).
        let fit = fit_tv(&[1.0, 1.0], 0.5).unwrap();
        assert_abs_diff_eq!(fit.signal_estimate[0], 0.75, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.signal_estimate[1], 0.75, epsilon = 1e-8);
    }

    #[test]
    fn minimizer_beats_random_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 12;
        let y: Vec<f64> = (0..n)
            .map(|i| if i < 6 { 1.0 } else { -0.5 } + 0.2 * rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let lambda = 0.3;
        let fit = fit_tv(&y, lambda).unwrap();
        let at_fit = tv_objective(&y, &fit.signal_estimate, lambda);
        for _ in 0..1000 {
            let candidate: Vec<f64> = (0..n)
                .map(|_| 2.0 * rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            assert!(at_fit <= tv_objective(&y, &candidate, lambda) + 1e-9);
        }
        // ... including perturbations of the fit itself.
        for _ in 0..1000 {
            let candidate: Vec<f64> = fit
                .signal_estimate
                .iter()
                .map(|&v| v + 0.01 * rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            assert!(at_fit <= tv_objective(&y, &candidate, lambda) + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn difference_signal_round_trip(f in proptest::collection::vec(-10.0..10.0f64, 1..40)) {
            let beta = differences(&f);
            let back = cumulative(&beta);
            for (a, b) in f.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn tv_norm_matches_l1_of_differences(beta in proptest::collection::vec(-10.0..10.0f64, 1..40)) {
            let f = cumulative(&beta);
            let l1: f64 = beta.iter().map(|b| b.abs()).sum();
            prop_assert!((tv_norm(&f) - l1).abs() < 1e-9);
        }
    }
}
