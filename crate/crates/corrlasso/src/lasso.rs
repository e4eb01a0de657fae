//! Coordinate-descent Lasso solver with a verifiable KKT certificate.
//!
//! The objective is `(1/2n) ||y - X b||_2^2 + lambda ||b||_1`. Any accepted
//! fit satisfies the stationarity conditions
//!
//! ```text
//! ||X^T (y - X b) / n||_inf <= lambda + tol,
//! |x_j^T (y - X b) / n - lambda sign(b_j)| <= tol   whenever b_j != 0,
//! ```
//!
//! which is what downstream bound verification relies on. Minimizers need
//! not be unique, but fitted values `X b` are; all consumers compare fits
//! through `X b` or the prediction loss, never through coefficients.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pinv_apply, DesignMatrix, SupportSet};
use crate::orthant::soft_threshold;

/// Solver controls. The defaults certify fits to `1e-8` KKT residuals.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Maximum coordinate change per sweep below which the iterate is
    /// considered stationary.
    pub coord_tol: f64,
    /// KKT residual tolerance for accepting a fit.
    pub kkt_tol: f64,
    /// Hard cap on full sweeps.
    pub max_sweeps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            coord_tol: 1e-10,
            kkt_tol: 1e-8,
            max_sweeps: 1_000_000,
        }
    }
}

/// A certified Lasso fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub fitted: Vec<f64>,
    /// `||X^T (y - X b)||_inf / n`.
    pub kkt_inf_norm: f64,
    /// Largest stationarity violation over active coordinates.
    pub max_active_violation: f64,
    /// Number of full sweeps performed.
    pub iterations: usize,
}

impl LassoFit {
    /// Support of the coefficient vector.
    pub fn active_set(&self) -> SupportSet {
        SupportSet::new(
            self.coefficients
                .iter()
                .enumerate()
                .filter(|(_, b)| **b != 0.0)
                .map(|(j, _)| j)
                .collect(),
        )
        .expect("enumerate yields unique indices")
    }
}

/// Ground truth attached to a regression instance: `y = X beta_star + xi`.
#[derive(Debug, Clone)]
pub struct Truth {
    pub beta_star: Vec<f64>,
    pub sigma: f64,
    pub xi: Vec<f64>,
}

/// A design/response pair, optionally carrying the generating truth.
#[derive(Debug, Clone)]
pub struct RegressionInstance {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub truth: Option<Truth>,
}

impl RegressionInstance {
    pub fn new(x: DesignMatrix, y: Vec<f64>) -> Result<Self> {
        if y.len() != x.n() {
            return Err(Error::Dimension {
                context: "response length",
                expected: x.n(),
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "response vector",
            });
        }
        Ok(Self { x, y, truth: None })
    }

    /// Builds `y = X beta_star + xi`, so the model identity holds exactly.
    pub fn from_truth(x: DesignMatrix, beta_star: Vec<f64>, sigma: f64, xi: Vec<f64>) -> Result<Self> {
        if beta_star.len() != x.p() {
            return Err(Error::Dimension {
                context: "beta_star length",
                expected: x.p(),
                got: beta_star.len(),
            });
        }
        if xi.len() != x.n() {
            return Err(Error::Dimension {
                context: "noise length",
                expected: x.n(),
                got: xi.len(),
            });
        }
        let fitted = x.apply(&beta_star);
        let y: Vec<f64> = fitted.iter().zip(&xi).map(|(f, e)| f + e).collect();
        Ok(Self {
            x,
            y,
            truth: Some(Truth {
                beta_star,
                sigma,
                xi,
            }),
        })
    }

    pub fn truth(&self) -> Result<&Truth> {
        self.truth.as_ref().ok_or(Error::MissingTruth)
    }
}

/// Solves the Lasso by cyclic coordinate descent with exact coordinatewise
/// soft-threshold updates, warm-startable through `start`.
pub fn fit_lasso(
    inst: &RegressionInstance,
    lambda: f64,
    start: Option<&[f64]>,
) -> Result<LassoFit> {
    fit_lasso_with(inst, lambda, start, &FitOptions::default())
}

/// [`fit_lasso`] with explicit solver controls.
pub fn fit_lasso_with(
    inst: &RegressionInstance,
    lambda: f64,
    start: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<LassoFit> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain("lambda", "must be positive and finite"));
    }
    let x = &inst.x;
    let (n, p) = (x.n(), x.p());
    let nf = n as f64;

    let mut beta: DVector<f64> = match start {
        Some(b0) => {
            if b0.len() != p {
                return Err(Error::Dimension {
                    context: "warm start length",
                    expected: p,
                    got: b0.len(),
                });
            }
            DVector::from_column_slice(b0)
        }
        None => DVector::zeros(p),
    };

    let y = DVector::from_column_slice(&inst.y);
    // Per-column curvature c_j = ||x^j||^2 / n.
    let curvature: Vec<f64> = (0..p)
        .map(|j| x.matrix().column(j).norm_squared() / nf)
        .collect();

    let mut residual = &y - x.matrix() * &beta;
    let mut sweeps = 0usize;
    let mut active: Vec<usize> = Vec::new();

    let sweep_over = |indices: &[usize], beta: &mut DVector<f64>, residual: &mut DVector<f64>| {
        let mut max_change = 0.0_f64;
        for &j in indices {
            let c = curvature[j];
            if c <= 0.0 {
                continue; // zero column carries no signal
            }
            let col = x.matrix().column(j);
            let grad = col.dot(residual) / nf;
            let candidate = beta[j] + grad / c;
            let updated = soft_threshold(candidate, lambda / c);
            let delta = updated - beta[j];
            if delta != 0.0 {
                residual.axpy(-delta, &col.into_owned(), 1.0);
                beta[j] = updated;
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    };

    let all: Vec<usize> = (0..p).collect();
    loop {
        let change = sweep_over(&all, &mut beta, &mut residual);
        sweeps += 1;

        // Converge the current active set before paying for full sweeps.
        active.clear();
        active.extend((0..p).filter(|&j| beta[j] != 0.0));
        let mut inner = 0usize;
        while inner < 10_000 {
            let inner_change = sweep_over(&active, &mut beta, &mut residual);
            inner += 1;
            if inner_change <= opts.coord_tol {
                break;
            }
        }

        // Fresh residual guards against drift before certification.
        residual = &y - x.matrix() * &beta;
        let (kkt_inf, active_violation) = kkt_residuals(x, &residual, &beta, lambda);
        let certified = kkt_inf <= lambda + opts.kkt_tol && active_violation <= opts.kkt_tol;
        if certified && change <= opts.coord_tol.max(1e-14) {
            let fitted = x.matrix() * &beta;
            return Ok(LassoFit {
                coefficients: beta.as_slice().to_vec(),
                lambda,
                fitted: fitted.as_slice().to_vec(),
                kkt_inf_norm: kkt_inf,
                max_active_violation: active_violation,
                iterations: sweeps,
            });
        }
        if sweeps >= opts.max_sweeps {
            return Err(Error::NonConvergence {
                sweeps,
                kkt_residual: active_violation.max((kkt_inf - lambda).max(0.0)),
                best: beta.as_slice().to_vec(),
            });
        }
    }
}

fn kkt_residuals(
    x: &DesignMatrix,
    residual: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
) -> (f64, f64) {
    let grad = x.gram_gradient(residual);
    let kkt_inf = grad.amax();
    let mut active_violation = 0.0_f64;
    for j in 0..beta.len() {
        if beta[j] != 0.0 {
            active_violation = active_violation.max((grad[j] - lambda * beta[j].signum()).abs());
        }
    }
    (kkt_inf, active_violation)
}

/// The prediction loss `(1/n) ||X (b1 - b2)||_2^2`.
pub fn prediction_loss(x: &DesignMatrix, b1: &[f64], b2: &[f64]) -> Result<f64> {
    if b1.len() != x.p() || b2.len() != x.p() {
        return Err(Error::Dimension {
            context: "prediction loss coefficient length",
            expected: x.p(),
            got: if b1.len() != x.p() { b1.len() } else { b2.len() },
        });
    }
    let diff: Vec<f64> = b1.iter().zip(b2).map(|(a, b)| a - b).collect();
    Ok(x.apply(&diff).norm_squared() / x.n() as f64)
}

/// The objective `(1/2n) ||y - X b||^2 + lambda ||b||_1`.
pub fn lasso_objective(inst: &RegressionInstance, beta: &[f64], lambda: f64) -> f64 {
    let fitted = inst.x.apply(beta);
    let rss: f64 = inst
        .y
        .iter()
        .zip(fitted.iter())
        .map(|(y, f)| (y - f) * (y - f))
        .sum();
    rss / (2.0 * inst.x.n() as f64) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// The shifted target `beta^{*,T}`: on `T` it absorbs the projected noise,
/// `beta^{*,T}_T = beta^*_T + (X_T^T X_T)^dag X_T^T xi`, and it equals
/// `beta^*` off `T`. Satisfies `y = X beta^{*,T} + (I - Pi_T) xi`.
pub fn shifted_target(inst: &RegressionInstance, t: &SupportSet) -> Result<Vec<f64>> {
    let truth = inst.truth()?;
    t.validate_for(inst.x.p())?;
    let mut shifted = truth.beta_star.clone();
    if t.is_empty() {
        return Ok(shifted);
    }
    let xt = inst.x.columns_of(t);
    let xi = DVector::from_column_slice(&truth.xi);
    let correction = pinv_apply(&xt, &xi);
    for (k, &j) in t.indices().iter().enumerate() {
        shifted[j] += correction[k];
    }
    Ok(shifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn diag_design(n: usize, scale: f64) -> DesignMatrix {
        DesignMatrix::new(DMatrix::from_diagonal_element(n, n, scale)).unwrap()
    }

    #[test]
    fn large_lambda_gives_zero() {
        let x = diag_design(3, 3.0_f64.sqrt());
        let inst = RegressionInstance::new(x, vec![1.0, -2.0, 0.5]).unwrap();
        let threshold = inst
            .x
            .gram_gradient(&DVector::from_column_slice(&inst.y))
            .amax();
        let fit = fit_lasso(&inst, threshold * 1.01, None).unwrap();
        assert!(fit.coefficients.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn orthogonal_design_soft_threshold() {
        // n = 4, X = 2 I, y = (4, -2, 1, 0), lambda = 0.5 => (1.5, -0.5, 0, 0)
        let x = diag_design(4, 2.0);
        let inst = RegressionInstance::new(x, vec![4.0, -2.0, 1.0, 0.0]).unwrap();
        let fit = fit_lasso(&inst, 0.5, None).unwrap();
        let expected = [1.5, -0.5, 0.0, 0.0];
        for (b, e) in fit.coefficients.iter().zip(expected) {
            assert_abs_diff_eq!(*b, e, epsilon = 1e-8);
        }
        assert!(fit.kkt_inf_norm <= 0.5 + 1e-8);
        assert!(fit.max_active_violation <= 1e-8);
    }

    #[test]
    fn prediction_loss_examples() {
        let x = diag_design(4, 2.0);
        let b = vec![0.3, -1.0, 0.0, 2.0];
        assert_eq!(prediction_loss(&x, &b, &b).unwrap(), 0.0);
        let e1 = vec![1.0, 0.0, 0.0, 0.0];
        let zero = vec![0.0; 4];
        assert_abs_diff_eq!(prediction_loss(&x, &e1, &zero).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn shifted_target_examples() {
        // xi = 0 and T = empty leave beta_star untouched.
        let x = diag_design(2, 2.0_f64.sqrt());
        let inst =
            RegressionInstance::from_truth(x.clone(), vec![1.0, 0.0], 1.0, vec![0.0, 0.0]).unwrap();
        let t = SupportSet::new(vec![0]).unwrap();
        assert_eq!(shifted_target(&inst, &t).unwrap(), vec![1.0, 0.0]);

        let inst =
            RegressionInstance::from_truth(x.clone(), vec![1.0, 0.0], 1.0, vec![2.0_f64.sqrt(), 0.0])
                .unwrap();
        assert_eq!(
            shifted_target(&inst, &SupportSet::empty()).unwrap(),
            vec![1.0, 0.0]
        );
        let shifted = shifted_target(&inst, &t).unwrap();
        assert_abs_diff_eq!(shifted[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(shifted[1], 0.0, epsilon = 1e-12);

        let no_truth = RegressionInstance::new(x, vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            shifted_target(&no_truth, &t),
            Err(Error::MissingTruth)
        ));
    }

    #[test]
    fn shifted_target_identity() {
        // y = X beta^{*,T} + (I - Pi_T) xi within 1e-8.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 12;
        let p = 6;
        let mut m = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        for j in 0..p {
            let norm = m.column(j).norm();
            m.column_mut(j).scale_mut((n as f64).sqrt() / norm);
        }
        let x = DesignMatrix::new(m).unwrap();
        let beta_star: Vec<f64> = (0..p).map(|j| if j < 2 { 1.0 } else { 0.0 }).collect();
        let xi: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let inst = RegressionInstance::from_truth(x.clone(), beta_star, 1.0, xi.clone()).unwrap();
        let t = SupportSet::new(vec![0, 3]).unwrap();
        let shifted = shifted_target(&inst, &t).unwrap();
        let proj = crate::linalg::projector(&x, &t).unwrap();
        let reconstructed = x.apply(&shifted) + proj.residual(&DVector::from_column_slice(&xi));
        for i in 0..n {
            assert_abs_diff_eq!(reconstructed[i], inst.y[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn fitted_values_unique_across_starts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20;
        let p = 40; // overdetermined: coefficients not unique
        let mut m = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        for j in 0..p {
            let norm = m.column(j).norm();
            m.column_mut(j).scale_mut((n as f64).sqrt() / norm);
        }
        let x = DesignMatrix::new(m).unwrap();
        let y: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let inst = RegressionInstance::new(x, y).unwrap();
        let fit0 = fit_lasso(&inst, 0.05, None).unwrap();
        let warm: Vec<f64> = (0..p).map(|j| if j % 3 == 0 { 0.5 } else { -0.25 }).collect();
        let fit1 = fit_lasso(&inst, 0.05, Some(&warm)).unwrap();
        let diff: f64 = fit0
            .fitted
            .iter()
            .zip(&fit1.fitted)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / (n as f64).sqrt();
        assert!(diff <= 1e-6, "fitted-value gap {diff}");
    }

    #[test]
    fn objective_dominates_reference_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 15;
        let p = 10;
        let mut m = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        for j in 0..p {
            let norm = m.column(j).norm();
            m.column_mut(j).scale_mut((n as f64).sqrt() / norm);
        }
        let x = DesignMatrix::new(m).unwrap();
        let beta_star: Vec<f64> = (0..p).map(|j| if j == 0 { 2.0 } else { 0.0 }).collect();
        let xi: Vec<f64> = (0..n)
            .map(|_| 0.3 * rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let inst = RegressionInstance::from_truth(x, beta_star.clone(), 0.3, xi).unwrap();
        let lambda = 0.2;
        let fit = fit_lasso(&inst, lambda, None).unwrap();
        let at_fit = lasso_objective(&inst, &fit.coefficients, lambda);
        assert!(at_fit <= lasso_objective(&inst, &beta_star, lambda) + 1e-10);
        assert!(at_fit <= lasso_objective(&inst, &vec![0.0; inst.x.p()], lambda) + 1e-10);
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 30;
        let p = 20;
        let mut m = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        for j in 0..p {
            let norm = m.column(j).norm();
            m.column_mut(j).scale_mut((n as f64).sqrt() / norm);
        }
        let x = DesignMatrix::new(m).unwrap();
        let y: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let inst = RegressionInstance::new(x, y).unwrap();
        let opts = FitOptions {
            max_sweeps: 1,
            coord_tol: 1e-16,
            ..FitOptions::default()
        };
        match fit_lasso_with(&inst, 1e-4, None, &opts) {
            Err(Error::NonConvergence { best, .. }) => assert_eq!(best.len(), p),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let x = diag_design(2, 1.0);
        let inst = RegressionInstance::new(x, vec![1.0, 2.0]).unwrap();
        assert!(fit_lasso(&inst, 0.0, None).is_err());
        assert!(fit_lasso(&inst, -1.0, None).is_err());
    }
}
