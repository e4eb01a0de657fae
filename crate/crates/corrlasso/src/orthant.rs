//! First-order solver for the orthant-restricted convex subproblems
//!
//! ```text
//! minimize    ||X d||_2 + sum_{j not in T} mu_j |d_j|
//! subject to  s^T d_T = 1,  s_j d_j >= 0  for j in T,
//! ```
//!
//! the building block of both the compatibility-factor bisection and the
//! l1-restricted gain `nu`. The Euclidean norm is smoothed to
//! `sqrt(||Xd||^2 + tau^2)` with `tau` lowered over continuation rounds; each
//! round runs an accelerated projected proximal scheme (backtracking FISTA
//! with function-value restarts). The feasible set is handled exactly: the
//! `T` block is a signed unit simplex, the rest is free with a weighted l1
//! penalty, so the proximal step is a simplex projection plus coordinatewise
//! soft thresholding.
//!
//! Every solve also reports a certified lower bound through a feasible point
//! of the conic dual
//!
//! ```text
//! maximize  min_{j in T} s_j x_j^T y
//! subject to ||y||_2 <= 1,  |x_j^T y| <= mu_j  for j not in T,
//! ```
//!
//! built from the primal iterate (`y = Xd / ||Xd||`, corrected to dual
//! feasibility). The bisection uses these bounds to make one-sided decisions
//! that remain valid under inexact solves.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative duality-gap target.
    pub gap_tol_rel: f64,
    /// Absolute duality-gap target.
    pub gap_tol_abs: f64,
    pub max_iters_per_level: usize,
    pub tau_levels: usize,
    /// Early exit once the certified lower bound exceeds this threshold.
    pub stop_when_lower_above: Option<f64>,
    /// Early exit once the primal value drops to or below this threshold.
    pub stop_when_value_below: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap_tol_rel: 1e-9,
            gap_tol_abs: 1e-10,
            max_iters_per_level: 40_000,
            tau_levels: 6,
            stop_when_lower_above: None,
            stop_when_value_below: None,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct OrthantSolution {
    /// Full-length minimizer (dimension `p`).
    pub minimizer: Vec<f64>,
    /// Unsmoothed primal objective at the minimizer.
    pub value: f64,
    /// Certified lower bound on the true minimum (dual feasible value).
    pub dual_lower: f64,
    pub iterations: usize,
}

impl OrthantSolution {
    pub fn gap(&self) -> f64 {
        (self.value - self.dual_lower).max(0.0)
    }
}

pub(crate) struct OrthantProblem<'a> {
    x: &'a DMatrix<f64>,
    /// Column indices forming `T`, in increasing order.
    t: Vec<usize>,
    /// Signs on the `T` block, aligned with `t`.
    signs: Vec<f64>,
    /// Per-column penalty weights; zero on `T`.
    mu: Vec<f64>,
    /// Orthonormal basis of `span{x^j : j not in T, mu_j = 0}`, the columns
    /// whose dual constraint is an equality `x_j^T y = 0`.
    zero_weight_basis: Option<DMatrix<f64>>,
    sigma_max: f64,
}

impl<'a> OrthantProblem<'a> {
    /// General problem: `T`, signs, and off-`T` penalty weights.
    pub fn new(x: &'a DMatrix<f64>, t: &[usize], signs: &[f64], mu: Vec<f64>) -> Self {
        debug_assert_eq!(t.len(), signs.len());
        debug_assert_eq!(mu.len(), x.ncols());
        debug_assert!(t.iter().all(|&j| mu[j] == 0.0));
        let zero_cols: Vec<usize> = (0..x.ncols())
            .filter(|j| !t.contains(j) && mu[*j] == 0.0)
            .collect();
        let zero_weight_basis = if zero_cols.is_empty() {
            None
        } else {
            let mut m = DMatrix::zeros(x.nrows(), zero_cols.len());
            for (k, &j) in zero_cols.iter().enumerate() {
                m.set_column(k, &x.column(j));
            }
            let span = crate::linalg::orthonormal_span(&m);
            if span.rank() == 0 {
                None
            } else {
                Some(span.basis().clone())
            }
        };
        let sigma_max = largest_singular_value(x);
        Self {
            x,
            t: t.to_vec(),
            signs: signs.to_vec(),
            mu,
            zero_weight_basis,
            sigma_max,
        }
    }

    /// The `nu` subproblem: every column belongs to `T`, no penalty term.
    pub fn simplex_only(x: &'a DMatrix<f64>, signs: &[f64]) -> Self {
        let t: Vec<usize> = (0..x.ncols()).collect();
        Self::new(x, &t, signs, vec![0.0; x.ncols()])
    }

    fn penalty(&self, d: &[f64]) -> f64 {
        self.mu
            .iter()
            .zip(d)
            .map(|(m, v)| m * v.abs())
            .sum::<f64>()
    }

    fn objective(&self, d: &[f64]) -> f64 {
        (self.x * DVector::from_column_slice(d)).norm() + self.penalty(d)
    }

    /// Proximal step: simplex projection on the signed `T` block,
    /// soft thresholding elsewhere.
    fn prox(&self, z: &mut DVector<f64>, step: f64) {
        let mut v: Vec<f64> = self
            .t
            .iter()
            .zip(&self.signs)
            .map(|(&j, &s)| s * z[j])
            .collect();
        project_simplex(&mut v);
        for ((&j, &s), w) in self.t.iter().zip(&self.signs).zip(&v) {
            z[j] = s * w;
        }
        for j in 0..z.len() {
            if self.mu[j] > 0.0 {
                z[j] = soft_threshold(z[j], step * self.mu[j]);
            } else if !self.t.contains(&j) {
                // free coordinate with zero weight: no shrinkage
            }
        }
    }

    /// Dual-feasible lower bound built from a primal iterate.
    fn dual_bound(&self, xd: &DVector<f64>) -> f64 {
        let norm = xd.norm();
        if norm < 1e-300 {
            return 0.0;
        }
        let mut y = xd / norm;
        if let Some(basis) = &self.zero_weight_basis {
            y -= basis * (basis.transpose() * &y);
        }
        let c = self.x.transpose() * &y;
        let mut scale = 1.0_f64;
        for j in 0..self.mu.len() {
            if self.mu[j] > 0.0 && c[j].abs() > self.mu[j] {
                scale = scale.min(self.mu[j] / c[j].abs());
            }
        }
        let value = self
            .t
            .iter()
            .zip(&self.signs)
            .map(|(&j, &s)| s * c[j] * scale)
            .fold(f64::INFINITY, f64::min);
        value.max(0.0)
    }

    /// Runs the continuation scheme from the uniform feasible start.
    pub fn solve(&self, opts: &SolveOptions) -> OrthantSolution {
        let start = self.feasible_start();
        self.solve_from(start, opts)
    }

    pub fn feasible_start(&self) -> Vec<f64> {
        let p = self.x.ncols();
        let mut d = vec![0.0; p];
        let k = self.t.len() as f64;
        for (&j, &s) in self.t.iter().zip(&self.signs) {
            d[j] = s / k;
        }
        d
    }

    /// Continuation + FISTA from a caller-supplied feasible start (used for
    /// warm starts across bisection rounds). Infeasible starts are projected.
    pub fn solve_from(&self, start: Vec<f64>, opts: &SolveOptions) -> OrthantSolution {
        let mut d = DVector::from_vec(start);
        self.prox(&mut d, 0.0);

        let mut best_d = d.clone();
        let mut best_value = self.objective(best_d.as_slice());
        let mut best_lower = self.dual_bound(&(self.x * &best_d));
        let mut iterations = 0usize;
        let scale = best_value.max(1.0);
        let mut prev_level_value = f64::INFINITY;

        'levels: for level in 0..opts.tau_levels {
            let tau = scale * 10f64.powi(-(2 * level as i32 + 1));
            let mut lip = self.sigma_max * self.sigma_max
                / ((self.x * &d).norm_squared() + tau * tau).sqrt();
            lip = lip.max(1e-12);

            let mut momentum = 1.0_f64;
            let mut d_prev = d.clone();
            let mut obj_prev = f64::INFINITY;

            for iter in 0..opts.max_iters_per_level {
                iterations += 1;
                let beta = (momentum - 1.0) / {
                    let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                    momentum = next;
                    next
                };
                let mut y = &d + (&d - &d_prev) * beta;
                self.prox_noop(&mut y);
                let xy = self.x * &y;
                let q = (xy.norm_squared() + tau * tau).sqrt();
                let grad = (self.x.transpose() * &xy) / q;

                // Backtracking on the smooth part.
                lip *= 0.9;
                let cand = loop {
                    let mut z = &y - &grad / lip;
                    self.prox(&mut z, 1.0 / lip);
                    let xz = self.x * &z;
                    let qz = (xz.norm_squared() + tau * tau).sqrt();
                    let diff = &z - &y;
                    let bound = q + grad.dot(&diff) + 0.5 * lip * diff.norm_squared();
                    if qz <= bound + 1e-13 * bound.abs().max(1.0) {
                        break z;
                    }
                    lip *= 2.0;
                    if lip > 1e200 {
                        break z;
                    }
                };

                d_prev = std::mem::replace(&mut d, cand);

                let obj_smooth = {
                    let xd = self.x * &d;
                    (xd.norm_squared() + tau * tau).sqrt() + self.penalty(d.as_slice())
                };
                if obj_smooth > obj_prev {
                    momentum = 1.0; // function-value restart
                }
                obj_prev = obj_smooth;

                if iter % 25 == 24 || iter + 1 == opts.max_iters_per_level {
                    let xd = self.x * &d;
                    let value = xd.norm() + self.penalty(d.as_slice());
                    if value < best_value {
                        best_value = value;
                        best_d = d.clone();
                    }
                    best_lower = best_lower.max(self.dual_bound(&xd));
                    if self.decided(best_value, best_lower, opts) {
                        break 'levels;
                    }
                }
            }

            let level_value = self.objective(d.as_slice());
            if level_value < best_value {
                best_value = level_value;
                best_d = d.clone();
            }
            best_lower = best_lower.max(self.dual_bound(&(self.x * &d)));
            if self.decided(best_value, best_lower, opts) {
                break 'levels;
            }
            // Spec acceptance rule: unsmoothed objective stable across two
            // tau levels.
            if level > 0 && (prev_level_value - level_value).abs() <= 1e-8 * scale {
                break 'levels;
            }
            prev_level_value = level_value;
        }

        OrthantSolution {
            minimizer: best_d.as_slice().to_vec(),
            value: best_value,
            dual_lower: best_lower.min(best_value),
            iterations,
        }
    }

    fn decided(&self, value: f64, lower: f64, opts: &SolveOptions) -> bool {
        if let Some(above) = opts.stop_when_lower_above {
            if lower > above {
                return true;
            }
        }
        if let Some(below) = opts.stop_when_value_below {
            if value <= below {
                return true;
            }
        }
        value - lower <= opts.gap_tol_abs + opts.gap_tol_rel * value.abs().max(1.0)
    }

    /// Re-projects without shrinkage, keeping momentum extrapolations inside
    /// the orthant (the l1 part stays handled by the proximal step).
    fn prox_noop(&self, z: &mut DVector<f64>) {
        let mut v: Vec<f64> = self
            .t
            .iter()
            .zip(&self.signs)
            .map(|(&j, &s)| s * z[j])
            .collect();
        project_simplex(&mut v);
        for ((&j, &s), w) in self.t.iter().zip(&self.signs).zip(&v) {
            z[j] = s * w;
        }
    }
}

/// Homogeneous reformulation used by the compatibility bisection.
///
/// For a sign pattern `s` on `T` and off-support weights `w_j` (the cone's
/// base weights divided by `cbar`), let
///
/// ```text
/// g_s(d) = sum_{j in T} s_j d_j - sum_{j not in T} w_j |d_j|.
/// ```
///
/// The orthant's compatibility level `Q_s = min { ||X d||^2 : g_s(d) >= 1,
/// s_j d_j >= 0 }` (so `kappa_s = |T| Q_s / n`) has the concave dual
/// `Q_s = max_{theta >= 0} { theta + min_d [ ||X d||^2 - theta g_s(d) ] }`,
/// and because the dual vanishes at `theta = 0`, probing the single point
/// `theta = 2 n kappa / |T|` decides `kappa <= kappa_s` exactly:
///
/// ```text
/// dual(2q) >= q  <=>  Q_s >= q,      q = n kappa / |T|.
/// ```
///
/// Unlike the constrained second-order-cone form, this probe keeps a strict
/// margin on both sides even when kernel directions sit on the cone
/// boundary (duplicated columns), which would otherwise pin the SOCP value
/// exactly at its threshold. The inner minimization is a smooth quadratic
/// plus separable pieces, solved by monotone FISTA with a constant step;
/// lower bounds come from feasible points of the inner dual
/// `max { theta - ||y||^2 : s_j x_j^T y >= theta/2 on T, |x_j^T y| <=
/// theta w_j / 2 off T }`.
pub(crate) struct HomogeneousOrthant<'a> {
    x: &'a DMatrix<f64>,
    t: Vec<usize>,
    signs: Vec<f64>,
    /// `w_j` above: base weight / cbar_eff off `T`, zero on `T`.
    weights: Vec<f64>,
    zero_weight_basis: Option<DMatrix<f64>>,
    lipschitz: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct HomogeneousOutcome {
    /// Last iterate, in the homogeneous scale.
    pub minimizer: Vec<f64>,
    /// Best compatibility ratio seen at an iterate with `g_s > 0`, in kappa
    /// units (`|T| ||Xd||^2 / (n g_s^2)`); an upper bound on `kappa_s`.
    pub ratio: Option<f64>,
    /// Whether `kappa_s >= kappa` was certified through the inner dual.
    pub certified_at_least: bool,
    pub iterations: usize,
}

impl<'a> HomogeneousOrthant<'a> {
    pub fn new(
        x: &'a DMatrix<f64>,
        t: &[usize],
        signs: &[f64],
        weights: Vec<f64>,
        sigma_max: f64,
    ) -> Self {
        debug_assert_eq!(weights.len(), x.ncols());
        let zero_cols: Vec<usize> = (0..x.ncols())
            .filter(|j| !t.contains(j) && weights[*j] == 0.0)
            .collect();
        let zero_weight_basis = if zero_cols.is_empty() {
            None
        } else {
            let mut m = DMatrix::zeros(x.nrows(), zero_cols.len());
            for (k, &j) in zero_cols.iter().enumerate() {
                m.set_column(k, &x.column(j));
            }
            let span = crate::linalg::orthonormal_span(&m);
            if span.rank() == 0 {
                None
            } else {
                Some(span.basis().clone())
            }
        };
        Self {
            x,
            t: t.to_vec(),
            signs: signs.to_vec(),
            weights,
            zero_weight_basis,
            lipschitz: (2.0 * sigma_max * sigma_max).max(1e-12),
        }
    }

    fn g(&self, d: &DVector<f64>) -> f64 {
        let on_t: f64 = self
            .t
            .iter()
            .zip(&self.signs)
            .map(|(&j, &s)| s * d[j])
            .sum();
        let off: f64 = self
            .weights
            .iter()
            .zip(d.iter())
            .map(|(w, v)| w * v.abs())
            .sum();
        on_t - off
    }

    fn objective(&self, d: &DVector<f64>, theta: f64) -> f64 {
        (self.x * d).norm_squared() - theta * self.g(d)
    }

    fn prox(&self, z: &mut DVector<f64>, step_theta: f64) {
        for (&j, &s) in self.t.iter().zip(&self.signs) {
            z[j] = s * (s * z[j]).max(0.0);
        }
        for j in 0..z.len() {
            if self.weights[j] > 0.0 {
                z[j] = soft_threshold(z[j], step_theta * self.weights[j]);
            }
        }
    }

    /// Feasible inner-dual value from the current iterate; `Some(bound)`
    /// gives `dual(theta) >= bound`.
    fn dual_value(&self, xd: &DVector<f64>, theta: f64) -> Option<f64> {
        if xd.norm() < 1e-300 {
            return None;
        }
        let mut y = xd.clone();
        if let Some(basis) = &self.zero_weight_basis {
            y -= basis * (basis.transpose() * &y);
        }
        let c = self.x.transpose() * &y;
        let min_t = self
            .t
            .iter()
            .zip(&self.signs)
            .map(|(&j, &s)| s * c[j])
            .fold(f64::INFINITY, f64::min);
        if min_t <= 0.0 {
            return None;
        }
        // One-parameter family rho * y: T-feasible for rho >= rho_min,
        // off-support feasible for rho <= rho_max.
        let rho_min = 0.5 * theta / min_t;
        let mut rho_max = f64::INFINITY;
        for j in 0..self.weights.len() {
            let w = self.weights[j];
            if w > 0.0 && !self.t.contains(&j) {
                let cap = 0.5 * theta * w / c[j].abs().max(1e-300);
                rho_max = rho_max.min(cap);
            }
        }
        if rho_min > rho_max {
            return None;
        }
        Some(theta - rho_min * rho_min * y.norm_squared())
    }

    /// Runs the probe at level `kappa` (i.e. `q = n kappa / |T|`,
    /// `theta = 2q`). Stops as soon as either side of the bisection
    /// decision is certified.
    pub fn probe(
        &self,
        kappa: f64,
        warm: Option<&[f64]>,
        max_iters: usize,
    ) -> HomogeneousOutcome {
        let n = self.x.nrows() as f64;
        let k = self.t.len() as f64;
        let q = n * kappa / k;
        let theta = 2.0 * q;
        let p = self.x.ncols();

        let mut d = match warm {
            Some(w) if w.len() == p => DVector::from_column_slice(w),
            _ => DVector::zeros(p),
        };
        self.prox(&mut d, 0.0);
        let mut d_prev = d.clone();
        let mut momentum = 1.0_f64;
        let step = 1.0 / self.lipschitz;
        let mut obj_prev = self.objective(&d, theta);
        let svec = self.sign_vector();

        let mut best_ratio: Option<f64> = None;
        let mut certified = false;
        let mut iterations = 0usize;

        for iter in 0..max_iters {
            iterations = iter + 1;
            let beta = (momentum - 1.0) / {
                let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                momentum = next;
                next
            };
            let y = &d + (&d - &d_prev) * beta;
            let grad = self.x.transpose() * (self.x * &y) * 2.0 - theta * &svec;
            let mut z = &y - grad * step;
            self.prox(&mut z, step * theta);
            d_prev = std::mem::replace(&mut d, z);

            let obj = self.objective(&d, theta);
            if obj > obj_prev {
                momentum = 1.0;
            }
            let stalled = (obj_prev - obj).abs() <= 1e-14 * obj.abs().max(1.0)
                && (&d - &d_prev).amax() <= 1e-13;
            obj_prev = obj;

            if iter % 20 == 19 || iter + 1 == max_iters || stalled {
                let xd = self.x * &d;
                let g = self.g(&d);
                if g > 1e-12 {
                    let ratio = k * xd.norm_squared() / (n * g * g);
                    if best_ratio.map_or(true, |b| ratio < b) {
                        best_ratio = Some(ratio);
                    }
                }
                if let Some(bound) = self.dual_value(&xd, theta) {
                    if bound >= q * (1.0 + 1e-9) + 1e-300 {
                        certified = true;
                        break;
                    }
                }
                if let Some(r) = best_ratio {
                    if r <= kappa * (1.0 - 1e-9) {
                        break; // upper-bound progress is already guaranteed
                    }
                }
                if stalled {
                    break;
                }
            }
        }

        HomogeneousOutcome {
            minimizer: d.as_slice().to_vec(),
            ratio: best_ratio,
            certified_at_least: certified,
            iterations,
        }
    }

    fn sign_vector(&self) -> DVector<f64> {
        let mut s = DVector::zeros(self.x.ncols());
        for (&j, &sj) in self.t.iter().zip(&self.signs) {
            s[j] = sj;
        }
        s
    }
}

pub(crate) fn soft_threshold(x: f64, threshold: f64) -> f64 {
    if x > threshold {
        x - threshold
    } else if x < -threshold {
        x + threshold
    } else {
        0.0
    }
}

/// Euclidean projection onto the unit simplex `{v >= 0, sum v = 1}`.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let k = v.len();
    if k == 0 {
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

pub(crate) fn largest_singular_value(x: &DMatrix<f64>) -> f64 {
    // Power iteration on X^T X with a deterministic start.
    let p = x.ncols();
    let mut v = DVector::from_element(p, 1.0 / (p as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..60 {
        let w = x.transpose() * (x * &v);
        let norm = w.norm();
        if norm < 1e-300 {
            return 0.0;
        }
        estimate = norm;
        v = w / norm;
    }
    estimate.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simplex_projection_basics() {
        let mut v = vec![0.2, 0.3];
        project_simplex(&mut v);
        // already sums below one: lifted onto the simplex
        assert_abs_diff_eq!(v.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let mut v = vec![2.0, 0.0, 0.0];
        project_simplex(&mut v);
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-12);
        let mut v = vec![0.5, 0.5, 0.5];
        project_simplex(&mut v);
        assert_abs_diff_eq!(v.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(v.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn identity_design_keeps_mass_on_t() {
        // X = sqrt(2) I_2, T = {0}, mu = 1 off T: the minimizer is e_1.
        let n = 2usize;
        let x = DMatrix::from_diagonal_element(n, n, (n as f64).sqrt());
        let problem = OrthantProblem::new(&x, &[0], &[1.0], vec![0.0, 1.0]);
        let sol = problem.solve(&SolveOptions::default());
        assert_abs_diff_eq!(sol.value, (n as f64).sqrt(), epsilon = 1e-6);
        assert_abs_diff_eq!(sol.minimizer[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.minimizer[1], 0.0, epsilon = 1e-6);
        assert!(sol.gap() <= 1e-6);
    }

    #[test]
    fn duplicate_column_kernel_direction() {
        // x^2 = x^1: value tends to mu along d = (1, -1).
        let x = DMatrix::from_fn(4, 2, |i, _| if i < 2 { 1.2 } else { -0.7 });
        let mu = 0.01;
        let problem = OrthantProblem::new(&x, &[0], &[1.0], vec![0.0, mu]);
        let sol = problem.solve(&SolveOptions::default());
        assert!(sol.value <= mu + 1e-6, "value = {}", sol.value);
        assert!(sol.dual_lower <= sol.value + 1e-12);
    }

    #[test]
    fn dual_never_exceeds_primal_on_random_problems() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for trial in 0..10 {
            let n = 6;
            let p = 4;
            let x = DMatrix::from_fn(n, p, |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            });
            let signs = [1.0, if trial % 2 == 0 { 1.0 } else { -1.0 }];
            let mu = vec![0.0, 0.0, 0.3, 0.7];
            let problem = OrthantProblem::new(&x, &[0, 1], &signs, mu);
            let sol = problem.solve(&SolveOptions::default());
            assert!(sol.dual_lower <= sol.value + 1e-9);
            assert!(sol.gap() <= 1e-6 * sol.value.max(1.0), "gap {}", sol.gap());
            // feasibility of the reported minimizer
            let on_t: f64 = sol.minimizer[0] * signs[0] + sol.minimizer[1] * signs[1];
            assert_abs_diff_eq!(on_t, 1.0, epsilon = 1e-9);
            assert!(sol.minimizer[0] * signs[0] >= -1e-10);
            assert!(sol.minimizer[1] * signs[1] >= -1e-10);
        }
    }
}
