//! Design matrices, supports, projectors, and the correlation geometry
//! (the measure `rho`, the column weights, and the l1-restricted gain `nu`).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::orthant::{OrthantProblem, SolveOptions};

/// Relative singular-value cutoff used for numerical ranks and pseudoinverses.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Default cap on the support size for orthant enumeration (`2^{|T|-1}` or
/// `2^{|T|}` convex subproblems).
pub const DEFAULT_ORTHANT_CAP: usize = 16;

/// An `n x p` design matrix satisfying the column normalization
/// `||x^j||_2^2 <= n` for every column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    data: DMatrix<f64>,
}

impl DesignMatrix {
    /// Validates and wraps a matrix. Every entry must be finite and every
    /// column must satisfy `||x^j||_2^2 <= n` (up to a relative slack of
    /// `1e-9` absorbing roundoff in constructions that sit exactly on the
    /// boundary).
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (n, p) = (data.nrows(), data.ncols());
        if n == 0 || p == 0 {
            return Err(Error::Dimension {
                context: "design matrix must have n >= 1 and p >= 1",
                expected: 1,
                got: 0,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "design matrix",
            });
        }
        for j in 0..p {
            let norm_sq = data.column(j).norm_squared();
            if norm_sq > n as f64 * (1.0 + 1e-9) {
                return Err(Error::ColumnNorm {
                    col: j,
                    norm_sq,
                    n,
                });
            }
        }
        Ok(Self { data })
    }

    /// Builds the matrix from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension {
                context: "ragged rows in design matrix",
                expected: p,
                got: rows.iter().map(Vec::len).find(|&l| l != p).unwrap_or(0),
            });
        }
        let data = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(data)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.data.column(j).into_owned()
    }

    /// `X b` for a coefficient vector `b` of length `p`.
    pub fn apply(&self, b: &[f64]) -> DVector<f64> {
        &self.data * DVector::from_column_slice(b)
    }

    /// `X^T v / n`, the gradient scale used by the Lasso optimality
    /// conditions.
    pub fn gram_gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        (self.data.transpose() * v) / self.n() as f64
    }

    /// Submatrix keeping the columns indexed by `t`.
    pub fn columns_of(&self, t: &SupportSet) -> DMatrix<f64> {
        let mut sub = DMatrix::zeros(self.n(), t.len());
        for (k, &j) in t.indices().iter().enumerate() {
            sub.set_column(k, &self.data.column(j));
        }
        sub
    }
}

/// An ordered, duplicate-free set of zero-based column indices.
///
/// The CLI surface is one-based; parsing and display convert at the boundary.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Sorts the given indices and rejects duplicates.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateIndex { index: w[0] });
            }
        }
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
        }
    }

    /// The full support `{0, .., p-1}`.
    pub fn full(p: usize) -> Self {
        Self {
            indices: (0..p).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// Checks that all indices lie in `[0, dim)`.
    pub fn validate_for(&self, dim: usize) -> Result<()> {
        match self.indices.iter().find(|&&j| j >= dim) {
            Some(&j) => Err(Error::IndexOutOfRange { index: j, dim }),
            None => Ok(()),
        }
    }

    /// Complement within `[0, dim)`.
    pub fn complement(&self, dim: usize) -> Self {
        Self {
            indices: (0..dim).filter(|&j| !self.contains(j)).collect(),
        }
    }

    /// Parses a comma-separated list of one-based indices, as accepted on the
    /// command line. The empty string parses to the empty set.
    pub fn parse_one_based(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let mut v = Vec::new();
        for item in s.split(',') {
            let raw: usize = item.trim().parse().map_err(|_| {
                Error::domain("support", format!("`{item}` is not a positive integer"))
            })?;
            if raw == 0 {
                return Err(Error::domain("support", "indices are one-based"));
            }
            v.push(raw - 1);
        }
        Self::new(v)
    }

    /// One-based display form, the inverse of [`SupportSet::parse_one_based`].
    pub fn to_one_based_string(&self) -> String {
        self.indices
            .iter()
            .map(|j| (j + 1).to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Orthogonal projector onto the span of a column subset, stored as an
/// orthonormal basis of that span.
#[derive(Debug, Clone)]
pub struct Projector {
    basis: DMatrix<f64>,
    rank: usize,
}

impl Projector {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `Pi v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.rank == 0 {
            return DVector::zeros(v.len());
        }
        &self.basis * (self.basis.transpose() * v)
    }

    /// `(I - Pi) v`.
    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.apply(v)
    }

    /// The dense `n x n` projector matrix (mostly useful in tests).
    pub fn to_matrix(&self, n: usize) -> DMatrix<f64> {
        if self.rank == 0 {
            return DMatrix::zeros(n, n);
        }
        &self.basis * self.basis.transpose()
    }
}

/// Per-column weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct WeightVector {
    values: Vec<f64>,
}

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::domain("weights", "entries must lie in [0, 1]"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Orthogonal projector onto `span{x^j : j in T}` via a rank-revealing SVD of
/// `X_T`. The empty support yields the zero projector.
pub fn projector(x: &DesignMatrix, t: &SupportSet) -> Result<Projector> {
    t.validate_for(x.p())?;
    if t.is_empty() {
        return Ok(Projector {
            basis: DMatrix::zeros(x.n(), 0),
            rank: 0,
        });
    }
    let xt = x.columns_of(t);
    Ok(orthonormal_span(&xt))
}

/// Orthonormal basis of the column span of an arbitrary matrix, with the
/// singular-value cutoff `RANK_CUTOFF` relative to the largest singular value.
pub(crate) fn orthonormal_span(m: &DMatrix<f64>) -> Projector {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    let smax = svd.singular_values.max();
    let rank = if smax <= 0.0 {
        0
    } else {
        svd.singular_values
            .iter()
            .filter(|&&s| s > RANK_CUTOFF * smax)
            .count()
    };
    Projector {
        basis: u.columns(0, rank).into_owned(),
        rank,
    }
}

/// Moore-Penrose pseudoinverse applied to a vector: `M^dag v`, with the same
/// rank cutoff as [`projector`].
pub(crate) fn pinv_apply(m: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let smax = svd.singular_values.max();
    let mut coeffs = u.transpose() * v;
    for (i, s) in svd.singular_values.iter().enumerate() {
        coeffs[i] = if smax > 0.0 && *s > RANK_CUTOFF * smax {
            coeffs[i] / s
        } else {
            0.0
        };
    }
    vt.transpose() * coeffs
}

/// The correlation measure `rho_T`: the largest normalized distance of a
/// column of `X` to the span of the columns indexed by `T`,
/// `rho_T = n^{-1/2} max_j ||(I - Pi_T) x^j||_2`.
///
/// Columns inside `T` contribute exactly zero.
pub fn rho(x: &DesignMatrix, t: &SupportSet) -> Result<f64> {
    let (omega, _) = correlation_weights(x, t)?;
    Ok(omega.values().iter().cloned().fold(0.0, f64::max))
}

/// The column weights `omega_j = n^{-1/2} ||(I - Pi_T) x^j||_2` and their
/// normalized companions `omega_j / max_l omega_l` (with the convention
/// `0/0 = 0`). Entries on `T` are exactly zero.
pub fn correlation_weights(
    x: &DesignMatrix,
    t: &SupportSet,
) -> Result<(WeightVector, WeightVector)> {
    t.validate_for(x.p())?;
    let proj = projector(x, t)?;
    let sqrt_n = (x.n() as f64).sqrt();
    let mut omega = vec![0.0; x.p()];
    for j in 0..x.p() {
        if t.contains(j) {
            continue;
        }
        let r = proj.residual(&x.column(j));
        omega[j] = (r.norm() / sqrt_n).clamp(0.0, 1.0);
    }
    let max = omega.iter().cloned().fold(0.0, f64::max);
    let bar = if max == 0.0 {
        vec![0.0; x.p()]
    } else {
        omega.iter().map(|w| (w / max).clamp(0.0, 1.0)).collect()
    };
    Ok((WeightVector::new(omega)?, WeightVector::new(bar)?))
}

/// The l1-restricted smallest gain of `X_T`,
/// `nu_T = inf_{u != 0} sqrt(|T|) ||X_T u||_2 / (sqrt(n) ||u||_1)`,
/// computed exactly by enumerating the `2^{|T|-1}` sign orthants (sign
/// symmetry halves the count) and solving one convex subproblem per orthant.
pub fn nu(x: &DesignMatrix, t: &SupportSet) -> Result<f64> {
    nu_with_cap(x, t, DEFAULT_ORTHANT_CAP)
}

/// [`nu`] with a custom orthant cap.
pub fn nu_with_cap(x: &DesignMatrix, t: &SupportSet, cap: usize) -> Result<f64> {
    t.validate_for(x.p())?;
    let k = t.len();
    if k == 0 {
        return Err(Error::EmptySupport);
    }
    if k > cap {
        return Err(Error::OrthantCapExceeded { size: k, cap });
    }
    let xt = x.columns_of(t);
    let opts = SolveOptions::default();
    // Sign patterns with the first coordinate fixed to +1.
    let patterns = 1usize << (k - 1);
    let best = (0..patterns)
        .map(|mask| {
            let signs: Vec<f64> = (0..k)
                .map(|i| {
                    if i == 0 {
                        1.0
                    } else if (mask >> (k - 1 - i)) & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let problem = OrthantProblem::simplex_only(&xt, &signs);
            problem.solve(&opts).value
        })
        .fold(f64::INFINITY, f64::min);
    Ok((k as f64 / x.n() as f64).sqrt() * best)
}

/// The smallest gap between consecutive jump indices of `t` (positions in a
/// length-`n` signal), over the augmented sequence `1 = j_0, j_1 < .. < j_s,
/// j_{s+1} = n+1`. The zero gap produced by the augmentation when the first
/// coordinate belongs to `t` is dropped.
pub fn min_gap(t: &SupportSet, n: usize) -> Result<usize> {
    if t.is_empty() {
        return Err(Error::EmptySupport);
    }
    t.validate_for(n)?;
    // One-based positions with the boundary conventions.
    let mut positions = vec![1usize];
    positions.extend(t.indices().iter().map(|&j| j + 1));
    positions.push(n + 1);
    let gap = positions
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > 0)
        .min()
        .expect("augmented sequence has at least one positive gap");
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn scaled_identity(n: usize) -> DesignMatrix {
        let s = (n as f64).sqrt();
        DesignMatrix::new(DMatrix::from_diagonal_element(n, n, s)).unwrap()
    }

    fn tv4() -> DesignMatrix {
        DesignMatrix::new(DMatrix::from_fn(4, 4, |i, j| if i >= j { 1.0 } else { 0.0 })).unwrap()
    }

    fn random_design(n: usize, p: usize, seed: u64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        for j in 0..p {
            let norm = m.column(j).norm();
            let scale = (n as f64).sqrt() / norm;
            m.column_mut(j).scale_mut(scale);
        }
        DesignMatrix::new(m).unwrap()
    }

    #[test]
    fn column_norm_validation() {
        let bad = DMatrix::from_fn(2, 1, |_, _| 2.0);
        assert!(matches!(
            DesignMatrix::new(bad),
            Err(Error::ColumnNorm { col: 0, .. })
        ));
        let nan = DMatrix::from_fn(2, 1, |i, _| if i == 0 { f64::NAN } else { 0.0 });
        assert!(matches!(
            DesignMatrix::new(nan),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn projector_full_span_is_identity() {
        let x = scaled_identity(3);
        let proj = projector(&x, &SupportSet::full(3)).unwrap();
        assert_eq!(proj.rank(), 3);
        let m = proj.to_matrix(3);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(m[(i, j)], expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn projector_empty_support_is_zero() {
        let x = scaled_identity(3);
        let proj = projector(&x, &SupportSet::empty()).unwrap();
        assert_eq!(proj.rank(), 0);
        let v = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(proj.apply(&v).norm(), 0.0);
    }

    #[test]
    fn projector_tv_design_block_means() {
        // T = {1, 3} one-based on the n = 4 TV design spans the vectors that
        // are constant on the blocks {1,2} and {3,4}.
        let x = tv4();
        let t = SupportSet::new(vec![0, 2]).unwrap();
        let proj = projector(&x, &t).unwrap();
        assert_eq!(proj.rank(), 2);
        let v = DVector::from_vec(vec![1.0, 3.0, -2.0, 6.0]);
        let pv = proj.apply(&v);
        let expected = [2.0, 2.0, 2.0, 2.0];
        for i in 0..4 {
            assert_abs_diff_eq!(pv[i], expected[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn projector_idempotent_and_symmetric() {
        let x = random_design(12, 6, 7);
        let t = SupportSet::new(vec![1, 4, 5]).unwrap();
        let proj = projector(&x, &t).unwrap();
        let m = proj.to_matrix(12);
        let mm = &m * &m;
        assert!((mm - &m).amax() < 1e-10);
        assert!((m.transpose() - &m).amax() < 1e-10);
        for &j in t.indices() {
            assert!(proj.residual(&x.column(j)).norm() < 1e-8);
        }
    }

    #[test]
    fn rho_trivial_values() {
        let x = scaled_identity(4);
        assert_eq!(rho(&x, &SupportSet::full(4)).unwrap(), 0.0);
        assert_abs_diff_eq!(rho(&x, &SupportSet::empty()).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rho_tv_design_matches_closed_form() {
        let x = tv4();
        let t = SupportSet::new(vec![0, 2]).unwrap();
        let r = rho(&x, &t).unwrap();
        assert_abs_diff_eq!(r, 1.0 / (2.0 * 2.0_f64.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn rho_is_antitone_in_t() {
        let x = random_design(20, 10, 3);
        let small = SupportSet::new(vec![2, 5]).unwrap();
        let large = SupportSet::new(vec![2, 5, 7, 9]).unwrap();
        let r_small = rho(&x, &small).unwrap();
        let r_large = rho(&x, &large).unwrap();
        assert!(r_large <= r_small + 1e-10);
        assert!((0.0..=1.0).contains(&r_small));
    }

    #[test]
    fn weights_examples() {
        let x = scaled_identity(3);
        let t = SupportSet::new(vec![0]).unwrap();
        let (omega, bar) = correlation_weights(&x, &t).unwrap();
        assert_eq!(omega.values()[0], 0.0);
        assert_abs_diff_eq!(omega.values()[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(omega.values()[2], 1.0, epsilon = 1e-12);
        assert_eq!(bar.values()[0], 0.0);
        assert_abs_diff_eq!(bar.values()[1], 1.0, epsilon = 1e-12);

        // Full support: the 0/0 = 0 convention.
        let (omega, bar) = correlation_weights(&x, &SupportSet::full(3)).unwrap();
        assert!(omega.values().iter().all(|&w| w == 0.0));
        assert!(bar.values().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn normalized_weights_peak_at_one() {
        let x = random_design(15, 8, 11);
        let t = SupportSet::new(vec![0, 3]).unwrap();
        let (omega, bar) = correlation_weights(&x, &t).unwrap();
        assert!(omega.values().iter().any(|&w| w > 0.0));
        let max = bar.values().iter().cloned().fold(0.0, f64::max);
        assert_abs_diff_eq!(max, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nu_orthonormal_scaled_columns() {
        let x = scaled_identity(4);
        let t = SupportSet::new(vec![0, 1, 2]).unwrap();
        assert_abs_diff_eq!(nu(&x, &t).unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn nu_vanishes_on_duplicate_columns() {
        let n = 6;
        let base = random_design(n, 1, 5);
        let col = base.column(0);
        let m = DMatrix::from_fn(n, 2, |i, _| col[i]);
        let x = DesignMatrix::new(m).unwrap();
        let t = SupportSet::new(vec![0, 1]).unwrap();
        assert!(nu(&x, &t).unwrap() < 1e-5);
    }

    #[test]
    fn nu_dominates_min_singular_value_and_sampled_directions() {
        let x = random_design(8, 2, 42);
        let t = SupportSet::full(2);
        let v = nu(&x, &t).unwrap();
        let xt = x.columns_of(&t);
        let smin = xt
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            / (8.0_f64).sqrt();
        assert!(v >= smin - 1e-8, "nu = {v}, smin = {smin}");

        // The orthant enumeration must not exceed the ratio at any sampled u.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let u = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let l1 = u.iter().map(|v| v.abs()).sum::<f64>();
            if l1 < 1e-12 {
                continue;
            }
            let ratio = (2.0_f64).sqrt() * (&xt * &u).norm() / ((8.0_f64).sqrt() * l1);
            assert!(v <= ratio + 1e-7);
        }
    }

    #[test]
    fn nu_rejects_bad_supports() {
        let x = scaled_identity(4);
        assert!(matches!(
            nu(&x, &SupportSet::empty()),
            Err(Error::EmptySupport)
        ));
        assert!(matches!(
            nu_with_cap(&x, &SupportSet::full(4), 3),
            Err(Error::OrthantCapExceeded { size: 4, cap: 3 })
        ));
    }

    #[test]
    fn min_gap_examples() {
        let t = SupportSet::new(vec![8]).unwrap(); // one-based {9}
        assert_eq!(min_gap(&t, 16).unwrap(), 8);
        let t = SupportSet::new(vec![0]).unwrap(); // one-based {1}
        assert_eq!(min_gap(&t, 16).unwrap(), 16);
        let t = SupportSet::new(vec![2, 3]).unwrap(); // one-based {3, 4}
        assert_eq!(min_gap(&t, 10).unwrap(), 1);
        assert!(matches!(
            min_gap(&SupportSet::empty(), 10),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn support_parsing_round_trip() {
        let t = SupportSet::parse_one_based("3,1,9").unwrap();
        assert_eq!(t.indices(), &[0, 2, 8]);
        assert_eq!(t.to_one_based_string(), "1,3,9");
        assert!(SupportSet::parse_one_based("0").is_err());
        assert!(SupportSet::new(vec![1, 1]).is_err());
    }
}
