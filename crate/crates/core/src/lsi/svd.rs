//! Truncated SVD of sparse matrices by randomized subspace iteration.
//!
//! The matrix is only touched through sparse-times-dense products, so
//! ranks in the hundreds stay tractable on term-document matrices with
//! tens of thousands of rows. The iteration runs on whichever side of the
//! matrix is smaller; the factors are swapped back afterwards.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::corpus::DEFAULT_SEED;
use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

/// Knobs of the iterative solver. `oversample` extra basis vectors are
/// carried beyond the requested rank to speed up convergence of the top
/// values; iteration stops once the largest relative change across the
/// top-k singular-value estimates drops below `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    pub oversample: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            tol: 1e-7,
            max_iter: 200,
            seed: DEFAULT_SEED,
        }
    }
}

/// Top-k factorization A ≈ U·diag(S)·Vᵀ with orthonormal columns in U
/// and V and S non-increasing. `reduced` is set when the matrix rank fell
/// short of the requested k and fewer triplets are returned.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
    pub reduced: bool,
    pub iterations: usize,
}

impl TruncatedSvd {
    /// Number of triplets actually returned (≤ requested k).
    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

/// Standard-normal matrix from a seeded generator, via the Box-Muller
/// transform. Keeps the start of the iteration reproducible without
/// pulling in a distributions dependency.
fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut spare: Option<f64> = None;
    DMatrix::from_fn(rows, cols, |_, _| {
        if let Some(z) = spare.take() {
            return z;
        }
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        spare = Some(r * theta.sin());
        r * theta.cos()
    })
}

/// Orthonormal basis of the column space via Householder QR. The Q factor
/// keeps orthonormal columns even when the input is rank-deficient.
fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Descending singular-value estimates of the current block Y = A·W,
/// derived from the eigenvalues of the small Gram matrix YᵀY.
fn sigma_estimates(y: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let gram = y.tr_mul(y);
    let mut lambda: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    lambda.truncate(k);
    lambda.iter().map(|&l| l.max(0.0).sqrt()).collect()
}

/// Largest change between successive singular-value estimates, scaled by
/// the leading estimate. Scaling each value by itself would demand that
/// estimates at round-off scale (the Gram step floors them near
/// sqrt(eps) times the leading value) stabilize relative to their own
/// noise, which never happens on rank-deficient matrices; against the
/// leading value they count as settled and the rank cutoff drops them.
fn relative_change(prev: &[f64], next: &[f64]) -> f64 {
    let top = next.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    prev.iter()
        .zip(next)
        .map(|(&p, &n)| (n - p).abs() / top)
        .fold(0.0, f64::max)
}

/// Computes the k largest singular triplets of a sparse matrix.
///
/// A random orthonormal block is refined by alternating products with the
/// matrix and its transpose until the top-k singular-value estimates
/// stabilize to within `opts.tol`, then the factors are extracted exactly
/// from the converged subspace. Values at or below round-off scale
/// (relative to the largest one) are discarded; when that leaves fewer
/// than k triplets the result carries `reduced = true`.
pub fn truncated_svd(a: &CscMatrix, k: usize, opts: &SvdOptions) -> Result<TruncatedSvd> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::param("matrix", "empty matrix"));
    }
    if k < 1 || k > m.min(n) {
        return Err(Error::Param {
            name: "k",
            reason: format!("rank {k} outside 1..={}", m.min(n)),
        });
    }
    if opts.max_iter < 2 {
        return Err(Error::param(
            "max_iter",
            "convergence needs at least two iterations",
        ));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }

    // Iterate on the smaller side so the basis block stays short.
    let flip = n > m;
    let (wm, wn) = if flip { (n, m) } else { (m, n) };
    let mul = |x: &DMatrix<f64>| if flip { a.tr_mul_dense(x) } else { a.mul_dense(x) };
    let mul_t = |y: &DMatrix<f64>| if flip { a.mul_dense(y) } else { a.tr_mul_dense(y) };

    let block = (k + opts.oversample).min(wn);
    let mut w = orthonormalize(gaussian_matrix(wn, block, opts.seed));
    let mut prev: Option<Vec<f64>> = None;
    let mut converged_y: Option<DMatrix<f64>> = None;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    for it in 1..=opts.max_iter {
        iterations = it;
        let y = mul(&w);
        let sigma = sigma_estimates(&y, k);
        if let Some(p) = &prev {
            residual = relative_change(p, &sigma);
            if residual < opts.tol {
                converged_y = Some(y);
                break;
            }
        }
        prev = Some(sigma);
        w = orthonormalize(mul_t(&y));
    }

    let y = converged_y.ok_or(Error::NotConverged {
        what: "truncated_svd",
        iterations,
        residual,
    })?;

    // Exact factorization restricted to the converged subspace: QR of the
    // tall block, then a dense SVD of the small triangular factor.
    let qr = y.qr();
    let qy = qr.q();
    let svd = qr.r().svd(true, true);
    let ur = svd.u.expect("requested");
    let vr_t = svd.v_t.expect("requested");

    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = sigma_max * f64::EPSILON * wm.max(wn) as f64;
    let numeric_rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > cutoff)
        .count();
    let k_eff = k.min(numeric_rank);
    let reduced = k_eff < k;

    let s = DVector::from_fn(k_eff, |i, _| svd.singular_values[i]);
    let work_u = &qy * ur.columns(0, k_eff);
    let work_v = &w * vr_t.rows(0, k_eff).transpose();
    let (mut u, mut v) = if flip { (work_v, work_u) } else { (work_u, work_v) };

    // Resolve the per-pair sign ambiguity: the largest-magnitude entry of
    // each U column is made positive, with the matching V column flipped.
    for c in 0..k_eff {
        let col = u.column(c);
        let mut lead = 0.0f64;
        for &e in col.iter() {
            if e.abs() > lead.abs() {
                lead = e;
            }
        }
        if lead < 0.0 {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }
    Ok(TruncatedSvd {
        u,
        s,
        v,
        reduced,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense(rows: usize, cols: usize, data: &[f64]) -> CscMatrix {
        CscMatrix::from_dense(&DMatrix::from_row_slice(rows, cols, data))
    }

    fn max_offdiag_from_identity(g: &DMatrix<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - want).abs());
            }
        }
        worst
    }

    #[test]
    fn identity_matrix_has_unit_spectrum() {
        let a = CscMatrix::from_dense(&DMatrix::identity(4, 4));
        let f = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        assert_eq!(f.rank(), 2);
        assert_relative_eq!(f.s[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(f.s[1], 1.0, epsilon = 1e-10);
        assert!(!f.reduced);
    }

    #[test]
    fn duplicated_columns_converge_to_a_reduced_factorization() {
        // Sixteen columns holding only two distinct vectors: rank 2, and
        // every trailing singular-value estimate is pure round-off noise.
        let mut data = Vec::new();
        for row in [
            [1.0, 0.0],
            [3.0, 1.0],
            [0.0, 2.0],
            [1.0, 1.0],
            [2.0, 0.0],
        ] {
            for c in 0..16 {
                data.push(row[c % 2]);
            }
        }
        let a = dense(5, 16, &data);
        let f = truncated_svd(&a, 4, &SvdOptions::default()).unwrap();
        assert_eq!(f.rank(), 2);
        assert!(f.reduced);
        let b = a.to_dense();
        let gram = b.transpose() * &b;
        let top = gram.symmetric_eigen().eigenvalues.max().sqrt();
        assert_relative_eq!(f.s[0], top, epsilon = 1e-9);
    }

    #[test]
    fn rank_one_outer_product_spectrum() {
        // u = (2, 2, 1) with |u| = 3, v = (2, 0, 0, 0) with |v| = 2.
        let u = [2.0, 2.0, 1.0];
        let v = [2.0, 0.0, 0.0, 0.0];
        let mut data = Vec::new();
        for ui in u {
            for vj in v {
                data.push(ui * vj);
            }
        }
        let a = dense(3, 4, &data);
        let f = truncated_svd(&a, 1, &SvdOptions::default()).unwrap();
        assert_relative_eq!(f.s[0], 6.0, epsilon = 1e-9);
    }

    #[test]
    fn rank_deficiency_sets_the_reduced_flag() {
        let a = dense(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        let f = truncated_svd(&a, 3, &SvdOptions::default()).unwrap();
        assert!(f.reduced);
        assert_eq!(f.rank(), 2);
        assert!(f.s.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn factors_are_orthonormal_and_ordered() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        let a = CscMatrix::from_dense(&DMatrix::from_fn(20, 12, |_, _| rng.random::<f64>() - 0.5));
        let f = truncated_svd(&a, 5, &SvdOptions::default()).unwrap();
        assert!(max_offdiag_from_identity(&f.u.tr_mul(&f.u)) < 1e-8);
        assert!(max_offdiag_from_identity(&f.v.tr_mul(&f.v)) < 1e-8);
        for i in 1..f.rank() {
            assert!(f.s[i] <= f.s[i - 1] + 1e-12);
        }
    }

    #[test]
    fn wide_matrices_factor_like_tall_ones() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        let tall = DMatrix::from_fn(15, 6, |_, _| rng.random::<f64>() - 0.5);
        let wide = tall.transpose();
        let ft = truncated_svd(&CscMatrix::from_dense(&tall), 3, &SvdOptions::default()).unwrap();
        let fw = truncated_svd(&CscMatrix::from_dense(&wide), 3, &SvdOptions::default()).unwrap();
        for i in 0..3 {
            assert_relative_eq!(ft.s[i], fw.s[i], epsilon = 1e-8);
        }
        assert_eq!(fw.u.nrows(), 6);
        assert_eq!(fw.v.nrows(), 15);
        for c in 0..3 {
            let lead = fw
                .u
                .column(c)
                .iter()
                .copied()
                .max_by(|x, y| x.abs().total_cmp(&y.abs()))
                .unwrap();
            assert!(lead > 0.0, "sign convention holds in the flipped orientation");
        }
    }

    #[test]
    fn sign_convention_pins_the_factors() {
        let a = dense(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let f = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        for c in 0..f.rank() {
            let lead = f
                .u
                .column(c)
                .iter()
                .copied()
                .max_by(|x, y| x.abs().total_cmp(&y.abs()))
                .unwrap();
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn same_seed_reproduces_the_factorization() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
        let a = CscMatrix::from_dense(&DMatrix::from_fn(10, 8, |_, _| rng.random::<f64>()));
        let f1 = truncated_svd(&a, 4, &SvdOptions::default()).unwrap();
        let f2 = truncated_svd(&a, 4, &SvdOptions::default()).unwrap();
        assert_eq!(f1.u, f2.u);
        assert_eq!(f1.s, f2.s);
        assert_eq!(f1.v, f2.v);
    }

    #[test]
    fn parameter_validation() {
        let a = dense(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(truncated_svd(&a, 0, &SvdOptions::default()).is_err());
        assert!(truncated_svd(&a, 3, &SvdOptions::default()).is_err());
        let bad_iter = SvdOptions {
            max_iter: 1,
            ..SvdOptions::default()
        };
        assert!(truncated_svd(&a, 1, &bad_iter).is_err());
        let bad_tol = SvdOptions {
            tol: 0.0,
            ..SvdOptions::default()
        };
        assert!(truncated_svd(&a, 1, &bad_tol).is_err());
    }

    #[test]
    fn non_convergence_reports_residual() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let a = CscMatrix::from_dense(&DMatrix::from_fn(30, 20, |_, _| rng.random::<f64>()));
        let opts = SvdOptions {
            oversample: 0,
            tol: 1e-300,
            max_iter: 2,
            ..SvdOptions::default()
        };
        match truncated_svd(&a, 3, &opts) {
            Err(Error::NotConverged {
                what,
                iterations,
                residual,
            }) => {
                assert_eq!(what, "truncated_svd");
                assert_eq!(iterations, 2);
                assert!(residual.is_finite() && residual > 0.0);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }
}
