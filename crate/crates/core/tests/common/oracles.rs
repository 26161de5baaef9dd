//! Independent reference implementations used to cross-check the library's
//! numerics. Everything here is built from first principles on dense
//! matrices or exact integers, deliberately sharing no code with the
//! algorithms under test.

use std::cmp::Ordering;

use opspam_core::nalgebra::{DMatrix, DVector};

/// Eigenvalues (descending) and matching eigenvector columns of a symmetric
/// matrix, computed with cyclic Jacobi rotations.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    (values, vectors)
}

/// Economy SVD `A = U diag(S) V^T` computed via Jacobi eigendecomposition of
/// the Gram matrix of the smaller side. Returns all `min(m, n)` singular
/// values in descending order; left vectors of (numerically) zero singular
/// values are left as zero columns.
pub fn svd_oracle(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if m < n {
        let (u, s, v) = svd_oracle(&a.transpose());
        return (v, s, u);
    }
    let gram = a.transpose() * a;
    let (lambda, v) = jacobi_eigen(&gram);
    let sigma: Vec<f64> = lambda.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let cutoff = 1e-12 * sigma.first().copied().unwrap_or(0.0).max(1.0);
    let mut u = DMatrix::zeros(m, n);
    for j in 0..n {
        if sigma[j] > cutoff {
            let col = a * v.column(j) / sigma[j];
            u.set_column(j, &col);
        }
    }
    (u, sigma, v)
}

/// `||Y - X (X^T Y)||_F` for orthonormal `X` and `Y`: the Frobenius norm of
/// the part of `span(Y)` outside `span(X)`, which equals
/// `sqrt(sum_i sin^2(theta_i))` over the principal angles. Accurate for
/// small angles, unlike the arccos form.
pub fn subspace_residual(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    assert_eq!(x.nrows(), y.nrows());
    let projected = x * (x.transpose() * y);
    (y - projected).norm()
}

/// Maximizes `sum(alpha) - 0.5 alpha^T Q alpha` over the box `[0, c]^n` by
/// projected gradient ascent with a fixed `1/lambda_max(Q)` step. Returns
/// the maximizer and the objective value.
pub fn box_qp_max(q: &DMatrix<f64>, c: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = q.nrows();
    assert_eq!(n, q.ncols());
    let mut z = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda_max = 0.0_f64;
    for _ in 0..300 {
        let w = q * &z;
        let norm = w.norm();
        if norm <= 1e-300 {
            break;
        }
        lambda_max = norm;
        z = w / norm;
    }
    let step = 1.0 / lambda_max.max(1e-12);
    let ones = DVector::from_element(n, 1.0);
    let mut alpha = DVector::<f64>::zeros(n);
    for _ in 0..iters {
        let grad = &ones - q * &alpha;
        let mut next = &alpha + step * grad;
        for i in 0..n {
            next[i] = next[i].clamp(0.0, c);
        }
        let moved = (&next - &alpha).norm();
        alpha = next;
        if moved <= 1e-15 {
            break;
        }
    }
    let objective = alpha.sum() - 0.5 * (q * &alpha).dot(&alpha);
    (alpha.as_slice().to_vec(), objective)
}

/// Exact multinomial Bayes comparison over a 3-term vocabulary with Laplace
/// smoothing `alpha = alpha_num / alpha_den`, done in integer arithmetic.
///
/// `class_counts[c][t]` aggregates term `t` over class `c`'s training
/// documents, `docs_per_class[c]` is the class size, and `probe` is the
/// query's term-count vector. Returns how the class-0 posterior compares to
/// the class-1 posterior.
pub fn nb_exact_compare(
    class_counts: &[[u64; 3]; 2],
    docs_per_class: &[u64; 2],
    probe: &[u64; 3],
    alpha_num: u64,
    alpha_den: u64,
) -> Ordering {
    let vocab = 3u64;
    let total_probe: u64 = probe.iter().sum();
    let numerator = |c: usize| -> u128 {
        let mut acc = u128::from(docs_per_class[c]);
        for t in 0..3 {
            let factor = u128::from(alpha_den * class_counts[c][t] + alpha_num);
            for _ in 0..probe[t] {
                acc *= factor;
            }
        }
        acc
    };
    let denominator = |c: usize| -> u128 {
        let total: u64 = class_counts[c].iter().sum();
        let factor = u128::from(alpha_den * total + alpha_num * vocab);
        let mut acc = 1u128;
        for _ in 0..total_probe {
            acc *= factor;
        }
        acc
    };
    // score_0 / score_1 = (num_0 * den_1) / (num_1 * den_0)
    (numerator(0) * denominator(1)).cmp(&(numerator(1) * denominator(0)))
}

/// True when strictly more than half of the votes are `true`.
pub fn majority_true(votes: &[bool]) -> bool {
    let yes = votes.iter().filter(|&&v| v).count();
    2 * yes > votes.len()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}
