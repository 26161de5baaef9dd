//! Linear soft-margin SVM with L1 hinge loss, trained by dual coordinate
//! descent. The bias is carried as an augmented constant feature of value
//! 1, so it is regularized along with the weights and the dual has pure
//! box constraints.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::corpus::{ClassLabel, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::sparse::SparseVec;

use super::{DEFAULT_C, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Training knobs. `tol` bounds the largest single-coordinate KKT
/// violation at convergence; `max_iter` counts full sweeps over the
/// training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: DEFAULT_SEED,
        }
    }
}

/// A trained separating hyperplane w·x + b, plus the support vectors
/// (training indices with nonzero dual coefficient) for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    w: Vec<f64>,
    b: f64,
    c: f64,
    support: Vec<(usize, f64)>,
    sweeps: usize,
}

/// Trains on feature vectors with ±1 labels (+1 = `truthful`). The dual
/// problem max Σα − ½‖w_aug‖² s.t. 0 ≤ α ≤ C is solved one coordinate at
/// a time in seeded-random order per sweep; w_aug is maintained
/// incrementally so each update costs one sparse dot product.
pub fn train_svm(x: &[SparseVec], y: &[f64], opts: &SvmOptions) -> Result<SvmModel> {
    if x.is_empty() {
        return Err(Error::param("x", "empty training set"));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if y.iter().any(|&yi| yi != 1.0 && yi != -1.0) {
        return Err(Error::param("y", "labels must be +1 or -1"));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::param("y", "at least one example of each sign required"));
    }
    if !(opts.c > 0.0) || !opts.c.is_finite() {
        return Err(Error::param("C", "must be positive and finite"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if opts.max_iter < 1 {
        return Err(Error::param("max_iter", "at least one sweep required"));
    }
    let dim = x[0].dim();
    if x.iter().any(|xi| xi.dim() != dim) {
        return Err(Error::param("x", "feature vectors differ in dimension"));
    }

    let n = x.len();
    // Diagonal of the augmented Gram matrix: ‖x_i‖² plus 1 for the bias
    // feature. Always ≥ 1, so the coordinate step is well-defined.
    let q_diag: Vec<f64> = x.iter().map(|xi| xi.norm_sq() + 1.0).collect();
    let mut alpha = vec![0.0f64; n];
    // w_aug = [w; b], updated in place as alphas move.
    let mut w_aug = vec![0.0f64; dim + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);

    let mut converged = false;
    let mut sweeps = 0;
    let mut worst = f64::INFINITY;
    for sweep in 1..=opts.max_iter {
        sweeps = sweep;
        order.shuffle(&mut rng);
        let mut max_violation = 0.0f64;
        for &i in &order {
            let margin = x[i].dot_dense(&w_aug[..dim]) + w_aug[dim];
            let g = y[i] * margin - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= opts.c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-12 {
                let next = (alpha[i] - g / q_diag[i]).clamp(0.0, opts.c);
                let delta = next - alpha[i];
                if delta != 0.0 {
                    alpha[i] = next;
                    let step = delta * y[i];
                    for (t, v) in x[i].iter() {
                        w_aug[t as usize] += step * v;
                    }
                    w_aug[dim] += step;
                }
            }
        }
        worst = max_violation;
        if max_violation < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            what: "train_svm",
            iterations: sweeps,
            residual: worst,
        });
    }

    let b = w_aug[dim];
    w_aug.truncate(dim);
    let support = alpha
        .into_iter()
        .enumerate()
        .filter(|&(_, a)| a > 0.0)
        .collect();
    Ok(SvmModel {
        w: w_aug,
        b,
        c: opts.c,
        support,
        sweeps,
    })
}

/// Signed distance surrogate w·x + b and the label it maps to: positive
/// margins are `truthful`, zero and negative are `deceptive`.
pub fn predict_svm(model: &SvmModel, x: &SparseVec) -> Result<(ClassLabel, f64)> {
    if x.dim() != model.w.len() {
        return Err(Error::Dimension {
            expected: model.w.len(),
            got: x.dim(),
        });
    }
    let margin = x.dot_dense(&model.w) + model.b;
    Ok((ClassLabel::from_score(margin), margin))
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Training indices with α > 0 and their dual coefficients.
    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    /// Sweeps the optimizer ran before converging.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Primal objective ½‖w_aug‖² + C·Σ hinge(y_i, w·x_i + b) on the given
    /// training set.
    pub fn primal_objective(&self, x: &[SparseVec], y: &[f64]) -> f64 {
        let reg = 0.5 * (self.w.iter().map(|w| w * w).sum::<f64>() + self.b * self.b);
        let hinge: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, &yi)| (1.0 - yi * (xi.dot_dense(&self.w) + self.b)).max(0.0))
            .sum();
        reg + self.c * hinge
    }

    /// Dual objective Σα − ½‖w_aug‖² at the stored solution.
    pub fn dual_objective(&self) -> f64 {
        let alpha_sum: f64 = self.support.iter().map(|&(_, a)| a).sum();
        let reg = 0.5 * (self.w.iter().map(|w| w * w).sum::<f64>() + self.b * self.b);
        alpha_sum - reg
    }

    /// Reassembles a model from persisted parts, revalidating finiteness.
    pub fn from_parts(w: Vec<f64>, b: f64, c: f64, support: Vec<(usize, f64)>) -> Result<SvmModel> {
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::Artifact("weights must be finite".into()));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Artifact("C must be positive".into()));
        }
        if support.iter().any(|&(_, a)| !(a > 0.0) || a > c) {
            return Err(Error::Artifact("dual coefficients must lie in (0, C]".into()));
        }
        Ok(SvmModel {
            w,
            b,
            c,
            support,
            sweeps: 0,
        })
    }
}
