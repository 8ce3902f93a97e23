//! Epsilon-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved in its 2n-variable form
//!
//! ```text
//! min  1/2 a^T Q a + p^T a   s.t.  0 <= a_t <= C,  sum_t s_t a_t = 0
//! ```
//!
//! with `a = (alpha, alpha*)`, signs `s = (+1.., -1..)`, `Q_ts = s_t s_s K(x_t, x_s)`
//! and `p = (eps - y, eps + y)`, by sequential minimal optimization with
//! second-order working set selection. Kernel rows are computed on demand and
//! kept in a bounded LRU cache.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::dataset::Matrix;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    /// Box constraint C.
    pub c_penalty: f64,
    /// Half-width of the insensitive tube, in target units.
    pub epsilon_tube: f64,
    /// RBF width, `1 / (2 sigma^2)`.
    pub gamma: f64,
    /// Iteration budget in multiples of the training-set size.
    pub max_passes: usize,
    /// Stop when the maximal KKT violation falls below this.
    pub kkt_tol: f64,
    /// Kernel row cache budget in MiB.
    pub cache_mb: usize,
}

impl Default for SvrConfig {
    fn default() -> Self {
        SvrConfig { c_penalty: 1.0, epsilon_tube: 0.01, gamma: 0.5, max_passes: 200, kkt_tol: 1e-3, cache_mb: 256 }
    }
}

impl SvrConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.c_penalty > 0.0) || !(self.epsilon_tube >= 0.0) || !(self.gamma > 0.0) || !(self.kkt_tol > 0.0) {
            return Err(ModelError::InvalidConfig("svr: need c > 0, epsilon >= 0, gamma > 0, kkt_tol > 0".into()));
        }
        if self.max_passes == 0 {
            return Err(ModelError::InvalidConfig("svr: max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

/// exp(-gamma * |x - y|^2).
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    Ok(rbf(x, y, gamma))
}

#[inline]
fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Raw solver output over all training points.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrSolution {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Maximal KKT violation at exit.
    pub violation: f64,
    pub converged: bool,
}

impl SvrSolution {
    /// `alpha_i - alpha*_i`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.alpha_star).map(|(a, b)| a - b).collect()
    }
}

/// Fitted model: support vectors with nonzero dual coefficient, plus bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub gamma: f64,
    pub support_vectors: Matrix,
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub violation: f64,
}

impl SvrModel {
    pub fn from_solution(x: &Matrix, sol: &SvrSolution, gamma: f64) -> Self {
        let coef = sol.coefficients();
        let idx: Vec<usize> = (0..coef.len()).filter(|&i| coef[i] != 0.0).collect();
        SvrModel {
            gamma,
            support_vectors: x.select_rows(&idx),
            dual_coef: idx.iter().map(|&i| coef[i]).collect(),
            bias: sol.bias,
            iterations: sol.iterations,
            violation: sol.violation,
        }
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.cols()
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (sv, c) in self.support_vectors.iter_rows().zip(&self.dual_coef) {
            s += c * rbf(sv, x, self.gamma);
        }
        s + self.bias
    }

    /// Kernel expansion per row of (already standardized) `x`.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        if x.rows() > 0 && x.cols() != self.dim() {
            return Err(ModelError::DimensionMismatch { expected: self.dim(), got: x.cols() });
        }
        Ok(x.iter_rows().map(|r| self.predict_row(r)).collect())
    }
}

struct KernelCache<'a> {
    x: &'a Matrix,
    gamma: f64,
    rows: Vec<Option<(Vec<f64>, u64)>>,
    live: usize,
    capacity: usize,
    clock: u64,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a Matrix, gamma: f64, cache_mb: usize) -> Self {
        let n = x.rows();
        let per_row = (n * 8).max(1);
        let capacity = ((cache_mb << 20) / per_row).clamp(2, n.max(2));
        KernelCache { x, gamma, rows: vec![None; n], live: 0, capacity, clock: 0 }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.clock += 1;
        let clock = self.clock;
        if self.rows[i].is_none() {
            if self.live >= self.capacity {
                let victim = self
                    .rows
                    .iter()
                    .enumerate()
                    .filter_map(|(k, r)| r.as_ref().map(|(_, used)| (k, *used)))
                    .min_by_key(|&(_, used)| used)
                    .map(|(k, _)| k)
                    .expect("cache is non-empty when full");
                self.rows[victim] = None;
                self.live -= 1;
            }
            let xi = self.x.row(i);
            let row: Vec<f64> = self.x.iter_rows().map(|xj| rbf(xi, xj, self.gamma)).collect();
            self.rows[i] = Some((row, clock));
            self.live += 1;
        }
        let entry = self.rows[i].as_mut().expect("row just filled");
        entry.1 = clock;
        &entry.0
    }
}

/// Runs SMO on standardized inputs `x` and targets `y`.
pub fn svr_solve(x: &Matrix, y: &[f64], cfg: &SvrConfig) -> Result<SvrSolution, ModelError> {
    cfg.validate()?;
    let n = x.rows();
    if n < 2 {
        return Err(ModelError::TooFewRows { needed: 2, got: n });
    }
    if y.len() != n {
        return Err(ModelError::DimensionMismatch { expected: n, got: y.len() });
    }
    let l = 2 * n;
    let c = cfg.c_penalty;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let mut a = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { cfg.epsilon_tube - y[t] } else { cfg.epsilon_tube + y[t - n] })
        .collect();
    let mut cache = KernelCache::new(x, cfg.gamma, cfg.cache_mb);
    // RBF diagonal
    let qd = 1.0;
    let max_iter = cfg.max_passes.saturating_mul(n.max(100));
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut violation;
    let mut converged = false;
    loop {
        // first index: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            let v = if sign(t) > 0.0 {
                (!is_upper(a[t])).then(|| -grad[t])
            } else {
                (!is_lower(a[t])).then(|| grad[t])
            };
            if let Some(v) = v {
                if v >= gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        if let Some(i) = i_sel {
            let yi = sign(i);
            let ki = cache.row(i % n).to_vec();
            let mut best = f64::INFINITY;
            for t in 0..l {
                let yt = sign(t);
                let q_it = yi * yt * ki[t % n];
                if yt > 0.0 {
                    if !is_lower(a[t]) {
                        let diff = gmax + grad[t];
                        gmax2 = gmax2.max(grad[t]);
                        if diff > 0.0 {
                            let quad = 2.0 * qd - 2.0 * yi * q_it;
                            let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                            if obj <= best {
                                best = obj;
                                j_sel = Some(t);
                            }
                        }
                    }
                } else if !is_upper(a[t]) {
                    let diff = gmax - grad[t];
                    gmax2 = gmax2.max(-grad[t]);
                    if diff > 0.0 {
                        let quad = 2.0 * qd + 2.0 * yi * q_it;
                        let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                        if obj <= best {
                            best = obj;
                            j_sel = Some(t);
                        }
                    }
                }
            }
        }
        violation = (gmax + gmax2).max(0.0);
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gmax + gmax2 >= cfg.kkt_tol => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (yi, yj) = (sign(i), sign(j));
        let kij = cache.row(i % n)[j % n];
        let q_ij = yi * yj * kij;
        let (old_ai, old_aj) = (a[i], a[j]);
        if yi != yj {
            let quad = (2.0 * qd + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let quad = (2.0 * qd - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        let (da_i, da_j) = (a[i] - old_ai, a[j] - old_aj);
        let ki = cache.row(i % n).to_vec();
        let kj = cache.row(j % n);
        for t in 0..l {
            let yt = sign(t);
            grad[t] += yt * (yi * ki[t % n] * da_i + yj * kj[t % n] * da_j);
        }
    }

    // bias from free variables, or the midpoint of the feasible interval
    let (mut ub, mut lb, mut sum_free, mut n_free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        if is_upper(a[t]) {
            if sign(t) < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if is_lower(a[t]) {
            if sign(t) > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { 0.5 * (ub + lb) };

    // a point never holds both alpha and alpha* > 0 at the optimum; enforce it exactly
    let mut alpha = Vec::with_capacity(n);
    let mut alpha_star = Vec::with_capacity(n);
    for i in 0..n {
        let beta = a[i] - a[i + n];
        alpha.push(beta.max(0.0));
        alpha_star.push((-beta).max(0.0));
    }
    Ok(SvrSolution { alpha, alpha_star, bias: -rho, iterations, violation, converged })
}

/// Fits the SVR. A solver that exhausts its budget returns
/// [`ModelError::SvrNotConverged`] carrying the best-so-far model.
pub fn svr_fit(x: &Matrix, y: &[f64], cfg: &SvrConfig) -> Result<SvrModel, ModelError> {
    let sol = svr_solve(x, y, cfg)?;
    let model = SvrModel::from_solution(x, &sol, cfg.gamma);
    if !sol.converged {
        return Err(ModelError::SvrNotConverged { model: Box::new(model), violation: sol.violation });
    }
    Ok(model)
}

/// Dual objective `1/2 b^T K b - y^T b + eps |b|_1` for coefficients `b`.
pub fn dual_objective(x: &Matrix, y: &[f64], coef: &[f64], cfg: &SvrConfig) -> f64 {
    let n = x.rows();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += coef[i] * coef[j] * rbf(x.row(i), x.row(j), cfg.gamma);
        }
    }
    let lin: f64 = coef.iter().zip(y).map(|(b, t)| -t * b + cfg.epsilon_tube * b.abs()).sum();
    0.5 * quad + lin
}
