//! Exact (all-pairs) t-SNE to two dimensions.
//!
//! High-dimensional affinities are conditional Gaussians whose per-point
//! bandwidths are solved by bisection to hit a shared perplexity target;
//! the symmetrized distribution P is then matched by a Student-t
//! distribution Q over a 2-D layout via gradient descent with momentum
//! and early exaggeration. Everything is O(N^2) per iteration, which is
//! the point: no approximation, desk-scale inputs only.

use fsem_core::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, UnsupervisedError};
use crate::util::{sq_dist, validate_points};

/// How closely each point's realized perplexity must match the target.
const PERPLEXITY_TOLERANCE: f64 = 1e-4;
const MAX_BISECTIONS: usize = 200;
/// Scale of the random initial layout.
const INIT_SCALE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct TsneConfig {
    /// Effective-neighbor-count target. `None` picks 30, capped at
    /// (N-1)/3; an explicit value must stay strictly below that cap.
    pub perplexity: Option<f64>,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Factor applied to P during the first `exaggeration_iters`
    /// iterations so clusters separate before fine-tuning.
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// Iteration at which momentum switches from initial to final.
    pub momentum_switch_iter: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: None,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            seed: 0,
        }
    }
}

impl TsneConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(UnsupervisedError::InvalidArgument(
                "t-SNE needs at least one iteration".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(UnsupervisedError::InvalidArgument(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.early_exaggeration < 1.0 {
            return Err(UnsupervisedError::InvalidArgument(format!(
                "early exaggeration must be >= 1, got {}",
                self.early_exaggeration
            )));
        }
        for m in [self.initial_momentum, self.final_momentum] {
            if !(0.0..1.0).contains(&m) {
                return Err(UnsupervisedError::InvalidArgument(format!(
                    "momentum must lie in [0, 1), got {m}"
                )));
            }
        }
        Ok(())
    }
}

/// A finished layout plus the KL divergence trace: entry 0 is the
/// divergence of the random initial layout, entry i the divergence
/// after update i. The trace always measures against the true
/// (unexaggerated) P, so entries are comparable across the whole run.
#[derive(Debug, Clone)]
pub struct TsneEmbedding {
    pub layout: Tensor<f64>,
    pub kl_trace: Vec<f64>,
}

impl TsneEmbedding {
    pub fn initial_kl(&self) -> f64 {
        self.kl_trace[0]
    }

    pub fn final_kl(&self) -> f64 {
        *self.kl_trace.last().expect("trace is never empty")
    }
}

pub fn tsne(x: &Tensor<f64>, config: &TsneConfig) -> Result<TsneEmbedding> {
    let (n, _) = validate_points(x, "t-SNE", 5)?;
    config.validate()?;
    let perplexity = resolve_perplexity(config.perplexity, n)?;

    let p = symmetric_affinities(x, perplexity)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut y = vec![0.0f64; n * 2];
    for v in &mut y {
        let noise: f64 = StandardNormal.sample(&mut rng);
        *v = noise * INIT_SCALE;
    }

    let mut velocity = vec![0.0f64; n * 2];
    let mut gains = vec![1.0f64; n * 2];
    let mut grad = vec![0.0f64; n * 2];
    let mut q_weights = vec![0.0f64; n * n];
    let mut kl_trace = Vec::with_capacity(config.iterations + 1);

    for iter in 0..config.iterations {
        let q_sum = student_t_weights(&y, n, &mut q_weights);
        kl_trace.push(kl_divergence(&p, &q_weights, q_sum, n));

        let exaggeration = if iter < config.exaggeration_iters {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < config.momentum_switch_iter {
            config.initial_momentum
        } else {
            config.final_momentum
        };

        // dC/dy_i = 4 sum_j (p_ij - q_ij) w_ij (y_i - y_j), with
        // w_ij = 1/(1 + |y_i - y_j|^2) and q_ij = w_ij / q_sum.
        grad.fill(0.0);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = q_weights[i * n + j];
                let coeff = 4.0 * (exaggeration * p[i * n + j] - w / q_sum) * w;
                grad[i * 2] += coeff * (y[i * 2] - y[j * 2]);
                grad[i * 2 + 1] += coeff * (y[i * 2 + 1] - y[j * 2 + 1]);
            }
        }
        // Per-coordinate gains grow while a coordinate keeps moving the
        // same way and shrink when it reverses, which is what lets one
        // learning rate serve every input scale.
        for (((y_v, v), gain), g) in y
            .iter_mut()
            .zip(&mut velocity)
            .zip(&mut gains)
            .zip(&grad)
        {
            *gain = if g.signum() == v.signum() {
                (*gain * 0.8).max(0.01)
            } else {
                *gain + 0.2
            };
            *v = momentum * *v - config.learning_rate * *gain * g;
            *y_v += *v;
        }
        recenter(&mut y, n);
    }
    let q_sum = student_t_weights(&y, n, &mut q_weights);
    kl_trace.push(kl_divergence(&p, &q_weights, q_sum, n));

    let layout = Tensor::from_vec(vec![n, 2], y).map_err(UnsupervisedError::Core)?;
    Ok(TsneEmbedding { layout, kl_trace })
}

fn resolve_perplexity(requested: Option<f64>, n: usize) -> Result<f64> {
    let cap = (n - 1) as f64 / 3.0;
    match requested {
        Some(p) => {
            if !(p.is_finite() && p > 1.0 && p < cap) {
                Err(UnsupervisedError::PerplexityInfeasible {
                    perplexity: p,
                    points: n,
                })
            } else {
                Ok(p)
            }
        }
        None => Ok(30.0f64.min(cap)),
    }
}

/// Row-stochastic conditional affinities: row i holds P(j | i) with a
/// zero diagonal, each row's Gaussian bandwidth solved so the realized
/// perplexity exp(H) matches `perplexity` within 1e-4.
pub fn conditional_affinities(x: &Tensor<f64>, perplexity: f64) -> Result<Tensor<f64>> {
    let (n, _) = validate_points(x, "t-SNE affinities", 5)?;
    if !(perplexity.is_finite() && perplexity > 1.0 && perplexity <= (n - 1) as f64) {
        return Err(UnsupervisedError::PerplexityInfeasible {
            perplexity,
            points: n,
        });
    }

    let mut sq = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_dist(x.row(i), x.row(j));
            sq[i * n + j] = d;
            sq[j * n + i] = d;
        }
    }

    let mut p = vec![0.0f64; n * n];
    let mut energies = vec![0.0f64; n - 1];
    for i in 0..n {
        // Shift each row's squared distances so the smallest is zero;
        // the conditional distribution is shift-invariant and the
        // exponentials stay in range.
        let row = &sq[i * n..(i + 1) * n];
        let base = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &d)| d)
            .fold(f64::INFINITY, f64::min);
        for (slot, (_, &d)) in energies
            .iter_mut()
            .zip(row.iter().enumerate().filter(|&(j, _)| j != i))
        {
            *slot = d - base;
        }

        let beta = solve_bandwidth(&energies, perplexity).ok_or_else(|| {
            UnsupervisedError::NumericalFailure(format!(
                "could not match perplexity {perplexity} for point {i}; \
                 are its neighbors all coincident?"
            ))
        })?;

        let mut sum = 0.0;
        let mut k = 0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let w = (-beta * energies[k]).exp();
            p[i * n + j] = w;
            sum += w;
            k += 1;
        }
        let inv = 1.0 / sum;
        for j in 0..n {
            p[i * n + j] *= inv;
        }
    }
    Tensor::from_vec(vec![n, n], p).map_err(Into::into)
}

/// Bisection on the precision beta so that the distribution
/// p_j ∝ exp(-beta e_j) has perplexity exp(H) within tolerance of the
/// target. Returns None when no bandwidth can reach the target (all
/// energies equal).
fn solve_bandwidth(energies: &[f64], target: f64) -> Option<f64> {
    let mut beta = 1.0f64;
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    let mut best = (f64::INFINITY, beta);
    for _ in 0..MAX_BISECTIONS {
        let realized = realized_perplexity(energies, beta);
        let miss = realized - target;
        if miss.abs() < best.0 {
            best = (miss.abs(), beta);
        }
        if miss.abs() <= PERPLEXITY_TOLERANCE {
            return Some(beta);
        }
        if miss > 0.0 {
            // Distribution too spread out: sharpen.
            lo = Some(beta);
            beta = match hi {
                Some(h) => 0.5 * (beta + h),
                None => beta * 2.0,
            };
        } else {
            hi = Some(beta);
            beta = match lo {
                Some(l) => 0.5 * (beta + l),
                None => beta * 0.5,
            };
        }
    }
    // The interval has collapsed to rounding noise without reaching the
    // tolerance: only possible when the target is unreachable.
    let _ = best;
    None
}

/// exp(H) of the normalized distribution p_j ∝ exp(-beta e_j).
fn realized_perplexity(energies: &[f64], beta: f64) -> f64 {
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for &e in energies {
        let w = (-beta * e).exp();
        sum += w;
        weighted += e * w;
    }
    // H = ln(sum) + beta * E[e]
    (sum.ln() + beta * weighted / sum).exp()
}

/// Symmetrized affinities p_ij = (P(j|i) + P(i|j)) / 2N.
fn symmetric_affinities(x: &Tensor<f64>, perplexity: f64) -> Result<Vec<f64>> {
    let cond = conditional_affinities(x, perplexity)?;
    let n = cond.shape()[0];
    let c = cond.data();
    let scale = 1.0 / (2.0 * n as f64);
    let mut p = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (c[i * n + j] + c[j * n + i]) * scale;
        }
    }
    Ok(p)
}

/// Fill `weights` with w_ij = 1/(1 + |y_i - y_j|^2) (zero diagonal) and
/// return their total.
fn student_t_weights(y: &[f64], n: usize, weights: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        weights[i * n + i] = 0.0;
        for j in (i + 1)..n {
            let dx = y[i * 2] - y[j * 2];
            let dy = y[i * 2 + 1] - y[j * 2 + 1];
            let w = 1.0 / (1.0 + dx * dx + dy * dy);
            weights[i * n + j] = w;
            weights[j * n + i] = w;
            sum += 2.0 * w;
        }
    }
    sum
}

/// KL(P || Q) over distinct pairs, guarding q against underflow.
fn kl_divergence(p: &[f64], q_weights: &[f64], q_sum: f64, n: usize) -> f64 {
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[i * n + j];
            if pij > 0.0 {
                let qij = (q_weights[i * n + j] / q_sum).max(1e-12);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

fn recenter(y: &mut [f64], n: usize) {
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        cx += y[i * 2];
        cy += y[i * 2 + 1];
    }
    cx /= n as f64;
    cy /= n as f64;
    for i in 0..n {
        y[i * 2] -= cx;
        y[i * 2 + 1] -= cy;
    }
}
