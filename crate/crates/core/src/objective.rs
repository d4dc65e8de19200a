//! The composite clustering objective
//!
//! ```text
//! J = mean_i [ Σ_k p_ik L(x_i, x̃_ik) + α H(p_i) ] − β H(p̄),   p̄ = mean_i p_i
//! ```
//!
//! with its gradients with respect to the assignments and reconstructions,
//! and the α/β schedule that balances the three terms during training.
//! Logarithms are natural and `0 · log 0 = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OutputGrads;
use crate::numerics::Tensor;
use crate::scalar::Scalar;

/// Clamp applied to reconstructions before taking logs in BCE.
pub const BCE_EPSILON: f64 = 1e-7;

/// Allowed deviation of an assignment row from the probability simplex.
pub const SIMPLEX_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReconstructionKind {
    /// Mean squared error over features.
    #[default]
    Mse,
    /// Mean binary cross-entropy over features; data must lie in [0, 1].
    Bce,
}

impl std::str::FromStr for ReconstructionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(ReconstructionKind::Mse),
            "bce" => Ok(ReconstructionKind::Bce),
            other => Err(Error::Config(format!("unknown reconstruction loss `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Config(format!("loss weights must be finite and non-negative, got α={alpha}, β={beta}")));
        }
        Ok(LossWeights { alpha, beta })
    }
}

/// Values of the three terms for one batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub weighted_reconstruction: f64,
    pub sample_entropy_mean: f64,
    pub batch_entropy: f64,
    pub total: f64,
    pub weights: LossWeights,
}

impl LossBreakdown {
    pub fn from_terms(reconstruction: f64, sample_entropy: f64, batch_entropy: f64, weights: LossWeights) -> Self {
        LossBreakdown {
            weighted_reconstruction: reconstruction,
            sample_entropy_mean: sample_entropy,
            batch_entropy,
            total: reconstruction + weights.alpha * sample_entropy - weights.beta * batch_entropy,
            weights,
        }
    }
}

fn same_shape<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, op: &'static str) -> Result<()> {
    a.ensure_matrix(op)?;
    if a.shape() != b.shape() {
        return Err(Error::dim(op, a.shape(), b.shape()));
    }
    Ok(())
}

fn check_bce_domain<T: Scalar>(x: &Tensor<T>, x_tilde: &Tensor<T>) -> Result<()> {
    let unit = |v: &T| *v >= T::zero() && *v <= T::one();
    if let Some(i) = x.data().iter().position(|v| !unit(v)) {
        return Err(Error::Input(format!("bce target outside [0, 1] at flat index {i}: {}", x.data()[i])));
    }
    if let Some(i) = x_tilde.data().iter().position(|v| !unit(v)) {
        return Err(Error::Input(format!("bce reconstruction outside [0, 1] at flat index {i}: {}", x_tilde.data()[i])));
    }
    Ok(())
}

/// Per-sample loss `L(x_i, x̃_i)`, shape `[B]`.
pub fn reconstruction_loss<T: Scalar>(x: &Tensor<T>, x_tilde: &Tensor<T>, kind: ReconstructionKind) -> Result<Tensor<T>> {
    same_shape(x, x_tilde, "reconstruction_loss")?;
    let inv_n = T::one() / T::of(x.cols() as f64);
    let out = match kind {
        ReconstructionKind::Mse => x
            .row_iter()
            .zip(x_tilde.row_iter())
            .map(|(a, b)| a.iter().zip(b).map(|(&u, &v)| (v - u) * (v - u)).sum::<T>() * inv_n)
            .collect(),
        ReconstructionKind::Bce => {
            check_bce_domain(x, x_tilde)?;
            let eps = T::of(BCE_EPSILON);
            x.row_iter()
                .zip(x_tilde.row_iter())
                .map(|(a, b)| {
                    a.iter()
                        .zip(b)
                        .map(|(&t, &y)| {
                            let c = y.max(eps).min(T::one() - eps);
                            -(t * c.ln() + (T::one() - t) * (T::one() - c).ln())
                        })
                        .sum::<T>()
                        * inv_n
                })
                .collect()
        }
    };
    Ok(Tensor::vector(out))
}

/// `∂L(x_i, x̃_i)/∂x̃_i`, shape `[B × n]`. Zero where the BCE clamp is active.
pub fn reconstruction_loss_grad<T: Scalar>(
    x: &Tensor<T>,
    x_tilde: &Tensor<T>,
    kind: ReconstructionKind,
) -> Result<Tensor<T>> {
    same_shape(x, x_tilde, "reconstruction_loss_grad")?;
    let inv_n = T::one() / T::of(x.cols() as f64);
    match kind {
        ReconstructionKind::Mse => x_tilde.zip_map(x, "reconstruction_loss_grad", |y, t| T::of(2.0) * (y - t) * inv_n),
        ReconstructionKind::Bce => {
            check_bce_domain(x, x_tilde)?;
            let eps = T::of(BCE_EPSILON);
            x_tilde.zip_map(x, "reconstruction_loss_grad", |y, t| {
                if y < eps || y > T::one() - eps {
                    T::zero()
                } else {
                    (-t / y + (T::one() - t) / (T::one() - y)) * inv_n
                }
            })
        }
    }
}

/// Rejects assignment matrices whose rows leave the simplex.
pub fn check_simplex<T: Scalar>(p: &Tensor<T>) -> Result<()> {
    p.ensure_matrix("check_simplex")?;
    let tol = SIMPLEX_TOLERANCE;
    for (i, row) in p.row_iter().enumerate() {
        let sum: f64 = row.iter().map(|v| v.as_f64()).sum();
        if !(sum - 1.0).abs().le(&tol) || row.iter().any(|v| !(v.as_f64() >= -tol)) {
            return Err(Error::Input(format!("assignment row {i} is not on the simplex (sum {sum})")));
        }
    }
    Ok(())
}

/// `−Σ v log v` with `0 · log 0 = 0`.
pub fn entropy<T: Scalar>(v: &[T]) -> T {
    v.iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| -p * p.ln())
        .sum()
}

/// Mean over the batch of `Σ_k p_ik L_ik`.
pub fn weighted_reconstruction<T: Scalar>(per_ae_losses: &Tensor<T>, p: &Tensor<T>) -> Result<T> {
    same_shape(per_ae_losses, p, "weighted_reconstruction")?;
    check_simplex(p)?;
    let total: T = per_ae_losses
        .row_iter()
        .zip(p.row_iter())
        .map(|(l, w)| l.iter().zip(w).map(|(&a, &b)| a * b).sum::<T>())
        .sum();
    Ok(total / T::of(p.rows() as f64))
}

/// Per-row entropy, shape `[B]`.
pub fn sample_entropy<T: Scalar>(p: &Tensor<T>) -> Result<Tensor<T>> {
    check_simplex(p)?;
    Ok(Tensor::vector(p.row_iter().map(entropy).collect()))
}

/// Entropy of the column mean `p̄`.
pub fn batch_entropy<T: Scalar>(p: &Tensor<T>) -> Result<T> {
    check_simplex(p)?;
    Ok(entropy(p.column_means().data()))
}

/// Everything the objective consumes for one batch.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveInputs<'a, T> {
    pub x: &'a Tensor<T>,
    pub reconstructions: &'a [Tensor<T>],
    pub assignments: &'a Tensor<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveOptions {
    /// Drops the reconstruction term from `∂J/∂p`, so the assignment network
    /// learns only from the entropy terms.
    pub detach_assignments_from_reconstruction: bool,
}

fn finite(term: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical {
            term,
            detail: format!("value {v}"),
        })
    }
}

/// Evaluates the composite objective and its gradients with respect to the
/// assignments and every reconstruction.
pub fn total_loss<T: Scalar>(
    inputs: ObjectiveInputs<'_, T>,
    kind: ReconstructionKind,
    weights: LossWeights,
    options: ObjectiveOptions,
) -> Result<(LossBreakdown, OutputGrads<T>)> {
    let p = inputs.assignments;
    p.ensure_matrix("total_loss")?;
    let (b, k) = (p.rows(), p.cols());
    if inputs.reconstructions.len() != k {
        return Err(Error::dim("total_loss", &[inputs.reconstructions.len()], &[k]));
    }
    if inputs.x.rows() != b {
        return Err(Error::dim("total_loss", inputs.x.shape(), p.shape()));
    }
    check_simplex(p)?;

    let mut losses = Tensor::zeros(&[b, k]);
    let mut loss_grads = Vec::with_capacity(k);
    for (j, xt) in inputs.reconstructions.iter().enumerate() {
        let l = reconstruction_loss(inputs.x, xt, kind)?;
        for (i, &v) in l.data().iter().enumerate() {
            losses.set(i, j, v);
        }
        loss_grads.push(reconstruction_loss_grad(inputs.x, xt, kind)?);
    }

    let recon = finite("weighted_reconstruction", weighted_reconstruction(&losses, p)?.as_f64())?;
    let se = finite("sample_entropy", (sample_entropy(p)?.sum() / T::of(b as f64)).as_f64())?;
    let p_bar = p.column_means();
    let be = finite("batch_entropy", entropy(p_bar.data()).as_f64())?;
    let breakdown = LossBreakdown::from_terms(recon, se, be, weights);
    finite("total", breakdown.total)?;

    let inv_b = T::one() / T::of(b as f64);
    let alpha = T::of(weights.alpha);
    let beta = T::of(weights.beta);
    let recon_coeff = if options.detach_assignments_from_reconstruction { T::zero() } else { T::one() };
    let tiny = T::min_positive_value();
    let bar_terms: Vec<T> = p_bar.data().iter().map(|&m| beta * (m.max(tiny).ln() + T::one())).collect();
    let mut d_p = Tensor::zeros(&[b, k]);
    for i in 0..b {
        for j in 0..k {
            let pij = p.get(i, j);
            let g = recon_coeff * losses.get(i, j) - alpha * (pij.max(tiny).ln() + T::one()) + bar_terms[j];
            d_p.set(i, j, g * inv_b);
        }
    }
    let mut d_recon = loss_grads;
    for (j, g) in d_recon.iter_mut().enumerate() {
        for i in 0..b {
            let w = p.get(i, j) * inv_b;
            g.row_mut(i).iter_mut().for_each(|v| *v *= w);
        }
    }
    if !d_p.is_finite() || d_recon.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical {
            term: "objective gradient",
            detail: "non-finite gradient".into(),
        });
    }
    Ok((
        breakdown,
        OutputGrads {
            assignments: d_p,
            reconstructions: d_recon,
        },
    ))
}

/// Epoch means of the raw (unweighted) terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TermAverages {
    pub reconstruction: f64,
    pub sample_entropy: f64,
    pub batch_entropy: f64,
}

fn default_warmup_epochs() -> usize {
    5
}
fn default_warmup_ratio() -> f64 {
    10.0
}
fn default_warmup_sample_ratio() -> f64 {
    1.0
}
fn default_min_weight() -> f64 {
    1e-3
}
fn default_max_weight() -> f64 {
    1e3
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_max_alpha_over_beta() -> Option<f64> {
    Some(1.0)
}

/// α/β schedule.
///
/// During warm-up the batch-entropy term is weighted to be `warmup_ratio`
/// times the initial reconstruction term and the sample-entropy term
/// `warmup_sample_ratio` times. Afterwards, at every epoch end, the
/// weights are reset so that each weighted entropy term matches the mean
/// reconstruction term of the epoch just finished. `fixed_alpha` /
/// `fixed_beta` pin a weight for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "default_warmup_epochs")]
    pub warmup_epochs: usize,
    #[serde(default = "default_warmup_ratio")]
    pub warmup_ratio: f64,
    /// Warm-up target for the sample-entropy term, relative to the initial
    /// reconstruction term. Kept below `warmup_ratio` so clusters balance
    /// before assignments sharpen.
    #[serde(default = "default_warmup_sample_ratio")]
    pub warmup_sample_ratio: f64,
    #[serde(default = "default_min_weight")]
    pub min_weight: f64,
    #[serde(default = "default_max_weight")]
    pub max_weight: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Upper bound on α/β applied after equalization (default 1).
    #[serde(default = "default_max_alpha_over_beta")]
    pub max_alpha_over_beta: Option<f64>,
    #[serde(default)]
    pub fixed_alpha: Option<f64>,
    #[serde(default)]
    pub fixed_beta: Option<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            warmup_epochs: default_warmup_epochs(),
            warmup_ratio: default_warmup_ratio(),
            warmup_sample_ratio: default_warmup_sample_ratio(),
            min_weight: default_min_weight(),
            max_weight: default_max_weight(),
            epsilon: default_epsilon(),
            max_alpha_over_beta: default_max_alpha_over_beta(),
            fixed_alpha: None,
            fixed_beta: None,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_weight >= 0.0 && self.min_weight <= self.max_weight && self.epsilon > 0.0 && self.warmup_ratio > 0.0
            && self.warmup_sample_ratio > 0.0) {
            return Err(Error::Config("schedule bounds must satisfy 0 <= min_weight <= max_weight, epsilon > 0 and positive warm-up ratios".into()));
        }
        for v in [self.fixed_alpha, self.fixed_beta].into_iter().flatten() {
            LossWeights::new(v, v)?;
        }
        if let Some(r) = self.max_alpha_over_beta {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("max_alpha_over_beta must be positive and finite, got {r}")));
            }
        }
        Ok(())
    }

    fn clip(&self, v: f64) -> f64 {
        v.clamp(self.min_weight, self.max_weight)
    }

    fn pin(&self, w: LossWeights) -> LossWeights {
        LossWeights {
            alpha: self.fixed_alpha.unwrap_or(w.alpha),
            beta: self.fixed_beta.unwrap_or(w.beta),
        }
    }

    /// Warm-up weights from the term values of the untrained model.
    pub fn initial_weights(&self, initial: TermAverages) -> LossWeights {
        let ratio = |target_ratio: f64, term: f64| {
            let target = target_ratio * initial.reconstruction;
            if target > 0.0 && term > 0.0 && target.is_finite() {
                self.clip(target / term.max(self.epsilon))
            } else {
                1.0
            }
        };
        self.pin(LossWeights {
            alpha: ratio(self.warmup_sample_ratio, initial.sample_entropy),
            beta: ratio(self.warmup_ratio, initial.batch_entropy),
        })
    }

    /// Weights for `next_epoch`, given the previous epoch's term averages.
    pub fn weights_for_epoch(&self, next_epoch: usize, averages: TermAverages, current: LossWeights) -> LossWeights {
        if next_epoch < self.warmup_epochs {
            return current;
        }
        update_weights(averages, current, self)
    }
}

/// Equalization rule: `α = R̄ / S̄`, `β = R̄ / B̄`, clipped to the configured
/// bounds. A non-positive (or non-finite) average leaves the corresponding
/// weight unchanged.
pub fn update_weights(averages: TermAverages, current: LossWeights, cfg: &ScheduleConfig) -> LossWeights {
    let r = averages.reconstruction;
    let valid = |v: f64| v > 0.0 && v.is_finite();
    if !valid(r) {
        return cfg.pin(current);
    }
    let alpha = if valid(averages.sample_entropy) {
        cfg.clip(r / averages.sample_entropy.max(cfg.epsilon))
    } else {
        current.alpha
    };
    let beta = if valid(averages.batch_entropy) {
        cfg.clip(r / averages.batch_entropy.max(cfg.epsilon))
    } else {
        current.beta
    };
    let alpha = match cfg.max_alpha_over_beta {
        Some(ratio) => alpha.min(ratio * beta).max(cfg.min_weight),
        None => alpha,
    };
    cfg.pin(LossWeights { alpha, beta })
}
