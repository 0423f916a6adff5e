//! One-vs-rest kernel SVM trained with a deterministic SMO solver.
//!
//! The solver works on a precomputed histogram-intersection Gram matrix and
//! always picks the most violating pair (lowest index on ties), so training
//! is bit-reproducible for fixed inputs.

use rayon::prelude::*;

use super::{hik_raw, validate_feature_matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    /// Box constraint on the dual variables.
    pub c: f64,
    /// Stop once the duality gap of the working pair drops below this.
    pub tol: f64,
    /// Hard cap on pair updates per binary machine.
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tol: 1e-4,
            max_iter: 100_000,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::BadParameter(format!(
                "regularization constant must be positive and finite, got {}",
                self.c
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::BadParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::BadParameter("iteration cap must be positive".into()));
        }
        Ok(())
    }
}

/// One binary one-vs-rest machine: `alpha_y[i]` is `alpha_i * y_i` for
/// training sample `i`, so the decision value is `sum_i alpha_y[i] *
/// K(x_i, x) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMachine {
    pub alpha_y: Vec<f64>,
    pub bias: f64,
}

/// A trained multi-class model. Keeps the training features because the
/// kernel is evaluated against them at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    pub class_labels: Vec<usize>,
    pub machines: Vec<BinaryMachine>,
    pub train_features: Vec<Vec<f64>>,
    pub params: SvmParams,
}

fn gram(features: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = features.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| hik_raw(&features[i], &features[j]))
                .collect()
        })
        .collect()
}

/// Two-variable SMO on `min 1/2 a'Qa - e'a` with `Q_ij = y_i y_j K_ij`,
/// `0 <= a <= C`, `y'a = 0`. Returns the dual variables and the bias.
pub(crate) fn smo(kernel: &[Vec<f64>], y: &[f64], params: &SvmParams) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut alpha = vec![0.0f64; n];
    // grad_i = d/d alpha_i of the objective; -1 at alpha = 0.
    let mut grad = vec![-1.0f64; n];
    let c = params.c;

    let select = |alpha: &[f64], grad: &[f64]| {
        let mut up: Option<(usize, f64)> = None;
        let mut low: Option<(usize, f64)> = None;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] < 0.0 && alpha[t] < c) || (y[t] > 0.0 && alpha[t] > 0.0);
            if in_up && up.is_none_or(|(_, best)| v > best) {
                up = Some((t, v));
            }
            if in_low && low.is_none_or(|(_, best)| v < best) {
                low = Some((t, v));
            }
        }
        (up, low)
    };

    for _ in 0..params.max_iter {
        let (up, low) = select(&alpha, &grad);
        let (Some((i, m)), Some((j, mm))) = (up, low) else {
            break;
        };
        if m - mm <= params.tol {
            break;
        }
        let a = (kernel[i][i] + kernel[j][j] - 2.0 * kernel[i][j]).max(1e-12);
        let cap_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let cap_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        let d = ((m - mm) / a).min(cap_i).min(cap_j);
        alpha[i] += y[i] * d;
        alpha[j] -= y[j] * d;
        for t in 0..n {
            grad[t] += y[t] * d * (kernel[t][i] - kernel[t][j]);
        }
    }

    // Bias: average -y*grad over free vectors; fall back to the midpoint of
    // the violating-pair bracket when everything sits on a bound.
    let free: Vec<usize> = (0..n)
        .filter(|&t| alpha[t] > 0.0 && alpha[t] < c)
        .collect();
    let bias = if !free.is_empty() {
        free.iter().map(|&t| -y[t] * grad[t]).sum::<f64>() / free.len() as f64
    } else {
        let (up, low) = select(&alpha, &grad);
        match (up, low) {
            (Some((_, m)), Some((_, mm))) => 0.5 * (m + mm),
            (Some((_, m)), None) => m,
            (None, Some((_, mm))) => mm,
            (None, None) => 0.0,
        }
    };
    (alpha, bias)
}

/// Train one-vs-rest machines over the distinct labels (ascending order).
pub fn train(
    features: &[Vec<f64>],
    labels: &[usize],
    params: &SvmParams,
) -> Result<KernelModel> {
    params.validate()?;
    validate_feature_matrix(features)?;
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    let mut class_labels: Vec<usize> = labels.to_vec();
    class_labels.sort_unstable();
    class_labels.dedup();
    if class_labels.len() < 2 {
        return Err(Error::DegenerateTraining);
    }

    let k = gram(features);
    let machines = class_labels
        .iter()
        .map(|&cls| {
            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == cls { 1.0 } else { -1.0 })
                .collect();
            let (alpha, bias) = smo(&k, &y, params);
            let alpha_y = alpha.iter().zip(&y).map(|(a, yy)| a * yy).collect();
            BinaryMachine { alpha_y, bias }
        })
        .collect();

    Ok(KernelModel {
        class_labels,
        machines,
        train_features: features.to_vec(),
        params: params.clone(),
    })
}

/// Per-class decision values for one feature vector, in `class_labels` order.
pub fn decision_scores(model: &KernelModel, x: &[f64]) -> Result<Vec<f64>> {
    let kx: Vec<f64> = model
        .train_features
        .iter()
        .map(|f| super::hik(f, x))
        .collect::<Result<_>>()?;
    Ok(model
        .machines
        .iter()
        .map(|m| {
            m.alpha_y
                .iter()
                .zip(&kx)
                .map(|(ay, kv)| ay * kv)
                .sum::<f64>()
                + m.bias
        })
        .collect())
}

/// Predicted label: the class with the highest decision value, lowest label
/// winning ties.
pub fn predict(model: &KernelModel, x: &[f64]) -> Result<usize> {
    let scores = decision_scores(model, x)?;
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(model.class_labels[best])
}
