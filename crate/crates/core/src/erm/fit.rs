use serde::{Deserialize, Serialize};

use super::{Dataset, ErmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Loss {
    /// `log(1 + exp(−y f·x))`
    #[default]
    Logistic,
}

impl Loss {
    /// Loss at margin `t = y f·x`, evaluated without overflow.
    pub fn value(self, margin: f64) -> f64 {
        match self {
            Loss::Logistic => {
                if margin > 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                }
            }
        }
    }

    /// `value(margin + delta) − value(margin)` without cancellation for small `delta`.
    pub fn change(self, margin: f64, delta: f64) -> f64 {
        match self {
            Loss::Logistic => {
                if delta.abs() > 1.0 {
                    return self.value(margin + delta) - self.value(margin);
                }
                // softplus(u + h) − softplus(u) = ln(1 + s(u)(e^h − 1)), u = −t, h = −δ
                let u = -margin;
                let sigmoid = if u > 0.0 {
                    1.0 / (1.0 + (-u).exp())
                } else {
                    u.exp() / (1.0 + u.exp())
                };
                (sigmoid * (-delta).exp_m1()).ln_1p()
            }
        }
    }

    /// Derivative with respect to the margin.
    pub fn slope(self, margin: f64) -> f64 {
        match self {
            Loss::Logistic => {
                if margin > 0.0 {
                    let e = (-margin).exp();
                    -e / (1.0 + e)
                } else {
                    -1.0 / (1.0 + margin.exp())
                }
            }
        }
    }
}

/// Regularised empirical risk minimisation settings; `R(f) = ½‖f‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmConfig {
    pub rho: f64,
    pub loss: Loss,
    pub max_iters: usize,
    pub grad_tolerance: f64,
}

impl Default for ErmConfig {
    fn default() -> Self {
        Self {
            rho: 0.1,
            loss: Loss::Logistic,
            max_iters: 20_000,
            grad_tolerance: 1e-8,
        }
    }
}

impl ErmConfig {
    pub fn validate(&self) -> Result<(), ErmError> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(ErmError::Config(format!(
                "rho must be positive (got {})",
                self.rho
            )));
        }
        if self.grad_tolerance.is_nan() || self.grad_tolerance <= 0.0 {
            return Err(ErmError::Config(format!(
                "grad_tolerance must be positive (got {})",
                self.grad_tolerance
            )));
        }
        Ok(())
    }

    /// `ρR(f)`.
    pub fn penalty(&self, weights: &[f64]) -> f64 {
        0.5 * self.rho * dot(weights, weights)
    }

    /// `ρR(f) + (1/N) Σ l(z_i, f)`.
    pub fn objective(&self, weights: &[f64], data: &Dataset) -> f64 {
        let risk: f64 = data
            .records()
            .map(|(x, y)| self.loss.value(y * dot(weights, x)))
            .sum::<f64>()
            / data.len() as f64;
        self.penalty(weights) + risk
    }

    /// `objective(weights + step·direction) − objective(weights)`, accurate
    /// even when the change is far below the objective's rounding error.
    pub fn objective_change(
        &self,
        weights: &[f64],
        direction: &[f64],
        step: f64,
        data: &Dataset,
    ) -> f64 {
        let penalty: f64 = weights
            .iter()
            .zip(direction)
            .map(|(w, p)| step * p * (2.0 * w + step * p))
            .sum::<f64>()
            * 0.5
            * self.rho;
        let risk = data
            .records()
            .map(|(x, y)| {
                self.loss
                    .change(y * dot(weights, x), step * y * dot(direction, x))
            })
            .sum::<f64>()
            / data.len() as f64;
        penalty + risk
    }

    pub fn gradient(&self, weights: &[f64], data: &Dataset) -> Vec<f64> {
        let n = data.len() as f64;
        let mut grad: Vec<f64> = weights.iter().map(|w| self.rho * w).collect();
        for (x, y) in data.records() {
            let scale = y * self.loss.slope(y * dot(weights, x)) / n;
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += scale * xi;
            }
        }
        grad
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear classifier `x ↦ sign(f·x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub weights: Vec<f64>,
}

impl Classifier {
    pub fn zeros(d: usize) -> Self {
        Self {
            weights: vec![0.0; d],
        }
    }

    pub fn norm(&self) -> f64 {
        dot(&self.weights, &self.weights).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub classifier: Classifier,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Objective after each accepted step, starting from `f = 0`, accumulated
    /// from exactly computed step changes.
    pub objective_history: Vec<f64>,
}

/// Quasi-Newton descent from `f = 0`: a BFGS inverse-curvature estimate built
/// from gradients only, with Armijo backtracking on every step so the objective
/// never increases. Falls back to the steepest-descent direction whenever the
/// estimate stops producing a descent direction.
pub fn erm_fit(data: &Dataset, config: &ErmConfig) -> Result<Fit, ErmError> {
    config.validate()?;
    if data.is_empty() {
        return Err(ErmError::Config("cannot fit an empty dataset".into()));
    }
    let d = data.dim();
    let mut weights = vec![0.0; d];
    let mut value = config.objective(&weights, data);
    let mut grad = config.gradient(&weights, data);
    let mut grad_norm = dot(&grad, &grad).sqrt();
    let mut history = vec![value];

    // initial curvature guess 1/L with L bounded by ρ + ¼·mean‖x‖²
    let mean_sq = data.features().iter().map(|x| x * x).sum::<f64>() / data.len() as f64;
    let initial_scale = 1.0 / (config.rho + 0.25 * mean_sq);
    let mut inverse = scaled_identity(d, initial_scale);
    let mut iterations = 0;
    let mut candidate = vec![0.0; d];

    while grad_norm > config.grad_tolerance && iterations < config.max_iters {
        iterations += 1;
        let mut direction: Vec<f64> = mat_vec(&inverse, &grad).into_iter().map(|v| -v).collect();
        let mut slope = dot(&direction, &grad);
        if slope.is_nan() || slope >= 0.0 {
            inverse = scaled_identity(d, initial_scale);
            direction = grad.iter().map(|g| -initial_scale * g).collect();
            slope = dot(&direction, &grad);
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let change = config.objective_change(&weights, &direction, step, data);
            if change <= 1e-4 * step * slope {
                for ((c, w), p) in candidate.iter_mut().zip(&weights).zip(&direction) {
                    *c = w + step * p;
                }
                value += change;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // rounding noise dominates the remaining decrease
            break;
        }
        let next_grad = config.gradient(&candidate, data);
        let s: Vec<f64> = candidate.iter().zip(&weights).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        bfgs_update(&mut inverse, &s, &y);
        std::mem::swap(&mut weights, &mut candidate);
        grad = next_grad;
        grad_norm = dot(&grad, &grad).sqrt();
        history.push(value);
    }

    Ok(Fit {
        classifier: Classifier { weights },
        converged: grad_norm <= config.grad_tolerance,
        iterations,
        grad_norm,
        objective_history: history,
    })
}

fn scaled_identity(d: usize, scale: f64) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = scale;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    m.chunks_exact(v.len()).map(|row| dot(row, v)).collect()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1/(yᵀs)`; skipped when
/// the curvature condition fails.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64]) {
    let sy = dot(s, y);
    let floor = 1e-12 * dot(s, s).sqrt() * dot(y, y).sqrt();
    if sy.is_nan() || sy <= floor {
        return;
    }
    let r = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let d = s.len();
    for i in 0..d {
        for j in 0..d {
            h[i * d + j] += -r * (s[i] * hy[j] + hy[i] * s[j]) + (r * r * yhy + r) * s[i] * s[j];
        }
    }
}
