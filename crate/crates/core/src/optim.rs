//! AdamW (decoupled weight decay) over a flat parameter vector, and the
//! linear warm-up/decay learning-rate schedule.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Global L2 gradient-norm clip; off when `None`.
    pub max_grad_norm: Option<f64>,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-6, weight_decay: 0.0, max_grad_norm: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    config: AdamWConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamW {
    pub fn new(config: AdamWConfig, n_params: usize) -> Self {
        Self { config, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &mut [f64], lr: f64) {
        let c = self.config;
        if let Some(max_norm) = c.max_grad_norm {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > max_norm {
                let scale = max_norm / (norm + 1e-6);
                grad.iter_mut().for_each(|g| *g *= scale);
            }
        }
        self.t += 1;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            params[i] *= 1.0 - lr * c.weight_decay;
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * grad[i];
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + c.eps);
        }
    }
}

/// Linear warm-up from 0 to `base` over `warmup` steps, then linear decay to 0
/// at `total` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSchedule {
    pub base: f64,
    pub warmup: usize,
    pub total: usize,
}

impl LinearSchedule {
    /// Learning rate used for optimizer step `step` (0-based); `lr(total)` is 0.
    pub fn lr(&self, step: usize) -> f64 {
        let factor = if step < self.warmup {
            step as f64 / self.warmup.max(1) as f64
        } else {
            let remaining = self.total.saturating_sub(step) as f64;
            let span = self.total.saturating_sub(self.warmup).max(1) as f64;
            (remaining / span).max(0.0)
        };
        self.base * factor
    }

    /// Rates for steps `0..=total`.
    pub fn trace(&self) -> Vec<f64> {
        (0..=self.total).map(|s| self.lr(s)).collect()
    }
}
