//! Adam with bias correction and a step-decay learning-rate schedule.

use serde::{Deserialize, Serialize};

use super::network::{Gradients, Network};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    /// Multiplicative decay applied once every `decay_interval` steps.
    pub decay: f64,
    pub decay_interval: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_schedule(lr: f64, decay: f64, decay_interval: u64) -> Self {
        Self {
            lr,
            decay,
            decay_interval,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Learning rate used by the update with zero-based index `step`.
    pub fn lr_at(&self, step: u64) -> f64 {
        let k = step / self.decay_interval.max(1);
        self.lr * self.decay.powi(k as i32)
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Vec<Vec<f32>>,
    second: Vec<Vec<f32>>,
    step: u64,
}

impl AdamState {
    pub fn new(net: &Network, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f32>> = net.params().iter().flatten().map(|t| vec![0.0; t.len()]).collect();
        Self {
            config,
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }

    /// Number of updates applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn current_lr(&self) -> f64 {
        self.config.lr_at(self.step)
    }
}

pub fn adam_step(net: &mut Network, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    let n_params = net.params().iter().flatten().count();
    if grads.iter().count() != n_params || state.first.len() != n_params {
        return Err(Error::Shape(format!(
            "adam: {} gradients / {} moments for {n_params} parameters",
            grads.iter().count(),
            state.first.len()
        )));
    }
    let cfg = state.config;
    let lr = cfg.lr_at(state.step);
    let t = (state.step + 1) as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let params = net.params_mut().iter_mut().flatten();
    for (((p, g), m), v) in params
        .zip(grads.iter())
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        if p.shape() != g.shape() {
            return Err(Error::Shape(format!(
                "gradient {:?} for parameter {:?}",
                g.shape(),
                p.shape()
            )));
        }
        for (((w, &g), m), v) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            let g = g as f64;
            let m_new = cfg.beta1 * *m as f64 + (1.0 - cfg.beta1) * g;
            let v_new = cfg.beta2 * *v as f64 + (1.0 - cfg.beta2) * g * g;
            *m = m_new as f32;
            *v = v_new as f32;
            let update = lr * (m_new / bc1) / ((v_new / bc2).sqrt() + cfg.eps);
            *w = (*w as f64 - update) as f32;
        }
    }
    state.step += 1;
    Ok(())
}
