//! Adam optimizer with bias correction and optional global-norm clipping.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::Precision;
use super::tensor::Tensor;
use super::GraphError;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators and step counter for one parameter.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step(
    param: &mut Tensor,
    grad: &Tensor,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<(), GraphError> {
    if param.shape() != grad.shape() || state.m.len() != param.len() {
        return Err(GraphError::ShapeMismatch {
            op: "adam_step",
            what: "gradient",
            got: grad.shape().to_vec(),
            expected: format!("{:?}", param.shape()),
        });
    }
    state.t += 1;
    let c1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let c2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for (i, p) in param.data_mut().iter_mut().enumerate() {
        let g = grad.data()[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

/// Scales all gradients so their joint Euclidean norm is at most
/// `max_norm`. Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut BTreeMap<String, Tensor>, max_norm: f64) -> f64 {
    let mut sq = 0.0;
    for g in grads.values() {
        sq += g.data().iter().map(|v| v * v).sum::<f64>();
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.values_mut() {
            for v in g.data_mut() {
                *v *= s;
            }
        }
    }
    norm
}

/// Keeps one [`AdamState`] per named parameter. Only parameters that
/// actually receive a gradient advance their moments and step counter.
pub struct AdamOptimizer {
    cfg: AdamConfig,
    precision: Precision,
    states: BTreeMap<String, AdamState>,
}

impl AdamOptimizer {
    pub fn new(cfg: AdamConfig, precision: Precision) -> Self {
        Self {
            cfg,
            precision,
            states: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }

    pub fn step(
        &mut self,
        params: &mut BTreeMap<String, Tensor>,
        grads: &BTreeMap<String, Tensor>,
    ) -> Result<(), GraphError> {
        for (name, grad) in grads {
            let param = params.get_mut(name).ok_or(GraphError::ShapeMismatch {
                op: "adam_step",
                what: "parameter name",
                got: vec![],
                expected: name.clone(),
            })?;
            let state = self
                .states
                .entry(name.clone())
                .or_insert_with(|| AdamState::new(param.len()));
            adam_step(param, grad, state, &self.cfg)?;
            if self.precision == Precision::F32 {
                param.round_to_f32();
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_signed_learning_rate() {
        let cfg = AdamConfig::with_lr(0.01);
        let mut p = Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
        let g = Tensor::new(vec![3], vec![0.3, -0.7, 4.0]).unwrap();
        let mut st = AdamState::new(3);
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        // With zero state the bias-corrected update is lr * g / (|g| + eps).
        for (i, (&pv, &gv)) in p.data().iter().zip(g.data()).enumerate() {
            let orig = [1.0, -2.0, 0.5][i];
            let expect = orig - cfg.lr * gv / (gv.abs() + cfg.epsilon);
            assert!((pv - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let cfg = AdamConfig::with_lr(0.1);
        let mut p = Tensor::new(vec![2], vec![3.0, -1.0]).unwrap();
        let g = Tensor::zeros(vec![2]);
        let mut st = AdamState::new(2);
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        assert_eq!(p.data(), &[3.0, -1.0]);
    }

    #[test]
    fn quadratic_converges() {
        // 100 steps on f(w) = (w - 3)^2 from w = 1 at lr 0.1.
        let cfg = AdamConfig::with_lr(0.1);
        let mut p = Tensor::scalar(1.0);
        let mut st = AdamState::new(1);
        for _ in 0..100 {
            let g = Tensor::scalar(2.0 * (p.item() - 3.0));
            adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        }
        assert!((p.item() - 3.0).abs() < 1e-2, "ended at {}", p.item());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let cfg = AdamConfig::with_lr(0.1);
        let mut p = Tensor::zeros(vec![2]);
        let g = Tensor::zeros(vec![3]);
        let mut st = AdamState::new(2);
        assert!(adam_step(&mut p, &g, &mut st, &cfg).is_err());
    }

    #[test]
    fn clip_rescales_to_max_norm() {
        let mut grads = BTreeMap::new();
        grads.insert("a".to_string(), Tensor::new(vec![2], vec![3.0, 0.0]).unwrap());
        grads.insert("b".to_string(), Tensor::new(vec![1], vec![4.0]).unwrap());
        let norm = clip_global_norm(&mut grads, 1.0);
        assert!((norm - 5.0).abs() < 1e-12);
        let after: f64 = grads
            .values()
            .flat_map(|g| g.data())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        assert!((after - 1.0).abs() < 1e-12);
    }
}
