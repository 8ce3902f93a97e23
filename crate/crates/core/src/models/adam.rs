use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates per parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    /// Zero moments shaped like `shapes` (one length per tensor).
    pub fn new(shapes: &[usize]) -> Self {
        AdamState {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update over every tensor.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    cfg: &AdamConfig,
) -> Result<(), ModelError> {
    if params.len() != state.m.len() || grads.len() != params.len() {
        return Err(ModelError::DimensionMismatch { expected: state.m.len(), got: params.len() });
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.m) {
        if p.len() != m.len() || g.len() != m.len() {
            return Err(ModelError::DimensionMismatch { expected: m.len(), got: p.len() });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_first_step() {
        let mut w = [1.0];
        let mut st = AdamState::new(&[1]);
        let g = [2.0 * w[0]];
        adam_step(&mut st, &mut [&mut w], &[&g], &AdamConfig::default()).unwrap();
        assert!((w[0] - 0.999).abs() < 1e-10);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut w = [0.7, -3.0];
        let mut st = AdamState::new(&[2]);
        for _ in 0..10 {
            adam_step(&mut st, &mut [&mut w], &[&[0.0, 0.0]], &AdamConfig::default()).unwrap();
        }
        assert_eq!(w, [0.7, -3.0]);
    }

    #[test]
    fn first_step_is_scale_free() {
        let mut w = [0.0, 0.0];
        let mut st = AdamState::new(&[2]);
        adam_step(&mut st, &mut [&mut w], &[&[0.01, 0.1]], &AdamConfig::default()).unwrap();
        assert!((w[0] / w[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn shape_mismatch() {
        let mut w = [0.0; 3];
        let mut st = AdamState::new(&[2]);
        assert!(adam_step(&mut st, &mut [&mut w], &[&[0.0; 3]], &AdamConfig::default()).is_err());
    }
}
