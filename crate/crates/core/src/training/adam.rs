use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MixaeParams;
use crate::numerics::Tensor;
use crate::scalar::Scalar;

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_eps(),
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| (0.0..1.0).contains(&b);
        if !unit(self.beta1) || !unit(self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::Config("adam requires 0 <= beta1, beta2 < 1 and epsilon > 0".into()));
        }
        Ok(())
    }
}

/// First/second moment estimates, one pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: Vec<Tensor<T>>,
    pub second_moment: Vec<Tensor<T>>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &MixaeParams<T>) -> Self {
        let zeros: Vec<Tensor<T>> = params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        AdamState {
            second_moment: zeros.clone(),
            first_moment: zeros,
            step: 0,
        }
    }
}

/// One bias-corrected ADAM update of every parameter tensor.
pub fn adam_step<T: Scalar>(
    params: &mut MixaeParams<T>,
    grads: &MixaeParams<T>,
    state: &mut AdamState<T>,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    let grads = grads.tensors();
    let mut params = params.tensors_mut();
    if grads.len() != params.len() || state.first_moment.len() != params.len() {
        return Err(Error::dim("adam_step", &[params.len()], &[grads.len(), state.first_moment.len()]));
    }
    for (i, (p, g)) in params.iter().zip(&grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.first_moment[i].shape() {
            return Err(Error::dim("adam_step", p.shape(), g.shape()));
        }
        if let Some(j) = g.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                term: "adam_step",
                detail: format!("non-finite gradient in parameter tensor {i} {:?} at flat index {j}", g.shape()),
            });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let bias1 = T::one() - T::of(cfg.beta1.powi(t));
    let bias2 = T::one() - T::of(cfg.beta2.powi(t));
    let lr = T::of(lr);
    let eps = T::of(cfg.epsilon);
    for (i, (p, g)) in params.iter_mut().zip(&grads).enumerate() {
        let m = state.first_moment[i].data_mut();
        let v = state.second_moment[i].data_mut();
        for (((w, &gv), mv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mv = b1 * *mv + (T::one() - b1) * gv;
            *vv = b2 * *vv + (T::one() - b2) * gv * gv;
            let m_hat = *mv / bias1;
            let v_hat = *vv / bias2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::numerics::SeededRng;

    fn scalar_params(w: f64) -> MixaeParams<f64> {
        // smallest model; only the first weight is touched by the test gradient
        let mut cfg = ModelConfig::new(2, 1, 2);
        cfg.encoder_hidden = vec![];
        cfg.man_hidden = vec![];
        let mut p = MixaeParams::zeros(&cfg);
        p.autoencoders[0].encoder[0].weight.data_mut()[0] = w;
        p
    }

    #[test]
    fn single_step_matches_hand_formula() {
        let mut p = scalar_params(0.5);
        let mut g = p.zeros_like();
        g.autoencoders[0].encoder[0].weight.data_mut()[0] = 1.0;
        let mut st = AdamState::new(&p);
        let cfg = AdamConfig::default();
        adam_step(&mut p, &g, &mut st, 0.001, &cfg).unwrap();
        // m̂ = 1, v̂ = 1 after one step with g = 1
        let expected = 0.5 - 0.001 * 1.0 / (1.0 + 1e-8);
        assert!((p.autoencoders[0].encoder[0].weight.data()[0] - expected).abs() < 1e-15);
        assert!((st.first_moment[0].data()[0] - 0.1).abs() < 1e-15);
        assert!((st.second_moment[0].data()[0] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut p = scalar_params(0.5);
        let mut g = p.zeros_like();
        g.autoencoders[0].encoder[0].weight.data_mut()[0] = 1.0;
        let mut st = AdamState::new(&p);
        let cfg = AdamConfig::default();
        adam_step(&mut p, &g, &mut st, 0.0, &cfg).unwrap();
        let before = p.clone();
        let m0 = st.first_moment[0].data()[0];
        let zero = p.zeros_like();
        adam_step(&mut p, &zero, &mut st, 0.0, &cfg).unwrap();
        assert_eq!(p, before);
        assert!((st.first_moment[0].data()[0] - 0.9 * m0).abs() < 1e-15);
        // a parameter that never saw a gradient does not move even with lr > 0
        let mut q = scalar_params(0.5);
        let mut st = AdamState::new(&q);
        let zero = q.zeros_like();
        adam_step(&mut q, &zero, &mut st, 0.1, &cfg).unwrap();
        assert_eq!(q, scalar_params(0.5));
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = scalar_params(0.5);
        let mut g = p.zeros_like();
        g.man[0].bias.data_mut()[1] = f64::NAN;
        let mut st = AdamState::new(&p);
        let err = adam_step(&mut p, &g, &mut st, 0.001, &AdamConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
        assert_eq!(st.step, 0);
    }

    #[test]
    fn deterministic() {
        let cfg = ModelConfig::new(6, 2, 2);
        let run = || {
            let mut p = MixaeParams::<f64>::init(&cfg, &SeededRng::new(3)).unwrap();
            let g = MixaeParams::<f64>::init(&cfg, &SeededRng::new(4)).unwrap();
            let mut st = AdamState::new(&p);
            for _ in 0..3 {
                adam_step(&mut p, &g, &mut st, 0.01, &AdamConfig::default()).unwrap();
            }
            p.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
