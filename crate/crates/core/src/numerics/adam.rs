use serde::{Deserialize, Serialize};

use super::matrix::ParamSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// L2 penalty; `l2 * param` is added to the gradient before the update.
    pub l2: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new<P: ParamSet + ?Sized>(params: &P, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.slices().iter().map(|s| vec![0.0; s.len()]).collect();
        AdamState {
            config,
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step<P: ParamSet + ?Sized>(params: &mut P, grads: &P, state: &mut AdamState) -> Result<()> {
    let grads = grads.slices();
    let mut params = params.slices_mut();
    let shapes_match = params.len() == grads.len()
        && params.len() == state.first_moment.len()
        && params
            .iter()
            .zip(&grads)
            .zip(&state.first_moment)
            .all(|((p, g), m)| p.len() == g.len() && p.len() == m.len());
    if !shapes_match {
        return Err(Error::Shape("adam: params, grads and state disagree".into()));
    }

    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
        l2,
    } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);

    for (((p, g), m), v) in params
        .iter_mut()
        .zip(&grads)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        for i in 0..p.len() {
            let gi = g[i] + l2 * p[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn no_l2() -> AdamConfig {
        AdamConfig {
            l2: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![1.0, -2.0, 3.0];
        let g = vec![0.0; 3];
        let mut s = AdamState::new(&p, no_l2());
        adam_step(&mut p, &g, &mut s).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = g and v_hat = g^2 after bias correction, so the step is
        // lr * g / (|g| + eps).
        let mut p = vec![0.0; 3];
        let g = vec![0.5, -3.0, 1e-2];
        let mut s = AdamState::new(&p, no_l2());
        adam_step(&mut p, &g, &mut s).unwrap();
        for (pi, gi) in p.iter().zip(&g) {
            let expected = -1e-3 * gi / (gi.abs() + 1e-8);
            assert!((pi - expected).abs() < 1e-15);
            assert!((pi.abs() - 1e-3).abs() < 1e-8);
        }
    }

    #[test]
    fn reduces_quadratic() {
        let loss = |x: f64| (x - 2.0).powi(2);
        let mut p = vec![0.0];
        let mut s = AdamState::new(
            &p,
            AdamConfig {
                learning_rate: 0.1,
                ..no_l2()
            },
        );
        let start = loss(p[0]);
        for _ in 0..2 {
            let g = vec![2.0 * (p[0] - 2.0)];
            adam_step(&mut p, &g, &mut s).unwrap();
        }
        assert!(loss(p[0]) < start);
        assert!((p[0] - 0.2).abs() < 1e-3);
    }

    #[test]
    fn l2_shrinks_weights() {
        let mut p = vec![1.0];
        let mut s = AdamState::new(&p, AdamConfig { l2: 0.5, ..no_l2() });
        adam_step(&mut p, &vec![0.0], &mut s).unwrap();
        assert!(p[0] < 1.0);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = vec![Matrix::zeros(2, 2)];
        let g = vec![Matrix::zeros(2, 3)];
        let mut s = AdamState::new(&p, no_l2());
        assert!(adam_step(&mut p, &g, &mut s).is_err());
    }
}
