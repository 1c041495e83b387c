//! Adam optimizer over named flat tensors, with global-norm gradient
//! clipping applied before the update and optional decoupled weight decay.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;
pub const GRAD_CLIP_NORM: f64 = 5.0;

/// First/second-moment accumulators keyed by tensor name, plus the shared
/// step counter. Maps are ordered so serialization is deterministic.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: BTreeMap<String, Vec<f64>>,
    pub v: BTreeMap<String, Vec<f64>>,
}

impl AdamState {
    /// Rescale all gradients in place so their joint L2 norm is at most
    /// `max_norm`; returns the pre-clip norm.
    pub fn clip(grads: &mut [(&str, &mut [f64])], max_norm: f64) -> f64 {
        clip_global_norm(grads, max_norm)
    }

    /// One Adam update over (name, parameter, gradient) triples. All triples
    /// must be presented on every step; moments are allocated lazily on
    /// first sight of a name.
    pub fn update(
        &mut self,
        tensors: &mut [(&str, &mut [f64], &[f64])],
        lr: f64,
        weight_decay: f64,
    ) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        for (name, param, grad) in tensors.iter_mut() {
            assert_eq!(param.len(), grad.len(), "tensor {name} grad shape");
            let m = self
                .m
                .entry(name.to_string())
                .or_insert_with(|| vec![0.0; param.len()]);
            let v = self
                .v
                .entry(name.to_string())
                .or_insert_with(|| vec![0.0; param.len()]);
            for i in 0..param.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * grad[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * grad[i] * grad[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                let mut delta = m_hat / (v_hat.sqrt() + EPSILON);
                if weight_decay != 0.0 {
                    delta += weight_decay * param[i];
                }
                param[i] -= lr * delta;
            }
        }
    }
}

/// Global-norm clipping across a set of gradient slices.
pub fn clip_global_norm(grads: &mut [(&str, &mut [f64])], max_norm: f64) -> f64 {
    let sq: f64 = grads
        .iter()
        .map(|(_, g)| g.iter().map(|x| x * x).sum::<f64>())
        .sum();
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for (_, g) in grads.iter_mut() {
            for x in g.iter_mut() {
                *x *= scale;
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut state = AdamState::default();
        let mut p = vec![1.0, -2.0, 3.0];
        let g = vec![0.0; 3];
        state.update(&mut [("w", p.as_mut_slice(), g.as_slice())], 0.1, 0.0);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_with_unit_gradient_moves_by_lr() {
        // Step 1 bias correction makes m_hat/sqrt(v_hat) = g/|g| per
        // coordinate, so each coordinate moves by about -lr.
        let mut state = AdamState::default();
        let mut p = vec![0.5, -0.5, 2.0];
        let g = vec![1.0, 1.0, 1.0];
        state.update(&mut [("w", p.as_mut_slice(), g.as_slice())], 0.01, 0.0);
        for (i, expect) in [0.5 - 0.01, -0.5 - 0.01, 2.0 - 0.01].iter().enumerate() {
            assert!((p[i] - expect).abs() < 1e-9, "coordinate {i}: {}", p[i]);
        }
    }

    #[test]
    fn clip_rescales_to_max_norm() {
        let mut a = vec![3.0, 0.0];
        let mut b = vec![0.0, 4.0];
        let norm = clip_global_norm(
            &mut [("a", a.as_mut_slice()), ("b", b.as_mut_slice())],
            5.0,
        );
        assert!((norm - 5.0).abs() < 1e-12);
        assert_eq!(a, vec![3.0, 0.0]); // norm exactly 5: no rescale

        let mut c = vec![6.0, 0.0];
        let norm = clip_global_norm(&mut [("c", c.as_mut_slice())], 3.0);
        assert!((norm - 6.0).abs() < 1e-12);
        assert!((c[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_bowl_converges() {
        // Minimize |x|^2/2; gradient is x.
        let mut state = AdamState::default();
        let mut x = vec![5.0, -3.0, 2.0];
        for _ in 0..500 {
            let g: Vec<f64> = x.clone();
            state.update(&mut [("x", x.as_mut_slice(), g.as_slice())], 0.1, 0.0);
        }
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "|x| = {norm}");
    }

    #[test]
    fn decoupled_weight_decay_shrinks_parameters() {
        let mut state = AdamState::default();
        let mut p = vec![1.0];
        let g = vec![0.0];
        state.update(&mut [("w", p.as_mut_slice(), g.as_slice())], 0.1, 0.5);
        // Zero gradient: only the decay term acts: 1 - 0.1 * 0.5 * 1.
        assert!((p[0] - 0.95).abs() < 1e-12);
    }
}
