use crate::error::{Error, Result};

/// Adam with bias correction. One moment buffer per parameter tensor.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(tensor_sizes: &[usize], lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: tensor_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: tensor_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.v
    }
}

/// One Adam update of `params` in place. Gradients are checked for
/// finiteness before any parameter or moment is touched.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(Error::arg(format!(
            "adam tracks {} tensors, got {} params and {} grads",
            state.m.len(),
            params.len(),
            grads.len()
        )));
    }
    for (k, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != state.m[k].len() || g.len() != state.m[k].len() {
            return Err(Error::Shape {
                op: "adam_step",
                left: (p.len(), 1),
                right: (g.len(), 1),
            });
        }
    }
    let iter = state.step as usize + 1;
    if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
        return Err(Error::Divergence {
            iter,
            what: "gradient",
        });
    }

    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[k];
        let v = &mut state.v[k];
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(p: &mut Vec<f64>, g: &[f64], state: &mut AdamState) {
        adam_step(&mut [p.as_mut_slice()], &[g], state).unwrap();
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut s = AdamState::new(&[3], 2e-3);
        for _ in 0..10 {
            run(&mut p, &[0.0; 3], &mut s);
        }
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.step(), 10);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // t=1: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps)
        let mut p = vec![0.0, 0.0, 0.0];
        let g = [0.3, -40.0, 1e-3];
        let mut s = AdamState::new(&[3], 0.01);
        run(&mut p, &g, &mut s);
        for (pi, gi) in p.iter().zip(g) {
            let expected = -0.01 * gi / (gi.abs() + 1e-8);
            assert!((pi - expected).abs() < 1e-15);
            assert!((pi + 0.01 * gi.signum()).abs() < 1e-7);
        }
    }

    #[test]
    fn constant_gradient_decreases_monotonically() {
        let mut p = vec![5.0];
        let mut s = AdamState::new(&[1], 2e-3);
        let mut prev = p[0];
        for _ in 0..100 {
            run(&mut p, &[0.7], &mut s);
            assert!(p[0] < prev);
            prev = p[0];
        }
        // a constant gradient keeps m_hat/sqrt(v_hat) = 1, so each step is ~lr
        assert!((5.0 - p[0] - 0.2).abs() < 1e-6);
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut p = vec![1.5, -0.25];
        let mut s = AdamState::new(&[2], 0.0);
        run(&mut p, &[3.0, -7.0], &mut s);
        assert_eq!(p, vec![1.5, -0.25]);
    }

    #[test]
    fn non_finite_gradient_reports_iteration() {
        let mut p = vec![1.0];
        let mut s = AdamState::new(&[1], 0.1);
        run(&mut p, &[1.0], &mut s);
        let err = adam_step(&mut [p.as_mut_slice()], &[&[f64::NAN]], &mut s).unwrap_err();
        assert!(matches!(err, Error::Divergence { iter: 2, .. }));
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn moments_track_tensor_shapes() {
        let s = AdamState::new(&[3, 1, 5], 1e-3);
        let lens: Vec<usize> = s.first_moment().iter().map(Vec::len).collect();
        assert_eq!(lens, vec![3, 1, 5]);
        let mut p = vec![0.0; 2];
        let mut s = AdamState::new(&[3], 1e-3);
        assert!(adam_step(&mut [p.as_mut_slice()], &[&[0.0, 0.0]], &mut s).is_err());
    }
}
