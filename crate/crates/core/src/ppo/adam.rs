//! Adam with bias correction over a fixed list of parameter tensors.

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, shapes: &[usize]) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One descent step; `params[i]` and `grads[i]` pair with tensor `i`.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &[&[f64]]) {
        assert_eq!(params.len(), self.m.len(), "tensor count changed");
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for (i, p) in params.into_iter().enumerate() {
            let (m, v, g) = (&mut self.m[i], &mut self.v[i], grads[i]);
            for k in 0..p.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                p[k] -= self.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + self.eps);
            }
        }
    }
}

/// Scales gradients in place so their global L2 norm is at most `max_norm`;
/// returns the norm before scaling.
pub fn clip_grad_norm(grads: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let norm = grads.iter().flat_map(|g| g.iter()).map(|x| x * x).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grads.iter_mut().for_each(|g| g.iter_mut().for_each(|x| *x *= scale));
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![1.0, -2.0];
        let mut adam = Adam::new(0.1, &[2]);
        adam.step(vec![&mut p], &[&[3.0, -0.5]]);
        assert!((p[0] - 0.9).abs() < 1e-8 && (p[1] + 1.9).abs() < 1e-8);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = vec![5.0];
        let mut adam = Adam::new(0.05, &[1]);
        for _ in 0..2000 {
            let g = 2.0 * (p[0] - 1.5);
            adam.step(vec![&mut p], &[&[g]]);
        }
        assert!((p[0] - 1.5).abs() < 1e-3);
    }

    #[test]
    fn clipping_caps_global_norm() {
        let (mut a, mut b) = (vec![3.0], vec![4.0]);
        let norm = clip_grad_norm(&mut [&mut a, &mut b], 1.0);
        assert_eq!(norm, 5.0);
        assert!((a[0] - 0.6).abs() < 1e-12 && (b[0] - 0.8).abs() < 1e-12);
    }
}
