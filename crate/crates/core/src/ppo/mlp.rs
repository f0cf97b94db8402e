//! Fully connected tanh network with hand-written backpropagation.
//! Batches are matrices with one sample per column.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out × in`
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Tanh hidden layers, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Layer inputs kept from the forward pass.
pub struct ForwardCache {
    inputs: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// LeCun-normal initialization; the output layer is scaled by
    /// `output_gain` (small for a policy mean, so it starts near zero).
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: &[usize], output: usize, output_gain: f64, rng: &mut R) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let gain = if l == last { output_gain } else { 1.0 };
                let normal = Normal::new(0.0, gain / (fan_in as f64).sqrt()).expect("positive std");
                Dense {
                    weight: DMatrix::from_fn(fan_out, fan_in, |_, _| normal.sample(rng)),
                    bias: DVector::zeros(fan_out),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").weight.nrows()
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, ForwardCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.weight * &h;
            for mut col in z.column_iter_mut() {
                col += &layer.bias;
            }
            if l + 1 < self.layers.len() {
                z.apply(|v| *v = v.tanh());
            }
            inputs.push(std::mem::replace(&mut h, z));
        }
        (h, ForwardCache { inputs })
    }

    /// Gradient of a loss with `d_out = ∂loss/∂output`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &DMatrix<f64>) -> MlpGrad {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_out.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[l];
            let weight = &delta * input.transpose();
            let bias = delta.column_sum();
            if l > 0 {
                let mut back = layer.weight.transpose() * &delta;
                // Input of layer l is tanh output of layer l − 1.
                back.zip_apply(input, |d, h| *d *= 1.0 - h * h);
                delta = back;
            }
            grads.push(Dense { weight, bias });
        }
        grads.reverse();
        MlpGrad { layers: grads }
    }

    /// Parameter tensors in a fixed order (weight, bias per layer).
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

impl MlpGrad {
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = Mlp::new(3, &[5, 4], 2, 1.0, &mut rng);
        let x = DMatrix::from_fn(3, 6, |i, j| ((i * 7 + j * 3) as f64).sin());
        let target = DMatrix::from_fn(2, 6, |i, j| ((i + j) as f64).cos());
        let loss = |net: &Mlp| 0.5 * (net.forward(&x) - &target).norm_squared();
        let (y, cache) = net.forward_cached(&x);
        let grad = net.backward(&cache, &(y - &target));
        let analytic: Vec<Vec<f64>> = grad.tensors().iter().map(|t| t.to_vec()).collect();
        let h = 1e-6;
        for (ti, g) in analytic.iter().enumerate() {
            for k in 0..g.len() {
                let orig = net.tensors()[ti][k];
                net.tensors_mut()[ti][k] = orig + h;
                let up = loss(&net);
                net.tensors_mut()[ti][k] = orig - h;
                let down = loss(&net);
                net.tensors_mut()[ti][k] = orig;
                let numeric = (up - down) / (2.0 * h);
                assert!((numeric - g[k]).abs() < 1e-7 * (1.0 + numeric.abs()), "tensor {ti}[{k}]: {numeric} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn small_output_gain_starts_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(10, &[32], 4, 0.01, &mut rng);
        let y = net.forward(&DMatrix::from_element(10, 1, 1.0));
        assert!(y.amax() < 0.1);
        assert_eq!((net.input_dim(), net.output_dim()), (10, 4));
    }
}
