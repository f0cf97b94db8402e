//! Running mean/variance normalization of network inputs.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNormalizer {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
    pub clip: f64,
}

impl RunningNormalizer {
    pub fn new(dim: usize, clip: f64) -> Self {
        Self { mean: vec![0.0; dim], var: vec![1.0; dim], count: 0.0, clip }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Merges a batch of samples (parallel-variance combination).
    pub fn update(&mut self, samples: &[Vec<f64>]) {
        if samples.is_empty() {
            return;
        }
        let n = samples.len() as f64;
        for i in 0..self.dim() {
            let batch_mean = samples.iter().map(|s| s[i]).sum::<f64>() / n;
            let batch_var = samples.iter().map(|s| (s[i] - batch_mean).powi(2)).sum::<f64>() / n;
            if self.count == 0.0 {
                self.mean[i] = batch_mean;
                self.var[i] = batch_var;
                continue;
            }
            let total = self.count + n;
            let delta = batch_mean - self.mean[i];
            self.mean[i] += delta * n / total;
            self.var[i] = (self.var[i] * self.count + batch_var * n + delta * delta * self.count * n / total) / total;
        }
        self.count += n;
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.var))
            .map(|(v, (m, s2))| ((v - m) / (s2 + 1e-8).sqrt()).clamp(-self.clip, self.clip))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batched_updates_match_whole_data_moments() {
        let data: Vec<Vec<f64>> = (0..50).map(|k| vec![(k as f64).sin() * 3.0 + 1.0, k as f64 * 0.1]).collect();
        let mut n = RunningNormalizer::new(2, 10.0);
        for chunk in data.chunks(7) {
            n.update(chunk);
        }
        for i in 0..2 {
            let mean = data.iter().map(|d| d[i]).sum::<f64>() / 50.0;
            let var = data.iter().map(|d| (d[i] - mean).powi(2)).sum::<f64>() / 50.0;
            assert!((n.mean[i] - mean).abs() < 1e-12 && (n.var[i] - var).abs() < 1e-12);
        }
        assert_eq!(n.count, 50.0);
    }

    #[test]
    fn output_is_clipped() {
        let mut n = RunningNormalizer::new(1, 5.0);
        n.update(&[vec![0.0], vec![2.0]]);
        assert_eq!(n.normalize(&[1000.0]), vec![5.0]);
    }
}
