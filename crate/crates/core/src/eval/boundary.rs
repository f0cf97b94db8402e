//! Push-recovery boundary: the largest push each direction withstands at
//! 90 % calibrated confidence.

use serde::{Deserialize, Serialize};

use super::push::PushTrial;
use super::svm::{PlattScaling, Svm, SvmParams};
use crate::error::EvalError;

pub const CONFIDENCE: f64 = 0.9;
const GRID: usize = 256;
const BISECTIONS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryBoundary {
    pub svm: Svm,
    pub calibration: PlattScaling,
    /// Standardization of the Cartesian push features.
    pub feature_mean: [f64; 2],
    pub feature_std: [f64; 2],
    /// Magnitudes searched by [`RecoveryBoundary::boundary_at`].
    pub max_magnitude: f64,
}

/// `(m·cos θ, m·sin θ)`: continuous across the azimuth wrap.
pub fn push_features(magnitude: f64, azimuth: f64) -> [f64; 2] {
    [magnitude * azimuth.cos(), magnitude * azimuth.sin()]
}

impl RecoveryBoundary {
    pub fn fit(trials: &[PushTrial], params: &SvmParams) -> Result<Self, EvalError> {
        if trials.is_empty() {
            return Err(EvalError::Invalid("no push trials".into()));
        }
        let raw: Vec<[f64; 2]> = trials.iter().map(|t| push_features(t.magnitude, t.azimuth)).collect();
        let n = raw.len() as f64;
        let mut mean = [0.0; 2];
        let mut std = [0.0; 2];
        for k in 0..2 {
            mean[k] = raw.iter().map(|f| f[k]).sum::<f64>() / n;
            let var = raw.iter().map(|f| (f[k] - mean[k]).powi(2)).sum::<f64>() / n;
            std[k] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        let scaled: Vec<Vec<f64>> = raw.iter().map(|f| (0..2).map(|k| (f[k] - mean[k]) / std[k]).collect()).collect();
        let labels: Vec<bool> = trials.iter().map(|t| t.success).collect();
        let svm = Svm::fit(&scaled, &labels, params)?;
        let scores: Vec<f64> = scaled.iter().map(|x| svm.decision(x)).collect();
        let calibration = PlattScaling::fit(&scores, &labels);
        let max_magnitude = trials.iter().map(|t| t.magnitude).fold(0.0, f64::max);
        Ok(Self { svm, calibration, feature_mean: mean, feature_std: std, max_magnitude })
    }

    pub fn score(&self, magnitude: f64, azimuth: f64) -> f64 {
        let f = push_features(magnitude, azimuth);
        let x: Vec<f64> = (0..2).map(|k| (f[k] - self.feature_mean[k]) / self.feature_std[k]).collect();
        self.svm.decision(&x)
    }

    pub fn success_probability(&self, magnitude: f64, azimuth: f64) -> f64 {
        self.calibration.probability(self.score(magnitude, azimuth))
    }

    /// Largest magnitude in `[0, max_magnitude]` whose success probability
    /// is at least [`CONFIDENCE`]; 0 when even a null push falls short.
    /// A grid scan from the top finds the outermost crossing, bisection
    /// refines it.
    pub fn boundary_at(&self, azimuth: f64) -> f64 {
        let ok = |m: f64| self.success_probability(m, azimuth) >= CONFIDENCE;
        let step = self.max_magnitude / GRID as f64;
        for k in (0..=GRID).rev() {
            let m = k as f64 * step;
            if ok(m) {
                if k == GRID {
                    return m;
                }
                let (mut lo, mut hi) = (m, m + step);
                for _ in 0..BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if ok(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return lo;
            }
        }
        0.0
    }
}

pub fn fit_recovery_boundary(trials: &[PushTrial], params: &SvmParams) -> Result<RecoveryBoundary, EvalError> {
    RecoveryBoundary::fit(trials, params)
}
