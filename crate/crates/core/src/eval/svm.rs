//! Soft-margin RBF-kernel SVM trained by sequential minimal optimization
//! (maximal-gain working-pair selection) with Platt sigmoid calibration.

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// Gaussian kernel width σ in `exp(−|x − z|²/(2σ²))`; `None` uses the
    /// median pairwise distance of the training points.
    pub kernel_width: Option<f64>,
    /// Stop once the maximal KKT violation falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 10.0, kernel_width: None, tolerance: 1e-9, max_iterations: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub points: Vec<Vec<f64>>,
    /// ±1.
    pub labels: Vec<f64>,
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub kernel_width: f64,
    pub c: f64,
    pub iterations: usize,
}

fn rbf(a: &[f64], b: &[f64], width: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (-d2 / (2.0 * width * width)).exp()
}

/// Median of all pairwise Euclidean distances.
pub fn median_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut d: Vec<f64> = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(points[i].iter().zip(&points[j]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len() / 2;
    let median = if d.len() % 2 == 1 { d[m] } else { 0.5 * (d[m - 1] + d[m]) };
    if median > 0.0 { median } else { 1.0 }
}

impl Svm {
    /// `labels[i]` is true for the positive class.
    pub fn fit(points: &[Vec<f64>], labels: &[bool], params: &SvmParams) -> Result<Self, EvalError> {
        if points.len() != labels.len() {
            return Err(EvalError::Invalid("one label per point".into()));
        }
        if !labels.iter().any(|&l| l) {
            return Err(EvalError::SingleClass("negatives"));
        }
        if labels.iter().all(|&l| l) {
            return Err(EvalError::SingleClass("positives"));
        }
        if !(params.c > 0.0) {
            return Err(EvalError::Invalid("C must be positive".into()));
        }
        let width = params.kernel_width.unwrap_or_else(|| median_pairwise_distance(points));
        let n = points.len();
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        let k: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| rbf(&points[i], &points[j], width)).collect()).collect();
        let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
        let c = params.c;
        let mut alpha = vec![0.0; n];
        // Gradient of ½αᵀQα − Σα.
        let mut grad = vec![-1.0; n];
        let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
        let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

        let mut iterations = 0;
        while iterations < params.max_iterations {
            let mut i = usize::MAX;
            let mut g_max = f64::NEG_INFINITY;
            for t in 0..n {
                if up(alpha[t], y[t]) && -y[t] * grad[t] > g_max {
                    g_max = -y[t] * grad[t];
                    i = t;
                }
            }
            let mut j = usize::MAX;
            let mut g_min = f64::INFINITY;
            let mut best = f64::INFINITY;
            for t in 0..n {
                if !low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                g_min = g_min.min(v);
                if i != usize::MAX && v < g_max {
                    let b = g_max - v;
                    let a = (k[i][i] + k[t][t] - 2.0 * k[i][t]).max(1e-12);
                    if -b * b / a < best {
                        best = -b * b / a;
                        j = t;
                    }
                }
            }
            if i == usize::MAX || j == usize::MAX || g_max - g_min < params.tolerance {
                break;
            }
            iterations += 1;
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let quad = (k[i][i] + k[j][j] - 2.0 * k[i][j]).max(1e-12);
            if y[i] != y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..n {
                grad[t] += q(t, i) * di + q(t, j) * dj;
            }
        }

        // f(x) = Σ αᵢyᵢK(xᵢ, x) − ρ, ρ averaged over free vectors.
        let free: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0 && alpha[t] < c).collect();
        let rho = if free.is_empty() {
            // Every vector at a bound: ρ lies between the one-sided limits.
            let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
            for t in 0..n {
                let v = y[t] * grad[t];
                if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
                    ub = ub.min(v);
                } else {
                    lb = lb.max(v);
                }
            }
            0.5 * (ub + lb)
        } else {
            free.iter().map(|&t| y[t] * grad[t]).sum::<f64>() / free.len() as f64
        };
        Ok(Self {
            points: points.to_vec(),
            labels: y,
            alpha,
            bias: -rho,
            kernel_width: width,
            c,
            iterations,
        })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(&self.alpha)
            .zip(&self.labels)
            .filter(|((_, a), _)| **a > 0.0)
            .map(|((p, a), y)| a * y * rbf(p, x, self.kernel_width))
            .sum::<f64>()
            + self.bias
    }

    pub fn support_count(&self) -> usize {
        self.alpha.iter().filter(|a| **a > 0.0).count()
    }

    /// `|Σαᵢyᵢ|`.
    pub fn equality_residual(&self) -> f64 {
        self.alpha.iter().zip(&self.labels).map(|(a, y)| a * y).sum::<f64>().abs()
    }

    /// Largest violation of the dual optimality conditions: margin
    /// `yᵢf(xᵢ) ≥ 1` at α = 0, `= 1` when free, `≤ 1` at α = C.
    pub fn kkt_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            let margin = self.labels[i] * self.decision(p);
            let a = self.alpha[i];
            let violation = if a <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if a >= self.c {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(violation);
        }
        worst
    }

    pub fn bounds_hold(&self) -> bool {
        self.alpha.iter().all(|a| (0.0..=self.c).contains(a))
    }
}

/// `P(positive | score) = 1 / (1 + exp(a·score + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScaling {
    pub a: f64,
    pub b: f64,
}

impl PlattScaling {
    /// Newton fit with smoothed targets and backtracking line search.
    pub fn fit(scores: &[f64], labels: &[bool]) -> Self {
        let prior1 = labels.iter().filter(|&&l| l).count() as f64;
        let prior0 = labels.len() as f64 - prior1;
        let hi = (prior1 + 1.0) / (prior1 + 2.0);
        let lo = 1.0 / (prior0 + 2.0);
        let t: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();
        let objective = |a: f64, b: f64| -> f64 {
            scores
                .iter()
                .zip(&t)
                .map(|(f, ti)| {
                    let z = f * a + b;
                    if z >= 0.0 { ti * z + (1.0 + (-z).exp()).ln() } else { (ti - 1.0) * z + (1.0 + z.exp()).ln() }
                })
                .sum()
        };
        let (mut a, mut b) = (0.0, ((prior0 + 1.0) / (prior1 + 1.0)).ln());
        let mut fval = objective(a, b);
        for _ in 0..100 {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
            for (f, ti) in scores.iter().zip(&t) {
                let z = f * a + b;
                let (p, q) = if z >= 0.0 {
                    let e = (-z).exp();
                    (e / (1.0 + e), 1.0 / (1.0 + e))
                } else {
                    let e = z.exp();
                    (1.0 / (1.0 + e), e / (1.0 + e))
                };
                let d2 = p * q;
                h11 += f * f * d2;
                h22 += d2;
                h21 += f * d2;
                let d1 = ti - p;
                g1 += f * d1;
                g2 += d1;
            }
            if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;
            let mut step = 1.0;
            while step >= 1e-10 {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = objective(na, nb);
                if nf < fval + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    fval = nf;
                    break;
                }
                step /= 2.0;
            }
            if step < 1e-10 {
                break;
            }
        }
        Self { a, b }
    }

    pub fn probability(&self, score: f64) -> f64 {
        let z = self.a * score + self.b;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_distance_of_a_square() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        // Four sides of 1, two diagonals of √2.
        assert_eq!(median_pairwise_distance(&pts), 1.0);
    }

    #[test]
    fn platt_is_monotone_for_separated_scores() {
        let scores = [-3.0, -2.0, -1.5, 1.0, 2.0, 2.5];
        let labels = [false, false, false, true, true, true];
        let p = PlattScaling::fit(&scores, &labels);
        assert!(p.a < 0.0);
        assert!(p.probability(3.0) > 0.8 && p.probability(-3.0) < 0.2);
    }

    #[test]
    fn single_class_is_rejected() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(matches!(Svm::fit(&pts, &[true, true], &SvmParams::default()), Err(EvalError::SingleClass(_))));
    }
}
