//! Exact t-SNE (O(n²) per iteration).

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::trustworthiness;
use crate::error::{Error, Result};
use crate::rng::seed_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub seed: u64,
    /// Neighbourhood size for the reported trustworthiness.
    pub trust_k: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            seed: 0,
            trust_k: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub coords: Vec<[f64; 2]>,
    pub perplexity: f64,
    pub seed: u64,
    pub k: usize,
    pub trustworthiness: f64,
    pub kl_divergence: f64,
}

fn squared_distances(data: &[Vec<f64>]) -> Vec<f64> {
    let n = data.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = data[i]
                .iter()
                .zip(&data[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Symmetrized joint probabilities `P` (row-major `n × n`, zero diagonal,
/// summing to 1). Each conditional distribution has its Gaussian bandwidth
/// found by bisection so that its perplexity matches `perplexity`.
pub fn joint_probabilities(data: &[Vec<f64>], perplexity: f64) -> Result<Vec<f64>> {
    let n = data.len();
    if n < 2 || !(perplexity > 0.0) || perplexity >= (n - 1) as f64 {
        return Err(Error::InvalidArgument(format!(
            "perplexity {perplexity} needs more than {} points",
            n
        )));
    }
    let d2 = squared_distances(data);
    let target = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    for i in 0..n {
        let row = &d2[i * n..(i + 1) * n];
        let mut beta = 1.0;
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let mut p = vec![0.0; n];
        for _ in 0..200 {
            let mut sum = 0.0;
            let min_d = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min);
            for j in 0..n {
                p[j] = if j == i { 0.0 } else { (-(row[j] - min_d) * beta).exp() };
                sum += p[j];
            }
            let mut weighted = 0.0;
            for j in 0..n {
                p[j] /= sum;
                weighted += p[j] * (row[j] - min_d);
            }
            // Shannon entropy in nats.
            let entropy = sum.ln() + beta * weighted;
            let diff = entropy - target;
            if diff.abs() < 1e-10 {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        cond[i * n..(i + 1) * n].copy_from_slice(&p);
    }
    let mut joint = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                joint[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(1e-12);
            }
        }
    }
    let total: f64 = joint.iter().sum();
    joint.iter_mut().for_each(|v| *v /= total);
    Ok(joint)
}

/// Student-t kernel values `(1 + |y_i - y_j|²)^-1` and their sum.
fn kernel(y: &[f64], n: usize) -> (Vec<f64>, f64) {
    let mut w = vec![0.0; n * n];
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let dx = y[2 * i] - y[2 * j];
            let dy = y[2 * i + 1] - y[2 * j + 1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            w[i * n + j] = v;
            w[j * n + i] = v;
            sum += 2.0 * v;
        }
    }
    (w, sum)
}

/// `KL(P || Q)` for a flat `[x0, y0, x1, y1, ...]` layout.
pub fn kl_divergence(p: &[f64], y: &[f64]) -> f64 {
    let n = y.len() / 2;
    let (w, sum) = kernel(y, n);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j];
            if i != j && pij > 0.0 {
                kl += pij * (pij / (w[i * n + j] / sum)).ln();
            }
        }
    }
    kl
}

/// Gradient of [`kl_divergence`] with respect to `y`.
pub fn kl_gradient(p: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len() / 2;
    let (w, sum) = kernel(y, n);
    let mut g = vec![0.0; y.len()];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let wij = w[i * n + j];
            let m = 4.0 * (p[i * n + j] - wij / sum) * wij;
            g[2 * i] += m * (y[2 * i] - y[2 * j]);
            g[2 * i + 1] += m * (y[2 * i + 1] - y[2 * j + 1]);
        }
    }
    g
}

pub fn tsne_embed(data: &[Vec<f64>], cfg: &TsneConfig) -> Result<EmbeddingResult> {
    let n = data.len();
    if (n as f64) < 3.0 * cfg.perplexity + 1.0 {
        let suggestion = ((n.saturating_sub(1)) as f64 / 3.0).floor();
        return Err(Error::InvalidArgument(format!(
            "{n} points are too few for perplexity {}; try perplexity <= {suggestion}",
            cfg.perplexity
        )));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("embedding input must be finite".into()));
    }
    let p = joint_probabilities(data, cfg.perplexity)?;

    let mut rng = seed_rng(cfg.seed);
    let init = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<f64> = (0..2 * n).map(|_| init.sample(&mut rng)).collect();
    let mut velocity = vec![0.0; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut exaggerated: Vec<f64> = p.iter().map(|v| v * cfg.early_exaggeration).collect();

    for it in 0..cfg.iterations {
        if it == cfg.exaggeration_iterations {
            exaggerated.copy_from_slice(&p);
        }
        let momentum = if it < cfg.exaggeration_iterations { 0.5 } else { 0.8 };
        let grad = kl_gradient(&exaggerated, &y);
        for k in 0..2 * n {
            gains[k] = if (grad[k] > 0.0) != (velocity[k] > 0.0) {
                gains[k] + 0.2
            } else {
                (gains[k] * 0.8).max(0.01)
            };
            velocity[k] = momentum * velocity[k] - cfg.learning_rate * gains[k] * grad[k];
            y[k] += velocity[k];
        }
        for axis in 0..2 {
            let mean = (0..n).map(|i| y[2 * i + axis]).sum::<f64>() / n as f64;
            (0..n).for_each(|i| y[2 * i + axis] -= mean);
        }
    }

    let coords: Vec<[f64; 2]> = (0..n).map(|i| [y[2 * i], y[2 * i + 1]]).collect();
    if coords.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("t-SNE diverged".into()));
    }
    let low: Vec<Vec<f64>> = coords.iter().map(|c| c.to_vec()).collect();
    let k = cfg.trust_k.min((n - 1) / 3).max(1);
    Ok(EmbeddingResult {
        kl_divergence: kl_divergence(&p, &y),
        trustworthiness: trustworthiness(data, &low, k)?,
        coords,
        perplexity: cfg.perplexity,
        seed: cfg.seed,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(per: usize, dim: usize, sep: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seed_rng(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        (0..3 * per)
            .map(|i| {
                let c = i / per;
                (0..dim)
                    .map(|k| noise.sample(&mut rng) + if k == c { sep } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = blobs(7, 5, 4.0, 1)[..20].to_vec();
        let p = joint_probabilities(&data, 5.0).unwrap();
        let mut rng = seed_rng(2);
        let y: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = kl_gradient(&p, &y);
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..y.len() {
            let mut a = y.clone();
            let mut b = y.clone();
            a[k] += eps;
            b[k] -= eps;
            let fd = (kl_divergence(&p, &a) - kl_divergence(&p, &b)) / (2.0 * eps);
            worst = worst.max((g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1e-8));
        }
        assert!(worst <= 1e-4, "max relative error {worst}");
    }

    #[test]
    fn perplexity_is_matched() {
        let data = blobs(20, 4, 3.0, 3);
        let p = joint_probabilities(&data, 10.0).unwrap();
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for i in 0..data.len() {
            for j in 0..data.len() {
                assert_eq!(p[i * 60 + j], p[j * 60 + i]);
            }
        }
    }

    #[test]
    fn clusters_embed_faithfully_and_deterministically() {
        let data = blobs(50, 10, 10.0, 4);
        let cfg = TsneConfig {
            seed: 5,
            ..Default::default()
        };
        let a = tsne_embed(&data, &cfg).unwrap();
        assert_eq!(a.coords.len(), 150);
        assert!(a.coords.iter().flatten().all(|v| v.is_finite()));
        assert!(a.trustworthiness >= 0.95, "{}", a.trustworthiness);
        let b = tsne_embed(&data, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_points() {
        let data = blobs(5, 3, 1.0, 1);
        let err = tsne_embed(&data, &TsneConfig::default()).unwrap_err();
        assert!(err.to_string().contains("perplexity <= 4"));
    }
}
