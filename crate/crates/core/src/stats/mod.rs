//! Statistics for verification and reporting: Mann-Whitney U, nearest-neighbour
//! ELA distances, t-SNE and trustworthiness.

mod mann_whitney;
mod tsne;

pub use mann_whitney::{
    mann_whitney_u, mann_whitney_u_with, Alternative, MannWhitney, PMethod, NORMAL_MIN_SIZE,
};
pub use tsne::{joint_probabilities, kl_divergence, kl_gradient, tsne_embed, EmbeddingResult, TsneConfig};

use crate::ela::{ela_distance, Standardized};
use crate::error::{Error, Result};

/// For each vector, the smallest ELA distance to any other vector.
pub fn nearest_neighbor_distances(vectors: &[Standardized]) -> Result<Vec<f64>> {
    if vectors.len() < 2 {
        return Err(Error::InvalidArgument(
            "nearest-neighbour distances need at least 2 vectors".into(),
        ));
    }
    let n = vectors.len();
    let mut best = vec![f64::INFINITY; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = ela_distance(&vectors[i], &vectors[j])?;
            best[i] = best[i].min(d);
            best[j] = best[j].min(d);
        }
    }
    Ok(best)
}

fn neighbour_order(points: &[Vec<f64>], i: usize) -> Vec<usize> {
    let d = |j: usize| -> f64 {
        points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };
    let mut others: Vec<(f64, usize)> = (0..points.len()).filter(|&j| j != i).map(|j| (d(j), j)).collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.into_iter().map(|(_, j)| j).collect()
}

/// Trustworthiness of `low` as an embedding of `high` at neighbourhood size `k`:
/// `1 - 2 / (n k (2n - 3k - 1)) * Σ_i Σ_{j ∈ U_k(i)} (r(i, j) - k)`, where
/// `U_k(i)` are embedding neighbours of `i` that are not among its `k` original
/// neighbours and `r(i, j)` is the rank of `j` among the original neighbours.
pub fn trustworthiness(high: &[Vec<f64>], low: &[Vec<f64>], k: usize) -> Result<f64> {
    let n = high.len();
    if low.len() != n {
        return Err(Error::InvalidArgument("embedding and data differ in length".into()));
    }
    if k == 0 || k >= n || 2 * n <= 3 * k + 1 {
        return Err(Error::InvalidArgument(format!(
            "k = {k} is out of range for {n} points"
        )));
    }
    let mut penalty = 0.0;
    for i in 0..n {
        let orig = neighbour_order(high, i);
        let mut rank = vec![0usize; n];
        for (r, &j) in orig.iter().enumerate() {
            rank[j] = r + 1;
        }
        for &j in neighbour_order(low, i).iter().take(k) {
            if rank[j] > k {
                penalty += (rank[j] - k) as f64;
            }
        }
    }
    let norm = 2.0 / (n as f64 * k as f64 * (2.0 * n as f64 - 3.0 * k as f64 - 1.0));
    Ok((1.0 - norm * penalty).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(values: Vec<f64>) -> Standardized {
        Standardized {
            schema_id: "s".into(),
            values,
        }
    }

    #[test]
    fn nearest_neighbours() {
        assert_eq!(
            nearest_neighbor_distances(&[sv(vec![1.0, 2.0]), sv(vec![1.0, 2.0])]).unwrap(),
            vec![0.0, 0.0]
        );
        // Points on a line at 0, 1, 3: mutual distances 1, 2, 3.
        let d = nearest_neighbor_distances(&[sv(vec![0.0]), sv(vec![1.0]), sv(vec![3.0])]).unwrap();
        assert_eq!(d, vec![1.0, 1.0, 2.0]);
        assert!(nearest_neighbor_distances(&[sv(vec![0.0])]).is_err());
    }

    #[test]
    fn isometric_embedding_is_fully_trustworthy() {
        let low: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin() * 3.0, (i as f64 * 1.3).cos() + i as f64 * 0.1])
            .collect();
        let high: Vec<Vec<f64>> = low
            .iter()
            .map(|p| {
                let mut v = p.clone();
                v.extend([0.0; 8]);
                v
            })
            .collect();
        assert_eq!(trustworthiness(&high, &low, 10).unwrap(), 1.0);
    }

    #[test]
    fn scrambled_embedding_scores_lower() {
        let high: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
        let low: Vec<Vec<f64>> = (0..40).map(|i| vec![((i * 17) % 40) as f64]).collect();
        let t = trustworthiness(&high, &low, 5).unwrap();
        assert!((0.0..0.9).contains(&t));
        assert!(trustworthiness(&high, &low, 40).is_err());
    }
}
