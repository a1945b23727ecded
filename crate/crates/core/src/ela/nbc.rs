//! `nbc`: nearest-better clustering statistics.
//!
//! For each point, the nearest-neighbour distance and the distance to the
//! nearest strictly better point are compared. Points without a better point
//! use their nearest-neighbour distance in both roles and point nowhere.

use super::{finite, mean, pearson, sd, PairwiseDistances};

pub(super) const NAMES: [&str; 5] = [
    "nbc.nn_nb.sd_ratio",
    "nbc.nn_nb.mean_ratio",
    "nbc.nn_nb.cor",
    "nbc.dist_ratio.coeff_var",
    "nbc.nb_fitness.cor",
];

pub(super) fn features(dist: &PairwiseDistances, y: &[f64]) -> Vec<Option<f64>> {
    let n = dist.len();
    let mut nn = vec![f64::INFINITY; n];
    let mut nb = vec![f64::INFINITY; n];
    let mut nb_target: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dij = dist.get(i, j);
            if dij < nn[i] {
                nn[i] = dij;
            }
            if y[j] < y[i] && dij < nb[i] {
                nb[i] = dij;
                nb_target[i] = Some(j);
            }
        }
        if nb_target[i].is_none() {
            nb[i] = nn[i];
        }
    }
    let mut indegree = vec![0.0; n];
    for t in nb_target.iter().flatten() {
        indegree[*t] += 1.0;
    }
    let ratios: Vec<f64> = nn
        .iter()
        .zip(&nb)
        .filter(|(_, b)| **b > 0.0)
        .map(|(a, b)| a / b)
        .collect();
    let coeff_var = if ratios.is_empty() {
        f64::NAN
    } else {
        sd(&ratios) / mean(&ratios)
    };
    vec![
        finite(sd(&nn) / sd(&nb)),
        finite(mean(&nn) / mean(&nb)),
        finite(pearson(&nn, &nb)),
        finite(coeff_var),
        finite(pearson(&indegree, y)),
    ]
}
