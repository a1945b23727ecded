//! `ic`: information content of a nearest-neighbour walk through the sample.
//!
//! The walk starts at the first design point and repeatedly moves to the
//! nearest unvisited point. Consecutive slopes `Δy / ‖Δx‖` are encoded as
//! symbols in {-1, 0, 1} for a sensitivity ε, on a grid of 1000 ε values
//! spaced logarithmically over `[1e-5, max |slope|]`.

use super::{finite, PairwiseDistances};

pub(super) const NAMES: [&str; 5] = [
    "ic.h_max",
    "ic.eps_s",
    "ic.eps_max",
    "ic.eps_ratio",
    "ic.m0",
];

const EPS_LEVELS: usize = 1000;
const EPS_MIN: f64 = 1e-5;
const SETTLING_THRESHOLD: f64 = 0.05;
const INFO_RATIO: f64 = 0.5;

fn walk(dist: &PairwiseDistances) -> Vec<usize> {
    let n = dist.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut current = 0;
    visited[0] = true;
    order.push(0);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..n {
            if !visited[j] {
                let d = dist.get(current, j);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
        visited[best] = true;
        order.push(best);
        current = best;
    }
    order
}

fn symbols(slopes: &[f64], eps: f64) -> Vec<i8> {
    slopes
        .iter()
        .map(|&r| {
            if r > eps {
                1
            } else if r < -eps {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Entropy of consecutive unequal symbol pairs, base 6.
fn entropy(sym: &[i8]) -> f64 {
    if sym.len() < 2 {
        return 0.0;
    }
    let mut counts = [[0usize; 3]; 3];
    for w in sym.windows(2) {
        counts[(w[0] + 1) as usize][(w[1] + 1) as usize] += 1;
    }
    let total = (sym.len() - 1) as f64;
    let mut h = 0.0;
    for (a, row) in counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if a != b && c > 0 {
                let p = c as f64 / total;
                h -= p * p.ln() / 6f64.ln();
            }
        }
    }
    h
}

/// Partial information: length of the sequence after dropping zeros and
/// collapsing repeated signs, relative to the original length.
fn partial_information(sym: &[i8]) -> f64 {
    let mut len = 0usize;
    let mut last = 0i8;
    for &s in sym {
        if s != 0 && s != last {
            len += 1;
            last = s;
        }
    }
    len as f64 / sym.len() as f64
}

pub(super) fn features(_x: &[Vec<f64>], dist: &PairwiseDistances, y: &[f64]) -> Vec<Option<f64>> {
    let order = walk(dist);
    let slopes: Vec<f64> = order
        .windows(2)
        .filter_map(|w| {
            let d = dist.get(w[0], w[1]);
            (d > 0.0).then(|| (y[w[1]] - y[w[0]]) / d)
        })
        .collect();
    let max_slope = slopes.iter().map(|s| s.abs()).fold(0.0, f64::max);
    if slopes.len() < 2 || !(max_slope > EPS_MIN) {
        return vec![None; NAMES.len()];
    }

    let log_lo = EPS_MIN.log10();
    let log_hi = max_slope.log10();
    let grid: Vec<f64> = (0..EPS_LEVELS)
        .map(|i| log_lo + (log_hi - log_lo) * i as f64 / (EPS_LEVELS - 1) as f64)
        .collect();

    let m0 = partial_information(&symbols(&slopes, 0.0));
    let mut h_max = entropy(&symbols(&slopes, 0.0));
    let mut eps_max = log_lo;
    let mut eps_s = None;
    let mut eps_ratio = None;
    for &le in &grid {
        let sym = symbols(&slopes, 10f64.powf(le));
        let h = entropy(&sym);
        if h > h_max {
            h_max = h;
            eps_max = le;
        }
        if eps_s.is_none() && h < SETTLING_THRESHOLD {
            eps_s = Some(le);
        }
        if eps_ratio.is_none() && partial_information(&sym) < INFO_RATIO * m0 {
            eps_ratio = Some(le);
        }
    }
    vec![
        finite(h_max),
        eps_s.and_then(finite),
        finite(eps_max),
        eps_ratio.and_then(finite),
        finite(m0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_of_alternating_sequence() {
        // Pairs alternate between (1,-1) and (-1,1): two equiprobable classes.
        let sym = [1, -1, 1, -1, 1];
        let expected = -(0.5f64.ln() / 6f64.ln());
        assert!((entropy(&sym) - expected).abs() < 1e-12);
        assert_eq!(entropy(&[0, 0, 0]), 0.0);
    }

    #[test]
    fn partial_information_counts_sign_changes() {
        assert_eq!(partial_information(&[1, 1, 0, -1, -1, 1]), 3.0 / 6.0);
        assert_eq!(partial_information(&[0, 0, 0, 0]), 0.0);
    }

    #[test]
    fn walk_visits_every_point_once() {
        let pts: Vec<Vec<f64>> = [3.0, 0.0, 1.0, 7.0, 2.0].iter().map(|v| vec![*v]).collect();
        let order = walk(&PairwiseDistances::new(&pts));
        assert_eq!(order, vec![0, 4, 2, 1, 3]);
    }
}
