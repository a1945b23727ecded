//! Mann-Whitney U test with midranks for ties.
//!
//! Below [`NORMAL_MIN_SIZE`] (on the smaller sample) the null distribution is
//! computed exactly by counting subsets of the pooled midranks, which stays
//! exact under ties. Larger samples use the normal approximation with tie and
//! continuity corrections.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const NORMAL_MIN_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    /// `a` tends to be larger than `b`.
    Greater,
    /// `a` tends to be smaller than `b`.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of `a`: pairs with `a > b`, ties counting one half.
    pub u: f64,
    pub p: f64,
    pub method: PMethod,
}

/// Two-sided test.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    mann_whitney_u_with(a, b, Alternative::TwoSided)
}

fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&x, &y| pooled[x].total_cmp(&pooled[y]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

pub fn mann_whitney_u_with(a: &[f64], b: &[f64], alt: Alternative) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("Mann-Whitney needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let ra: f64 = ranks[..na].iter().sum();
    let u = ra - (na * (na + 1)) as f64 / 2.0;

    if na.min(nb) < NORMAL_MIN_SIZE {
        let p = exact_p(&ranks, na, alt);
        return Ok(MannWhitney {
            u,
            p,
            method: PMethod::Exact,
        });
    }

    let n = (na + nb) as f64;
    let mean = (na * nb) as f64 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let p = if var <= 0.0 {
        1.0
    } else {
        let sd = var.sqrt();
        let norm = Normal::new(0.0, 1.0).expect("standard normal");
        match alt {
            Alternative::TwoSided => {
                let z = ((u - mean).abs() - 0.5).max(0.0) / sd;
                (2.0 * norm.sf(z)).min(1.0)
            }
            Alternative::Greater => norm.sf((u - mean - 0.5) / sd),
            Alternative::Less => norm.cdf((u - mean + 0.5) / sd),
        }
    };
    Ok(MannWhitney {
        u,
        p,
        method: PMethod::Normal,
    })
}

/// Exact p-value by counting, over all subsets of size `na` of the pooled
/// ranks, doubled rank sums. Doubled midranks are integers, so every
/// comparison below is exact.
fn exact_p(ranks: &[f64], na: usize, alt: Alternative) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let nb = ranks.len() - na;
    // Count subsets of the smaller sample's size; map its sum back to `a`.
    let (k, observed_in_a) = if na <= nb { (na, true) } else { (nb, false) };
    let total_sum: usize = doubled.iter().sum();
    let max_sum: usize = {
        let mut d = doubled.clone();
        d.sort_unstable_by(|x, y| y.cmp(x));
        d[..k].iter().sum()
    };
    // counts[j][s]: number of j-subsets with doubled sum s.
    let mut counts = vec![vec![0.0f64; max_sum + 1]; k + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for j in (1..=k).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let dist = &counts[k];
    let total: f64 = dist.iter().sum();

    let da: usize = doubled[..na].iter().sum();
    // Doubled rank sum of the counted sample and of `a`, as functions of s.
    let to_a = |s: usize| if observed_in_a { s } else { total_sum - s };
    // Doubled null mean of the rank sum of `a`.
    let mean_a2 = na * (ranks.len() + 1);
    let dev = |x: usize| x.abs_diff(mean_a2);
    let obs_dev = dev(da);
    let mass: f64 = dist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0.0)
        .filter(|(s, _)| {
            let sa = to_a(*s);
            match alt {
                Alternative::TwoSided => dev(sa) >= obs_dev,
                Alternative::Greater => sa >= da,
                Alternative::Less => sa <= da,
            }
        })
        .map(|(_, c)| c)
        .sum();
    (mass / total).min(1.0)
}
