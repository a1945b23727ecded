//! `disp`: dispersion of the best fraction of the sample relative to all of it.

use super::{finite, mean, median, PairwiseDistances};

const QUANTILES: [(f64, &str); 4] = [(0.02, "02"), (0.05, "05"), (0.10, "10"), (0.25, "25")];

pub(super) fn names() -> Vec<String> {
    let mut out = Vec::with_capacity(16);
    for stat in ["ratio_mean", "ratio_median", "diff_mean", "diff_median"] {
        for (_, tag) in QUANTILES {
            out.push(format!("disp.{stat}_{tag}"));
        }
    }
    out
}

pub(super) fn features(dist: &PairwiseDistances, y: &[f64]) -> Vec<Option<f64>> {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));

    let mut all = dist.all().to_vec();
    let mean_all = mean(&all);
    let median_all = median(&mut all);

    let mut per_q = Vec::with_capacity(QUANTILES.len());
    for (q, _) in QUANTILES {
        let k = ((q * n as f64).ceil() as usize).clamp(2, n);
        let best = &order[..k];
        let mut d = Vec::with_capacity(k * (k - 1) / 2);
        for (a, &i) in best.iter().enumerate() {
            for &j in &best[a + 1..] {
                d.push(dist.get(i, j));
            }
        }
        let m = mean(&d);
        let med = median(&mut d);
        per_q.push((m, med));
    }
    let mut out = Vec::with_capacity(16);
    out.extend(per_q.iter().map(|(m, _)| finite(m / mean_all)));
    out.extend(per_q.iter().map(|(_, md)| finite(md / median_all)));
    out.extend(per_q.iter().map(|(m, _)| finite(m - mean_all)));
    out.extend(per_q.iter().map(|(_, md)| finite(md - median_all)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustered_best_points_have_small_ratio() {
        // Best values concentrated near the origin of a line.
        let pts: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let d = PairwiseDistances::new(&pts);
        let f = features(&d, &y);
        assert_eq!(names().len(), f.len());
        // best 2% = points 0 and 1 -> mean dist 1; overall mean = 101/3.
        assert!((f[0].unwrap() - 1.0 / (101.0 / 3.0)).abs() < 1e-12);
        assert!(f[3].unwrap() < 1.0);
        assert!(f[8].unwrap() < 0.0);
    }
}
