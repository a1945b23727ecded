//! `ela_distr`: shape of the objective value distribution.

use super::{finite, mean, sd};

pub(super) const NAMES: [&str; 3] = [
    "ela_distr.skewness",
    "ela_distr.kurtosis",
    "ela_distr.number_of_peaks",
];

const KDE_POINTS: usize = 512;
const MODE_MASS_THRESHOLD: f64 = 0.01;

fn central_moments(y: &[f64]) -> (f64, f64, f64) {
    let m = mean(y);
    let n = y.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in y {
        let c = v - m;
        m2 += c * c;
        m3 += c * c * c;
        m4 += c * c * c * c;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// Skewness with the `(n-1)/n` adjusted variance (type 3 in the usual taxonomy).
fn skewness(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let (m2, m3, _) = central_moments(y);
    let s2 = m2 * n / (n - 1.0);
    m3 / s2.powf(1.5)
}

/// Excess kurtosis, type 3.
fn kurtosis(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let (m2, _, m4) = central_moments(y);
    let s2 = m2 * n / (n - 1.0);
    m4 / (s2 * s2) - 3.0
}

/// Silverman's rule of thumb.
fn bandwidth(y: &[f64]) -> f64 {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let h = (sorted.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    let iqr = q(0.75) - q(0.25);
    let s = sd(y);
    let mut lo = s.min(iqr / 1.34);
    if !(lo > 0.0) {
        lo = if s > 0.0 { s } else { 1.0 };
    }
    0.9 * lo * (y.len() as f64).powf(-0.2)
}

/// Number of modes of a Gaussian kernel density estimate that carry at least
/// 1% of the probability mass. Modes are separated at local minima of the
/// density evaluated on a 512-point grid.
fn number_of_peaks(y: &[f64]) -> f64 {
    let bw = bandwidth(y);
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * bw;
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * bw;
    let step = (hi - lo) / (KDE_POINTS - 1) as f64;
    let norm = 1.0 / (y.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let density: Vec<f64> = (0..KDE_POINTS)
        .map(|i| {
            let t = lo + i as f64 * step;
            norm * y
                .iter()
                .map(|v| (-0.5 * ((t - v) / bw).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    let mut boundaries = vec![0];
    for i in 1..KDE_POINTS - 1 {
        if density[i] < density[i - 1] && density[i] < density[i + 1] {
            boundaries.push(i);
        }
    }
    boundaries.push(KDE_POINTS);
    boundaries
        .windows(2)
        .filter(|w| density[w[0]..w[1]].iter().sum::<f64>() * step > MODE_MASS_THRESHOLD)
        .count() as f64
}

pub(super) fn features(y: &[f64]) -> Vec<Option<f64>> {
    vec![
        finite(skewness(y)),
        finite(kurtosis(y)),
        finite(number_of_peaks(y)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_known_sample() {
        let y = [1.0, 2.0, 3.0, 4.0, 10.0];
        // Mean 4, m2 = 10, m3 = 36, m4 = 278.8 (population moments).
        let s2 = 10.0 * 5.0 / 4.0;
        assert!((skewness(&y) - 36.0 / f64::powf(s2, 1.5)).abs() < 1e-12);
        assert!((kurtosis(&y) - (278.8 / (s2 * s2) - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn peaks_of_bimodal_sample() {
        let mut y: Vec<f64> = (0..200).map(|i| 0.1 + 0.0005 * i as f64).collect();
        y.extend((0..200).map(|i| 0.8 + 0.0005 * i as f64));
        assert_eq!(number_of_peaks(&y), 2.0);
        let uni: Vec<f64> = (0..400).map(|i| (i as f64 / 399.0 - 0.5).powi(3)).collect();
        assert_eq!(number_of_peaks(&uni), 1.0);
    }
}
