//! `pca`: principal component summaries of the design and of `[X | y]`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::finite;

pub(super) const NAMES: [&str; 8] = [
    "pca.expl_var.cov_x",
    "pca.expl_var.cor_x",
    "pca.expl_var.cov_init",
    "pca.expl_var.cor_init",
    "pca.expl_var_PC1.cov_x",
    "pca.expl_var_PC1.cor_x",
    "pca.expl_var_PC1.cov_init",
    "pca.expl_var_PC1.cor_init",
];

const EXPLAINED: f64 = 0.9;

fn covariance(data: &[Vec<f64>], correlation: bool) -> Option<DMatrix<f64>> {
    let n = data.len();
    let p = data[0].len();
    let means: Vec<f64> = (0..p)
        .map(|k| data.iter().map(|r| r[k]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for r in data {
        for a in 0..p {
            let da = r[a] - means[a];
            for b in a..p {
                cov[(a, b)] += da * (r[b] - means[b]);
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            cov[(a, b)] /= (n - 1) as f64;
            cov[(b, a)] = cov[(a, b)];
        }
    }
    if correlation {
        let sds: Vec<f64> = (0..p).map(|k| cov[(k, k)].sqrt()).collect();
        if sds.iter().any(|s| !(*s > 0.0)) {
            return None;
        }
        for a in 0..p {
            for b in 0..p {
                cov[(a, b)] /= sds[a] * sds[b];
            }
        }
    }
    Some(cov)
}

/// (share of components needed for 90% of the variance, share of PC1).
fn explained(m: Option<DMatrix<f64>>) -> (Option<f64>, Option<f64>) {
    let Some(m) = m else {
        return (None, None);
    };
    let p = m.nrows();
    let mut ev: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = ev.iter().sum();
    if !(total > 0.0) {
        return (None, None);
    }
    let mut acc = 0.0;
    let mut needed = p;
    for (i, v) in ev.iter().enumerate() {
        acc += v / total;
        if acc >= EXPLAINED - 1e-12 {
            needed = i + 1;
            break;
        }
    }
    (finite(needed as f64 / p as f64), finite(ev[0] / total))
}

pub(super) fn features(x: &[Vec<f64>], y: &[f64]) -> Vec<Option<f64>> {
    let init: Vec<Vec<f64>> = x
        .iter()
        .zip(y)
        .map(|(p, v)| {
            let mut r = p.clone();
            r.push(*v);
            r
        })
        .collect();
    let (a1, b1) = explained(covariance(x, false));
    let (a2, b2) = explained(covariance(x, true));
    let (a3, b3) = explained(covariance(&init, false));
    let (a4, b4) = explained(covariance(&init, true));
    vec![a1, a2, a3, a4, b1, b2, b3, b4]
}
