//! `ela_meta`: linear and quadratic least-squares surrogates.

use nalgebra::{DMatrix, DVector};

use super::finite;

pub(super) const NAMES: [&str; 9] = [
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.lin_simple.intercept",
    "ela_meta.lin_simple.coef.min",
    "ela_meta.lin_simple.coef.max",
    "ela_meta.lin_simple.coef.max_by_min",
    "ela_meta.lin_w_interact.adj_r2",
    "ela_meta.quad_simple.adj_r2",
    "ela_meta.quad_simple.cond",
    "ela_meta.quad_w_interact.adj_r2",
];

struct Fit {
    coef: Vec<f64>,
    adj_r2: f64,
}

/// Ordinary least squares with an intercept column prepended to `columns`.
fn fit(columns: &[Vec<f64>], y: &[f64]) -> Option<Fit> {
    let n = y.len();
    let p = columns.len();
    if n <= p + 1 {
        return None;
    }
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let target = DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let coef = svd.solve(&target, 1e-12).ok()?;
    let fitted = &design * &coef;
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let adj_r2 = 1.0 - (1.0 - r2) * (n - 1) as f64 / (n - p - 1) as f64;
    Some(Fit {
        coef: coef.iter().copied().collect(),
        adj_r2,
    })
}

fn interactions(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = x.first().map_or(0, Vec::len);
    let mut cols = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            cols.push(x.iter().map(|p| p[a] * p[b]).collect());
        }
    }
    cols
}

pub(super) fn features(x: &[Vec<f64>], y: &[f64]) -> Vec<Option<f64>> {
    let d = x[0].len();
    let linear: Vec<Vec<f64>> = (0..d).map(|k| x.iter().map(|p| p[k]).collect()).collect();
    let squares: Vec<Vec<f64>> = linear
        .iter()
        .map(|c| c.iter().map(|v| v * v).collect())
        .collect();
    let inter = interactions(x);

    let lin = fit(&linear, y);
    let lin_inter = fit(&[linear.clone(), inter.clone()].concat(), y);
    let quad = fit(&[linear.clone(), squares].concat(), y);
    let quad_inter = fit(&[linear, quad_squares(x), inter].concat(), y);

    let mut out = Vec::with_capacity(NAMES.len());
    match &lin {
        Some(f) => {
            let abs: Vec<f64> = f.coef[1..].iter().map(|c| c.abs()).collect();
            let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = abs.iter().copied().fold(0.0, f64::max);
            out.push(finite(f.adj_r2));
            out.push(finite(f.coef[0]));
            out.push(finite(min));
            out.push(finite(max));
            out.push(finite(max / min));
        }
        None => out.extend([None; 5]),
    }
    out.push(lin_inter.as_ref().and_then(|f| finite(f.adj_r2)));
    match &quad {
        Some(f) => {
            let abs: Vec<f64> = f.coef[1 + d..].iter().map(|c| c.abs()).collect();
            let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = abs.iter().copied().fold(0.0, f64::max);
            out.push(finite(f.adj_r2));
            out.push(finite(max / min));
        }
        None => out.extend([None; 2]),
    }
    out.push(quad_inter.as_ref().and_then(|f| finite(f.adj_r2)));
    out
}

fn quad_squares(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = x[0].len();
    (0..d).map(|k| x.iter().map(|p| p[k] * p[k]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_linear_model() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64 * 0.1, ((i * 7) % 11) as f64])
            .collect();
        let y: Vec<f64> = x.iter().map(|p| 1.5 + 2.0 * p[0] - 0.5 * p[1]).collect();
        let cols: Vec<Vec<f64>> = (0..2).map(|k| x.iter().map(|p| p[k]).collect()).collect();
        let f = fit(&cols, &y).unwrap();
        assert!((f.coef[0] - 1.5).abs() < 1e-9);
        assert!((f.coef[1] - 2.0).abs() < 1e-9);
        assert!((f.coef[2] + 0.5).abs() < 1e-9);
        assert!((f.adj_r2 - 1.0).abs() < 1e-12);
        let feats = features(&x, &y);
        assert!((feats[2].unwrap() - 0.5).abs() < 1e-9);
        assert!((feats[3].unwrap() - 2.0).abs() < 1e-9);
        assert!((feats[4].unwrap() - 4.0).abs() < 1e-9);
    }
}
