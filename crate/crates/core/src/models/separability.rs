//! Finite-difference separability test.
//!
//! For base points `x` and variable pairs `(i, j)` two interaction terms are
//! checked against `tol * max(1, |f(x)|)`:
//!
//! * cross term `|f(x+h e_i+h e_j) - f(x+h e_i) - f(x+h e_j) + f(x)|`, the
//!   mixed second difference at step `h`;
//! * superposition term `|Δ_i(x+δ e_j) - Δ_i(x)|` with
//!   `Δ_i(x) = f(x+h e_i) - f(x)` and a finite displacement `δ` of a quarter
//!   of the domain width along `j`, checked in both directions `(i,j)` and
//!   `(j,i)`. A separable function has the same partial difference along `i`
//!   wherever `x_j` is.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::function::ObjectiveFunction;
use crate::rng::seed_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    /// `p = 1 - max(v_c, v_s)`.
    Max,
    /// `p = 1 - (v_c + v_s) / 2`.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparabilityConfig {
    pub samples: usize,
    /// Step as a fraction of each axis' width.
    pub step_fraction: f64,
    pub tolerance: f64,
    /// Pairs examined when `d > 10`; all pairs are used otherwise.
    pub pair_budget: usize,
    pub combine: Combine,
    pub seed: u64,
}

impl Default for SeparabilityConfig {
    fn default() -> Self {
        Self {
            samples: 64,
            step_fraction: 1e-3,
            tolerance: 1e-6,
            pair_budget: 45,
            combine: Combine::Max,
            seed: 0x5E9A,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub p: f64,
    pub cross_violation_rate: f64,
    pub superposition_violation_rate: f64,
    pub tests: usize,
    pub note: Option<String>,
}

const FULL_PAIRS_MAX_DIM: usize = 10;

pub fn separability_score(f: &ObjectiveFunction, cfg: &SeparabilityConfig) -> SeparabilityReport {
    let d = f.dim();
    if d < 2 {
        return SeparabilityReport {
            p: 1.0,
            cross_violation_rate: 0.0,
            superposition_violation_rate: 0.0,
            tests: 0,
            note: Some("one-dimensional functions are trivially separable".into()),
        };
    }
    let mut rng = seed_rng(cfg.seed);
    let dom = f.domain();
    let h: Vec<f64> = (0..d).map(|k| cfg.step_fraction * dom.width(k)).collect();

    let mut pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .collect();
    if d > FULL_PAIRS_MAX_DIM && pairs.len() > cfg.pair_budget {
        let keep = sample(&mut rng, pairs.len(), cfg.pair_budget).into_vec();
        let mut kept: Vec<(usize, usize)> = keep.into_iter().map(|k| pairs[k]).collect();
        kept.sort_unstable();
        pairs = kept;
    }

    let eval = |x: &[f64]| f.evaluate_unchecked(x);
    let with = |x: &[f64], moves: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(k, s) in moves {
            y[k] += s;
        }
        eval(&y)
    };

    let mut cross = 0usize;
    let mut superposition = 0usize;
    let mut tests = 0usize;
    for _ in 0..cfg.samples {
        let x: Vec<f64> = (0..d)
            .map(|k| rng.random_range(dom.lower()[k]..dom.upper()[k] - h[k]))
            .collect();
        let fx = eval(&x);
        let limit = cfg.tolerance * fx.abs().max(1.0);
        // Displacement along k that stays inside the box.
        let delta = |k: usize| {
            let quarter = 0.25 * dom.width(k);
            if x[k] < 0.5 * (dom.lower()[k] + dom.upper()[k]) {
                quarter
            } else {
                -quarter
            }
        };
        for &(i, j) in &pairs {
            tests += 1;
            let fi = with(&x, &[(i, h[i])]);
            let fj = with(&x, &[(j, h[j])]);
            let fij = with(&x, &[(i, h[i]), (j, h[j])]);
            if (fij - fi - fj + fx).abs() > limit {
                cross += 1;
            }
            let violated = [(i, j, fi), (j, i, fj)].into_iter().any(|(a, b, fa)| {
                let db = delta(b);
                let base = fa - fx;
                let moved = with(&x, &[(a, h[a]), (b, db)]) - with(&x, &[(b, db)]);
                (moved - base).abs() > limit
            });
            if violated {
                superposition += 1;
            }
        }
    }
    let vc = cross as f64 / tests as f64;
    let vs = superposition as f64 / tests as f64;
    let p = match cfg.combine {
        Combine::Max => 1.0 - vc.max(vs),
        Combine::Mean => 1.0 - 0.5 * (vc + vs),
    };
    SeparabilityReport {
        p,
        cross_violation_rate: vc,
        superposition_violation_rate: vs,
        tests,
        note: None,
    }
}
