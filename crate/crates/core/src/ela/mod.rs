//! Exploratory landscape analysis features.
//!
//! Six groups are computed from a design `X` and min-max normalized values `Y`:
//! `ela_meta`, `ela_distr`, `nbc`, `disp`, `pca` and `ic`. The exact feature
//! list is [`feature_names`]; it is versioned by [`SCHEMA_VERSION`] and that
//! version is written into every persisted feature table and scaler.

mod disp;
mod distr;
mod ic;
mod meta;
mod nbc;
mod pca;
mod scaler;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{normalize_objective, ObjectiveFunction};
use crate::rng::derive_seed;
use crate::sampling::latin_hypercube;

pub use scaler::{ela_distance, fit_scaler, ExcludedFeature, FeatureScaler, ScaledFeature, Standardized};

pub const SCHEMA_VERSION: &str = "ela/1";

/// Feature names in schema order.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = Vec::with_capacity(46);
    names.extend(meta::NAMES.iter().map(|s| s.to_string()));
    names.extend(distr::NAMES.iter().map(|s| s.to_string()));
    names.extend(nbc::NAMES.iter().map(|s| s.to_string()));
    names.extend(disp::names());
    names.extend(pca::NAMES.iter().map(|s| s.to_string()));
    names.extend(ic::NAMES.iter().map(|s| s.to_string()));
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub schema_version: String,
    pub dims: Vec<usize>,
    pub sample_size: usize,
    pub seed: u64,
    pub repetitions: usize,
}

/// Named feature values for one function. `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<Option<f64>>,
    pub meta: FeatureMeta,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .and_then(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of features that are missing.
    pub fn missing_fraction(&self) -> f64 {
        if self.values.is_empty() {
            return 1.0;
        }
        self.values.iter().filter(|v| v.is_none()).count() as f64 / self.values.len() as f64
    }

    /// Joins per-dimension vectors; names get a `d{dim}/` prefix.
    pub fn concat(parts: &[FeatureVector]) -> Result<FeatureVector> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        let mut names = Vec::new();
        let mut values = Vec::new();
        let mut dims = Vec::new();
        for p in parts {
            if p.meta.schema_version != first.meta.schema_version {
                return Err(Error::SchemaMismatch(format!(
                    "{} vs {}",
                    p.meta.schema_version, first.meta.schema_version
                )));
            }
            let prefix = p
                .meta
                .dims
                .iter()
                .map(|d| format!("d{d}"))
                .collect::<Vec<_>>()
                .join("+");
            names.extend(p.names.iter().map(|n| format!("{prefix}/{n}")));
            values.extend(p.values.iter().copied());
            dims.extend(p.meta.dims.iter().copied());
        }
        Ok(FeatureVector {
            names,
            values,
            meta: FeatureMeta {
                schema_version: first.meta.schema_version.clone(),
                dims,
                sample_size: first.meta.sample_size,
                seed: first.meta.seed,
                repetitions: first.meta.repetitions,
            },
        })
    }
}

/// Euclidean distances between all pairs, condensed upper triangle.
pub(crate) struct PairwiseDistances {
    n: usize,
    data: Vec<f64>,
}

impl PairwiseDistances {
    pub(crate) fn new(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let mut data = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let d: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                data.push(d.sqrt());
            }
        }
        Self { n, data }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // Offset of row a in the condensed layout.
        let row = a * (2 * self.n - a - 1) / 2;
        self.data[row + (b - a - 1)]
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    pub(crate) fn all(&self) -> &[f64] {
        &self.data
    }
}

pub(crate) fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub(crate) fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    let mid = n / 2;
    let (_, &mut upper, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Computes all feature groups on `(points, values)`. `values` must already be
/// normalized to `[0, 1]`. A constant `values` vector yields an all-missing
/// vector.
pub fn compute_features(points: &[Vec<f64>], values: &[f64]) -> Result<FeatureVector> {
    if points.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    let d = points.first().map_or(0, Vec::len);
    if points.len() < d + 3 || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "{} points are too few for dimension {d}",
            points.len()
        )));
    }
    let names = feature_names();
    let meta = FeatureMeta {
        schema_version: SCHEMA_VERSION.into(),
        dims: vec![d],
        sample_size: points.len(),
        seed: 0,
        repetitions: 1,
    };
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Ok(FeatureVector {
            values: vec![None; names.len()],
            names,
            meta,
        });
    }

    let dist = PairwiseDistances::new(points);
    let mut out = Vec::with_capacity(names.len());
    out.extend(meta::features(points, values));
    out.extend(distr::features(values));
    out.extend(nbc::features(&dist, values));
    out.extend(disp::features(&dist, values));
    out.extend(pca::features(points, values));
    out.extend(ic::features(points, &dist, values));
    debug_assert_eq!(out.len(), names.len());
    Ok(FeatureVector {
        names,
        values: out,
        meta,
    })
}

/// How designs are drawn for [`averaged_features`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSampling {
    /// Latin hypercube size per dimension (`n = per_dim * d`).
    pub per_dim: usize,
    pub repetitions: usize,
}

impl Default for FeatureSampling {
    fn default() -> Self {
        Self {
            per_dim: 250,
            repetitions: 5,
        }
    }
}

/// Element-wise mean of features over `repetitions` Latin hypercube designs
/// with seeds `derive_seed(seed, [r])`. Missing values are left out of each
/// feature's mean individually.
pub fn averaged_features(
    f: &ObjectiveFunction,
    sampling: FeatureSampling,
    seed: u64,
) -> Result<FeatureVector> {
    if sampling.repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    let d = f.dim();
    let n = sampling.per_dim * d;
    let reps: Vec<Option<FeatureVector>> = (0..sampling.repetitions)
        .into_par_iter()
        .map(|r| -> Result<Option<FeatureVector>> {
            let points = latin_hypercube(n, f.domain(), derive_seed(seed, &[r as u64]))?;
            let raw: Vec<f64> = points.iter().map(|p| f.evaluate_unchecked(p)).collect();
            let norm = normalize_objective(&raw)?;
            if norm.degenerate {
                return Ok(None);
            }
            compute_features(&points, &norm.values).map(Some)
        })
        .collect::<Result<_>>()?;
    let usable: Vec<FeatureVector> = reps.into_iter().flatten().collect();
    if usable.is_empty() {
        return Err(Error::Degenerate(format!(
            "{} is constant on all {} designs",
            f.id(),
            sampling.repetitions
        )));
    }
    let names = usable[0].names.clone();
    let values = (0..names.len())
        .map(|k| {
            let present: Vec<f64> = usable.iter().filter_map(|v| v.values[k]).collect();
            (!present.is_empty()).then(|| mean(&present))
        })
        .collect();
    Ok(FeatureVector {
        names,
        values,
        meta: FeatureMeta {
            schema_version: SCHEMA_VERSION.into(),
            dims: vec![d],
            sample_size: n,
            seed,
            repetitions: sampling.repetitions,
        },
    })
}

/// Averaged features at each dimension in `dims`, concatenated in that order.
/// `make(d)` builds the function to analyse at dimension `d`.
pub fn features_across_dims(
    dims: &[usize],
    sampling: FeatureSampling,
    seed: u64,
    make: impl Fn(usize) -> Result<ObjectiveFunction>,
) -> Result<FeatureVector> {
    let parts = dims
        .iter()
        .map(|&d| averaged_features(&make(d)?, sampling, seed))
        .collect::<Result<Vec<_>>>()?;
    FeatureVector::concat(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Domain;

    fn design(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        latin_hypercube(n, &Domain::standard(d), seed).unwrap()
    }

    fn normalized(points: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let raw: Vec<f64> = points.iter().map(|p| f(p)).collect();
        normalize_objective(&raw).unwrap().values
    }

    #[test]
    fn schema_is_stable() {
        let names = feature_names();
        assert_eq!(names.len(), 46);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn pairwise_indexing() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0], vec![7.0]];
        let d = PairwiseDistances::new(&pts);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d.get(i, j), (pts[i][0] - pts[j][0]).abs());
            }
        }
    }

    #[test]
    fn linear_function_has_perfect_linear_fit() {
        let x = design(500, 2, 1);
        let y = normalized(&x, |p| p[0]);
        let fv = compute_features(&x, &y).unwrap();
        assert!(fv.get("ela_meta.lin_simple.adj_r2").unwrap() >= 0.999);
    }

    #[test]
    fn sphere_has_perfect_quadratic_fit() {
        let x = design(500, 2, 2);
        let y = normalized(&x, |p| p.iter().map(|v| v * v).sum());
        let fv = compute_features(&x, &y).unwrap();
        assert!(fv.get("ela_meta.quad_simple.adj_r2").unwrap() >= 0.99);
        assert!(fv.get("ela_meta.lin_simple.adj_r2").unwrap() < 0.1);
    }

    #[test]
    fn symmetric_distribution_has_small_skew() {
        // y = x1 on an LHS design is uniformly distributed, hence symmetric.
        let x = design(500, 2, 3);
        let y = normalized(&x, |p| p[0]);
        let fv = compute_features(&x, &y).unwrap();
        assert!(fv.get("ela_distr.skewness").unwrap().abs() <= 0.15);
    }

    #[test]
    fn constant_values_are_all_missing() {
        let x = design(100, 2, 4);
        let fv = compute_features(&x, &vec![0.5; 100]).unwrap();
        assert!(fv.values.iter().all(Option::is_none));
    }

    #[test]
    fn features_are_deterministic_and_mostly_finite() {
        let f = crate::bbob::instantiate(3, 1, 2).unwrap().0;
        let s = FeatureSampling {
            per_dim: 100,
            repetitions: 2,
        };
        let a = averaged_features(&f, s, 9).unwrap();
        let b = averaged_features(&f, s, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.missing_fraction() < 0.05, "{:?}", a);
    }

    #[test]
    fn single_repetition_equals_compute_features() {
        let f = crate::bbob::instantiate(8, 1, 2).unwrap().0;
        let s = FeatureSampling {
            per_dim: 100,
            repetitions: 1,
        };
        let avg = averaged_features(&f, s, 5).unwrap();
        let x = latin_hypercube(200, f.domain(), derive_seed(5, &[0])).unwrap();
        let y = normalized(&x, |p| f.evaluate_unchecked(p));
        let direct = compute_features(&x, &y).unwrap();
        assert_eq!(avg.values, direct.values);
        assert_eq!(s.repetitions, 1);
        assert_eq!(FeatureSampling::default().repetitions, 5);
    }

    #[test]
    fn constant_function_is_degenerate() {
        let f = ObjectiveFunction::new("flat", Domain::standard(2), |_| 3.0);
        assert!(matches!(
            averaged_features(&f, FeatureSampling::default(), 1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn concat_prefixes_names() {
        let f = crate::bbob::instantiate(1, 1, 2).unwrap().0;
        let g = crate::bbob::instantiate(1, 1, 5).unwrap().0;
        let s = FeatureSampling {
            per_dim: 50,
            repetitions: 1,
        };
        let c = FeatureVector::concat(&[
            averaged_features(&f, s, 1).unwrap(),
            averaged_features(&g, s, 1).unwrap(),
        ])
        .unwrap();
        assert_eq!(c.len(), 92);
        assert!(c.names[0].starts_with("d2/"));
        assert!(c.names[46].starts_with("d5/"));
        assert_eq!(c.meta.dims, vec![2, 5]);
    }
}
