//! z-standardization fitted on a reference corpus, and the Manhattan ELA distance.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::FeatureVector;
use crate::error::{Error, Result};

/// Features missing or non-finite on more than this share of the corpus are dropped.
pub const MAX_MISSING_SHARE: f64 = 0.05;
const MIN_STD: f64 = 1e-12;
/// Standardized values are clipped to `[-Z_CLIP, Z_CLIP]` so that one
/// unbounded feature (a coefficient ratio, say) cannot dominate distances.
pub const Z_CLIP: f64 = 10.0;
const COST_MARKERS: [&str; 2] = ["costs", "runtime"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledFeature {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedFeature {
    pub name: String,
    pub reason: String,
}

/// Per-feature mean and standard deviation over a reference corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub schema_version: String,
    /// Full input schema the scaler was fitted on.
    pub input_names: Vec<String>,
    pub features: Vec<ScaledFeature>,
    pub excluded: Vec<ExcludedFeature>,
}

/// A standardized vector tagged with the identity of its scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardized {
    pub schema_id: String,
    pub values: Vec<f64>,
}

pub fn fit_scaler(corpus: &[FeatureVector]) -> Result<FeatureScaler> {
    if corpus.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "scaler needs at least 2 vectors, got {}",
            corpus.len()
        )));
    }
    let first = &corpus[0];
    for v in corpus {
        if v.names != first.names || v.meta.schema_version != first.meta.schema_version {
            return Err(Error::SchemaMismatch("corpus vectors disagree on schema".into()));
        }
    }
    let mut features = Vec::new();
    let mut excluded = Vec::new();
    for (k, name) in first.names.iter().enumerate() {
        if COST_MARKERS.iter().any(|m| name.contains(m)) {
            excluded.push(ExcludedFeature {
                name: name.clone(),
                reason: "runtime or cost feature".into(),
            });
            continue;
        }
        let present: Vec<f64> = corpus
            .iter()
            .filter_map(|v| v.values[k])
            .filter(|x| x.is_finite())
            .collect();
        let missing = 1.0 - present.len() as f64 / corpus.len() as f64;
        if missing > MAX_MISSING_SHARE {
            excluded.push(ExcludedFeature {
                name: name.clone(),
                reason: format!("missing on {:.1}% of the corpus", 100.0 * missing),
            });
            continue;
        }
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        let var = present.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / present.len() as f64;
        let std = var.sqrt();
        if !(std > MIN_STD * mean.abs().max(1.0)) {
            excluded.push(ExcludedFeature {
                name: name.clone(),
                reason: "zero variance".into(),
            });
            continue;
        }
        features.push(ScaledFeature {
            name: name.clone(),
            mean,
            std,
        });
    }
    Ok(FeatureScaler {
        schema_version: first.meta.schema_version.clone(),
        input_names: first.names.clone(),
        features,
        excluded,
    })
}

impl FeatureScaler {
    /// Stable identifier of the retained schema; two standardized vectors are
    /// comparable only when their ids match.
    pub fn schema_id(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.schema_version.as_bytes());
        for f in &self.features {
            h.update([0u8]);
            h.update(f.name.as_bytes());
        }
        let digest = h.finalize();
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("{}:{hex}", self.schema_version)
    }

    pub fn retained_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// Missing values map to 0, the corpus mean; the rest are clipped to
    /// [`Z_CLIP`].
    pub fn standardize(&self, v: &FeatureVector) -> Result<Standardized> {
        if v.meta.schema_version != self.schema_version || v.names != self.input_names {
            return Err(Error::SchemaMismatch(format!(
                "vector schema {} ({} features) does not match scaler {} ({} features)",
                v.meta.schema_version,
                v.names.len(),
                self.schema_version,
                self.input_names.len()
            )));
        }
        let mut idx = 0;
        let mut values = Vec::with_capacity(self.features.len());
        for f in &self.features {
            while self.input_names[idx] != f.name {
                idx += 1;
            }
            values.push(match v.values[idx] {
                Some(x) if x.is_finite() => ((x - f.mean) / f.std).clamp(-Z_CLIP, Z_CLIP),
                _ => 0.0,
            });
        }
        Ok(Standardized {
            schema_id: self.schema_id(),
            values,
        })
    }
}

/// Manhattan distance between two standardized vectors.
pub fn ela_distance(a: &Standardized, b: &Standardized) -> Result<f64> {
    if a.schema_id != b.schema_id || a.values.len() != b.values.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} vs {}",
            a.schema_id, b.schema_id
        )));
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ela::FeatureMeta;
    use proptest::prelude::*;

    fn vector(values: Vec<Option<f64>>) -> FeatureVector {
        FeatureVector {
            names: (0..values.len()).map(|i| format!("f{i}")).collect(),
            values,
            meta: FeatureMeta {
                schema_version: "test".into(),
                dims: vec![2],
                sample_size: 10,
                seed: 0,
                repetitions: 1,
            },
        }
    }

    fn std_vec(values: Vec<f64>) -> Standardized {
        Standardized {
            schema_id: "s".into(),
            values,
        }
    }

    #[test]
    fn corpus_is_standardized() {
        let corpus: Vec<FeatureVector> = (0..20)
            .map(|i| {
                let x = i as f64;
                vector(vec![Some(x), Some(x * x - 3.0), Some(1.0)])
            })
            .collect();
        let s = fit_scaler(&corpus).unwrap();
        assert_eq!(s.retained_names(), vec!["f0", "f1"]);
        assert_eq!(s.excluded[0].reason, "zero variance");
        let z: Vec<Standardized> = corpus.iter().map(|v| s.standardize(v).unwrap()).collect();
        for k in 0..2 {
            let col: Vec<f64> = z.iter().map(|v| v.values[k]).collect();
            let m = col.iter().sum::<f64>() / 20.0;
            let sd = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 20.0).sqrt();
            assert!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
        }
        let mean = vector(vec![Some(9.5), Some(s.features[1].mean), Some(1.0)]);
        assert!(s.standardize(&mean).unwrap().values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn outliers_are_clipped() {
        let corpus: Vec<FeatureVector> = (0..20).map(|i| vector(vec![Some(i as f64)])).collect();
        let s = fit_scaler(&corpus).unwrap();
        assert_eq!(s.standardize(&vector(vec![Some(1e15)])).unwrap().values, vec![Z_CLIP]);
        assert_eq!(s.standardize(&vector(vec![Some(-1e15)])).unwrap().values, vec![-Z_CLIP]);
    }

    #[test]
    fn identical_corpus_drops_everything() {
        let v = vector(vec![Some(1.0), Some(2.0)]);
        let s = fit_scaler(&[v.clone(), v]).unwrap();
        assert!(s.features.is_empty());
        assert_eq!(s.excluded.len(), 2);
    }

    #[test]
    fn unstable_features_are_blacklisted() {
        let corpus: Vec<FeatureVector> = (0..20)
            .map(|i| vector(vec![Some(i as f64), (i != 3).then_some(i as f64)]))
            .collect();
        let s = fit_scaler(&corpus).unwrap();
        assert_eq!(s.retained_names(), vec!["f0"]);
        assert!(s.excluded[0].reason.contains("missing"));
    }

    #[test]
    fn small_corpus_and_schema_errors() {
        assert!(fit_scaler(&[vector(vec![Some(1.0)])]).is_err());
        let s = fit_scaler(&[vector(vec![Some(1.0)]), vector(vec![Some(2.0)])]).unwrap();
        assert!(matches!(
            s.standardize(&vector(vec![Some(1.0), Some(1.0)])),
            Err(Error::SchemaMismatch(_))
        ));
        let other = Standardized {
            schema_id: "x".into(),
            values: vec![0.0],
        };
        assert!(ela_distance(&s.standardize(&vector(vec![Some(1.0)])).unwrap(), &other).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(ela_distance(&std_vec(vec![0.0, 0.0]), &std_vec(vec![1.0, 1.0])).unwrap(), 2.0);
        let a = std_vec(vec![0.3, -1.2]);
        assert_eq!(ela_distance(&a, &a).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 3..=3)
        ) {
            let [a, b, c] = [0, 1, 2].map(|i| std_vec(pts[i].clone()));
            let ab = ela_distance(&a, &b).unwrap();
            let bc = ela_distance(&b, &c).unwrap();
            let ac = ela_distance(&a, &c).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ela_distance(&b, &a).unwrap());
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
