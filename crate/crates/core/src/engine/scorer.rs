use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Failure, TargetSpec};
use crate::ela::{features_across_dims, FeatureSampling, FeatureScaler, FeatureVector, Standardized};
use crate::error::{Error, Result};
use crate::expr::ExprTree;
use crate::models::{separability_score, Property, PropertyModel, SeparabilityConfig, SeparabilityReport};

/// Everything needed to score a candidate: the trained scaler and models plus
/// the feature and separability settings they were trained with.
#[derive(Debug, Clone)]
pub struct Scorer {
    pub scaler: FeatureScaler,
    pub models: BTreeMap<Property, PropertyModel>,
    pub dims: Vec<usize>,
    pub sampling: FeatureSampling,
    pub separability: SeparabilityConfig,
    /// Seed of the feature designs; shared by all candidates.
    pub feature_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub features: Standardized,
    pub scores: BTreeMap<Property, f64>,
    pub separability: Option<SeparabilityReport>,
}

impl Scorer {
    /// Concatenated averaged features of `tree` lifted to every configured dimension.
    pub fn features(&self, tree: &ExprTree) -> Result<FeatureVector> {
        features_across_dims(&self.dims, self.sampling, self.feature_seed, |d| {
            Ok(tree.to_objective(d)?)
        })
    }

    /// Scores every learned property and, when targeted, separability
    /// (at the smallest configured dimension).
    pub fn evaluate(&self, tree: &ExprTree, spec: &TargetSpec) -> Result<Evaluation, Failure> {
        let fail = |stage: &str, e: Error| Failure {
            stage: stage.into(),
            message: e.to_string(),
        };
        let raw = self.features(tree).map_err(|e| fail("features", e))?;
        let features = self.scaler.standardize(&raw).map_err(|e| fail("scaling", e))?;
        let mut scores = BTreeMap::new();
        for (p, m) in &self.models {
            scores.insert(*p, m.predict(&features).map_err(|e| fail("prediction", e))?);
        }
        let mut separability = None;
        if spec.targets.iter().any(|t| t.property == Property::Separability) {
            let d = self.dims.iter().copied().min().unwrap_or(2).max(2);
            let f = tree.to_objective(d).map_err(|e| fail("separability", e.into()))?;
            let report = separability_score(&f, &self.separability);
            scores.insert(Property::Separability, report.p);
            separability = Some(report);
        }
        for t in &spec.targets {
            if !scores.contains_key(&t.property) {
                return Err(Failure {
                    stage: "prediction".into(),
                    message: format!("no model for {}", t.property),
                });
            }
        }
        Ok(Evaluation {
            features,
            scores,
            separability,
        })
    }
}
