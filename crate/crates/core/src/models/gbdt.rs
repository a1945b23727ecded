//! Gradient-boosted regression trees with squared-error loss and exact greedy
//! split finding. Defaults follow the usual boosting library defaults: 100
//! rounds, depth 6, learning rate 0.3, L2 leaf penalty 1, base score 0.5.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Property;
use crate::ela::{Standardized, SCHEMA_VERSION};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "lf-gbdt/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub min_child_weight: f64,
    pub base_score: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 6,
            learning_rate: 0.3,
            lambda: 1.0,
            min_child_weight: 1.0,
            base_score: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Flat tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub format: String,
    pub ela_schema: String,
    pub scaler_schema_id: String,
    pub n_features: usize,
    pub n_rows: usize,
    pub corpus_hash: String,
    pub seed: u64,
    pub params: BoostParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyModel {
    pub property: Property,
    pub meta: ModelMeta,
    pub trees: Vec<Tree>,
}

fn corpus_hash(rows: &[Standardized], labels: &[f64]) -> String {
    let mut h = Sha256::new();
    for (r, y) in rows.iter().zip(labels) {
        for v in &r.values {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(y.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    grad: Vec<f64>,
    params: &'a BoostParams,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let value = -g / (rows.len() as f64 + self.params.lambda) * self.params.learning_rate;
        self.nodes.push(TreeNode::Leaf { value });
        self.nodes.len() - 1
    }

    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64, f64)> {
        let lambda = self.params.lambda;
        let n = rows.len() as f64;
        let g_total: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let parent = g_total * g_total / (n + lambda);
        let n_features = self.x[rows[0]].len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted = rows.to_vec();
        for f in 0..n_features {
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut gl = 0.0;
            for k in 0..sorted.len() - 1 {
                gl += self.grad[sorted[k]];
                let lo = self.x[sorted[k]][f];
                let hi = self.x[sorted[k + 1]][f];
                if lo == hi {
                    continue;
                }
                let hl = (k + 1) as f64;
                let hr = n - hl;
                if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                    continue;
                }
                let gr = g_total - gl;
                let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some((f, threshold, gain));
                }
            }
        }
        best
    }

    fn build(&mut self, rows: &[usize], depth: usize) -> usize {
        if depth >= self.params.max_depth || rows.len() < 2 {
            return self.leaf(rows);
        }
        let Some((feature, threshold, _)) = self.best_split(rows) else {
            return self.leaf(rows);
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: 0.0 });
        let left = self.build(&l, depth + 1);
        let right = self.build(&r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Fits a boosted ensemble to `{0,1}` (or any real) targets. Training is
/// deterministic; `seed` is recorded for provenance.
pub fn train_property_model(
    property: Property,
    rows: &[Standardized],
    labels: &[f64],
    params: &BoostParams,
    seed: u64,
) -> Result<PropertyModel> {
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(Error::Training(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let schema_id = rows[0].schema_id.clone();
    let width = rows[0].values.len();
    if rows.iter().any(|r| r.schema_id != schema_id || r.values.len() != width) {
        return Err(Error::SchemaMismatch("training rows disagree on schema".into()));
    }
    let first = labels[0];
    if labels.iter().all(|&y| y == first) {
        return Err(Error::Training(format!(
            "labels for {property} contain a single class"
        )));
    }
    if width == 0 {
        return Err(Error::Training("no features to train on".into()));
    }
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.values.clone()).collect();
    let mut pred = vec![params.base_score; x.len()];
    let all: Vec<usize> = (0..x.len()).collect();
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let grad: Vec<f64> = pred.iter().zip(labels).map(|(p, y)| p - y).collect();
        let mut b = Builder {
            x: &x,
            grad,
            params,
            nodes: Vec::new(),
        };
        b.build(&all, 0);
        let tree = Tree { nodes: b.nodes };
        for (p, row) in pred.iter_mut().zip(&x) {
            *p += tree.predict(row);
        }
        trees.push(tree);
    }
    Ok(PropertyModel {
        property,
        meta: ModelMeta {
            format: MODEL_FORMAT.into(),
            ela_schema: SCHEMA_VERSION.into(),
            scaler_schema_id: schema_id,
            n_features: width,
            n_rows: rows.len(),
            corpus_hash: corpus_hash(rows, labels),
            seed,
            params: *params,
        },
        trees,
    })
}

impl PropertyModel {
    /// Unclamped ensemble output.
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.meta.params.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    /// Score in `[0, 1]`.
    pub fn predict(&self, x: &Standardized) -> Result<f64> {
        if x.schema_id != self.meta.scaler_schema_id || x.values.len() != self.meta.n_features {
            return Err(Error::SchemaMismatch(format!(
                "model for {} expects {}, got {}",
                self.property, self.meta.scaler_schema_id, x.schema_id
            )));
        }
        Ok(self.raw_score(&x.values).clamp(0.0, 1.0))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.meta.format != MODEL_FORMAT || m.meta.ela_schema != SCHEMA_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "model format {} / {} is not {MODEL_FORMAT} / {SCHEMA_VERSION}",
                m.meta.format, m.meta.ela_schema
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Area under the ROC curve, with tied scores counted as one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument("scores and labels differ in length".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    Ok((rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rows(xs: &[Vec<f64>]) -> Vec<Standardized> {
        xs.iter()
            .map(|v| Standardized {
                schema_id: "toy".into(),
                values: v.clone(),
            })
            .collect()
    }

    /// Fraction of (positive, negative) pairs ordered correctly.
    fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let mut good = 0.0;
        let mut total = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li == 1 && lj == 0 {
                    total += 1.0;
                    if scores[i] > scores[j] {
                        good += 1.0;
                    } else if scores[i] == scores[j] {
                        good += 0.5;
                    }
                }
            }
        }
        good / total
    }

    #[test]
    fn separable_toy_set() {
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 - 19.5) / 10.0]).collect();
        let labels: Vec<u8> = xs.iter().map(|x| u8::from(x[0] >= 0.0)).collect();
        let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let data = rows(&xs);
        let m = train_property_model(Property::Multimodality, &data, &y, &BoostParams::default(), 1)
            .unwrap();
        let scores: Vec<f64> = data.iter().map(|r| m.predict(r).unwrap()).collect();
        assert_eq!(pairwise_auc(&scores, &labels), 1.0);
        assert_eq!(auc(&scores, &labels).unwrap(), 1.0);
        for (s, l) in scores.iter().zip(&labels) {
            assert!((0.0..=1.0).contains(s));
            if *l == 1 {
                assert!(*s > 0.5);
            }
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let data = rows(&[vec![0.0], vec![1.0]]);
        assert!(matches!(
            train_property_model(Property::Multimodality, &data, &[1.0, 1.0], &BoostParams::default(), 0),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn deterministic_and_round_trips() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = xs.iter().map(|x| f64::from(u8::from(x[0] * x[1] > 0.2))).collect();
        let data = rows(&xs);
        let p = BoostParams::default();
        let a = train_property_model(Property::GlobalLocalContrast, &data, &y, &p, 7).unwrap();
        let b = train_property_model(Property::GlobalLocalContrast, &data, &y, &p, 7).unwrap();
        assert_eq!(a, b);
        let back = PropertyModel::from_json(&a.to_json().unwrap()).unwrap();
        for r in &data {
            assert_eq!(
                a.predict(r).unwrap().to_bits(),
                back.predict(r).unwrap().to_bits()
            );
            assert_eq!(a.raw_score(&r.values).to_bits(), back.raw_score(&r.values).to_bits());
        }
    }

    #[test]
    fn predictions_are_clamped_and_schema_checked() {
        let data = rows(&[vec![-1.0], vec![1.0], vec![-2.0], vec![2.0]]);
        let m = train_property_model(
            Property::Multimodality,
            &data,
            &[0.0, 1.0, 0.0, 1.0],
            &BoostParams::default(),
            0,
        )
        .unwrap();
        for v in [-1e9, -1.0, 0.0, 1.0, 1e9] {
            let s = m.predict(&rows(&[vec![v]])[0]).unwrap();
            assert!((0.0..=1.0).contains(&s));
        }
        let other = Standardized {
            schema_id: "other".into(),
            values: vec![0.0],
        };
        assert!(matches!(m.predict(&other), Err(Error::SchemaMismatch(_))));
        let mut bad = m.clone();
        bad.meta.format = "lf-gbdt/0".into();
        assert!(PropertyModel::from_json(&bad.to_json().unwrap()).is_err());
    }

    #[test]
    fn auc_with_ties() {
        assert_eq!(auc(&[0.5, 0.5], &[0, 1]).unwrap(), 0.5);
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert!(auc(&[0.1], &[1]).is_err());
    }
}
