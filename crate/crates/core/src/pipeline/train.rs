use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    feature_table_bytes, hash_json, read_feature_table, read_file, string_tag, CampaignConfig, FeatureRow,
    Manifest,
};
use crate::bbob;
use crate::ela::{features_across_dims, fit_scaler, FeatureMeta, FeatureScaler, SCHEMA_VERSION};
use crate::engine::Scorer;
use crate::error::{Error, Result};
use crate::models::{auc, binarize_labels, train_property_model, PropertyLabelTable, PropertyModel};
use crate::rng::derive_seed;

pub const CORPUS_TABLE: &str = "features/corpus.csv";
pub const SCALER_FILE: &str = "scaler.json";
const SUMMARY_FILE: &str = "train_summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub config_hash: String,
    pub seed: u64,
    pub rows: usize,
    pub features_retained: usize,
    pub features_excluded: usize,
    /// In-sample AUC per property.
    pub auc: BTreeMap<String, f64>,
    /// True when an intact previous run with the same inputs was reused.
    #[serde(default)]
    pub reused: bool,
}

fn inputs_hash(cfg: &CampaignConfig) -> String {
    hash_json(&json!({
        "seed": cfg.seed,
        "corpus": cfg.corpus,
        "features": cfg.features,
        "models": cfg.models,
    }))
}

fn model_file(p: crate::models::Property) -> String {
    format!("models/{}.json", p.name())
}

/// Seed of the feature designs used for every candidate expression.
pub(crate) fn candidate_feature_seed(cfg: &CampaignConfig) -> u64 {
    derive_seed(cfg.seed, &[string_tag("candidate-features")])
}

pub(crate) fn corpus_meta(cfg: &CampaignConfig) -> FeatureMeta {
    FeatureMeta {
        schema_version: SCHEMA_VERSION.into(),
        dims: cfg.corpus.dims.clone(),
        sample_size: cfg.features.per_dim,
        seed: cfg.seed,
        repetitions: cfg.features.repetitions,
    }
}

/// Features of every (function, instance) of the corpus, each with seed
/// `derive_seed(seed, [fid, iid])`.
pub(crate) fn corpus_rows(cfg: &CampaignConfig) -> Result<Vec<FeatureRow>> {
    let pairs: Vec<(usize, usize)> = cfg
        .corpus
        .functions
        .iter()
        .flat_map(|&f| (1..=cfg.corpus.instances).map(move |i| (f, i)))
        .collect();
    pairs
        .par_iter()
        .map(|&(fid, iid)| {
            let seed = derive_seed(cfg.seed, &[fid as u64, iid as u64]);
            let features = features_across_dims(&cfg.corpus.dims, cfg.features, seed, |d| {
                Ok(bbob::instantiate(fid, iid, d)?.0)
            })
            .map_err(|e| Error::Training(format!("corpus f{fid} i{iid}: {e}")))?;
            Ok(FeatureRow {
                id: format!("bbob-f{fid}-i{iid}"),
                source: "bbob".into(),
                group: format!("f{fid}"),
                features,
            })
        })
        .collect()
}

pub(crate) fn function_id(row: &FeatureRow) -> Option<usize> {
    row.group.strip_prefix('f')?.parse().ok()
}

/// Computes corpus features, fits the scaler and one model per property.
pub fn cmd_train(cfg: &CampaignConfig) -> Result<TrainSummary> {
    let root = cfg.output_dir.as_path();
    let inputs = inputs_hash(cfg);
    if Manifest::reusable(root, "train", &inputs).is_some() {
        let mut s: TrainSummary = serde_json::from_str(&read_file(&root.join(SUMMARY_FILE))?)?;
        log::info!("train: inputs unchanged, reusing {}", root.display());
        s.reused = true;
        return Ok(s);
    }
    let mut manifest = Manifest::new("train", cfg, inputs);
    log::info!(
        "train: {} functions x {} instances at dims {:?}",
        cfg.corpus.functions.len(),
        cfg.corpus.instances,
        cfg.corpus.dims
    );
    let rows = corpus_rows(cfg)?;
    manifest.write(root, CORPUS_TABLE, &feature_table_bytes(&rows)?)?;

    let vectors: Vec<_> = rows.iter().map(|r| r.features.clone()).collect();
    let scaler = fit_scaler(&vectors)?;
    manifest.write(root, SCALER_FILE, serde_json::to_string_pretty(&scaler)?.as_bytes())?;
    let x = vectors
        .iter()
        .map(|v| scaler.standardize(v))
        .collect::<Result<Vec<_>>>()?;

    let table = PropertyLabelTable::bundled();
    let mut aucs = BTreeMap::new();
    for &p in &cfg.models.properties {
        let labels = binarize_labels(&table, p.name())?;
        let y: Vec<u8> = rows
            .iter()
            .map(|r| {
                function_id(r)
                    .and_then(|f| labels.labels.get(&f).copied())
                    .ok_or_else(|| Error::Training(format!("no {p} label for {}", r.id)))
            })
            .collect::<Result<_>>()?;
        let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let model = train_property_model(
            p,
            &x,
            &yf,
            &cfg.models.boost,
            derive_seed(cfg.seed, &[string_tag(p.name())]),
        )?;
        let scores = x.iter().map(|r| model.predict(r)).collect::<Result<Vec<_>>>()?;
        let a = auc(&scores, &y)?;
        log::info!("train: {p} in-sample AUC {a:.4}");
        aucs.insert(p.name().to_string(), a);
        manifest.write(root, &model_file(p), model.to_json()?.as_bytes())?;
    }
    let summary = TrainSummary {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        rows: rows.len(),
        features_retained: scaler.features.len(),
        features_excluded: scaler.excluded.len(),
        auc: aucs,
        reused: false,
    };
    manifest.write(root, SUMMARY_FILE, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    manifest.save(root)?;
    Ok(summary)
}

pub(crate) fn load_scaler(root: &Path) -> Result<FeatureScaler> {
    Ok(serde_json::from_str(&read_file(&root.join(SCALER_FILE))?)?)
}

pub(crate) fn load_corpus(cfg: &CampaignConfig) -> Result<Vec<FeatureRow>> {
    read_feature_table(&cfg.output_dir.join(CORPUS_TABLE), &corpus_meta(cfg))
}

/// Loads the trained scaler and models of a campaign.
pub fn load_scorer(cfg: &CampaignConfig) -> Result<Scorer> {
    let root = cfg.output_dir.as_path();
    let scaler = load_scaler(root)?;
    let mut models = BTreeMap::new();
    for &p in &cfg.models.properties {
        let path = root.join(model_file(p));
        read_file(&path)?;
        let m = PropertyModel::load(&path)?;
        if m.meta.scaler_schema_id != scaler.schema_id() {
            return Err(Error::SchemaMismatch(format!(
                "{} was trained against scaler {}, found {}",
                path.display(),
                m.meta.scaler_schema_id,
                scaler.schema_id()
            )));
        }
        models.insert(p, m);
    }
    Ok(Scorer {
        scaler,
        models,
        dims: cfg.corpus.dims.clone(),
        sampling: cfg.features,
        separability: cfg.separability,
        feature_seed: candidate_feature_seed(cfg),
    })
}
