use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::generate::GENERATED_TABLE;
use super::train::{corpus_meta, load_corpus};
use super::{hash_json, read_feature_table, CampaignConfig, FeatureRow, Manifest};
use crate::ela::fit_scaler;
use crate::engine::{Polarity, TargetSpec};
use crate::error::{Error, Result};
use crate::models::Property;
use crate::pipeline::config::parse_group;
use crate::stats::tsne_embed;

/// Labels a generated group may receive in the embedding.
pub const EMBED_GROUPS: [&str; 5] = [
    "bbob",
    "homogeneous_basin_size",
    "non_homogeneous_basin_size",
    "other",
    "mixed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedSummary {
    pub config_hash: String,
    pub seed: u64,
    pub rows: usize,
    pub features: usize,
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub k: usize,
    pub trustworthiness: f64,
    pub kl_divergence: f64,
    pub group_counts: BTreeMap<String, usize>,
}

/// Coarse grouping of a target group for the embedding:
/// basin-size homogeneity targeted without contrast, contrast targeted
/// without basin-size homogeneity, none of multimodality / basin-size
/// homogeneity / contrast targeted, or anything else.
pub fn embedding_group(spec: &TargetSpec) -> &'static str {
    let present = |p: Property| {
        spec.targets
            .iter()
            .any(|t| t.property == p && t.polarity == Polarity::Present)
    };
    let bsh = present(Property::BasinSizeHomogeneity);
    let glc = present(Property::GlobalLocalContrast);
    let mm = present(Property::Multimodality);
    if bsh && !glc {
        "homogeneous_basin_size"
    } else if glc && !bsh {
        "non_homogeneous_basin_size"
    } else if !bsh && !glc && !mm {
        "other"
    } else {
        "mixed"
    }
}

fn label_of(row: &FeatureRow) -> Result<&'static str> {
    if row.source == "bbob" {
        return Ok("bbob");
    }
    Ok(embedding_group(&parse_group(&row.group)?))
}

/// Joint standardization of corpus and generated features, then t-SNE.
pub fn cmd_embed(cfg: &CampaignConfig) -> Result<EmbedSummary> {
    let root = cfg.output_dir.as_path();
    let mut rows = load_corpus(cfg)?;
    let mut manifest = Manifest::new(
        "embed",
        cfg,
        hash_json(&json!({ "seed": cfg.seed, "embed": cfg.embed })),
    );
    if cfg.embed.include_generated {
        let path = root.join(GENERATED_TABLE);
        if path.exists() {
            let generated = read_feature_table(&path, &corpus_meta(cfg))?;
            if let (Some(a), Some(b)) = (rows.first(), generated.first()) {
                if a.features.names != b.features.names {
                    return Err(Error::SchemaMismatch(
                        "corpus and generated feature tables have different columns".into(),
                    ));
                }
            }
            rows.extend(generated);
        } else {
            log::warn!("embed: {} not found; embedding the corpus only", path.display());
        }
    }
    if rows.len() < 2 {
        return Err(Error::InvalidArgument("embedding needs at least two rows".into()));
    }
    let vectors: Vec<_> = rows.iter().map(|r| r.features.clone()).collect();
    let scaler = fit_scaler(&vectors)?;
    let data = vectors
        .iter()
        .map(|v| scaler.standardize(v).map(|s| s.values))
        .collect::<Result<Vec<_>>>()?;
    let result = tsne_embed(&data, &cfg.embed.tsne)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "source", "group", "x", "y"])?;
    let mut counts = BTreeMap::new();
    for (r, c) in rows.iter().zip(&result.coords) {
        let label = label_of(r)?;
        *counts.entry(label.to_string()).or_insert(0) += 1;
        w.write_record([
            r.id.as_str(),
            r.source.as_str(),
            label,
            &c[0].to_string(),
            &c[1].to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    manifest.write(root, "embed/embedding.csv", &bytes)?;
    let summary = EmbedSummary {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        rows: rows.len(),
        features: scaler.features.len(),
        perplexity: result.perplexity,
        iterations: cfg.embed.tsne.iterations,
        learning_rate: cfg.embed.tsne.learning_rate,
        k: result.k,
        trustworthiness: result.trustworthiness,
        kl_divergence: result.kl_divergence,
        group_counts: counts,
    };
    log::info!(
        "embed: {} rows, trustworthiness(k={}) = {:.4}",
        summary.rows,
        summary.k,
        summary.trustworthiness
    );
    manifest.write(root, "embed/summary.json", serde_json::to_string_pretty(&summary)?.as_bytes())?;
    manifest.save(root)?;
    Ok(summary)
}
