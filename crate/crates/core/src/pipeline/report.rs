use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::generate::{audit_records, load_summary, CANDIDATES_FILE};
use super::{hash_json, read_jsonl, CampaignConfig, Manifest, ProblemRecord};
use crate::engine::AuditRecord;
use crate::error::{Error, Result};

/// Fitness a cycle's shared fitness must exceed to count as a success.
pub const SUCCESS_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepLevel {
    pub threshold: f64,
    pub passing: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges, `bins + 1` values over `[0, 1]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub group: String,
    /// Evaluated proposals (one per audit record).
    pub cycles: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub candidates: usize,
    pub retained: usize,
    pub retention_ratio: f64,
    pub sweep: Vec<SweepLevel>,
    pub score_histograms: BTreeMap<String, Histogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub config_hash: String,
    pub seed: u64,
    pub groups: Vec<GroupReport>,
}

/// Fraction of cycles whose shared fitness exceeds [`SUCCESS_LEVEL`].
pub fn success_rate(records: &[AuditRecord]) -> (usize, f64) {
    let ok = records
        .iter()
        .filter(|r| r.shared_fitness.is_some_and(|f| f > SUCCESS_LEVEL))
        .count();
    let rate = if records.is_empty() {
        0.0
    } else {
        ok as f64 / records.len() as f64
    };
    (ok, rate)
}

pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let mut counts = vec![0; bins];
    for &v in values {
        let b = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram {
        edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
        counts,
    }
}

fn group_report(
    group: &str,
    records: &[AuditRecord],
    candidates: &[&ProblemRecord],
    cfg: &CampaignConfig,
) -> GroupReport {
    let (successes, success_rate) = success_rate(records);
    let retained = candidates.iter().filter(|c| c.retained).count();
    let ratio = |k: usize| {
        if candidates.is_empty() {
            0.0
        } else {
            k as f64 / candidates.len() as f64
        }
    };
    let sweep = cfg
        .report
        .thresholds
        .iter()
        .map(|&t| {
            let passing = candidates.iter().filter(|c| c.passes(t)).count();
            SweepLevel {
                threshold: t,
                passing,
                ratio: ratio(passing),
            }
        })
        .collect();
    let mut scores: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        for (p, s) in &r.scores {
            scores.entry(p.name().to_string()).or_default().push(*s);
        }
    }
    GroupReport {
        group: group.into(),
        cycles: records.len(),
        successes,
        success_rate,
        candidates: candidates.len(),
        retained,
        retention_ratio: ratio(retained),
        sweep,
        score_histograms: scores
            .into_iter()
            .map(|(p, v)| (p, histogram(&v, cfg.report.histogram_bins)))
            .collect(),
    }
}

/// Success rates, retention ratios, threshold sweeps and score histograms per
/// group of a generated campaign.
pub fn cmd_report(cfg: &CampaignConfig) -> Result<ReportSummary> {
    let root = cfg.output_dir.as_path();
    let summary = load_summary(cfg)?;
    let audits = audit_records(cfg)?;
    let candidates: Vec<ProblemRecord> = read_jsonl(&root.join(CANDIDATES_FILE))?;
    if audits.values().all(Vec::is_empty) {
        return Err(Error::InvalidArgument(format!(
            "campaign {} has no generation cycles",
            root.display()
        )));
    }
    let groups: Vec<GroupReport> = summary
        .groups
        .iter()
        .map(|g| {
            let cands: Vec<&ProblemRecord> = candidates.iter().filter(|c| c.group == g.group).collect();
            group_report(&g.group, &audits[&g.group], &cands, cfg)
        })
        .collect();

    let mut manifest = Manifest::new(
        "report",
        cfg,
        hash_json(&json!({ "seed": cfg.seed, "report": cfg.report })),
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "group".to_string(),
        "cycles".into(),
        "success_rate".into(),
        "candidates".into(),
        "retained".into(),
        "retention_ratio".into(),
    ];
    header.extend(cfg.report.thresholds.iter().map(|t| format!("ratio_at_{t}")));
    w.write_record(&header)?;
    for g in &groups {
        let mut rec = vec![
            g.group.clone(),
            g.cycles.to_string(),
            g.success_rate.to_string(),
            g.candidates.to_string(),
            g.retained.to_string(),
            g.retention_ratio.to_string(),
        ];
        rec.extend(g.sweep.iter().map(|s| s.ratio.to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    manifest.write(root, "report/groups.csv", &bytes)?;
    let out = ReportSummary {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        groups,
    };
    manifest.write(root, "report/summary.json", serde_json::to_string_pretty(&out)?.as_bytes())?;
    manifest.save(root)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ProposalSource;

    fn rec(shared: Option<f64>) -> AuditRecord {
        AuditRecord {
            generation: 0,
            lineage: 1,
            parent: None,
            expr: "x1".into(),
            source: ProposalSource::Generator,
            scores: BTreeMap::new(),
            raw_fitness: shared,
            shared_fitness: shared,
            sigma_share: 1.0,
            sigma_pool: "offspring".into(),
            failure: None,
            selected: false,
        }
    }

    #[test]
    fn all_successful_cycles_give_rate_one() {
        let rs = vec![rec(Some(0.6)), rec(Some(0.99))];
        assert_eq!(success_rate(&rs), (2, 1.0));
    }

    #[test]
    fn failures_and_boundary_are_not_successes() {
        let rs = vec![rec(Some(0.5)), rec(None), rec(Some(0.51)), rec(Some(0.1))];
        assert_eq!(success_rate(&rs), (1, 0.25));
    }

    #[test]
    fn histogram_bins_cover_the_unit_interval() {
        let h = histogram(&[0.0, 0.05, 0.5, 1.0, 0.999], 10);
        assert_eq!(h.counts.iter().sum::<usize>(), 5);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[5], 1);
        assert_eq!(h.counts[9], 2);
        assert_eq!(h.edges.len(), 11);
    }
}
