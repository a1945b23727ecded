//! (μ,λ) evolution of candidate problems with fitness sharing in ELA space.

mod run;
mod scorer;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ela::{ela_distance, Standardized};
use crate::error::{Error, Result};
use crate::models::{Property, SeparabilityReport};

pub use run::{AuditLog, AuditRecord, Engine, EngineConfig, EngineState, GenerationSummary};
pub use scorer::{Evaluation, Scorer};

/// Fitness assigned to individuals whose evaluation failed.
pub const WORST: f64 = -1.0;

/// Niche radius used when the population has no spread.
pub const SIGMA_FALLBACK: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Present,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Target {
    pub property: Property,
    pub polarity: Polarity,
}

impl Target {
    pub fn present(property: Property) -> Self {
        Self {
            property,
            polarity: Polarity::Present,
        }
    }

    pub fn absent(property: Property) -> Self {
        Self {
            property,
            polarity: Polarity::Absent,
        }
    }

    /// Score oriented so that higher is better for this target.
    pub fn oriented(&self, score: f64) -> f64 {
        match self.polarity {
            Polarity::Present => score,
            Polarity::Absent => 1.0 - score,
        }
    }

    pub fn describe(&self) -> String {
        let want = match self.polarity {
            Polarity::Present => "The problem SHOULD have this property.",
            Polarity::Absent => "The problem should NOT have this property.",
        };
        format!("{} {want}", self.property.description())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Single,
    Pair,
    NotCombo,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetSpec {
    pub targets: Vec<Target>,
    pub category: Category,
}

impl TargetSpec {
    pub fn single(p: Property) -> Self {
        Self {
            targets: vec![Target::present(p)],
            category: Category::Single,
        }
    }

    pub fn pair(a: Property, b: Property) -> Result<Self> {
        let s = Self {
            targets: vec![Target::present(a), Target::present(b)],
            category: Category::Pair,
        };
        s.validate().map(|_| s)
    }

    /// `absent` must be a homogeneity property.
    pub fn not_combo(absent: Property, present: Property) -> Result<Self> {
        let s = Self {
            targets: vec![Target::absent(absent), Target::present(present)],
            category: Category::NotCombo,
        };
        s.validate().map(|_| s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.targets.len();
        let distinct = n < 2 || self.targets[0].property != self.targets[1].property;
        let ok = distinct
            && match self.category {
                Category::Single => n == 1,
                Category::Pair => n == 2,
                Category::NotCombo => {
                    let absent: Vec<&Target> = self
                        .targets
                        .iter()
                        .filter(|t| t.polarity == Polarity::Absent)
                        .collect();
                    n == 2 && absent.len() == 1 && absent[0].property.is_homogeneity()
                }
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid target spec {}", self.label())))
        }
    }

    /// Stable group name, e.g. `multimodality+separability` or
    /// `not_basin_size_homogeneity+multimodality`.
    pub fn label(&self) -> String {
        self.targets
            .iter()
            .map(|t| match t.polarity {
                Polarity::Present => t.property.name().to_string(),
                Polarity::Absent => format!("not_{}", t.property.name()),
            })
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn descriptions(&self) -> Vec<String> {
        self.targets.iter().map(Target::describe).collect()
    }

    /// All groups: 5 singles, 10 pairs, and each absent homogeneity property
    /// with each other property present.
    pub fn all_groups() -> Vec<TargetSpec> {
        let mut out: Vec<TargetSpec> = Property::ALL.iter().map(|&p| Self::single(p)).collect();
        for (i, &a) in Property::ALL.iter().enumerate() {
            for &b in &Property::ALL[i + 1..] {
                out.push(Self::pair(a, b).expect("distinct properties"));
            }
        }
        for &h in Property::ALL.iter().filter(|p| p.is_homogeneity()) {
            for &p in Property::ALL.iter().filter(|&&p| p != h) {
                out.push(Self::not_combo(h, p).expect("homogeneity property"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalSource {
    Generator,
    /// The generator failed and the slot fell back to a local mutation.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub lineage: u64,
    pub parent: Option<u64>,
    pub generation: usize,
    pub expr: String,
    pub source: ProposalSource,
    pub features: Option<Standardized>,
    pub scores: BTreeMap<Property, f64>,
    pub separability: Option<SeparabilityReport>,
    pub raw_fitness: f64,
    pub shared_fitness: f64,
    pub failure: Option<Failure>,
}

impl Individual {
    pub fn is_scored(&self) -> bool {
        self.features.is_some()
    }

    /// `F / F̂`, the divisor applied by fitness sharing.
    pub fn sharing_factor(&self) -> Option<f64> {
        (self.is_scored() && self.shared_fitness > 0.0).then(|| self.raw_fitness / self.shared_fitness)
    }
}

/// Mean over targets of the polarity-oriented scores.
pub fn raw_fitness(scores: &[(Target, f64)]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("fitness needs at least one target".into()));
    }
    Ok(scores.iter().map(|(t, s)| t.oriented(*s)).sum::<f64>() / scores.len() as f64)
}

/// Mean pairwise ELA distance, or [`SIGMA_FALLBACK`] when there are fewer than
/// two vectors or no spread.
pub fn adaptive_sigma(features: &[&Standardized]) -> Result<f64> {
    let n = features.len();
    if n < 2 {
        return Ok(SIGMA_FALLBACK);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += ela_distance(features[i], features[j])?;
        }
    }
    let mean = total / (n * (n - 1) / 2) as f64;
    Ok(if mean < 1e-9 { SIGMA_FALLBACK } else { mean })
}

/// `F̂_i = F_i / max(1, Σ_{j≠i} max(0, 1 - D(i,j)/σ))` over feature-bearing
/// individuals; the rest get [`WORST`].
pub fn shared_fitness(fitness: &[f64], features: &[Option<&Standardized>], sigma: f64) -> Result<Vec<f64>> {
    if fitness.len() != features.len() {
        return Err(Error::InvalidArgument("fitness and features differ in length".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let n = fitness.len();
    let mut out = vec![WORST; n];
    for i in 0..n {
        let Some(fi) = features[i] else { continue };
        let mut denom = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            if let Some(fj) = features[j] {
                denom += (1.0 - ela_distance(fi, fj)? / sigma).max(0.0);
            }
        }
        out[i] = fitness[i] / denom.max(1.0);
    }
    Ok(out)
}

/// The `mu` best offspring by shared fitness; ties go to the lower lineage id.
pub fn select_comma(offspring: &[Individual], mu: usize) -> Result<Vec<Individual>> {
    if offspring.len() < mu || mu == 0 {
        return Err(Error::InvalidArgument(format!(
            "cannot select {mu} parents from {} offspring",
            offspring.len()
        )));
    }
    let mut ranked: Vec<&Individual> = offspring.iter().collect();
    ranked.sort_by(|a, b| {
        b.shared_fitness
            .total_cmp(&a.shared_fitness)
            .then(a.lineage.cmp(&b.lineage))
    });
    Ok(ranked.into_iter().take(mu).cloned().collect())
}

/// Deterministic feedback text for the generator.
pub fn compose_feedback(ind: &Individual, spec: &TargetSpec) -> String {
    let mut s = String::new();
    if let Some(f) = &ind.failure {
        let _ = write!(s, "The problem could not be scored: it failed at the {} stage ({}).", f.stage, f.message);
        return s;
    }
    for t in &spec.targets {
        let polarity = match t.polarity {
            Polarity::Present => "present",
            Polarity::Absent => "absent",
        };
        match ind.scores.get(&t.property) {
            Some(v) => {
                let _ = writeln!(s, "{} (wanted {polarity}): score {v:.2}", t.property);
            }
            None => {
                let _ = writeln!(s, "{} (wanted {polarity}): not scored", t.property);
            }
        }
        if t.property == Property::Separability {
            if let Some(r) = &ind.separability {
                let _ = writeln!(
                    s,
                    "  cross-term violations {:.2}, superposition violations {:.2}",
                    r.cross_violation_rate, r.superposition_violation_rate
                );
            }
        }
    }
    let _ = write!(s, "combined fitness {:.2}", ind.raw_fitness);
    match ind.sharing_factor() {
        Some(k) if k > 1.0 + 1e-12 => {
            let _ = write!(
                s,
                "; similar problems already exist, so fitness was divided by {k:.2} to {:.2}",
                ind.shared_fitness
            );
        }
        _ => s.push_str("; no similar problems in the population"),
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(values: Vec<f64>) -> Standardized {
        Standardized {
            schema_id: "s".into(),
            values,
        }
    }

    fn individual(lineage: u64, shared: f64) -> Individual {
        Individual {
            lineage,
            parent: None,
            generation: 1,
            expr: "x1".into(),
            source: ProposalSource::Generator,
            features: Some(sv(vec![0.0])),
            scores: BTreeMap::new(),
            separability: None,
            raw_fitness: shared,
            shared_fitness: shared,
            failure: None,
        }
    }

    #[test]
    fn raw_fitness_examples() {
        let a = Target::present(Property::Multimodality);
        let b = Target::present(Property::Separability);
        assert!((raw_fitness(&[(a, 0.9), (b, 0.7)]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(raw_fitness(&[(a, 0.6)]).unwrap(), 0.6);
        assert_eq!(raw_fitness(&[(Target::absent(Property::BasinSizeHomogeneity), 0.2)]).unwrap(), 0.8);
        assert!(raw_fitness(&[]).is_err());
    }

    #[test]
    fn sigma_examples() {
        // Points 0, 2, 6 on a line: distances 2, 6, 4.
        let v = [sv(vec![0.0]), sv(vec![2.0]), sv(vec![6.0])];
        assert_eq!(adaptive_sigma(&v.iter().collect::<Vec<_>>()).unwrap(), 4.0);
        let same = [sv(vec![1.0]), sv(vec![1.0])];
        assert_eq!(adaptive_sigma(&same.iter().collect::<Vec<_>>()).unwrap(), 1.0);
        assert_eq!(adaptive_sigma(&[&v[0]]).unwrap(), 1.0);
    }

    #[test]
    fn sharing_examples() {
        let x = sv(vec![0.5, 0.5]);
        let two = shared_fitness(&[0.8, 0.8], &[Some(&x), Some(&x)], 1.0).unwrap();
        assert_eq!(two, vec![0.8, 0.8]);
        let three = shared_fitness(&[0.9; 3], &[Some(&x); 3], 1.0).unwrap();
        assert_eq!(three, vec![0.45; 3]);
        let far = sv(vec![10.0, 10.0]);
        let iso = shared_fitness(&[0.7, 0.3], &[Some(&x), Some(&far)], 2.0).unwrap();
        assert_eq!(iso, vec![0.7, 0.3]);
        let failed = shared_fitness(&[0.7, 0.3], &[Some(&x), None], 2.0).unwrap();
        assert_eq!(failed, vec![0.7, WORST]);
    }

    #[test]
    fn comma_selection() {
        let off = vec![individual(1, 0.1), individual(2, 0.9), individual(3, 0.5)];
        let picked = select_comma(&off, 2).unwrap();
        assert_eq!(picked.iter().map(|i| i.lineage).collect::<Vec<_>>(), vec![2, 3]);
        let tied = vec![individual(7, 0.5), individual(4, 0.5), individual(5, 0.1)];
        assert_eq!(select_comma(&tied, 1).unwrap()[0].lineage, 4);
        assert!(select_comma(&off, 4).is_err());
    }

    #[test]
    fn target_groups() {
        let groups = TargetSpec::all_groups();
        assert_eq!(groups.iter().filter(|g| g.category == Category::Single).count(), 5);
        assert_eq!(groups.iter().filter(|g| g.category == Category::Pair).count(), 10);
        assert_eq!(groups.iter().filter(|g| g.category == Category::NotCombo).count(), 8);
        for g in &groups {
            g.validate().unwrap();
        }
        assert!(TargetSpec::not_combo(Property::Multimodality, Property::Separability).is_err());
        assert!(TargetSpec::pair(Property::Multimodality, Property::Multimodality).is_err());
        assert_eq!(
            TargetSpec::not_combo(Property::BasinSizeHomogeneity, Property::Multimodality)
                .unwrap()
                .label(),
            "not_basin_size_homogeneity+multimodality"
        );
    }

    #[test]
    fn feedback_contract() {
        let spec = TargetSpec::single(Property::Multimodality);
        let mut ind = individual(1, 0.93);
        ind.scores.insert(Property::Multimodality, 0.93);
        let text = compose_feedback(&ind, &spec);
        assert!(text.contains("multimodality") && text.contains("0.93"));
        assert_eq!(text, compose_feedback(&ind.clone(), &spec));
        ind.failure = Some(Failure {
            stage: "features".into(),
            message: "constant".into(),
        });
        assert!(compose_feedback(&ind, &spec).contains("features stage"));
    }

    fn population() -> impl Strategy<Value = (Vec<f64>, Vec<Option<Vec<f64>>>)> {
        (2usize..12).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..=1.0, n),
                prop::collection::vec(
                    prop::option::weighted(0.9, prop::collection::vec(-3.0f64..3.0, 3)),
                    n,
                ),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn sharing_never_increases_fitness((fit, feats) in population()) {
            let vecs: Vec<Option<Standardized>> = feats.into_iter().map(|f| f.map(sv)).collect();
            let refs: Vec<Option<&Standardized>> = vecs.iter().map(Option::as_ref).collect();
            let present: Vec<&Standardized> = refs.iter().flatten().copied().collect();
            let sigma = adaptive_sigma(&present).unwrap();
            prop_assert!(sigma > 0.0);
            let shared = shared_fitness(&fit, &refs, sigma).unwrap();
            for (i, s) in shared.iter().enumerate() {
                prop_assert!(*s <= fit[i]);
            }
        }
    }

    proptest! {
        #[test]
        fn duplicates_are_penalized(f in 0.01f64..=1.0, others in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 0..5)) {
            let me = sv(vec![0.0, 0.0]);
            let mut vecs: Vec<Standardized> = others.into_iter().map(sv).collect();
            vecs.push(me.clone());
            vecs.push(me.clone());
            let score = |vs: &[Standardized]| {
                let refs: Vec<Option<&Standardized>> = vs.iter().map(Some).collect();
                shared_fitness(&vec![f; vs.len()], &refs, 1.5).unwrap()[vs.len() - 1]
            };
            let before = score(&vecs);
            vecs.push(me);
            prop_assert!(score(&vecs) < before);
        }
    }
}
