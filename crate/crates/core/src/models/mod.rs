//! Property scorers: boosted-tree models over standardized ELA features for the
//! four learnable properties, and an analytic finite-difference test for
//! separability.

mod gbdt;
mod separability;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gbdt::{auc, train_property_model, BoostParams, ModelMeta, PropertyModel, Tree, TreeNode};
pub use separability::{separability_score, Combine, SeparabilityConfig, SeparabilityReport};

/// High-level landscape properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Multimodality,
    Separability,
    BasinSizeHomogeneity,
    SearchSpaceHomogeneity,
    GlobalLocalContrast,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::Multimodality,
        Property::Separability,
        Property::BasinSizeHomogeneity,
        Property::SearchSpaceHomogeneity,
        Property::GlobalLocalContrast,
    ];

    /// Properties scored by a trained model; separability is tested analytically.
    pub const LEARNED: [Property; 4] = [
        Property::Multimodality,
        Property::GlobalLocalContrast,
        Property::SearchSpaceHomogeneity,
        Property::BasinSizeHomogeneity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Multimodality => "multimodality",
            Property::Separability => "separability",
            Property::BasinSizeHomogeneity => "basin_size_homogeneity",
            Property::SearchSpaceHomogeneity => "search_space_homogeneity",
            Property::GlobalLocalContrast => "global_local_contrast",
        }
    }

    pub fn is_homogeneity(self) -> bool {
        matches!(
            self,
            Property::BasinSizeHomogeneity | Property::SearchSpaceHomogeneity
        )
    }

    /// Plain-language description used in generator prompts.
    pub fn description(self) -> &'static str {
        match self {
            Property::Multimodality => {
                "Multimodality refers to the number of local optima or basins of attraction \
                 in the landscape. A multimodal function has many local optima."
            }
            Property::Separability => {
                "Separability means the function can be optimized one variable at a time, \
                 i.e. it decomposes into independent per-variable subproblems without \
                 interactions between variables."
            }
            Property::BasinSizeHomogeneity => {
                "Basin-size homogeneity describes whether the basins of attraction of the \
                 local optima all have similar sizes."
            }
            Property::SearchSpaceHomogeneity => {
                "Search-space homogeneity describes whether the landscape looks alike \
                 everywhere in the domain, without distinct regions of different structure."
            }
            Property::GlobalLocalContrast => {
                "Global-local optima contrast is the difference in objective value between \
                 the global optimum and the other local optima; high contrast means the \
                 global optimum is much better than the local ones."
            }
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown property `{s}`")))
    }
}

/// Taxonomy order of categorical levels, lowest first.
pub const LEVEL_ORDER: [&str; 7] = ["none", "low", "weak", "med", "strong", "high", "deceptive"];

const BUNDLED_LABELS: &str = include_str!("../../data/bbob_labels.csv");

/// Categorical property levels per BBOB function.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyLabelTable {
    levels: BTreeMap<(usize, String), String>,
}

/// Binarized labels for one property, keyed by BBOB function id.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryLabels {
    pub property: String,
    pub labels: BTreeMap<usize, u8>,
    /// Set when the column has a single level and every label is 0.
    pub degenerate: bool,
}

impl PropertyLabelTable {
    /// The table shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_csv(BUNDLED_LABELS).expect("bundled label table is valid")
    }

    /// Parses `function_id,property,level` rows; `#` lines are comments.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut levels = BTreeMap::new();
        for row in reader.deserialize() {
            let (fid, property, level): (usize, String, String) = row?;
            if !LEVEL_ORDER.contains(&level.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "unknown level `{level}` for f{fid} {property}"
                )));
            }
            levels.insert((fid, property), level);
        }
        Ok(Self { levels })
    }

    pub fn level(&self, function_id: usize, property: &str) -> Option<&str> {
        self.levels
            .get(&(function_id, property.to_string()))
            .map(String::as_str)
    }

    pub fn properties(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.levels.keys().map(|(_, p)| p.as_str()).collect();
        out.dedup();
        out.sort();
        out.dedup();
        out
    }
}

fn level_rank(level: &str) -> usize {
    LEVEL_ORDER.iter().position(|l| *l == level).unwrap_or(usize::MAX)
}

/// The lowest observed level maps to 0, every higher level to 1.
pub fn binarize_labels(table: &PropertyLabelTable, property: &str) -> Result<BinaryLabels> {
    let column: Vec<(usize, &str)> = table
        .levels
        .iter()
        .filter(|((_, p), _)| p == property)
        .map(|((fid, _), l)| (*fid, l.as_str()))
        .collect();
    if column.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "property `{property}` is not in the label table"
        )));
    }
    let lowest = column.iter().map(|(_, l)| level_rank(l)).min().unwrap_or(0);
    let labels: BTreeMap<usize, u8> = column
        .iter()
        .map(|(fid, l)| (*fid, u8::from(level_rank(l) > lowest)))
        .collect();
    let degenerate = labels.values().all(|&v| v == 0);
    if degenerate {
        log::warn!("property `{property}` has a single level; all labels are 0");
    }
    Ok(BinaryLabels {
        property: property.to_string(),
        labels,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_is_complete() {
        let t = PropertyLabelTable::bundled();
        for p in Property::LEARNED {
            for fid in 1..=24 {
                assert!(t.level(fid, p.name()).is_some(), "f{fid} {p}");
            }
            let b = binarize_labels(&t, p.name()).unwrap();
            assert!(!b.degenerate);
            assert!(b.labels.values().any(|&v| v == 0) && b.labels.values().any(|&v| v == 1));
        }
        assert_eq!(t.level(1, "multimodality"), Some("none"));
        assert_eq!(t.level(3, "multimodality"), Some("high"));
        assert_eq!(t.level(20, "global_structure"), Some("deceptive"));
    }

    #[test]
    fn lowest_level_versus_rest() {
        let t = PropertyLabelTable::from_csv(
            "function_id,property,level\n1,m,none\n2,m,low\n3,m,high\n4,s,med\n5,s,med\n",
        )
        .unwrap();
        let b = binarize_labels(&t, "m").unwrap();
        assert_eq!(b.labels.values().copied().collect::<Vec<_>>(), vec![0, 1, 1]);
        assert!(!b.degenerate);
        let s = binarize_labels(&t, "s").unwrap();
        assert!(s.degenerate);
        assert!(s.labels.values().all(|&v| v == 0));
        assert!(binarize_labels(&t, "missing").is_err());
    }

    #[test]
    fn unknown_level_is_rejected() {
        assert!(PropertyLabelTable::from_csv("function_id,property,level\n1,m,huge\n").is_err());
    }

    #[test]
    fn property_names_round_trip() {
        for p in Property::ALL {
            assert_eq!(p.name().parse::<Property>().unwrap(), p);
        }
        assert!("unimodality".parse::<Property>().is_err());
    }
}
