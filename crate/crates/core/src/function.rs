//! Objective functions over box domains.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower_k, upper_k]` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "axis {k}: lower {lo} must be finite and below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval on every axis.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    /// `[-5, 5]^dim`, the domain used throughout for generated and BBOB problems.
    pub fn standard(dim: usize) -> Self {
        Self::cube(dim, -5.0, 5.0).expect("dim >= 1")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (k, &v) in x.iter().enumerate() {
            if !(v >= self.lower[k] && v <= self.upper[k]) {
                return Err(Error::OutsideDomain {
                    point: x.to_vec(),
                    axis: k,
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check(x).is_ok()
    }
}

type Evaluator = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A deterministic black-box `f: X -> R` over a box domain.
///
/// Cloning is cheap: the evaluator is shared.
#[derive(Clone)]
pub struct ObjectiveFunction {
    id: String,
    domain: Domain,
    evaluator: Arc<Evaluator>,
}

impl fmt::Debug for ObjectiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveFunction")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl ObjectiveFunction {
    pub fn new<F>(id: impl Into<String>, domain: Domain, evaluator: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            domain,
            evaluator: Arc::new(evaluator),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.domain.check(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    /// Evaluates without the domain check. Callers must guarantee `x` has the
    /// right length; points outside the box are evaluated as-is.
    #[inline]
    pub fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    pub fn evaluate_batch<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<Vec<f64>> {
        points
            .iter()
            .enumerate()
            .map(|(index, p)| {
                self.evaluate(p.as_ref()).map_err(|e| Error::Batch {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// Returns `f(x) + offset` under a new id.
    pub fn shifted(&self, offset: f64) -> Self {
        let inner = self.evaluator.clone();
        Self::new(
            format!("{}+{}", self.id, offset),
            self.domain.clone(),
            move |x| inner(x) + offset,
        )
    }
}

/// Points with their objective values, tagged with the seed of the design.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub seed: u64,
}

impl SampleSet {
    pub fn evaluate(f: &ObjectiveFunction, points: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let values = f.evaluate_batch(&points)?;
        Ok(Self {
            points,
            values,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Result of [`normalize_objective`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    /// Set when every input value was equal; `values` is then all 0.5.
    pub degenerate: bool,
}

/// Affine rescaling of observed values so that min maps to 0 and max to 1.
pub fn normalize_objective(values: &[f64]) -> Result<Normalized> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot normalize an empty value set".into(),
        ));
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = max - min;
    if !(span > 0.0) || !span.is_finite() {
        return Ok(Normalized {
            values: vec![0.5; values.len()],
            degenerate: true,
        });
    }
    let values = values
        .iter()
        .map(|&v| ((v - min) / span).clamp(0.0, 1.0))
        .collect();
    Ok(Normalized {
        values,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sphere() -> ObjectiveFunction {
        ObjectiveFunction::new("sphere", Domain::standard(2), |x| {
            x.iter().map(|v| v * v).sum()
        })
    }

    #[test]
    fn evaluate_sphere() {
        let f = sphere();
        assert_eq!(f.evaluate(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(f.evaluate(&[1.0, 2.0]).unwrap(), 5.0);
        assert!(matches!(
            f.evaluate(&[6.0, 0.0]),
            Err(Error::OutsideDomain { axis: 0, .. })
        ));
    }

    #[test]
    fn batch_preserves_order_and_reports_index() {
        let f = sphere();
        assert_eq!(
            f.evaluate_batch(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap(),
            vec![0.0, 1.0]
        );
        assert!(f.evaluate_batch::<Vec<f64>>(&[]).unwrap().is_empty());
        match f.evaluate_batch(&[vec![0.0, 0.0], vec![0.0, 9.0]]) {
            Err(Error::Batch { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn batch_matches_loop() {
        use rand::Rng;
        let f = sphere();
        let mut rng = crate::rng::seed_rng(3);
        let pts: Vec<Vec<f64>> = (0..100)
            .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        let batch = f.evaluate_batch(&pts).unwrap();
        for (p, v) in pts.iter().zip(batch) {
            assert_eq!(f.evaluate(p).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn invalid_domains() {
        assert!(Domain::new(vec![], vec![]).is_err());
        assert!(Domain::new(vec![1.0], vec![1.0]).is_err());
        assert!(Domain::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_objective(&[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(n.values, vec![0.0, 0.5, 1.0]);
        assert!(!n.degenerate);
        let n = normalize_objective(&[7.0]).unwrap();
        assert_eq!(n.values, vec![0.5]);
        assert!(n.degenerate);
        assert!(normalize_objective(&[]).is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_bounded_monotone_idempotent(v in prop::collection::vec(-1e6f64..1e6, 2..50)) {
            let n = normalize_objective(&v).unwrap();
            prop_assume!(!n.degenerate);
            for (i, a) in n.values.iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(a));
                for (j, b) in n.values.iter().enumerate() {
                    if v[i] < v[j] { prop_assert!(a <= b); }
                }
            }
            let twice = normalize_objective(&n.values).unwrap();
            for (a, b) in twice.values.iter().zip(&n.values) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
