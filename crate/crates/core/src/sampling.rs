//! Seeded designs: Latin hypercube, uniform, and 2D grids.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::Domain;
use crate::rng::seed_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerConfig {
    LatinHypercube { n: usize, seed: u64 },
    Uniform { n: usize, seed: u64 },
    Grid { resolution: usize },
}

impl SamplerConfig {
    pub fn sample(&self, domain: &Domain) -> Result<Vec<Vec<f64>>> {
        match *self {
            SamplerConfig::LatinHypercube { n, seed } => latin_hypercube(n, domain, seed),
            SamplerConfig::Uniform { n, seed } => uniform(n, domain, seed),
            SamplerConfig::Grid { resolution } => grid(resolution, domain),
        }
    }
}

/// Latin hypercube design: every axis is cut into `n` equal strata, each
/// stratum holds exactly one point, and points are placed uniformly at random
/// inside their stratum. Strata are matched across axes by independent random
/// permutations.
pub fn latin_hypercube(n: usize, domain: &Domain, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let mut rng = seed_rng(seed);
    let d = domain.dim();
    let mut points = vec![vec![0.0; d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..d {
        perm.shuffle(&mut rng);
        let (lo, width) = (domain.lower()[k], domain.width(k));
        for (i, p) in points.iter_mut().enumerate() {
            let u: f64 = rng.random();
            let v = lo + (perm[i] as f64 + u) / n as f64 * width;
            p[k] = v.min(domain.upper()[k]);
        }
    }
    Ok(points)
}

pub fn uniform(n: usize, domain: &Domain, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let mut rng = seed_rng(seed);
    Ok((0..n)
        .map(|_| {
            (0..domain.dim())
                .map(|k| rng.random_range(domain.lower()[k]..=domain.upper()[k]))
                .collect()
        })
        .collect())
}

/// Coordinate `k` of `r` evenly spaced values from `lo` to `hi` inclusive.
///
/// Written as a weighted sum so that grids on symmetric intervals are exactly
/// mirror-symmetric in floating point.
#[inline]
pub fn grid_coordinate(lo: f64, hi: f64, k: usize, r: usize) -> f64 {
    let m = (r - 1) as f64;
    (lo * (m - k as f64) + hi * k as f64) / m
}

/// `r × r` lattice including both bounds per axis. Row-major: the first
/// coordinate varies fastest, the row index follows the second coordinate.
pub fn grid(resolution: usize, domain: &Domain) -> Result<Vec<Vec<f64>>> {
    if domain.dim() != 2 {
        return Err(Error::UnsupportedDimension(domain.dim()));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument("grid resolution must be at least 2".into()));
    }
    let (lo, hi) = (domain.lower(), domain.upper());
    let mut points = Vec::with_capacity(resolution * resolution);
    for row in 0..resolution {
        let y = grid_coordinate(lo[1], hi[1], row, resolution);
        for col in 0..resolution {
            points.push(vec![grid_coordinate(lo[0], hi[0], col, resolution), y]);
        }
    }
    Ok(points)
}

/// Writes a design as CSV with header `x1,...,xd`.
pub fn write_design_csv<W: Write>(points: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = points.first().map_or(0, Vec::len);
    w.write_record((1..=d).map(|k| format!("x{k}")))?;
    for p in points {
        w.write_record(p.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<design csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lhs_size_and_stratification() {
        let dom = Domain::standard(2);
        let pts = latin_hypercube(250 * 2, &dom, 1).unwrap();
        assert_eq!(pts.len(), 500);
        for k in 0..2 {
            let mut bins = vec![0usize; 500];
            for p in &pts {
                assert!(dom.contains(p));
                let b = (((p[k] + 5.0) / 10.0) * 500.0).floor() as usize;
                bins[b.min(499)] += 1;
            }
            assert!(bins.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn lhs_seeding() {
        let dom = Domain::standard(3);
        assert_eq!(
            latin_hypercube(20, &dom, 5).unwrap(),
            latin_hypercube(20, &dom, 5).unwrap()
        );
        assert_ne!(
            latin_hypercube(20, &dom, 5).unwrap(),
            latin_hypercube(20, &dom, 6).unwrap()
        );
        assert!(latin_hypercube(0, &dom, 5).is_err());
    }

    #[test]
    fn uniform_bounds_and_mean() {
        let dom = Domain::standard(2);
        let pts = uniform(10_000, &dom, 11).unwrap();
        assert!(pts.iter().all(|p| dom.contains(p)));
        // Per-axis sd of U(-5, 5) is 10/sqrt(12); the mean of 10^4 draws has
        // sd ~0.029, so 0.2 is a ~7 sigma bound.
        for k in 0..2 {
            let mean = pts.iter().map(|p| p[k]).sum::<f64>() / pts.len() as f64;
            assert!(mean.abs() < 0.2, "axis {k} mean {mean}");
        }
        assert_eq!(pts, uniform(10_000, &dom, 11).unwrap());
    }

    #[test]
    fn grid_layout() {
        let dom = Domain::cube(2, 0.0, 1.0).unwrap();
        let g = grid(3, &dom).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![0.0, 0.0]);
        assert_eq!(g[1], vec![0.5, 0.0]);
        assert_eq!(g[8], vec![1.0, 1.0]);
        assert_eq!(grid(201, &Domain::standard(2)).unwrap().len(), 40401);
        assert!(matches!(
            grid(5, &Domain::standard(5)),
            Err(Error::UnsupportedDimension(5))
        ));
    }

    #[test]
    fn grid_is_mirror_symmetric() {
        for r in [100, 101, 200, 201] {
            for k in 0..r {
                assert_eq!(
                    grid_coordinate(-5.0, 5.0, k, r),
                    -grid_coordinate(-5.0, 5.0, r - 1 - k, r)
                );
            }
        }
    }

    #[test]
    fn design_csv_header() {
        let mut buf = Vec::new();
        write_design_csv(&[vec![1.0, 2.0]], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x1,x2\n1,2\n");
    }
}
