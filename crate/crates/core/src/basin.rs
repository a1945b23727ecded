//! Grid-based basin-of-attraction analysis for 2D functions.
//!
//! The function is evaluated on an `r × r` grid (row-major, `x1` varying
//! fastest). Every cell moves to its strictly best Moore neighbour until no
//! neighbour is strictly better; that terminal cell is the attractor. Ties
//! between equally good neighbours go to the lowest row-major index. Cells on
//! a plateau with no strictly better neighbour are attractors themselves.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::ObjectiveFunction;
use crate::sampling::{grid, uniform};

pub const DEFAULT_RESOLUTION: usize = 201;
pub const CONTRAST_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attractor {
    pub cell: usize,
    pub location: [f64; 2],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinMap {
    pub resolution: usize,
    /// Grid values, row-major.
    pub values: Vec<f64>,
    /// Cell → index into `attractors`.
    pub assignment: Vec<usize>,
    /// Ordered by cell index.
    pub attractors: Vec<Attractor>,
    /// Cells per attractor.
    pub sizes: Vec<usize>,
    points: Vec<[f64; 2]>,
}

/// Next cell along the steepest strictly improving step, or `c` itself.
fn descend(values: &[f64], r: usize, c: usize) -> usize {
    let (row, col) = (c / r, c % r);
    let mut best = c;
    let mut best_v = values[c];
    for dr in [-1isize, 0, 1] {
        for dc in [-1isize, 0, 1] {
            if dr == 0 && dc == 0 {
                continue;
            }
            let (nr, nc) = (row as isize + dr, col as isize + dc);
            if nr < 0 || nc < 0 || nr >= r as isize || nc >= r as isize {
                continue;
            }
            let n = nr as usize * r + nc as usize;
            let v = values[n];
            if v < best_v || (v == best_v && best != c && n < best) {
                best = n;
                best_v = v;
            }
        }
    }
    best
}

pub fn assign_basins(f: &ObjectiveFunction, resolution: usize) -> Result<BasinMap> {
    if f.dim() != 2 {
        return Err(Error::UnsupportedDimension(f.dim()));
    }
    if resolution < 3 {
        return Err(Error::InvalidArgument(format!(
            "basin grid resolution must be at least 3, got {resolution}"
        )));
    }
    let r = resolution;
    let cells = grid(r, f.domain())?;
    let values: Vec<f64> = cells.par_iter().map(|p| f.evaluate_unchecked(p)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Degenerate(format!(
            "{} is not finite at grid cell {i}",
            f.id()
        )));
    }
    let next: Vec<usize> = (0..r * r).into_par_iter().map(|c| descend(&values, r, c)).collect();

    const UNSET: usize = usize::MAX;
    let mut terminal = vec![UNSET; r * r];
    let mut path = Vec::new();
    for start in 0..r * r {
        let mut c = start;
        while terminal[c] == UNSET && next[c] != c {
            path.push(c);
            c = next[c];
        }
        let t = if terminal[c] == UNSET { c } else { terminal[c] };
        terminal[c] = t;
        for p in path.drain(..) {
            terminal[p] = t;
        }
    }

    let mut id_of = vec![UNSET; r * r];
    let mut attractors = Vec::new();
    for c in 0..r * r {
        if next[c] == c {
            id_of[c] = attractors.len();
            attractors.push(Attractor {
                cell: c,
                location: [cells[c][0], cells[c][1]],
                value: values[c],
            });
        }
    }
    let assignment: Vec<usize> = terminal.iter().map(|&t| id_of[t]).collect();
    let mut sizes = vec![0usize; attractors.len()];
    for &a in &assignment {
        sizes[a] += 1;
    }
    Ok(BasinMap {
        resolution: r,
        values,
        assignment,
        attractors,
        sizes,
        points: cells.iter().map(|p| [p[0], p[1]]).collect(),
    })
}

impl BasinMap {
    pub fn count(&self) -> usize {
        self.attractors.len()
    }

    /// Cells visited from `cell` down to its attractor.
    pub fn path(&self, cell: usize) -> Vec<usize> {
        let mut out = vec![cell];
        let mut c = cell;
        loop {
            let n = descend(&self.values, self.resolution, c);
            if n == c {
                return out;
            }
            out.push(n);
            c = n;
        }
    }

    /// CSV with columns `x,y,f,attractor`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "f", "attractor"])?;
        for (c, p) in self.points.iter().enumerate() {
            w.write_record([
                p[0].to_string(),
                p[1].to_string(),
                self.values[c].to_string(),
                self.assignment[c].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("basin csv", e))?;
        Ok(())
    }
}

pub fn count_basins(map: &BasinMap) -> usize {
    map.count()
}

/// Mean attractor value after shifting the best attractor to 0 and dividing
/// by the mean shifted value over `n` uniform samples of the domain.
pub fn optima_contrast(map: &BasinMap, f: &ObjectiveFunction, n: usize, seed: u64) -> Result<f64> {
    if map.count() < 2 {
        return Err(Error::UndefinedMetric(
            "optima contrast is undefined for a single optimum".into(),
        ));
    }
    let best = map
        .attractors
        .iter()
        .map(|a| a.value)
        .fold(f64::INFINITY, f64::min);
    let sample = uniform(n, f.domain(), seed)?;
    let scale = sample
        .par_iter()
        .map(|p| f.evaluate_unchecked(p) - best)
        .sum::<f64>()
        / n as f64;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::UndefinedMetric(format!(
            "mean shifted value {scale} cannot normalize the optima"
        )));
    }
    let mean = map.attractors.iter().map(|a| (a.value - best) / scale).sum::<f64>()
        / map.count() as f64;
    Ok(mean)
}

/// Largest basin size divided by the smallest.
pub fn basin_size_ratio(map: &BasinMap) -> Result<f64> {
    if map.count() < 2 {
        return Err(Error::UndefinedMetric(
            "basin size ratio needs at least two basins".into(),
        ));
    }
    if map.count() == map.assignment.len() {
        return Err(Error::Excluded(
            "every grid cell is its own optimum".into(),
        ));
    }
    let max = *map.sizes.iter().max().expect("non-empty");
    let min = *map.sizes.iter().min().expect("non-empty");
    Ok(max as f64 / min as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Domain;

    fn func(g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> ObjectiveFunction {
        ObjectiveFunction::new("t", Domain::standard(2), g)
    }

    fn two_well() -> ObjectiveFunction {
        func(|x| ((x[0] - 2.0).powi(2)).min((x[0] + 2.0).powi(2)) + x[1] * x[1])
    }

    #[test]
    fn sphere_has_one_central_basin() {
        let m = assign_basins(&func(|x| x[0] * x[0] + x[1] * x[1]), 101).unwrap();
        assert_eq!(m.count(), 1);
        assert_eq!(m.attractors[0].cell, 50 * 101 + 50);
        assert!(basin_size_ratio(&m).is_err());
    }

    #[test]
    fn two_wells() {
        for r in [101, 201, 401] {
            let m = assign_basins(&two_well(), r).unwrap();
            assert_eq!(m.count(), 2, "r = {r}");
            assert_eq!(m.sizes.iter().sum::<usize>(), r * r);
        }
        // At odd r the centre column ties and goes to the lower index (left).
        let m = assign_basins(&two_well(), 201).unwrap();
        assert_eq!(m.sizes, vec![101 * 201, 100 * 201]);
        assert!((basin_size_ratio(&m).unwrap() - 1.01).abs() < 1e-12);
    }

    #[test]
    fn tie_free_symmetric_grid_has_equal_basins() {
        // Even r has no centre column; offsetting the y minimum off the
        // grid's mirror axis keeps the minimum unique in each well.
        let f = func(|x| ((x[0] - 2.0).powi(2)).min((x[0] + 2.0).powi(2)) + (x[1] - 0.01).powi(2));
        let m = assign_basins(&f, 200).unwrap();
        assert_eq!(m.count(), 2);
        assert_eq!(basin_size_ratio(&m).unwrap(), 1.0);
    }

    #[test]
    fn rastrigin_lattice() {
        let f = func(|x| {
            20.0 + x
                .iter()
                .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                .sum::<f64>()
        });
        assert_eq!(assign_basins(&f, 201).unwrap().count(), 121);
    }

    #[test]
    fn paths_are_monotone_and_deterministic() {
        let f = func(|x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.05 * x[0] * x[0]);
        let a = assign_basins(&f, 61).unwrap();
        let b = assign_basins(&f, 61).unwrap();
        assert_eq!(a, b);
        for c in (0..61 * 61).step_by(7) {
            let p = a.path(c);
            assert!(p.windows(2).all(|w| a.values[w[1]] <= a.values[w[0]]));
            assert_eq!(a.attractors[a.assignment[c]].cell, *p.last().unwrap());
        }
    }

    #[test]
    fn plateau_cells_are_their_own_attractors() {
        let m = assign_basins(&func(|_| 1.0), 5).unwrap();
        assert_eq!(m.count(), 25);
        assert!(matches!(basin_size_ratio(&m), Err(Error::Excluded(_))));
    }

    #[test]
    fn contrast_arithmetic() {
        let m = BasinMap {
            resolution: 3,
            values: vec![0.0; 9],
            assignment: vec![0; 9],
            attractors: vec![
                Attractor { cell: 0, location: [0.0, 0.0], value: 1.0 },
                Attractor { cell: 8, location: [1.0, 1.0], value: 1.5 },
            ],
            sizes: vec![5, 4],
            points: vec![[0.0; 2]; 9],
        };
        // Uniform samples of the constant 3 shift to a mean of 2.
        let f = func(|_| 3.0);
        assert!((optima_contrast(&m, &f, 100, 1).unwrap() - 0.25 / 2.0).abs() < 1e-15);
        let mut same = m.clone();
        same.attractors[1].value = 1.0;
        assert_eq!(optima_contrast(&same, &f, 100, 1).unwrap(), 0.0);
        let sphere = func(|x| x[0] * x[0] + x[1] * x[1]);
        let single = assign_basins(&sphere, 11).unwrap();
        assert!(optima_contrast(&single, &sphere, 100, 1).is_err());
    }

    #[test]
    fn size_ratio_arithmetic_and_dimension_check() {
        let mut m = assign_basins(&two_well(), 21).unwrap();
        m.sizes = vec![300, 100];
        assert_eq!(basin_size_ratio(&m).unwrap(), 3.0);
        let f3 = ObjectiveFunction::new("t", Domain::standard(3), |x| x[0]);
        assert!(matches!(assign_basins(&f3, 11), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn csv_export() {
        let m = assign_basins(&two_well(), 5).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,f,attractor\n"));
        assert_eq!(text.lines().count(), 26);
    }
}
