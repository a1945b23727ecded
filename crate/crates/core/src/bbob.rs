//! The 24 noiseless BBOB functions with instance transformations.
//!
//! Function definitions follow the BBOB 2009 noiseless definitions report.
//! Instance data (shift `x_opt`, offset `f_opt`, rotations, sign vectors,
//! Gallagher peaks) is drawn from a ChaCha8 stream seeded with
//! `derive_seed(0xBB0B, [function_id, instance_id, dim])`, see
//! [`INSTANCE_CONVENTION`]. Rotations come from Gram-Schmidt
//! orthonormalization of standard Gaussian matrices.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Domain, ObjectiveFunction};
use crate::rng::{derive_seed, seed_rng, Rng};

pub const INSTANCE_CONVENTION: &str =
    "chacha8(derive_seed(0xBB0B, [function_id, instance_id, dim])); rotations by Gram-Schmidt";

const BBOB_SEED: u64 = 0xBB0B;

pub const FUNCTION_NAMES: [&str; 24] = [
    "sphere",
    "ellipsoidal",
    "rastrigin",
    "buche_rastrigin",
    "linear_slope",
    "attractive_sector",
    "step_ellipsoidal",
    "rosenbrock",
    "rosenbrock_rotated",
    "ellipsoidal_rotated",
    "discus",
    "bent_cigar",
    "sharp_ridge",
    "different_powers",
    "rastrigin_rotated",
    "weierstrass",
    "schaffers_f7",
    "schaffers_f7_ill_conditioned",
    "griewank_rosenbrock",
    "schwefel",
    "gallagher_101",
    "gallagher_21",
    "katsuura",
    "lunacek_bi_rastrigin",
];

/// Metadata of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbobInstance {
    pub function_id: usize,
    pub instance_id: usize,
    pub dim: usize,
    pub x_opt: Vec<f64>,
    pub f_opt: f64,
}

/// Row-major square matrix.
#[derive(Debug, Clone)]
struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    fn random_rotation(rng: &mut Rng, n: usize) -> Self {
        // Columns of a Gaussian matrix, orthonormalized one after another.
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        while cols.len() < n {
            let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            for c in &cols {
                let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= dot * ci;
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-10 {
                continue;
            }
            v.iter_mut().for_each(|a| *a /= norm);
            cols.push(v);
        }
        let mut data = vec![0.0; n * n];
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                data[i * n + j] = c[i];
            }
        }
        Self { n, data }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                out[j] += self.data[i * self.n + j] * x[i];
            }
        }
        out
    }

    /// `self * diag(d)`.
    fn scale_columns(&self, d: &[f64]) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                m.data[i * self.n + j] *= d[j];
            }
        }
        m
    }

    fn mul(&self, other: &Mat) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Self { n, data }
    }
}

#[inline]
fn ratio(i: usize, d: usize) -> f64 {
    if d > 1 {
        i as f64 / (d - 1) as f64
    } else {
        0.0
    }
}

/// Diagonal of `Λ^α`.
fn lambda(alpha: f64, d: usize) -> Vec<f64> {
    (0..d).map(|i| alpha.powf(0.5 * ratio(i, d))).collect()
}

fn t_osz_scalar(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let xh = x.abs().ln();
    let (c1, c2) = if x > 0.0 { (10.0, 7.9) } else { (5.5, 3.1) };
    x.signum() * (xh + 0.049 * ((c1 * xh).sin() + (c2 * xh).sin())).exp()
}

fn t_osz(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = t_osz_scalar(*v));
}

fn t_asy(x: &mut [f64], beta: f64) {
    let d = x.len();
    for (i, v) in x.iter_mut().enumerate() {
        if *v > 0.0 {
            *v = v.powf(1.0 + beta * ratio(i, d) * v.sqrt());
        }
    }
}

fn f_pen(x: &[f64]) -> f64 {
    x.iter().map(|v| (v.abs() - 5.0).max(0.0).powi(2)).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn sum_sq(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

fn rastrigin_term(z: &[f64]) -> f64 {
    10.0 * (z.len() as f64 - z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>())
}

#[derive(Debug, Clone)]
struct Peaks {
    weights: Vec<f64>,
    /// `R y_i` for each peak.
    centers: Vec<Vec<f64>>,
    /// Diagonal of `C_i`.
    scales: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct Transform {
    meta: BbobInstance,
    r: Mat,
    q: Mat,
    /// Precomputed products used by some functions (for example `Q Λ R`).
    m: Mat,
    signs: Vec<f64>,
    peaks: Option<Peaks>,
    /// Added to the raw value so that `f(x_opt) = f_opt` holds exactly where the
    /// closed form has rounding residue (Schwefel).
    offset: f64,
}

impl Transform {
    fn raw(&self, x: &[f64]) -> f64 {
        let d = self.meta.dim;
        let df = d as f64;
        let x_opt = &self.meta.x_opt;
        match self.meta.function_id {
            1 => sum_sq(&sub(x, x_opt)),
            2 => {
                let mut z = sub(x, x_opt);
                t_osz(&mut z);
                z.iter()
                    .enumerate()
                    .map(|(i, v)| 10f64.powf(6.0 * ratio(i, d)) * v * v)
                    .sum()
            }
            3 => {
                let mut z = sub(x, x_opt);
                t_osz(&mut z);
                t_asy(&mut z, 0.2);
                let l = lambda(10.0, d);
                z.iter_mut().zip(&l).for_each(|(v, s)| *v *= s);
                rastrigin_term(&z) + sum_sq(&z)
            }
            4 => {
                let mut z = sub(x, x_opt);
                t_osz(&mut z);
                for (i, v) in z.iter_mut().enumerate() {
                    let base = 10f64.powf(0.5 * ratio(i, d));
                    let s = if *v > 0.0 && i % 2 == 0 { 10.0 * base } else { base };
                    *v *= s;
                }
                rastrigin_term(&z) + sum_sq(&z) + 100.0 * f_pen(x)
            }
            5 => {
                let mut f = 0.0;
                for i in 0..d {
                    let s = x_opt[i].signum() * 10f64.powf(ratio(i, d));
                    let z = if x_opt[i] * x[i] < 25.0 { x[i] } else { x_opt[i] };
                    f += 5.0 * s.abs() - s * z;
                }
                f
            }
            6 => {
                let z = self.m.apply(&sub(x, x_opt));
                let s: f64 = z
                    .iter()
                    .zip(x_opt)
                    .map(|(zi, xo)| {
                        let w = if zi * xo > 0.0 { 100.0 } else { 1.0 };
                        (w * zi).powi(2)
                    })
                    .sum();
                t_osz_scalar(s).powf(0.9)
            }
            7 => {
                let zh = self.m.apply(&sub(x, x_opt));
                let zt: Vec<f64> = zh
                    .iter()
                    .map(|&v| {
                        if v.abs() > 0.5 {
                            (0.5 + v).floor()
                        } else {
                            (0.5 + 10.0 * v).floor() / 10.0
                        }
                    })
                    .collect();
                let z = self.q.apply(&zt);
                let e: f64 = z
                    .iter()
                    .enumerate()
                    .map(|(i, v)| 10f64.powf(2.0 * ratio(i, d)) * v * v)
                    .sum();
                0.1 * (zh[0].abs() / 1e4).max(e) + f_pen(x)
            }
            8 => {
                let c = (df.sqrt() / 8.0).max(1.0);
                let z: Vec<f64> = x.iter().zip(x_opt).map(|(a, b)| c * (a - b) + 1.0).collect();
                rosenbrock(&z)
            }
            9 => {
                let c = (df.sqrt() / 8.0).max(1.0);
                let z: Vec<f64> = self.r.apply(x).iter().map(|v| c * v + 0.5).collect();
                rosenbrock(&z)
            }
            10 => {
                let mut z = self.r.apply(&sub(x, x_opt));
                t_osz(&mut z);
                z.iter()
                    .enumerate()
                    .map(|(i, v)| 10f64.powf(6.0 * ratio(i, d)) * v * v)
                    .sum()
            }
            11 => {
                let mut z = self.r.apply(&sub(x, x_opt));
                t_osz(&mut z);
                1e6 * z[0] * z[0] + sum_sq(&z[1..])
            }
            12 => {
                let mut z = self.r.apply(&sub(x, x_opt));
                t_asy(&mut z, 0.5);
                let z = self.r.apply(&z);
                z[0] * z[0] + 1e6 * sum_sq(&z[1..])
            }
            13 => {
                let z = self.m.apply(&sub(x, x_opt));
                z[0] * z[0] + 100.0 * sum_sq(&z[1..]).sqrt()
            }
            14 => {
                let z = self.r.apply(&sub(x, x_opt));
                z.iter()
                    .enumerate()
                    .map(|(i, v)| v.abs().powf(2.0 + 4.0 * ratio(i, d)))
                    .sum::<f64>()
                    .sqrt()
            }
            15 => {
                let mut z = self.r.apply(&sub(x, x_opt));
                t_osz(&mut z);
                t_asy(&mut z, 0.2);
                let z = self.m.apply(&z);
                rastrigin_term(&z) + sum_sq(&z)
            }
            16 => {
                let mut z = self.r.apply(&sub(x, x_opt));
                t_osz(&mut z);
                let z = self.m.apply(&z);
                let f0 = weierstrass_f0();
                let s: f64 = z
                    .iter()
                    .map(|zi| {
                        (0..12)
                            .map(|k| {
                                0.5f64.powi(k) * (2.0 * PI * 3f64.powi(k) * (zi + 0.5)).cos()
                            })
                            .sum::<f64>()
                    })
                    .sum();
                10.0 * (s / df - f0).powi(3) + 10.0 / df * f_pen(x)
            }
            17 | 18 => {
                let mut z = self.r.apply(&sub(x, x_opt));
                t_asy(&mut z, 0.5);
                let z = self.m.apply(&z);
                let mut acc = 0.0;
                for i in 0..d - 1 {
                    let s = (z[i] * z[i] + z[i + 1] * z[i + 1]).sqrt();
                    acc += s.sqrt() + s.sqrt() * (50.0 * s.powf(0.2)).sin().powi(2);
                }
                (acc / (df - 1.0)).powi(2) + 10.0 * f_pen(x)
            }
            19 => {
                let c = (df.sqrt() / 8.0).max(1.0);
                let z: Vec<f64> = self.r.apply(x).iter().map(|v| c * v + 0.5).collect();
                let mut acc = 0.0;
                for i in 0..d - 1 {
                    let s = 100.0 * (z[i] * z[i] - z[i + 1]).powi(2) + (z[i] - 1.0).powi(2);
                    acc += s / 4000.0 - s.cos();
                }
                10.0 / (df - 1.0) * acc + 10.0
            }
            20 => {
                let xh: Vec<f64> = x.iter().zip(&self.signs).map(|(v, s)| 2.0 * s * v).collect();
                let two_abs: Vec<f64> = x_opt.iter().map(|v| 2.0 * v.abs()).collect();
                let mut zh = xh.clone();
                for i in 1..d {
                    zh[i] = xh[i] + 0.25 * (xh[i - 1] - two_abs[i - 1]);
                }
                let l = lambda(10.0, d);
                let z: Vec<f64> = (0..d)
                    .map(|i| 100.0 * (l[i] * (zh[i] - two_abs[i]) + two_abs[i]))
                    .collect();
                let s: f64 = z.iter().map(|zi| zi * zi.abs().sqrt().sin()).sum();
                let scaled: Vec<f64> = z.iter().map(|v| v / 100.0).collect();
                -s / (100.0 * df) + 4.189828872724339 + 100.0 * f_pen(&scaled)
            }
            21 | 22 => {
                let peaks = self.peaks.as_ref().expect("gallagher instance has peaks");
                let rx = self.r.apply(x);
                let best = peaks
                    .weights
                    .iter()
                    .zip(&peaks.centers)
                    .zip(&peaks.scales)
                    .map(|((w, c), s)| {
                        let q: f64 = rx
                            .iter()
                            .zip(c)
                            .zip(s)
                            .map(|((a, b), sc)| sc * (a - b) * (a - b))
                            .sum();
                        w * (-q / (2.0 * df)).exp()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                t_osz_scalar(10.0 - best).powi(2) + f_pen(x)
            }
            23 => {
                let z = self.m.apply(&sub(x, x_opt));
                let exponent = 10.0 / df.powf(1.2);
                let mut prod = 1.0;
                for (i, zi) in z.iter().enumerate() {
                    let mut s = 0.0;
                    for j in 1..=32 {
                        let p = 2f64.powi(j);
                        s += (p * zi - (p * zi).round()).abs() / p;
                    }
                    prod *= (1.0 + (i + 1) as f64 * s).powf(exponent);
                }
                10.0 / (df * df) * prod - 10.0 / (df * df) + f_pen(x)
            }
            24 => {
                let mu0 = 2.5;
                let s = 1.0 - 1.0 / (2.0 * (df + 20.0).sqrt() - 8.2);
                let mu1 = -((mu0 * mu0 - 1.0) / s).sqrt();
                let xh: Vec<f64> = x.iter().zip(&self.signs).map(|(v, sg)| 2.0 * sg * v).collect();
                let shifted: Vec<f64> = xh.iter().map(|v| v - mu0).collect();
                let z = self.m.apply(&shifted);
                let a = sum_sq(&shifted);
                let b = df + s * xh.iter().map(|v| (v - mu1).powi(2)).sum::<f64>();
                a.min(b) + rastrigin_term(&z) + 1e4 * f_pen(x)
            }
            _ => unreachable!("function id validated at construction"),
        }
    }
}

fn rosenbrock(z: &[f64]) -> f64 {
    z.windows(2)
        .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
        .sum()
}

fn weierstrass_f0() -> f64 {
    (0..12)
        .map(|k| 0.5f64.powi(k) * (PI * 3f64.powi(k)).cos())
        .sum()
}

fn random_signs(rng: &mut Rng, d: usize) -> Vec<f64> {
    (0..d)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect()
}

fn gallagher_peaks(rng: &mut Rng, r: &Mat, d: usize, n_peaks: usize) -> (Peaks, Vec<f64>) {
    let (first_alpha, global_half_width, local_half_width) = if n_peaks == 101 {
        (1000.0, 4.0, 5.0)
    } else {
        (1000.0f64 * 1000.0, 3.92, 4.9)
    };
    let mut alphas: Vec<f64> = (0..n_peaks - 1)
        .map(|j| 1000f64.powf(2.0 * j as f64 / (n_peaks - 2) as f64))
        .collect();
    alphas.shuffle(rng);
    alphas.insert(0, first_alpha);

    let mut weights = vec![10.0];
    weights.extend((2..=n_peaks).map(|i| 1.1 + 8.0 * (i - 2) as f64 / (n_peaks - 2) as f64));

    let mut centers = Vec::with_capacity(n_peaks);
    let mut scales = Vec::with_capacity(n_peaks);
    let mut x_opt = Vec::new();
    for (i, &alpha) in alphas.iter().enumerate() {
        let hw = if i == 0 { global_half_width } else { local_half_width };
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-hw..=hw)).collect();
        if i == 0 {
            x_opt = y.clone();
        }
        centers.push(r.apply(&y));
        let mut diag = lambda(alpha, d);
        diag.shuffle(rng);
        let norm = alpha.powf(0.25);
        scales.push(diag.into_iter().map(|v| v / norm).collect());
    }
    (
        Peaks {
            weights,
            centers,
            scales,
        },
        x_opt,
    )
}

fn build(function_id: usize, instance_id: usize, dim: usize) -> Transform {
    let seed = derive_seed(
        BBOB_SEED,
        &[function_id as u64, instance_id as u64, dim as u64],
    );
    let mut rng = seed_rng(seed);
    let d = dim;

    let g1: f64 = StandardNormal.sample(&mut rng);
    let g2: f64 = StandardNormal.sample(&mut rng);
    let cauchy = 100.0 * g1 / if g2 == 0.0 { 1e-12 } else { g2 };
    let f_opt = ((cauchy * 100.0).round() / 100.0).clamp(-1000.0, 1000.0);

    let mut x_opt: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..=4.0)).collect();
    let r = Mat::random_rotation(&mut rng, d);
    let q = Mat::random_rotation(&mut rng, d);
    let signs = random_signs(&mut rng, d);
    let mut m = Mat::identity(d);
    let mut peaks = None;

    match function_id {
        4 => {
            for v in x_opt.iter_mut().step_by(2) {
                *v = v.abs();
            }
        }
        5 => x_opt = signs.iter().map(|s| 5.0 * s).collect(),
        6 | 13 => m = q.scale_columns(&lambda(10.0, d)).mul(&r),
        7 => m = Mat::identity(d).scale_columns(&lambda(10.0, d)).mul(&r),
        8 => x_opt.iter_mut().for_each(|v| *v *= 0.75),
        9 | 19 => {
            let c = ((d as f64).sqrt() / 8.0).max(1.0);
            x_opt = r.apply_transpose(&vec![0.5 / c; d]);
        }
        15 => m = r.scale_columns(&lambda(10.0, d)).mul(&q),
        16 => m = r.scale_columns(&lambda(0.01, d)).mul(&q),
        17 => m = Mat::identity(d).scale_columns(&lambda(10.0, d)).mul(&q),
        18 => m = Mat::identity(d).scale_columns(&lambda(1000.0, d)).mul(&q),
        20 => x_opt = signs.iter().map(|s| 0.5 * 4.2096874633 * s).collect(),
        21 | 22 => {
            let n_peaks = if function_id == 21 { 101 } else { 21 };
            let (p, xo) = gallagher_peaks(&mut rng, &r, d, n_peaks);
            peaks = Some(p);
            x_opt = xo;
        }
        23 => m = q.scale_columns(&lambda(100.0, d)).mul(&r),
        24 => {
            x_opt = signs.iter().map(|s| 1.25 * s).collect();
            m = q.scale_columns(&lambda(100.0, d)).mul(&r);
        }
        _ => {}
    }

    let mut t = Transform {
        meta: BbobInstance {
            function_id,
            instance_id,
            dim,
            x_opt,
            f_opt,
        },
        r,
        q,
        m,
        signs,
        peaks,
        offset: 0.0,
    };
    if function_id == 20 {
        t.offset = -t.raw(&t.meta.x_opt.clone());
    }
    t
}

/// Builds BBOB function `function_id` (1..=24), instance `instance_id` (≥ 1)
/// in dimension `dim` (≥ 2) on `[-5, 5]^dim`.
pub fn instantiate(
    function_id: usize,
    instance_id: usize,
    dim: usize,
) -> Result<(ObjectiveFunction, BbobInstance)> {
    if !(1..=24).contains(&function_id) {
        return Err(Error::InvalidArgument(format!(
            "BBOB function id {function_id} outside 1..=24"
        )));
    }
    if instance_id == 0 {
        return Err(Error::InvalidArgument("BBOB instance ids start at 1".into()));
    }
    if dim < 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let t = Arc::new(build(function_id, instance_id, dim));
    let meta = t.meta.clone();
    let id = format!("bbob_f{function_id}_i{instance_id}_d{dim}");
    let f = ObjectiveFunction::new(id, Domain::standard(dim), move |x| {
        t.raw(x) + t.offset + t.meta.f_opt
    });
    Ok((f, meta))
}

/// The constructed optimum `(x_opt, f_opt)`.
pub fn optimum(instance: &BbobInstance) -> (&[f64], f64) {
    (&instance.x_opt, instance.f_opt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_is_consistent_for_all_functions() {
        for d in [2, 5, 10] {
            for fid in 1..=24 {
                for iid in 1..=5 {
                    let (f, meta) = instantiate(fid, iid, d).unwrap();
                    let (x, fo) = optimum(&meta);
                    let v = f.evaluate_unchecked(x);
                    assert!(fo.is_finite());
                    assert!(
                        (v - fo).abs() <= 1e-9,
                        "f{fid} i{iid} d{d}: f(x_opt) = {v}, f_opt = {fo}"
                    );
                }
            }
        }
    }

    #[test]
    fn sphere_unit_step() {
        let (f, meta) = instantiate(1, 3, 5).unwrap();
        let mut x = meta.x_opt.clone();
        x[2] += 1.0;
        assert!((f.evaluate_unchecked(&x) - (meta.f_opt + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn instances_are_separated_and_deterministic() {
        let (_, a) = instantiate(3, 1, 2).unwrap();
        let (_, b) = instantiate(3, 2, 2).unwrap();
        let (_, a2) = instantiate(3, 1, 2).unwrap();
        assert_ne!(a.x_opt, b.x_opt);
        assert_eq!(a, a2);
    }

    #[test]
    fn optimum_lies_in_inner_box() {
        // f5 places its optimum on the boundary by definition.
        for fid in (1..=24).filter(|&f| f != 5) {
            for iid in 1..=10 {
                let (_, m) = instantiate(fid, iid, 2).unwrap();
                assert!(m.x_opt.iter().all(|v| v.abs() <= 4.0), "f{fid}: {:?}", m.x_opt);
            }
        }
        let (_, m) = instantiate(5, 1, 2).unwrap();
        assert!(m.x_opt.iter().all(|v| v.abs() == 5.0));
    }

    #[test]
    fn optimum_is_a_minimum_on_probe_points() {
        use rand::Rng;
        let mut rng = seed_rng(17);
        for fid in 1..=24 {
            let (f, meta) = instantiate(fid, 1, 2).unwrap();
            for _ in 0..2000 {
                let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
                assert!(f.evaluate_unchecked(&x) >= meta.f_opt - 1e-9, "f{fid} at {x:?}");
            }
        }
    }

    #[test]
    fn invalid_ids() {
        assert!(instantiate(0, 1, 2).is_err());
        assert!(instantiate(25, 1, 2).is_err());
        assert!(instantiate(1, 0, 2).is_err());
        assert!(instantiate(1, 1, 1).is_err());
    }

    #[test]
    fn rotations_are_orthonormal() {
        let mut rng = seed_rng(1);
        let r = Mat::random_rotation(&mut rng, 6);
        for i in 0..6 {
            let mut e = vec![0.0; 6];
            e[i] = 1.0;
            let back = r.apply_transpose(&r.apply(&e));
            for (k, v) in back.iter().enumerate() {
                let want = if k == i { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
    }
}
