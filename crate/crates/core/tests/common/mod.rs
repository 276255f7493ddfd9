//! Independent oracles shared by the integration and acceptance suites.
//!
//! Nothing here goes through the sample-coefficient representation used by
//! the library: moments are computed from vertex positions in feature space,
//! by Monte Carlo, or by a dense SVD.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pma_core::{DataFrame, SimplexSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn frame_from(x: DMatrix<f64>) -> DataFrame {
    DataFrame::from_matrix(x).expect("valid frame")
}

/// Relative difference scaled by the larger magnitude (absolute near zero).
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Uniform barycentric weights: normalized i.i.d. exponentials (Dirichlet(1,…,1)).
pub fn barycentric_draw(rng: &mut impl Rng, m: usize, out: &mut [f64]) {
    let mut total = 0.0;
    for w in out.iter_mut().take(m) {
        let e: f64 = Exp1.sample(rng);
        *w = e;
        total += e;
    }
    for w in out.iter_mut().take(m) {
        *w /= total;
    }
}

/// Empirical second moment of the barycentric-uniform measure on the simplex
/// with vertex columns `vertices`, and the componentwise standard errors.
pub fn monte_carlo_second_moment(
    rng: &mut impl Rng,
    vertices: &DMatrix<f64>,
    draws: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (p, m) = vertices.shape();
    let mut sum = vec![Compensated::default(); p * p];
    let mut sum_sq = vec![Compensated::default(); p * p];
    let mut weights = vec![0.0; m];
    let mut point = vec![0.0; p];
    for _ in 0..draws {
        barycentric_draw(rng, m, &mut weights);
        for (i, xi) in point.iter_mut().enumerate() {
            *xi = (0..m).map(|v| weights[v] * vertices[(i, v)]).sum();
        }
        for i in 0..p {
            for j in i..p {
                let prod = point[i] * point[j];
                sum[i * p + j].add(prod);
                sum_sq[i * p + j].add(prod * prod);
            }
        }
    }
    let n = draws as f64;
    let upper = |i: usize, j: usize| i.min(j) * p + i.max(j);
    let mean = DMatrix::from_fn(p, p, |i, j| sum[upper(i, j)].value() / n);
    let se = DMatrix::from_fn(p, p, |i, j| {
        let var = (sum_sq[upper(i, j)].value() / n - mean[(i, j)].powi(2)) * n / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    });
    (mean, se)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    correction: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.correction += (self.sum - t) + x;
        } else {
            self.correction += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.correction
    }
}

/// `(m-1)`-volume of the simplex with vertex columns `points` from the
/// Cayley–Menger determinant.
pub fn cayley_menger_volume(points: &DMatrix<f64>) -> f64 {
    let m = points.ncols();
    if m == 1 {
        return 1.0;
    }
    let mut cm = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 1..=m {
        cm[(0, i)] = 1.0;
        cm[(i, 0)] = 1.0;
        for j in 1..=m {
            cm[(i, j)] = (points.column(i - 1) - points.column(j - 1)).norm_squared();
        }
    }
    let k = (m - 1) as i32;
    let factorial: f64 = (1..m).map(|v| v as f64).product();
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let v2 = sign * cm.determinant() / (2f64.powi(k) * factorial * factorial);
    v2.max(0.0).sqrt()
}

/// Second moment assembled in feature space from vertex positions:
/// `Σ_g (w_g/W)/(m(m+1)) · (P Pᵀ + (P1)(P1)ᵀ)`.
pub fn feature_space_second_moment(set: &SimplexSet, x: &DMatrix<f64>) -> DMatrix<f64> {
    let p = x.nrows();
    let mut out = DMatrix::zeros(p, p);
    for (simplex, mass) in set.simplexes().iter().zip(set.normalized_masses()) {
        let pts = simplex.vertex_points(x);
        let m = pts.ncols() as f64;
        let sum: DVector<f64> = pts.column_sum();
        out += (&pts * pts.transpose() + &sum * sum.transpose()) * (mass / (m * (m + 1.0)));
    }
    out
}

/// `∫ ‖x‖² dμ` summed simplex by simplex from vertex positions.
pub fn closed_form_trace(set: &SimplexSet, x: &DMatrix<f64>) -> f64 {
    set.simplexes()
        .iter()
        .zip(set.normalized_masses())
        .map(|(simplex, mass)| {
            let pts = simplex.vertex_points(x);
            let m = pts.ncols() as f64;
            let sq: f64 = pts.column_iter().map(|c| c.norm_squared()).sum();
            mass / (m * (m + 1.0)) * (sq + pts.column_sum().norm_squared())
        })
        .sum()
}

/// Squared singular values of `x / √n`, descending, zeros dropped.
pub fn pca_moments(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.ncols() as f64;
    let svd = (x / n.sqrt()).svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().map(|v| v * v).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let max = s[0];
    s.retain(|&v| v > 1e-12 * max);
    s
}

/// Orthonormal p × s frame from a QR of a Gaussian matrix.
pub fn random_frame(rng: &mut impl Rng, p: usize, s: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, p, s);
    g.qr().q()
}

/// `trace(Π M Π)` for `Π = Q Qᵀ`.
pub fn projected_trace(q: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    (q.transpose() * m * q).trace()
}

pub fn projector(q: &DMatrix<f64>) -> DMatrix<f64> {
    q * q.transpose()
}
