//! Simplex measure designs.
//!
//! A [`SimplexSet`] is a weighted sum of uniform measures on simplexes whose
//! vertices are convex combinations of sample points. The strategies in this
//! module build such sets from a [`DataFrame`]; every vertex they emit is a
//! single sample.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PmaError, Result};
use crate::ingest::{DataFrame, MISSING_ANNOTATION};

/// Tolerance on the sum of convex coefficients.
const CONVEX_SUM_TOL: f64 = 1e-12;

/// A simplex whose squared Gram determinant falls below this fraction of the
/// squared product of its edge lengths is treated as having zero volume.
pub const VOLUME_RTOL: f64 = 1e-12;

/// A convex combination of sample points, stored as `(sample index, coefficient)`
/// pairs sorted by sample index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    combo: Vec<(usize, f64)>,
}

impl Vertex {
    pub fn sample(index: usize) -> Self {
        Vertex {
            combo: vec![(index, 1.0)],
        }
    }

    pub fn new(mut combo: Vec<(usize, f64)>) -> Result<Self> {
        if combo.is_empty() {
            return Err(PmaError::Config("vertex has no contributing samples".into()));
        }
        if let Some(&(j, c)) = combo.iter().find(|(_, c)| !(c.is_finite() && *c > 0.0)) {
            return Err(PmaError::Config(format!(
                "vertex coefficient {c} for sample {j} must be positive"
            )));
        }
        let sum: f64 = combo.iter().map(|(_, c)| c).sum();
        if (sum - 1.0).abs() > CONVEX_SUM_TOL {
            return Err(PmaError::Config(format!(
                "vertex coefficients sum to {sum}, expected 1"
            )));
        }
        combo.sort_by_key(|&(j, _)| j);
        if combo.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(PmaError::Config("vertex repeats a sample index".into()));
        }
        Ok(Vertex { combo })
    }

    pub fn combo(&self) -> &[(usize, f64)] {
        &self.combo
    }

    pub fn min_index(&self) -> usize {
        self.combo[0].0
    }

    /// Position of the vertex in feature space.
    pub fn point(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(x.nrows());
        for &(j, c) in &self.combo {
            out.axpy(c, &x.column(j), 1.0);
        }
        out
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.combo.iter().zip(&other.combo) {
            let ord = a.0.cmp(&b.0).then_with(|| a.1.total_cmp(&b.1));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.combo.len().cmp(&other.combo.len())
    }
}

/// One summand of the measure: the barycentric-uniform distribution on the
/// convex hull of `vertices`, carrying total mass `weight`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    vertices: Vec<Vertex>,
    weight: f64,
}

impl Simplex {
    pub fn new(mut vertices: Vec<Vertex>, weight: f64) -> Result<Self> {
        if vertices.is_empty() {
            return Err(PmaError::Config("simplex has no vertices".into()));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(PmaError::Config(format!("simplex weight {weight} must be positive")));
        }
        vertices.sort_by(Vertex::canonical_cmp);
        Ok(Simplex { vertices, weight })
    }

    /// Simplex spanned by single samples.
    pub fn from_samples(indices: &[usize], weight: f64) -> Result<Self> {
        Simplex::new(indices.iter().map(|&j| Vertex::sample(j)).collect(), weight)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Number of vertices `m` (the simplex has dimension `m - 1`).
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Vertex positions as the columns of a p × m matrix.
    pub fn vertex_points(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let columns: Vec<_> = self.vertices.iter().map(|v| v.point(x)).collect();
        DMatrix::from_columns(&columns)
    }

    /// `(m-1)`-dimensional volume from the Gram determinant of the edge
    /// vectors, or `None` when the simplex is degenerate.
    pub fn volume(&self, x: &DMatrix<f64>) -> Option<f64> {
        let m = self.len();
        if m == 1 {
            return Some(1.0);
        }
        if m - 1 > x.nrows() {
            return None;
        }
        let points = self.vertex_points(x);
        let base = points.column(0).clone_owned();
        let edges = DMatrix::from_fn(x.nrows(), m - 1, |i, j| points[(i, j + 1)] - base[i]);
        let gram = edges.tr_mul(&edges);
        let hadamard: f64 = gram.diagonal().iter().product();
        let det = gram.determinant();
        if hadamard.is_nan() || hadamard <= 0.0 || det <= VOLUME_RTOL * hadamard {
            return None;
        }
        let factorial: f64 = (1..m).map(|k| k as f64).product();
        Some(det.sqrt() / factorial)
    }

    fn same_vertices(&self, other: &Self) -> bool {
        self.vertices.len() == other.vertices.len()
            && self
                .vertices
                .iter()
                .zip(&other.vertices)
                .all(|(a, b)| a.canonical_cmp(b) == Ordering::Equal)
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.vertices.iter().zip(&other.vertices) {
            let ord = a.canonical_cmp(b);
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.vertices.len().cmp(&other.vertices.len())
    }
}

/// A weighted collection of simplexes over `n` samples.
///
/// Simplexes are kept in canonical order and simplexes with identical vertex
/// sets are merged (their weights add), so two sets describing the same
/// measure compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexSet {
    simplexes: Vec<Simplex>,
    n: usize,
    total_weight: f64,
}

impl SimplexSet {
    pub fn new(mut simplexes: Vec<Simplex>, n: usize) -> Result<Self> {
        for s in &simplexes {
            for v in &s.vertices {
                if let Some(&(j, _)) = v.combo.iter().find(|(j, _)| *j >= n) {
                    return Err(PmaError::Config(format!(
                        "simplex references sample index {j} but there are only {n} samples"
                    )));
                }
            }
        }
        simplexes.sort_by(Simplex::canonical_cmp);
        let mut merged: Vec<Simplex> = Vec::with_capacity(simplexes.len());
        for s in simplexes {
            match merged.last_mut() {
                Some(last) if last.same_vertices(&s) => last.weight += s.weight,
                _ => merged.push(s),
            }
        }
        let total_weight: f64 = merged.iter().map(|s| s.weight).sum();
        if merged.is_empty() || total_weight.is_nan() || total_weight <= 0.0 {
            return Err(PmaError::EmptyMeasure);
        }
        Ok(SimplexSet {
            simplexes: merged,
            n,
            total_weight,
        })
    }

    pub fn simplexes(&self) -> &[Simplex] {
        &self.simplexes
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    /// Normalization `W`, the sum of all simplex weights.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn len(&self) -> usize {
        self.simplexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplexes.is_empty()
    }

    /// Per-simplex probability masses `w_g / W`.
    pub fn normalized_masses(&self) -> Vec<f64> {
        self.simplexes
            .iter()
            .map(|s| s.weight / self.total_weight)
            .collect()
    }

    /// True when both sets are built on the same list of vertex sets.
    pub fn same_skeleton(&self, other: &Self) -> bool {
        self.n == other.n
            && self.simplexes.len() == other.simplexes.len()
            && self
                .simplexes
                .iter()
                .zip(&other.simplexes)
                .all(|(a, b)| a.same_vertices(b))
    }

    /// Number of factor columns `c = Σ (m_g + 1)`.
    pub fn factor_width(&self) -> usize {
        self.simplexes.iter().map(|s| s.len() + 1).sum()
    }
}

/// Distance used for neighbor searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
}

/// One Dirac mass per sample; the measure whose decomposition is uncentered PCA.
pub fn points(frame: &DataFrame) -> Result<SimplexSet> {
    let n = frame.n_samples();
    let simplexes = (0..n)
        .map(|j| Simplex::from_samples(&[j], 1.0))
        .collect::<Result<Vec<_>>>()?;
    SimplexSet::new(simplexes, n)
}

/// One simplex per distinct value of `annotation`, spanned by its samples.
/// Samples with the empty sentinel value become point simplexes.
pub fn group_by(frame: &DataFrame, annotation: &str) -> Result<SimplexSet> {
    let values = frame.annotation(annotation)?;
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut simplexes = Vec::new();
    for (j, value) in values.iter().enumerate() {
        if value == MISSING_ANNOTATION {
            simplexes.push(Simplex::from_samples(&[j], 1.0)?);
        } else {
            groups.entry(value.as_str()).or_default().push(j);
        }
    }
    for members in groups.values() {
        simplexes.push(Simplex::from_samples(members, 1.0)?);
    }
    SimplexSet::new(simplexes, frame.n_samples())
}

/// For each sample, the simplex spanned by it and its `k` nearest neighbors.
///
/// Exact distance ties go to the smaller sample index. Neighborhoods with the
/// same vertex set are kept once, each surviving simplex with weight 1.
pub fn knn(frame: &DataFrame, k: usize, metric: Metric) -> Result<SimplexSet> {
    let n = frame.n_samples();
    if k == 0 || k >= n {
        return Err(PmaError::Config(format!(
            "k = {k} must satisfy 1 <= k <= n - 1 = {}",
            n as isize - 1
        )));
    }
    let distances = pairwise_distances(frame.values(), metric);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut simplexes = Vec::new();
    for i in 0..n {
        let mut candidates: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        candidates.sort_by(|&a, &b| {
            distances[(i, a)]
                .total_cmp(&distances[(i, b)])
                .then(a.cmp(&b))
        });
        let mut members: Vec<usize> = candidates[..k].to_vec();
        members.push(i);
        members.sort_unstable();
        if seen.insert(members.clone()) {
            simplexes.push(Simplex::from_samples(&members, 1.0)?);
        }
    }
    SimplexSet::new(simplexes, n)
}

/// Squared distances between sample columns, computed from differences so
/// that exact ties stay exact.
fn pairwise_distances(x: &DMatrix<f64>, metric: Metric) -> DMatrix<f64> {
    let n = x.ncols();
    let mut d = DMatrix::zeros(n, n);
    match metric {
        Metric::Euclidean => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let dist = (x.column(i) - x.column(j)).norm_squared();
                    d[(i, j)] = dist;
                    d[(j, i)] = dist;
                }
            }
        }
    }
    d
}

/// Segments joining consecutive samples of each series, ordered by the
/// numeric `order_annotation`.
///
/// Without `series_annotation` all samples form one series. Samples whose
/// order or series value is the empty sentinel, and series with a single
/// member, contribute point simplexes.
pub fn chain(
    frame: &DataFrame,
    order_annotation: &str,
    series_annotation: Option<&str>,
) -> Result<SimplexSet> {
    let order = frame.annotation(order_annotation)?;
    let series = series_annotation.map(|s| frame.annotation(s)).transpose()?;

    let mut simplexes = Vec::new();
    let mut by_series: BTreeMap<&str, Vec<(f64, usize)>> = BTreeMap::new();
    for (j, raw) in order.iter().enumerate() {
        let key = series.map_or("", |s| s[j].as_str());
        if raw == MISSING_ANNOTATION || (series.is_some() && key == MISSING_ANNOTATION) {
            simplexes.push(Simplex::from_samples(&[j], 1.0)?);
            continue;
        }
        let value: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| {
                PmaError::Config(format!(
                    "order value `{raw}` of sample `{}` is not numeric",
                    frame.sample_ids()[j]
                ))
            })?;
        by_series.entry(key).or_default().push((value, j));
    }

    for members in by_series.values_mut() {
        members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if members.len() == 1 {
            simplexes.push(Simplex::from_samples(&[members[0].1], 1.0)?);
        }
        for pair in members.windows(2) {
            simplexes.push(Simplex::from_samples(&[pair[0].1, pair[1].1], 1.0)?);
        }
    }
    SimplexSet::new(simplexes, frame.n_samples())
}

/// Result of [`apply_volume_weights`].
#[derive(Debug, Clone)]
pub struct VolumeWeighted {
    pub set: SimplexSet,
    /// Simplexes removed because their volume vanished.
    pub dropped: Vec<Simplex>,
}

/// Scales every simplex weight by its volume so that mass follows the
/// Hausdorff measure of the support. Point simplexes keep their weight;
/// degenerate simplexes are dropped.
pub fn apply_volume_weights(set: &SimplexSet, frame: &DataFrame) -> Result<VolumeWeighted> {
    let x = frame.values();
    let mut kept = Vec::with_capacity(set.len());
    let mut dropped = Vec::new();
    for simplex in set.simplexes() {
        match simplex.volume(x) {
            Some(volume) => kept.push(Simplex {
                vertices: simplex.vertices.clone(),
                weight: simplex.weight * volume,
            }),
            None => {
                log::warn!(
                    "dropping degenerate {}-vertex simplex starting at sample {}",
                    simplex.len(),
                    simplex.vertices[0].min_index()
                );
                dropped.push(simplex.clone());
            }
        }
    }
    let set = SimplexSet::new(kept, set.n_samples())?;
    Ok(VolumeWeighted { set, dropped })
}
