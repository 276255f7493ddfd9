//! Second moment tensors of simplex measures and their spectral decomposition.
//!
//! The second moment of a simplex measure is kept in sample coordinates:
//! `M₂(μ) = X·A·Xᵀ` with `A = B·Bᵀ` an n × n PSD matrix that depends only on
//! the simplex design. For a simplex with vertex coefficient matrix `C`
//! (n × m) and mass `w`, barycentric-uniform weights satisfy
//! `E[w_i w_j] = (1 + δ_ij) / (m (m + 1))`, which gives the contribution
//!
//! ```text
//! w / (m (m + 1)) · (C·Cᵀ + (C·1)(C·1)ᵀ)
//! ```
//!
//! and the factor columns `sqrt(w / (m (m + 1))) · [C, C·1]`.
//!
//! Fitting decomposes `M₂` either directly in feature space (p × p) or
//! through the c × c Gram matrix of `Y = X·B` when that is smaller.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{PmaError, Result};
use crate::ingest::DataFrame;
use crate::pipeline::Design;
use crate::simplex::{Simplex, SimplexSet};

/// Eigenvalues within this fraction of `λ_max` below zero are solver noise.
pub const NEGATIVE_CLAMP: f64 = 1e-10;
/// Relative gap below which two principal moments are reported as tied.
pub const DEGENERATE_GAP: f64 = 1e-8;
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const EIGEN_EPS: f64 = f64::EPSILON;
const EIGEN_MAX_ITER: usize = 0;

/// A sparse column over samples: `(sample index, value)` pairs.
pub type SparseColumn = Vec<(usize, f64)>;

/// Closed-form second moment of one simplex: `scale · Σ col·colᵀ` over the
/// unscaled columns `[C, C·1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMoment {
    pub scale: f64,
    pub columns: Vec<SparseColumn>,
}

impl SimplexMoment {
    /// The dense n × n contribution.
    pub fn contribution(&self, n: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, n);
        for column in &self.columns {
            add_outer(&mut out, column, self.scale);
        }
        out
    }

    /// Factor columns `sqrt(scale) · [C, C·1]`.
    pub fn factor(&self) -> Vec<SparseColumn> {
        let root = self.scale.sqrt();
        self.columns
            .iter()
            .map(|col| col.iter().map(|&(j, c)| (j, root * c)).collect())
            .collect()
    }
}

fn add_outer(target: &mut DMatrix<f64>, column: &SparseColumn, scale: f64) {
    for &(i, a) in column {
        for &(j, b) in column {
            target[(i, j)] += scale * (a * b);
        }
    }
}

/// Second moment coefficients of a simplex carrying its own (unnormalized) weight.
pub fn simplex_second_moment_coeffs(simplex: &Simplex) -> SimplexMoment {
    let m = simplex.len() as f64;
    let mut columns: Vec<SparseColumn> = simplex
        .vertices()
        .iter()
        .map(|v| v.combo().to_vec())
        .collect();
    let mut sum: SparseColumn = Vec::new();
    for column in &columns {
        for &(j, c) in column {
            match sum.iter_mut().find(|(k, _)| *k == j) {
                Some(entry) => entry.1 += c,
                None => sum.push((j, c)),
            }
        }
    }
    sum.sort_by_key(|&(j, _)| j);
    columns.push(sum);
    SimplexMoment {
        scale: simplex.weight() / (m * (m + 1.0)),
        columns,
    }
}

/// Normalized second moment coefficients of a whole measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCoefficients {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    mean_weights: DVector<f64>,
    total_weight: f64,
}

impl MomentCoefficients {
    /// n × n matrix with `M₂(μ) = X·A·Xᵀ`.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// n × c factor with `A = B·Bᵀ`.
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// n-vector `a` with `M₁(μ) = X·a`.
    pub fn mean_weights(&self) -> &DVector<f64> {
        &self.mean_weights
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn n_samples(&self) -> usize {
        self.a.nrows()
    }

    /// Explicit p × p second moment `X·A·Xᵀ` for data `x` (p × n).
    pub fn second_moment(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let m = x * &self.a * x.transpose();
        (&m + m.transpose()) * 0.5
    }

    /// `trace(X·A·Xᵀ) = Σ_ij A_ij (x_i · x_j)`.
    pub fn trace(&self, x: &DMatrix<f64>) -> f64 {
        let gram = x.tr_mul(x);
        self.a.component_mul(&gram).sum()
    }
}

/// Sums the per-simplex contributions and normalizes by the total weight.
pub fn assemble(set: &SimplexSet) -> Result<MomentCoefficients> {
    let n = set.n_samples();
    let w = set.total_weight();
    if w.is_nan() || w <= 0.0 {
        return Err(PmaError::EmptyMeasure);
    }
    let c = set.factor_width();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, c);
    let mut mean_weights = DVector::zeros(n);
    let inv_sqrt_w = w.sqrt().recip();
    let mut col = 0;
    for simplex in set.simplexes() {
        let moment = simplex_second_moment_coeffs(simplex);
        for column in &moment.columns {
            add_outer(&mut a, column, moment.scale / w);
        }
        for column in moment.factor() {
            for (j, v) in column {
                b[(j, col)] = v * inv_sqrt_w;
            }
            col += 1;
        }
        let share = simplex.weight() / (simplex.len() as f64 * w);
        for vertex in simplex.vertices() {
            for &(j, coef) in vertex.combo() {
                mean_weights[j] += share * coef;
            }
        }
    }
    Ok(MomentCoefficients {
        a,
        b,
        mean_weights,
        total_weight: w,
    })
}

/// First moment `M₁(μ) = ∫ x dμ`; each simplex contributes its centroid.
pub fn first_moment(set: &SimplexSet, frame: &DataFrame) -> Result<DVector<f64>> {
    Ok(frame.values() * assemble(set)?.mean_weights())
}

/// Which eigendecomposition route `fit` takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionPath {
    /// Sample path when `c < p`, feature path otherwise.
    #[default]
    Auto,
    /// Eigendecomposition of the p × p matrix `X·A·Xᵀ`.
    Feature,
    /// Eigendecomposition of the c × c Gram matrix of `X·B`.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Subtract the measure mean `M₁(μ)` from every sample first.
    pub center: bool,
    /// Principal moments below `rank_tol · λ_max` are discarded.
    pub rank_tol: f64,
    pub max_rank: Option<usize>,
    pub path: DecompositionPath,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            center: false,
            rank_tol: DEFAULT_RANK_TOL,
            max_rank: None,
            path: DecompositionPath::Auto,
        }
    }
}

/// A fitted principal moment decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct PmaModel {
    eigenvalues: Vec<f64>,
    axes: DMatrix<f64>,
    scores: DMatrix<f64>,
    dual_coefficients: DMatrix<f64>,
    trace_total: f64,
    center: Option<DVector<f64>>,
    options: FitOptions,
    path: DecompositionPath,
    design: Option<Design>,
}

impl PmaModel {
    /// Principal moments `λ_1 ≥ … ≥ λ_r > 0`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Principal moment axes as the columns of a p × r matrix.
    pub fn axes(&self) -> &DMatrix<f64> {
        &self.axes
    }

    /// r × n matrix of `(x_j, v_k)` for the (centered, if requested) samples.
    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    /// r × c matrix `D` with `V = X·B·Dᵀ`.
    pub fn dual_coefficients(&self) -> &DMatrix<f64> {
        &self.dual_coefficients
    }

    /// `trace(M₂)`: the retained moments plus the discarded tail.
    pub fn trace_total(&self) -> f64 {
        self.trace_total
    }

    pub fn discarded_tail(&self) -> f64 {
        self.trace_total - self.eigenvalues.iter().sum::<f64>()
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_variables(&self) -> usize {
        self.axes.nrows()
    }

    /// Measure mean subtracted before decomposition, when centering was on.
    pub fn center(&self) -> Option<&DVector<f64>> {
        self.center.as_ref()
    }

    pub fn options(&self) -> &FitOptions {
        &self.options
    }

    /// The route actually taken.
    pub fn path(&self) -> DecompositionPath {
        self.path
    }

    pub fn design(&self) -> Option<&Design> {
        self.design.as_ref()
    }

    pub(crate) fn with_design(mut self, design: Design) -> Self {
        self.design = Some(design);
        self
    }

    fn check_rank(&self, what: &'static str, value: usize) -> Result<()> {
        if value == 0 || value > self.rank() {
            return Err(PmaError::OutOfRange {
                what,
                value,
                max: self.rank(),
            });
        }
        Ok(())
    }

    /// Principal moment functional `u_k(x) = λ_k^{-1/2} (x, v_k)`, with `k`
    /// 1-based and `x` in the original (uncentered) coordinates.
    pub fn principal_functional(&self, k: usize, x: &DVector<f64>) -> Result<f64> {
        self.check_rank("component", k)?;
        let shifted = match &self.center {
            Some(c) => x - c,
            None => x.clone(),
        };
        Ok(self.axes.column(k - 1).dot(&shifted) / self.eigenvalues[k - 1].sqrt())
    }

    /// Coordinates of `points` (p × q, original coordinates) on the top `s` axes.
    pub fn project(&self, s: usize, points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rank("dims", s)?;
        if points.nrows() != self.n_variables() {
            return Err(PmaError::Config(format!(
                "points have {} coordinates, model has {}",
                points.nrows(),
                self.n_variables()
            )));
        }
        let top = self.axes.columns(0, s);
        Ok(match &self.center {
            Some(c) => {
                let mut shifted = points.clone();
                for mut col in shifted.column_iter_mut() {
                    col -= c;
                }
                top.tr_mul(&shifted)
            }
            None => top.tr_mul(points),
        })
    }

    /// Indices `k` (1-based) with `λ_k ≈ λ_{k+1}`, where a rank-`k`
    /// optimal projection is not unique.
    pub fn degenerate_gaps(&self) -> Vec<usize> {
        self.eigenvalues
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[0] - w[1]) < DEGENERATE_GAP * w[0])
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// True when the optimal rank-`s` projection is not uniquely defined.
    pub fn is_ambiguous_at(&self, s: usize) -> bool {
        self.degenerate_gaps().contains(&s)
    }
}

/// Data matrix after the optional measure-mean shift.
pub fn centered_data(frame: &DataFrame, coeffs: &MomentCoefficients, center: bool) -> (DMatrix<f64>, Option<DVector<f64>>) {
    let x = frame.values();
    if !center {
        return (x.clone(), None);
    }
    let mean = x * coeffs.mean_weights();
    let mut shifted = x.clone();
    for mut col in shifted.column_iter_mut() {
        col -= &mean;
    }
    (shifted, Some(mean))
}

/// Eigenpairs sorted by descending eigenvalue.
fn sorted_eigen(matrix: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let sym = (&matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| PmaError::Decomposition("symmetric eigensolver did not converge".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(PmaError::Decomposition("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    Ok((values, vectors))
}

/// Number of leading eigenvalues to keep, after checking the spectrum is PSD.
fn retained_rank(values: &[f64], options: &FitOptions) -> Result<usize> {
    let lambda_max = values.first().copied().unwrap_or(0.0);
    if lambda_max.is_nan() || lambda_max <= 0.0 {
        return Err(PmaError::RankZero);
    }
    if let Some(&min) = values.last() {
        if min < -NEGATIVE_CLAMP * lambda_max {
            return Err(PmaError::Decomposition(format!(
                "second moment is not positive semidefinite (λ_min = {min:e}, λ_max = {lambda_max:e})"
            )));
        }
    }
    let mut r = values
        .iter()
        .take_while(|&&v| v > 0.0 && v > options.rank_tol * lambda_max)
        .count();
    if let Some(max) = options.max_rank {
        r = r.min(max);
    }
    if r == 0 {
        return Err(PmaError::RankZero);
    }
    Ok(r)
}

/// Flips `v` so that its entry of largest magnitude (first on ties) is positive.
pub fn fix_sign(mut v: nalgebra::DVectorViewMut<'_, f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Spectral decomposition of `M₂(μ) = X·A·Xᵀ`.
pub fn fit(frame: &DataFrame, coeffs: &MomentCoefficients, options: FitOptions) -> Result<PmaModel> {
    let n = frame.n_samples();
    if coeffs.n_samples() != n {
        return Err(PmaError::Config(format!(
            "coefficients cover {} samples, frame has {n}",
            coeffs.n_samples()
        )));
    }
    if options.rank_tol.is_nan() || options.rank_tol < 0.0 {
        return Err(PmaError::Config(format!("rank tolerance {} must be >= 0", options.rank_tol)));
    }
    if options.max_rank == Some(0) {
        return Err(PmaError::Config("max rank must be positive".into()));
    }
    let (x, center) = centered_data(frame, coeffs, options.center);
    let p = x.nrows();
    let c = coeffs.b.ncols();
    let path = match options.path {
        DecompositionPath::Auto if c < p => DecompositionPath::Sample,
        DecompositionPath::Auto => DecompositionPath::Feature,
        explicit => explicit,
    };

    let gram = x.tr_mul(&x);
    let trace_total = coeffs.a.component_mul(&gram).sum();

    let (eigenvalues, mut axes) = match path {
        DecompositionPath::Feature => {
            let (values, vectors) = sorted_eigen(coeffs.second_moment(&x))?;
            let r = retained_rank(&values, &options)?;
            (values[..r].to_vec(), vectors.columns(0, r).clone_owned())
        }
        _ => {
            let sample_gram = coeffs.b.tr_mul(&gram) * &coeffs.b;
            let (values, vectors) = sorted_eigen(sample_gram)?;
            let r = retained_rank(&values, &options)?;
            // v = X·B·u / σ
            let lifted = &coeffs.b * vectors.columns(0, r);
            let mut axes = &x * lifted;
            for (k, mut col) in axes.column_iter_mut().enumerate() {
                col /= values[k].sqrt();
            }
            (values[..r].to_vec(), axes)
        }
    };
    for k in 0..axes.ncols() {
        fix_sign(axes.column_mut(k));
    }

    let scores = axes.tr_mul(&x);
    // d_k = Bᵀ Xᵀ v_k / λ_k
    let mut dual_coefficients = (scores.clone() * &coeffs.b).clone_owned();
    for (k, mut row) in dual_coefficients.row_iter_mut().enumerate() {
        row /= eigenvalues[k];
    }

    Ok(PmaModel {
        eigenvalues,
        axes,
        scores,
        dual_coefficients,
        trace_total,
        center,
        options,
        path,
        design: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::{points, Simplex, SimplexSet, Vertex};
    use approx::assert_relative_eq;

    fn frame(columns: &[&[f64]]) -> DataFrame {
        let cols: Vec<DVector<f64>> = columns.iter().map(|c| DVector::from_column_slice(c)).collect();
        DataFrame::from_matrix(DMatrix::from_columns(&cols)).unwrap()
    }

    fn single(indices: &[usize], n: usize) -> SimplexSet {
        SimplexSet::new(vec![Simplex::from_samples(indices, 1.0).unwrap()], n).unwrap()
    }

    #[test]
    fn point_simplex_contributes_outer_product() {
        let s = Simplex::from_samples(&[1], 1.0).unwrap();
        let contribution = simplex_second_moment_coeffs(&s).contribution(3);
        let mut expected = DMatrix::zeros(3, 3);
        expected[(1, 1)] = 1.0;
        assert_eq!(contribution, expected);
    }

    #[test]
    fn unit_segment_second_moment_is_one_third() {
        let f = frame(&[&[0.0], &[1.0]]);
        let coeffs = assemble(&single(&[0, 1], 2)).unwrap();
        // ∫₀¹ x² dx
        assert_relative_eq!(coeffs.second_moment(f.values())[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) / 6.0;
        assert_relative_eq!(coeffs.a(), &expected, epsilon = 1e-15);
    }

    #[test]
    fn unit_triangle_second_moment() {
        let f = frame(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let coeffs = assemble(&single(&[0, 1, 2], 3)).unwrap();
        // ∫∫_T x² dA / |T| = 1/6, ∫∫_T xy dA / |T| = 1/12
        let expected = DMatrix::from_row_slice(2, 2, &[1.0 / 6.0, 1.0 / 12.0, 1.0 / 12.0, 1.0 / 6.0]);
        assert_relative_eq!(coeffs.second_moment(f.values()), expected, epsilon = 1e-15);
        let m1 = first_moment(&single(&[0, 1, 2], 3), &f).unwrap();
        assert_relative_eq!(m1, DVector::from_vec(vec![1.0 / 3.0, 1.0 / 3.0]), epsilon = 1e-15);
    }

    #[test]
    fn factor_reproduces_a() {
        let set = SimplexSet::new(
            vec![
                Simplex::from_samples(&[0, 2, 3], 2.0).unwrap(),
                Simplex::from_samples(&[1], 1.0).unwrap(),
                Simplex::new(
                    vec![
                        Vertex::new(vec![(0, 0.25), (1, 0.75)]).unwrap(),
                        Vertex::sample(3),
                    ],
                    0.5,
                )
                .unwrap(),
            ],
            4,
        )
        .unwrap();
        let coeffs = assemble(&set).unwrap();
        assert_eq!(coeffs.b().ncols(), set.factor_width());
        let bbt = coeffs.b() * coeffs.b().transpose();
        assert_relative_eq!(&bbt, coeffs.a(), max_relative = 1e-12);
        assert_relative_eq!(coeffs.mean_weights().sum(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn points_assemble_to_scaled_identity() {
        let f = frame(&[&[1.0], &[2.0], &[3.0]]);
        let coeffs = assemble(&points(&f).unwrap()).unwrap();
        assert_relative_eq!(coeffs.a(), &(DMatrix::identity(3, 3) / 3.0), epsilon = 1e-15);
        assert_relative_eq!(first_moment(&points(&f).unwrap(), &f).unwrap()[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn duplicated_simplex_matches_double_weight() {
        let twice = SimplexSet::new(
            vec![
                Simplex::from_samples(&[0, 1], 1.0).unwrap(),
                Simplex::from_samples(&[0, 1], 1.0).unwrap(),
                Simplex::from_samples(&[2], 1.0).unwrap(),
            ],
            3,
        )
        .unwrap();
        let doubled = SimplexSet::new(
            vec![
                Simplex::from_samples(&[0, 1], 2.0).unwrap(),
                Simplex::from_samples(&[2], 1.0).unwrap(),
            ],
            3,
        )
        .unwrap();
        assert_eq!(assemble(&twice).unwrap(), assemble(&doubled).unwrap());
    }

    #[test]
    fn orthogonal_points_have_equal_moments() {
        let f = frame(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let coeffs = assemble(&points(&f).unwrap()).unwrap();
        let model = fit(&f, &coeffs, FitOptions::default()).unwrap();
        assert_eq!(model.rank(), 2);
        for &l in model.eigenvalues() {
            assert_relative_eq!(l, 0.5, epsilon = 1e-14);
        }
        assert_eq!(model.degenerate_gaps(), vec![1]);
        assert!(model.is_ambiguous_at(1));
    }

    #[test]
    fn diagonal_segment() {
        let f = frame(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let coeffs = assemble(&single(&[0, 1], 2)).unwrap();
        for path in [DecompositionPath::Feature, DecompositionPath::Sample] {
            let model = fit(&f, &coeffs, FitOptions { path, ..Default::default() }).unwrap();
            assert_eq!(model.rank(), 1);
            assert_relative_eq!(model.eigenvalues()[0], 2.0 / 3.0, epsilon = 1e-14);
            let h = std::f64::consts::FRAC_1_SQRT_2;
            assert_relative_eq!(model.axes().column(0).into_owned(), DVector::from_vec(vec![h, h]), epsilon = 1e-12);
            assert_relative_eq!(model.trace_total(), 2.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn functional_and_projection_basics() {
        let f = frame(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.5]]);
        let coeffs = assemble(&points(&f).unwrap()).unwrap();
        let model = fit(&f, &coeffs, FitOptions::default()).unwrap();
        let v1 = model.axes().column(0).into_owned();
        assert_relative_eq!(
            model.principal_functional(1, &v1).unwrap(),
            model.eigenvalues()[0].powf(-0.5),
            epsilon = 1e-12
        );
        let ortho = model.axes().column(1).into_owned();
        assert!(model.principal_functional(1, &ortho).unwrap().abs() < 1e-12);
        assert!(matches!(model.principal_functional(4, &v1), Err(PmaError::OutOfRange { .. })));
        assert!(matches!(model.principal_functional(0, &v1), Err(PmaError::OutOfRange { .. })));

        let block = model.project(3, model.axes()).unwrap();
        assert_relative_eq!(block, DMatrix::identity(3, 3), epsilon = 1e-12);
        assert!(model.project(4, model.axes()).is_err());
        assert!(model.project(1, &DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn sign_convention() {
        let mut v = DVector::from_vec(vec![0.1, -0.9, 0.3]);
        fix_sign(v.column_mut(0));
        assert_eq!(v[1], 0.9);
        let mut tie = DVector::from_vec(vec![-0.5, 0.5]);
        fix_sign(tie.column_mut(0));
        assert_eq!(tie[0], 0.5);
    }

    #[test]
    fn rank_errors() {
        let f = frame(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let coeffs = assemble(&points(&f).unwrap()).unwrap();
        assert_eq!(fit(&f, &coeffs, FitOptions::default()).unwrap_err(), PmaError::RankZero);

        let g = frame(&[&[1.0], &[2.0]]);
        let other = assemble(&points(&frame(&[&[1.0]])).unwrap()).unwrap();
        assert!(matches!(fit(&g, &other, FitOptions::default()), Err(PmaError::Config(_))));
    }

    #[test]
    fn max_rank_truncates_into_tail() {
        let f = frame(&[&[3.0, 0.0], &[0.0, 1.0]]);
        let coeffs = assemble(&points(&f).unwrap()).unwrap();
        let model = fit(&f, &coeffs, FitOptions { max_rank: Some(1), ..Default::default() }).unwrap();
        assert_eq!(model.eigenvalues(), &[4.5]);
        assert_relative_eq!(model.discarded_tail(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn centering_uses_measure_mean() {
        // Segment from (0) to (2) plus a point at (10) with weight 1 each.
        let f = frame(&[&[0.0], &[2.0], &[10.0]]);
        let set = SimplexSet::new(
            vec![
                Simplex::from_samples(&[0, 1], 1.0).unwrap(),
                Simplex::from_samples(&[2], 1.0).unwrap(),
            ],
            3,
        )
        .unwrap();
        let coeffs = assemble(&set).unwrap();
        let model = fit(&f, &coeffs, FitOptions { center: true, ..Default::default() }).unwrap();
        // mean = (1 + 10)/2; variance = ½(Var U[0,2] + (1 - 5.5)²) + ½ (10 - 5.5)²
        let mean = 5.5;
        let expected = 0.5 * (4.0 / 12.0 + (1.0f64 - mean).powi(2)) + 0.5 * (10.0f64 - mean).powi(2);
        assert_relative_eq!(model.center().unwrap()[0], mean, epsilon = 1e-14);
        assert_relative_eq!(model.eigenvalues()[0], expected, max_relative = 1e-12);
    }
}
