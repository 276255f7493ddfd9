//! Projection reports, exports and the second moment semi-norm.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{PmaError, Result};
use crate::ingest::DataFrame;
use crate::moment::{simplex_second_moment_coeffs, PmaModel};
use crate::simplex::SimplexSet;

/// Significant digits used for every exported number.
pub const EXPORT_DIGITS: usize = 12;

/// One 1-face of a simplex, with both end points projected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub simplex: usize,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
}

/// The optimal rank-`s` view of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub dims: usize,
    pub sample_ids: Vec<String>,
    pub variable_ids: Vec<String>,
    /// All retained principal moments.
    pub eigenvalues: Vec<f64>,
    pub trace_total: f64,
    /// `λ_k / trace_total` for `k ≤ s`.
    pub explained: Vec<f64>,
    pub cumulative: f64,
    /// Second moment lost by the optimal rank-`s` projection.
    pub residual: f64,
    /// True when `λ_s ≈ λ_{s+1}`, so the optimal projection is not unique.
    pub ambiguous: bool,
    /// `scores[k][j]`: coordinate of sample `j` on axis `k`.
    pub scores: Vec<Vec<f64>>,
    /// `axis_loadings[i][k]`: entry of variable `i` in axis `k`.
    pub axis_loadings: Vec<Vec<f64>>,
    pub simplex_edges: Vec<Edge>,
}

impl ProjectionReport {
    /// Copy with every number rounded to [`EXPORT_DIGITS`] significant digits.
    pub fn rounded(&self) -> ProjectionReport {
        let vec = |v: &[f64]| v.iter().map(|&x| round_sig(x)).collect::<Vec<_>>();
        let mat = |m: &[Vec<f64>]| m.iter().map(|r| vec(r)).collect::<Vec<_>>();
        ProjectionReport {
            dims: self.dims,
            sample_ids: self.sample_ids.clone(),
            variable_ids: self.variable_ids.clone(),
            eigenvalues: vec(&self.eigenvalues),
            trace_total: round_sig(self.trace_total),
            explained: vec(&self.explained),
            cumulative: round_sig(self.cumulative),
            residual: round_sig(self.residual),
            ambiguous: self.ambiguous,
            scores: mat(&self.scores),
            axis_loadings: mat(&self.axis_loadings),
            simplex_edges: self
                .simplex_edges
                .iter()
                .map(|e| Edge {
                    simplex: e.simplex,
                    from: vec(&e.from),
                    to: vec(&e.to),
                })
                .collect(),
        }
    }

    /// JSON payload with rounded numbers and fixed field order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.rounded()).expect("report serializes")
    }
}

/// Rank shown when none is requested: `min(3, r)`.
pub fn default_dims(model: &PmaModel) -> usize {
    model.rank().min(3)
}

/// Builds the rank-`s` report for a model fitted on `frame` with design `set`.
pub fn report(
    model: &PmaModel,
    set: &SimplexSet,
    frame: &DataFrame,
    s: usize,
) -> Result<ProjectionReport> {
    if s == 0 || s > model.rank() {
        return Err(PmaError::OutOfRange {
            what: "dims",
            value: s,
            max: model.rank(),
        });
    }
    let lambda = model.eigenvalues();
    let trace = model.trace_total();
    let captured: f64 = lambda[..s].iter().sum();
    let scores = model.scores().rows(0, s);
    let loadings = model.axes().columns(0, s);

    let mut simplex_edges = Vec::new();
    for (g, simplex) in set.simplexes().iter().enumerate() {
        if simplex.len() < 2 {
            continue;
        }
        let coords = model.project(s, &simplex.vertex_points(frame.values()))?;
        for a in 0..simplex.len() {
            for b in (a + 1)..simplex.len() {
                simplex_edges.push(Edge {
                    simplex: g,
                    from: coords.column(a).iter().copied().collect(),
                    to: coords.column(b).iter().copied().collect(),
                });
            }
        }
    }

    Ok(ProjectionReport {
        dims: s,
        sample_ids: frame.sample_ids().to_vec(),
        variable_ids: frame.variable_ids().to_vec(),
        eigenvalues: lambda.to_vec(),
        trace_total: trace,
        explained: lambda[..s].iter().map(|l| l / trace).collect(),
        cumulative: (captured / trace).min(1.0),
        residual: trace - captured,
        ambiguous: model.is_ambiguous_at(s),
        scores: rows(&scores.clone_owned()),
        axis_loadings: rows(&loadings.clone_owned()),
        simplex_edges,
    })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Output format for exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Tsv => "tsv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = PmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "json" => Ok(Format::Json),
            other => Err(PmaError::Config(format!(
                "unknown format `{other}` (expected tsv or json)"
            ))),
        }
    }
}

/// Rounds to [`EXPORT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", EXPORT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// Shortest text for the rounded value: `0.5`, `1`, `1e-20`.
pub fn format_number(x: f64) -> String {
    let s = format!("{:?}", round_sig(x));
    match s.strip_suffix(".0") {
        Some(stripped) => stripped.to_string(),
        None => s,
    }
}

fn component_names(s: usize) -> impl Iterator<Item = String> {
    (1..=s).map(|k| format!("PM{k}"))
}

fn join_lines(lines: Vec<String>) -> String {
    lines.join("\n")
}

#[derive(Serialize)]
struct ScoresJson<'a> {
    samples: &'a [String],
    scores: Vec<Vec<f64>>,
}

/// Sample scores, one row per sample in sample order.
///
/// TSV: header `sample\tPM1…PMs`, then `id\tscore…`; lines are joined by
/// `\n` without a trailing newline. JSON: `{"samples":[…],"scores":[[…]]}`
/// with `scores[j]` the coordinates of sample `j`.
pub fn export_scores(report: &ProjectionReport, format: Format) -> String {
    let n = report.sample_ids.len();
    let per_sample: Vec<Vec<f64>> = (0..n)
        .map(|j| report.scores.iter().map(|row| round_sig(row[j])).collect())
        .collect();
    match format {
        Format::Tsv => {
            let mut lines = vec![std::iter::once("sample".to_string())
                .chain(component_names(report.dims))
                .collect::<Vec<_>>()
                .join("\t")];
            for (id, row) in report.sample_ids.iter().zip(&per_sample) {
                let mut fields = vec![id.clone()];
                fields.extend(row.iter().map(|&v| format_number(v)));
                lines.push(fields.join("\t"));
            }
            join_lines(lines)
        }
        Format::Json => serde_json::to_string(&ScoresJson {
            samples: &report.sample_ids,
            scores: per_sample,
        })
        .expect("scores serialize"),
    }
}

#[derive(Serialize)]
struct EigenvaluesJson {
    eigenvalues: Vec<f64>,
    explained: Vec<f64>,
    cumulative: Vec<f64>,
    trace_total: f64,
}

/// All retained principal moments with explained and cumulative fractions.
pub fn export_eigenvalues(report: &ProjectionReport, format: Format) -> String {
    let trace = report.trace_total;
    let explained: Vec<f64> = report.eigenvalues.iter().map(|l| l / trace).collect();
    let cumulative: Vec<f64> = explained
        .iter()
        .scan(0.0, |acc, &e| {
            *acc += e;
            Some(*acc)
        })
        .collect();
    match format {
        Format::Tsv => {
            let mut lines = vec!["component\tprincipal_moment\texplained\tcumulative".to_string()];
            for (k, name) in component_names(report.eigenvalues.len()).enumerate() {
                lines.push(format!(
                    "{name}\t{}\t{}\t{}",
                    format_number(report.eigenvalues[k]),
                    format_number(explained[k]),
                    format_number(cumulative[k])
                ));
            }
            join_lines(lines)
        }
        Format::Json => {
            let r = |v: &[f64]| v.iter().map(|&x| round_sig(x)).collect();
            serde_json::to_string(&EigenvaluesJson {
                eigenvalues: r(&report.eigenvalues),
                explained: r(&explained),
                cumulative: r(&cumulative),
                trace_total: round_sig(trace),
            })
            .expect("eigenvalues serialize")
        }
    }
}

#[derive(Serialize)]
struct AxesJson<'a> {
    variables: &'a [String],
    axes: Vec<Vec<f64>>,
}

/// Axis loadings, one row per variable.
pub fn export_axes(report: &ProjectionReport, format: Format) -> String {
    match format {
        Format::Tsv => {
            let mut lines = vec![std::iter::once("variable".to_string())
                .chain(component_names(report.dims))
                .collect::<Vec<_>>()
                .join("\t")];
            for (id, row) in report.variable_ids.iter().zip(&report.axis_loadings) {
                let mut fields = vec![id.clone()];
                fields.extend(row.iter().map(|&v| format_number(v)));
                lines.push(fields.join("\t"));
            }
            join_lines(lines)
        }
        Format::Json => serde_json::to_string(&AxesJson {
            variables: &report.variable_ids,
            axes: report
                .axis_loadings
                .iter()
                .map(|r| r.iter().map(|&x| round_sig(x)).collect())
                .collect(),
        })
        .expect("axes serialize"),
    }
}

/// Summary of the rank-`s` projection (TSV) or the full report (JSON).
pub fn export_report(report: &ProjectionReport, format: Format) -> String {
    match format {
        Format::Tsv => {
            let captured: f64 = report.eigenvalues[..report.dims].iter().sum();
            join_lines(vec![
                "key\tvalue".to_string(),
                format!("dims\t{}", report.dims),
                format!("rank\t{}", report.eigenvalues.len()),
                format!("trace_total\t{}", format_number(report.trace_total)),
                format!("captured\t{}", format_number(captured)),
                format!("cumulative\t{}", format_number(report.cumulative)),
                format!("residual\t{}", format_number(report.residual)),
                format!("ambiguous\t{}", report.ambiguous),
                format!("simplex_edges\t{}", report.simplex_edges.len()),
            ])
        }
        Format::Json => report.to_json(),
    }
}

/// Parses a TSV score export back into `(sample ids, per-sample scores)`.
pub fn parse_scores_tsv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut ids = Vec::new();
    let mut scores = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let mut fields = line.split('\t');
        ids.push(fields.next().unwrap_or_default().to_string());
        let row = fields
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>()
                    .map_err(|_| PmaError::parse(i + 1, Some(c + 2), format!("`{f}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        scores.push(row);
    }
    Ok((ids, scores))
}

/// Second moment semi-norm `trace M₂(|μ − ν|)` for two measures sharing the
/// simplex skeleton of `skeleton`, given as absolute per-simplex masses.
///
/// A zero mass vector stands for the zero measure.
pub fn second_moment_seminorm(
    skeleton: &SimplexSet,
    mu: &[f64],
    nu: &[f64],
    frame: &DataFrame,
) -> Result<f64> {
    if mu.len() != skeleton.len() || nu.len() != skeleton.len() {
        return Err(PmaError::Config(format!(
            "mass vectors of length {} and {} for {} simplexes",
            mu.len(),
            nu.len(),
            skeleton.len()
        )));
    }
    if skeleton.n_samples() != frame.n_samples() {
        return Err(PmaError::Config("skeleton and frame disagree on sample count".into()));
    }
    let x = frame.values();
    let mut total = 0.0;
    for (g, simplex) in skeleton.simplexes().iter().enumerate() {
        let mass = (mu[g] - nu[g]).abs();
        if mass == 0.0 {
            continue;
        }
        // trace(X·col·colᵀ·Xᵀ) = ‖X·col‖²
        let unit = crate::simplex::Simplex::new(simplex.vertices().to_vec(), 1.0)?;
        let moment = simplex_second_moment_coeffs(&unit);
        let trace: f64 = moment
            .columns
            .iter()
            .map(|column| {
                let mut y = nalgebra::DVector::zeros(x.nrows());
                for &(j, c) in column {
                    y.axpy(c, &x.column(j), 1.0);
                }
                y.norm_squared()
            })
            .sum();
        total += mass * moment.scale * trace;
    }
    Ok(total)
}

/// Semi-norm between two normalized simplex measures on the same skeleton.
pub fn seminorm_between(mu: &SimplexSet, nu: &SimplexSet, frame: &DataFrame) -> Result<f64> {
    if !mu.same_skeleton(nu) {
        return Err(PmaError::Config("measures do not share a simplex skeleton".into()));
    }
    second_moment_seminorm(mu, &mu.normalized_masses(), &nu.normalized_masses(), frame)
}
