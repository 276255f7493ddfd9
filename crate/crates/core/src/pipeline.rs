//! End-to-end fitting from a data frame and a measure design.
//!
//! The CLI and the explorer service both go through [`analyze`], so equal
//! inputs give bit-identical models regardless of the front end.

use serde::{Deserialize, Serialize};

use crate::error::{PmaError, Result};
use crate::ingest::DataFrame;
use crate::moment::{assemble, fit, FitOptions, MomentCoefficients, PmaModel};
use crate::simplex::{self, Metric, Simplex, SimplexSet, Vertex};

/// A manually specified simplex, with vertices given as convex combinations
/// of sample ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualSimplex {
    pub vertices: Vec<Vec<(String, f64)>>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

/// How the measure is built from the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum Strategy {
    Points,
    #[serde(rename = "groupby")]
    GroupBy { column: String },
    Knn {
        k: usize,
        #[serde(default)]
        metric: Metric,
    },
    Chain {
        order_column: String,
        #[serde(default)]
        series_column: Option<String>,
    },
    Manual { simplexes: Vec<ManualSimplex> },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Points => "points",
            Strategy::GroupBy { .. } => "groupby",
            Strategy::Knn { .. } => "knn",
            Strategy::Chain { .. } => "chain",
            Strategy::Manual { .. } => "manual",
        }
    }
}

/// Strategy parameters as they arrive from flags or request bodies.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyParams {
    pub group_column: Option<String>,
    pub k: Option<usize>,
    pub order_column: Option<String>,
    pub series_column: Option<String>,
    pub simplexes: Option<Vec<ManualSimplex>>,
}

impl Strategy {
    /// Resolves a strategy name and its loose parameters, rejecting missing
    /// required parameters.
    pub fn from_parts(name: &str, params: &StrategyParams) -> Result<Strategy> {
        let require = |value: &Option<String>, flag: &str| {
            value
                .clone()
                .ok_or_else(|| PmaError::Config(format!("strategy `{name}` requires {flag}")))
        };
        match name {
            "points" => Ok(Strategy::Points),
            "groupby" => Ok(Strategy::GroupBy {
                column: require(&params.group_column, "a group column")?,
            }),
            "knn" => {
                let k = params
                    .k
                    .ok_or_else(|| PmaError::Config("strategy `knn` requires k".into()))?;
                if k == 0 {
                    return Err(PmaError::Config("k must be at least 1".into()));
                }
                Ok(Strategy::Knn {
                    k,
                    metric: Metric::Euclidean,
                })
            }
            "chain" => Ok(Strategy::Chain {
                order_column: require(&params.order_column, "an order column")?,
                series_column: params.series_column.clone(),
            }),
            "manual" => Ok(Strategy::Manual {
                simplexes: params.simplexes.clone().ok_or_else(|| {
                    PmaError::Config("strategy `manual` requires a simplex list".into())
                })?,
            }),
            other => Err(PmaError::Config(format!(
                "unknown strategy `{other}` (expected points, groupby, knn, chain or manual)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub strategy: Strategy,
    /// Scale simplex masses by their volume.
    pub volume_weights: bool,
}

impl Design {
    pub fn new(strategy: Strategy) -> Self {
        Design {
            strategy,
            volume_weights: false,
        }
    }
}

/// The simplex set for `design`, plus warnings about dropped simplexes.
pub fn build_simplexes(frame: &DataFrame, design: &Design) -> Result<(SimplexSet, Vec<String>)> {
    let set = match &design.strategy {
        Strategy::Points => simplex::points(frame)?,
        Strategy::GroupBy { column } => simplex::group_by(frame, column)?,
        Strategy::Knn { k, metric } => simplex::knn(frame, *k, *metric)?,
        Strategy::Chain {
            order_column,
            series_column,
        } => simplex::chain(frame, order_column, series_column.as_deref())?,
        Strategy::Manual { simplexes } => manual(frame, simplexes)?,
    };
    if !design.volume_weights {
        return Ok((set, Vec::new()));
    }
    let weighted = simplex::apply_volume_weights(&set, frame)?;
    let warnings = if weighted.dropped.is_empty() {
        Vec::new()
    } else {
        vec![format!(
            "dropped {} degenerate simplex(es) with zero volume",
            weighted.dropped.len()
        )]
    };
    Ok((weighted.set, warnings))
}

fn manual(frame: &DataFrame, entries: &[ManualSimplex]) -> Result<SimplexSet> {
    let index = |id: &str| {
        frame
            .sample_ids()
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| PmaError::UnknownSample(id.to_string()))
    };
    let simplexes = entries
        .iter()
        .map(|entry| {
            let vertices = entry
                .vertices
                .iter()
                .map(|combo| {
                    let combo = combo
                        .iter()
                        .map(|(id, c)| Ok((index(id)?, *c)))
                        .collect::<Result<Vec<_>>>()?;
                    Vertex::new(combo)
                })
                .collect::<Result<Vec<_>>>()?;
            Simplex::new(vertices, entry.weight)
        })
        .collect::<Result<Vec<_>>>()?;
    SimplexSet::new(simplexes, frame.n_samples())
}

/// Everything produced by one fit.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub set: SimplexSet,
    pub coeffs: MomentCoefficients,
    pub model: PmaModel,
    pub warnings: Vec<String>,
}

/// Builds the measure, assembles its moments and decomposes them.
pub fn analyze(frame: &DataFrame, design: &Design, options: FitOptions) -> Result<Analysis> {
    let (set, mut warnings) = build_simplexes(frame, design)?;
    let coeffs = assemble(&set)?;
    let model = fit(frame, &coeffs, options)?.with_design(design.clone());
    for k in model.degenerate_gaps() {
        warnings.push(format!(
            "principal moments {k} and {} are tied; the rank-{k} optimal projection is not unique",
            k + 1
        ));
    }
    Ok(Analysis {
        set,
        coeffs,
        model,
        warnings,
    })
}
