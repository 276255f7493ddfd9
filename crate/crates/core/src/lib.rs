//! Simplex principal moment analysis.
//!
//! Samples are turned into a measure built from uniform measures on simplexes
//! ([`simplex`]), the second moment tensor of that measure is decomposed
//! ([`moment`]), and the optimal low-rank projections are reported with their
//! exact residual second moment ([`report`]). Using one Dirac mass per sample
//! reproduces uncentered PCA.

pub mod error;
pub mod ingest;
pub mod moment;
pub mod pipeline;
pub mod report;
pub mod simplex;

pub use error::{PmaError, Result};
pub use ingest::{load_frame, parse_annotations, parse_data, DataFrame, Delimiter};
pub use moment::{
    assemble, first_moment, fit, simplex_second_moment_coeffs, DecompositionPath, FitOptions,
    MomentCoefficients, PmaModel,
};
pub use pipeline::{
    analyze, build_simplexes, Analysis, Design, ManualSimplex, Strategy, StrategyParams,
};
pub use report::{
    default_dims, export_axes, export_eigenvalues, export_report, export_scores, report,
    second_moment_seminorm, seminorm_between, Format, ProjectionReport,
};
pub use simplex::{apply_volume_weights, chain, group_by, knn, points, Metric, Simplex, SimplexSet, Vertex};
