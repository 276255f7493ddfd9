//! HTTP handlers.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use pma_core::moment::DEFAULT_RANK_TOL;
use pma_core::report::round_sig;
use pma_core::{
    analyze, default_dims, export_scores, load_frame, report, Delimiter, Design, FitOptions,
    Format, PmaError, Strategy, StrategyParams,
};

use crate::store::{SessionStore, StoredModel};

pub const DEFAULT_UPLOAD_LIMIT: usize = 256 * 1024 * 1024;

#[derive(Clone)]
pub struct AppState {
    store: Arc<Mutex<SessionStore>>,
}

impl AppState {
    pub fn new(store: SessionStore) -> Self {
        AppState {
            store: Arc::new(Mutex::new(store)),
        }
    }

    fn store(&self) -> std::sync::MutexGuard<'_, SessionStore> {
        self.store.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }
}

/// Routes under `/api`, with the upload size limit applied.
pub fn router(state: AppState, upload_limit: usize) -> Router {
    Router::new()
        .route("/api/datasets", post(upload_dataset))
        .route("/api/models", post(create_model))
        .route("/api/models/{id}/report", get(model_report))
        .route("/api/models/{id}/export", get(model_export))
        .layer(DefaultBodyLimit::max(upload_limit))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, format!("unknown {what} `{id}`"))
    }

    /// Errors while reading uploaded files.
    fn upload(err: PmaError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, err.to_string())
    }
}

impl From<PmaError> for ApiError {
    fn from(err: PmaError) -> Self {
        let status = match err {
            PmaError::Decomposition(_) => StatusCode::INTERNAL_SERVER_ERROR,
            PmaError::Parse { .. } | PmaError::DuplicateId { .. } | PmaError::EmptyInput(_) => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body {
            error: String,
        }
        (self.status, Json(Body { error: self.message })).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset_id: String,
    pub p: usize,
    pub n: usize,
    pub annotation_names: Vec<String>,
    pub annotation_value_counts: BTreeMap<String, BTreeMap<String, usize>>,
}

async fn upload_dataset(
    State(state): State<AppState>,
    mut multipart: Multipart,
) -> Result<(StatusCode, Json<DatasetSummary>), Response> {
    let mut data = None;
    let mut metadata = None;
    let mut delimiter = Delimiter::Auto;
    while let Some(field) = multipart.next_field().await.map_err(IntoResponse::into_response)? {
        let name = field.name().unwrap_or_default().to_string();
        let text = field.text().await.map_err(IntoResponse::into_response)?;
        match name.as_str() {
            "data" => data = Some(text),
            "metadata" => metadata = Some(text),
            "delimiter" => {
                delimiter = text
                    .trim()
                    .parse()
                    .map_err(|e| ApiError::from(e).into_response())?
            }
            other => {
                return Err(ApiError::new(
                    StatusCode::BAD_REQUEST,
                    format!("unexpected form field `{other}`"),
                )
                .into_response())
            }
        }
    }
    let data = data.ok_or_else(|| {
        ApiError::new(StatusCode::BAD_REQUEST, "missing `data` file").into_response()
    })?;
    let frame = load_frame(&data, metadata.as_deref(), delimiter)
        .map_err(|e| ApiError::upload(e).into_response())?;

    let annotation_value_counts = frame
        .annotations()
        .iter()
        .map(|(name, values)| {
            let mut counts = BTreeMap::new();
            for v in values {
                *counts.entry(v.clone()).or_insert(0) += 1;
            }
            (name.clone(), counts)
        })
        .collect();
    let summary = DatasetSummary {
        dataset_id: String::new(),
        p: frame.n_variables(),
        n: frame.n_samples(),
        annotation_names: frame.annotations().keys().cloned().collect(),
        annotation_value_counts,
    };
    let (dataset_id, _) = state.store().insert_dataset(frame);
    log::info!("stored dataset {dataset_id} ({}×{})", summary.p, summary.n);
    Ok((
        StatusCode::CREATED,
        Json(DatasetSummary {
            dataset_id,
            ..summary
        }),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelRequest {
    pub dataset_id: String,
    pub strategy: String,
    #[serde(default)]
    pub params: StrategyParams,
    #[serde(default)]
    pub volume_weights: bool,
    #[serde(default)]
    pub center: bool,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOL
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub eigenvalues: Vec<f64>,
    pub trace_total: f64,
    pub warnings: Vec<String>,
}

async fn create_model(
    State(state): State<AppState>,
    Json(request): Json<ModelRequest>,
) -> Result<(StatusCode, Json<ModelSummary>), ApiError> {
    let frame = state
        .store()
        .dataset(&request.dataset_id)
        .ok_or_else(|| ApiError::not_found("dataset", &request.dataset_id))?;
    let design = Design {
        strategy: Strategy::from_parts(&request.strategy, &request.params)?,
        volume_weights: request.volume_weights,
    };
    let options = FitOptions {
        center: request.center,
        rank_tol: request.rank_tol,
        ..FitOptions::default()
    };

    let fit_frame = Arc::clone(&frame);
    let analysis = tokio::task::spawn_blocking(move || analyze(&fit_frame, &design, options))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;

    let eigenvalues = analysis.model.eigenvalues().iter().map(|&l| round_sig(l)).collect();
    let trace_total = round_sig(analysis.model.trace_total());
    let warnings = analysis.warnings.clone();
    let model_id = state.store().insert_model(StoredModel {
        dataset_id: request.dataset_id,
        frame,
        analysis,
        created: SystemTime::now(),
    });
    Ok((
        StatusCode::CREATED,
        Json(ModelSummary {
            model_id,
            eigenvalues,
            trace_total,
            warnings,
        }),
    ))
}

#[derive(Debug, Deserialize)]
struct ReportQuery {
    dims: Option<usize>,
}

fn lookup_report(
    state: &AppState,
    id: &str,
    dims: Option<usize>,
) -> Result<pma_core::ProjectionReport, ApiError> {
    let stored = state
        .store()
        .model(id)
        .ok_or_else(|| ApiError::not_found("model", id))?;
    let model = &stored.analysis.model;
    let dims = dims.unwrap_or_else(|| default_dims(model));
    Ok(report(model, &stored.analysis.set, &stored.frame, dims)?)
}

fn with_content_type(body: String, content_type: &'static str) -> Response {
    (
        [(header::CONTENT_TYPE, HeaderValue::from_static(content_type))],
        body,
    )
        .into_response()
}

async fn model_report(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<ReportQuery>,
) -> Result<Response, ApiError> {
    let report = lookup_report(&state, &id, query.dims)?;
    Ok(with_content_type(report.to_json(), "application/json"))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
    dims: Option<usize>,
}

async fn model_export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let format: Format = query.format.as_deref().unwrap_or("tsv").parse()?;
    let report = lookup_report(&state, &id, query.dims)?;
    let content_type = match format {
        Format::Tsv => "text/tab-separated-values; charset=utf-8",
        Format::Json => "application/json",
    };
    Ok(with_content_type(export_scores(&report, format), content_type))
}
