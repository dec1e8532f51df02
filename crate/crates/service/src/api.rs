//! HTTP API under `/api`.
//!
//! | method | path                                | result                     |
//! |--------|-------------------------------------|----------------------------|
//! | PUT    | `/api/ground-truth`                 | 200, ground-truth summary  |
//! | POST   | `/api/models`                       | 201 (200 on re-import)     |
//! | GET    | `/api/models`                       | model summaries            |
//! | DELETE | `/api/models/{id}`                  | 204                        |
//! | GET    | `/api/metrics/{metric}`             | metric matrix              |
//! | GET    | `/api/metrics/{metric}/class/{c}`   | per-model class detail     |
//! | GET    | `/api/layout?…`                     | scene                      |
//! | GET    | `/api/export.svg?…`                 | `image/svg+xml`            |

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, put};
use axum::{Json, Router};
use circles_core::ingest::IngestError;
use circles_core::metrics::{MetricId, MetricsError};
use circles_core::svg::{render_svg, SvgStyle};
use parking_lot::RwLock;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::params::LayoutParams;
use crate::store::{ModelSummary, Store, StoreError};

pub type SharedStore = Arc<RwLock<Store>>;

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NoGroundTruth => StatusCode::PRECONDITION_FAILED,
            StoreError::NoModels
            | StoreError::ClassCountMismatch { .. }
            | StoreError::NotAdmissible { .. }
            | StoreError::DuplicateName(_) => StatusCode::CONFLICT,
            StoreError::Ingest(IngestError::ClassCountMismatch { .. }) => StatusCode::CONFLICT,
            StoreError::UnknownModel(_) => StatusCode::NOT_FOUND,
            StoreError::Metrics(MetricsError::ClassOutOfRange { .. })
            | StoreError::Metrics(MetricsError::UnknownMetric(_)) => StatusCode::NOT_FOUND,
            StoreError::Ingest(_) | StoreError::Layout(_) => StatusCode::BAD_REQUEST,
            StoreError::Metrics(_) | StoreError::Io { .. } | StoreError::Corrupt { .. } => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn json_body(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn metric_from_path(name: &str) -> ApiResult<MetricId> {
    name.parse::<MetricId>()
        .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, e.to_string()))
}

pub fn router(store: SharedStore, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/ground-truth", put(put_ground_truth))
        .route("/api/models", get(list_models).post(post_model))
        .route("/api/models/{id}", delete(delete_model))
        .route("/api/metrics/{metric}", get(get_metric))
        .route("/api/metrics/{metric}/class/{class}", get(get_class_detail))
        .route("/api/layout", get(get_layout))
        .route("/api/export.svg", get(get_svg))
        .layer(DefaultBodyLimit::disable())
        .with_state(store);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { "circles API; see /api/models" })),
    }
}

async fn put_ground_truth(State(store): State<SharedStore>, body: Bytes) -> ApiResult<Response> {
    let mut store = store.write();
    let gt = store.set_ground_truth(&body)?;
    Ok(Json(json!({
        "class_count": gt.class_count(),
        "sample_count": gt.len(),
    }))
    .into_response())
}

async fn post_model(State(store): State<SharedStore>, body: Bytes) -> ApiResult<Response> {
    let (record, created) = store.write().import_model(&body)?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(ModelSummary::from(&record))).into_response())
}

async fn list_models(State(store): State<SharedStore>) -> Json<Vec<ModelSummary>> {
    Json(store.read().summaries())
}

async fn delete_model(
    State(store): State<SharedStore>,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    store.write().delete_model(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_metric(
    State(store): State<SharedStore>,
    Path(metric): Path<String>,
) -> ApiResult<Response> {
    let metric = metric_from_path(&metric)?;
    let matrix = store.read().metric_matrix(metric)?;
    Ok(json_body(matrix.to_json()))
}

async fn get_class_detail(
    State(store): State<SharedStore>,
    Path((metric, class)): Path<(String, String)>,
) -> ApiResult<Response> {
    let metric = metric_from_path(&metric)?;
    let class: usize = class
        .parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, format!("no class {class:?}")))?;
    let detail = store.read().class_detail(metric, class)?;
    Ok(Json(detail).into_response())
}

fn scene_for(
    store: &SharedStore,
    params: &LayoutParams,
) -> ApiResult<circles_core::layout::LayoutScene> {
    let metric = params
        .metric()
        .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, e))?;
    let config = params.view_config().map_err(ApiError::bad_request)?;
    Ok(store.read().layout(metric, &config)?)
}

async fn get_layout(
    State(store): State<SharedStore>,
    Query(params): Query<LayoutParams>,
) -> ApiResult<Response> {
    Ok(json_body(scene_for(&store, &params)?.to_json()))
}

async fn get_svg(
    State(store): State<SharedStore>,
    Query(params): Query<LayoutParams>,
) -> ApiResult<Response> {
    let scene = scene_for(&store, &params)?;
    let svg = render_svg(&scene, &SvgStyle::default())
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

/// Serves the API until ctrl-c.
pub async fn serve(
    store: SharedStore,
    addr: std::net::SocketAddr,
    ui_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
