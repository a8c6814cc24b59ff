use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::Router;
use revcone_core::filter::{apply_filters_with, FilterError, FilterSpec};
use revcone_core::ingest::{MetadataPatch, SCHEMA_VERSION};
use revcone_core::{
    aggregate_kind, build_report, run_compass, AggKind, CompassError, CompassOptions, DeclKind,
    DepSite, EdgeKind, NodeMetadata, ProjectInfo, ReportFormat,
};
use serde::{Deserialize, Serialize};

use crate::{LoadedState, PatchError, ServiceState, Snapshot};

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/graph", get(graph))
        .route("/api/compass", post(compass))
        .route("/api/nodes/{name}/metadata", patch(patch_metadata))
        .route("/api/report", get(report))
        .with_state(state)
}

/// Error body: `{"error": "...", "field": "..."}`, `field` only when a
/// specific input field is to blame.
#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl ToString) -> Self {
        ApiError {
            status,
            message: message.to_string(),
            field: None,
        }
    }

    fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn unavailable() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "graph not loaded yet")
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a str>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json(
            self.status,
            &ErrorBody {
                error: &self.message,
                field: self.field.as_deref(),
            },
        )
    }
}

impl From<CompassError> for ApiError {
    fn from(err: CompassError) -> Self {
        let status = match err {
            CompassError::UnknownTargets(_) => StatusCode::NOT_FOUND,
            CompassError::EmptyTargets | CompassError::EmptyCone => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, err)
    }
}

impl From<FilterError> for ApiError {
    fn from(err: FilterError) -> Self {
        let status = match err {
            FilterError::UnknownTargets(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::BAD_REQUEST,
        };
        let field = match &err {
            FilterError::UnknownParameter(p) => Some(p.clone()),
            FilterError::InvalidValue { param, .. } => Some(param.clone()),
            FilterError::Pattern { .. } => Some("namePattern".to_string()),
            FilterError::MissingTargets(_)
            | FilterError::TargetsWithoutScope
            | FilterError::UnknownTargets(_) => Some("targets".to_string()),
        };
        ApiError {
            status,
            message: err.to_string(),
            field,
        }
    }
}

/// Same conventions as the interchange files: two-space indent, trailing newline.
fn json<T: Serialize>(status: StatusCode, body: &T) -> Response {
    let mut bytes = serde_json::to_vec_pretty(body).expect("response bodies serialize");
    bytes.push(b'\n');
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

/// Parses a JSON body, reporting the offending field path on schema errors.
fn parse_body<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        let field = (path != "." && !inner.is_syntax() && !inner.is_eof()).then_some(path);
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: match &field {
                Some(f) => format!("invalid `{f}`: {inner}"),
                None => format!("invalid request body: {inner}"),
            },
            field,
        }
    })?;
    de.end()
        .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))?;
    Ok(value)
}

fn loaded(state: &ServiceState) -> Result<&LoadedState, ApiError> {
    state.loaded().ok_or_else(ApiError::unavailable)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Health {
    status: &'static str,
    graph_node_count: usize,
    schema_version: u32,
}

async fn health(State(state): State<Arc<ServiceState>>) -> Response {
    match state.loaded() {
        Some(loaded) => json(
            StatusCode::OK,
            &Health {
                status: "ok",
                graph_node_count: loaded.snapshot().graph.node_count(),
                schema_version: SCHEMA_VERSION,
            },
        ),
        None => json(
            StatusCode::SERVICE_UNAVAILABLE,
            &serde_json::json!({ "status": "starting" }),
        ),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct NodeDoc<'a> {
    name: &'a str,
    kind: DeclKind,
    agg_kind: AggKind,
    module: &'a str,
    #[serde(flatten)]
    metadata: NodeMetadata,
    #[serde(skip_serializing_if = "Option::is_none")]
    last_modified: Option<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EdgeDoc<'a> {
    source: &'a str,
    target: &'a str,
    site: DepSite,
    kind: EdgeKind,
    pruned: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct GraphViewDoc<'a> {
    project: &'a ProjectInfo,
    node_count: usize,
    edge_count: usize,
    nodes: Vec<NodeDoc<'a>>,
    edges: Vec<EdgeDoc<'a>>,
    spec: &'a FilterSpec,
}

fn node_doc<'a>(snapshot: &'a Snapshot, name: &'a str) -> NodeDoc<'a> {
    let decl = snapshot.graph.get(name).expect("name comes from the graph");
    NodeDoc {
        name: &decl.name,
        kind: decl.kind,
        agg_kind: aggregate_kind(decl.kind),
        module: &decl.module,
        metadata: decl.metadata,
        last_modified: snapshot.sidecar.get(name).map(|e| e.last_modified_string()),
    }
}

async fn graph(
    State(state): State<Arc<ServiceState>>,
    RawQuery(query): RawQuery,
) -> Result<Response, ApiError> {
    let loaded = loaded(&state)?;
    let spec = FilterSpec::from_query(query.as_deref().unwrap_or(""))?;
    let snapshot = loaded.snapshot();
    let view = apply_filters_with(&snapshot.graph, &spec, loaded.options())?;
    let edges = view
        .edges
        .iter()
        .map(|e| {
            let kind = snapshot
                .graph
                .classify_edge(e)
                .expect("view edges come from the graph");
            EdgeDoc {
                source: &e.source,
                target: &e.target,
                site: e.site,
                kind,
                pruned: kind.pruned(),
            }
        })
        .collect();
    let doc = GraphViewDoc {
        project: snapshot.graph.project(),
        node_count: view.nodes.len(),
        edge_count: view.edges.len(),
        nodes: view.nodes.iter().map(|n| node_doc(&snapshot, n)).collect(),
        edges,
        spec: &view.spec,
    };
    Ok(json(StatusCode::OK, &doc))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CompassRequest {
    targets: Vec<String>,
    #[serde(default)]
    options: Option<CompassOptions>,
}

async fn compass(
    State(state): State<Arc<ServiceState>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let loaded = loaded(&state)?;
    let request: CompassRequest = parse_body(&body)?;
    let options = request.options.unwrap_or(loaded.options());
    let snapshot = loaded.snapshot();
    let result = run_compass(
        &snapshot.graph,
        request.targets.iter().map(String::as_str),
        options,
    )?;
    Ok(json(StatusCode::OK, &result))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct StoredMetadata<'a> {
    name: &'a str,
    #[serde(flatten)]
    metadata: NodeMetadata,
    last_modified: String,
}

async fn patch_metadata(
    State(state): State<Arc<ServiceState>>,
    Path(name): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let loaded = loaded(&state)?;
    if !loaded.snapshot().graph.contains(&name) {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            format!("unknown node `{name}`"),
        ));
    }
    let patch: MetadataPatch = parse_body(&body)?;
    let (metadata, snapshot) = loaded.patch(&name, &patch).await.map_err(|err| match err {
        PatchError::UnknownNode(_) => ApiError::new(StatusCode::NOT_FOUND, err),
        PatchError::Persist(ref io) => {
            tracing::error!(error = %io, "sidecar write failed");
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, err)
        }
    })?;
    let last_modified = snapshot
        .sidecar
        .get(&name)
        .expect("entry was just written")
        .last_modified_string();
    Ok(json(
        StatusCode::OK,
        &StoredMetadata {
            name: &name,
            metadata,
            last_modified,
        },
    ))
}

fn parse_axioms(value: &str) -> Result<CompassOptions, ApiError> {
    match value {
        "all" => Ok(CompassOptions::all_axioms()),
        "cone" => Ok(CompassOptions::cone_axioms()),
        "none" => Ok(CompassOptions::no_axioms()),
        other => Err(ApiError {
            status: StatusCode::BAD_REQUEST,
            message: format!("invalid value for `axioms`: `{other}` (expected all, cone or none)"),
            field: Some("axioms".into()),
        }),
    }
}

/// `?targets=A,B&format=table|json|markdown&axioms=all|cone|none`.
async fn report(
    State(state): State<Arc<ServiceState>>,
    RawQuery(query): RawQuery,
) -> Result<Response, ApiError> {
    let loaded = loaded(&state)?;
    let mut targets = BTreeSet::new();
    let mut format = ReportFormat::Json;
    let mut options = loaded.options();
    let query = query.unwrap_or_default();
    let pairs: Vec<(String, String)> = query_pairs(&query);
    for (key, value) in &pairs {
        match key.as_str() {
            "targets" => targets.extend(
                value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from),
            ),
            "format" => {
                format = value.parse().map_err(|reason: String| ApiError {
                    status: StatusCode::BAD_REQUEST,
                    message: reason,
                    field: Some("format".into()),
                })?
            }
            "axioms" => options = parse_axioms(value)?,
            other => {
                return Err(ApiError {
                    status: StatusCode::BAD_REQUEST,
                    message: format!("unknown report parameter `{other}`"),
                    field: Some(other.to_string()),
                })
            }
        }
    }
    let snapshot = loaded.snapshot();
    let report = build_report(&snapshot.graph, targets.iter().map(String::as_str), options)?;
    let content_type = match format {
        ReportFormat::Json => "application/json",
        ReportFormat::Markdown => "text/markdown; charset=utf-8",
        ReportFormat::Table => "text/plain; charset=utf-8",
    };
    Ok((
        StatusCode::OK,
        [(header::CONTENT_TYPE, content_type)],
        report.render(format),
    )
        .into_response())
}

fn query_pairs(query: &str) -> Vec<(String, String)> {
    form_urlencoded::parse(query.as_bytes())
        .into_owned()
        .collect()
}
