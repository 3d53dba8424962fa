//! The `/v1` HTTP API.

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nim_core::transform::{encode_document, encode_scalar};
use nim_core::{AppendOutcome, Forecast, TimedValue, Timestamp};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;

use crate::engine::{Engine, HistoryWindow, ValueInput};
use crate::error::{ApiError, ApiResult};

pub const PRINCIPALS_HEADER: &str = "x-nim-principals";

type Shared = State<Arc<Engine>>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.kind.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({ "error": self.message }))).into_response()
    }
}

pub fn router(engine: Arc<Engine>) -> Router {
    let entry = "/v1/types/{qname}/instances/{iid}/entries/{field}";
    Router::new()
        .route("/v1/models", post(register_model).get(list_models))
        .route("/v1/models/{id}", get(get_model))
        .route("/v1/types/{qname}/instances", post(ingest).get(get_instances))
        .route("/v1/types/{qname}/instances/{iid}", get(get_instance))
        .route(&format!("{entry}/values"), post(append_value))
        .route(&format!("{entry}/history"), get(history))
        .route(&format!("{entry}/forecasts"), post(add_forecast).get(get_forecasts))
        .route("/v1/admin/purge", post(purge))
        .route("/v1/generic/components", get(components))
        .with_state(engine)
}

pub async fn serve(listener: TcpListener, engine: Arc<Engine>) -> std::io::Result<()> {
    axum::serve(listener, router(engine)).await
}

pub async fn serve_until(
    listener: TcpListener,
    engine: Arc<Engine>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Comma-separated principals from the request header.
fn principals(headers: &HeaderMap) -> Vec<String> {
    headers
        .get(PRINCIPALS_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(|v| {
            v.split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(String::from)
                .collect()
        })
        .unwrap_or_default()
}

fn parse_time(name: &str, text: Option<&str>) -> ApiResult<Option<Timestamp>> {
    text.map(|t| {
        Timestamp::parse_iso(t).map_err(|e| ApiError::bad_request(format!("`{name}` is not an ISO-8601 instant: {e}")))
    })
    .transpose()
}

fn parse_json(body: &[u8]) -> ApiResult<Value> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

async fn register_model(State(engine): Shared, body: String) -> ApiResult<Response> {
    let result = engine.register_model(&body)?;
    let status = if result.is_accepted() {
        StatusCode::CREATED
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    Ok((status, Json(result)).into_response())
}

async fn list_models(State(engine): Shared) -> Response {
    let models = engine.list_models();
    let models: Vec<&crate::AdapterDescriptor> = models.iter().map(AsRef::as_ref).collect();
    Json(models).into_response()
}

async fn get_model(State(engine): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let text = engine.model_text(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn ingest(State(engine): Shared, Path(qname): Path<String>, body: Bytes) -> ApiResult<Response> {
    let doc = parse_json(&body)?;
    let id = engine.ingest(&qname, &doc)?;
    Ok((StatusCode::CREATED, Json(json!({ "instanceId": id }))).into_response())
}

#[derive(Debug, Deserialize)]
struct ReadQuery {
    at: Option<String>,
    #[serde(default)]
    meta: bool,
}

async fn get_instances(
    State(engine): Shared,
    Path(qname): Path<String>,
    Query(q): Query<ReadQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let at = parse_time("at", q.at.as_deref())?;
    let instances = engine.get_instances(&qname, &principals(&headers), at)?;
    let docs: Vec<Value> = instances.iter().map(|i| encode_document(i, q.meta)).collect();
    Ok(Json(docs).into_response())
}

async fn get_instance(
    State(engine): Shared,
    Path((qname, iid)): Path<(String, String)>,
    Query(q): Query<ReadQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let at = parse_time("at", q.at.as_deref())?;
    let instance = engine.get_instance(&qname, &iid, &principals(&headers), at)?;
    Ok(Json(encode_document(&instance, q.meta)).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueBody {
    #[serde(default)]
    value: Value,
    timestamp: Option<String>,
    expiry: Option<String>,
}

async fn append_value(
    State(engine): Shared,
    Path((qname, iid, field)): Path<(String, String, String)>,
    body: Bytes,
) -> ApiResult<Response> {
    let body: ValueBody =
        serde_json::from_value(parse_json(&body)?).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let input = ValueInput {
        value: body.value,
        timestamp: parse_time("timestamp", body.timestamp.as_deref())?,
        expiry: parse_time("expiry", body.expiry.as_deref())?,
    };
    Ok(match engine.append_value(&qname, &iid, &field, &input)? {
        AppendOutcome::Stored { seq } => {
            (StatusCode::CREATED, Json(json!({ "status": "stored", "seq": seq }))).into_response()
        }
        AppendOutcome::Deduplicated => (StatusCode::OK, Json(json!({ "status": "deduplicated" }))).into_response(),
    })
}

fn timed_value_json(v: &TimedValue) -> Value {
    let mut obj = json!({
        "value": encode_scalar(&v.value),
        "timestamp": v.timestamp.to_iso(),
    });
    if let Some(e) = v.expiry {
        obj["expiry"] = Value::String(e.to_iso());
    }
    obj
}

#[derive(Debug, Deserialize)]
struct HistoryQuery {
    from: Option<String>,
    to: Option<String>,
    at: Option<String>,
}

async fn history(
    State(engine): Shared,
    Path((qname, iid, field)): Path<(String, String, String)>,
    Query(q): Query<HistoryQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let values = engine.history(
        &qname,
        &iid,
        &field,
        &principals(&headers),
        HistoryWindow {
            from: parse_time("from", q.from.as_deref())?,
            to: parse_time("to", q.to.as_deref())?,
            at: parse_time("at", q.at.as_deref())?,
        },
    )?;
    let values: Vec<Value> = values.iter().map(timed_value_json).collect();
    Ok(Json(json!({ "values": values })).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForecastBody {
    source: String,
    points: Vec<PointBody>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointBody {
    t: String,
    v: Value,
}

async fn add_forecast(
    State(engine): Shared,
    Path((qname, iid, field)): Path<(String, String, String)>,
    body: Bytes,
) -> ApiResult<Response> {
    let body: ForecastBody =
        serde_json::from_value(parse_json(&body)?).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let points = body
        .points
        .into_iter()
        .map(|p| Ok((parse_time("t", Some(&p.t))?.expect("present"), p.v)))
        .collect::<ApiResult<Vec<_>>>()?;
    engine.add_forecast(&qname, &iid, &field, &body.source, &points)?;
    Ok((StatusCode::CREATED, Json(json!({ "status": "stored" }))).into_response())
}

fn forecast_json(f: &Forecast) -> Value {
    let points: Vec<Value> = f
        .points
        .iter()
        .map(|(t, v)| json!({ "t": t.to_iso(), "v": encode_scalar(v) }))
        .collect();
    json!({ "source": f.source_id, "createdAt": f.created_at.to_iso(), "points": points })
}

#[derive(Debug, Deserialize)]
struct ForecastQuery {
    source: Option<String>,
}

async fn get_forecasts(
    State(engine): Shared,
    Path((qname, iid, field)): Path<(String, String, String)>,
    Query(q): Query<ForecastQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let forecasts = engine.forecasts(&qname, &iid, &field, &principals(&headers), q.source.as_deref())?;
    let forecasts: Vec<Value> = forecasts.iter().map(forecast_json).collect();
    Ok(Json(json!({ "forecasts": forecasts })).into_response())
}

async fn purge(State(engine): Shared) -> ApiResult<Response> {
    let deleted = engine.purge()?;
    Ok(Json(json!({ "deleted": deleted })).into_response())
}

async fn components(State(engine): Shared) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], engine.dump_components()).into_response()
}
