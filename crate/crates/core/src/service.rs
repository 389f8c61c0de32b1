//! JSON-over-HTTP front end to a single shared [`Session`].
//!
//! Every response carries the revision it observed. Failures use the
//! envelope `{"error": CODE, "message": text, "detail": optional}`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::eval::{AggFn, AggregationSpec, MaterializedRow};
use crate::io::{self, CubeManifest, FactoredQueryDoc, QueryDoc, StoreDoc};
use crate::query::Query;
use crate::scenario::{Scenario, ScenarioStore};
use crate::session::Session;
use crate::text::format_number;

pub type SharedSession = Arc<RwLock<Session>>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Option<Value>,
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownScenario(_) | Error::MissingKey(_) => StatusCode::NOT_FOUND,
            Error::IndexOutOfRange { .. } => StatusCode::NOT_FOUND,
            _ => StatusCode::BAD_REQUEST,
        };
        let detail = match &e {
            Error::QueryParse { position, .. } => Some(json!({ "position": position })),
            Error::MeasureParse { line, column, .. } => Some(json!({ "line": line, "column": column })),
            _ => None,
        };
        ApiError {
            status,
            code: e.code(),
            message: e.to_string(),
            detail,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(d) = self.detail {
            body["detail"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T = Json<Value>> = std::result::Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| Error::MalformedDocument(e.to_string()).into())
}

fn read(state: &SharedSession) -> RwLockReadGuard<'_, Session> {
    state.read().unwrap_or_else(|p| p.into_inner())
}

fn write(state: &SharedSession) -> RwLockWriteGuard<'_, Session> {
    state.write().unwrap_or_else(|p| p.into_inner())
}

/// Presentation rounding shared with the CLI.
fn number(x: f64) -> Value {
    format_number(x)
        .parse::<f64>()
        .ok()
        .and_then(serde_json::Number::from_f64)
        .map_or(Value::Null, Value::Number)
}

fn opt_number(x: Option<f64>) -> Value {
    x.map_or(Value::Null, number)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum QueryInput {
    Text(String),
    Doc(QueryDoc),
}

impl QueryInput {
    fn resolve(&self, store: &ScenarioStore) -> crate::Result<Query> {
        match self {
            QueryInput::Text(t) => crate::text::parse_query(t, store),
            QueryInput::Doc(d) => io::query_from_doc(store, d),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecInput {
    Text(String),
    Parts { function: String, measures: Vec<String> },
}

impl SpecInput {
    fn resolve(&self, store: &ScenarioStore) -> crate::Result<AggregationSpec> {
        let schema = store.schema();
        match self {
            SpecInput::Text(t) => AggregationSpec::parse(t, schema),
            SpecInput::Parts { function, measures } => {
                let f: AggFn = function.parse()?;
                let idx = measures
                    .iter()
                    .map(|m| schema.measure_index(m).ok_or_else(|| Error::UnknownMeasure(m.clone())))
                    .collect::<crate::Result<Vec<_>>>()?;
                AggregationSpec::new(f, idx, schema)
            }
        }
    }
}

fn scenario_view(store: &ScenarioStore, s: &Scenario) -> Value {
    let entries: Vec<Value> = s
        .entries()
        .iter()
        .enumerate()
        .map(|(index, (key, values))| {
            let values: Vec<Value> = values
                .iter()
                .map(|v| {
                    json!({
                        "query": io::query_to_doc(store, &v.query),
                        "text": store.display_query(&v.query),
                        "factors": factors_json(store, v.factors.as_slice()),
                    })
                })
                .collect();
            json!({
                "index": index,
                "key": io::query_to_doc(store, key),
                "text": store.display_query(key),
                "values": values,
            })
        })
        .collect();
    json!({
        "value": s.name(),
        "dimension": store.schema().dimensions()[s.dimension()].name(),
        "entries": entries,
    })
}

fn factors_json(store: &ScenarioStore, f: &[f64]) -> Value {
    Value::Object(
        store
            .schema()
            .measures()
            .iter()
            .zip(f)
            .map(|(m, &x)| (m.clone(), number(x)))
            .collect(),
    )
}

fn lookup<'s>(store: &'s ScenarioStore, value: &str) -> ApiResult<&'s Scenario> {
    store
        .scenario_by_name(value)
        .ok_or_else(|| Error::UnknownScenario(value.to_string()).into())
}

#[derive(Deserialize)]
struct CubeRequest {
    manifest: CubeManifest,
    csv: String,
}

async fn put_cube(State(st): State<SharedSession>, body: Bytes) -> ApiResult {
    let req: CubeRequest = parse_body(&body)?;
    let cube = io::load_cube(&req.csv, &req.manifest)?;
    let rows = cube.len();
    let mut s = write(&st);
    s.load_cube(cube);
    Ok(Json(json!({
        "rowCount": rows,
        "schema": schema_json(&s)?,
        "revision": s.revision(),
    })))
}

fn schema_json(s: &Session) -> ApiResult<Value> {
    let store = s.store()?;
    let schema = store.schema();
    let dims: Vec<Value> = schema
        .dimensions()
        .iter()
        .enumerate()
        .map(|(d, dim)| {
            let mut values: Vec<Value> = dim
                .values()
                .iter()
                .map(|&v| json!({ "name": schema.real_name(v), "scenario": false }))
                .collect();
            values.extend(
                store
                    .scenarios()
                    .filter(|sc| sc.dimension() == d)
                    .map(|sc| json!({ "name": sc.name(), "scenario": true })),
            );
            json!({ "name": dim.name(), "values": values })
        })
        .collect();
    Ok(json!({ "dimensions": dims, "measures": schema.measures() }))
}

async fn get_schema(State(st): State<SharedSession>) -> ApiResult {
    let s = read(&st);
    let mut out = schema_json(&s)?;
    out["revision"] = json!(s.revision());
    Ok(Json(out))
}

async fn list_scenarios(State(st): State<SharedSession>) -> ApiResult {
    let s = read(&st);
    let store = s.store()?;
    let list: Vec<Value> = store.scenarios().map(|sc| scenario_view(store, sc)).collect();
    Ok(Json(json!({ "scenarios": list, "revision": s.revision() })))
}

#[derive(Deserialize)]
struct CreateScenario {
    value: String,
    dimension: String,
}

async fn create_scenario(State(st): State<SharedSession>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: CreateScenario = parse_body(&body)?;
    let mut s = write(&st);
    s.create_scenario(&req.value, &req.dimension)?;
    Ok((StatusCode::CREATED, Json(scenario_response(&s, &req.value)?)))
}

fn scenario_response(s: &Session, value: &str) -> ApiResult<Value> {
    let store = s.store()?;
    let mut view = scenario_view(store, lookup(store, value)?);
    view["revision"] = json!(s.revision());
    Ok(view)
}

async fn get_scenario(State(st): State<SharedSession>, Path(v): Path<String>) -> ApiResult {
    Ok(Json(scenario_response(&read(&st), &v)?))
}

async fn delete_scenario(State(st): State<SharedSession>, Path(v): Path<String>) -> ApiResult {
    let mut s = write(&st);
    s.delete_scenario(&v)?;
    Ok(Json(json!({ "deleted": v, "revision": s.revision() })))
}

#[derive(Deserialize)]
struct AddQuery {
    query: QueryInput,
    #[serde(default)]
    factors: IndexMap<String, f64>,
}

async fn add_query(
    State(st): State<SharedSession>,
    Path(v): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: AddQuery = parse_body(&body)?;
    let mut s = write(&st);
    let q = req.query.resolve(s.store()?)?;
    let pairs: Vec<(&str, f64)> = req.factors.iter().map(|(k, &f)| (k.as_str(), f)).collect();
    let added = s.associate(&v, &q, &pairs)?;
    let store = s.store()?;
    let added: Vec<Value> = added
        .iter()
        .map(|(key, values)| {
            json!({
                "key": io::query_to_doc(store, key),
                "text": store.display_query(key),
                "values": values
                    .iter()
                    .map(|fq| io::factored_query_to_doc(store, fq))
                    .collect::<Vec<FactoredQueryDoc>>(),
            })
        })
        .collect();
    let mut out = scenario_response(&s, &v)?;
    out["added"] = Value::Array(added);
    Ok((StatusCode::CREATED, Json(out)))
}

async fn delete_entry(State(st): State<SharedSession>, Path((v, index)): Path<(String, usize)>) -> ApiResult {
    let mut s = write(&st);
    s.remove_entry(&v, index)?;
    Ok(Json(scenario_response(&s, &v)?))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct PatchFactors {
    #[serde(default)]
    value_index: usize,
    factors: IndexMap<String, f64>,
}

async fn patch_entry(
    State(st): State<SharedSession>,
    Path((v, index)): Path<(String, usize)>,
    body: Bytes,
) -> ApiResult {
    let req: PatchFactors = parse_body(&body)?;
    let mut s = write(&st);
    let pairs: Vec<(&str, f64)> = req.factors.iter().map(|(k, &f)| (k.as_str(), f)).collect();
    s.update_factors(&v, index, req.value_index, &pairs)?;
    Ok(Json(scenario_response(&s, &v)?))
}

#[derive(Deserialize)]
struct EvaluateRequest {
    query: QueryInput,
    specs: Vec<SpecInput>,
}

async fn evaluate(State(st): State<SharedSession>, body: Bytes) -> ApiResult {
    let req: EvaluateRequest = parse_body(&body)?;
    let s = read(&st);
    let store = s.store()?;
    let q = req.query.resolve(store)?;
    let specs = req
        .specs
        .iter()
        .map(|sp| sp.resolve(store))
        .collect::<crate::Result<Vec<_>>>()?;
    let out = s.evaluate(&q, &specs)?;
    Ok(Json(json!({
        "results": out.values.iter().map(|&v| opt_number(v)).collect::<Vec<_>>(),
        "rowCount": out.row_count,
        "revision": s.revision(),
    })))
}

#[derive(Deserialize)]
struct MaterializeRequest {
    query: QueryInput,
    limit: Option<usize>,
}

fn row_json(store: &ScenarioStore, row: &MaterializedRow<'_>) -> Value {
    let schema = store.schema();
    let coords: serde_json::Map<String, Value> = schema
        .dimensions()
        .iter()
        .zip(row.coords())
        .map(|(d, &id)| (d.name().to_string(), json!(store.value_name(id))))
        .collect();
    let mut out = json!({
        "coords": coords,
        "measures": factors_json(store, row.measures()),
        "simulated": row.is_simulated(),
    });
    if let Some(p) = row.provenance() {
        out["source"] = json!({
            "scenario": store.value_name(p.scenario),
            "entryIndex": p.key_index,
            "valueIndex": p.value_index,
            "row": p.source_row,
        });
    }
    out
}

async fn materialize(State(st): State<SharedSession>, body: Bytes) -> ApiResult {
    let req: MaterializeRequest = parse_body(&body)?;
    let s = read(&st);
    let store = s.store()?;
    let q = req.query.resolve(store)?;
    let rows = s.materialize(&q)?;
    let shown = req.limit.unwrap_or(rows.len()).min(rows.len());
    Ok(Json(json!({
        "rows": rows[..shown].iter().map(|r| row_json(store, r)).collect::<Vec<_>>(),
        "total": rows.len(),
        "revision": s.revision(),
    })))
}

#[derive(Deserialize)]
struct CompareRequest {
    query1: QueryInput,
    query2: QueryInput,
    spec: SpecInput,
}

async fn compare(State(st): State<SharedSession>, body: Bytes) -> ApiResult {
    let req: CompareRequest = parse_body(&body)?;
    let s = read(&st);
    let store = s.store()?;
    let (q1, q2) = (req.query1.resolve(store)?, req.query2.resolve(store)?);
    let spec = req.spec.resolve(store)?;
    let c = s.compare(&q1, &q2, &spec)?;
    Ok(Json(json!({
        "value1": opt_number(c.value1),
        "value2": opt_number(c.value2),
        "difference": opt_number(c.difference),
        "ratio": opt_number(c.ratio),
        "revision": s.revision(),
    })))
}

async fn get_store(State(st): State<SharedSession>) -> ApiResult {
    let s = read(&st);
    let doc = io::store_to_doc(s.store()?);
    Ok(Json(serde_json::to_value(doc).expect("plain data")))
}

#[derive(Serialize)]
struct StoreLoaded {
    scenarios: usize,
    revision: u64,
}

async fn put_store(State(st): State<SharedSession>, body: Bytes) -> ApiResult<Json<StoreLoaded>> {
    let _: StoreDoc = parse_body(&body)?;
    let text = std::str::from_utf8(&body).map_err(|e| Error::MalformedDocument(e.to_string()))?;
    let mut s = write(&st);
    s.load_store(text)?;
    Ok(Json(StoreLoaded {
        scenarios: s.store()?.len(),
        revision: s.revision(),
    }))
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: "NOT_FOUND",
        message: "no such endpoint".into(),
        detail: None,
    }
}

/// Routes under `/api`, plus static files from `static_dir` for anything
/// else when given.
pub fn router(state: SharedSession, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/cube", axum::routing::put(put_cube))
        .route("/api/schema", get(get_schema))
        .route("/api/scenarios", get(list_scenarios).post(create_scenario))
        .route("/api/scenarios/{v}", get(get_scenario).delete(delete_scenario))
        .route("/api/scenarios/{v}/queries", post(add_query))
        .route(
            "/api/scenarios/{v}/queries/{index}",
            patch(patch_entry).delete(delete_entry),
        )
        .route("/api/evaluate", post(evaluate))
        .route("/api/materialize", post(materialize))
        .route("/api/compare", post(compare))
        .route("/api/store", get(get_store).put(put_store))
        .route("/api/{*rest}", axum::routing::any(not_found))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub listen: SocketAddr,
    pub static_dir: Option<PathBuf>,
}

/// Serves until ctrl-c.
pub async fn serve(config: ServeConfig, session: Session) -> std::io::Result<()> {
    let app = router(Arc::new(RwLock::new(session)), config.static_dir);
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
