//! Minimal two-party detection service: clients submit only subset-hash
//! sets, the service indexes them and answers similarity queries. The wire
//! schema has no field that could carry a reference title, an author, or
//! any other cleartext bibliographic data, and unknown fields are
//! rejected, so content blindness is enforced at the protocol boundary.

use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use pbc_core::indexstore::InvertedIndex;
use pbc_core::psihash::{DocHashSet, SubsetHash};
use pbc_core::similarity::{
    format_score, rank_candidates, PairResult, Recovered, RecoveryMode,
};

/// Shared service state: one index per instance, one k, one hash function.
pub struct AppState {
    index: RwLock<InvertedIndex>,
}

impl AppState {
    pub fn new(index: InvertedIndex) -> Arc<Self> {
        Arc::new(AppState {
            index: RwLock::new(index),
        })
    }
}

/// A document's disclosed hash set, hex-encoded on the wire. This is the
/// body of both `/submit` and `/query`; any additional field is a schema
/// violation and rejected.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    pub doc_id: String,
    pub k: usize,
    pub hash_fn_id: String,
    pub hashes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubmitAck {
    pub n_docs: usize,
    pub n_hashes: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Candidate {
    pub doc_id: String,
    pub intersection: u64,
    pub s_pbc: String,
    pub s_pbc_num: u64,
    pub s_pbc_den: u64,
    pub s_bc_recovered: Option<String>,
    pub collision_suspected: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryResponse {
    pub index_k: usize,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsResponse {
    pub k: usize,
    pub hash_fn_id: String,
    pub n_docs: usize,
    pub n_hashes: u64,
    pub n_entries: usize,
    pub ratio_in_1: Option<f64>,
    pub ratio_in_2: Option<f64>,
    pub ratio_in_3: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

enum ApiError {
    BadRequest(String),
    ConfigMismatch(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::ConfigMismatch(m) => (StatusCode::CONFLICT, m),
        };
        (status, Json(ErrorBody { error: msg })).into_response()
    }
}

impl From<pbc_core::Error> for ApiError {
    fn from(e: pbc_core::Error) -> Self {
        use pbc_core::Error::*;
        match e {
            MismatchedK { .. } | MismatchedHashFn { .. } | ConfigMismatch(_) => {
                ApiError::ConfigMismatch(e.to_string())
            }
            other => ApiError::BadRequest(other.to_string()),
        }
    }
}

fn decode_request(req: &SubmitRequest, index: &InvertedIndex) -> Result<DocHashSet, ApiError> {
    if req.k != index.k() {
        return Err(ApiError::ConfigMismatch(format!(
            "service is configured for k={}, request has k={}",
            index.k(),
            req.k
        )));
    }
    if req.hash_fn_id != index.hash_fn_id() {
        return Err(ApiError::ConfigMismatch(format!(
            "service is configured for hash_fn_id={:?}, request has {:?}",
            index.hash_fn_id(),
            req.hash_fn_id
        )));
    }
    if req.doc_id.is_empty() {
        return Err(ApiError::BadRequest("doc_id must not be empty".into()));
    }
    let hashes = req
        .hashes
        .iter()
        .map(|h| SubsetHash::from_hex(h))
        .collect::<pbc_core::Result<Vec<_>>>()?;
    Ok(DocHashSet::from_hashes(req.doc_id.clone(), req.k, hashes))
}

fn reject(rejection: JsonRejection) -> ApiError {
    ApiError::BadRequest(rejection.body_text())
}

async fn handle_submit(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SubmitRequest>, JsonRejection>,
) -> Result<Json<SubmitAck>, ApiError> {
    let Json(req) = body.map_err(reject)?;
    let mut index = state.index.write().expect("index lock poisoned");
    let set = decode_request(&req, &index)?;
    index.insert_doc(&set).map_err(ApiError::from)?;
    Ok(Json(SubmitAck {
        n_docs: index.n_docs(),
        n_hashes: index.n_postings(),
    }))
}

/// Candidates as the library ranks them, rendered for the wire.
pub fn candidates_from_results(results: &[PairResult]) -> Vec<Candidate> {
    results
        .iter()
        .map(|r| {
            let (bc, collided) = match &r.s_bc_recovered {
                Recovered::Score(s) => (Some(format_score(*s, 12)), false),
                Recovered::CollisionSuspected => (None, true),
            };
            Candidate {
                doc_id: r.doc_id_b.clone(),
                intersection: r.intersection_hashes,
                s_pbc: format_score(r.s_pbc, 12),
                s_pbc_num: *r.s_pbc.numer(),
                s_pbc_den: *r.s_pbc.denom(),
                s_bc_recovered: bc,
                collision_suspected: collided,
            }
        })
        .collect()
}

async fn handle_query(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SubmitRequest>, JsonRejection>,
) -> Result<Json<QueryResponse>, ApiError> {
    let Json(req) = body.map_err(reject)?;
    let index = state.index.read().expect("index lock poisoned");
    let query = decode_request(&req, &index)?;
    let per_doc = index.intersect(&query).map_err(ApiError::from)?;
    let ranked = rank_candidates(&query, &per_doc, RecoveryMode::Strict);
    Ok(Json(QueryResponse {
        index_k: index.k(),
        candidates: candidates_from_results(&ranked),
    }))
}

async fn handle_stats(State(state): State<Arc<AppState>>) -> Json<StatsResponse> {
    let index = state.index.read().expect("index lock poisoned");
    let hist = index.occurrence_histogram().ok();
    Json(StatsResponse {
        k: index.k(),
        hash_fn_id: index.hash_fn_id().to_string(),
        n_docs: index.n_docs(),
        n_hashes: index.n_postings(),
        n_entries: index.n_entries(),
        ratio_in_1: hist.map(|h| h.ratio_in_1),
        ratio_in_2: hist.map(|h| h.ratio_in_2),
        ratio_in_3: hist.map(|h| h.ratio_in_3),
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/submit", post(handle_submit))
        .route("/query", post(handle_query))
        .route("/stats", get(handle_stats))
        .with_state(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(index: InvertedIndex, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let app = router(AppState::new(index));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
