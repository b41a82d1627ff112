//! JSON-over-HTTP query and control API.

use std::collections::HashMap;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde_json::{json, Map, Value};

use crate::edge::IrrigationPolicy;
use crate::telemetry::{OverrideState, TelemetryRecord};

use super::{ServiceError, SharedService};

type Params = Query<HashMap<String, String>>;

pub fn router(svc: SharedService) -> Router {
    Router::new()
        .route("/api/latest", get(latest))
        .route("/api/history", get(history))
        .route("/api/policy/{crop}", get(get_policy).put(put_policy))
        .route("/api/override", post(post_override))
        .route("/api/model", get(model))
        .route("/api/recommendation", get(recommendation))
        .with_state(svc)
}

struct ApiError(StatusCode, String);

impl ApiError {
    fn bad(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::BAD_REQUEST, msg.into())
    }

    fn not_found(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::NOT_FOUND, msg.into())
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::Invalid(_) => StatusCode::BAD_REQUEST,
            ServiceError::UnknownNode(_) | ServiceError::UnknownCrop(_) | ServiceError::NoTelemetry => {
                StatusCode::NOT_FOUND
            }
            ServiceError::Stale(_) | ServiceError::Recommend(_) => StatusCode::CONFLICT,
            ServiceError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, json_body(json!({ "error": self.1 }).to_string())).into_response()
    }
}

fn json_body(body: String) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], body)
}

fn required<'a>(q: &'a HashMap<String, String>, key: &str) -> Result<&'a str, ApiError> {
    q.get(key)
        .map(String::as_str)
        .ok_or_else(|| ApiError::bad(format!("{key}: required")))
}

fn opt_ms(q: &HashMap<String, String>, key: &str) -> Result<Option<u64>, ApiError> {
    q.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| ApiError::bad(format!("{key}: expected milliseconds")))
        })
        .transpose()
}

fn parse_object(body: &[u8]) -> Result<Map<String, Value>, ApiError> {
    match serde_json::from_slice(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ApiError::bad("body: expected a JSON object")),
        Err(e) => Err(ApiError::bad(format!("body: {e}"))),
    }
}

async fn latest(State(svc): State<SharedService>, Query(q): Params) -> Result<impl IntoResponse, ApiError> {
    let node = required(&q, "node")?;
    let svc = svc.read().unwrap();
    let rec = svc
        .latest(node)
        .ok_or_else(|| ApiError::not_found(format!("node: no records for {node}")))?;
    Ok(json_body(rec.to_line()))
}

async fn history(State(svc): State<SharedService>, Query(q): Params) -> Result<impl IntoResponse, ApiError> {
    let node = required(&q, "node")?;
    let (from, to) = (opt_ms(&q, "from")?, opt_ms(&q, "to")?);
    let svc = svc.read().unwrap();
    Ok(json_body(records_json(svc.history(node, from, to))))
}

fn records_json(recs: &[TelemetryRecord]) -> String {
    let mut out = String::from("[");
    for (i, r) in recs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        r.write_json(&mut out);
    }
    out.push(']');
    out
}

async fn get_policy(State(svc): State<SharedService>, Path(crop): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let pol = svc
        .read()
        .unwrap()
        .policy(&crop)
        .ok_or_else(|| ApiError::not_found(format!("crop: no policy for {crop}")))?;
    Ok(json_body(serde_json::to_string(&pol).expect("policy serializes")))
}

async fn put_policy(
    State(svc): State<SharedService>,
    Path(crop): Path<String>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let obj = parse_object(&body)?;
    let pol: IrrigationPolicy =
        serde_json::from_value(Value::Object(obj)).map_err(|e| ApiError::bad(format!("body: {e}")))?;
    let stored = svc.write().unwrap().put_policy(&crop, pol)?;
    Ok(json_body(serde_json::to_string(&stored).expect("policy serializes")))
}

async fn post_override(State(svc): State<SharedService>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let obj = parse_object(&body)?;
    let node = obj
        .get("node")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::bad("node: expected a string"))?;
    let state: OverrideState = obj
        .get("state")
        .cloned()
        .and_then(|v| serde_json::from_value(v).ok())
        .ok_or_else(|| ApiError::bad("state: expected on, off or clear"))?;
    let ttl_s = match obj.get("ttl_s") {
        None if state == OverrideState::Clear => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ApiError::bad("ttl_s: expected whole seconds"))?,
        None => return Err(ApiError::bad("ttl_s: required")),
    };
    let d = svc.write().unwrap().apply_override(node, state, ttl_s)?;
    let body = json!({ "node": node, "state": d.state, "ttl_s": d.ttl_s });
    Ok((StatusCode::ACCEPTED, json_body(body.to_string())))
}

async fn model(State(svc): State<SharedService>) -> impl IntoResponse {
    let m = *svc.read().unwrap().model();
    json_body(json!({ "w": m.w, "n_samples": m.n_samples }).to_string())
}

async fn recommendation(State(svc): State<SharedService>, Query(q): Params) -> Result<impl IntoResponse, ApiError> {
    let crop = required(&q, "crop")?;
    let rec = svc
        .read()
        .unwrap()
        .recommendation(crop, q.get("node").map(String::as_str))?;
    Ok(json_body(
        serde_json::to_string(&rec).expect("recommendation serializes"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::service::{Clock, DecisionService, ServiceConfig};
    use crate::telemetry::sample_record;
    use axum::body::Body;
    use axum::http::Request;
    use tower::ServiceExt;

    fn app() -> (Router, SharedService) {
        let svc = DecisionService::in_memory(ServiceConfig {
            clock: Clock::Log,
            ..ServiceConfig::default()
        })
        .shared();
        (router(svc.clone()), svc)
    }

    async fn call(app: &Router, method: &str, uri: &str, body: &str) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .body(Body::from(body.to_string()))
            .unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    #[tokio::test]
    async fn latest_and_history() {
        let (app, svc) = app();
        assert_eq!(
            call(&app, "GET", "/api/latest?node=n1", "").await.0,
            StatusCode::NOT_FOUND
        );
        assert_eq!(call(&app, "GET", "/api/latest", "").await.0, StatusCode::BAD_REQUEST);
        let rec = sample_record();
        svc.write().unwrap().ingest(rec.clone()).unwrap();
        let (s, v) = call(&app, "GET", "/api/latest?node=n1", "").await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(TelemetryRecord::from_object(v.as_object().unwrap()).unwrap(), rec);
        let (_, v) = call(&app, "GET", "/api/history?node=n1&from=0", "").await;
        assert_eq!(v.as_array().unwrap().len(), 1);
        assert_eq!(
            call(&app, "GET", "/api/history?node=n1&from=x", "").await.0,
            StatusCode::BAD_REQUEST
        );
    }

    #[tokio::test]
    async fn policy_round_trip() {
        let (app, _) = app();
        assert_eq!(
            call(&app, "GET", "/api/policy/tomato", "").await.0,
            StatusCode::NOT_FOUND
        );
        let (s, v) = call(&app, "PUT", "/api/policy/tomato", r#"{"m_on_pct":60,"m_off_pct":35}"#).await;
        assert_eq!(s, StatusCode::BAD_REQUEST);
        assert!(v["error"].as_str().unwrap().starts_with("m_on_pct"));
        let (s, _) = call(&app, "PUT", "/api/policy/tomato", r#"{"m_on_pct":35,"m_off_pct":60}"#).await;
        assert_eq!(s, StatusCode::OK);
        let (_, v) = call(&app, "GET", "/api/policy/tomato", "").await;
        assert_eq!(
            (v["m_on_pct"].as_f64(), v["m_off_pct"].as_f64()),
            (Some(35.0), Some(60.0))
        );
        assert_eq!(v["crop_id"], "tomato");
    }

    #[tokio::test]
    async fn override_validation() {
        let (app, svc) = app();
        let (s, _) = call(
            &app,
            "POST",
            "/api/override",
            r#"{"node":"n1","state":"off","ttl_s":600}"#,
        )
        .await;
        assert_eq!(s, StatusCode::NOT_FOUND);
        svc.write().unwrap().ingest(sample_record()).unwrap();
        for bad in [
            r#"{"node":"n1","state":"on","ttl_s":0}"#,
            r#"{"node":"n1","state":"on","ttl_s":86401}"#,
            r#"{"node":"n1","state":"on","ttl_s":1.5}"#,
            r#"{"node":"n1","state":"sideways","ttl_s":5}"#,
            r#"{"state":"on","ttl_s":5}"#,
            "not json",
        ] {
            assert_eq!(
                call(&app, "POST", "/api/override", bad).await.0,
                StatusCode::BAD_REQUEST,
                "{bad}"
            );
        }
        let (s, v) = call(
            &app,
            "POST",
            "/api/override",
            r#"{"node":"n1","state":"off","ttl_s":600}"#,
        )
        .await;
        assert_eq!(s, StatusCode::ACCEPTED);
        assert_eq!(v["state"], "off");
        let (s, _) = call(&app, "POST", "/api/override", r#"{"node":"n1","state":"clear"}"#).await;
        assert_eq!(s, StatusCode::ACCEPTED);
    }

    #[tokio::test]
    async fn model_and_recommendation() {
        let (app, svc) = app();
        let (_, v) = call(&app, "GET", "/api/model", "").await;
        assert_eq!(v, json!({ "w": [0.0, 0.0, 0.0, 0.0], "n_samples": 0 }));
        assert_eq!(
            call(&app, "GET", "/api/recommendation?crop=default", "").await.0,
            StatusCode::NOT_FOUND
        );
        svc.write().unwrap().ingest(sample_record()).unwrap();
        let (s, v) = call(&app, "GET", "/api/recommendation?crop=default", "").await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(v["next_irrigation_eta_s"], Value::Null);
        assert_eq!(v["suggested_duration_s"].as_f64(), Some(250.0));
    }
}
