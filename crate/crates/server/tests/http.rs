use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use gestproxy_core::agent::{Reaction, Script, Step};
use gestproxy_core::api::{AgentResponse, ApiError, CreateSessionResponse, Health, ReplayResponse, SessionInfo, TimelineResponse};
use gestproxy_core::config::{BudgetConfig, EngineConfig, InterventionConfig, SwipeStrategy, TapStrategy};
use gestproxy_core::event::{PointerSample, Screen, SessionEvent};
use gestproxy_core::protocol::ServerMessage;
use gestproxy_core::replay::replay;
use gestproxy_core::trace::{to_ndjson, EngineEvent, TraceRecord};
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = gestproxy_server::router().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn parse<T: DeserializeOwned>(bytes: &[u8]) -> T {
    serde_json::from_slice(bytes).unwrap()
}

fn config() -> EngineConfig {
    EngineConfig {
        intervention: InterventionConfig::field().with_strategies(TapStrategy::Delay, SwipeStrategy::Reverse),
        budget: BudgetConfig { target_apps: ["feed".to_string()].into(), daily_limit: 0, day_offset_ms: 0 },
        ..Default::default()
    }
}

fn trace() -> String {
    to_ndjson(&[
        TraceRecord::from(SessionEvent::app_enter(0, "feed")),
        PointerSample::down(0, 100.0, 200.0, 1_000).into(),
        PointerSample::up(0, 100.0, 200.0, 1_060).into(),
        SessionEvent::app_exit(5_000, "feed").into(),
    ])
}

#[tokio::test]
async fn health_reports_version() {
    let (status, body) = call(Method::GET, "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    let h: Health = parse(&body);
    assert_eq!(h.status, "ok");
    assert_eq!(h.version, env!("CARGO_PKG_VERSION"));
}

#[tokio::test]
async fn replay_matches_library_replay() {
    let (status, body) =
        call(Method::POST, "/v1/replay", Some(json!({ "trace": trace(), "config": config(), "screen": Screen::default() }))).await;
    assert_eq!(status, StatusCode::OK);
    let resp: ReplayResponse = parse(&body);
    assert_eq!(resp.log, replay(&trace(), &config(), Screen::default()).unwrap());
}

#[tokio::test]
async fn malformed_trace_reports_its_line() {
    let bad = trace().replacen("\"t\":1060", "\"t\":\"late\"", 1);
    let (status, body) = call(Method::POST, "/v1/replay", Some(json!({ "trace": bad, "config": config() }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let err: ApiError = parse(&body);
    assert_eq!(err.line, Some(3), "{err:?}");
}

#[tokio::test]
async fn malformed_json_body_is_a_bad_request() {
    let (status, body) = call(Method::POST, "/v1/stats", Some(json!({ "log": "" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let err: ApiError = parse(&body);
    assert!(err.message.contains("base_days"), "{}", err.message);
}

#[tokio::test]
async fn agent_trace_replays_to_its_log() {
    let script = Script {
        apps: ["feed".to_string()].into(),
        start: 0,
        steps: vec![Step::Open { app: "feed".into() }, Step::Swipes { count: 10, interval_ms: 700 }],
        on_blocked: Reaction::Leave,
        on_encounter: Reaction::Continue,
        abandon_latency_ms: None,
    };
    let (status, body) = call(Method::POST, "/v1/agent", Some(json!({ "script": script, "config": config(), "seed": 3 }))).await;
    assert_eq!(status, StatusCode::OK);
    let resp: AgentResponse = parse(&body);
    assert_eq!(replay(&resp.trace, &config(), Screen::default()).unwrap(), resp.log);
}

#[tokio::test]
async fn stats_and_timeline_read_a_replayed_log() {
    let log = replay(&trace(), &config(), Screen::default()).unwrap();
    let (status, body) = call(
        Method::POST,
        "/v1/stats",
        Some(json!({ "log": log, "base_days": "0..0", "period_days": "0..0", "apps": ["feed"] })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let stats: Value = parse(&body);
    assert_eq!(stats["period"]["mean_daily_openings"], json!(1.0));
    assert_eq!(stats["acceptance"]["encounters"], json!(1));

    let (status, body) = call(Method::POST, "/v1/timeline", Some(json!({ "log": log, "day": 0 }))).await;
    assert_eq!(status, StatusCode::OK);
    let t: TimelineResponse = parse(&body);
    assert_eq!(t.document.spans.len(), 1);
    assert_eq!(t.document.markers.len(), 1);
    assert!(t.html.contains("timeline-data"));
}

#[tokio::test]
async fn session_lifecycle_over_ndjson_batches() {
    let app = gestproxy_server::router();
    let send = |req: Request<Body>| {
        let app = app.clone();
        async move {
            let resp = app.oneshot(req).await.unwrap();
            (resp.status(), resp.into_body().collect().await.unwrap().to_bytes().to_vec())
        }
    };
    let json_req = |method, uri: &str, body: String| {
        Request::builder().method(method).uri(uri).header(header::CONTENT_TYPE, "application/json").body(Body::from(body)).unwrap()
    };

    let (status, body) = send(json_req(Method::POST, "/v1/sessions", json!({ "config": config() }).to_string())).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = parse::<CreateSessionResponse>(&body).session_id;

    let lines = [
        json!({ "type": "hello", "client_time": 10_000 }),
        json!({ "type": "session", "event": SessionEvent::app_enter(10_000, "feed") }),
        json!({ "type": "pointers", "samples": [PointerSample::down(0, 50.0, 60.0, 11_000), PointerSample::up(0, 50.0, 60.0, 11_040)] }),
        json!({ "type": "tick", "t": 13_000 }),
    ];
    let batch: String = lines.iter().map(|l| l.to_string() + "\n").collect();
    let (status, body) = send(json_req(Method::POST, &format!("/v1/sessions/{id}/messages"), batch)).await;
    assert_eq!(status, StatusCode::OK);
    let replies: Vec<ServerMessage> =
        String::from_utf8(body).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(matches!(&replies[0], ServerMessage::Welcome { clock_offset: -10_000, .. }));
    let dispatched: Vec<_> = replies
        .iter()
        .filter_map(|m| match m {
            ServerMessage::Log { record } => match record.as_engine() {
                Some(EngineEvent::Dispatched { virtual_gesture, .. }) => Some(virtual_gesture.dispatch_at),
                _ => None,
            },
            _ => None,
        })
        .collect();
    // Client 11_040 is engine 1_040; the first tap runs at zero intensity.
    assert_eq!(dispatched, vec![1_040]);

    let (status, body) = send(Request::get(format!("/v1/sessions/{id}")).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    let info: SessionInfo = parse(&body);
    assert_eq!((info.engine_time, info.trace_records), (3_000, 3));

    let (status, _) = send(Request::delete(format!("/v1/sessions/{id}")).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = send(Request::get(format!("/v1/sessions/{id}")).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
