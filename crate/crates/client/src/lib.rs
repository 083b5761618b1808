//! Thin async client for the gestproxy HTTP service.

use gestproxy_core::analytics::UsageStats;
use gestproxy_core::api::{
    AgentRequest, AgentResponse, ApiError, CreateSessionRequest, CreateSessionResponse, Health, ReplayRequest,
    ReplayResponse, SessionInfo, StatsRequest, TimelineRequest, TimelineResponse,
};
use gestproxy_core::protocol::{ClientMessage, ServerMessage};
use reqwest::{Method, RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    /// The service rejected the request; the body carries the diagnostic.
    #[error("{error}")]
    Api { status: StatusCode, error: ApiError },
    #[error("bad response: {0}")]
    Decode(#[from] serde_json::Error),
}

impl ClientError {
    /// The service-side diagnostic, if the service answered at all.
    pub fn api_error(&self) -> Option<&ApiError> {
        match self {
            ClientError::Api { error, .. } => Some(error),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, such as `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Self { base: base.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{}", self.base, path))
    }

    async fn send(&self, req: RequestBuilder) -> Result<reqwest::Response, ClientError> {
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await?;
        let error = serde_json::from_str(&text).unwrap_or_else(|_| ApiError::new(format!("{status}: {text}")));
        Err(ClientError::Api { status, error })
    }

    async fn json<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T, ClientError> {
        let bytes = self.send(req).await?.bytes().await?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        self.json(self.request(Method::POST, path).json(body)).await
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        self.json(self.request(Method::GET, "/health")).await
    }

    pub async fn replay(&self, req: &ReplayRequest) -> Result<ReplayResponse, ClientError> {
        self.post("/v1/replay", req).await
    }

    pub async fn agent(&self, req: &AgentRequest) -> Result<AgentResponse, ClientError> {
        self.post("/v1/agent", req).await
    }

    pub async fn stats(&self, req: &StatsRequest) -> Result<UsageStats, ClientError> {
        self.post("/v1/stats", req).await
    }

    pub async fn timeline(&self, req: &TimelineRequest) -> Result<TimelineResponse, ClientError> {
        self.post("/v1/timeline", req).await
    }

    pub async fn create_session(&self, req: &CreateSessionRequest) -> Result<String, ClientError> {
        let resp: CreateSessionResponse = self.post("/v1/sessions", req).await?;
        Ok(resp.session_id)
    }

    pub async fn session(&self, id: &str) -> Result<SessionInfo, ClientError> {
        self.json(self.request(Method::GET, &format!("/v1/sessions/{id}"))).await
    }

    pub async fn delete_session(&self, id: &str) -> Result<(), ClientError> {
        self.send(self.request(Method::DELETE, &format!("/v1/sessions/{id}"))).await?;
        Ok(())
    }

    /// Sends a batch of protocol messages and returns every reply in order.
    pub async fn send_messages(&self, id: &str, messages: &[ClientMessage]) -> Result<Vec<ServerMessage>, ClientError> {
        let mut body = String::new();
        for m in messages {
            body.push_str(&serde_json::to_string(m)?);
            body.push('\n');
        }
        let req = self.request(Method::POST, &format!("/v1/sessions/{id}/messages")).body(body);
        let text = self.send(req).await?.text().await?;
        text.lines().filter(|l| !l.is_empty()).map(|l| serde_json::from_str(l).map_err(ClientError::from)).collect()
    }
}
