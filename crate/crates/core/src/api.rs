//! Request and response bodies shared by the HTTP service and its client,
//! plus the pure operations behind each endpoint.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::agent::{run_agent, Script};
use crate::analytics::{usage_stats, DayRange, UsageStats};
use crate::budget::{BudgetSummary, DayClock};
use crate::config::EngineConfig;
use crate::event::{Millis, Screen};
use crate::protocol::Session;
use crate::replay::replay;
use crate::scheduler::SchedulerState;
use crate::timeline::{timeline_export, TimelineDocument};
use crate::trace::{session_events, to_ndjson};

/// Error body returned by every failing endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub message: String,
    /// 1-based line in the submitted trace or log, when applicable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

impl ApiError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { message: message.into(), line: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRequest {
    /// NDJSON trace text.
    pub trace: String,
    #[serde(default)]
    pub config: EngineConfig,
    #[serde(default)]
    pub screen: Screen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResponse {
    /// NDJSON engine log.
    pub log: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRequest {
    pub script: Script,
    #[serde(default)]
    pub config: EngineConfig,
    #[serde(default)]
    pub screen: Screen,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentResponse {
    /// NDJSON trace the agent produced.
    pub trace: String,
    /// NDJSON engine log for that trace.
    pub log: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRequest {
    /// NDJSON trace or engine log; only session events are read.
    pub log: String,
    pub base_days: DayRange,
    pub period_days: DayRange,
    #[serde(default)]
    pub apps: Option<BTreeSet<String>>,
    #[serde(default)]
    pub day_offset_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRequest {
    pub log: String,
    pub day: i64,
    #[serde(default)]
    pub day_offset_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineResponse {
    pub document: TimelineDocument,
    pub html: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub config: EngineConfig,
    #[serde(default)]
    pub screen: Screen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub session_id: String,
}

/// Snapshot of a live session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub engine_time: Millis,
    pub intervention_active: bool,
    pub scheduler: SchedulerState,
    pub budget: BudgetSummary,
    pub trace_records: usize,
}

impl SessionInfo {
    pub fn of(session: &Session) -> Self {
        let engine = session.engine();
        Self {
            session_id: session.id().to_string(),
            engine_time: engine.now(),
            intervention_active: engine.intervention_active(),
            scheduler: engine.scheduler_state().clone(),
            budget: engine.budget_summary(),
            trace_records: session.trace().len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

pub fn do_replay(req: &ReplayRequest) -> Result<ReplayResponse, ApiError> {
    replay(&req.trace, &req.config, req.screen)
        .map(|log| ReplayResponse { log })
        .map_err(|e| ApiError { line: e.line(), message: e.to_string() })
}

pub fn do_agent(req: &AgentRequest) -> Result<AgentResponse, ApiError> {
    let run = run_agent(&req.script, &req.config, req.screen, req.seed).map_err(|e| ApiError::new(e.to_string()))?;
    Ok(AgentResponse { trace: to_ndjson(&run.trace), log: to_ndjson(&run.log) })
}

pub fn do_stats(req: &StatsRequest) -> Result<UsageStats, ApiError> {
    let log = session_events(&req.log).map_err(|e| ApiError { line: Some(e.line), message: e.to_string() })?;
    usage_stats(&log, req.apps.as_ref(), req.base_days, req.period_days, &DayClock::new(req.day_offset_ms))
        .map_err(|e| ApiError::new(e.to_string()))
}

pub fn do_timeline(req: &TimelineRequest) -> Result<TimelineResponse, ApiError> {
    let log = session_events(&req.log).map_err(|e| ApiError { line: Some(e.line), message: e.to_string() })?;
    let document =
        timeline_export(&log, req.day, &DayClock::new(req.day_offset_ms)).map_err(|e| ApiError::new(e.to_string()))?;
    Ok(TimelineResponse { html: document.to_html(), document })
}
