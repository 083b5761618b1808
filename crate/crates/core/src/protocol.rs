//! Live session protocol: newline-delimited JSON messages over one
//! bidirectional stream. The first client message must be `hello`; its
//! `client_time` fixes the offset between the client clock and the engine's
//! virtual clock, and every later client timestamp is translated by it.

use serde::{Deserialize, Serialize};

use crate::budget::BudgetSummary;
use crate::config::{EngineConfig, InterventionConfig};
use crate::engine::{Engine, EngineError};
use crate::event::{BypassOption, Millis, PointerSample, Screen, SessionEvent, SessionEventKind};
use crate::scheduler::SchedulerState;
use crate::trace::{LogRecord, TraceRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello { client_time: Millis },
    Pointers { samples: Vec<PointerSample> },
    Session { event: SessionEvent },
    Bypass { t: Millis, option: BypassOption },
    Tick { t: Millis },
    Configure { intervention: InterventionConfig },
    Snapshot,
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Welcome { session_id: String, engine_time: Millis, clock_offset: i64, screen: Screen },
    Log { record: LogRecord },
    State { t: Millis, intervention_active: bool, scheduler: SchedulerState, budget: BudgetSummary },
    Trace { records: Vec<TraceRecord> },
    Error { message: String },
}

impl ServerMessage {
    fn error(message: impl Into<String>) -> Self {
        ServerMessage::Error { message: message.into() }
    }
}

/// One engine bound to one client.
#[derive(Debug)]
pub struct Session {
    id: String,
    engine: Engine,
    /// Engine time minus client time, fixed by the handshake.
    offset: Option<i64>,
    trace: Vec<TraceRecord>,
}

impl Session {
    pub fn new(id: impl Into<String>, config: EngineConfig, screen: Screen) -> Result<Self, EngineError> {
        Ok(Self { id: id.into(), engine: Engine::new(config, screen)?, offset: None, trace: Vec::new() })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    fn to_engine(&self, offset: i64, t: Millis) -> Result<Millis, String> {
        let engine_t = t as i64 + offset;
        if engine_t < 0 {
            return Err(format!("client time {t} precedes the handshake"));
        }
        Ok(engine_t as Millis)
    }

    fn state(&self) -> ServerMessage {
        ServerMessage::State {
            t: self.engine.now(),
            intervention_active: self.engine.intervention_active(),
            scheduler: self.engine.scheduler_state().clone(),
            budget: self.engine.budget_summary(),
        }
    }

    fn feed(&mut self, record: TraceRecord, out: &mut Vec<ServerMessage>) -> Result<(), String> {
        let logs = self.engine.step(&record).map_err(|e| e.to_string())?;
        self.trace.push(record);
        out.extend(logs.into_iter().map(|record| ServerMessage::Log { record }));
        Ok(())
    }

    fn apply(&mut self, offset: i64, msg: ClientMessage, out: &mut Vec<ServerMessage>) -> Result<(), String> {
        match msg {
            ClientMessage::Hello { .. } => return Err("duplicate hello".into()),
            ClientMessage::Pointers { samples } => {
                for mut s in samples {
                    s.t = self.to_engine(offset, s.t)?;
                    self.feed(s.into(), out)?;
                }
            }
            ClientMessage::Session { mut event } => {
                event.t = self.to_engine(offset, event.t)?;
                self.feed(event.into(), out)?;
            }
            ClientMessage::Bypass { t, option } => {
                let t = self.to_engine(offset, t)?;
                self.feed(SessionEvent::new(t, SessionEventKind::Bypass { option }).into(), out)?;
            }
            ClientMessage::Tick { t } => {
                let t = self.to_engine(offset, t)?;
                let logs = self.engine.advance_to(t).map_err(|e| e.to_string())?;
                out.extend(logs.into_iter().map(|record| ServerMessage::Log { record }));
            }
            ClientMessage::Configure { intervention } => {
                let logs = self.engine.reconfigure(intervention).map_err(|e| e.to_string())?;
                out.extend(logs.into_iter().map(|record| ServerMessage::Log { record }));
            }
            ClientMessage::Snapshot => {}
            ClientMessage::Trace => {
                out.push(ServerMessage::Trace { records: self.trace.clone() });
                return Ok(());
            }
        }
        out.push(self.state());
        Ok(())
    }

    /// Handles one client message; errors are reported in-band and leave
    /// the session open.
    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        let mut out = Vec::new();
        match (self.offset, msg) {
            (None, ClientMessage::Hello { client_time }) => {
                let engine_time = self.engine.now();
                let offset = engine_time as i64 - client_time as i64;
                self.offset = Some(offset);
                out.push(ServerMessage::Welcome {
                    session_id: self.id.clone(),
                    engine_time,
                    clock_offset: offset,
                    screen: self.engine.screen(),
                });
            }
            (None, _) => out.push(ServerMessage::error("expected hello first")),
            (Some(offset), msg) => {
                if let Err(e) = self.apply(offset, msg, &mut out) {
                    out.push(ServerMessage::error(e));
                }
            }
        }
        out
    }

    /// Handles one NDJSON line.
    pub fn handle_line(&mut self, line: &str) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(line) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![ServerMessage::error(format!("bad message: {e}"))],
        }
    }
}
