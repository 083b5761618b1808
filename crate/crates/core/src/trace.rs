//! Newline-delimited JSON traces and engine logs.
//!
//! Input traces hold one `PointerSample` or `SessionEvent` per line. Engine
//! logs hold `SessionEvent`s plus engine records (`{"t": .., "engine": ..}`)
//! describing what happened to each recognized gesture.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::event::{Gesture, Millis, PointerSample, SessionEvent, VirtualGesture};
use crate::manipulation::SuppressReason;
use crate::scheduler::SchedulerState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceRecord {
    Pointer(PointerSample),
    Session(SessionEvent),
}

impl TraceRecord {
    pub fn t(&self) -> Millis {
        match self {
            TraceRecord::Pointer(p) => p.t,
            TraceRecord::Session(e) => e.t,
        }
    }
}

impl From<PointerSample> for TraceRecord {
    fn from(p: PointerSample) -> Self {
        TraceRecord::Pointer(p)
    }
}

impl From<SessionEvent> for TraceRecord {
    fn from(e: SessionEvent) -> Self {
        TraceRecord::Session(e)
    }
}

/// Engine-side happenings that are not session events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EngineEvent {
    Dispatched { recognized: Gesture, virtual_gesture: VirtualGesture },
    Suppressed { recognized: Gesture, reason: SuppressReason },
    Blocked { recognized: Gesture },
    BypassMenu { recognized: Gesture },
    LockoutShown { app_id: String },
    Activated { app_id: String },
    Deactivated { app_id: String },
    Scheduler { state: SchedulerState },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineRecord {
    pub t: Millis,
    pub engine: EngineEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogRecord {
    Session(SessionEvent),
    Engine(EngineRecord),
}

impl LogRecord {
    pub fn engine(t: Millis, engine: EngineEvent) -> Self {
        LogRecord::Engine(EngineRecord { t, engine })
    }

    pub fn t(&self) -> Millis {
        match self {
            LogRecord::Session(e) => e.t,
            LogRecord::Engine(r) => r.t,
        }
    }

    pub fn as_session(&self) -> Option<&SessionEvent> {
        match self {
            LogRecord::Session(e) => Some(e),
            LogRecord::Engine(_) => None,
        }
    }

    pub fn as_engine(&self) -> Option<&EngineEvent> {
        match self {
            LogRecord::Engine(r) => Some(&r.engine),
            LogRecord::Session(_) => None,
        }
    }
}

/// A malformed line, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

/// Any line that may appear in a trace or a log.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyRecord {
    Pointer(PointerSample),
    Session(SessionEvent),
    Engine(EngineRecord),
}

fn parse_line(line: usize, text: &str) -> Result<AnyRecord, TraceError> {
    let err = |message: String| TraceError { line, message };
    let value: Value = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| err("expected a JSON object".into()))?;
    // Dispatch on the discriminating field so errors name the real problem.
    if obj.contains_key("pointer_id") {
        serde_json::from_value(value).map(AnyRecord::Pointer).map_err(|e| err(format!("pointer sample: {e}")))
    } else if obj.contains_key("kind") {
        serde_json::from_value(value).map(AnyRecord::Session).map_err(|e| err(format!("session event: {e}")))
    } else if obj.contains_key("engine") {
        serde_json::from_value(value).map(AnyRecord::Engine).map_err(|e| err(format!("engine record: {e}")))
    } else {
        Err(err("record has none of `pointer_id`, `kind`, `engine`".into()))
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

/// Parses every non-blank line of a trace or log.
pub fn parse_any(text: &str) -> Result<Vec<(usize, AnyRecord)>, TraceError> {
    lines(text).map(|(n, l)| parse_line(n, l).map(|r| (n, r))).collect()
}

/// Parses an input trace; engine records are rejected.
pub fn parse_trace(text: &str) -> Result<Vec<(usize, TraceRecord)>, TraceError> {
    lines(text)
        .map(|(n, l)| match parse_line(n, l)? {
            AnyRecord::Pointer(p) => Ok((n, TraceRecord::Pointer(p))),
            AnyRecord::Session(e) => Ok((n, TraceRecord::Session(e))),
            AnyRecord::Engine(_) => Err(TraceError { line: n, message: "engine record in input trace".into() }),
        })
        .collect()
}

/// Extracts the session events from a trace or log, ignoring everything else.
pub fn session_events(text: &str) -> Result<Vec<SessionEvent>, TraceError> {
    let mut out = Vec::new();
    for (n, l) in lines(text) {
        if let AnyRecord::Session(e) = parse_line(n, l)? {
            out.push(e);
        }
    }
    Ok(out)
}

pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, TraceError> {
    lines(text)
        .filter_map(|(n, l)| match parse_line(n, l) {
            Ok(AnyRecord::Session(e)) => Some(Ok(LogRecord::Session(e))),
            Ok(AnyRecord::Engine(r)) => Some(Ok(LogRecord::Engine(r))),
            Ok(AnyRecord::Pointer(_)) => None,
            Err(e) => Some(Err(e)),
        })
        .collect()
}

/// Serializes records as NDJSON, one per line, with a trailing newline.
pub fn to_ndjson<'a, T: Serialize + 'a>(records: impl IntoIterator<Item = &'a T>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace records always serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{BypassOption, Intervention, Phase};

    #[test]
    fn wire_shapes() {
        let p = TraceRecord::Pointer(PointerSample::down(0, 1.5, 2.0, 10));
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"pointer_id":0,"phase":"Down","x":1.5,"y":2.0,"t":10}"#
        );
        let e = TraceRecord::Session(SessionEvent::app_enter(5, "feed"));
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"{"t":5,"kind":{"AppEnter":{"app_id":"feed"}}}"#);
        let off = SessionEvent::screen_off(7);
        assert_eq!(serde_json::to_string(&off).unwrap(), r#"{"t":7,"kind":"ScreenOff"}"#);
    }

    #[test]
    fn parses_mixed_trace() {
        let text = "{\"pointer_id\":1,\"phase\":\"Move\",\"x\":0,\"y\":0,\"t\":3}\n\n{\"t\":9,\"kind\":{\"Bypass\":{\"option\":\"OneMinute\"}}}\n";
        let recs = parse_trace(text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].0, 3);
        assert!(matches!(&recs[0].1, TraceRecord::Pointer(p) if p.phase == Phase::Move));
        assert_eq!(recs[1].1, TraceRecord::Session(SessionEvent::bypass(9, BypassOption::OneMinute)));
    }

    #[test]
    fn malformed_line_reports_number() {
        let text = "{\"t\":1,\"kind\":\"ScreenOff\"}\n{\"pointer_id\":0,\"phase\":\"Sideways\",\"x\":0,\"y\":0,\"t\":2}\n";
        let err = parse_trace(text).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.to_string().starts_with("line 2:"));
        assert_eq!(parse_trace("not json").unwrap_err().line, 1);
    }

    #[test]
    fn session_events_skip_engine_records() {
        let log = vec![
            LogRecord::Session(SessionEvent::encounter(1, "feed", Intervention::Lockout)),
            LogRecord::engine(1, EngineEvent::LockoutShown { app_id: "feed".into() }),
        ];
        let text = to_ndjson(&log);
        assert_eq!(session_events(&text).unwrap().len(), 1);
        assert_eq!(parse_log(&text).unwrap(), log);
    }
}
