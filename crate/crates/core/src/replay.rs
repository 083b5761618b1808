//! Offline replay of a recorded trace through a fresh engine.

use crate::config::EngineConfig;
use crate::engine::{Engine, EngineError};
use crate::event::{validate_stream, PointerSample, Screen, StreamViolation};
use crate::trace::{parse_trace, to_ndjson, LogRecord, TraceError, TraceRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("line {line}: {violation}")]
    Stream { line: usize, violation: StreamViolation },
    #[error("line {line}: {source}")]
    Engine { line: usize, source: EngineError },
    #[error("configuration: {0}")]
    Config(EngineError),
}

impl ReplayError {
    /// 1-based trace line the error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            ReplayError::Trace(e) => Some(e.line),
            ReplayError::Stream { line, .. } | ReplayError::Engine { line, .. } => Some(*line),
            ReplayError::Config(_) => None,
        }
    }
}

/// Replays numbered trace records; returns the engine log.
pub fn replay_records(
    records: &[(usize, TraceRecord)],
    config: &EngineConfig,
    screen: Screen,
) -> Result<Vec<LogRecord>, ReplayError> {
    let (lines, samples): (Vec<usize>, Vec<PointerSample>) = records
        .iter()
        .filter_map(|(n, r)| match r {
            TraceRecord::Pointer(p) => Some((*n, *p)),
            TraceRecord::Session(_) => None,
        })
        .unzip();
    validate_stream(&samples).map_err(|violation| ReplayError::Stream { line: lines[violation.index], violation })?;

    let mut engine = Engine::new(config.clone(), screen).map_err(ReplayError::Config)?;
    let mut log = Vec::new();
    let mut last_line = 0;
    for (line, record) in records {
        last_line = *line;
        let out = engine.step(record).map_err(|source| ReplayError::Engine { line: *line, source })?;
        log.extend(out);
    }
    log.extend(engine.finish().map_err(|source| ReplayError::Engine { line: last_line, source })?);
    Ok(log)
}

/// Replays NDJSON trace text and renders the log as NDJSON.
pub fn replay(trace: &str, config: &EngineConfig, screen: Screen) -> Result<String, ReplayError> {
    let records = parse_trace(trace)?;
    let log = replay_records(&records, config, screen)?;
    Ok(to_ndjson(&log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_gives_empty_log() {
        assert_eq!(replay("", &EngineConfig::default(), Screen::default()).unwrap(), "");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let trace = "{\"t\":0,\"kind\":{\"AppEnter\":{\"app_id\":\"a\"}}}\n{\"pointer_id\":0,\"phase\":\"Up\",\"x\":0,\"y\":0,\"t\":5}\n";
        let err = replay(trace, &EngineConfig::default(), Screen::default()).unwrap_err();
        assert_eq!(err.line(), Some(2));
        let trace = "{\"t\":10,\"kind\":\"ScreenOff\"}\n{\"t\":5,\"kind\":\"ScreenOff\"}\n";
        let err = replay(trace, &EngineConfig::default(), Screen::default()).unwrap_err();
        assert_eq!(err.line(), Some(2));
    }
}
