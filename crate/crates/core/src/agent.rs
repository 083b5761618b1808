//! Rule-based simulated users. An agent walks a script of timed intents,
//! drives a live engine, and reacts to what the engine reports (blocking
//! screens, encounters, slow or swallowed gestures).

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::engine::{Engine, EngineError};
use crate::event::{BypassOption, Intervention, Millis, PointerSample, Screen, SessionEvent, SessionEventKind};
use crate::trace::{EngineEvent, LogRecord, TraceRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Step {
    Open { app: String },
    Close,
    ScreenOff,
    Idle { ms: Millis },
    /// Idles until an absolute virtual time (no-op if already past it).
    IdleUntil { t: Millis },
    Swipes { count: u32, interval_ms: Millis },
    Taps { count: u32, interval_ms: Millis },
    Bypass { option: BypassOption },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reaction {
    Bypass(BypassOption),
    Leave,
    Continue,
}

fn default_on_blocked() -> Reaction {
    Reaction::Leave
}

fn default_on_encounter() -> Reaction {
    Reaction::Continue
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub apps: BTreeSet<String>,
    #[serde(default)]
    pub start: Millis,
    pub steps: Vec<Step>,
    /// What to do when the blocking screen appears.
    #[serde(default = "default_on_blocked")]
    pub on_blocked: Reaction,
    /// What to do when a manipulation encounter is logged.
    #[serde(default = "default_on_encounter")]
    pub on_encounter: Reaction,
    /// Leave the app once a gesture lands later than this after release,
    /// or is swallowed entirely.
    #[serde(default)]
    pub abandon_latency_ms: Option<Millis>,
}

impl Script {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn check(&self) -> Result<(), AgentError> {
        for step in &self.steps {
            if let Step::Open { app } = step {
                if !self.apps.contains(app) {
                    return Err(AgentError::UnknownApp(app.clone()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("script opens unknown app {0:?}")]
    UnknownApp(String),
    #[error("engine rejected agent input at t={t}: {source}")]
    Engine { t: Millis, source: EngineError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRun {
    pub trace: Vec<TraceRecord>,
    pub log: Vec<LogRecord>,
}

struct Agent<'a> {
    script: &'a Script,
    engine: Engine,
    rng: ChaCha8Rng,
    t: Millis,
    app: Option<String>,
    trace: Vec<TraceRecord>,
    log: Vec<LogRecord>,
}

impl Agent<'_> {
    fn send(&mut self, record: TraceRecord) -> Result<Vec<LogRecord>, AgentError> {
        let t = record.t();
        let out = self.engine.step(&record).map_err(|source| AgentError::Engine { t, source })?;
        self.trace.push(record);
        self.log.extend(out.iter().cloned());
        Ok(out)
    }

    fn session(&mut self, kind: SessionEventKind) -> Result<Vec<LogRecord>, AgentError> {
        self.send(SessionEvent::new(self.t, kind).into())
    }

    fn leave(&mut self) -> Result<Vec<LogRecord>, AgentError> {
        match self.app.take() {
            Some(app_id) => self.session(SessionEventKind::AppExit { app_id }),
            None => Ok(Vec::new()),
        }
    }

    fn gesture(&mut self, samples: Vec<PointerSample>) -> Result<Vec<LogRecord>, AgentError> {
        let mut out = Vec::new();
        for s in samples {
            self.t = s.t;
            out.extend(self.send(s.into())?);
        }
        Ok(out)
    }

    fn swipe(&mut self) -> Vec<PointerSample> {
        let screen = self.engine.screen();
        let x = screen.width / 2.0 + self.rng.random_range(-40.0..40.0);
        let y0 = screen.height * 0.75 + self.rng.random_range(-30.0..30.0);
        let dy = self.rng.random_range(250.0..400.0);
        let duration: Millis = self.rng.random_range(150..=250);
        let frames = duration / 16;
        let t0 = self.t;
        let mut samples = vec![PointerSample::down(0, x, y0, t0)];
        for i in 1..frames {
            let (px, py) = screen.clamp(x, y0 - dy * i as f64 / frames as f64);
            samples.push(PointerSample::moved(0, px, py, t0 + duration * i / frames));
        }
        let (px, py) = screen.clamp(x, y0 - dy);
        samples.push(PointerSample::up(0, px, py, t0 + duration));
        samples
    }

    fn tap_at(&mut self, x: f64, y: f64) -> Vec<PointerSample> {
        let duration: Millis = self.rng.random_range(60..=140);
        vec![PointerSample::down(0, x, y, self.t), PointerSample::up(0, x, y, self.t + duration)]
    }

    fn random_tap(&mut self) -> Vec<PointerSample> {
        let screen = self.engine.screen();
        let x = self.rng.random_range(0.1..0.9) * screen.width;
        let y = self.rng.random_range(0.1..0.8) * screen.height;
        self.tap_at(x, y)
    }

    /// Responds to the engine output of the last input. Returns false once
    /// the agent has left the app.
    fn react(&mut self, out: &[LogRecord]) -> Result<bool, AgentError> {
        for record in out {
            let reaction = match record {
                LogRecord::Engine(r) => match &r.engine {
                    EngineEvent::LockoutShown { .. } => Some(self.script.on_blocked),
                    EngineEvent::Suppressed { .. } if self.script.abandon_latency_ms.is_some() => Some(Reaction::Leave),
                    EngineEvent::Dispatched { recognized, virtual_gesture } => match self.script.abandon_latency_ms {
                        Some(tol) if virtual_gesture.dispatch_at.saturating_sub(recognized.completion()) > tol => {
                            Some(Reaction::Leave)
                        }
                        _ => None,
                    },
                    _ => None,
                },
                LogRecord::Session(e) => match &e.kind {
                    SessionEventKind::InterventionEncounter { intervention: Intervention::Manipulation, .. } => {
                        Some(self.script.on_encounter)
                    }
                    _ => None,
                },
            };
            match reaction {
                None | Some(Reaction::Continue) => {}
                Some(Reaction::Leave) => {
                    self.t += 200;
                    self.leave()?;
                    return Ok(false);
                }
                Some(Reaction::Bypass(option)) => {
                    if self.engine.config().intervention.lockout_enabled {
                        let screen = self.engine.screen();
                        let (x, y) = self.engine.config().intervention.lockout_bypass_region.center(&screen);
                        self.t += 300;
                        let samples = self.tap_at(x, y);
                        self.gesture(samples)?;
                    }
                    self.t += 300;
                    self.session(SessionEventKind::Bypass { option })?;
                    return Ok(true);
                }
            }
        }
        Ok(true)
    }

    fn gestures(&mut self, count: u32, interval_ms: Millis, swipe: bool) -> Result<(), AgentError> {
        for _ in 0..count {
            if self.app.is_none() {
                break;
            }
            let start = self.t;
            let samples = if swipe { self.swipe() } else { self.random_tap() };
            let out = self.gesture(samples)?;
            if !self.react(&out)? {
                break;
            }
            self.t = self.t.max(start + interval_ms);
        }
        Ok(())
    }

    fn run(&mut self) -> Result<(), AgentError> {
        for step in &self.script.steps {
            match step {
                Step::Open { app } => {
                    self.leave()?;
                    self.app = Some(app.clone());
                    let out = self.session(SessionEventKind::AppEnter { app_id: app.clone() })?;
                    self.react(&out)?;
                }
                Step::Close => {
                    self.leave()?;
                }
                Step::ScreenOff => {
                    self.app = None;
                    self.session(SessionEventKind::ScreenOff)?;
                }
                Step::Idle { .. } | Step::IdleUntil { .. } => {
                    self.t = match step {
                        Step::Idle { ms } => self.t + ms,
                        Step::IdleUntil { t } => self.t.max(*t),
                        _ => unreachable!(),
                    };
                    let out = self.engine.advance_to(self.t).map_err(|source| AgentError::Engine { t: self.t, source })?;
                    self.log.extend(out.iter().cloned());
                    self.react(&out)?;
                }
                Step::Swipes { count, interval_ms } => self.gestures(*count, *interval_ms, true)?,
                Step::Taps { count, interval_ms } => self.gestures(*count, *interval_ms, false)?,
                Step::Bypass { option } => {
                    self.session(SessionEventKind::Bypass { option: *option })?;
                }
            }
        }
        self.leave()?;
        let out = self.engine.finish().map_err(|source| AgentError::Engine { t: self.t, source })?;
        self.log.extend(out);
        Ok(())
    }
}

/// Runs `script` against a fresh engine. The same script, configuration
/// and seed always produce the same trace.
pub fn run_agent(script: &Script, config: &EngineConfig, screen: Screen, seed: u64) -> Result<AgentRun, AgentError> {
    script.check()?;
    let engine = Engine::starting_at(config.clone(), screen, script.start)
        .map_err(|source| AgentError::Engine { t: script.start, source })?;
    let mut agent = Agent {
        script,
        engine,
        rng: ChaCha8Rng::seed_from_u64(seed),
        t: script.start,
        app: None,
        trace: Vec::new(),
        log: Vec::new(),
    };
    agent.run()?;
    Ok(AgentRun { trace: agent.trace, log: agent.log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BudgetConfig, InterventionConfig, SwipeStrategy, TapStrategy};

    fn config(intervention: InterventionConfig, limit: u64) -> EngineConfig {
        EngineConfig {
            intervention,
            budget: BudgetConfig { target_apps: ["feed".to_string()].into(), daily_limit: limit, day_offset_ms: 0 },
            ..Default::default()
        }
    }

    fn script(steps: Vec<Step>) -> Script {
        Script {
            apps: ["feed".to_string(), "mail".to_string()].into(),
            start: 0,
            steps,
            on_blocked: Reaction::Leave,
            on_encounter: Reaction::Continue,
            abandon_latency_ms: None,
        }
    }

    #[test]
    fn unknown_app_rejected() {
        let s = script(vec![Step::Open { app: "game".into() }]);
        let err = run_agent(&s, &EngineConfig::default(), Screen::default(), 0).unwrap_err();
        assert_eq!(err, AgentError::UnknownApp("game".into()));
    }

    #[test]
    fn zero_actions_only_enter_exit() {
        let s = script(vec![Step::Open { app: "feed".into() }]);
        let run = run_agent(&s, &EngineConfig::default(), Screen::default(), 0).unwrap();
        assert_eq!(
            run.trace,
            vec![SessionEvent::app_enter(0, "feed").into(), SessionEvent::app_exit(0, "feed").into()]
        );
    }

    #[test]
    fn seed_determinism() {
        let s = script(vec![Step::Open { app: "feed".into() }, Step::Swipes { count: 20, interval_ms: 700 }]);
        let c = config(InterventionConfig::field().with_strategies(TapStrategy::Delay, SwipeStrategy::Delay), 0);
        let a = run_agent(&s, &c, Screen::default(), 3).unwrap();
        let b = run_agent(&s, &c, Screen::default(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn script_json_shape() {
        let text = r#"{"apps":["feed"],"steps":[{"Open":{"app":"feed"}},{"Swipes":{"count":3,"interval_ms":500}},"Close"],"on_blocked":{"Bypass":"IgnoreToday"}}"#;
        let s = Script::from_json(text).unwrap();
        assert_eq!(s.on_blocked, Reaction::Bypass(BypassOption::IgnoreToday));
        assert_eq!(s.steps.len(), 3);
    }
}
