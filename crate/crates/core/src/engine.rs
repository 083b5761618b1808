//! The interaction proxy: consumes pointer samples and app-activity events
//! on a virtual clock, recognizes gestures, and rewrites them while the
//! foreground app is under intervention.
//!
//! Internal transitions (midnight rollover, budget exhaustion, bypass
//! expiry, double-tap window expiry) are applied at their exact instants by
//! [`Engine::advance_to`], so output depends only on the input sequence.

use crate::budget::{BudgetError, BudgetState, BudgetSummary};
use crate::config::{ConfigError, EngineConfig, InterventionConfig, TapStrategy};
use crate::event::{Gesture, Intervention, Millis, PointerSample, Screen, SessionEvent, SessionEventKind, VirtualGesture};
use crate::manipulation::{lockout_filter, rewrite, Outcome, Pipeline};
use crate::recognizer::{Recognizer, RecognizerError};
use crate::scheduler::{Scheduler, SchedulerState};
use crate::trace::{EngineEvent, LogRecord, TraceRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Recognizer(#[from] RecognizerError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("{0} events are produced by the engine and cannot be replayed")]
    EngineGenerated(&'static str),
    #[error("clock moved backwards to {now} (engine time {last})")]
    ClockBackwards { now: Millis, last: Millis },
    #[error("lockout bypass is only reachable from the blocking screen")]
    LockoutBypassUnavailable,
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    screen: Screen,
    recognizer: Recognizer,
    scheduler: Scheduler,
    budget: BudgetState,
    now: Millis,
    /// Foreground app currently under intervention.
    active_app: Option<String>,
    reset_on_activation: bool,
}

impl Engine {
    pub fn new(config: EngineConfig, screen: Screen) -> Result<Self, EngineError> {
        Self::starting_at(config, screen, 0)
    }

    pub fn starting_at(config: EngineConfig, screen: Screen, now: Millis) -> Result<Self, EngineError> {
        config.validate()?;
        Ok(Self {
            recognizer: Recognizer::new(config.recognizer.clone()),
            scheduler: Scheduler::new(config.scheduler.clone(), &config.intervention, now),
            budget: BudgetState::new(&config.budget, now),
            config,
            screen,
            now,
            active_app: None,
            reset_on_activation: true,
        })
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    pub fn screen(&self) -> Screen {
        self.screen
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn scheduler_state(&self) -> &SchedulerState {
        self.scheduler.state()
    }

    pub fn budget(&self) -> &BudgetState {
        &self.budget
    }

    pub fn budget_summary(&self) -> BudgetSummary {
        self.budget.summary(self.now)
    }

    pub fn intervention_active(&self) -> bool {
        self.active_app.is_some()
    }

    fn lockout(&self) -> bool {
        self.config.intervention.lockout_enabled
    }

    /// Feeds one trace record. A rejected record leaves the engine exactly
    /// as it was, including its clock.
    pub fn step(&mut self, record: &TraceRecord) -> Result<Vec<LogRecord>, EngineError> {
        match record {
            TraceRecord::Pointer(s) => self.feed_pointer(s),
            TraceRecord::Session(e) => self.session_event(e),
        }
    }

    fn atomically(
        &mut self,
        f: impl FnOnce(&mut Self) -> Result<Vec<LogRecord>, EngineError>,
    ) -> Result<Vec<LogRecord>, EngineError> {
        let backup = self.clone();
        let result = f(self);
        if result.is_err() {
            *self = backup;
        }
        result
    }

    /// Runs every internal transition up to and including `t`.
    pub fn advance_to(&mut self, t: Millis) -> Result<Vec<LogRecord>, EngineError> {
        if t < self.now {
            return Err(EngineError::ClockBackwards { now: t, last: self.now });
        }
        let mut out = Vec::new();
        loop {
            let midnight = self.budget.next_midnight();
            let activation = match self.active_app {
                None => self.budget.next_activation(self.now),
                Some(_) => None,
            };
            let flush = self.recognizer.pending_deadline();
            let Some(at) = [Some(midnight), activation, flush].into_iter().flatten().filter(|&x| x <= t).min()
            else {
                break;
            };
            if self.active_app.is_some() {
                self.scheduler.on_tick(at);
            }
            self.now = at;
            if !self.budget.roll_to(at)?.is_empty() {
                self.reset_on_activation = true;
                self.scheduler.reset(at);
            }
            if flush == Some(at) {
                for g in self.recognizer.advance_clock(at)? {
                    self.process_gesture(g, at, &mut out)?;
                }
            }
            self.sync_activity(at, &mut out)?;
        }
        if self.active_app.is_some() {
            self.scheduler.on_tick(t);
        }
        self.budget.roll_to(t)?;
        self.recognizer.advance_clock(t)?;
        self.now = t;
        Ok(out)
    }

    fn sync_activity(&mut self, now: Millis, out: &mut Vec<LogRecord>) -> Result<(), EngineError> {
        let should = self.budget.foreground_active(now);
        match (&self.active_app, should) {
            (None, true) => {
                let app = self.budget.foreground.as_ref().expect("active implies foreground").app_id.clone();
                if std::mem::take(&mut self.reset_on_activation) {
                    self.scheduler.reset(now);
                } else {
                    self.scheduler.resume(now);
                }
                out.push(LogRecord::engine(now, EngineEvent::Activated { app_id: app.clone() }));
                if self.lockout() {
                    if let Some(enc) = self.budget.log_encounter(&app, Intervention::Lockout, now) {
                        out.push(LogRecord::Session(enc));
                    }
                    out.push(LogRecord::engine(now, EngineEvent::LockoutShown { app_id: app.clone() }));
                }
                self.active_app = Some(app);
            }
            (Some(app), false) => {
                out.push(LogRecord::engine(now, EngineEvent::Deactivated { app_id: app.clone() }));
                self.active_app = None;
            }
            _ => {}
        }
        self.sync_double_tap(now, out)
    }

    fn sync_double_tap(&mut self, now: Millis, out: &mut Vec<LogRecord>) -> Result<(), EngineError> {
        let want = self.active_app.is_some()
            && !self.lockout()
            && self.config.intervention.tap_strategy == TapStrategy::Double;
        if want != self.recognizer.double_tap_enabled() {
            for g in self.recognizer.set_double_tap(want) {
                self.process_gesture(g, now, out)?;
            }
        }
        Ok(())
    }

    fn process_gesture(&mut self, g: Gesture, now: Millis, out: &mut Vec<LogRecord>) -> Result<(), EngineError> {
        let Some(app) = self.active_app.clone() else {
            let virtual_gesture = VirtualGesture { dispatch_at: g.completion().max(now), gesture: g.clone() };
            out.push(LogRecord::engine(now, EngineEvent::Dispatched { recognized: g, virtual_gesture }));
            return Ok(());
        };
        if self.lockout() {
            let region = &self.config.intervention.lockout_bypass_region;
            let event = match lockout_filter(&g, true, region, &self.screen, now) {
                Outcome::BypassMenu => EngineEvent::BypassMenu { recognized: g },
                _ => EngineEvent::Blocked { recognized: g },
            };
            out.push(LogRecord::engine(now, event));
            return Ok(());
        }
        if let Some(enc) = self.budget.log_encounter(&app, Intervention::Manipulation, now) {
            out.push(LogRecord::Session(enc));
        }
        out.push(LogRecord::Session(SessionEvent::gesture(now, g.summary())));
        let pipeline = Pipeline::new(&self.config.intervention, self.scheduler.intensity(), self.screen);
        let event = match rewrite(&pipeline, &g, now)? {
            Outcome::Dispatched(virtual_gesture) => EngineEvent::Dispatched { recognized: g, virtual_gesture },
            Outcome::Suppressed(reason) => EngineEvent::Suppressed { recognized: g, reason },
            Outcome::Blocked => EngineEvent::Blocked { recognized: g },
            Outcome::BypassMenu => EngineEvent::BypassMenu { recognized: g },
        };
        out.push(LogRecord::engine(now, event));
        self.scheduler.on_operation(now);
        out.push(LogRecord::engine(now, EngineEvent::Scheduler { state: self.scheduler.state().clone() }));
        Ok(())
    }

    pub fn feed_pointer(&mut self, s: &PointerSample) -> Result<Vec<LogRecord>, EngineError> {
        self.atomically(|e| e.feed_pointer_inner(s))
    }

    fn feed_pointer_inner(&mut self, s: &PointerSample) -> Result<Vec<LogRecord>, EngineError> {
        let mut out = self.advance_to(s.t)?;
        self.sync_double_tap(s.t, &mut out)?;
        for g in self.recognizer.feed(s)? {
            self.process_gesture(g, s.t, &mut out)?;
        }
        Ok(out)
    }

    pub fn session_event(&mut self, e: &SessionEvent) -> Result<Vec<LogRecord>, EngineError> {
        self.atomically(|engine| engine.session_event_inner(e))
    }

    fn session_event_inner(&mut self, e: &SessionEvent) -> Result<Vec<LogRecord>, EngineError> {
        let mut out = self.advance_to(e.t)?;
        match &e.kind {
            SessionEventKind::AppEnter { .. } | SessionEventKind::AppExit { .. } | SessionEventKind::ScreenOff => {
                self.budget.record_app_event(&e.kind, e.t)?;
                out.push(LogRecord::Session(e.clone()));
            }
            SessionEventKind::Bypass { option } => {
                match (&self.active_app, self.lockout()) {
                    (None, true) => return Err(EngineError::LockoutBypassUnavailable),
                    (Some(app), false) => {
                        // The notification is reachable before the first gesture,
                        // so the episode's encounter may not be logged yet.
                        let app = app.clone();
                        if let Some(enc) = self.budget.log_encounter(&app, Intervention::Manipulation, e.t) {
                            out.push(LogRecord::Session(enc));
                        }
                    }
                    _ => {}
                }
                let ev = self.budget.apply_bypass(*option, e.t)?;
                out.push(LogRecord::Session(ev));
                self.reset_on_activation = true;
            }
            SessionEventKind::InterventionEncounter { .. } => {
                return Err(EngineError::EngineGenerated("InterventionEncounter"))
            }
            SessionEventKind::GestureLogged { .. } => return Err(EngineError::EngineGenerated("GestureLogged")),
        }
        self.sync_activity(e.t, &mut out)?;
        Ok(out)
    }

    /// Releases a tap still waiting on its double-tap window.
    pub fn finish(&mut self) -> Result<Vec<LogRecord>, EngineError> {
        match self.recognizer.pending_deadline() {
            Some(deadline) => self.advance_to(deadline.max(self.now)),
            None => Ok(Vec::new()),
        }
    }

    /// Swaps the intervention configuration mid-session. Step counts persist.
    pub fn reconfigure(&mut self, intervention: InterventionConfig) -> Result<Vec<LogRecord>, EngineError> {
        intervention.validate()?;
        self.scheduler.configure(&intervention);
        self.config.intervention = intervention;
        let mut out = Vec::new();
        let now = self.now;
        self.sync_double_tap(now, &mut out)?;
        Ok(out)
    }
}
