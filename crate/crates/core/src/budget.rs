//! Daily usage budget and the bypass state machine.
//!
//! Foreground time in any target app accrues to one combined budget. Once
//! the budget is spent, interventions are active in target apps unless a
//! bypass is running or the user chose to ignore the limit for the day.
//! Days are bounded by local midnight (`day_offset_ms` shifts the virtual
//! clock into local time).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::BudgetConfig;
use crate::event::{BypassOption, Intervention, Millis, SessionEvent, SessionEventKind};

pub const DAY_MS: Millis = 86_400_000;

/// Maps virtual time to local calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DayClock {
    pub offset_ms: i64,
}

impl DayClock {
    pub fn new(offset_ms: i64) -> Self {
        Self { offset_ms }
    }

    pub fn day_of(&self, t: Millis) -> i64 {
        (t as i64 + self.offset_ms).div_euclid(DAY_MS as i64)
    }

    /// Virtual time at which `day` starts, clamped at zero.
    pub fn day_start(&self, day: i64) -> Millis {
        (day * DAY_MS as i64 - self.offset_ms).max(0) as Millis
    }

    pub fn next_midnight(&self, t: Millis) -> Millis {
        self.day_start(self.day_of(t) + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BudgetError {
    #[error("AppEnter for {entering} while {current} is still in the foreground")]
    OverlappingEnter { entering: String, current: String },
    #[error("AppExit for {exiting} but the foreground app is {current:?}")]
    MismatchedExit { exiting: String, current: Option<String> },
    #[error("bypass without an unbypassed intervention encounter today")]
    BypassWithoutEncounter,
    #[error("event {0} is not an app-activity event")]
    NotAppEvent(&'static str),
    #[error("time went backwards: {now} < {last}")]
    TimeBackwards { now: Millis, last: Millis },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Foreground {
    pub app_id: String,
    /// Start of the not-yet-accrued part of the foreground interval.
    pub since: Millis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetState {
    pub target_apps: BTreeSet<String>,
    /// Combined daily limit in seconds.
    pub daily_limit: u64,
    pub clock: DayClock,
    /// Accrued target-app foreground time today, in ms.
    pub used_today_ms: Millis,
    pub day: i64,
    pub day_start: Millis,
    pub bypass_until: Option<Millis>,
    pub ignore_today: bool,
    pub foreground: Option<Foreground>,
    pub encounters_today: u32,
    pub bypasses_today: u32,
    /// An encounter was already logged for the current intervention episode.
    pub encounter_open: bool,
    pub accrued_by_day: BTreeMap<i64, Millis>,
    now: Millis,
}

/// Snapshot for protocol clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub day: i64,
    pub used_seconds: f64,
    pub daily_limit: u64,
    pub foreground: Option<String>,
    pub active: bool,
    pub bypass_until: Option<Millis>,
    pub ignore_today: bool,
    pub encounters_today: u32,
    pub bypasses_today: u32,
}

impl BudgetState {
    pub fn new(config: &BudgetConfig, now: Millis) -> Self {
        let clock = DayClock::new(config.day_offset_ms);
        let day = clock.day_of(now);
        Self {
            target_apps: config.target_apps.clone(),
            daily_limit: config.daily_limit,
            clock,
            used_today_ms: 0,
            day,
            day_start: clock.day_start(day),
            bypass_until: None,
            ignore_today: false,
            foreground: None,
            encounters_today: 0,
            bypasses_today: 0,
            encounter_open: false,
            accrued_by_day: BTreeMap::new(),
            now,
        }
    }

    pub fn limit_ms(&self) -> Millis {
        self.daily_limit * 1000
    }

    pub fn used_today_secs(&self) -> f64 {
        self.used_today_ms as f64 / 1000.0
    }

    pub fn is_target(&self, app_id: &str) -> bool {
        self.target_apps.contains(app_id)
    }

    pub fn next_midnight(&self) -> Millis {
        self.clock.next_midnight(self.now)
    }

    fn accrue(&mut self, until: Millis) {
        let Some(fg) = self.foreground.as_mut() else { return };
        if until <= fg.since {
            return;
        }
        let span = until - fg.since;
        fg.since = until;
        if self.target_apps.contains(&fg.app_id) {
            self.used_today_ms += span;
            *self.accrued_by_day.entry(self.day).or_default() += span;
        }
    }

    /// Moves the internal clock to `now`, crossing any midnights on the way.
    /// Returns the midnight instants crossed.
    pub fn roll_to(&mut self, now: Millis) -> Result<Vec<Millis>, BudgetError> {
        if now < self.now {
            return Err(BudgetError::TimeBackwards { now, last: self.now });
        }
        let mut crossed = Vec::new();
        loop {
            let midnight = self.clock.next_midnight(self.now);
            if midnight > now {
                break;
            }
            self.accrue(midnight);
            self.now = midnight;
            self.day = self.clock.day_of(midnight);
            self.day_start = midnight;
            self.used_today_ms = 0;
            self.ignore_today = false;
            self.encounters_today = 0;
            self.bypasses_today = 0;
            self.encounter_open = false;
            crossed.push(midnight);
        }
        self.now = now;
        Ok(crossed)
    }

    /// Target-app usage today including the running foreground interval.
    pub fn used_at(&self, now: Millis) -> Millis {
        let running = match &self.foreground {
            Some(fg) if self.is_target(&fg.app_id) => now.saturating_sub(fg.since.max(self.day_start)),
            _ => 0,
        };
        self.used_today_ms + running
    }

    pub fn record_app_event(&mut self, kind: &SessionEventKind, now: Millis) -> Result<(), BudgetError> {
        self.roll_to(now)?;
        match kind {
            SessionEventKind::AppEnter { app_id } => {
                if let Some(fg) = &self.foreground {
                    return Err(BudgetError::OverlappingEnter { entering: app_id.clone(), current: fg.app_id.clone() });
                }
                self.foreground = Some(Foreground { app_id: app_id.clone(), since: now });
            }
            SessionEventKind::AppExit { app_id } => {
                match &self.foreground {
                    Some(fg) if &fg.app_id == app_id => {}
                    other => {
                        return Err(BudgetError::MismatchedExit {
                            exiting: app_id.clone(),
                            current: other.as_ref().map(|f| f.app_id.clone()),
                        })
                    }
                }
                self.accrue(now);
                self.foreground = None;
            }
            SessionEventKind::ScreenOff => {
                self.accrue(now);
                self.foreground = None;
            }
            SessionEventKind::InterventionEncounter { .. } => return Err(BudgetError::NotAppEvent("InterventionEncounter")),
            SessionEventKind::Bypass { .. } => return Err(BudgetError::NotAppEvent("Bypass")),
            SessionEventKind::GestureLogged { .. } => return Err(BudgetError::NotAppEvent("GestureLogged")),
        }
        self.encounter_open = false;
        Ok(())
    }

    /// Whether interventions apply to `app_id` at `now`.
    pub fn intervention_active(&self, app_id: &str, now: Millis) -> bool {
        self.is_target(app_id)
            && self.used_at(now) >= self.limit_ms()
            && !self.ignore_today
            && self.bypass_until.is_none_or(|until| now >= until)
    }

    /// Whether the current foreground app is under intervention.
    pub fn foreground_active(&self, now: Millis) -> bool {
        self.foreground.as_ref().is_some_and(|fg| self.intervention_active(&fg.app_id, now))
    }

    /// Earliest instant in `[now, next midnight)` at which the foreground
    /// app becomes intervened if no further events arrive.
    pub fn next_activation(&self, now: Millis) -> Option<Millis> {
        let fg = self.foreground.as_ref()?;
        if !self.is_target(&fg.app_id) || self.ignore_today {
            return None;
        }
        let used = self.used_at(now);
        let limit_at = now + self.limit_ms().saturating_sub(used);
        let at = limit_at.max(self.bypass_until.unwrap_or(0)).max(now);
        (at < self.clock.next_midnight(now)).then_some(at)
    }

    /// Logs an encounter for the current episode if none was logged yet.
    pub fn log_encounter(&mut self, app_id: &str, intervention: Intervention, now: Millis) -> Option<SessionEvent> {
        if self.encounter_open || !self.intervention_active(app_id, now) {
            return None;
        }
        self.encounter_open = true;
        self.encounters_today += 1;
        Some(SessionEvent::encounter(now, app_id, intervention))
    }

    pub fn apply_bypass(&mut self, option: BypassOption, now: Millis) -> Result<SessionEvent, BudgetError> {
        self.roll_to(now)?;
        if self.bypasses_today >= self.encounters_today {
            return Err(BudgetError::BypassWithoutEncounter);
        }
        match option.pause_ms() {
            Some(pause) => self.bypass_until = Some(now + pause),
            None => self.ignore_today = true,
        }
        self.bypasses_today += 1;
        self.encounter_open = false;
        Ok(SessionEvent::bypass(now, option))
    }

    pub fn summary(&self, now: Millis) -> BudgetSummary {
        BudgetSummary {
            day: self.day,
            used_seconds: self.used_at(now) as f64 / 1000.0,
            daily_limit: self.daily_limit,
            foreground: self.foreground.as_ref().map(|f| f.app_id.clone()),
            active: self.foreground_active(now),
            bypass_until: self.bypass_until,
            ignore_today: self.ignore_today,
            encounters_today: self.encounters_today,
            bypasses_today: self.bypasses_today,
        }
    }
}
