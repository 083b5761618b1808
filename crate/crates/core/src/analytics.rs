//! Usage and receptivity metrics computed from session-event logs.
//!
//! Every function here is a pure function of the log. Logs must be in time
//! order; foreground intervals are delimited by `AppEnter` and `AppExit` or
//! `ScreenOff`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::budget::DayClock;
use crate::event::{Millis, SessionEvent, SessionEventKind};

/// Inclusive range of day indices, written `A..B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DayRange {
    pub first: i64,
    pub last: i64,
}

impl DayRange {
    pub fn new(first: i64, last: i64) -> Self {
        Self { first, last }
    }

    pub fn single(day: i64) -> Self {
        Self::new(day, day)
    }

    pub fn len(&self) -> u64 {
        (self.last - self.first + 1).max(0) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, day: i64) -> bool {
        (self.first..=self.last).contains(&day)
    }

    pub fn days(&self) -> impl Iterator<Item = i64> {
        self.first..=self.last
    }

    /// Half-open virtual-time window `[start, end)` covered by the range.
    pub fn window(&self, clock: &DayClock) -> (Millis, Millis) {
        (clock.day_start(self.first), clock.day_start(self.last + 1))
    }
}

impl fmt::Display for DayRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

impl TryFrom<String> for DayRange {
    type Error = AnalyticsError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<DayRange> for String {
    fn from(r: DayRange) -> Self {
        r.to_string()
    }
}

impl FromStr for DayRange {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AnalyticsError::BadRange(s.to_string());
        let (a, b) = s.split_once("..").ok_or_else(bad)?;
        let first = a.trim().parse().map_err(|_| bad())?;
        let last = b.trim().parse().map_err(|_| bad())?;
        if last < first {
            return Err(bad());
        }
        Ok(Self { first, last })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("unclosed interval: {app_id} entered at {t} was never exited")]
    UnclosedInterval { app_id: String, t: Millis },
    #[error("AppExit for {app_id} at {t} without a matching AppEnter")]
    UnmatchedExit { app_id: String, t: Millis },
    #[error("invalid day range {0:?}: expected A..B with A <= B")]
    BadRange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalEnd {
    Exit,
    ScreenOff,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForegroundInterval {
    pub app_id: String,
    pub start: Millis,
    pub end: Millis,
    pub ended_by: IntervalEnd,
    /// Index of the closing event in the log.
    #[serde(skip)]
    pub end_index: usize,
}

pub fn foreground_intervals(log: &[SessionEvent]) -> Result<Vec<ForegroundInterval>, AnalyticsError> {
    let mut out = Vec::new();
    let mut open: Option<(String, Millis)> = None;
    for (i, e) in log.iter().enumerate() {
        match &e.kind {
            SessionEventKind::AppEnter { app_id } => {
                if let Some((app_id, t)) = open.take() {
                    return Err(AnalyticsError::UnclosedInterval { app_id, t });
                }
                open = Some((app_id.clone(), e.t));
            }
            SessionEventKind::AppExit { app_id } => match open.take() {
                Some((open_app, start)) if &open_app == app_id => out.push(ForegroundInterval {
                    app_id: open_app,
                    start,
                    end: e.t,
                    ended_by: IntervalEnd::Exit,
                    end_index: i,
                }),
                _ => return Err(AnalyticsError::UnmatchedExit { app_id: app_id.clone(), t: e.t }),
            },
            SessionEventKind::ScreenOff => {
                if let Some((app_id, start)) = open.take() {
                    out.push(ForegroundInterval { app_id, start, end: e.t, ended_by: IntervalEnd::ScreenOff, end_index: i });
                }
            }
            _ => {}
        }
    }
    match open {
        Some((app_id, t)) => Err(AnalyticsError::UnclosedInterval { app_id, t }),
        None => Ok(out),
    }
}

fn selected(apps: Option<&BTreeSet<String>>, app_id: &str) -> bool {
    apps.is_none_or(|set| set.contains(app_id))
}

fn overlap(a: (Millis, Millis), b: (Millis, Millis)) -> Millis {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    hi.saturating_sub(lo)
}

/// Foreground minutes of `apps` (all apps when `None`) within `days`.
pub fn usage_time(
    log: &[SessionEvent],
    apps: Option<&BTreeSet<String>>,
    days: DayRange,
    clock: &DayClock,
) -> Result<f64, AnalyticsError> {
    let window = days.window(clock);
    let ms: Millis = foreground_intervals(log)?
        .iter()
        .filter(|iv| selected(apps, &iv.app_id))
        .map(|iv| overlap((iv.start, iv.end), window))
        .sum();
    Ok(ms as f64 / 60_000.0)
}

/// Number of `AppEnter` events for `apps` within `days`.
pub fn opening_frequency(log: &[SessionEvent], apps: Option<&BTreeSet<String>>, days: DayRange, clock: &DayClock) -> u64 {
    log.iter()
        .filter(|e| days.contains(clock.day_of(e.t)))
        .filter(|e| matches!(&e.kind, SessionEventKind::AppEnter { app_id } if selected(apps, app_id)))
        .count() as u64
}

/// Ratio of a period value against the base-period value. Undefined (and
/// therefore `None`) when the base is not positive.
pub fn normalize(period_value: f64, base_value: f64) -> Option<f64> {
    (base_value > 0.0 && period_value.is_finite()).then(|| period_value / base_value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AcceptanceCounts {
    pub encounters: u64,
    pub bypasses: u64,
}

impl AcceptanceCounts {
    /// `1 - bypasses / encounters`; undefined without encounters.
    pub fn rate(&self) -> Option<f64> {
        (self.encounters > 0).then(|| 1.0 - self.bypasses as f64 / self.encounters as f64)
    }
}

/// Counts encounters and the bypasses that answered them. A bypass is
/// attributed to the app of the most recent encounter.
pub fn acceptance_counts(log: &[SessionEvent], apps: Option<&BTreeSet<String>>, days: Option<DayRange>, clock: &DayClock) -> AcceptanceCounts {
    let mut counts = AcceptanceCounts::default();
    let mut last: Option<(String, i64)> = None;
    let in_range = |day: i64| days.is_none_or(|r| r.contains(day));
    for e in log {
        match &e.kind {
            SessionEventKind::InterventionEncounter { app_id, .. } => {
                let day = clock.day_of(e.t);
                last = Some((app_id.clone(), day));
                if selected(apps, app_id) && in_range(day) {
                    counts.encounters += 1;
                }
            }
            SessionEventKind::Bypass { .. } => {
                if let Some((app_id, day)) = &last {
                    if selected(apps, app_id) && in_range(*day) {
                        counts.bypasses += 1;
                    }
                }
            }
            _ => {}
        }
    }
    counts
}

pub fn acceptance_rate(log: &[SessionEvent], apps: Option<&BTreeSet<String>>) -> Option<f64> {
    acceptance_counts(log, apps, None, &DayClock::default()).rate()
}

/// A stretch of foreground time under intervention: from an encounter to
/// the next bypass or the end of the foreground interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnPeriod {
    pub app_id: String,
    pub start: Millis,
    pub end: Millis,
    pub bypassed: bool,
    pub interval: usize,
}

pub fn intervention_periods(log: &[SessionEvent]) -> Result<Vec<OnPeriod>, AnalyticsError> {
    let intervals = foreground_intervals(log)?;
    let mut out = Vec::new();
    let mut current: Option<OnPeriod> = None;
    let mut iv_idx = 0;
    for e in log {
        while iv_idx < intervals.len() && intervals[iv_idx].end < e.t {
            if let Some(mut p) = current.take() {
                p.end = intervals[iv_idx].end;
                out.push(p);
            }
            iv_idx += 1;
        }
        let Some(iv) = intervals.get(iv_idx) else { break };
        if e.t < iv.start {
            continue;
        }
        match &e.kind {
            SessionEventKind::InterventionEncounter { app_id, .. } if app_id == &iv.app_id => {
                if let Some(mut p) = current.take() {
                    p.end = e.t;
                    out.push(p);
                }
                current = Some(OnPeriod { app_id: app_id.clone(), start: e.t, end: iv.end, bypassed: false, interval: iv_idx });
            }
            SessionEventKind::Bypass { .. } => {
                if let Some(mut p) = current.take() {
                    p.end = e.t;
                    p.bypassed = true;
                    out.push(p);
                }
            }
            _ => {}
        }
    }
    if let Some(mut p) = current.take() {
        p.end = intervals[p.interval].end;
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IpmClass {
    Low,
    Medium,
    High,
}

/// Low: IPM <= 10; Medium: 10 < IPM <= 18; High: IPM > 18.
pub fn ipm_class(ipm: f64) -> IpmClass {
    if ipm <= 10.0 {
        IpmClass::Low
    } else if ipm <= 18.0 {
        IpmClass::Medium
    } else {
        IpmClass::High
    }
}

/// Logged touches per minute of intervention-on foreground time in `app`.
/// `None` when the app never spent time under intervention.
pub fn ipm(log: &[SessionEvent], app_id: &str, days: Option<DayRange>, clock: &DayClock) -> Result<Option<f64>, AnalyticsError> {
    let periods: Vec<OnPeriod> = intervention_periods(log)?
        .into_iter()
        .filter(|p| p.app_id == app_id && days.is_none_or(|r| r.contains(clock.day_of(p.start))))
        .collect();
    let ms: Millis = periods.iter().map(|p| p.end - p.start).sum();
    if ms == 0 {
        return Ok(None);
    }
    let touches = log
        .iter()
        .filter(|e| matches!(e.kind, SessionEventKind::GestureLogged { .. }))
        .filter(|e| periods.iter().any(|p| (p.start..=p.end).contains(&e.t)))
        .count();
    Ok(Some(touches as f64 / (ms as f64 / 60_000.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AfterAcceptance {
    pub non_target_app: u64,
    pub target_app: u64,
    pub screen_close: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    pub non_target_app: f64,
    pub target_app: f64,
    pub screen_close: f64,
}

impl AfterAcceptance {
    pub fn total(&self) -> u64 {
        self.non_target_app + self.target_app + self.screen_close
    }

    /// Shares of each follow-up; `None` for an empty distribution.
    pub fn proportions(&self) -> Option<Proportions> {
        let n = self.total() as f64;
        (self.total() > 0).then(|| Proportions {
            non_target_app: self.non_target_app as f64 / n,
            target_app: self.target_app as f64 / n,
            screen_close: self.screen_close as f64 / n,
        })
    }
}

/// Classifies what immediately followed each accepted (not bypassed)
/// encounter once the user left the app.
pub fn after_acceptance(
    log: &[SessionEvent],
    targets: &BTreeSet<String>,
    days: Option<DayRange>,
    clock: &DayClock,
) -> Result<AfterAcceptance, AnalyticsError> {
    let intervals = foreground_intervals(log)?;
    let mut dist = AfterAcceptance::default();
    for p in intervention_periods(log)? {
        if p.bypassed || !days.is_none_or(|r| r.contains(clock.day_of(p.start))) {
            continue;
        }
        let iv = &intervals[p.interval];
        if iv.ended_by == IntervalEnd::ScreenOff {
            dist.screen_close += 1;
            continue;
        }
        let next = log[iv.end_index + 1..].iter().find_map(|e| match &e.kind {
            SessionEventKind::AppEnter { app_id } => Some(Some(app_id.as_str())),
            SessionEventKind::ScreenOff => Some(None),
            _ => None,
        });
        match next {
            Some(Some(app)) if targets.contains(app) => dist.target_app += 1,
            Some(Some(_)) => dist.non_target_app += 1,
            Some(None) => dist.screen_close += 1,
            None => {}
        }
    }
    Ok(dist)
}

/// Apps that ever had an intervention encounter.
pub fn encountered_apps(log: &[SessionEvent]) -> BTreeSet<String> {
    log.iter()
        .filter_map(|e| match &e.kind {
            SessionEventKind::InterventionEncounter { app_id, .. } => Some(app_id.clone()),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayUsage {
    pub day: i64,
    pub usage_minutes: f64,
    pub opening_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodUsage {
    pub days: DayRange,
    pub mean_daily_usage_minutes: f64,
    pub mean_daily_openings: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppIpm {
    pub app_id: String,
    pub ipm: f64,
    pub class: IpmClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfterAcceptanceReport {
    pub counts: AfterAcceptance,
    pub proportions: Option<Proportions>,
}

/// Full report comparing an intervention period against a base period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageStats {
    pub apps: Option<BTreeSet<String>>,
    pub days: Vec<DayUsage>,
    pub base: PeriodUsage,
    pub period: PeriodUsage,
    pub normalized_usage_ratio: Option<f64>,
    pub normalized_frequency_ratio: Option<f64>,
    pub acceptance: AcceptanceCounts,
    pub acceptance_rate: Option<f64>,
    pub ipm: Vec<AppIpm>,
    pub after_acceptance: AfterAcceptanceReport,
}

fn period_usage(log: &[SessionEvent], apps: Option<&BTreeSet<String>>, days: DayRange, clock: &DayClock) -> Result<(PeriodUsage, Vec<DayUsage>), AnalyticsError> {
    let mut per_day = Vec::new();
    for day in days.days() {
        let d = DayRange::single(day);
        per_day.push(DayUsage {
            day,
            usage_minutes: usage_time(log, apps, d, clock)?,
            opening_count: opening_frequency(log, apps, d, clock),
        });
    }
    let n = days.len().max(1) as f64;
    let usage: f64 = per_day.iter().map(|d| d.usage_minutes).sum();
    let openings: u64 = per_day.iter().map(|d| d.opening_count).sum();
    Ok((
        PeriodUsage { days, mean_daily_usage_minutes: usage / n, mean_daily_openings: openings as f64 / n },
        per_day,
    ))
}

/// Computes every metric for `apps` (all apps when `None`). Receptivity
/// metrics cover encounters that started inside the intervention period;
/// `targets` defaults to the apps that saw an encounter.
pub fn usage_stats(
    log: &[SessionEvent],
    apps: Option<&BTreeSet<String>>,
    base: DayRange,
    period: DayRange,
    clock: &DayClock,
) -> Result<UsageStats, AnalyticsError> {
    let (base_usage, mut days) = period_usage(log, apps, base, clock)?;
    let (period_usage, period_days) = period_usage(log, apps, period, clock)?;
    for d in period_days {
        if !days.iter().any(|x| x.day == d.day) {
            days.push(d);
        }
    }
    days.sort_by_key(|d| d.day);

    let acceptance = acceptance_counts(log, apps, Some(period), clock);
    let mut ipm_rows = Vec::new();
    for app_id in encountered_apps(log).into_iter().filter(|a| selected(apps, a)) {
        if let Some(v) = ipm(log, &app_id, Some(period), clock)? {
            ipm_rows.push(AppIpm { class: ipm_class(v), ipm: v, app_id });
        }
    }
    let targets = apps.cloned().unwrap_or_else(|| encountered_apps(log));
    let counts = after_acceptance(log, &targets, Some(period), clock)?;

    Ok(UsageStats {
        apps: apps.cloned(),
        days,
        normalized_usage_ratio: normalize(period_usage.mean_daily_usage_minutes, base_usage.mean_daily_usage_minutes),
        normalized_frequency_ratio: normalize(period_usage.mean_daily_openings, base_usage.mean_daily_openings),
        base: base_usage,
        period: period_usage,
        acceptance_rate: acceptance.rate(),
        acceptance,
        ipm: ipm_rows,
        after_acceptance: AfterAcceptanceReport { proportions: counts.proportions(), counts },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{BypassOption, GestureKind, GestureSummary, Intervention};

    const MIN: Millis = 60_000;

    fn set(apps: &[&str]) -> BTreeSet<String> {
        apps.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ten_minute_session() {
        let log = [SessionEvent::app_enter(0, "feed"), SessionEvent::app_exit(10 * MIN, "feed")];
        assert_eq!(usage_time(&log, None, DayRange::single(0), &DayClock::default()).unwrap(), 10.0);
    }

    #[test]
    fn overlapping_enter_is_unclosed() {
        let log = [SessionEvent::app_enter(0, "feed"), SessionEvent::app_enter(5, "mail")];
        let err = usage_time(&log, None, DayRange::single(0), &DayClock::default()).unwrap_err();
        assert!(err.to_string().starts_with("unclosed interval"));
    }

    #[test]
    fn opening_counts() {
        let clock = DayClock::default();
        let mut log = Vec::new();
        for i in 0..3 {
            log.push(SessionEvent::app_enter(i * MIN, "feed"));
            log.push(SessionEvent::app_exit(i * MIN + 1, "feed"));
        }
        assert_eq!(opening_frequency(&log, None, DayRange::single(0), &clock), 3);
        assert_eq!(opening_frequency(&[], None, DayRange::single(0), &clock), 0);
    }

    #[test]
    fn normalize_ratios() {
        assert_eq!(normalize(78.0, 100.0), Some(0.78));
        assert_eq!(normalize(5.0, 5.0), Some(1.0));
        assert_eq!(normalize(5.0, 0.0), None);
    }

    #[test]
    fn acceptance_arithmetic() {
        assert_eq!(AcceptanceCounts { encounters: 10, bypasses: 4 }.rate(), Some(0.6));
        assert_eq!(AcceptanceCounts { encounters: 3, bypasses: 0 }.rate(), Some(1.0));
        assert_eq!(AcceptanceCounts::default().rate(), None);
    }

    #[test]
    fn ipm_boundaries() {
        assert_eq!(ipm_class(9.5), IpmClass::Low);
        assert_eq!(ipm_class(10.0), IpmClass::Low);
        assert_eq!(ipm_class(18.0), IpmClass::Medium);
        assert_eq!(ipm_class(18.1), IpmClass::High);
    }

    #[test]
    fn ipm_counts_touches_in_on_period() {
        let g = |t| SessionEvent::gesture(t, GestureSummary { kind: GestureKind::Tap, x: 0.0, y: 0.0, finger_count: 1 });
        let log = vec![
            SessionEvent::app_enter(0, "feed"),
            g(MIN / 2),
            SessionEvent::encounter(MIN, "feed", Intervention::Manipulation),
            g(MIN),
            g(2 * MIN),
            g(3 * MIN),
            SessionEvent::app_exit(3 * MIN, "feed"),
        ];
        assert_eq!(ipm(&log, "feed", None, &DayClock::default()).unwrap(), Some(1.5));
        assert_eq!(ipm(&log, "mail", None, &DayClock::default()).unwrap(), None);
    }

    #[test]
    fn after_acceptance_all_screen_off() {
        let log = vec![
            SessionEvent::app_enter(0, "feed"),
            SessionEvent::encounter(10, "feed", Intervention::Lockout),
            SessionEvent::screen_off(20),
            SessionEvent::app_enter(30, "feed"),
            SessionEvent::encounter(30, "feed", Intervention::Lockout),
            SessionEvent::app_exit(40, "feed"),
            SessionEvent::screen_off(45),
        ];
        let d = after_acceptance(&log, &set(&["feed"]), None, &DayClock::default()).unwrap();
        let p = d.proportions().unwrap();
        assert_eq!((p.non_target_app, p.target_app, p.screen_close), (0.0, 0.0, 1.0));
        assert_eq!(after_acceptance(&[], &set(&["feed"]), None, &DayClock::default()).unwrap().proportions(), None);
    }

    #[test]
    fn bypassed_encounters_are_not_classified() {
        let log = vec![
            SessionEvent::app_enter(0, "feed"),
            SessionEvent::encounter(10, "feed", Intervention::Manipulation),
            SessionEvent::bypass(20, BypassOption::IgnoreToday),
            SessionEvent::app_exit(40, "feed"),
            SessionEvent::app_enter(50, "mail"),
            SessionEvent::app_exit(60, "mail"),
        ];
        let d = after_acceptance(&log, &set(&["feed"]), None, &DayClock::default()).unwrap();
        assert_eq!(d.total(), 0);
    }

    #[test]
    fn day_range_parsing() {
        assert_eq!("0..6".parse::<DayRange>().unwrap(), DayRange::new(0, 6));
        assert!("6..0".parse::<DayRange>().is_err());
        assert!("x".parse::<DayRange>().is_err());
    }
}
