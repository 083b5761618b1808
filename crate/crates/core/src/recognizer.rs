//! Streaming gesture recognizer.
//!
//! Pointer samples are grouped into *contacts*: a contact opens with the first
//! Down while no pointer is down and closes when the last pointer lifts. Each
//! closed contact yields at most one gesture:
//!
//! * no pointer strayed more than `tap_max_movement` from its own Down point:
//!   a `Tap` (duration up to `tap_max_duration`) or a `LongPress`;
//! * otherwise, if the furthest excursion reaches `swipe_min_displacement`
//!   and the centroid trajectory has at least two distinct timestamps: a
//!   `Swipe` whose `finger_count` is the peak number of simultaneous pointers;
//! * otherwise nothing. A contact containing a Cancel yields nothing.
//!
//! With double-tap recognition enabled, a tap is held back until the next
//! recognized gesture or until `double_tap_window` elapses, so that two close
//! taps can be merged into a `DoubleTap`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::event::{Gesture, Millis, Phase, PointerSample, Press, Swipe, TrajectoryPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecognizerConfig {
    pub tap_max_movement: f64,
    pub tap_max_duration: Millis,
    pub double_tap_window: Millis,
    pub double_tap_max_distance: f64,
    pub swipe_min_displacement: f64,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        Self {
            tap_max_movement: 10.0,
            tap_max_duration: 500,
            double_tap_window: 300,
            double_tap_max_distance: 50.0,
            swipe_min_displacement: 10.0,
        }
    }
}

/// False for zero, negatives and NaN.
fn positive(v: f64) -> bool {
    v > 0.0
}

impl RecognizerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !positive(self.tap_max_movement) {
            return Err(ConfigError::RecognizerThreshold("tap_max_movement"));
        }
        if self.tap_max_duration == 0 {
            return Err(ConfigError::RecognizerThreshold("tap_max_duration"));
        }
        if self.double_tap_window == 0 {
            return Err(ConfigError::RecognizerThreshold("double_tap_window"));
        }
        if !positive(self.double_tap_max_distance) {
            return Err(ConfigError::RecognizerThreshold("double_tap_max_distance"));
        }
        if !positive(self.swipe_min_displacement) {
            return Err(ConfigError::RecognizerThreshold("swipe_min_displacement"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecognizerError {
    #[error("pointer {pointer_id}: illegal {phase:?} (pointer is {state})")]
    IllegalTransition { pointer_id: u32, phase: Phase, state: &'static str },
    #[error("pointer {pointer_id}: timestamp {t} precedes {last}")]
    NonMonotonic { pointer_id: u32, t: Millis, last: Millis },
    #[error("clock moved backwards to {now} (last seen {last})")]
    ClockBackwards { now: Millis, last: Millis },
}

#[derive(Debug, Clone)]
struct Track {
    down: (f64, f64),
    pos: (f64, f64),
}

#[derive(Debug, Clone)]
struct Contact {
    start: Millis,
    origin: (f64, f64),
    active: BTreeMap<u32, Track>,
    peak_pointers: usize,
    max_excursion: f64,
    cancelled: bool,
    trajectory: Vec<TrajectoryPoint>,
    /// Pointers lifted at `lifted_at`; they still count toward that frame.
    lifted: Vec<(f64, f64)>,
    lifted_at: Millis,
}

impl Contact {
    fn open(s: &PointerSample) -> Self {
        Self {
            start: s.t,
            origin: (s.x, s.y),
            active: BTreeMap::new(),
            peak_pointers: 0,
            max_excursion: 0.0,
            cancelled: false,
            trajectory: Vec::new(),
            lifted: Vec::new(),
            lifted_at: s.t,
        }
    }

    /// Records one frame of the centroid of every pointer down at `t`,
    /// including those lifting at `t`.
    fn push_frame(&mut self, t: Millis) {
        if self.lifted_at != t {
            self.lifted.clear();
        }
        let points = self.active.values().map(|tr| tr.pos).chain(self.lifted.iter().copied());
        let n = (self.active.len() + self.lifted.len()) as f64;
        let (sx, sy) = points.fold((0.0, 0.0), |(ax, ay), p| (ax + p.0, ay + p.1));
        let point = TrajectoryPoint::new(sx / n, sy / n, t);
        match self.trajectory.last_mut() {
            Some(last) if last.t == t => *last = point,
            _ => self.trajectory.push(point),
        }
    }

    fn update(&mut self, s: &PointerSample) {
        if let Some(track) = self.active.get_mut(&s.pointer_id) {
            track.pos = (s.x, s.y);
            let d = (s.x - track.down.0).hypot(s.y - track.down.1);
            if d > self.max_excursion {
                self.max_excursion = d;
            }
        }
    }

    fn classify(self, end: Millis, config: &RecognizerConfig) -> Option<Gesture> {
        if self.cancelled {
            return None;
        }
        if self.max_excursion <= config.tap_max_movement {
            let press = Press { x: self.origin.0, y: self.origin.1, t_down: self.start, duration: end - self.start };
            return Some(if press.duration <= config.tap_max_duration {
                Gesture::Tap(press)
            } else {
                Gesture::LongPress(press)
            });
        }
        if self.max_excursion >= config.swipe_min_displacement && self.trajectory.len() >= 2 {
            return Some(Gesture::Swipe(Swipe {
                trajectory: self.trajectory,
                finger_count: self.peak_pointers as u32,
            }));
        }
        None
    }
}

/// Incremental recognizer. One instance per session; not shared.
#[derive(Debug, Clone)]
pub struct Recognizer {
    config: RecognizerConfig,
    double_tap: bool,
    last_t: Option<Millis>,
    contact: Option<Contact>,
    pending: Option<Press>,
}

impl Recognizer {
    pub fn new(config: RecognizerConfig) -> Self {
        Self { config, double_tap: false, last_t: None, contact: None, pending: None }
    }

    pub fn with_double_tap(mut self, enabled: bool) -> Self {
        self.double_tap = enabled;
        self
    }

    pub fn config(&self) -> &RecognizerConfig {
        &self.config
    }

    pub fn double_tap_enabled(&self) -> bool {
        self.double_tap
    }

    /// Turns double-tap buffering on or off. Disabling releases any held tap.
    pub fn set_double_tap(&mut self, enabled: bool) -> Vec<Gesture> {
        self.double_tap = enabled;
        if enabled {
            return Vec::new();
        }
        self.pending.take().map(Gesture::Tap).into_iter().collect()
    }

    /// True while at least one pointer is down.
    pub fn in_contact(&self) -> bool {
        self.contact.is_some()
    }

    /// The instant at which a held tap will be released if nothing else
    /// happens, i.e. the first millisecond after its double-tap window.
    pub fn pending_deadline(&self) -> Option<Millis> {
        match (&self.pending, &self.contact) {
            (Some(p), None) => Some(p.end() + self.config.double_tap_window + 1),
            _ => None,
        }
    }

    fn window_expired(&self, now: Millis) -> bool {
        self.pending_deadline().is_some_and(|d| now >= d)
    }

    /// Feeds one sample; returns gestures completed by it, in completion order.
    pub fn feed(&mut self, s: &PointerSample) -> Result<Vec<Gesture>, RecognizerError> {
        if let Some(last) = self.last_t {
            if s.t < last {
                return Err(RecognizerError::NonMonotonic { pointer_id: s.pointer_id, t: s.t, last });
            }
        }
        let is_down = self.contact.as_ref().is_some_and(|c| c.active.contains_key(&s.pointer_id));
        let illegal = |state| RecognizerError::IllegalTransition { pointer_id: s.pointer_id, phase: s.phase, state };
        match (s.phase, is_down) {
            (Phase::Down, true) => return Err(illegal("already down")),
            (Phase::Move | Phase::Up | Phase::Cancel, false) => return Err(illegal("not down")),
            _ => {}
        }
        self.last_t = Some(s.t);

        let mut out = Vec::new();
        if self.window_expired(s.t) {
            out.extend(self.pending.take().map(Gesture::Tap));
        }

        match s.phase {
            Phase::Down => {
                let contact = self.contact.get_or_insert_with(|| Contact::open(s));
                contact.active.insert(s.pointer_id, Track { down: (s.x, s.y), pos: (s.x, s.y) });
                contact.peak_pointers = contact.peak_pointers.max(contact.active.len());
                contact.push_frame(s.t);
            }
            Phase::Move => {
                let contact = self.contact.as_mut().expect("pointer is down");
                contact.update(s);
                contact.push_frame(s.t);
            }
            Phase::Up => {
                let contact = self.contact.as_mut().expect("pointer is down");
                contact.update(s);
                contact.active.remove(&s.pointer_id);
                if contact.lifted_at != s.t {
                    contact.lifted.clear();
                    contact.lifted_at = s.t;
                }
                contact.lifted.push((s.x, s.y));
                contact.push_frame(s.t);
            }
            Phase::Cancel => {
                let contact = self.contact.as_mut().expect("pointer is down");
                contact.active.remove(&s.pointer_id);
                contact.cancelled = true;
            }
        }

        if self.contact.as_ref().is_some_and(|c| c.active.is_empty()) {
            let contact = self.contact.take().expect("checked above");
            if let Some(g) = contact.classify(s.t, &self.config) {
                self.resolve(g, &mut out);
            }
        }
        Ok(out)
    }

    fn resolve(&mut self, g: Gesture, out: &mut Vec<Gesture>) {
        match g {
            Gesture::Tap(tap) if self.double_tap => {
                if let Some(first) = self.pending.take() {
                    if self.pairs(&first, &tap) {
                        out.push(Gesture::DoubleTap { first, second: tap });
                        return;
                    }
                    out.push(Gesture::Tap(first));
                }
                self.pending = Some(tap);
            }
            other => {
                out.extend(self.pending.take().map(Gesture::Tap));
                out.push(other);
            }
        }
    }

    fn pairs(&self, first: &Press, second: &Press) -> bool {
        let end = first.end();
        second.t_down > end
            && second.t_down - end <= self.config.double_tap_window
            && (second.x - first.x).hypot(second.y - first.y) <= self.config.double_tap_max_distance
    }

    /// Advances the clock without input, releasing a held tap whose
    /// double-tap window closed before `now`.
    pub fn advance_clock(&mut self, now: Millis) -> Result<Vec<Gesture>, RecognizerError> {
        if let Some(last) = self.last_t {
            if now < last {
                return Err(RecognizerError::ClockBackwards { now, last });
            }
        }
        self.last_t = Some(now);
        if self.window_expired(now) {
            return Ok(self.pending.take().map(Gesture::Tap).into_iter().collect());
        }
        Ok(Vec::new())
    }
}
