//! Shared vocabulary: raw pointer frames, recognized and virtual gestures,
//! and the session events that make up a usage trace.
//!
//! All times are integer milliseconds on a virtual clock. Coordinates are
//! density-independent pixels (dp).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Virtual-clock time in milliseconds.
pub type Millis = u64;

/// Touch phase of a single pointer frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Down,
    Move,
    Up,
    Cancel,
}

/// One raw touch frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerSample {
    pub pointer_id: u32,
    pub phase: Phase,
    pub x: f64,
    pub y: f64,
    pub t: Millis,
}

impl PointerSample {
    pub fn new(pointer_id: u32, phase: Phase, x: f64, y: f64, t: Millis) -> Self {
        Self { pointer_id, phase, x, y, t }
    }

    pub fn down(pointer_id: u32, x: f64, y: f64, t: Millis) -> Self {
        Self::new(pointer_id, Phase::Down, x, y, t)
    }

    pub fn moved(pointer_id: u32, x: f64, y: f64, t: Millis) -> Self {
        Self::new(pointer_id, Phase::Move, x, y, t)
    }

    pub fn up(pointer_id: u32, x: f64, y: f64, t: Millis) -> Self {
        Self::new(pointer_id, Phase::Up, x, y, t)
    }

    pub fn cancel(pointer_id: u32, x: f64, y: f64, t: Millis) -> Self {
        Self::new(pointer_id, Phase::Cancel, x, y, t)
    }
}

/// A stationary press: the payload of taps and long presses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Press {
    pub x: f64,
    pub y: f64,
    pub t_down: Millis,
    pub duration: Millis,
}

impl Press {
    pub fn end(&self) -> Millis {
        self.t_down + self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub x: f64,
    pub y: f64,
    pub t: Millis,
}

impl TrajectoryPoint {
    pub fn new(x: f64, y: f64, t: Millis) -> Self {
        Self { x, y, t }
    }
}

/// A swipe: an ordered trajectory with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Swipe {
    pub trajectory: Vec<TrajectoryPoint>,
    pub finger_count: u32,
}

impl Swipe {
    pub fn start(&self) -> Millis {
        self.trajectory.first().map_or(0, |p| p.t)
    }

    pub fn end(&self) -> Millis {
        self.trajectory.last().map_or(0, |p| p.t)
    }

    pub fn duration(&self) -> Millis {
        self.end() - self.start()
    }
}

/// A recognized user gesture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gesture {
    Tap(Press),
    DoubleTap { first: Press, second: Press },
    LongPress(Press),
    Swipe(Swipe),
}

/// Coarse gesture category, used for logging and timeline markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GestureKind {
    Tap,
    DoubleTap,
    LongPress,
    Swipe,
}

impl Gesture {
    /// Time at which the gesture's defining pointer sequence completed.
    pub fn completion(&self) -> Millis {
        match self {
            Gesture::Tap(p) | Gesture::LongPress(p) => p.end(),
            Gesture::DoubleTap { second, .. } => second.end(),
            Gesture::Swipe(s) => s.end(),
        }
    }

    pub fn start(&self) -> Millis {
        match self {
            Gesture::Tap(p) | Gesture::LongPress(p) => p.t_down,
            Gesture::DoubleTap { first, .. } => first.t_down,
            Gesture::Swipe(s) => s.start(),
        }
    }

    pub fn kind(&self) -> GestureKind {
        match self {
            Gesture::Tap(_) => GestureKind::Tap,
            Gesture::DoubleTap { .. } => GestureKind::DoubleTap,
            Gesture::LongPress(_) => GestureKind::LongPress,
            Gesture::Swipe(_) => GestureKind::Swipe,
        }
    }

    pub fn summary(&self) -> GestureSummary {
        let (x, y, finger_count) = match self {
            Gesture::Tap(p) | Gesture::LongPress(p) => (p.x, p.y, 1),
            Gesture::DoubleTap { first, .. } => (first.x, first.y, 1),
            Gesture::Swipe(s) => {
                let p = s.trajectory.first().copied().unwrap_or(TrajectoryPoint::new(0.0, 0.0, 0));
                (p.x, p.y, s.finger_count)
            }
        };
        GestureSummary { kind: self.kind(), x, y, finger_count }
    }

    /// Checks the structural invariants of a gesture value.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Gesture::Tap(_) | Gesture::LongPress(_) => true,
            Gesture::DoubleTap { first, second } => second.t_down > first.end(),
            Gesture::Swipe(s) => {
                s.finger_count >= 1
                    && s.trajectory.len() >= 2
                    && s.trajectory.windows(2).all(|w| w[0].t < w[1].t)
            }
        }
    }
}

/// The gesture the proxy hands to the application layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualGesture {
    pub gesture: Gesture,
    pub dispatch_at: Millis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureSummary {
    pub kind: GestureKind,
    pub x: f64,
    pub y: f64,
    pub finger_count: u32,
}

/// Screen extent in dp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Screen {
    pub width: f64,
    pub height: f64,
}

impl Screen {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(0.0, self.width), y.clamp(0.0, self.height))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }
}

impl Default for Screen {
    fn default() -> Self {
        Self::new(411.0, 891.0)
    }
}

impl fmt::Display for Screen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid screen descriptor {0:?}: expected WxH with positive dp extents")]
pub struct ScreenParseError(pub String);

impl FromStr for Screen {
    type Err = ScreenParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ScreenParseError(s.to_string());
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(err)?;
        let width: f64 = w.trim().parse().map_err(|_| err())?;
        let height: f64 = h.trim().parse().map_err(|_| err())?;
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(err());
        }
        Ok(Screen { width, height })
    }
}

/// Which family of intervention produced an encounter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Intervention {
    /// Gesture rewriting (delay, prolong, shift, ...).
    Manipulation,
    /// Timed lockout: every gesture is blocked behind a blocking screen.
    Lockout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BypassOption {
    OneMinute,
    FifteenMinutes,
    IgnoreToday,
}

impl BypassOption {
    /// Pause length, or `None` for the rest of the day.
    pub fn pause_ms(self) -> Option<Millis> {
        match self {
            BypassOption::OneMinute => Some(60_000),
            BypassOption::FifteenMinutes => Some(900_000),
            BypassOption::IgnoreToday => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SessionEventKind {
    AppEnter { app_id: String },
    AppExit { app_id: String },
    ScreenOff,
    InterventionEncounter { app_id: String, intervention: Intervention },
    Bypass { option: BypassOption },
    GestureLogged { gesture_summary: GestureSummary },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub t: Millis,
    pub kind: SessionEventKind,
}

impl SessionEvent {
    pub fn new(t: Millis, kind: SessionEventKind) -> Self {
        Self { t, kind }
    }

    pub fn app_enter(t: Millis, app: &str) -> Self {
        Self::new(t, SessionEventKind::AppEnter { app_id: app.to_string() })
    }

    pub fn app_exit(t: Millis, app: &str) -> Self {
        Self::new(t, SessionEventKind::AppExit { app_id: app.to_string() })
    }

    pub fn screen_off(t: Millis) -> Self {
        Self::new(t, SessionEventKind::ScreenOff)
    }

    pub fn encounter(t: Millis, app: &str, intervention: Intervention) -> Self {
        Self::new(
            t,
            SessionEventKind::InterventionEncounter { app_id: app.to_string(), intervention },
        )
    }

    pub fn bypass(t: Millis, option: BypassOption) -> Self {
        Self::new(t, SessionEventKind::Bypass { option })
    }

    pub fn gesture(t: Millis, gesture_summary: GestureSummary) -> Self {
        Self::new(t, SessionEventKind::GestureLogged { gesture_summary })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    MoveBeforeDown,
    UpBeforeDown,
    CancelBeforeDown,
    DownWhileDown,
    NonMonotonic,
    Unterminated,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::MoveBeforeDown => "Move before Down",
            ViolationKind::UpBeforeDown => "Up before Down",
            ViolationKind::CancelBeforeDown => "Cancel before Down",
            ViolationKind::DownWhileDown => "Down while already down",
            ViolationKind::NonMonotonic => "non-monotonic t",
            ViolationKind::Unterminated => "pointer never lifted",
        })
    }
}

/// First invariant violation found in a pointer stream.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("sample {index} (pointer {pointer_id}): {kind}")]
pub struct StreamViolation {
    pub index: usize,
    pub pointer_id: u32,
    pub kind: ViolationKind,
}

/// Checks the phase grammar `Down Move* (Up | Cancel)` per pointer and
/// timestamp ordering across the whole stream.
pub fn validate_stream(samples: &[PointerSample]) -> Result<(), StreamViolation> {
    let mut down: BTreeMap<u32, usize> = BTreeMap::new();
    let mut last_t: Option<Millis> = None;
    for (index, s) in samples.iter().enumerate() {
        let violation = |kind| StreamViolation { index, pointer_id: s.pointer_id, kind };
        if last_t.is_some_and(|t| s.t < t) {
            return Err(violation(ViolationKind::NonMonotonic));
        }
        last_t = Some(s.t);
        let is_down = down.contains_key(&s.pointer_id);
        match (s.phase, is_down) {
            (Phase::Down, true) => return Err(violation(ViolationKind::DownWhileDown)),
            (Phase::Down, false) => {
                down.insert(s.pointer_id, index);
            }
            (Phase::Move, false) => return Err(violation(ViolationKind::MoveBeforeDown)),
            (Phase::Up, false) => return Err(violation(ViolationKind::UpBeforeDown)),
            (Phase::Cancel, false) => return Err(violation(ViolationKind::CancelBeforeDown)),
            (Phase::Move, true) => {}
            (Phase::Up | Phase::Cancel, true) => {
                down.remove(&s.pointer_id);
            }
        }
    }
    if let Some((&pointer_id, &index)) = down.iter().min_by_key(|(_, &i)| i) {
        return Err(StreamViolation { index, pointer_id, kind: ViolationKind::Unterminated });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_tap_stream_is_legal() {
        let s = [PointerSample::down(0, 0.0, 0.0, 0), PointerSample::up(0, 0.0, 0.0, 50)];
        assert_eq!(validate_stream(&s), Ok(()));
    }

    #[test]
    fn move_before_down() {
        let err = validate_stream(&[PointerSample::moved(0, 0.0, 0.0, 0)]).unwrap_err();
        assert_eq!(err.kind, ViolationKind::MoveBeforeDown);
        assert_eq!(err.kind.to_string(), "Move before Down");
    }

    #[test]
    fn non_monotonic_timestamps() {
        let s = [PointerSample::down(0, 0.0, 0.0, 10), PointerSample::down(0, 0.0, 0.0, 5)];
        let err = validate_stream(&s).unwrap_err();
        assert_eq!(err.kind, ViolationKind::NonMonotonic);
        assert_eq!(err.index, 1);
        assert_eq!(err.kind.to_string(), "non-monotonic t");
    }

    #[test]
    fn unterminated_pointer() {
        let s = [PointerSample::down(3, 0.0, 0.0, 0), PointerSample::moved(3, 1.0, 0.0, 4)];
        let err = validate_stream(&s).unwrap_err();
        assert_eq!(err.kind, ViolationKind::Unterminated);
        assert_eq!(err.pointer_id, 3);
    }

    #[test]
    fn interleaved_pointers() {
        let s = [
            PointerSample::down(0, 0.0, 0.0, 0),
            PointerSample::down(1, 5.0, 0.0, 2),
            PointerSample::up(0, 0.0, 0.0, 5),
            PointerSample::cancel(1, 5.0, 0.0, 5),
        ];
        assert!(validate_stream(&s).is_ok());
    }

    #[test]
    fn screen_parsing() {
        assert_eq!("400x800".parse::<Screen>().unwrap(), Screen::new(400.0, 800.0));
        assert!("400".parse::<Screen>().is_err());
        assert!("0x800".parse::<Screen>().is_err());
    }

    #[test]
    fn double_tap_well_formedness() {
        let a = Press { x: 0.0, y: 0.0, t_down: 0, duration: 50 };
        let b = Press { t_down: 50, ..a };
        assert!(!Gesture::DoubleTap { first: a, second: b }.is_well_formed());
        let c = Press { t_down: 51, ..a };
        assert!(Gesture::DoubleTap { first: a, second: c }.is_well_formed());
    }
}
