//! Gesture rewriting: the eight manipulation strategies and the lockout
//! filter.
//!
//! Each strategy is a small pure function over one gesture. [`rewrite`]
//! selects the single strategy that applies to the gesture's category, and
//! [`apply`] runs a batch through it, returning dispatches ordered by
//! `dispatch_at` (FIFO among ties).

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, InterventionConfig, RelativeRect, ShiftVector, SwipeStrategy, TapStrategy};
use crate::event::{Gesture, Millis, Press, Screen, Swipe, TrajectoryPoint, VirtualGesture};
use crate::scheduler::Intensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SuppressReason {
    /// Tap shorter than the prolong threshold.
    TooShort,
    /// Single tap while taps must be doubled.
    SingleTap,
    /// Swipe with fewer fingers than required.
    TooFewFingers,
}

/// What became of one recognized gesture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Dispatched(VirtualGesture),
    Suppressed(SuppressReason),
    /// Consumed by the lockout blocking screen.
    Blocked,
    /// Lockout: tap landed on the bypass control; routed to the bypass menu.
    BypassMenu,
}

fn dispatch(gesture: Gesture, base: Millis, delay: Millis) -> VirtualGesture {
    VirtualGesture { gesture, dispatch_at: base + delay }
}

/// Postpones a tap by `delay`.
pub fn tap_delay(tap: &Press, delay: Millis, now: Millis) -> VirtualGesture {
    dispatch(Gesture::Tap(*tap), tap.end().max(now), delay)
}

/// Passes the tap iff it was held for at least `threshold`.
pub fn tap_prolong(tap: &Press, threshold: Millis, now: Millis) -> Outcome {
    if tap.duration >= threshold {
        Outcome::Dispatched(dispatch(Gesture::Tap(*tap), tap.end().max(now), 0))
    } else {
        Outcome::Suppressed(SuppressReason::TooShort)
    }
}

/// Moves the tap by a fixed vector, clamped to the screen.
pub fn tap_shift(tap: &Press, shift: ShiftVector, screen: &Screen, now: Millis) -> VirtualGesture {
    let (x, y) = screen.clamp(tap.x + shift.dx, tap.y + shift.dy);
    dispatch(Gesture::Tap(Press { x, y, ..*tap }), tap.end().max(now), 0)
}

/// A double tap becomes a single tap at the first tap's location (timed as
/// the second tap); a lone tap is dropped.
pub fn tap_double_remap(g: &Gesture, now: Millis) -> Outcome {
    match g {
        Gesture::DoubleTap { first, second } => {
            let tap = Press { x: first.x, y: first.y, ..*second };
            Outcome::Dispatched(dispatch(Gesture::Tap(tap), g.completion().max(now), 0))
        }
        Gesture::Tap(_) => Outcome::Suppressed(SuppressReason::SingleTap),
        other => Outcome::Dispatched(dispatch(other.clone(), other.completion().max(now), 0)),
    }
}

/// Postpones a swipe by `delay`.
pub fn swipe_delay(swipe: &Swipe, delay: Millis, now: Millis) -> VirtualGesture {
    dispatch(Gesture::Swipe(swipe.clone()), swipe.end().max(now), delay)
}

/// Slows a swipe: same path, every time offset from the start divided by
/// `factor`, so velocity scales by `factor`.
pub fn swipe_decelerate(swipe: &Swipe, factor: f64, now: Millis) -> Result<VirtualGesture, ConfigError> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(ConfigError::DecelerationOutOfRange(factor.to_string()));
    }
    let t0 = swipe.start();
    let trajectory = swipe
        .trajectory
        .iter()
        .map(|p| TrajectoryPoint { t: t0 + ((p.t - t0) as f64 / factor).round() as Millis, ..*p })
        .collect();
    let slowed = Swipe { trajectory, finger_count: swipe.finger_count };
    Ok(dispatch(Gesture::Swipe(slowed), swipe.end().max(now), 0))
}

/// Reflects every point about the swipe's start point, clamped to the screen.
pub fn swipe_reverse(swipe: &Swipe, screen: &Screen, now: Millis) -> VirtualGesture {
    let Some(origin) = swipe.trajectory.first().copied() else {
        return dispatch(Gesture::Swipe(swipe.clone()), now, 0);
    };
    let trajectory = swipe
        .trajectory
        .iter()
        .map(|p| {
            let (x, y) = screen.clamp(2.0 * origin.x - p.x, 2.0 * origin.y - p.y);
            TrajectoryPoint { x, y, t: p.t }
        })
        .collect();
    let reversed = Swipe { trajectory, finger_count: swipe.finger_count };
    dispatch(Gesture::Swipe(reversed), swipe.end().max(now), 0)
}

/// Requires at least `threshold` fingers; qualifying swipes are replayed as
/// a one-finger swipe along the centroid path. A threshold of 1 is neutral.
pub fn swipe_multi_finger(swipe: &Swipe, threshold: u32, now: Millis) -> Outcome {
    if swipe.finger_count < threshold {
        return Outcome::Suppressed(SuppressReason::TooFewFingers);
    }
    let finger_count = if threshold <= 1 { swipe.finger_count } else { 1 };
    let centroid = Swipe { trajectory: swipe.trajectory.clone(), finger_count };
    Outcome::Dispatched(dispatch(Gesture::Swipe(centroid), swipe.end().max(now), 0))
}

/// Lockout: everything is consumed while blocked, except taps on the bypass
/// control, which are routed to the bypass menu.
pub fn lockout_filter(g: &Gesture, blocked: bool, region: &RelativeRect, screen: &Screen, now: Millis) -> Outcome {
    if !blocked {
        return Outcome::Dispatched(dispatch(g.clone(), g.completion().max(now), 0));
    }
    match g {
        Gesture::Tap(p) if region.contains(screen, p.x, p.y) => Outcome::BypassMenu,
        _ => Outcome::Blocked,
    }
}

/// Everything a rewrite needs besides the gesture itself.
#[derive(Debug, Clone, Copy)]
pub struct Pipeline<'a> {
    pub config: &'a InterventionConfig,
    pub intensity: Intensity,
    pub screen: Screen,
    /// Lockout blocking screen is up.
    pub blocked: bool,
}

impl<'a> Pipeline<'a> {
    pub fn new(config: &'a InterventionConfig, intensity: Intensity, screen: Screen) -> Self {
        Self { config, intensity, screen, blocked: false }
    }
}

/// Rewrites one gesture recognized at `now` under the pipeline's strategy.
pub fn rewrite(p: &Pipeline<'_>, g: &Gesture, now: Millis) -> Result<Outcome, ConfigError> {
    if p.config.lockout_enabled {
        return Ok(lockout_filter(g, p.blocked, &p.config.lockout_bypass_region, &p.screen, now));
    }
    let pass = || Outcome::Dispatched(dispatch(g.clone(), g.completion().max(now), 0));
    let out = match g {
        // Long presses are never manipulated.
        Gesture::LongPress(_) => pass(),
        Gesture::Tap(tap) => match p.config.tap_strategy {
            TapStrategy::None => pass(),
            TapStrategy::Delay => Outcome::Dispatched(tap_delay(tap, p.intensity.tap_delay, now)),
            TapStrategy::Prolong => tap_prolong(tap, p.intensity.tap_threshold, now),
            TapStrategy::Shift => Outcome::Dispatched(tap_shift(tap, p.config.shift_vector, &p.screen, now)),
            TapStrategy::Double => tap_double_remap(g, now),
        },
        Gesture::DoubleTap { .. } => match p.config.tap_strategy {
            TapStrategy::Double => tap_double_remap(g, now),
            _ => pass(),
        },
        Gesture::Swipe(swipe) => match p.config.swipe_strategy {
            SwipeStrategy::None => pass(),
            SwipeStrategy::Delay => Outcome::Dispatched(swipe_delay(swipe, p.intensity.swipe_delay, now)),
            SwipeStrategy::Decelerate => Outcome::Dispatched(swipe_decelerate(swipe, p.intensity.decel_factor, now)?),
            SwipeStrategy::Reverse => Outcome::Dispatched(swipe_reverse(swipe, &p.screen, now)),
            SwipeStrategy::MultiFinger => swipe_multi_finger(swipe, p.config.finger_threshold, now),
        },
    };
    Ok(out)
}

/// Rewrites a batch of `(gesture, recognized_at)` pairs and returns the
/// dispatched gestures sorted by `dispatch_at`, FIFO among ties.
pub fn apply(p: &Pipeline<'_>, gestures: &[(Gesture, Millis)]) -> Result<Vec<VirtualGesture>, ConfigError> {
    let mut out = Vec::with_capacity(gestures.len());
    for (g, now) in gestures {
        if let Outcome::Dispatched(v) = rewrite(p, g, *now)? {
            out.push(v);
        }
    }
    // Stable sort keeps arrival order among equal dispatch times.
    out.sort_by_key(|v| v.dispatch_at);
    Ok(out)
}
