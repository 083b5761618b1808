//! Intensity ramp for the manipulation parameters.
//!
//! Every ramped parameter starts at zero effect and moves one step per user
//! operation, plus one step per full idle interval without operations.
//! Delays and the prolong threshold grow linearly; the deceleration factor
//! shrinks geometrically. Tap shift is not ramped.

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, InterventionConfig, SwipeStrategy, TapStrategy};
use crate::event::Millis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    pub tap_delay_step: Millis,
    pub tap_threshold_step: Millis,
    pub swipe_delay_step: Millis,
    pub decel_step_factor: f64,
    pub idle_step_interval: Millis,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            tap_delay_step: 10,
            tap_threshold_step: 10,
            swipe_delay_step: 10,
            // 4^(-1/100): one hundred steps take the factor from 1 to 1/4.
            decel_step_factor: 4f64.powf(-0.01),
            idle_step_interval: 60_000,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tap_delay_step == 0 || self.tap_threshold_step == 0 || self.swipe_delay_step == 0 {
            return Err(ConfigError::Scheduler("linear steps must be positive"));
        }
        if !(self.decel_step_factor > 0.0 && self.decel_step_factor < 1.0) {
            return Err(ConfigError::Scheduler("decel_step_factor must lie in (0, 1)"));
        }
        if self.idle_step_interval == 0 {
            return Err(ConfigError::Scheduler("idle_step_interval must be positive"));
        }
        Ok(())
    }
}

/// Step counters and the intensities they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub k_tap: u32,
    pub k_swipe: u32,
    pub k_decel: u32,
    pub last_activity: Millis,
    pub tap_delay: Millis,
    pub tap_threshold: Millis,
    pub swipe_delay: Millis,
    pub decel_factor: f64,
}

/// Current parameter values handed to the manipulation engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intensity {
    pub tap_delay: Millis,
    pub tap_threshold: Millis,
    pub swipe_delay: Millis,
    pub decel_factor: f64,
}

impl Intensity {
    /// No effect from any ramped parameter.
    pub const ZERO: Intensity = Intensity { tap_delay: 0, tap_threshold: 0, swipe_delay: 0, decel_factor: 1.0 };

    /// Full configured maxima, bypassing the ramp.
    pub fn saturated(config: &InterventionConfig) -> Self {
        Self {
            tap_delay: config.tap_delay_max,
            tap_threshold: config.tap_threshold_max,
            swipe_delay: config.swipe_delay_max,
            decel_factor: config.decelerate_min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Maxima {
    tap_delay: Millis,
    tap_threshold: Millis,
    swipe_delay: Millis,
    decel_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TapRamp {
    Off,
    Delay,
    Threshold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scheduler {
    config: SchedulerConfig,
    maxima: Maxima,
    tap_ramp: TapRamp,
    swipe_ramp: bool,
    decel_ramp: bool,
    state: SchedulerState,
}

fn linear(k: u32, step: Millis, max: Millis) -> Millis {
    (u64::from(k).saturating_mul(step)).min(max)
}

impl Scheduler {
    pub fn new(config: SchedulerConfig, intervention: &InterventionConfig, now: Millis) -> Self {
        let mut s = Self {
            config,
            maxima: Maxima { tap_delay: 0, tap_threshold: 0, swipe_delay: 0, decel_min: 1.0 },
            tap_ramp: TapRamp::Off,
            swipe_ramp: false,
            decel_ramp: false,
            state: SchedulerState {
                k_tap: 0,
                k_swipe: 0,
                k_decel: 0,
                last_activity: now,
                tap_delay: 0,
                tap_threshold: 0,
                swipe_delay: 0,
                decel_factor: 1.0,
            },
        };
        s.configure(intervention);
        s
    }

    /// Picks up new maxima and strategy selection, keeping step counts.
    pub fn configure(&mut self, intervention: &InterventionConfig) {
        self.maxima = Maxima {
            tap_delay: intervention.tap_delay_max,
            tap_threshold: intervention.tap_threshold_max,
            swipe_delay: intervention.swipe_delay_max,
            decel_min: intervention.decelerate_min,
        };
        self.tap_ramp = match intervention.tap_strategy {
            TapStrategy::Delay => TapRamp::Delay,
            TapStrategy::Prolong => TapRamp::Threshold,
            _ => TapRamp::Off,
        };
        self.swipe_ramp = intervention.swipe_strategy == SwipeStrategy::Delay;
        self.decel_ramp = intervention.swipe_strategy == SwipeStrategy::Decelerate;
        self.refresh();
    }

    pub fn state(&self) -> &SchedulerState {
        &self.state
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.config
    }

    pub fn intensity(&self) -> Intensity {
        Intensity {
            tap_delay: self.state.tap_delay,
            tap_threshold: self.state.tap_threshold,
            swipe_delay: self.state.swipe_delay,
            decel_factor: self.state.decel_factor,
        }
    }

    fn decel_at(&self, k: u32) -> f64 {
        let f = self.config.decel_step_factor.powi(k as i32);
        // Snap to the floor once within rounding distance so saturation is exact.
        if f <= self.maxima.decel_min * (1.0 + 1e-9) {
            self.maxima.decel_min
        } else {
            f
        }
    }

    fn refresh(&mut self) {
        let k_tap = self.state.k_tap;
        self.state.tap_delay = linear(k_tap, self.config.tap_delay_step, self.maxima.tap_delay);
        self.state.tap_threshold = linear(k_tap, self.config.tap_threshold_step, self.maxima.tap_threshold);
        self.state.swipe_delay = linear(self.state.k_swipe, self.config.swipe_delay_step, self.maxima.swipe_delay);
        self.state.decel_factor = self.decel_at(self.state.k_decel);
    }

    fn tap_saturated(&self) -> bool {
        match self.tap_ramp {
            TapRamp::Off => true,
            TapRamp::Delay => self.state.tap_delay >= self.maxima.tap_delay,
            TapRamp::Threshold => self.state.tap_threshold >= self.maxima.tap_threshold,
        }
    }

    /// True when no active counter can move any further.
    pub fn saturated(&self) -> bool {
        self.tap_saturated()
            && (!self.swipe_ramp || self.state.swipe_delay >= self.maxima.swipe_delay)
            && (!self.decel_ramp || self.state.decel_factor <= self.maxima.decel_min)
    }

    /// Applies one step to every active, unsaturated counter.
    fn step(&mut self) {
        if !self.tap_saturated() {
            self.state.k_tap += 1;
        }
        if self.swipe_ramp && self.state.swipe_delay < self.maxima.swipe_delay {
            self.state.k_swipe += 1;
        }
        if self.decel_ramp && self.state.decel_factor > self.maxima.decel_min {
            self.state.k_decel += 1;
        }
        self.refresh();
    }

    /// A user operation (any touch, including suppressed ones).
    pub fn on_operation(&mut self, now: Millis) {
        self.step();
        self.state.last_activity = self.state.last_activity.max(now);
    }

    /// Applies one step per full idle interval since the last step.
    pub fn on_tick(&mut self, now: Millis) {
        let interval = self.config.idle_step_interval;
        let idle = now.saturating_sub(self.state.last_activity);
        let steps = idle / interval;
        if steps == 0 {
            return;
        }
        self.state.last_activity += steps * interval;
        for _ in 0..steps {
            if self.saturated() {
                break;
            }
            self.step();
        }
    }

    /// Restarts the ramp from zero.
    pub fn reset(&mut self, now: Millis) {
        self.state.k_tap = 0;
        self.state.k_swipe = 0;
        self.state.k_decel = 0;
        self.state.last_activity = now;
        self.refresh();
    }

    /// Resumes after a pause without counting the paused time as idle.
    pub fn resume(&mut self, now: Millis) {
        self.state.last_activity = self.state.last_activity.max(now);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramped(tap: TapStrategy, swipe: SwipeStrategy) -> Scheduler {
        let cfg = InterventionConfig::field().with_strategies(tap, swipe);
        Scheduler::new(SchedulerConfig::default(), &cfg, 0)
    }

    #[test]
    fn tap_delay_saturates_at_one_hundred_operations() {
        let mut s = ramped(TapStrategy::Delay, SwipeStrategy::None);
        for i in 0..99 {
            s.on_operation(i);
        }
        assert_eq!(s.state().tap_delay, 990);
        s.on_operation(99);
        assert_eq!(s.state().tap_delay, 1000);
        s.on_operation(100);
        assert_eq!(s.state().k_tap, 100);
        assert_eq!(s.state().tap_delay, 1000);
    }

    #[test]
    fn swipe_delay_saturates_at_eighty() {
        let mut s = ramped(TapStrategy::None, SwipeStrategy::Delay);
        for i in 0..80 {
            s.on_operation(i);
        }
        assert_eq!(s.state().swipe_delay, 800);
        assert_eq!(s.state().k_swipe, 80);
        assert_eq!(s.state().k_tap, 0);
    }

    #[test]
    fn deceleration_reaches_quarter_exactly() {
        let mut s = ramped(TapStrategy::None, SwipeStrategy::Decelerate);
        for i in 0..100 {
            s.on_operation(i);
        }
        assert_eq!(s.state().decel_factor, 0.25);
        assert_eq!(s.state().k_decel, 100);
    }

    #[test]
    fn idle_steps() {
        let mut s = ramped(TapStrategy::Delay, SwipeStrategy::None);
        s.on_tick(59_999);
        assert_eq!(s.state().tap_delay, 0);
        s.on_tick(60_000);
        assert_eq!(s.state().tap_delay, 10);
        let mut s = ramped(TapStrategy::Delay, SwipeStrategy::None);
        s.on_tick(150_000);
        assert_eq!(s.state().k_tap, 2);
        s.on_tick(180_000);
        assert_eq!(s.state().k_tap, 3);
    }

    #[test]
    fn operation_restarts_idle_interval() {
        let mut s = ramped(TapStrategy::Delay, SwipeStrategy::None);
        s.on_operation(50_000);
        s.on_tick(100_000);
        assert_eq!(s.state().k_tap, 1);
        s.on_tick(110_000);
        assert_eq!(s.state().k_tap, 2);
    }

    #[test]
    fn prolong_threshold_ramps_on_tap_counter() {
        let mut s = ramped(TapStrategy::Prolong, SwipeStrategy::None);
        for i in 0..25 {
            s.on_operation(i);
        }
        assert_eq!(s.state().tap_threshold, 200);
        assert_eq!(s.state().k_tap, 20);
    }

    #[test]
    fn reset_and_resume() {
        let mut s = ramped(TapStrategy::Delay, SwipeStrategy::None);
        s.on_operation(10);
        s.resume(1_000_000);
        s.on_tick(1_030_000);
        assert_eq!(s.state().k_tap, 1);
        s.reset(2_000_000);
        assert_eq!(s.intensity(), Intensity::ZERO);
    }
}
