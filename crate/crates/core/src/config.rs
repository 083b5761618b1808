//! Intervention parameters and the aggregate engine configuration.
//!
//! The JSON config file mirrors these structs field-for-field; every field
//! has a default so partial files are accepted.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::event::Millis;
use crate::recognizer::RecognizerConfig;
use crate::scheduler::SchedulerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum TapStrategy {
    #[default]
    None,
    Delay,
    Prolong,
    Shift,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SwipeStrategy {
    #[default]
    None,
    Delay,
    Decelerate,
    Reverse,
    MultiFinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShiftVector {
    pub dx: f64,
    pub dy: f64,
}

impl ShiftVector {
    pub fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }
}

/// Rectangle in screen-relative coordinates (0..1 on both axes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeRect {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl RelativeRect {
    pub fn contains(&self, screen: &crate::event::Screen, x: f64, y: f64) -> bool {
        let (u, v) = (x / screen.width, y / screen.height);
        (self.left..=self.right).contains(&u) && (self.top..=self.bottom).contains(&v)
    }

    /// Center of the rectangle in dp.
    pub fn center(&self, screen: &crate::event::Screen) -> (f64, f64) {
        (
            (self.left + self.right) / 2.0 * screen.width,
            (self.top + self.bottom) / 2.0 * screen.height,
        )
    }
}

impl Default for RelativeRect {
    /// Bottom band of the blocking screen, where the "ignore limit" button sits.
    fn default() -> Self {
        Self { left: 0.0, top: 0.85, right: 1.0, bottom: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("F_swipe_decelerate_min must lie in (0, 1], got {0}")]
    DecelerationOutOfRange(String),
    #[error("finger_threshold_N must be at least 1")]
    FingerThreshold,
    #[error("shift_vector must be finite")]
    NonFiniteShift,
    #[error("recognizer threshold `{0}` must be positive")]
    RecognizerThreshold(&'static str),
    #[error("scheduler: {0}")]
    Scheduler(&'static str),
}

/// Strategy selection and the maximum intensity of each manipulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterventionConfig {
    pub tap_strategy: TapStrategy,
    pub swipe_strategy: SwipeStrategy,
    #[serde(rename = "T_tap_delay_max")]
    pub tap_delay_max: Millis,
    #[serde(rename = "T_tap_threshold_max")]
    pub tap_threshold_max: Millis,
    pub shift_vector: ShiftVector,
    #[serde(rename = "T_swipe_delay_max")]
    pub swipe_delay_max: Millis,
    #[serde(rename = "F_swipe_decelerate_min")]
    pub decelerate_min: f64,
    #[serde(rename = "finger_threshold_N")]
    pub finger_threshold: u32,
    pub lockout_enabled: bool,
    /// Region of the blocking screen that opens the bypass menu under lockout.
    pub lockout_bypass_region: RelativeRect,
}

impl Default for InterventionConfig {
    /// High-intensity field parameters with no strategy selected.
    fn default() -> Self {
        Self {
            tap_strategy: TapStrategy::None,
            swipe_strategy: SwipeStrategy::None,
            tap_delay_max: 1000,
            tap_threshold_max: 200,
            shift_vector: ShiftVector::new(0.0, -200.0),
            swipe_delay_max: 800,
            decelerate_min: 0.25,
            finger_threshold: 3,
            lockout_enabled: false,
            lockout_bypass_region: RelativeRect::default(),
        }
    }
}

/// The two lab intensity levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabLevel {
    One,
    Two,
}

impl InterventionConfig {
    /// Parameter set for one lab intensity level. Double and Reverse carry no
    /// parameter, so they behave identically at both levels.
    pub fn lab_level(level: LabLevel) -> Self {
        match level {
            LabLevel::One => Self {
                tap_delay_max: 500,
                tap_threshold_max: 100,
                shift_vector: ShiftVector::new(0.0, 100.0),
                swipe_delay_max: 300,
                decelerate_min: 0.5,
                finger_threshold: 2,
                ..Self::default()
            },
            LabLevel::Two => Self {
                tap_delay_max: 1000,
                tap_threshold_max: 200,
                shift_vector: ShiftVector::new(0.0, 200.0),
                swipe_delay_max: 800,
                decelerate_min: 0.25,
                finger_threshold: 3,
                ..Self::default()
            },
        }
    }

    /// Parameters used in the field deployment (tap shift points upward).
    pub fn field() -> Self {
        Self::default()
    }

    pub fn with_strategies(mut self, tap: TapStrategy, swipe: SwipeStrategy) -> Self {
        self.tap_strategy = tap;
        self.swipe_strategy = swipe;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.decelerate_min > 0.0 && self.decelerate_min <= 1.0) {
            return Err(ConfigError::DecelerationOutOfRange(self.decelerate_min.to_string()));
        }
        if self.finger_threshold < 1 {
            return Err(ConfigError::FingerThreshold);
        }
        if !(self.shift_vector.dx.is_finite() && self.shift_vector.dy.is_finite()) {
            return Err(ConfigError::NonFiniteShift);
        }
        Ok(())
    }
}

/// Usage budget shared by all target apps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetConfig {
    pub target_apps: BTreeSet<String>,
    /// Combined daily limit in seconds.
    pub daily_limit: u64,
    /// Offset added to virtual time before computing day boundaries, so that
    /// day N starts at local midnight.
    pub day_offset_ms: i64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self { target_apps: BTreeSet::new(), daily_limit: 3600, day_offset_ms: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub intervention: InterventionConfig,
    pub scheduler: SchedulerConfig,
    pub recognizer: RecognizerConfig,
    pub budget: BudgetConfig,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.intervention.validate()?;
        self.scheduler.validate()?;
        self.recognizer.validate()
    }

    /// Parses a JSON config document.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
