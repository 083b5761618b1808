//! Gesture-manipulation engine for screen-time interventions.
//!
//! Pointer samples are recognized into gestures, rewritten by the active
//! manipulation strategies at an intensity that ramps with use, and
//! dispatched as virtual gestures. A combined daily budget over target apps
//! decides when interventions are on. Everything runs on a virtual
//! millisecond clock, so replays are deterministic.

pub mod agent;
pub mod analytics;
pub mod api;
pub mod budget;
pub mod config;
pub mod engine;
pub mod event;
pub mod manipulation;
pub mod protocol;
pub mod recognizer;
pub mod replay;
pub mod scheduler;
pub mod synth;
pub mod timeline;
pub mod trace;

pub use config::{EngineConfig, InterventionConfig, SwipeStrategy, TapStrategy};
pub use engine::{Engine, EngineError};
pub use event::{Gesture, Millis, PointerSample, Screen, SessionEvent, SessionEventKind, VirtualGesture};
pub use trace::{LogRecord, TraceRecord};
