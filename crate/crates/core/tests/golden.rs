//! Golden replays. Each case stores its trace, configuration and expected
//! log under `tests/golden/`. Set `UPDATE_GOLDENS=1` to regenerate.

use std::fs;
use std::path::{Path, PathBuf};

use gestproxy_core::agent::{run_agent, Reaction, Script, Step};
use gestproxy_core::budget::DAY_MS;
use gestproxy_core::config::{BudgetConfig, EngineConfig, InterventionConfig, LabLevel, SwipeStrategy, TapStrategy};
use gestproxy_core::event::{BypassOption, Screen, SessionEvent};
use gestproxy_core::replay::replay;
use gestproxy_core::synth::seeded_stream;
use gestproxy_core::trace::{to_ndjson, TraceRecord};

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn budget(limit: u64) -> BudgetConfig {
    BudgetConfig { target_apps: ["feed".to_string(), "news".to_string()].into(), daily_limit: limit, day_offset_ms: 0 }
}

fn script(start: u64, steps: Vec<Step>, on_blocked: Reaction, on_encounter: Reaction) -> Script {
    Script {
        apps: ["feed".to_string(), "news".to_string(), "mail".to_string()].into(),
        start,
        steps,
        on_blocked,
        on_encounter,
        abandon_latency_ms: None,
    }
}

fn open(app: &str) -> Step {
    Step::Open { app: app.into() }
}

fn cases() -> Vec<(&'static str, EngineConfig, Vec<TraceRecord>)> {
    let mut out = Vec::new();

    let config = EngineConfig {
        intervention: InterventionConfig::field().with_strategies(TapStrategy::Shift, SwipeStrategy::Reverse),
        budget: budget(60),
        ..Default::default()
    };
    let s = script(
        0,
        vec![
            open("feed"),
            Step::Swipes { count: 40, interval_ms: 1200 },
            Step::Taps { count: 20, interval_ms: 900 },
            open("mail"),
            Step::Taps { count: 5, interval_ms: 700 },
            open("feed"),
            Step::Taps { count: 10, interval_ms: 900 },
        ],
        Reaction::Leave,
        Reaction::Bypass(BypassOption::OneMinute),
    );
    out.push(("field_shift_reverse", config.clone(), run_agent(&s, &config, Screen::default(), 1).unwrap().trace));

    let mut lockout = InterventionConfig::field();
    lockout.lockout_enabled = true;
    let config = EngineConfig { intervention: lockout, budget: budget(120), ..Default::default() };
    let s = script(
        0,
        vec![open("feed"), Step::Swipes { count: 200, interval_ms: 1000 }, Step::Idle { ms: 900_000 }, Step::Swipes { count: 30, interval_ms: 1000 }],
        Reaction::Bypass(BypassOption::FifteenMinutes),
        Reaction::Continue,
    );
    out.push(("lockout_bypass", config.clone(), run_agent(&s, &config, Screen::default(), 2).unwrap().trace));

    let mut multi = InterventionConfig::field().with_strategies(TapStrategy::Double, SwipeStrategy::MultiFinger);
    multi.finger_threshold = 2;
    let config = EngineConfig { intervention: multi, budget: budget(0), ..Default::default() };
    let mut trace: Vec<TraceRecord> = vec![SessionEvent::app_enter(0, "feed").into()];
    let stream = seeded_stream(3, 60, &Screen::default());
    let end = stream.last().map_or(0, |s| s.t);
    trace.extend(stream.into_iter().map(TraceRecord::from));
    trace.push(SessionEvent::app_exit(end + 1000, "feed").into());
    out.push(("double_multi_finger", config, trace));

    let config = EngineConfig {
        intervention: InterventionConfig::lab_level(LabLevel::One).with_strategies(TapStrategy::Delay, SwipeStrategy::Decelerate),
        budget: budget(0),
        ..Default::default()
    };
    let s = script(
        0,
        vec![
            open("news"),
            Step::Swipes { count: 30, interval_ms: 1000 },
            Step::Idle { ms: 185_000 },
            Step::Taps { count: 30, interval_ms: 1000 },
            Step::Close,
            Step::Idle { ms: 300_000 },
            open("news"),
            Step::Swipes { count: 10, interval_ms: 1000 },
        ],
        Reaction::Leave,
        Reaction::Continue,
    );
    out.push(("lab_delay_decelerate", config.clone(), run_agent(&s, &config, Screen::default(), 4).unwrap().trace));

    let config = EngineConfig {
        intervention: InterventionConfig::field().with_strategies(TapStrategy::Prolong, SwipeStrategy::Delay),
        budget: budget(60),
        ..Default::default()
    };
    let s = script(
        DAY_MS - 150_000,
        vec![
            open("feed"),
            Step::Taps { count: 100, interval_ms: 1500 },
            Step::Swipes { count: 60, interval_ms: 1000 },
            Step::ScreenOff,
            open("feed"),
            Step::Swipes { count: 80, interval_ms: 1000 },
        ],
        Reaction::Leave,
        Reaction::Continue,
    );
    out.push(("midnight_rollover", config.clone(), run_agent(&s, &config, Screen::default(), 5).unwrap().trace));

    out
}

#[test]
fn goldens_replay_to_stored_logs() {
    let update = std::env::var_os("UPDATE_GOLDENS").is_some();
    fs::create_dir_all(dir()).unwrap();
    for (name, config, trace) in cases() {
        let trace_path = dir().join(format!("{name}.trace.ndjson"));
        let config_path = dir().join(format!("{name}.config.json"));
        let log_path = dir().join(format!("{name}.log.ndjson"));
        if update || !trace_path.exists() {
            fs::write(&trace_path, to_ndjson(&trace)).unwrap();
            fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap() + "\n").unwrap();
            let log = replay(&to_ndjson(&trace), &config, Screen::default()).unwrap();
            fs::write(&log_path, log).unwrap();
        }
        let stored_trace = fs::read_to_string(&trace_path).unwrap();
        let stored_config = EngineConfig::from_json(&fs::read_to_string(&config_path).unwrap()).unwrap();
        let expected = fs::read_to_string(&log_path).unwrap();
        assert_eq!(stored_trace, to_ndjson(&trace), "{name}: generator drifted from stored trace");
        let first = replay(&stored_trace, &stored_config, Screen::default()).unwrap();
        let second = replay(&stored_trace, &stored_config, Screen::default()).unwrap();
        assert_eq!(first, second, "{name}: replay is not deterministic");
        assert!(first == expected, "{name}: replay differs from stored log");
    }
}
