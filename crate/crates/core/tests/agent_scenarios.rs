use gestproxy_core::agent::{run_agent, Reaction, Script, Step};
use gestproxy_core::budget::{DayClock, DAY_MS};
use gestproxy_core::config::{BudgetConfig, EngineConfig, InterventionConfig, SwipeStrategy, TapStrategy};
use gestproxy_core::event::{BypassOption, Intervention, Screen, SessionEventKind};
use gestproxy_core::replay::replay;
use gestproxy_core::trace::{to_ndjson, EngineEvent, LogRecord};

fn config(intervention: InterventionConfig, limit: u64) -> EngineConfig {
    EngineConfig {
        intervention,
        budget: BudgetConfig { target_apps: ["feed".to_string()].into(), daily_limit: limit, day_offset_ms: 0 },
        ..Default::default()
    }
}

fn script(steps: Vec<Step>, on_blocked: Reaction) -> Script {
    Script {
        apps: ["feed".to_string(), "mail".to_string()].into(),
        start: 0,
        steps,
        on_blocked,
        on_encounter: Reaction::Continue,
        abandon_latency_ms: None,
    }
}

#[test]
fn hundred_swipes_saturate_the_scheduler() {
    let c = config(InterventionConfig::field().with_strategies(TapStrategy::Delay, SwipeStrategy::Delay), 0);
    let s = script(
        vec![Step::Open { app: "feed".into() }, Step::Swipes { count: 100, interval_ms: 800 }],
        Reaction::Leave,
    );
    let run = run_agent(&s, &c, Screen::default(), 11).unwrap();
    let last = run
        .log
        .iter()
        .rev()
        .find_map(|r| match r.as_engine() {
            Some(EngineEvent::Scheduler { state }) => Some(state.clone()),
            _ => None,
        })
        .unwrap();
    assert_eq!((last.tap_delay, last.swipe_delay), (1000, 800));
}

#[test]
fn ignore_today_under_lockout_bypasses_once_per_day() {
    let mut lockout = InterventionConfig::field();
    lockout.lockout_enabled = true;
    let mut steps = Vec::new();
    for day in 0..3 {
        steps.push(Step::IdleUntil { t: day * DAY_MS + 8 * 3_600_000 });
        for _ in 0..3 {
            steps.push(Step::Open { app: "feed".into() });
            steps.push(Step::Swipes { count: 1500, interval_ms: 1000 });
            steps.push(Step::Open { app: "mail".into() });
            steps.push(Step::Taps { count: 10, interval_ms: 2000 });
            steps.push(Step::ScreenOff);
        }
    }
    let run = run_agent(&script(steps, Reaction::Bypass(BypassOption::IgnoreToday)), &config(lockout, 3600), Screen::default(), 5).unwrap();
    let clock = DayClock::default();
    let mut per_day = [0u32; 3];
    let mut encounters = [0u32; 3];
    for r in &run.log {
        if let LogRecord::Session(e) = r {
            let d = clock.day_of(e.t) as usize;
            match &e.kind {
                SessionEventKind::Bypass { option } => {
                    assert_eq!(*option, BypassOption::IgnoreToday);
                    per_day[d] += 1;
                }
                SessionEventKind::InterventionEncounter { intervention, .. } => {
                    assert_eq!(*intervention, Intervention::Lockout);
                    encounters[d] += 1;
                }
                _ => {}
            }
        }
    }
    assert_eq!(per_day, [1, 1, 1]);
    assert_eq!(encounters, [1, 1, 1]);
}

#[test]
fn leaving_on_block_never_bypasses() {
    let mut lockout = InterventionConfig::field();
    lockout.lockout_enabled = true;
    let steps = vec![Step::Open { app: "feed".into() }, Step::Taps { count: 5, interval_ms: 1000 }];
    let run = run_agent(&script(steps, Reaction::Leave), &config(lockout, 0), Screen::default(), 1).unwrap();
    assert!(run.log.iter().all(|r| !matches!(r.as_session().map(|e| &e.kind), Some(SessionEventKind::Bypass { .. }))));
}

#[test]
fn agent_trace_replays_to_agent_log() {
    let c = config(InterventionConfig::field().with_strategies(TapStrategy::Double, SwipeStrategy::Reverse), 30);
    let steps = vec![
        Step::Open { app: "feed".into() },
        Step::Taps { count: 20, interval_ms: 250 },
        Step::Swipes { count: 20, interval_ms: 1500 },
        Step::Idle { ms: 120_000 },
        Step::Taps { count: 20, interval_ms: 900 },
        Step::Bypass { option: BypassOption::OneMinute },
        Step::Swipes { count: 60, interval_ms: 1000 },
    ];
    let run = run_agent(&script(steps, Reaction::Leave), &c, Screen::default(), 21).unwrap();
    let replayed = replay(&to_ndjson(&run.trace), &c, Screen::default()).unwrap();
    assert_eq!(replayed, to_ndjson(&run.log));
}
