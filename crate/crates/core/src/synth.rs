//! Seeded generator of legal pointer streams: taps, long presses, swipes,
//! ambiguous drags and cancelled contacts, with one to three fingers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::event::{Millis, Phase, PointerSample, Screen};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Tap,
    LongPress,
    Drag,
    Swipe,
}

fn finger_track(
    rng: &mut impl Rng,
    id: u32,
    shape: Shape,
    start: (f64, f64),
    (t_down, duration): (Millis, Millis),
    direction: (f64, f64),
    screen: &Screen,
) -> Vec<PointerSample> {
    let distance = match shape {
        Shape::Tap | Shape::LongPress => rng.random_range(0.0..6.0),
        Shape::Drag => rng.random_range(12.0..45.0),
        Shape::Swipe => rng.random_range(60.0..500.0),
    };
    let steps = (duration / 16).clamp(1, 40);
    let mut out = vec![PointerSample::down(id, start.0, start.1, t_down)];
    for i in 1..=steps {
        let frac = i as f64 / steps as f64;
        let (x, y) = screen.clamp(start.0 + direction.0 * distance * frac, start.1 + direction.1 * distance * frac);
        let t = t_down + duration * i / steps;
        let phase = if i == steps { Phase::Up } else { Phase::Move };
        out.push(PointerSample::new(id, phase, x, y, t));
    }
    out
}

/// Appends one contact beginning at or after `t`; returns its end time.
fn contact(rng: &mut impl Rng, t: Millis, near: Option<(f64, f64)>, screen: &Screen, out: &mut Vec<PointerSample>) -> (Millis, (f64, f64)) {
    let shape = match rng.random_range(0..10) {
        0..=3 => Shape::Tap,
        4 => Shape::LongPress,
        5 => Shape::Drag,
        _ => Shape::Swipe,
    };
    let fingers = match rng.random_range(0..10) {
        0..=6 => 1,
        7 | 8 => 2,
        _ => 3,
    };
    let duration: Millis = match shape {
        Shape::Tap => rng.random_range(20..=480),
        Shape::LongPress => rng.random_range(510..=1500),
        Shape::Drag | Shape::Swipe => rng.random_range(40..=700),
    };
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let direction = (angle.cos(), angle.sin());
    let base = match near {
        Some((x, y)) => screen.clamp(x + rng.random_range(-30.0..30.0), y + rng.random_range(-30.0..30.0)),
        None => (rng.random_range(0.0..screen.width), rng.random_range(0.0..screen.height)),
    };

    let mut samples = Vec::new();
    for id in 0..fingers {
        let offset = (id as f64 * 40.0, rng.random_range(-20.0..20.0));
        let start = screen.clamp(base.0 + offset.0, base.1 + offset.1);
        let t_down = t + rng.random_range(0..=30);
        let d = duration.saturating_sub(rng.random_range(0..=20)).max(1);
        let mut track = finger_track(rng, id, shape, start, (t_down, d), direction, screen);
        if rng.random_bool(0.05) {
            let keep = rng.random_range(1..track.len());
            track.truncate(keep);
            let last = *track.last().expect("track has a Down");
            track.push(PointerSample::cancel(id, last.x, last.y, last.t + rng.random_range(0..=10)));
        }
        samples.extend(track);
    }
    // Stable: per-pointer order survives because each track is time-sorted.
    samples.sort_by_key(|s| s.t);
    let end = samples.last().map(|s| s.t).unwrap_or(t);
    out.extend(samples);
    (end, base)
}

/// A legal stream of `contacts` contacts separated by 0 to 600 ms gaps.
/// About a quarter of contacts land near the previous one, so that
/// double-tap candidates are common.
pub fn pointer_stream(rng: &mut impl Rng, contacts: usize, screen: &Screen, start: Millis) -> Vec<PointerSample> {
    let mut out = Vec::new();
    let mut t = start;
    let mut last = None;
    for _ in 0..contacts {
        let near = last.filter(|_| rng.random_bool(0.25));
        let (end, base) = contact(rng, t, near, screen, &mut out);
        last = Some(base);
        t = end + rng.random_range(0..=600);
    }
    out
}

pub fn seeded_stream(seed: u64, contacts: usize, screen: &Screen) -> Vec<PointerSample> {
    pointer_stream(&mut ChaCha8Rng::seed_from_u64(seed), contacts, screen, 0)
}
