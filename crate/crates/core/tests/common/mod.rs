//! Reference implementations used as test oracles. They take the whole
//! input at once and favour obviousness over speed.

#![allow(dead_code)]

use gestproxy_core::event::{Gesture, Millis, Phase, PointerSample, Press, Swipe, TrajectoryPoint};
use gestproxy_core::recognizer::RecognizerConfig;

/// One pointer from its Down to its Up or Cancel.
struct Stroke {
    samples: Vec<PointerSample>,
}

impl Stroke {
    fn down_t(&self) -> Millis {
        self.samples[0].t
    }

    fn end_t(&self) -> Millis {
        self.samples.last().unwrap().t
    }

    fn position_at(&self, t: Millis) -> (f64, f64) {
        let s = self.samples.iter().rfind(|s| s.t <= t && s.phase != Phase::Cancel).unwrap();
        (s.x, s.y)
    }
}

/// Splits a legal stream into contacts: maximal runs during which at least
/// one pointer is down.
fn contacts(stream: &[PointerSample]) -> Vec<Vec<PointerSample>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    let mut down = 0i32;
    for s in stream {
        current.push(*s);
        match s.phase {
            Phase::Down => down += 1,
            Phase::Up | Phase::Cancel => down -= 1,
            Phase::Move => {}
        }
        if down == 0 {
            out.push(std::mem::take(&mut current));
        }
    }
    out
}

fn strokes(contact: &[PointerSample]) -> Vec<Stroke> {
    let mut done = Vec::new();
    let mut open: Vec<(u32, Stroke)> = Vec::new();
    for s in contact {
        if s.phase == Phase::Down {
            open.push((s.pointer_id, Stroke { samples: vec![*s] }));
            continue;
        }
        let i = open.iter().position(|(id, _)| *id == s.pointer_id).unwrap();
        open[i].1.samples.push(*s);
        if matches!(s.phase, Phase::Up | Phase::Cancel) {
            done.push(open.remove(i).1);
        }
    }
    done
}

fn classify(contact: &[PointerSample], cfg: &RecognizerConfig) -> Option<Gesture> {
    if contact.iter().any(|s| s.phase == Phase::Cancel) {
        return None;
    }
    let strokes = strokes(contact);
    let movement = strokes
        .iter()
        .flat_map(|st| {
            let (x0, y0) = (st.samples[0].x, st.samples[0].y);
            st.samples.iter().map(move |s| ((s.x - x0).powi(2) + (s.y - y0).powi(2)).sqrt())
        })
        .fold(0.0, f64::max);
    let first = contact[0];
    let start = first.t;
    let end = contact.last().unwrap().t;
    if movement <= cfg.tap_max_movement {
        let press = Press { x: first.x, y: first.y, t_down: start, duration: end - start };
        return Some(if end - start <= cfg.tap_max_duration { Gesture::Tap(press) } else { Gesture::LongPress(press) });
    }
    let mut times: Vec<Millis> = contact.iter().map(|s| s.t).collect();
    times.dedup();
    if movement < cfg.swipe_min_displacement || times.len() < 2 {
        return None;
    }
    let trajectory = times
        .iter()
        .map(|&t| {
            let live: Vec<(f64, f64)> =
                strokes.iter().filter(|st| st.down_t() <= t && t <= st.end_t()).map(|st| st.position_at(t)).collect();
            let n = live.len() as f64;
            TrajectoryPoint::new(live.iter().map(|p| p.0).sum::<f64>() / n, live.iter().map(|p| p.1).sum::<f64>() / n, t)
        })
        .collect();
    let peak = peak_simultaneous(contact);
    Some(Gesture::Swipe(Swipe { trajectory, finger_count: peak as u32 }))
}

fn peak_simultaneous(contact: &[PointerSample]) -> usize {
    let mut down = 0usize;
    let mut peak = 0;
    for s in contact {
        match s.phase {
            Phase::Down => {
                down += 1;
                peak = peak.max(down);
            }
            Phase::Up | Phase::Cancel => down -= 1,
            Phase::Move => {}
        }
    }
    peak
}

/// Every gesture in a complete legal stream, in emission order.
pub fn batch_recognize(stream: &[PointerSample], cfg: &RecognizerConfig, double_tap: bool) -> Vec<Gesture> {
    let singles: Vec<Gesture> = contacts(stream).iter().filter_map(|c| classify(c, cfg)).collect();
    if !double_tap {
        return singles;
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < singles.len() {
        if let (Gesture::Tap(a), Some(Gesture::Tap(b))) = (&singles[i], singles.get(i + 1)) {
            let gap_ok = b.t_down > a.t_down + a.duration && b.t_down - (a.t_down + a.duration) <= cfg.double_tap_window;
            let near = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt() <= cfg.double_tap_max_distance;
            if gap_ok && near {
                out.push(Gesture::DoubleTap { first: *a, second: *b });
                i += 2;
                continue;
            }
        }
        out.push(singles[i].clone());
        i += 1;
    }
    out
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn press_eq(a: &Press, b: &Press) -> bool {
    a.t_down == b.t_down && a.duration == b.duration && close(a.x, b.x) && close(a.y, b.y)
}

/// Structural equality with a relative tolerance on coordinates, since
/// centroids may be summed in a different order.
pub fn gesture_eq(a: &Gesture, b: &Gesture) -> bool {
    match (a, b) {
        (Gesture::Tap(x), Gesture::Tap(y)) | (Gesture::LongPress(x), Gesture::LongPress(y)) => press_eq(x, y),
        (Gesture::DoubleTap { first: a1, second: a2 }, Gesture::DoubleTap { first: b1, second: b2 }) => {
            press_eq(a1, b1) && press_eq(a2, b2)
        }
        (Gesture::Swipe(x), Gesture::Swipe(y)) => {
            x.finger_count == y.finger_count
                && x.trajectory.len() == y.trajectory.len()
                && x.trajectory.iter().zip(&y.trajectory).all(|(p, q)| p.t == q.t && close(p.x, q.x) && close(p.y, q.y))
        }
        _ => false,
    }
}

pub fn gestures_eq(a: &[Gesture], b: &[Gesture]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| gesture_eq(x, y))
}
