//! Static one-day activity timeline: app spans with gesture markers drawn
//! only while an intervention was on.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analytics::{foreground_intervals, intervention_periods, AnalyticsError};
use crate::budget::DayClock;
use crate::event::{GestureKind, Millis, SessionEvent, SessionEventKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub app_id: String,
    pub start: Millis,
    pub end: Millis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub t: Millis,
    pub kind: GestureKind,
    pub app_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineDocument {
    pub day: i64,
    pub day_start: Millis,
    pub day_end: Millis,
    pub spans: Vec<Span>,
    pub intervention_on: Vec<Span>,
    pub markers: Vec<Marker>,
}

fn clip(app_id: &str, start: Millis, end: Millis, lo: Millis, hi: Millis) -> Option<Span> {
    let (s, e) = (start.max(lo), end.min(hi));
    (s < e || (start == end && (lo..hi).contains(&start))).then(|| Span { app_id: app_id.to_string(), start: s, end: e })
}

pub fn timeline_export(log: &[SessionEvent], day: i64, clock: &DayClock) -> Result<TimelineDocument, AnalyticsError> {
    let (lo, hi) = (clock.day_start(day), clock.day_start(day + 1));
    let spans = foreground_intervals(log)?
        .iter()
        .filter_map(|iv| clip(&iv.app_id, iv.start, iv.end, lo, hi))
        .collect();
    let periods = intervention_periods(log)?;
    let intervention_on: Vec<Span> =
        periods.iter().filter_map(|p| clip(&p.app_id, p.start, p.end, lo, hi)).collect();
    let markers = log
        .iter()
        .filter(|e| (lo..hi).contains(&e.t))
        .filter_map(|e| match &e.kind {
            SessionEventKind::GestureLogged { gesture_summary } => {
                let p = periods.iter().find(|p| (p.start..=p.end).contains(&e.t))?;
                Some(Marker { t: e.t, kind: gesture_summary.kind, app_id: p.app_id.clone() })
            }
            _ => None,
        })
        .collect();
    Ok(TimelineDocument { day, day_start: lo, day_end: hi, spans, intervention_on, markers })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl TimelineDocument {
    pub fn is_empty(&self) -> bool {
        self.spans.is_empty() && self.markers.is_empty()
    }

    /// Self-contained HTML: the document as embedded JSON plus an SVG
    /// rendering with one lane per app.
    pub fn to_html(&self) -> String {
        const WIDTH: f64 = 1200.0;
        const LANE: f64 = 28.0;
        const LEFT: f64 = 140.0;
        let mut apps: Vec<&str> = self.spans.iter().map(|s| s.app_id.as_str()).collect();
        apps.sort();
        apps.dedup();
        let lane = |app: &str| apps.iter().position(|a| *a == app).unwrap_or(0) as f64;
        let span_ms = (self.day_end - self.day_start).max(1) as f64;
        let x = |t: Millis| LEFT + (t - self.day_start) as f64 / span_ms * (WIDTH - LEFT);
        let height = LANE * apps.len().max(1) as f64 + 30.0;

        let mut svg = String::new();
        let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}">"#);
        for h in 0..=24 {
            let hx = LEFT + h as f64 / 24.0 * (WIDTH - LEFT);
            let _ = writeln!(svg, r##"<line x1="{hx:.1}" y1="0" x2="{hx:.1}" y2="{:.1}" stroke="#ddd"/>"##, height - 20.0);
            let _ = writeln!(svg, r#"<text x="{hx:.1}" y="{:.1}" font-size="9" text-anchor="middle">{h}</text>"#, height - 8.0);
        }
        for (i, app) in apps.iter().enumerate() {
            let y = i as f64 * LANE + 18.0;
            let _ = writeln!(svg, r#"<text x="4" y="{y:.1}" font-size="12">{}</text>"#, escape(app));
        }
        for s in &self.spans {
            let y = lane(&s.app_id) * LANE + 6.0;
            let w = (x(s.end) - x(s.start)).max(1.0);
            let _ = writeln!(svg, r##"<rect x="{:.2}" y="{y:.1}" width="{w:.2}" height="16" fill="#9ab"/>"##, x(s.start));
        }
        for s in &self.intervention_on {
            let y = lane(&s.app_id) * LANE + 22.0;
            let w = (x(s.end) - x(s.start)).max(1.0);
            let _ = writeln!(svg, r##"<rect x="{:.2}" y="{y:.1}" width="{w:.2}" height="3" fill="#c84"/>"##, x(s.start));
        }
        for m in &self.markers {
            let y = lane(&m.app_id) * LANE + 14.0;
            let fill = match m.kind {
                GestureKind::Swipe => "black",
                _ => "red",
            };
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{y:.1}" r="2.5" fill="{fill}"/>"#, x(m.t));
        }
        svg.push_str("</svg>\n");

        let data = serde_json::to_string(self).expect("timeline serializes").replace("</", "<\\/");
        format!(
            "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Activity timeline, day {}</title></head>\n<body>\n<h1>Activity timeline, day {}</h1>\n<p>Swipes in black, taps in red. Markers appear only while an intervention was on.</p>\n{svg}<script type=\"application/json\" id=\"timeline-data\">{data}</script>\n</body></html>\n",
            self.day, self.day
        )
    }
}
