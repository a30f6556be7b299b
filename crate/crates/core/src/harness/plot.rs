//! SVG rendering of planar scenarios.

use std::fmt::Write;

use crate::domain::{Payload, Point};
use crate::error::{Error, Result};
use crate::hypothesis::{Classifier, Rule, SelectiveHypothesis};

use super::report::TrialReport;
use super::scenario::Scenario;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 24.0;
/// Raster cells per side when shading a geometric classifier.
const CELLS: usize = 96;

struct Frame {
    half: f64,
}

impl Frame {
    fn new(points: &[Point]) -> Self {
        let r = points
            .iter()
            .filter_map(Point::coords)
            .flat_map(|c| [c[0].abs(), c[1].abs()])
            .fold(1.0f64, f64::max);
        Frame { half: r * 1.15 }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v + self.half) / (2.0 * self.half) * (SIZE - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        SIZE - self.x(v)
    }

    fn world(&self, px: f64) -> f64 {
        (px - MARGIN) / (SIZE - 2.0 * MARGIN) * 2.0 * self.half - self.half
    }
}

pub fn emit_scenario_plot(s: &Scenario) -> Result<String> {
    render(s, None, true)
}

/// Plot of a report's scenario with its first trial's classifier. A report
/// without trials draws only the axes.
pub fn emit_plot(report: &TrialReport) -> Result<String> {
    render(&report.scenario, report.hypothesis.as_ref(), !report.trials.is_empty())
}

fn render(s: &Scenario, h: Option<&SelectiveHypothesis>, with_points: bool) -> Result<String> {
    let universe = s.universe()?;
    if !universe.is_plane() {
        return Err(Error::UnsupportedPlot);
    }
    let frame = Frame::new(universe.points());
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(&s.name));
    let _ = writeln!(
        svg,
        r##"<defs><pattern id="reject" width="8" height="8" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><rect width="8" height="8" fill="#e8f5e9"/><line x1="0" y1="0" x2="0" y2="8" stroke="#2e7d32" stroke-width="3"/></pattern></defs>"##
    );
    let _ = writeln!(svg, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);

    if let (Some(h), true) = (h, with_points) {
        if h.is_geometric() {
            shade(&mut svg, &frame, h);
        }
        if let Some(line) = base_line(&frame, h) {
            svg.push_str(&line);
        }
    }

    let (ox, oy) = (frame.x(0.0), frame.y(0.0));
    let _ = writeln!(
        svg,
        r##"<g stroke="#555" stroke-width="1"><line x1="{MARGIN}" y1="{oy}" x2="{}" y2="{oy}"/><line x1="{ox}" y1="{MARGIN}" x2="{ox}" y2="{}"/></g>"##,
        SIZE - MARGIN,
        SIZE - MARGIN
    );
    if !with_points {
        svg.push_str("</svg>\n");
        return Ok(svg);
    }

    let instance = s.instance(s.seed)?;
    for x in universe.points() {
        let c = x.coords().expect("plane");
        let (px, py) = (frame.x(c[0]), frame.y(c[1]));
        let in_p = instance.p.weight(x.id)? > 0.0;
        let in_q = instance.q.weight(x.id)? > 0.0;
        if in_q {
            let _ = writeln!(svg, r##"<circle cx="{px:.2}" cy="{py:.2}" r="7" fill="none" stroke="#ef6c00" stroke-width="2"/>"##);
        }
        if in_p {
            let fill = if instance.target.eval(x) { "#1565c0" } else { "#90caf9" };
            let _ = writeln!(svg, r##"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="{fill}" stroke="#0d47a1"/>"##);
        }
        if !in_p && !in_q {
            let _ = writeln!(svg, r##"<circle cx="{px:.2}" cy="{py:.2}" r="2" fill="#9e9e9e"/>"##);
        }
        if let Some(h) = h {
            if h.predict(x).is_none() {
                let _ = writeln!(
                    svg,
                    r##"<path d="M{:.2} {:.2}l10 10m0 -10l-10 10" stroke="#2e7d32" stroke-width="2.5"/>"##,
                    px - 5.0,
                    py - 5.0
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Rejected cells hatched, cells labeled 1 tinted.
fn shade(svg: &mut String, frame: &Frame, h: &SelectiveHypothesis) {
    let step = (SIZE - 2.0 * MARGIN) / CELLS as f64;
    for i in 0..CELLS {
        for j in 0..CELLS {
            let (px, py) = (MARGIN + i as f64 * step, MARGIN + j as f64 * step);
            let wx = frame.world(px + step / 2.0);
            let wy = frame.world(SIZE - (py + step / 2.0));
            let probe = Point { id: usize::MAX, payload: Payload::Real(vec![wx, wy]) };
            let fill = match h.predict(&probe) {
                None => "url(#reject)",
                Some(true) => "#fff3e0",
                Some(false) => continue,
            };
            let _ = writeln!(
                svg,
                r#"<rect x="{px:.2}" y="{py:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                step + 0.3,
                step + 0.3
            );
        }
    }
}

/// The base classifier's boundary when it is a halfspace.
fn base_line(frame: &Frame, h: &SelectiveHypothesis) -> Option<String> {
    let base = match h {
        SelectiveHypothesis::Agreement(a, _) => match a.as_ref() {
            SelectiveHypothesis::Diced(d) => &d.base,
            _ => return None,
        },
        SelectiveHypothesis::Diced(d) => &d.base,
        SelectiveHypothesis::Total(t) => t,
        _ => return None,
    };
    let Rule::Halfspace(hs) = base.rule() else { return None };
    let [a, b] = hs.normal;
    // Points on `a·x + b·y + offset = 0`, extended past the frame.
    let (px, py) = (-a * hs.offset, -b * hs.offset);
    let (dx, dy) = (-b * 4.0 * frame.half, a * 4.0 * frame.half);
    Some(format!(
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#6a1b9a" stroke-width="2" stroke-dasharray="6 3"/>
"##,
        frame.x(px - dx),
        frame.y(py - dy),
        frame.x(px + dx),
        frame.y(py + dy)
    ))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::run_scenario;
    use crate::harness::scenario::{builtin, fig1a};
    use crate::par::Parallelism;

    #[test]
    fn fig1a_marks_two_rejected_points() {
        let r = run_scenario(&fig1a(), Parallelism::Sequential).unwrap();
        let svg = emit_plot(&r).unwrap();
        assert_eq!(svg.matches(r#"r="4""#).count(), 2);
        assert_eq!(svg.matches(r#"r="7""#).count(), 4);
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn empty_report_draws_axes_only() {
        let mut s = fig1a();
        s.trials = 0;
        let svg = emit_plot(&run_scenario(&s, Parallelism::Sequential).unwrap()).unwrap();
        assert!(!svg.contains("<circle"));
        assert!(!svg.contains("<rect x="));
        assert!(svg.contains(r##"<g stroke="#555""##));
    }

    #[test]
    fn non_planar_scenarios_are_refused() {
        let s = builtin("parity-d8").unwrap();
        assert_eq!(emit_scenario_plot(&s), Err(Error::UnsupportedPlot));
    }
}
