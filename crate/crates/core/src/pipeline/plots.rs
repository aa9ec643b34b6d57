//! Minimal SVG emitters. Output is plain text with fixed-precision
//! coordinates, so identical inputs give identical files.

use std::fmt::Write as _;

use crate::elasticity::ElasticitySeries;
use crate::evaluation::early_warning::PrCurve;
use crate::regime::{RegimeAssignment, RegimeLabel};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

fn label_colour(l: RegimeLabel) -> &'static str {
    match l {
        RegimeLabel::FlowDominant => "#1b9e77",
        RegimeLabel::Transitional => "#d95f02",
        RegimeLabel::StoreDominant => "#7570b3",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Linear map from a data range onto a pixel range; degenerate ranges are
/// widened so every point stays on the canvas.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, p0: f64, p1: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Axis { lo, hi, p0, p1 }
    }

    fn fixed(lo: f64, hi: f64, p0: f64, p1: f64) -> Self {
        Axis { lo, hi, p0, p1 }
    }

    fn at(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }
}

struct Canvas {
    svg: String,
}

impl Canvas {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
            width / 2.0,
            escape(title)
        );
        Canvas { svg }
    }

    fn frame(&mut self, x: Axis, y: Axis, xlabel: &str, ylabel: &str) {
        let (x0, x1, y0, y1) = (x.p0, x.p1, y.p1, y.p0);
        let _ = writeln!(
            self.svg,
            r##"<rect x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
            x1 - x0,
            y1 - y0
        );
        for (v, px) in [(x.lo, x0), (x.hi, x1)] {
            let _ = writeln!(
                self.svg,
                r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                y1 + 14.0,
                tick(v)
            );
        }
        for (v, py) in [(y.lo, y1), (y.hi, y0)] {
            let _ = writeln!(
                self.svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                py + 4.0,
                tick(v)
            );
        }
        let _ = writeln!(
            self.svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            y1 + 30.0,
            escape(xlabel)
        );
        let _ = writeln!(
            self.svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            x0 - 34.0,
            (y0 + y1) / 2.0,
            x0 - 34.0,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], colour: &str, dashed: bool) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            self.svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>"#,
            coords.join(" ")
        );
    }

    fn dot(&mut self, x: f64, y: f64, colour: &str) {
        let _ = writeln!(
            self.svg,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.8" fill="{colour}" fill-opacity="0.6"/>"#
        );
    }

    fn legend(&mut self, x: f64, y: f64, items: &[(&str, &str)]) {
        for (i, (name, colour)) in items.iter().enumerate() {
            let yy = y + 14.0 * i as f64;
            let _ = writeln!(
                self.svg,
                r#"<rect x="{x:.1}" y="{:.1}" width="10" height="3" fill="{colour}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                yy - 4.0,
                x + 14.0,
                yy,
                escape(name)
            );
        }
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Raw rolling estimates (dashed, broken at gaps) against the smoothed path.
pub fn elasticity_svg(s: &ElasticitySeries) -> String {
    let x = Axis::new(s.years.iter().map(|y| *y as f64), PAD + 10.0, W - PAD);
    let y = Axis::new(
        s.epsilon_raw.iter().flatten().copied().chain(s.epsilon_smooth.iter().copied()),
        H - PAD,
        PAD,
    );
    let mut c = Canvas::new(W, H, &format!("{}: elasticity", s.country_code));
    c.frame(x, y, "year", "elasticity");
    let mut run: Vec<(f64, f64)> = Vec::new();
    for (yr, v) in s.years.iter().zip(&s.epsilon_raw) {
        match v {
            Some(v) => run.push((x.at(*yr as f64), y.at(*v))),
            None => {
                c.polyline(&run, PALETTE[7], true);
                run.clear();
            }
        }
    }
    c.polyline(&run, PALETTE[7], true);
    let smooth: Vec<(f64, f64)> = s
        .years
        .iter()
        .zip(&s.epsilon_smooth)
        .map(|(yr, v)| (x.at(*yr as f64), y.at(*v)))
        .collect();
    c.polyline(&smooth, PALETTE[0], false);
    c.legend(W - PAD - 90.0, PAD + 12.0, &[("raw", PALETTE[7]), ("smoothed", PALETTE[0])]);
    c.finish()
}

/// Two panels: tension vs pace and tension vs instability, coloured by label.
pub fn regime_scatter_svg(assignments: &[RegimeAssignment], title: &str) -> String {
    let width = 2.0 * W;
    let mut c = Canvas::new(width, H, title);
    let x = Axis::new(assignments.iter().map(|a| a.features[0]), PAD + 10.0, W - PAD / 2.0);
    for (panel, (dim, name)) in [(1usize, "pace_z"), (2, "instability_z")].into_iter().enumerate() {
        let shift = panel as f64 * W;
        let xp = Axis {
            p0: x.p0 + shift,
            p1: x.p1 + shift,
            ..x
        };
        let y = Axis::new(assignments.iter().map(|a| a.features[dim]), H - PAD, PAD);
        c.frame(xp, y, "tension_z", name);
        for a in assignments {
            c.dot(xp.at(a.features[0]), y.at(a.features[dim]), label_colour(a.label));
        }
    }
    let items: Vec<(&str, &str)> = RegimeLabel::ALL.iter().map(|l| (l.as_str(), label_colour(*l))).collect();
    c.legend(width - PAD - 110.0, PAD + 12.0, &items);
    c.finish()
}

/// One precision-recall step curve per detector.
pub fn pr_curves_svg(curves: &[PrCurve], title: &str) -> String {
    let x = Axis::fixed(0.0, 1.0, PAD + 10.0, W - PAD);
    let y = Axis::fixed(0.0, 1.0, H - PAD, PAD);
    let mut c = Canvas::new(W, H, title);
    c.frame(x, y, "recall", "precision");
    let mut items = Vec::new();
    for (i, curve) in curves.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut pts = Vec::with_capacity(2 * curve.points.len() + 1);
        let mut prev_r = 0.0;
        for &(r, p) in &curve.points {
            pts.push((x.at(prev_r), y.at(p)));
            pts.push((x.at(r), y.at(p)));
            prev_r = r;
        }
        c.polyline(&pts, colour, false);
        items.push((curve.model.as_str(), colour));
    }
    c.legend(W - PAD - 90.0, PAD + 12.0, &items);
    c.finish()
}
