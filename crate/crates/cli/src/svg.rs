//! Minimal SVG line plots.

use std::fmt::Write as _;

use safechain::Trajectory;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAD: f64 = 56.0;
const MAX_POINTS: usize = 2000;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Rounds to six significant digits and drops trailing zeros.
pub fn num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A disc drawn in data coordinates, e.g. an obstacle.
pub struct Disc {
    pub center: (f64, f64),
    pub radius: f64,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub discs: Vec<Disc>,
    /// Points marked with a small square.
    pub markers: Vec<(String, (f64, f64))>,
    /// Equal scaling on both axes.
    pub equal_aspect: bool,
    /// Horizontal reference line.
    pub zero_line: bool,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn sx(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * PAD)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - PAD - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * PAD)
    }
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi <= lo || !(hi - lo).is_finite() {
        let c = if lo.is_finite() { lo } else { 0.0 };
        return (c - 1.0, c + 1.0);
    }
    let m = 0.05 * (hi - lo);
    (lo - m, hi + m)
}

impl Plot {
    fn frame(&self) -> Frame {
        let (mut xl, mut xh, mut yl, mut yh) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        let mut take = |x: f64, y: f64| {
            if x.is_finite() && y.is_finite() {
                xl = xl.min(x);
                xh = xh.max(x);
                yl = yl.min(y);
                yh = yh.max(y);
            }
        };
        for s in &self.series {
            for &(x, y) in &s.points {
                take(x, y);
            }
        }
        for d in &self.discs {
            take(d.center.0 - d.radius, d.center.1 - d.radius);
            take(d.center.0 + d.radius, d.center.1 + d.radius);
        }
        for (_, (x, y)) in &self.markers {
            take(*x, *y);
        }
        if self.zero_line {
            let x = self
                .series
                .iter()
                .flat_map(|s| s.points.first())
                .map(|p| p.0)
                .next()
                .unwrap_or(0.0);
            take(x, 0.0);
        }
        let (mut x0, mut x1) = widen(xl, xh);
        let (mut y0, mut y1) = widen(yl, yh);
        if self.equal_aspect {
            let sx = (x1 - x0) / (WIDTH - 2.0 * PAD);
            let sy = (y1 - y0) / (HEIGHT - 2.0 * PAD);
            let s = sx.max(sy);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            x0 = cx - 0.5 * s * (WIDTH - 2.0 * PAD);
            x1 = cx + 0.5 * s * (WIDTH - 2.0 * PAD);
            y0 = cy - 0.5 * s * (HEIGHT - 2.0 * PAD);
            y1 = cy + 0.5 * s * (HEIGHT - 2.0 * PAD);
        }
        Frame { x0, x1, y0, y1 }
    }

    pub fn render(&self) -> String {
        let f = self.frame();
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = WIDTH,
            h = HEIGHT
        )
        .unwrap();
        writeln!(
            s,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        )
        .unwrap();
        // Axes box, ticks and labels.
        writeln!(
            s,
            r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * PAD,
            HEIGHT - 2.0 * PAD
        )
        .unwrap();
        for i in 0..=4 {
            let a = i as f64 / 4.0;
            let xv = f.x0 + a * (f.x1 - f.x0);
            let yv = f.y0 + a * (f.y1 - f.y0);
            writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                num(f.sx(xv)),
                num(HEIGHT - PAD + 16.0),
                num(xv)
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                num(PAD - 4.0),
                num(f.sy(yv) + 4.0),
                num(yv)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        )
        .unwrap();
        if self.zero_line && f.y0 < 0.0 && f.y1 > 0.0 {
            writeln!(
                s,
                r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#888" stroke-dasharray="4 3"/>"##,
                num(PAD),
                num(WIDTH - PAD),
                y = num(f.sy(0.0))
            )
            .unwrap();
        }
        for d in &self.discs {
            writeln!(
                s,
                r##"<circle cx="{}" cy="{}" r="{}" fill="#bbbbbb" fill-opacity="0.6" stroke="black"/>"##,
                num(f.sx(d.center.0)),
                num(f.sy(d.center.1)),
                num(d.radius / (f.x1 - f.x0) * (WIDTH - 2.0 * PAD))
            )
            .unwrap();
        }
        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let stride = series.points.len().div_ceil(MAX_POINTS).max(1);
            let mut pts = String::new();
            let last = series.points.len().saturating_sub(1);
            for (k, &(x, y)) in series.points.iter().enumerate() {
                if (k % stride == 0 || k == last) && x.is_finite() && y.is_finite() {
                    write!(pts, "{},{} ", num(f.sx(x)), num(f.sy(y))).unwrap();
                }
            }
            writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.trim_end()
            )
            .unwrap();
            let ly = PAD + 16.0 + 16.0 * i as f64;
            writeln!(
                s,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#,
                num(WIDTH - PAD - 110.0),
                num(ly - 4.0),
                num(WIDTH - PAD - 90.0),
                num(ly - 4.0)
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{}" y="{}">{}</text>"#,
                num(WIDTH - PAD - 86.0),
                num(ly),
                escape(&series.label)
            )
            .unwrap();
        }
        for (label, (x, y)) in &self.markers {
            let (px, py) = (f.sx(*x), f.sy(*y));
            writeln!(
                s,
                r#"<rect x="{}" y="{}" width="6" height="6" fill="black"/>"#,
                num(px - 3.0),
                num(py - 3.0)
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{}" y="{}">{}</text>"#,
                num(px + 6.0),
                num(py - 6.0),
                escape(label)
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Planar path of the first two position coordinates.
pub fn xy_plot(trajs: &[&Trajectory], obstacle: Option<Disc>, goal: &[f64]) -> Plot {
    let series = trajs
        .iter()
        .map(|t| Series {
            label: t.mode.as_str().into(),
            points: (0..t.len())
                .map(|k| {
                    let p = t.position(k);
                    (p[0], p.get(1).copied().unwrap_or(0.0))
                })
                .collect(),
        })
        .collect();
    let mut markers = Vec::new();
    if let Some(t) = trajs.first().filter(|t| !t.is_empty()) {
        let p = t.position(0);
        markers.push((
            "start".to_string(),
            (p[0], p.get(1).copied().unwrap_or(0.0)),
        ));
    }
    markers.push((
        "goal".to_string(),
        (goal[0], goal.get(1).copied().unwrap_or(0.0)),
    ));
    Plot {
        title: "Position".into(),
        x_label: "p1".into(),
        y_label: "p2".into(),
        series,
        discs: obstacle.into_iter().collect(),
        markers,
        equal_aspect: true,
        zero_line: false,
    }
}

/// `h₁(t)` for each run.
pub fn h1_plot(trajs: &[&Trajectory]) -> Plot {
    Plot {
        title: "Safety function h1".into(),
        x_label: "t".into(),
        y_label: "h1".into(),
        series: trajs
            .iter()
            .map(|t| Series {
                label: t.mode.as_str().into(),
                points: t.times.iter().copied().zip(t.h1()).collect(),
            })
            .collect(),
        discs: Vec::new(),
        markers: Vec::new(),
        equal_aspect: false,
        zero_line: true,
    }
}

/// `‖u(t)‖` for each run.
pub fn input_plot(trajs: &[&Trajectory]) -> Plot {
    Plot {
        title: "Input norm".into(),
        x_label: "t".into(),
        y_label: "|u|".into(),
        series: trajs
            .iter()
            .map(|t| Series {
                label: t.mode.as_str().into(),
                points: t
                    .times
                    .iter()
                    .zip(&t.inputs)
                    .map(|(&tt, u)| (tt, u.iter().map(|v| v * v).sum::<f64>().sqrt()))
                    .collect(),
            })
            .collect(),
        discs: Vec::new(),
        markers: Vec::new(),
        equal_aspect: false,
        zero_line: false,
    }
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn six_significant_digits() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(123.456789), "123.457");
        assert_eq!(num(-0.000123456789), "-0.000123457");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-1e-12), "-0.000000000001");
    }
}
