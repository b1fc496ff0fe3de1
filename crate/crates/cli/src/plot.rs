//! Hand-rolled SVG plots for post-run inspection: polyline/marker series
//! over linear or log₁₀ axes. Static markup only — no scripts, no deps.

use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub line: bool,
    pub markers: bool,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const ML: f64 = 76.0;
const MR: f64 = 24.0;
const MT: f64 = 44.0;
const MB: f64 = 58.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#6b6b6b",
];

fn tick_text(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.1e}")
    }
}

impl Plot {
    /// Map data through the axis transforms, dropping points a log axis
    /// cannot show.
    fn transformed(&self) -> Vec<Vec<(f64, f64)>> {
        self.series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .filter(|(x, y)| {
                        x.is_finite()
                            && y.is_finite()
                            && (!self.log_x || *x > 0.0)
                            && (!self.log_y || *y > 0.0)
                    })
                    .map(|&(x, y)| {
                        (
                            if self.log_x { x.log10() } else { x },
                            if self.log_y { y.log10() } else { y },
                        )
                    })
                    .collect()
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let data = self.transformed();
        let all: Vec<(f64, f64)> = data.iter().flatten().copied().collect();
        let (mut x0, mut x1) = bounds(all.iter().map(|p| p.0));
        let (mut y0, mut y1) = bounds(all.iter().map(|p| p.1));
        pad(&mut x0, &mut x1);
        pad(&mut y0, &mut y1);

        let px = |x: f64| ML + (x - x0) / (x1 - x0) * (WIDTH - ML - MR);
        let py = |y: f64| HEIGHT - MB - (y - y0) / (y1 - y0) * (HEIGHT - MT - MB);

        let mut svg = String::new();
        let _ = write!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
        );
        let _ = write!(
            svg,
            r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
        );
        let _ = write!(
            svg,
            r##"<text x="{:.1}" y="26" text-anchor="middle" font-size="16" fill="#222">{}</text>"##,
            (ML + WIDTH - MR) / 2.0,
            escape(&self.title)
        );

        // Frame, ticks, grid.
        let _ = write!(
            svg,
            r##"<rect x="{ML}" y="{MT}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
            WIDTH - ML - MR,
            HEIGHT - MT - MB
        );
        for t in ticks(x0, x1, self.log_x) {
            let x = px(t);
            let _ = write!(
                svg,
                r##"<line x1="{x:.1}" y1="{MT}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="11" fill="#333">{}</text>"##,
                HEIGHT - MB,
                HEIGHT - MB + 16.0,
                tick_label(t, self.log_x)
            );
        }
        for t in ticks(y0, y1, self.log_y) {
            let y = py(t);
            let _ = write!(
                svg,
                r##"<line x1="{ML}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11" fill="#333">{}</text>"##,
                WIDTH - MR,
                ML - 6.0,
                y + 4.0,
                tick_label(t, self.log_y)
            );
        }
        let _ = write!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13" fill="#222">{}</text>"##,
            (ML + WIDTH - MR) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = write!(
            svg,
            r##"<text x="18" y="{:.1}" text-anchor="middle" font-size="13" fill="#222" transform="rotate(-90 18 {:.1})">{}</text>"##,
            (MT + HEIGHT - MB) / 2.0,
            (MT + HEIGHT - MB) / 2.0,
            escape(&self.y_label)
        );

        for (i, (series, pts)) in self.series.iter().zip(&data).enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if series.line && pts.len() > 1 {
                let mut d = String::new();
                for (x, y) in pts {
                    let _ = write!(d, "{:.2},{:.2} ", px(*x), py(*y));
                }
                let _ = write!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                    d.trim_end()
                );
            }
            if series.markers {
                for (x, y) in pts {
                    let _ = write!(
                        svg,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                        px(*x),
                        py(*y)
                    );
                }
            }
        }

        // Legend (only when labels distinguish anything).
        let labeled: Vec<_> = self
            .series
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.label.is_empty())
            .collect();
        if labeled.len() > 1 || (labeled.len() == 1 && self.series.len() == 1) {
            for (row, (i, s)) in labeled.iter().enumerate() {
                let y = MT + 14.0 + 16.0 * row as f64;
                let color = PALETTE[i % PALETTE.len()];
                let _ = write!(
                    svg,
                    r##"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}" font-size="12" fill="#222">{}</text>"##,
                    ML + 8.0,
                    y - 9.0,
                    ML + 22.0,
                    y,
                    escape(&s.label)
                );
            }
        }

        svg.push_str("</svg>\n");
        svg
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn pad(lo: &mut f64, hi: &mut f64) {
    let span = *hi - *lo;
    let margin = if span > 0.0 {
        0.06 * span
    } else {
        0.5 * lo.abs().max(1.0)
    };
    *lo -= margin;
    *hi += margin;
}

/// Tick positions in transformed coordinates: even subdivision on linear
/// axes, whole decades on log axes.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let k0 = lo.ceil() as i64;
        let k1 = hi.floor() as i64;
        if k0 <= k1 && (k1 - k0) <= 12 {
            return (k0..=k1).map(|k| k as f64).collect();
        }
    }
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn tick_label(t: f64, log: bool) -> String {
    if log {
        if (t - t.round()).abs() < 1e-9 {
            format!("1e{}", t.round() as i64)
        } else {
            format!("{:.2}", 10f64.powf(t))
        }
    } else {
        tick_text(t)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
