//! Minimal deterministic SVG charts. All coordinates are printed with two
//! decimals so identical data gives identical bytes.

use std::fmt::Write as _;

const W: f64 = 640.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

pub enum Kind {
    Line,
    Bars,
}

pub struct Panel<'a> {
    pub title: String,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series<'a>>,
    pub log_y: bool,
    pub kind: Kind,
    /// Same scale on both axes (orbits).
    pub equal_aspect: bool,
}

impl<'a> Panel<'a> {
    pub fn line(
        title: impl Into<String>,
        x_label: &'a str,
        y_label: &'a str,
        series: Vec<Series<'a>>,
    ) -> Self {
        Self {
            title: title.into(),
            x_label,
            y_label,
            series,
            log_y: false,
            kind: Kind::Line,
            equal_aspect: false,
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn bars(mut self) -> Self {
        self.kind = Kind::Bars;
        self
    }

    pub fn equal_aspect(mut self) -> Self {
        self.equal_aspect = true;
        self
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn panel(out: &mut String, p: &Panel, y0: f64) {
    let ty = |v: f64| if p.log_y { v.max(1e-300).log10() } else { v };
    let (mut xl, mut xh) = range(p.series.iter().flat_map(|s| s.x.iter().copied()));
    let (mut yl, mut yh) = range(p.series.iter().flat_map(|s| s.y.iter().map(|v| ty(*v))));
    if matches!(p.kind, Kind::Bars) {
        yl = yl.min(0.0);
        let step = p
            .series
            .first()
            .and_then(|s| (s.x.len() > 1).then(|| s.x[1] - s.x[0]))
            .unwrap_or(1.0);
        xl -= 0.5 * step;
        xh += 0.5 * step;
    }
    let pw = W - MARGIN_L - MARGIN_R;
    let ph = PANEL_H - MARGIN_T - MARGIN_B;
    if p.equal_aspect {
        let (cx, cy) = (0.5 * (xl + xh), 0.5 * (yl + yh));
        let half = 0.5 * ((xh - xl) / pw).max((yh - yl) / ph);
        xl = cx - half * pw;
        xh = cx + half * pw;
        yl = cy - half * ph;
        yh = cy + half * ph;
    }
    let sx = |v: f64| MARGIN_L + (v - xl) / (xh - xl) * pw;
    let sy = |v: f64| y0 + MARGIN_T + (1.0 - (ty(v) - yl) / (yh - yl)) * ph;
    let top = y0 + MARGIN_T;
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L:.2}" y="{top:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        y0 + 20.0,
        esc(&p.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        MARGIN_L + pw / 2.0,
        y0 + PANEL_H - 8.0,
        esc(p.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        esc(&if p.log_y {
            format!("log10 {}", p.y_label)
        } else {
            p.y_label.to_string()
        })
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = xl + f * (xh - xl);
        let yv = yl + f * (yh - yl);
        let gx = MARGIN_L + f * pw;
        let gy = top + (1.0 - f) * ph;
        let _ = writeln!(
            out,
            r#"<text x="{gx:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
            top + ph + 14.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
            MARGIN_L - 4.0,
            gy + 3.0,
            tick(yv)
        );
    }
    for (i, s) in p.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        match p.kind {
            Kind::Line if s.x.len() == 1 => {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#,
                    sx(s.x[0]),
                    sy(s.y[0])
                );
            }
            Kind::Line => {
                let mut d = String::new();
                let mut pen_up = true;
                for (x, y) in s.x.iter().zip(s.y) {
                    if !(x.is_finite() && ty(*y).is_finite()) {
                        pen_up = true;
                        continue;
                    }
                    let _ = write!(
                        d,
                        "{}{:.2},{:.2} ",
                        if pen_up { "M" } else { "L" },
                        sx(*x),
                        sy(*y)
                    );
                    pen_up = false;
                }
                let _ = writeln!(
                    out,
                    r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
                    d.trim_end()
                );
            }
            Kind::Bars => {
                let step = if s.x.len() > 1 { s.x[1] - s.x[0] } else { 1.0 };
                let bw = (0.8 * step / (xh - xl) * pw).max(0.5);
                let base = sy(if p.log_y { 10f64.powf(yl) } else { yl.max(0.0) });
                for (x, y) in s.x.iter().zip(s.y) {
                    let yt = sy(*y).min(base);
                    let _ = writeln!(
                        out,
                        r#"<rect x="{:.2}" y="{yt:.2}" width="{bw:.2}" height="{:.2}" fill="{color}"/>"#,
                        sx(*x) - bw / 2.0,
                        (base - sy(*y)).abs()
                    );
                }
            }
        }
        if p.series.len() > 1 {
            let ly = top + 14.0 + 14.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{ly:.2}" text-anchor="end" font-size="11" fill="{color}">{}</text>"#,
                MARGIN_L + pw - 6.0,
                esc(s.label)
            );
        }
    }
}

/// Renders panels stacked vertically.
pub fn render(panels: &[Panel]) -> String {
    let h = PANEL_H * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0}" height="{h:.0}" viewBox="0 0 {W:.0} {h:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        panel(&mut out, p, PANEL_H * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

/// Keeps at most `max` evenly spaced points.
pub fn decimate(x: &[f64], y: &[f64], max: usize) -> (Vec<f64>, Vec<f64>) {
    let step = x.len().div_ceil(max.max(1)).max(1);
    (
        x.iter().step_by(step).copied().collect(),
        y.iter().step_by(step).copied().collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_input_gives_identical_bytes() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let mk = || {
            render(&[Panel::line(
                "t",
                "x",
                "y",
                vec![Series {
                    label: "s",
                    x: &x,
                    y: &y,
                }],
            )])
        };
        assert_eq!(mk(), mk());
        assert!(mk().starts_with("<svg") && mk().contains("<path d=\"M"));
    }

    #[test]
    fn flat_and_empty_series_render() {
        let x = [1.0, 2.0];
        let y = [3.0, 3.0];
        let s = render(&[Panel::line(
            "flat",
            "x",
            "y",
            vec![Series {
                label: "a",
                x: &x,
                y: &y,
            }],
        )
        .bars()]);
        assert!(!s.contains("NaN"));
        let s = render(&[Panel::line(
            "empty",
            "x",
            "y",
            vec![Series {
                label: "a",
                x: &[],
                y: &[],
            }],
        )]);
        assert!(!s.contains("NaN"));
    }

    #[test]
    fn text_is_escaped() {
        let s = render(&[Panel::line("a < b & c", "x", "y", vec![])]);
        assert!(s.contains("a &lt; b &amp; c"));
    }
}
