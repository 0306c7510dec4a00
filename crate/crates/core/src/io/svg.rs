//! Minimal SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const TICKS: usize = 5;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Self::default() }
    }

    pub fn with_series(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { label: label.into(), points });
        self
    }

    fn map(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let x = if self.log_x { (x > 0.0).then(|| x.log10())? } else { x };
        let y = if self.log_y { (y > 0.0).then(|| y.log10())? } else { y };
        (x.is_finite() && y.is_finite()).then_some((x, y))
    }

    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let pts: Vec<(f64, f64)> = self.series.iter().flat_map(|s| s.points.iter().filter_map(|&(x, y)| self.map(x, y))).collect();
        if pts.is_empty() {
            return None;
        }
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts {
            b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
        }
        if b.1 == b.0 {
            b.1 = b.0 + 1.0;
        }
        if b.3 == b.2 {
            b.3 = b.2 + 1.0;
        }
        Some(b)
    }

    pub fn to_svg(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN / 2.0, HEIGHT - MARGIN, MARGIN / 1.5);
        let _ = writeln!(out, r#"<path d="M{x0} {y1} V{y0} H{x1}" stroke="black" fill="none"/>"#);
        let _ =
            writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, escape(&self.x_label));
        let _ = writeln!(
            out,
            r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        if let Some((bx0, bx1, by0, by1)) = self.bounds() {
            let px = |x: f64| x0 + (x - bx0) / (bx1 - bx0) * (x1 - x0);
            let py = |y: f64| y0 - (y - by0) / (by1 - by0) * (y0 - y1);
            for k in 0..=TICKS {
                let f = k as f64 / TICKS as f64;
                let (vx, vy) = (bx0 + f * (bx1 - bx0), by0 + f * (by1 - by0));
                let lx = if self.log_x { format!("1e{vx:.1}") } else { format!("{vx:.3}") };
                let ly = if self.log_y { format!("1e{vy:.1}") } else { format!("{vy:.3}") };
                let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{lx}</text>"#, px(vx), y0 + 16.0);
                let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ly}</text>"#, x0 - 4.0, py(vy) + 4.0);
            }
            for (n, s) in self.series.iter().enumerate() {
                let color = COLORS[n % COLORS.len()];
                let mut d = String::new();
                let mut pen_down = false;
                for &(x, y) in &s.points {
                    match self.map(x, y) {
                        Some((mx, my)) => {
                            let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, px(mx), py(my));
                            pen_down = true;
                        }
                        None => pen_down = false,
                    }
                }
                let _ = writeln!(out, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.trim_end());
                let ly = y1 + 14.0 * n as f64;
                let _ = writeln!(out, r#"<text x="{:.1}" y="{ly:.1}" fill="{color}" text-anchor="end">{}</text>"#, x1, escape(&s.label));
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_svg(path: &Path, plot: &LinePlot) -> Result<()> {
    std::fs::write(path, plot.to_svg()).map_err(|e| Error::io(path, e))
}
