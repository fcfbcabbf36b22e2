//! Minimal SVG 1.1 line and histogram plots.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    fn apply(self, v: f64) -> Option<f64> {
        match self {
            Scale::Linear => v.is_finite().then_some(v),
            Scale::Log => (v > 0.0 && v.is_finite()).then(|| v.log10()),
        }
    }
}

struct Line {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    x_scale: Scale,
    y_scale: Scale,
    lines: Vec<Line>,
    bars: Vec<(f64, f64, f64)>,
    markers: Vec<(String, f64)>,
    hlines: Vec<(String, f64)>,
    comment: String,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            lines: Vec::new(),
            bars: Vec::new(),
            markers: Vec::new(),
            hlines: Vec::new(),
            comment: String::new(),
        }
    }

    pub fn scales(mut self, x: Scale, y: Scale) -> Self {
        self.x_scale = x;
        self.y_scale = y;
        self
    }

    /// Text placed in an XML comment at the top of the file.
    pub fn comment(mut self, text: &str) -> Self {
        self.comment = text.replace("--", "- -");
        self
    }

    pub fn line(&mut self, label: &str, x: &[f64], y: &[f64]) {
        self.lines.push(Line { label: label.into(), points: x.iter().copied().zip(y.iter().copied()).collect(), dashed: false });
    }

    pub fn dashed(&mut self, label: &str, x: &[f64], y: &[f64]) {
        self.line(label, x, y);
        self.lines.last_mut().unwrap().dashed = true;
    }

    /// Histogram bars as (left edge, right edge, height).
    pub fn bars(&mut self, bars: Vec<(f64, f64, f64)>) {
        self.bars = bars;
    }

    pub fn vertical(&mut self, label: &str, x: f64) {
        self.markers.push((label.into(), x));
    }

    pub fn horizontal(&mut self, label: &str, y: f64) {
        self.hlines.push((label.into(), y));
    }

    fn bounds(&self) -> Option<((f64, f64), (f64, f64))> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for line in &self.lines {
            for &(x, y) in &line.points {
                if let (Some(x), Some(y)) = (self.x_scale.apply(x), self.y_scale.apply(y)) {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        for &(a, b, h) in &self.bars {
            xs.extend(self.x_scale.apply(a));
            xs.extend(self.x_scale.apply(b));
            ys.extend(self.y_scale.apply(h));
            ys.extend(self.y_scale.apply(0.0));
        }
        xs.extend(self.markers.iter().filter_map(|m| self.x_scale.apply(m.1)));
        ys.extend(self.hlines.iter().filter_map(|m| self.y_scale.apply(m.1)));
        let span = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                return None;
            }
            let pad = if hi > lo { 0.04 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
            Some((lo - pad, hi + pad))
        };
        Some((span(&xs)?, span(&ys)?))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        if !self.comment.is_empty() {
            let _ = writeln!(s, "<!-- {} -->", self.comment);
        }
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ =
            writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + plot_w() / 2.0, esc(&self.title));
        let Some(((x0, x1), (y0, y1))) = self.bounds() else {
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">no finite data</text></svg>"#, WIDTH / 2.0, HEIGHT / 2.0);
            return s;
        };
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w();
        let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h();
        let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="#333"/>"##, plot_w(), plot_h());
        for v in ticks(x0, x1) {
            let _ = writeln!(
                s,
                r##"<line x1="{0:.1}" y1="{1}" x2="{0:.1}" y2="{2}" stroke="#333"/><text x="{0:.1}" y="{3}" text-anchor="middle">{4}</text>"##,
                px(v),
                TOP + plot_h(),
                TOP + plot_h() + 5.0,
                TOP + plot_h() + 18.0,
                tick_label(v, self.x_scale)
            );
        }
        for v in ticks(y0, y1) {
            let _ = writeln!(
                s,
                r##"<line x1="{0}" y1="{1:.1}" x2="{2}" y2="{1:.1}" stroke="#333"/><text x="{3}" y="{4:.1}" text-anchor="end">{5}</text>"##,
                LEFT - 5.0,
                py(v),
                LEFT,
                LEFT - 8.0,
                py(v) + 4.0,
                tick_label(v, self.y_scale)
            );
        }
        let _ =
            writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + plot_w() / 2.0, HEIGHT - 12.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            TOP + plot_h() / 2.0,
            esc(&self.y_label)
        );
        for &(a, b, h) in &self.bars {
            if let (Some(a), Some(b), Some(h), Some(z)) =
                (self.x_scale.apply(a), self.x_scale.apply(b), self.y_scale.apply(h), self.y_scale.apply(0.0).or(Some(y0)))
            {
                let _ = writeln!(
                    s,
                    r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#c7d7ea" stroke="#7a9cc6" stroke-width="0.5"/>"##,
                    px(a),
                    py(h),
                    (px(b) - px(a)).max(0.5),
                    (py(z) - py(h)).max(0.0)
                );
            }
        }
        let mut legend = Vec::new();
        for (i, line) in self.lines.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = line
                .points
                .iter()
                .filter_map(|&(x, y)| Some(format!("{:.2},{:.2}", px(self.x_scale.apply(x)?), py(self.y_scale.apply(y)?))))
                .collect();
            let dash = if line.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, pts.join(" "));
            legend.push((line.label.clone(), color));
        }
        for (label, x) in &self.markers {
            if let Some(v) = self.x_scale.apply(*x) {
                let _ = writeln!(
                    s,
                    r##"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="#555" stroke-dasharray="3 3"/>"##,
                    px(v),
                    TOP,
                    TOP + plot_h()
                );
                legend.push((label.clone(), "#555"));
            }
        }
        for (label, y) in &self.hlines {
            if let Some(v) = self.y_scale.apply(*y) {
                let _ = writeln!(
                    s,
                    r##"<line x1="{0}" y1="{1:.2}" x2="{2}" y2="{1:.2}" stroke="#555" stroke-dasharray="3 3"/>"##,
                    LEFT,
                    py(v),
                    LEFT + plot_w()
                );
                legend.push((label.clone(), "#555"));
            }
        }
        for (i, (label, color)) in legend.iter().enumerate() {
            let y = TOP + 12.0 + 18.0 * i as f64;
            let x = LEFT + plot_w() + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                x + 18.0,
                x + 24.0,
                y + 4.0,
                esc(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn plot_w() -> f64 {
    WIDTH - LEFT - RIGHT
}

fn plot_h() -> f64 {
    HEIGHT - TOP - BOTTOM
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi && out.len() < 12 {
        out.push(if v.abs() < 1e-12 * step { 0.0 } else { v });
        v += step;
    }
    out
}

fn tick_label(v: f64, scale: Scale) -> String {
    match scale {
        Scale::Linear => format!("{}", (v * 1e6).round() / 1e6),
        Scale::Log => format!("1e{}", (v * 100.0).round() / 100.0),
    }
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_lines_markers_and_skips_nonpositive_on_log_axes() {
        let mut p = Plot::new("t <title>", "x", "y").scales(Scale::Log, Scale::Log).comment("hash -- 1");
        p.line("a", &[0.0, 1.0, 10.0], &[1.0, 0.1, 0.01]);
        p.vertical("cut", 2.0);
        let svg = p.render();
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("&lt;title&gt;"));
        assert!(svg.contains("<!-- hash - - 1 -->"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 2);
    }

    #[test]
    fn empty_plot_still_renders() {
        let svg = Plot::new("empty", "x", "y").render();
        assert!(svg.contains("no finite data"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn ticks_are_round_numbers() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().zip([0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
