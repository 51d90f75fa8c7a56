//! Standalone SVG charts written as plain text.

use std::fmt::Write;

use super::Header;
use crate::ranking::SensitivityRecord;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 90.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    /// Individual observations drawn as dots over the bar.
    pub points: Vec<f64>,
}

impl Bar {
    pub fn new(label: &str, value: f64) -> Self {
        Self {
            label: label.to_string(),
            value,
            points: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub group: String,
}

/// Maps data values onto a pixel interval.
#[derive(Clone, Copy, Debug)]
struct Scale {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, p0: f64, p1: f64) -> Self {
        let (mut lo, mut hi) = values.filter(|v| v.is_finite()).fold((0.0f64, 0.0f64), |(l, h), v| (l.min(v), h.max(v)));
        if hi - lo < 1e-12 {
            lo -= 1.0;
            hi += 1.0;
        }
        let pad = (hi - lo) * 0.05;
        Self { lo: lo - pad, hi: hi + pad, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }
}

fn open(out: &mut String, title: &str, header: &Header) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(out, "<metadata>{}</metadata>", escape(&serde_json::to_string(header).expect("header serializes")));
    let _ = writeln!(out, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
}

fn y_axis(out: &mut String, sy: &Scale, label: &str) {
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#, H - BOTTOM);
    for i in 0..=4 {
        let v = sy.lo + (sy.hi - sy.lo) * f64::from(i) / 4.0;
        let y = sy.map(v);
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#, LEFT - 4.0, y + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">{}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0,
        escape(label)
    );
}

pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar], header: &Header) -> String {
    let mut out = String::new();
    open(&mut out, title, header);
    let sy = Scale::new(bars.iter().flat_map(|b| std::iter::once(b.value).chain(b.points.iter().copied())), H - BOTTOM, TOP);
    y_axis(&mut out, &sy, y_label);
    let zero = sy.map(0.0);
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{zero:.1}" x2="{}" y2="{zero:.1}" stroke="black"/>"#, W - RIGHT);
    let slot = (W - LEFT - RIGHT) / bars.len().max(1) as f64;
    for (i, b) in bars.iter().enumerate() {
        let x = LEFT + slot * i as f64 + slot * 0.15;
        let w = slot * 0.7;
        let y = sy.map(b.value);
        let color = if b.value >= 0.0 { PALETTE[0] } else { PALETTE[3] };
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="{w:.1}" height="{:.1}" fill="{color}" fill-opacity="0.6"><title>{}: {:.4}</title></rect>"#,
            y.min(zero),
            (y - zero).abs(),
            escape(&b.label),
            b.value
        );
        for (j, &p) in b.points.iter().enumerate() {
            let jitter = (j as f64 * 0.618_034).fract() - 0.5;
            let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="black"/>"#, x + w / 2.0 + jitter * w * 0.6, sy.map(p));
        }
        let lx = x + w / 2.0;
        let ly = H - BOTTOM + 12.0;
        let _ = writeln!(out, r#"<text x="{lx:.1}" y="{ly:.1}" transform="rotate(35 {lx:.1} {ly:.1})">{}</text>"#, escape(&b.label));
    }
    out.push_str("</svg>\n");
    out
}

/// Mean ψ bars with per-replicate points for the `top` concepts by |ψ|
/// among the significant ones, or among all when none is significant.
pub fn top_concepts(records: &[SensitivityRecord], top: usize, header: &Header) -> String {
    let sig: Vec<&SensitivityRecord> = records.iter().filter(|r| r.significant).collect();
    let pool: Vec<&SensitivityRecord> = if sig.is_empty() { records.iter().collect() } else { sig };
    let bars: Vec<Bar> = pool
        .into_iter()
        .take(top)
        .map(|r| Bar {
            label: r.concept.clone(),
            value: r.psi_mean,
            points: r.psi_samples.clone(),
        })
        .collect();
    bar_chart("Top concepts by sensitivity", "psi", &bars, header)
}

pub fn scatter(title: &str, x_label: &str, y_label: &str, points: &[Point], header: &Header) -> String {
    let mut out = String::new();
    open(&mut out, title, header);
    let sx = Scale::new(points.iter().map(|p| p.x), LEFT, W - RIGHT - 110.0);
    let sy = Scale::new(points.iter().map(|p| p.y), H - BOTTOM, TOP);
    y_axis(&mut out, &sy, y_label);
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, H - BOTTOM, W - RIGHT - 110.0, H - BOTTOM);
    for i in 0..=4 {
        let v = sx.lo + (sx.hi - sx.lo) * f64::from(i) / 4.0;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{v:.2}</text>"#, sx.map(v), H - BOTTOM + 14.0);
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT - 110.0) / 2.0, H - BOTTOM + 32.0, escape(x_label));
    let mut groups: Vec<&str> = Vec::new();
    for p in points {
        if !groups.contains(&p.group.as_str()) {
            groups.push(&p.group);
        }
    }
    for p in points {
        let g = groups.iter().position(|g| *g == p.group).unwrap_or(0);
        let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{}" fill-opacity="0.7"/>"#, sx.map(p.x), sy.map(p.y), PALETTE[g % PALETTE.len()]);
    }
    for (i, g) in groups.iter().enumerate() {
        let y = TOP + 14.0 * i as f64;
        let _ = writeln!(out, r#"<circle cx="{}" cy="{:.1}" r="4" fill="{}"/>"#, W - 110.0, y, PALETTE[i % PALETTE.len()]);
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}">{}</text>"#, W - 100.0, y + 4.0, escape(g));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bar_chart_is_well_formed() {
        let h = Header::new(&serde_json::json!({"note": "<&>"})).unwrap();
        let s = bar_chart("t", "y", &[Bar::new("a<b", 0.5), Bar::new("c", -0.25)], &h);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<rect").count(), 3);
        assert!(s.contains("a&lt;b") && !s.contains("a<b"));
        assert!(s.contains("&lt;&amp;&gt;"));
    }

    #[test]
    fn scatter_has_one_circle_per_point_plus_legend() {
        let h = Header::new(&()).unwrap();
        let pts: Vec<Point> = (0..5).map(|i| Point { x: i as f64, y: -(i as f64), group: (i % 2).to_string() }).collect();
        let s = scatter("t", "x", "y", &pts, &h);
        assert_eq!(s.matches("<circle").count(), 5 + 2);
    }
}
