//! Static log-log SVG of gap against horizon.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

pub struct LogLogPlot<'a> {
    pub title: &'a str,
    /// Every finite positive `(T, gap)` sample.
    pub samples: &'a [(f64, f64)],
    /// `(T, mean gap)`.
    pub means: &'a [(f64, f64)],
    /// Fitted `log gap = intercept + slope · log T`.
    pub slope: f64,
    pub intercept: f64,
}

fn decades(lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.log10().floor(), hi.log10().ceil());
    if a == b {
        (a - 0.5, b + 0.5)
    } else {
        (a, b)
    }
}

impl LogLogPlot<'_> {
    pub fn render(&self) -> String {
        let pts = self.samples.iter().chain(self.means).filter(|(t, g)| *t > 0.0 && *g > 0.0);
        let (mut tx, mut gy) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for &(t, g) in pts {
            tx = (tx.0.min(t), tx.1.max(t));
            gy = (gy.0.min(g), gy.1.max(g));
        }
        if !tx.0.is_finite() {
            tx = (1.0, 10.0);
            gy = (1.0, 10.0);
        }
        let (x0, x1) = decades(tx.0, tx.1);
        let (y0, y1) = decades(gy.0, gy.1);
        let px = |t: f64| LEFT + (t.log10() - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |g: f64| TOP + (y1 - g.log10()) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(self.title));
        for e in (x0 as i32)..=(x1 as i32) {
            let x = px(10f64.powi(e));
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, H - BOTTOM);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"#, H - BOTTOM + 18.0);
        }
        for e in (y0 as i32)..=(y1 as i32) {
            let y = py(10f64.powi(e));
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, W - RIGHT);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#, LEFT - 6.0, y + 4.0);
        }
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - LEFT - RIGHT,
            H - TOP - BOTTOM
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">T</text>"#, W / 2.0, H - 12.0);
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">f(x) − f*</text>"#,
            H / 2.0,
            H / 2.0
        );
        for &(t, g) in self.samples.iter().filter(|(t, g)| *t > 0.0 && *g > 0.0) {
            let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#9ab" fill-opacity="0.6"/>"##, px(t), py(g));
        }
        let mean_pts: Vec<String> = self
            .means
            .iter()
            .filter(|(t, g)| *t > 0.0 && *g > 0.0)
            .map(|&(t, g)| format!("{:.2},{:.2}", px(t), py(g)))
            .collect();
        if !mean_pts.is_empty() {
            let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f4e99" stroke-width="2"/>"##, mean_pts.join(" "));
            for p in &mean_pts {
                let (x, y) = p.split_once(',').unwrap();
                let _ = writeln!(s, r##"<circle cx="{x}" cy="{y}" r="4" fill="#1f4e99"/>"##);
            }
        }
        if self.slope.is_finite() && self.intercept.is_finite() {
            let fit = |t: f64| 10f64.powf(self.intercept + self.slope * t.log10());
            let (ta, tb) = (tx.0, tx.1);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c33" stroke-dasharray="6 4" stroke-width="1.5"/>"##,
                px(ta),
                py(fit(ta)),
                px(tb),
                py(fit(tb))
            );
        }
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" text-anchor="end" fill="#c33">fitted slope {:.3}</text>"##,
            W - RIGHT - 8.0,
            TOP + 18.0,
            self.slope
        );
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
