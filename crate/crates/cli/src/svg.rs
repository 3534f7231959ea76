//! Minimal static SVG rendering for line, scatter and raster plots.

use std::fmt::Write;

use crate::report::{Plot, PlotBody, Raster, Series, Style};

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            (lo, hi) = (lo - pad, hi + pad);
        } else if !log {
            let pad = 0.04 * (hi - lo);
            (lo, hi) = (lo - pad, hi + pad);
        }
        Axis { lo, hi, log }
    }

    /// Position in `[0, 1]`, or `None` for values a log axis cannot show.
    fn unit(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log && self.hi - self.lo >= 1.0 {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0);
            let mut out = Vec::new();
            let mut e = (self.lo / step).ceil() * step;
            while e <= self.hi + 1e-9 {
                out.push((10f64.powf(e), format!("1e{}", e.round() as i64)));
                e += step;
            }
            return out;
        }
        let (lo, hi) = if self.log { (10f64.powf(self.lo), 10f64.powf(self.hi)) } else { (self.lo, self.hi) };
        let raw = (hi - lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let mut out = Vec::new();
        let mut t = (lo / step).ceil() * step;
        while t <= hi + step * 1e-9 {
            let v = if t.abs() < step * 1e-9 { 0.0 } else { t };
            out.push((v, tick_label(v)));
            t += step;
        }
        out
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(plot: &Plot) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        escape(&plot.title)
    );
    match &plot.body {
        PlotBody::Curves(series) => curves(&mut out, plot, series),
        PlotBody::Raster(r) => raster(&mut out, plot, r),
    }
    out.push_str("</svg>\n");
    out
}

fn frame(out: &mut String, plot: &Plot, ax: &Axis, ay: &Axis) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for (v, label) in ax.ticks() {
        if let Some(u) = ax.unit(v) {
            let x = LEFT + u * pw;
            let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, TOP + ph);
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, TOP + ph + 16.0);
        }
    }
    for (v, label) in ay.ticks() {
        if let Some(u) = ay.unit(v) {
            let y = TOP + (1.0 - u) * ph;
            let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 6.0, y + 4.0);
        }
    }
    let scale = |log: bool| if log { " (log)" } else { "" };
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}{}</text>"#,
        LEFT + pw / 2.0,
        H - 18.0,
        escape(&plot.x_label),
        scale(plot.log_x)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label),
        scale(plot.log_y)
    );
}

fn legend(out: &mut String, entries: &[(String, &str)]) {
    for (i, (name, color)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = W - RIGHT + 12.0;
        let _ = writeln!(out, r#"<rect x="{x}" y="{:.2}" width="12" height="12" fill="{color}"/>"#, y - 10.0);
        let _ = writeln!(out, r#"<text x="{}" y="{y:.2}">{}</text>"#, x + 18.0, escape(name));
    }
}

fn curves(out: &mut String, plot: &Plot, series: &[Series]) {
    let ax = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), plot.log_x);
    let ay = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), plot.log_y);
    frame(out, plot, &ax, &ay);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let mut entries = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        entries.push((s.name.clone(), color));
        let pts: Vec<(f64, f64)> =
            s.points.iter().filter_map(|&(x, y)| Some((LEFT + ax.unit(x)? * pw, TOP + (1.0 - ay.unit(y)?) * ph))).collect();
        match s.style {
            Style::Line => {
                let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
            }
            Style::Points => {
                for (x, y) in pts {
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#);
                }
            }
        }
    }
    legend(out, &entries);
}

fn raster(out: &mut String, plot: &Plot, r: &Raster) {
    let mut xs: Vec<f64> = r.cells.iter().map(|c| c.0).collect();
    let mut ys: Vec<f64> = r.cells.iter().map(|c| c.1).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let dx = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let dy = ys.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let dx = if dx.is_finite() { dx } else { 1.0 };
    let dy = if dy.is_finite() { dy } else { 1.0 };
    let ax = Axis { lo: xs[0] - dx / 2.0, hi: xs[xs.len() - 1] + dx / 2.0, log: false };
    let ay = Axis { lo: ys[0] - dy / 2.0, hi: ys[ys.len() - 1] + dy / 2.0, log: false };
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let (cw, ch) = (dx / (ax.hi - ax.lo) * pw, dy / (ay.hi - ay.lo) * ph);
    for &(x, y, c) in &r.cells {
        let px = LEFT + ax.unit(x).unwrap_or(0.0) * pw - cw / 2.0;
        let py = TOP + (1.0 - ay.unit(y).unwrap_or(0.0)) * ph - ch / 2.0;
        let _ = writeln!(
            out,
            r#"<rect x="{px:.2}" y="{py:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            cw + 0.3,
            ch + 0.3,
            r.categories[c].1
        );
    }
    frame(out, plot, &ax, &ay);
    let entries: Vec<(String, &str)> = r.categories.iter().map(|(n, c)| (n.clone(), *c)).collect();
    legend(out, &entries);
}
