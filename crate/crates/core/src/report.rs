//! Text tables and self-contained SVG figures.

use std::fmt::Write;

use crate::stats::{CorrelationMatrix, GamFit, LmmFit, PartialEffect};

const W: f64 = 480.0;
const H: f64 = 360.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 56.0;

pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Round tick positions covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

/// Centered curve with a ±2 SE band and a rug of observed values.
pub fn partial_effect_svg(pe: &PartialEffect, observed: &[f64], response: &str) -> String {
    let (x0, x1) = (pe.grid[0], *pe.grid.last().unwrap());
    let lo = pe.fit.iter().zip(&pe.se).map(|(f, s)| f - 2.0 * s).fold(f64::INFINITY, f64::min);
    let hi = pe.fit.iter().zip(&pe.se).map(|(f, s)| f + 2.0 * s).fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.05).max(1e-9);
    let fr = Frame {
        x0,
        x1: if x1 > x0 { x1 } else { x0 + 1.0 },
        y0: lo - pad,
        y1: hi + pad,
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let mut band = String::new();
    for (g, (f, e)) in pe.grid.iter().zip(pe.fit.iter().zip(&pe.se)) {
        let _ = write!(band, "{:.2},{:.2} ", fr.px(*g), fr.py(f + 2.0 * e));
    }
    for (g, (f, e)) in pe.grid.iter().zip(pe.fit.iter().zip(&pe.se)).rev() {
        let _ = write!(band, "{:.2},{:.2} ", fr.px(*g), fr.py(f - 2.0 * e));
    }
    let _ = writeln!(s, r##"<polygon points="{}" fill="#c6dbef" stroke="none"/>"##, band.trim_end());
    if fr.y0 < 0.0 && fr.y1 > 0.0 {
        let y = fr.py(0.0);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
            W - RIGHT
        );
    }
    let curve: Vec<String> = pe
        .grid
        .iter()
        .zip(&pe.fit)
        .map(|(g, f)| format!("{:.2},{:.2}", fr.px(*g), fr.py(*f)))
        .collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="2"/>"##, curve.join(" "));
    let mut rug: Vec<f64> = observed.iter().copied().filter(|v| v.is_finite()).collect();
    rug.sort_by(f64::total_cmp);
    rug.dedup();
    let base = H - BOTTOM;
    for v in rug {
        let x = fr.px(v);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{base:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333" stroke-opacity="0.5"/>"##, base - 6.0);
    }
    axes(&mut s, &fr);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 12.0,
        xml_escape(&pe.covariate)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">partial effect on {}</text>"#,
        TOP + (H - TOP - BOTTOM) / 2.0,
        TOP + (H - TOP - BOTTOM) / 2.0,
        xml_escape(response)
    );
    s.push_str("</svg>\n");
    s
}

fn axes(s: &mut String, fr: &Frame) {
    let (bx, by) = (LEFT, H - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{bx}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for t in nice_ticks(fr.x0, fr.x1, 5) {
        let x = fr.px(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{by}" x2="{x:.2}" y2="{:.1}" stroke="black"/>"#, by + 4.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"#, by + 16.0, tick_label(t));
    }
    for t in nice_ticks(fr.y0, fr.y1, 5) {
        let y = fr.py(t);
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{y:.2}" x2="{bx}" y2="{y:.2}" stroke="black"/>"#, bx - 4.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#, bx - 6.0, y + 4.0, tick_label(t));
    }
}

/// Diverging blue–white–red fill for `r ∈ [−1, 1]`.
fn corr_color(r: f64) -> String {
    let t = r.clamp(-1.0, 1.0);
    let (a, b) = if t >= 0.0 { ((255.0, 255.0, 255.0), (178.0, 24.0, 43.0)) } else { ((255.0, 255.0, 255.0), (33.0, 102.0, 172.0)) };
    let u = t.abs();
    let mix = |x: f64, y: f64| (x + (y - x) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Annotated correlation grid; undefined entries are grey and marked NA.
pub fn correlation_heatmap_svg(m: &CorrelationMatrix) -> String {
    let k = m.names.len();
    let cell = 56.0;
    let label_w = 8.0 + 7.0 * m.names.iter().map(|n| n.len()).max().unwrap_or(4) as f64;
    let width = label_w + cell * k as f64 + 10.0;
    let height = label_w + cell * k as f64 + 10.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    for (i, name) in m.names.iter().enumerate() {
        let y = label_w + cell * i as f64 + cell / 2.0 + 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{}</text>"#, label_w - 4.0, xml_escape(name));
        let x = label_w + cell * i as f64 + cell / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="start" transform="rotate(-90 {x:.1} {:.1})">{}</text>"#,
            label_w - 4.0,
            label_w - 4.0,
            xml_escape(name)
        );
    }
    for i in 0..k {
        for j in 0..k {
            let (x, y) = (label_w + cell * j as f64, label_w + cell * i as f64);
            let (fill, text) = match m.r[i][j] {
                Some(r) => (corr_color(r), format!("{r:.2}")),
                None => ("#d9d9d9".to_string(), "NA".to_string()),
            };
            let ink = if m.r[i][j].is_some_and(|r| r.abs() > 0.6) { "white" } else { "black" };
            let _ = writeln!(s, r##"<rect x="{x:.1}" y="{y:.1}" width="{cell}" height="{cell}" fill="{fill}" stroke="#ffffff"/>"##);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="{ink}">{text}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_lmm(name: &str, fit: &LmmFit) -> String {
    let mut s = format!("model {name}: {}\nn = {}  method = {:?}\n\n", fit.formula, fit.n, fit.method);
    s.push_str(&fit.wald().render());
    s.push_str("\nrandom effects\n");
    let _ = writeln!(s, "{:<16}  {:>8}  {:>12}  {:>10}", "group", "levels", "variance", "sd");
    for c in &fit.variance_components {
        let _ = writeln!(
            s,
            "{:<16}  {:>8}  {:>12.6}  {:>10.6}{}",
            c.factor,
            c.levels,
            c.variance,
            c.variance.sqrt(),
            if c.boundary { "  (boundary)" } else { "" }
        );
    }
    let _ = writeln!(s, "{:<16}  {:>8}  {:>12.6}  {:>10.6}", "Residual", "", fit.sigma2_e, fit.sigma2_e.sqrt());
    let _ = writeln!(
        s,
        "\ncriterion {:.4}  logLik {:.4}  df {}  AIC {:.4}\nnote: {}",
        fit.criterion, fit.ml_loglik, fit.df, fit.aic, fit.aic_note
    );
    s
}

pub fn render_gam(name: &str, fit: &GamFit) -> String {
    let mut s = format!("model {name}: {}\nn = {}  link = {}\n\n", fit.formula, fit.n, fit.link);
    s.push_str(&fit.wald().render());
    s.push_str("\nsmooth terms\n");
    let _ = writeln!(s, "{:<20}  {:>6}  {:>8}  {:>12}", "term", "k", "edf", "lambda");
    for t in &fit.smooths {
        let _ = writeln!(s, "{:<20}  {:>6}  {:>8.3}  {:>12.4e}", format!("s({})", t.variable), t.basis.k, t.edf, t.lambda);
    }
    for r in &fit.random {
        let _ = writeln!(
            s,
            "{:<20}  {:>6}  {:>8.3}  {:>12.4e}  variance {:.6}",
            format!("s({}, bs=\"re\")", r.factor),
            r.levels.len(),
            r.edf,
            r.lambda,
            r.variance
        );
    }
    let _ = writeln!(
        s,
        "\nGCV {:.6}  scale {:.6}  edf {:.3}  logLik {:.4}  df {:.3}  AIC {:.4}",
        fit.gcv, fit.sigma2, fit.edf, fit.loglik, fit.df, fit.aic
    );
    s
}
