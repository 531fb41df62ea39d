//! SVG drawings of configurations. Rational configurations are drawn in the
//! affine chart z = 1; finite-field ones become a labeled incidence table.

use std::fmt::Write;

use num_traits::ToPrimitive;

use crate::config::Configuration;
use crate::field::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("{elements} elements exceed the drawing cap of {cap}")]
    TooLargeToRender { elements: usize, cap: usize },
}

/// Points plus lines above which no drawing is attempted.
pub const RENDER_CAP: usize = 600;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport { width: 800, height: 600 }
    }
}

const LEGEND_W: f64 = 220.0;
const PAD: f64 = 30.0;

fn f64_of(x: &Scalar) -> f64 {
    x.as_rational().and_then(|q| q.to_f64()).unwrap_or(f64::NAN)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(cfg: &Configuration, vp: Viewport) -> Result<Vec<u8>, RenderError> {
    let elements = cfg.element_count();
    if elements > RENDER_CAP {
        return Err(RenderError::TooLargeToRender { elements, cap: RENDER_CAP });
    }
    let svg = if cfg.field().is_rational() { draw_chart(cfg, vp) } else { draw_table(cfg, vp) };
    Ok(svg.into_bytes())
}

/// Drawing when it fits under the cap, otherwise a text summary of the counts.
pub fn render_or_summary(cfg: &Configuration, vp: Viewport) -> Vec<u8> {
    render_svg(cfg, vp).unwrap_or_else(|_| render_summary(cfg, vp))
}

pub fn render_summary(cfg: &Configuration, vp: Viewport) -> Vec<u8> {
    let mut roles = std::collections::BTreeMap::new();
    for p in cfg.points() {
        *roles.entry(format!("{:?}", p.role).to_lowercase()).or_insert(0usize) += 1;
    }
    let mut rows = vec![
        format!("configuration over {}", cfg.field()),
        format!("{} points, {} lines, s = {}", cfg.points().len(), cfg.lines().len(), cfg.free_count),
        format!("too large to draw (cap {RENDER_CAP} elements)"),
    ];
    rows.extend(roles.iter().map(|(r, n)| format!("{r}: {n}")));
    let mut out = String::new();
    header(&mut out, vp.width as f64, (30 + 16 * rows.len()) as f64);
    for (i, r) in rows.iter().enumerate() {
        writeln!(out, r#"<text x="10" y="{}" font-size="12" font-family="sans-serif">{}</text>"#, 20 + 16 * i, esc(r)).unwrap();
    }
    out.push_str("</svg>\n");
    out.into_bytes()
}

fn header(out: &mut String, w: f64, h: f64) {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#).unwrap();
    writeln!(out, r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"#).unwrap();
}

fn draw_chart(cfg: &Configuration, vp: Viewport) -> String {
    let finite: Vec<(usize, f64, f64)> = cfg
        .points()
        .iter()
        .filter_map(|p| p.coords.to_affine().map(|(x, y)| (p.id, f64_of(&x), f64_of(&y))))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 1.0f64, 0.0f64, 1.0f64);
    for &(_, x, y) in &finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (dx, dy) = ((x1 - x0) * 0.1, (y1 - y0) * 0.1);
    let (x0, x1, y0, y1) = (x0 - dx, x1 + dx, y0 - dy, y1 + dy);
    let pw = vp.width as f64 - 2.0 * PAD;
    let ph = vp.height as f64 - 2.0 * PAD;
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| PAD + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    let total_w = vp.width as f64 + LEGEND_W;
    header(&mut out, total_w, vp.height as f64);
    let mut legend = Vec::new();
    for l in cfg.lines() {
        let c = l.coeffs.coeffs();
        let (a, b, cc) = (f64_of(&c[0]), f64_of(&c[1]), f64_of(&c[2]));
        // a x + b y + c = 0 clipped to the data box
        let seg = if b.abs() > 1e-12 {
            let y = |x: f64| -(a * x + cc) / b;
            Some(clip((x0, y(x0)), (x1, y(x1)), (x0, x1, y0, y1)))
        } else if a.abs() > 1e-12 {
            let x = -cc / a;
            Some(clip((x, y0), (x, y1), (x0, x1, y0, y1)))
        } else {
            None
        };
        match seg.flatten() {
            Some(((ax, ay), (bx, by))) => {
                writeln!(
                    out,
                    r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555" stroke-width="1"><title>{}</title></line>"##,
                    sx(ax),
                    sy(ay),
                    sx(bx),
                    sy(by),
                    esc(&l.label)
                )
                .unwrap();
            }
            None => legend.push(format!("line {} (off chart)", l.label)),
        }
    }
    for &(id, x, y) in &finite {
        let p = cfg.point(id);
        writeln!(out, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#b22"/>"##, sx(x), sy(y)).unwrap();
        writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif">{}</text>"#, sx(x) + 4.0, sy(y) - 4.0, esc(&p.label)).unwrap();
    }
    for p in cfg.points() {
        if p.coords.is_at_infinity() {
            let c = p.coords.coords();
            legend.insert(0, format!("{} = [{} : {} : 0]", p.label, c[0], c[1]));
        }
    }
    let lx = vp.width as f64 + 10.0;
    writeln!(out, r#"<text x="{lx:.0}" y="20" font-size="11" font-family="sans-serif" font-weight="bold">at infinity</text>"#).unwrap();
    for (i, item) in legend.iter().enumerate() {
        writeln!(out, r#"<text x="{lx:.0}" y="{}" font-size="10" font-family="sans-serif">{}</text>"#, 36 + 14 * i, esc(item)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

// Liang-Barsky clip of segment p-q to the box.
fn clip(p: (f64, f64), q: (f64, f64), b: (f64, f64, f64, f64)) -> Option<((f64, f64), (f64, f64))> {
    let (x0, x1, y0, y1) = b;
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (pk, qk) in [(-dx, p.0 - x0), (dx, x1 - p.0), (-dy, p.1 - y0), (dy, y1 - p.1)] {
        if pk.abs() < 1e-15 {
            if qk < 0.0 {
                return None;
            }
            continue;
        }
        let r = qk / pk;
        if pk < 0.0 {
            t0 = t0.max(r);
        } else {
            t1 = t1.min(r);
        }
    }
    (t0 <= t1).then_some(((p.0 + t0 * dx, p.1 + t0 * dy), (p.0 + t1 * dx, p.1 + t1 * dy)))
}

fn draw_table(cfg: &Configuration, vp: Viewport) -> String {
    let mut rows = vec![format!("{} points, {} lines over {}", cfg.points().len(), cfg.lines().len(), cfg.field())];
    for l in cfg.lines() {
        let on: Vec<&str> = cfg.points_on(l.id).iter().map(|&p| cfg.point(p).label.as_str()).collect();
        rows.push(format!("{}: {}", l.label, on.join(", ")));
    }
    let h = (40 + 14 * rows.len()) as f64;
    let mut out = String::new();
    header(&mut out, vp.width as f64, h.max(vp.height as f64));
    for (i, r) in rows.iter().enumerate() {
        writeln!(out, r#"<text x="10" y="{}" font-size="10" font-family="monospace">{}</text>"#, 20 + 14 * i, esc(r)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
