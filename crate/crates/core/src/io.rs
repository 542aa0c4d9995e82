//! Text serialization: CSV tables, JSON manifests and SVG renderings.
//!
//! CSV numbers carry 17 significant digits (`{:.16e}`), use `.` as the
//! decimal separator and LF line endings, so repeated runs are byte-stable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::foundations::Expansion;
use crate::grid::ScalarField;
use crate::optimal::Curve;

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `T,S,value` rows in row-major grid order.
pub fn field_to_csv(field: &ScalarField) -> String {
    let mut out = String::from("T,S,value\n");
    let g = field.grid;
    for i in 0..g.n_t {
        let t = fmt_num(g.t(i));
        for j in 0..g.n_s {
            let _ = writeln!(out, "{t},{},{}", fmt_num(g.s(j)), fmt_num(field.get(i, j)));
        }
    }
    out
}

/// `T,S` rows; with `frequencies`, also `f_t = 1/(2T)` and `f_s = 1/(2S)`.
pub fn curve_to_csv(curve: &Curve, frequencies: bool) -> String {
    let mut out = String::from(if frequencies { "T,S,f_t,f_s\n" } else { "T,S\n" });
    for &(t, s) in &curve.points {
        if frequencies {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_num(t),
                fmt_num(s),
                fmt_num(0.5 / t),
                fmt_num(0.5 / s)
            );
        } else {
            let _ = writeln!(out, "{},{}", fmt_num(t), fmt_num(s));
        }
    }
    out
}

/// Several curves in one table, tagged by index: `curve,T,S`.
pub fn curves_to_csv(curves: &[Curve]) -> String {
    let mut out = String::from("curve,T,S\n");
    for (k, c) in curves.iter().enumerate() {
        for &(t, s) in &c.points {
            let _ = writeln!(out, "{k},{},{}", fmt_num(t), fmt_num(s));
        }
    }
    out
}

pub fn expansion_to_csv(e: &Expansion) -> String {
    let mut out = String::from("c,d\n");
    for (c, d) in e.coefficients.iter().zip(&e.shifts) {
        let _ = writeln!(out, "{},{}", fmt_num(*c), fmt_num(*d));
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Color for `x` in [0, 1], quantized to 256 steps along a dark-blue to
/// yellow ramp through teal and green (piecewise linear between 5 anchors).
pub fn ramp_color(x: f64) -> (u8, u8, u8) {
    const ANCHORS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let step = (x.clamp(0.0, 1.0) * 255.0).round() / 255.0;
    let pos = step * (ANCHORS.len() - 1) as f64;
    let k = (pos.floor() as usize).min(ANCHORS.len() - 2);
    let f = pos - k as f64;
    let lerp = |a: f64, b: f64| (a + f * (b - a)).round() as u8;
    let (a, b) = (ANCHORS[k], ANCHORS[k + 1]);
    (lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

/// Options for [`render_svg`].
#[derive(Debug, Clone)]
pub struct SvgOptions<'a> {
    pub title: &'a str,
    /// Color cells by the log of the value.
    pub log_color: bool,
    pub size: f64,
}

impl Default for SvgOptions<'_> {
    fn default() -> Self {
        SvgOptions {
            title: "",
            log_color: false,
            size: 480.0,
        }
    }
}

/// Log-log plot of an optional heatmap with curves drawn on top. Axes
/// span the field grid, or the curves' extent when no field is given.
pub fn render_svg(field: Option<&ScalarField>, curves: &[Curve], opts: &SvgOptions) -> String {
    let margin = 56.0;
    let size = opts.size;
    let (t_lo, t_hi, s_lo, s_hi) = match field {
        Some(f) => (f.grid.t_min, f.grid.t_max, f.grid.s_min, f.grid.s_max),
        None => {
            let pts = curves.iter().flat_map(|c| c.points.iter());
            let (mut a, mut b, mut c, mut d) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
            for &(t, s) in pts {
                a = a.min(t);
                b = b.max(t);
                c = c.min(s);
                d = d.max(s);
            }
            if !(a < b && c < d) {
                (0.1, 10.0, 0.1, 10.0)
            } else {
                (a, b, c, d)
            }
        }
    };
    let x_of = |t: f64| margin + (t / t_lo).ln() / (t_hi / t_lo).ln() * size;
    let y_of = |s: f64| margin + size - (s / s_lo).ln() / (s_hi / s_lo).ln() * size;
    let mut out = String::new();
    let total = size + 2.0 * margin;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total:.0}" height="{total:.0}" viewBox="0 0 {total:.0} {total:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(f) = field {
        let g = f.grid;
        let map = |v: f64| {
            if opts.log_color {
                v.max(f64::MIN_POSITIVE).ln()
            } else {
                v
            }
        };
        let lo = f.values.iter().map(|&v| map(v)).fold(f64::INFINITY, f64::min);
        let hi = f.values.iter().map(|&v| map(v)).fold(f64::NEG_INFINITY, f64::max);
        let (dt, ds) = g.log_steps();
        for i in 0..g.n_t {
            for j in 0..g.n_s {
                let x = if hi > lo {
                    (map(f.get(i, j)) - lo) / (hi - lo)
                } else {
                    0.5
                };
                let (r, gr, b) = ramp_color(x);
                let t0 = (g.t(i).ln() - 0.5 * dt).exp().max(g.t_min);
                let t1 = (g.t(i).ln() + 0.5 * dt).exp().min(g.t_max);
                let s0 = (g.s(j).ln() - 0.5 * ds).exp().max(g.s_min);
                let s1 = (g.s(j).ln() + 0.5 * ds).exp().min(g.s_max);
                let _ = writeln!(
                    out,
                    r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#{r:02x}{gr:02x}{b:02x}"/>"##,
                    x_of(t0),
                    y_of(s1),
                    x_of(t1) - x_of(t0),
                    y_of(s0) - y_of(s1)
                );
            }
        }
    }
    let palette = ["#d62728", "#1f77b4", "#000000", "#ff7f0e", "#2ca02c", "#9467bd"];
    for (k, c) in curves.iter().enumerate() {
        if c.points.is_empty() {
            continue;
        }
        let mut pts = String::new();
        for &(t, s) in &c.points {
            let _ = write!(pts, "{:.2},{:.2} ", x_of(t), y_of(s));
        }
        let tag = if c.meta.closed { "polygon" } else { "polyline" };
        let _ = writeln!(
            out,
            r#"<{tag} points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.trim_end(),
            palette[k % palette.len()]
        );
    }
    // frame, decade ticks and labels
    let _ = writeln!(
        out,
        r#"<rect x="{margin}" y="{margin}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
    );
    let decades = |lo: f64, hi: f64| {
        let mut d = Vec::new();
        let mut e = lo.log10().ceil() as i32;
        while 10f64.powi(e) <= hi * (1.0 + 1e-12) {
            d.push(10f64.powi(e));
            e += 1;
        }
        d
    };
    for t in decades(t_lo, t_hi) {
        let x = x_of(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{t}</text>"#,
            margin + size,
            margin + size + 5.0,
            margin + size + 18.0
        );
    }
    for s in decades(s_lo, s_hi) {
        let y = y_of(s);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{margin}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{s}</text>"#,
            margin - 5.0,
            margin - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">T (temporal interval)</text>"#,
        margin + size / 2.0,
        total - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {:.2})">S (spatial interval)</text>"#,
        margin + size / 2.0,
        margin + size / 2.0
    );
    if !opts.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="30" font-size="14" text-anchor="middle">{}</text>"#,
            margin + size / 2.0,
            escape(opts.title)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::optimal::{CurveKind, CurveMeta};

    #[test]
    fn numbers_have_seventeen_significant_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(4.0), "4.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, 6.02e23] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn field_csv_is_row_major() {
        let g = GridSpec::square(1.0, 2.0, 2);
        let f = ScalarField::new(g, vec![4.0, 4.5, 4.5, 5.0], "u").unwrap();
        let csv = field_to_csv(&f);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "T,S,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("1.0000000000000000e0,2.0000000000000000e0,4.5"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn curve_csv_adds_half_period_frequencies() {
        let c = Curve {
            kind: CurveKind::MaxSensitivity,
            points: vec![(0.25, 2.0)],
            meta: CurveMeta::default(),
        };
        let csv = curve_to_csv(&c, true);
        assert_eq!(
            csv.lines()
                .nth(1)
                .unwrap()
                .split(',')
                .nth(2)
                .unwrap()
                .parse::<f64>()
                .unwrap(),
            2.0
        );
        assert_eq!(
            csv.lines()
                .nth(1)
                .unwrap()
                .split(',')
                .nth(3)
                .unwrap()
                .parse::<f64>()
                .unwrap(),
            0.25
        );
    }

    #[test]
    fn ramp_has_fixed_endpoints() {
        assert_eq!(ramp_color(0.0), (68, 1, 84));
        assert_eq!(ramp_color(1.0), (253, 231, 37));
        assert_eq!(ramp_color(2.0), ramp_color(1.0));
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let g = GridSpec::square(0.1, 10.0, 4);
        let f = ScalarField::new(g, (0..16).map(|k| k as f64 + 1.0).collect(), "x").unwrap();
        let svg = render_svg(
            Some(&f),
            &[],
            &SvgOptions {
                title: "a<b",
                ..Default::default()
            },
        );
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<rect x=").count(), 17);
        assert!(svg.contains("a&lt;b"));
    }
}
