//! Minimal static SVG line charts. One metric per file, optional log-10
//! vertical axis, no external dependencies.

use std::io::Write;
use std::path::Path;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;

const SERIES_COLORS: &[&str] = &["#1f6fb2", "#c23b22", "#2e8b57", "#8b5cf6", "#b8860b", "#444444"];

/// One named series of `(t, value)` points.
pub struct Series<'a> {
    pub label: String,
    pub points: &'a [(f64, f64)],
}

/// Write a line chart. Non-finite values break the polyline rather than
/// being drawn. With `log_y` the vertical axis is log-10 of the absolute
/// value, clamped away from zero.
pub fn write_chart(
    path: &Path,
    title: &str,
    y_label: &str,
    series: &[Series<'_>],
    log_y: bool,
) -> std::io::Result<()> {
    let transform = |v: f64| -> Option<f64> {
        if !v.is_finite() {
            return None;
        }
        if log_y {
            let a = v.abs().max(1e-300);
            Some(a.log10())
        } else {
            Some(v)
        }
    };

    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(t, v) in s.points {
            if let Some(y) = transform(v) {
                t_min = t_min.min(t);
                t_max = t_max.max(t);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
    }
    if !t_min.is_finite() {
        t_min = 0.0;
        t_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if t_max - t_min < 1e-12 {
        t_max = t_min + 1.0;
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
        y_min -= 1.0;
    }

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |t: f64| MARGIN_L + (t - t_min) / (t_max - t_min) * plot_w;
    let sy = move |y: f64| MARGIN_T + (y_max - y) / (y_max - y_min) * plot_h;

    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(
        out,
        r#"<text x="{}" y="18" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        xml_escape(title)
    )?;

    // Axes.
    writeln!(
        out,
        r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#,
        l = MARGIN_L,
        r = WIDTH - MARGIN_R,
        t = MARGIN_T,
        b = HEIGHT - MARGIN_B
    )?;

    // Ticks: four per axis.
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let t = t_min + frac * (t_max - t_min);
        let x = sx(t);
        writeln!(
            out,
            r#"<line x1="{x}" y1="{b}" x2="{x}" y2="{b2}" stroke="black"/><text x="{x}" y="{ty}" font-family="sans-serif" font-size="11" text-anchor="middle">{t:.1}</text>"#,
            b = HEIGHT - MARGIN_B,
            b2 = HEIGHT - MARGIN_B + 5.0,
            ty = HEIGHT - MARGIN_B + 18.0,
        )?;
        let yv = y_min + frac * (y_max - y_min);
        let y = sy(yv);
        let label = if log_y {
            format!("1e{yv:.1}")
        } else {
            format!("{yv:.3}")
        };
        writeln!(
            out,
            r#"<line x1="{x1}" y1="{y}" x2="{l}" y2="{y}" stroke="black"/><text x="{tx}" y="{typ}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
            x1 = MARGIN_L - 5.0,
            l = MARGIN_L,
            tx = MARGIN_L - 8.0,
            typ = y + 4.0,
        )?;
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">t [s]</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 8.0
    )?;
    writeln!(
        out,
        r#"<text x="14" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        xml_escape(y_label)
    )?;

    for (si, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[si % SERIES_COLORS.len()];
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for &(t, v) in s.points {
            match transform(v) {
                Some(y) => segments.last_mut().unwrap().push((sx(t), sy(y))),
                None => {
                    if !segments.last().unwrap().is_empty() {
                        segments.push(Vec::new());
                    }
                }
            }
        }
        for seg in segments.iter().filter(|seg| seg.len() > 1) {
            let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            )?;
        }
        // Legend entry.
        let ly = MARGIN_T + 14.0 * si as f64 + 4.0;
        writeln!(
            out,
            r#"<line x1="{x1}" y1="{ly}" x2="{x2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{tx}" y="{typ}" font-family="sans-serif" font-size="11">{label}</text>"#,
            x1 = WIDTH - MARGIN_R - 110.0,
            x2 = WIDTH - MARGIN_R - 90.0,
            tx = WIDTH - MARGIN_R - 85.0,
            typ = ly + 4.0,
            label = xml_escape(&s.label),
        )?;
    }

    writeln!(out, "</svg>")?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
