//! Minimal static SVG charts for share bars and delay lines.

use std::fmt::Write as _;

use crate::simcore::PriorityClass;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 2] = ["#1f77b4", "#ff7f0e"];

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn y_axis(out: &mut String, max: f64, label: &str) {
    for i in 0..=4 {
        let v = max * f64::from(i) / 4.0;
        let y = H - PAD - (H - 2.0 * PAD) * f64::from(i) / 4.0;
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, PAD - 6.0, y + 4.0, v);
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(label)
    );
}

/// Grouped bars: one group per class, one bar per series.
pub fn share_bars(title: &str, series: &[(&str, [f64; PriorityClass::COUNT])]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    y_axis(&mut out, 1.0, "bandwidth share");
    let group_w = (W - 2.0 * PAD) / PriorityClass::COUNT as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for c in 0..PriorityClass::COUNT {
        let gx = PAD + group_w * c as f64 + group_w * 0.1;
        for (si, (_, vals)) in series.iter().enumerate() {
            let h = (H - 2.0 * PAD) * vals[c].clamp(0.0, 1.0);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                gx + bar_w * si as f64,
                H - PAD - h,
                bar_w,
                h,
                COLORS[si % COLORS.len()]
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">class {}</text>"#,
            gx + group_w * 0.4,
            H - PAD + 18.0,
            c
        );
    }
    legend(&mut out, series.iter().map(|(n, _)| *n));
    out.push_str("</svg>\n");
    out
}

/// Lines over a shared x axis.
pub fn lines(title: &str, x_label: &str, y_label: &str, xs: &[f64], series: &[(&str, Vec<f64>)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let y_max = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-9)
        * 1.1;
    y_axis(&mut out, y_max, y_label);
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let px = |x: f64| PAD + (W - 2.0 * PAD) * (x - x_min) / span;
    let py = |y: f64| H - PAD - (H - 2.0 * PAD) * y / y_max;
    for &x in xs {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, px(x), H - PAD + 18.0, x);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, escape(x_label));
    for (si, (_, ys)) in series.iter().enumerate() {
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let color = COLORS[si % COLORS.len()];
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#, pts.join(" "), color);
        for p in &pts {
            let (x, y) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
    }
    legend(&mut out, series.iter().map(|(n, _)| *n));
    out.push_str("</svg>\n");
    out
}

fn legend<'a>(out: &mut String, names: impl Iterator<Item = &'a str>) {
    for (i, name) in names.enumerate() {
        let y = PAD + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            W - PAD - 110.0,
            y - 9.0,
            COLORS[i % COLORS.len()],
            W - PAD - 95.0,
            y,
            escape(name)
        );
    }
}
