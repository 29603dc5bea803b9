//! Static SVG charts of cumulative solution curves.

use std::fmt::Write;

use super::LevelMetrics;

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 40.0;
const COLORS: [&str; 5] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#7f7f7f"];

/// A step chart of each variant's curve for one level, x = attempts and
/// y = fraction solved.
pub fn cumulative_svg(level: &str, rows: &[&LevelMetrics]) -> String {
    let max_x = rows.iter().map(|m| m.cumulative_curve.len()).max().unwrap_or(1).max(1) as f64;
    let px = |x: f64| PAD + x / max_x * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - y * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(level));
    let _ = writeln!(
        s,
        r#"<path d="M{:.1},{:.1} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        px(0.0),
        py(1.0),
        py(0.0),
        px(max_x)
    );
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{tick}</text>"#, PAD - 4.0, py(tick) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{max_x}</text>"#, px(max_x), H - PAD + 14.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">attempts</text>"#, W / 2.0, H - 8.0);
    for (k, m) in rows.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = format!("M{:.1},{:.1}", px(0.0), py(0.0));
        for (i, &y) in m.cumulative_curve.iter().enumerate() {
            let _ = write!(d, " H{:.1} V{:.1}", px(i as f64), py(y));
        }
        let _ = write!(d, " H{:.1}", px(max_x));
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            W - PAD - 90.0,
            PAD + 14.0 * k as f64,
            m.variant
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
