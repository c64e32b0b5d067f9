//! Minimal line plots: polylines, axes with ticks, legend.

use std::fmt::Write;

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub struct Series {
    pub name: String,
    pub y: Vec<f64>,
}

fn range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.into() }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series against `x`. Non-finite points break the line.
pub fn render(title: &str, x_name: &str, x: &[f64], series: &[Series]) -> Option<String> {
    let (x0, x1) = range(x.iter().copied())?;
    let (y0, y1) = range(series.iter().flat_map(|s| s.y.iter().copied()))?;
    let (ml, mr, mt, mb) = MARGIN;
    let (pw, ph) = (W - ml - mr, H - mt - mb);
    let px = |v: f64| ml + (v - x0) / (x1 - x0) * pw;
    let py = |v: f64| mt + (y1 - v) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (tx, ty) = (px(xv), py(yv));
        let _ = writeln!(s, r#"<line x1="{tx:.2}" y1="{}" x2="{tx:.2}" y2="{}" stroke="black"/>"#, mt + ph, mt + ph + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            mt + ph + 19.0,
            label(xv)
        );
        let _ = writeln!(s, r#"<line x1="{}" y1="{ty:.2}" x2="{ml}" y2="{ty:.2}" stroke="black"/>"#, ml - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            ml - 8.0,
            ty + 4.0,
            label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        H - 10.0,
        escape(x_name)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, s: &mut String| {
            if run.len() > 1 {
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.3" points="{}"/>"#, run.join(" "));
            }
            run.clear();
        };
        for (&xv, &yv) in x.iter().zip(&ser.y) {
            if xv.is_finite() && yv.is_finite() {
                run.push(format!("{:.2},{:.2}", px(xv), py(yv)));
            } else {
                flush(&mut run, &mut s);
            }
        }
        flush(&mut run, &mut s);
        let ly = mt + 18.0 + 18.0 * k as f64;
        let lx = ml + pw - 150.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 25.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 32.0,
            ly + 4.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_breaks_the_line() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = Series { name: "rho".into(), y: vec![1.0, 2.0, f64::NAN, 2.0, 1.0] };
        let svg = render("t", "x", &x, &[y]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
        assert!(render("t", "x", &[f64::NAN], &[]).is_none());
    }

    #[test]
    fn labels() {
        assert_eq!(label(2.5), "2.5");
        assert_eq!(label(-0.0001), "-1.00e-4");
        assert_eq!(label(0.0), "0");
    }
}
