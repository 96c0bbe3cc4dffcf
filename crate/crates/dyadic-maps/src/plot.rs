//! SVG graphs of maps on the unit square.

use std::fmt::Write;

use crate::error::Result;
use crate::map_core::{iterate, PAMap};
use crate::numeric::to_f64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotOptions {
    /// Draw `y = x`.
    pub diagonal: bool,
    /// Draw `g, g², …, g^iterate`; `1` draws only `g`.
    pub iterate: usize,
    /// Side length in pixels.
    pub size: u32,
    pub segment_budget: usize,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            diagonal: false,
            iterate: 1,
            size: 400,
            segment_budget: crate::map_core::DEFAULT_SEGMENT_BUDGET,
        }
    }
}

const COLORS: [&str; 6] = ["#1f4e9c", "#2a9d3a", "#8e44ad", "#d17a00", "#00838f", "#6d4c41"];

/// Coordinates rounded to 1e-12 so output is byte-stable.
fn coord(v: f64) -> String {
    let r = (v * 1e12).round() / 1e12;
    let s = format!("{:.12}", r);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

/// Polyline points in unit coordinates, `y` pointing up.
pub fn polyline_points(g: &PAMap) -> Vec<(String, String)> {
    g.points().iter().map(|(x, y)| (coord(to_f64(x)), coord(to_f64(y)))).collect()
}

pub fn render_svg(g: &PAMap, opts: &PlotOptions) -> Result<String> {
    let n = opts.iterate.max(1);
    let mut maps = vec![g.clone()];
    for k in 2..=n {
        maps.push(iterate(g, k, opts.segment_budget)?);
    }
    let mut s = String::new();
    let px = opts.size;
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{px}" height="{px}" viewBox="-0.05 -0.05 1.1 1.1">"#
    )
    .unwrap();
    s.push_str(r#"<g transform="matrix(1 0 0 -1 0 1)" fill="none" stroke-linejoin="round">"#);
    s.push('\n');
    s.push_str(r##"<rect x="0" y="0" width="1" height="1" stroke="#000000" stroke-width="0.004"/>"##);
    s.push('\n');
    if opts.diagonal {
        s.push_str(r##"<line x1="0" y1="0" x2="1" y2="1" stroke="#d62728" stroke-width="0.003"/>"##);
        s.push('\n');
    }
    for (i, m) in maps.iter().enumerate().rev() {
        let pts: Vec<String> = polyline_points(m).into_iter().map(|(x, y)| format!("{x},{y}")).collect();
        writeln!(
            s,
            r#"<polyline class="iterate-{}" points="{}" stroke="{}" stroke-width="0.005"/>"#,
            i + 1,
            pts.join(" "),
            COLORS[i % COLORS.len()]
        )
        .unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_polyline() {
        let svg = render_svg(&PAMap::tent(), &PlotOptions::default()).unwrap();
        assert!(svg.contains(r#"points="0,0 0.5,1 1,0""#));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(!svg.contains("<line"));
    }

    #[test]
    fn overlays_and_determinism() {
        let g = PAMap::period_family(&crate::numeric::q(1, 8)).unwrap();
        let opts = PlotOptions { diagonal: true, iterate: 3, ..Default::default() };
        let a = render_svg(&g, &opts).unwrap();
        assert_eq!(a.matches("<polyline").count(), 3);
        assert_eq!(a.matches("<line").count(), 1);
        assert_eq!(a, render_svg(&g, &opts).unwrap());
    }

    #[test]
    fn coordinates_are_rounded() {
        assert_eq!(coord(1.0 / 3.0), "0.333333333333");
        assert_eq!(coord(0.25), "0.25");
        assert_eq!(coord(-0.0), "0");
    }
}
