//! Self-contained SVG rendering of a 1D value table.

use std::fmt::Write as _;

use crate::analysis::table::ValueTable;
use crate::error::{Error, Result};
use crate::numfmt::sig12;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;

const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 70.0;
const TICKS: usize = 5;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Widens a degenerate range so the frame has positive extent.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Renders `V` against `ξ`. Runs of consecutive feasible points become
/// polylines, so infeasible points break the curve; an isolated feasible
/// point becomes a marker. Returns the SVG text and any warnings.
pub fn render_value_svg(table: &ValueTable) -> Result<(String, Vec<String>)> {
    if table.dim() != 1 {
        return Err(Error::UnsupportedDimension(format!(
            "plot needs a 1D table, got {} axes",
            table.dim()
        )));
    }
    let mut warnings = Vec::new();
    let axis = &table.spec.axes[0];
    let (x0, x1) = padded(axis.min, axis.max);
    let (y0, y1) = match table.value_range() {
        Some((_, hi)) => padded(0.0, hi.max(0.0)),
        None => {
            warnings.push("table has no feasible points; plot area is empty".to_string());
            (0.0, 1.0)
        }
    };
    let frame = Frame { x0, x1, y0, y1 };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600">"#
    );
    let _ = writeln!(svg, r#"<rect width="800" height="600" fill="white"/>"#);

    // axes
    let (left, right) = (LEFT, WIDTH - RIGHT);
    let (top, bottom) = (TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        l = sig12(left),
        t = sig12(top),
        b = sig12(bottom),
        r = sig12(right)
    );
    for k in 0..TICKS {
        let f = k as f64 / (TICKS - 1) as f64;
        let xv = x0 + (x1 - x0) * f;
        let px = frame.px(xv);
        let _ = writeln!(
            svg,
            r#"<path d="M{x} {b} L{x} {b2}" stroke="black"/><text x="{x}" y="{ty}" font-family="sans-serif" font-size="12" text-anchor="middle">{label}</text>"#,
            x = sig12(px),
            b = sig12(bottom),
            b2 = sig12(bottom + 5.0),
            ty = sig12(bottom + 20.0),
            label = crate::numfmt::sig(xv, 4)
        );
        let yv = y0 + (y1 - y0) * f;
        let py = frame.py(yv);
        let _ = writeln!(
            svg,
            r#"<path d="M{l2} {y} L{l} {y}" stroke="black"/><text x="{tx}" y="{y}" font-family="sans-serif" font-size="12" text-anchor="end" dominant-baseline="middle">{label}</text>"#,
            y = sig12(py),
            l = sig12(left),
            l2 = sig12(left - 5.0),
            tx = sig12(left - 8.0),
            label = crate::numfmt::sig(yv, 4)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="14" text-anchor="middle">xi</text>"#,
        x = sig12(0.5 * (left + right)),
        y = sig12(HEIGHT - 20.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{y}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 20 {y})">V0(xi)</text>"#,
        y = sig12(0.5 * (top + bottom))
    );

    // data, split at infeasible points
    let mut runs: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut current = Vec::new();
    for (p, v) in table.grid.iter().zip(&table.values) {
        match v {
            Some(v) => current.push((frame.px(p[0]), frame.py(*v))),
            None if !current.is_empty() => runs.push(std::mem::take(&mut current)),
            None => {}
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    for run in &runs {
        if let [(x, y)] = run.as_slice() {
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="3" fill="steelblue"/>"#,
                sig12(*x),
                sig12(*y)
            );
        } else {
            let pts: Vec<String> = run
                .iter()
                .map(|(x, y)| format!("{},{}", sig12(*x), sig12(*y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#,
                pts.join(" ")
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok((svg, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::table::GridSpec;

    fn table(spec: &str, values: Vec<Option<f64>>) -> ValueTable {
        ValueTable::from_values(GridSpec::parse(spec).unwrap(), values, 10).unwrap()
    }

    #[test]
    fn gaps_split_the_curve() {
        let t = table(
            "-2:2:5",
            vec![Some(2.0), Some(1.0), None, Some(1.0), Some(2.0)],
        );
        let (svg, warnings) = render_value_svg(&t).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">xi</text>"));
        assert!(svg.contains(">V0(xi)</text>"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(r#"width="800" height="600""#));
    }

    #[test]
    fn single_point_is_a_marker() {
        let t = table("0:0:1", vec![Some(0.0)]);
        let (svg, _) = render_value_svg(&t).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn all_infeasible_warns() {
        let t = table("-1:1:3", vec![None, None, None]);
        let (svg, warnings) = render_value_svg(&t).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(!svg.contains("<polyline") && !svg.contains("<circle"));
    }

    #[test]
    fn rejects_2d() {
        let t = table("0:1:2,0:1:2", vec![Some(0.0); 4]);
        assert!(matches!(
            render_value_svg(&t),
            Err(Error::UnsupportedDimension(_))
        ));
    }

    #[test]
    fn extremes_map_to_frame() {
        let t = table("-1:1:3", vec![Some(5.0), Some(0.0), Some(5.0)]);
        let (svg, _) = render_value_svg(&t).unwrap();
        assert!(svg.contains("80,30 425,530 770,30"), "{svg}");
    }
}
