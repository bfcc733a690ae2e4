//! Scatter-plot lattices written directly as SVG.

use std::fmt::Write as _;

use crate::numkit::Matrix;

pub const MAX_POINTS_PER_PANEL: usize = 2000;
const PANEL: f64 = 120.0;
const GAP: f64 = 10.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;

/// One row of panels per column of `rows`, one column of panels per column
/// of `cols`. Panel `(i, j)` plots `cols[:, j]` on x against `rows[:, i]` on y.
pub fn scatter_lattice(
    title: &str,
    rows: &Matrix,
    row_labels: &[String],
    cols: &Matrix,
    col_labels: &[String],
) -> String {
    assert_eq!(rows.rows(), cols.rows());
    assert_eq!(rows.cols(), row_labels.len());
    assert_eq!(cols.cols(), col_labels.len());
    let n = rows.rows();
    let stride = n.div_ceil(MAX_POINTS_PER_PANEL).max(1);
    let sample: Vec<usize> = (0..n).step_by(stride).collect();

    let width = MARGIN_LEFT + cols.cols() as f64 * (PANEL + GAP) + GAP;
    let height = MARGIN_TOP + rows.cols() as f64 * (PANEL + GAP) + 30.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(s, "<!-- generator: bvae {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );

    let range = |m: &Matrix, j: usize| {
        let (lo, hi) = sample
            .iter()
            .map(|&i| m.get(i, j))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    };
    let col_ranges: Vec<(f64, f64)> = (0..cols.cols()).map(|j| range(cols, j)).collect();

    for (pi, row_label) in row_labels.iter().enumerate() {
        let (ylo, yhi) = range(rows, pi);
        let top = MARGIN_TOP + pi as f64 * (PANEL + GAP);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            top + PANEL / 2.0,
            escape(row_label)
        );
        for (pj, &(xlo, xhi)) in col_ranges.iter().enumerate() {
            let left = MARGIN_LEFT + pj as f64 * (PANEL + GAP);
            let _ = writeln!(
                s,
                r##"<g><rect x="{left:.1}" y="{top:.1}" width="{PANEL:.0}" height="{PANEL:.0}" fill="none" stroke="#999"/>"##
            );
            for &i in &sample {
                let px = left + 2.0 + (PANEL - 4.0) * (cols.get(i, pj) - xlo) / (xhi - xlo);
                let py = top + PANEL - 2.0 - (PANEL - 4.0) * (rows.get(i, pi) - ylo) / (yhi - ylo);
                let _ = writeln!(s, r##"<circle cx="{px:.1}" cy="{py:.1}" r="0.8" fill="#2a5599" fill-opacity="0.5"/>"##);
            }
            s.push_str("</g>\n");
        }
    }
    let bottom = MARGIN_TOP + rows.cols() as f64 * (PANEL + GAP) + 12.0;
    for (pj, label) in col_labels.iter().enumerate() {
        let cx = MARGIN_LEFT + pj as f64 * (PANEL + GAP) + PANEL / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{bottom:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_and_point_counts() {
        let rows = Matrix::from_cols(&[vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]]);
        let cols = Matrix::from_cols(&[vec![3.0, 2.0, 1.0]]);
        let svg = scatter_lattice("t<1>", &rows, &["z0".into(), "z1".into()], &cols, &["y0".into()]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 6);
        assert_eq!(svg.matches("<g>").count(), 2);
        assert!(svg.contains("t&lt;1&gt;"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn subsamples_large_inputs() {
        let v: Vec<f64> = (0..5000).map(|i| i as f64).collect();
        let m = Matrix::from_cols(&[v]);
        let svg = scatter_lattice("", &m, &["a".into()], &m, &["b".into()]);
        let pts = svg.matches("<circle").count();
        assert!(pts <= MAX_POINTS_PER_PANEL && pts >= 1000, "{pts}");
    }
}
