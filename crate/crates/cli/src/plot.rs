//! Standalone SVG boxplots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use insitu_core::stats::{describe, SampleSet};

use crate::CliError;

const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const SLOT: f64 = 120.0;
const BOX_HALF_WIDTH: f64 = 30.0;
const CAP_HALF_WIDTH: f64 = 15.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 360.0;
const HEIGHT: f64 = 400.0;

/// Maps data values onto the vertical pixel axis, larger values higher.
#[derive(Clone, Copy, Debug)]
pub struct Scale {
    lo: f64,
    hi: f64,
}

impl Scale {
    fn over(sets: &[SampleSet]) -> Scale {
        let values = sets.iter().flat_map(|s| s.values.iter().copied());
        let lo = values.clone().fold(f64::INFINITY, f64::min);
        let hi = values.fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            Scale {
                lo: lo - 1.0,
                hi: hi + 1.0,
            }
        } else {
            Scale { lo, hi }
        }
    }

    pub fn y(&self, v: f64) -> f64 {
        BOTTOM - (v - self.lo) / (self.hi - self.lo) * (BOTTOM - TOP)
    }
}

struct BoxStats {
    q1: f64,
    median: f64,
    q3: f64,
    whisker_lo: f64,
    whisker_hi: f64,
    outliers: Vec<f64>,
}

/// Whiskers reach the most extreme values inside 1.5 IQR of the box;
/// anything further out is drawn as a dot.
fn box_stats(values: &[f64]) -> BoxStats {
    let d = describe(values).expect("non-empty");
    let iqr = d.q3 - d.q1;
    let (fence_lo, fence_hi) = (d.q1 - 1.5 * iqr, d.q3 + 1.5 * iqr);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let inside = sorted
        .iter()
        .copied()
        .filter(|v| (fence_lo..=fence_hi).contains(v));
    BoxStats {
        q1: d.q1,
        median: d.median,
        q3: d.q3,
        whisker_lo: inside.clone().fold(f64::INFINITY, f64::min).min(d.q1),
        whisker_hi: inside.fold(f64::NEG_INFINITY, f64::max).max(d.q3),
        outliers: sorted
            .into_iter()
            .filter(|v| !(fence_lo..=fence_hi).contains(v))
            .collect(),
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders one box per sample set, left to right in input order.
pub fn render_boxplot_svg(sets: &[SampleSet]) -> Result<String, CliError> {
    if sets.is_empty() {
        return Err(CliError::Usage(
            "boxplot needs at least one sample set".into(),
        ));
    }
    if let Some(s) = sets.iter().find(|s| s.values.is_empty()) {
        return Err(CliError::Input(format!(
            "sample set {:?} is empty",
            s.label
        )));
    }
    if let Some(s) = sets
        .iter()
        .find(|s| s.values.iter().any(|v| !v.is_finite()))
    {
        return Err(CliError::Input(format!(
            "sample set {:?} has a non-finite value",
            s.label
        )));
    }
    let scale = Scale::over(sets);
    let width = LEFT + SLOT * sets.len() as f64 + RIGHT;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{HEIGHT:.0}" viewBox="0 0 {width:.0} {HEIGHT:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{BOTTOM:.2}" stroke="black"/>"#
    );
    for v in [scale.lo, (scale.lo + scale.hi) / 2.0, scale.hi] {
        let y = scale.y(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            format_tick(v)
        );
    }
    for (i, set) in sets.iter().enumerate() {
        let b = box_stats(&set.values);
        let cx = LEFT + SLOT * (i as f64 + 0.5);
        let (x0, x1) = (cx - BOX_HALF_WIDTH, cx + BOX_HALF_WIDTH);
        let _ = writeln!(
            svg,
            r#"<g class="box" data-label="{}">"#,
            escape(&set.label)
        );
        for (from, to) in [(b.whisker_lo, b.q1), (b.q3, b.whisker_hi)] {
            let _ = writeln!(
                svg,
                r#"<line class="whisker" x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                scale.y(from),
                scale.y(to)
            );
        }
        for v in [b.whisker_lo, b.whisker_hi] {
            let y = scale.y(v);
            let _ = writeln!(
                svg,
                r#"<line class="cap" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
                cx - CAP_HALF_WIDTH,
                cx + CAP_HALF_WIDTH
            );
        }
        let (top, bottom) = (scale.y(b.q3), scale.y(b.q1));
        let _ = writeln!(
            svg,
            r##"<rect class="iqr" x="{x0:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#cfe2f3" stroke="black"/>"##,
            x1 - x0,
            bottom - top
        );
        let y = scale.y(b.median);
        let _ = writeln!(
            svg,
            r#"<line class="median" x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="black" stroke-width="2"/>"#
        );
        for v in &b.outliers {
            let _ = writeln!(
                svg,
                r#"<circle class="outlier" cx="{cx:.2}" cy="{:.2}" r="3" fill="none" stroke="black"/>"#,
                scale.y(*v)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            BOTTOM + 25.0,
            escape(&set.label)
        );
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

pub fn emit_boxplot_svg(sets: &[SampleSet], output: &Path) -> Result<(), CliError> {
    let svg = render_boxplot_svg(sets)?;
    fs::write(output, svg)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", output.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attr(line: &str, name: &str) -> f64 {
        let start = line.find(&format!(" {name}=\"")).unwrap() + name.len() + 3;
        line[start..].split('"').next().unwrap().parse().unwrap()
    }

    #[test]
    fn median_line_sits_at_three() {
        let sets = [SampleSet::new("one", vec![1.0, 2.0, 3.0, 4.0, 5.0])];
        let svg = render_boxplot_svg(&sets).unwrap();
        let median = svg
            .lines()
            .find(|l| l.contains(r#"class="median""#))
            .unwrap();
        let scale = Scale { lo: 1.0, hi: 5.0 };
        assert_eq!(attr(median, "y1"), 200.0);
        assert_eq!(attr(median, "y1"), scale.y(3.0));
        let iqr = svg.lines().find(|l| l.contains(r#"class="iqr""#)).unwrap();
        assert_eq!(attr(iqr, "y"), scale.y(4.0));
        assert_eq!(attr(iqr, "y") + attr(iqr, "height"), scale.y(2.0));
        assert!(!svg.contains("outlier"));
    }

    #[test]
    fn outliers_fall_outside_the_fences() {
        let values = vec![10.0, 11.0, 12.0, 13.0, 14.0, 100.0];
        let b = box_stats(&values);
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.whisker_hi, 14.0);
        assert_eq!(b.whisker_lo, 10.0);
        let svg = render_boxplot_svg(&[SampleSet::new("x", values)]).unwrap();
        assert_eq!(svg.matches(r#"class="outlier""#).count(), 1);
    }

    #[test]
    fn output_is_deterministic() {
        let sets = [
            SampleSet::new("laptop", vec![5.0, 7.0, 6.5, 9.0]),
            SampleSet::new("pi <4>", vec![50.0, 70.0, 65.0, 90.0, 400.0]),
        ];
        let a = render_boxplot_svg(&sets).unwrap();
        assert_eq!(a, render_boxplot_svg(&sets).unwrap());
        assert_eq!(a.matches(r#"<g class="box""#).count(), 2);
        assert!(a.contains("pi &lt;4&gt;"));
        let dir = tempfile::tempdir().unwrap();
        let (p, q) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
        emit_boxplot_svg(&sets, &p).unwrap();
        emit_boxplot_svg(&sets, &q).unwrap();
        assert_eq!(fs::read(p).unwrap(), fs::read(q).unwrap());
    }

    #[test]
    fn refuses_empty_input() {
        assert!(matches!(render_boxplot_svg(&[]), Err(CliError::Usage(_))));
        assert!(render_boxplot_svg(&[SampleSet::new("e", vec![])]).is_err());
    }

    #[test]
    fn constant_sample_still_renders() {
        let svg = render_boxplot_svg(&[SampleSet::new("flat", vec![2.0; 4])]).unwrap();
        let median = svg
            .lines()
            .find(|l| l.contains(r#"class="median""#))
            .unwrap();
        assert_eq!(attr(median, "y1"), 200.0);
    }
}
