//! Small self-contained SVG plots: eigenvalue scatter, MAC heatmap and
//! optimizer history. No external plotting dependency.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::harness::compare::ComparisonReport;
use crate::mfopt::OptimizerReport;

const W: f64 = 480.0;
const H: f64 = 360.0;
const PAD: f64 = 50.0;

fn header(s: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data range padded by 5%, never empty.
fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in v.filter(|x| x.is_finite()) {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            s,
            r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 12.0, escape(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(ylabel)
        );
        for (v, x, anchor) in [(self.x.0, PAD, "start"), (self.x.1, W - PAD, "end")] {
            let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="{anchor}" font-size="10">{v:.3e}</text>"#, H - PAD + 14.0);
        }
        for (v, y) in [(self.y.0, H - PAD), (self.y.1, PAD + 10.0)] {
            let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.3e}</text>"#, PAD - 4.0);
        }
    }
}

/// Eigenvalues in the complex plane: LF circles, HF crosses.
pub fn eigenvalue_svg(r: &ComparisonReport) -> String {
    scatter_svg(&r.title, ("LF", &r.lf_eigenvalues), ("HF", &r.hf_eigenvalues))
}

/// Two `[re, im]` point sets, the first as circles and the second as crosses.
pub fn scatter_svg(title: &str, circles: (&str, &[[f64; 2]]), crosses: (&str, &[[f64; 2]])) -> String {
    let all = circles.1.iter().chain(crosses.1);
    let f = Frame { x: range(all.clone().map(|z| z[0])), y: range(all.map(|z| z[1])) };
    let mut s = String::new();
    header(&mut s, W, H, title);
    f.axes(&mut s, "Re", "Im");
    if f.x.0 < 0.0 && f.x.1 > 0.0 {
        let x = f.px(0.0);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{}" stroke="grey" stroke-dasharray="4"/>"#, H - PAD);
    }
    for z in circles.1 {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="blue"/>"#, f.px(z[0]), f.py(z[1]));
    }
    for z in crosses.1 {
        let (x, y) = (f.px(z[0]), f.py(z[1]));
        let _ = writeln!(
            s,
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="red"/>"#,
            x - 4.0,
            y - 4.0,
            x + 4.0,
            y + 4.0,
            x - 4.0,
            y + 4.0,
            x + 4.0,
            y - 4.0
        );
    }
    if !circles.1.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" fill="blue">o {}</text>"#, W - PAD - 60.0, PAD + 14.0, escape(circles.0));
    }
    if !crosses.1.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" fill="red">x {}</text>"#, W - PAD - 60.0, PAD + 28.0, escape(crosses.0));
    }
    s.push_str("</svg>\n");
    s
}

/// Greyscale heatmap with each value written in its cell.
pub fn mac_svg(m: &DMatrix<f64>, title: &str) -> String {
    let cell = 48.0;
    let w = 2.0 * PAD + cell * m.ncols() as f64;
    let h = 2.0 * PAD + cell * m.nrows() as f64;
    let mut s = String::new();
    header(&mut s, w, h, title);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)].clamp(0.0, 1.0);
            let g = (255.0 * (1.0 - v)).round() as u8;
            let (x, y) = (PAD + cell * j as f64, PAD + cell * i as f64);
            let ink = if v > 0.5 { "white" } else { "black" };
            let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({g},{g},{g})" stroke="black"/>"#);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" font-size="11" fill="{ink}">{:.2}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                m[(i, j)]
            );
        }
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">HF mode</text>"#, w / 2.0, h - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 20 {})">LF mode</text>"#,
        h / 2.0,
        h / 2.0
    );
    s.push_str("</svg>\n");
    s
}

/// Merit (solid) and constraint violation (dashed, own scale) per iteration.
pub fn trace_svg(r: &OptimizerReport) -> String {
    let it = |k: usize| r.trace[k].iteration as f64;
    let n = r.trace.len();
    let fm = Frame { x: range((0..n).map(it)), y: range(r.trace.iter().map(|t| t.merit)) };
    let fv = Frame { x: fm.x, y: range(r.trace.iter().map(|t| t.max_violation).chain([0.0])) };
    let mut s = String::new();
    header(&mut s, W, H, &format!("{} history", r.method));
    fm.axes(&mut s, "iteration", "merit");
    let poly = |f: &Frame, y: &dyn Fn(usize) -> f64| {
        (0..n).map(|k| format!("{:.2},{:.2}", f.px(it(k)), f.py(y(k)))).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="blue"/>"#, poly(&fm, &|k| r.trace[k].merit));
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="red" stroke-dasharray="5"/>"#,
        poly(&fv, &|k| r.trace[k].max_violation)
    );
    for (k, t) in r.trace.iter().enumerate() {
        let fill = if t.accepted { "blue" } else { "white" };
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}" stroke="blue"/>"#, fm.px(it(k)), fm.py(t.merit));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" fill="red">violation (max {:.3e})</text>"#, W - PAD - 150.0, PAD + 14.0, fv.y.1);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfopt::{Termination, TraceEntry};

    fn entry(i: usize, merit: f64, viol: f64) -> TraceEntry {
        TraceEntry {
            iteration: i,
            x: vec![],
            f_hf: merit,
            max_violation: viol,
            merit,
            radius: 1.0,
            rho: None,
            accepted: i % 2 == 0,
            hf_evaluations: i,
            lf_evaluations: 0,
            consistency_value: None,
            consistency_gradient: None,
            lf_only_violation: None,
            restoration: false,
        }
    }

    #[test]
    fn heatmap_annotates_every_cell() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.2, 0.0, 0.1, 0.97, 0.3]);
        let s = mac_svg(&m, "MAC <LF/HF>");
        assert_eq!(s.matches("<rect").count(), 1 + 6);
        assert!(s.contains(">0.97<") && s.contains(">1.00<"));
        assert!(s.contains("&lt;LF/HF&gt;"));
        assert!(s.ends_with("</svg>\n"));
    }

    #[test]
    fn scatter_draws_one_marker_per_eigenvalue() {
        let r = ComparisonReport {
            case: 3,
            title: "eig".into(),
            rows: vec![],
            lf_eigenvalues: vec![[-1.0, 10.0], [-0.5, 20.0]],
            hf_eigenvalues: vec![[-1.1, 10.5]],
            mac: None,
            flags: vec![],
        };
        let s = eigenvalue_svg(&r);
        assert_eq!(s.matches("<circle").count(), 2);
        assert_eq!(s.matches("<path").count(), 1);
        assert!(!s.contains("NaN"));
    }

    #[test]
    fn trace_handles_flat_and_single_point_histories() {
        let mut r = OptimizerReport {
            method: "trmm".into(),
            x: vec![],
            f: 1.0,
            max_violation: 0.0,
            merit: 1.0,
            iterations: 1,
            hf_evaluations: 1,
            lf_evaluations: 0,
            termination: Termination::Criticality,
            diagnostic: String::new(),
            trace: vec![entry(0, 1.0, 0.0)],
        };
        assert!(!trace_svg(&r).contains("NaN"));
        r.trace.extend([entry(1, 0.9, 0.1), entry(2, 0.8, 0.0)]);
        let s = trace_svg(&r);
        assert_eq!(s.matches("<circle").count(), 3);
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }
}
