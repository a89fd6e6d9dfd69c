//! Planform description and its discretization into a horseshoe vortex lattice.
//!
//! Axes: `x` aft (free-stream direction), `y` toward the right tip, `z` up.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One trapezoidal span segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct PlanformSegment {
    pub span: f64,
    pub root_chord: f64,
    pub tip_chord: f64,
    /// Leading-edge sweep (rad), positive aft.
    pub sweep: f64,
}

/// Trailing-edge control surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Aileron {
    pub y_start: f64,
    pub y_end: f64,
    /// Fraction of the local chord ahead of the trailing edge.
    pub chord_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Planform {
    pub segments: Vec<PlanformSegment>,
    #[serde(default)]
    pub aileron: Option<Aileron>,
}

impl Planform {
    pub fn single(span: f64, root_chord: f64, tip_chord: f64, sweep: f64) -> Self {
        Self {
            segments: vec![PlanformSegment { span, root_chord, tip_chord, sweep }],
            aileron: None,
        }
    }

    pub fn semi_span(&self) -> f64 {
        self.segments.iter().map(|s| s.span).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::invalid("planform has no segments"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.span > 0.0 && s.root_chord > 0.0 && s.tip_chord > 0.0) {
                return Err(Error::invalid(format!("planform segment {i} needs positive span and chords")));
            }
            if !(s.sweep.abs() < 1.4) {
                return Err(Error::invalid(format!("planform segment {i} sweep is out of range")));
            }
        }
        for (i, w) in self.segments.windows(2).enumerate() {
            if (w[0].tip_chord - w[1].root_chord).abs() > 1e-9 * w[0].tip_chord {
                return Err(Error::invalid(format!("chord jump between planform segments {i} and {}", i + 1)));
            }
        }
        if let Some(a) = &self.aileron {
            if !(a.y_start >= 0.0 && a.y_end > a.y_start && a.y_end <= self.semi_span() * (1.0 + 1e-12)) {
                return Err(Error::invalid("aileron span bounds outside the planform"));
            }
            if !(a.chord_fraction > 0.0 && a.chord_fraction < 1.0) {
                return Err(Error::invalid("aileron chord fraction must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    /// Leading-edge `x` and chord at span station `y`.
    pub fn leading_edge_and_chord(&self, y: f64) -> (f64, f64) {
        let mut y0 = 0.0;
        let mut x0 = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            let last = i + 1 == self.segments.len();
            if y <= y0 + s.span || last {
                let eta = ((y - y0) / s.span).clamp(0.0, 1.0);
                return (x0 + (y - y0) * s.sweep.tan(), s.root_chord + eta * (s.tip_chord - s.root_chord));
            }
            x0 += s.span * s.sweep.tan();
            y0 += s.span;
        }
        unreachable!("planform has at least one segment")
    }

    pub fn area(&self) -> f64 {
        self.segments.iter().map(|s| 0.5 * (s.root_chord + s.tip_chord) * s.span).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    /// Leading-inboard, leading-outboard, trailing-outboard, trailing-inboard.
    pub corners: [Vector3<f64>; 4],
    /// Bound vortex end points on the panel quarter-chord line, inboard first.
    pub bound: [Vector3<f64>; 2],
    /// Three-quarter-chord point at mid-strip.
    pub control: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub area: f64,
    pub strip: usize,
    pub chordwise: usize,
    pub aileron: bool,
}

impl Panel {
    /// Force application point, the bound vortex midpoint.
    pub fn force_point(&self) -> Vector3<f64> {
        0.5 * (self.bound[0] + self.bound[1])
    }

    /// Spanwise extent of the bound vortex.
    pub fn span(&self) -> f64 {
        self.bound[1].y - self.bound[0].y
    }
}

#[derive(Debug, Clone)]
pub struct Lattice {
    pub panels: Vec<Panel>,
    pub nx: usize,
    pub ny: usize,
    /// Strip edge stations in `y`, length `ny + 1`.
    pub strip_edges: Vec<f64>,
}

/// Tiles the planform with `nx` chordwise by `ny` spanwise panels. Strips
/// are spaced uniformly within each segment, with segment counts
/// proportional to segment span.
pub fn build_lattice(planform: &Planform, nx: usize, ny: usize) -> Result<Lattice> {
    planform.validate()?;
    if nx == 0 || ny < planform.segments.len() {
        return Err(Error::invalid("lattice needs nx >= 1 and at least one strip per planform segment"));
    }
    let total = planform.semi_span();
    let mut counts: Vec<usize> = planform
        .segments
        .iter()
        .map(|s| ((s.span / total * ny as f64).round() as usize).max(1))
        .collect();
    // fix rounding so the counts add up to ny
    while counts.iter().sum::<usize>() > ny {
        let i = (0..counts.len()).filter(|&i| counts[i] > 1).max_by_key(|&i| counts[i]).unwrap();
        counts[i] -= 1;
    }
    while counts.iter().sum::<usize>() < ny {
        let i = (0..counts.len()).max_by(|&a, &b| planform.segments[a].span.total_cmp(&planform.segments[b].span)).unwrap();
        counts[i] += 1;
    }
    let mut edges = vec![0.0];
    let mut y0 = 0.0;
    for (s, &n) in planform.segments.iter().zip(&counts) {
        for j in 1..=n {
            edges.push(y0 + s.span * j as f64 / n as f64);
        }
        y0 += s.span;
    }
    let mut panels = Vec::with_capacity(nx * ny);
    for strip in 0..ny {
        let (ya, yb) = (edges[strip], edges[strip + 1]);
        let (xa, ca) = planform.leading_edge_and_chord(ya);
        let (xb, cb) = planform.leading_edge_and_chord(yb);
        let ym = 0.5 * (ya + yb);
        let (xm, cm) = planform.leading_edge_and_chord(ym);
        for i in 0..nx {
            let (f0, f1) = (i as f64 / nx as f64, (i + 1) as f64 / nx as f64);
            let at = |x: f64, c: f64, y: f64, f: f64| Vector3::new(x + f * c, y, 0.0);
            let corners = [at(xa, ca, ya, f0), at(xb, cb, yb, f0), at(xb, cb, yb, f1), at(xa, ca, ya, f1)];
            let fq = f0 + 0.25 * (f1 - f0);
            let fc = f0 + 0.75 * (f1 - f0);
            let bound = [at(xa, ca, ya, fq), at(xb, cb, yb, fq)];
            let control = at(xm, cm, ym, fc);
            let area = 0.5 * (ca + cb) * (f1 - f0) * (yb - ya);
            let aileron = planform.aileron.is_some_and(|a| {
                ym >= a.y_start && ym <= a.y_end && 0.5 * (f0 + f1) >= 1.0 - a.chord_fraction
            });
            panels.push(Panel {
                corners,
                bound,
                control,
                normal: Vector3::z(),
                area,
                strip,
                chordwise: i,
                aileron,
            });
        }
    }
    Ok(Lattice { panels, nx, ny, strip_edges: edges })
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.panels.iter().map(|p| p.area).sum()
    }

    /// Writes one line per panel: index, strip, chordwise index, four corners, control point.
    pub fn write_text<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# panel strip chord x1 y1 z1 x2 y2 z2 x3 y3 z3 x4 y4 z4 xc yc zc")?;
        for (i, p) in self.panels.iter().enumerate() {
            let mut line = format!("{i} {} {}", p.strip, p.chordwise);
            for c in p.corners.iter().chain(std::iter::once(&p.control)) {
                line.push_str(&format!(" {:.12e} {:.12e} {:.12e}", c.x, c.y, c.z));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}
