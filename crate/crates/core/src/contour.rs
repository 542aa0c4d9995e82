//! Marching-squares level sets of a [`ScalarField`].
//!
//! Vertices are placed on cell edges by linear interpolation in log
//! coordinates. Segments are chained through the edges they share; open
//! chains are traced first (from the lowest-index segment touching the
//! grid boundary), then the remaining closed loops, each from its
//! lowest-index segment.

use std::collections::HashMap;

use crate::grid::ScalarField;
use crate::optimal::{Curve, CurveKind, CurveMeta};

/// Relative interpolation tolerance the default grid is expected to meet.
pub const CONTOUR_REL_TOL: f64 = 1e-2;

pub const FLAG_BELOW_MINIMUM: &str = "below_minimum";
pub const FLAG_AT_MINIMUM: &str = "degenerate_minimum";
pub const FLAG_ABOVE_MAXIMUM: &str = "above_maximum";

/// Cell edge. `T(i, j)` joins nodes (i, j)-(i+1, j); `S(i, j)` joins (i, j)-(i, j+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Edge {
    T(usize, usize),
    S(usize, usize),
}

struct Tracer<'a> {
    field: &'a ScalarField,
    level: f64,
    ln_t: Vec<f64>,
    ln_s: Vec<f64>,
}

impl Tracer<'_> {
    fn above(&self, i: usize, j: usize) -> bool {
        self.field.get(i, j) >= self.level
    }

    fn vertex(&self, e: Edge) -> (f64, f64) {
        let (a, b) = match e {
            Edge::T(i, j) => ((i, j), (i + 1, j)),
            Edge::S(i, j) => ((i, j), (i, j + 1)),
        };
        let va = self.field.get(a.0, a.1);
        let vb = self.field.get(b.0, b.1);
        let frac = if vb == va { 0.5 } else { (self.level - va) / (vb - va) };
        let lt = self.ln_t[a.0] + frac * (self.ln_t[b.0] - self.ln_t[a.0]);
        let ls = self.ln_s[a.1] + frac * (self.ln_s[b.1] - self.ln_s[a.1]);
        (lt.exp(), ls.exp())
    }

    /// Segments of cell (i, j) as edge pairs.
    fn cell_segments(&self, i: usize, j: usize, out: &mut Vec<(Edge, Edge)>) {
        // corners counter-clockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
        let code = (self.above(i, j) as u8)
            | (self.above(i + 1, j) as u8) << 1
            | (self.above(i + 1, j + 1) as u8) << 2
            | (self.above(i, j + 1) as u8) << 3;
        let bottom = Edge::T(i, j);
        let right = Edge::S(i + 1, j);
        let top = Edge::T(i, j + 1);
        let left = Edge::S(i, j);
        let center_above = || {
            let c = 0.25
                * (self.field.get(i, j)
                    + self.field.get(i + 1, j)
                    + self.field.get(i + 1, j + 1)
                    + self.field.get(i, j + 1));
            c >= self.level
        };
        match code {
            0 | 15 => {}
            1 | 14 => out.push((left, bottom)),
            2 | 13 => out.push((bottom, right)),
            3 | 12 => out.push((left, right)),
            4 | 11 => out.push((right, top)),
            6 | 9 => out.push((bottom, top)),
            7 | 8 => out.push((left, top)),
            5 => {
                if center_above() {
                    out.push((left, top));
                    out.push((bottom, right));
                } else {
                    out.push((left, bottom));
                    out.push((right, top));
                }
            }
            10 => {
                if center_above() {
                    out.push((left, bottom));
                    out.push((right, top));
                } else {
                    out.push((left, top));
                    out.push((bottom, right));
                }
            }
            _ => unreachable!(),
        }
    }
}

/// Extracts all polylines of one level.
fn trace_level(field: &ScalarField, level: f64) -> Vec<(Vec<(f64, f64)>, bool)> {
    let g = field.grid;
    let tracer = Tracer {
        field,
        level,
        ln_t: g.t_axis().iter().map(|t| t.ln()).collect(),
        ln_s: g.s_axis().iter().map(|s| s.ln()).collect(),
    };
    let mut segments = Vec::new();
    for i in 0..g.n_t - 1 {
        for j in 0..g.n_s - 1 {
            tracer.cell_segments(i, j, &mut segments);
        }
    }
    let mut incident: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(k);
        incident.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let walk = |start: usize, from: Edge, used: &mut [bool]| {
        let mut edges = vec![from];
        let mut seg = start;
        let mut at = from;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            edges.push(next);
            at = next;
            match incident[&at].iter().copied().find(|&k| !used[k]) {
                Some(k) => seg = k,
                None => break,
            }
        }
        let closed = edges.len() > 2 && edges.first() == edges.last();
        if closed {
            edges.pop();
        }
        let pts = edges.into_iter().map(|e| tracer.vertex(e)).collect();
        (pts, closed)
    };

    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (a, b) = segments[k];
        let open_end = [a, b].into_iter().find(|e| incident[e].len() == 1);
        if let Some(end) = open_end {
            polylines.push(walk(k, end, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            let from = segments[k].0;
            polylines.push(walk(k, from, &mut used));
        }
    }
    polylines
}

/// Level curves of `field` at each requested level.
///
/// Every returned [`Curve`] carries its level in the metadata. A level below
/// the field minimum (by more than [`CONTOUR_REL_TOL`]) yields one empty,
/// flagged curve; a level within that tolerance of the minimum yields the
/// single argmin point; a level at or above the maximum yields an empty
/// flagged curve.
pub fn equivalence_contours(field: &ScalarField, levels: &[f64]) -> Vec<Curve> {
    let fmin = field.min();
    let fmax = field.max();
    let mut out = Vec::new();
    for &level in levels {
        let meta = |closed: bool, flag: Option<&str>| CurveMeta {
            level: Some(level),
            closed,
            flag: flag.map(str::to_owned),
            ..Default::default()
        };
        let empty = |flag| Curve {
            kind: CurveKind::EquivalenceContour,
            points: Vec::new(),
            meta: meta(false, Some(flag)),
        };
        if level < fmin * (1.0 - CONTOUR_REL_TOL) || !level.is_finite() {
            out.push(empty(FLAG_BELOW_MINIMUM));
        } else if level <= fmin {
            let (i, j) = field.argmin();
            out.push(Curve {
                kind: CurveKind::EquivalenceContour,
                points: vec![field.point(i, j)],
                meta: meta(true, Some(FLAG_AT_MINIMUM)),
            });
        } else if level >= fmax {
            out.push(empty(FLAG_ABOVE_MAXIMUM));
        } else {
            for (points, closed) in trace_level(field, level) {
                out.push(Curve {
                    kind: CurveKind::EquivalenceContour,
                    points,
                    meta: meta(closed, None),
                });
            }
        }
    }
    out
}
