//! Coincidence of `W = 0` / `J_p = 0` crossings with stagnation points.

use std::collections::HashMap;

use serde::Serialize;

use super::contour::{zero_contours, ContourSet};
use super::stagnation::{vanishes_along, StagnationPoint};
use crate::error::{Error, Result};
use crate::flow::VectorField;
use crate::grid::ScalarField;

/// A crossing matched to the nearest stagnation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinchPair {
    pub crossing: [f64; 2],
    pub stagnation: [f64; 2],
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinchReport {
    pub pairs: Vec<PinchPair>,
    /// Off-axis crossings with no stagnation point within `match_radius`.
    pub unmatched_crossings: Vec<[f64; 2]>,
    /// Off-axis, non-degenerate stagnation points not paired with a crossing.
    pub unmatched_stagnation: Vec<[f64; 2]>,
    /// Crossings on curves where `J` vanishes identically; excluded from pairing.
    pub degenerate_crossings: Vec<[f64; 2]>,
    pub match_radius: f64,
}

impl PinchReport {
    /// No off-axis isolated crossings at all.
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty() && self.unmatched_crossings.is_empty()
    }
}

fn segment_intersection(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> Option<[f64; 2]> {
    let r = [b[0] - a[0], b[1] - a[1]];
    let s = [d[0] - c[0], d[1] - c[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    if den == 0.0 {
        return None;
    }
    let q = [c[0] - a[0], c[1] - a[1]];
    let t = (q[0] * s[1] - q[1] * s[0]) / den;
    let u = (q[0] * r[1] - q[1] * r[0]) / den;
    const SLACK: f64 = 1e-12;
    if (-SLACK..=1.0 + SLACK).contains(&t) && (-SLACK..=1.0 + SLACK).contains(&u) {
        Some([a[0] + t * r[0], a[1] + t * r[1]])
    } else {
        None
    }
}

/// Intersections of two contour sets, deduplicated within `merge`.
pub fn contour_intersections(a: &ContourSet, b: &ContourSet, merge: f64) -> Vec<[f64; 2]> {
    let g = a.grid;
    let cell_of = |p: [f64; 2]| -> (i64, i64) {
        (
            ((p[0] - g.x_min) / g.dx()).floor() as i64,
            ((p[1] - g.p_min) / g.dp()).floor() as i64,
        )
    };
    type Segment = ([f64; 2], [f64; 2]);
    let mut buckets: HashMap<(i64, i64), Vec<Segment>> = HashMap::new();
    for (s, e) in b.segments() {
        let mid = [0.5 * (s[0] + e[0]), 0.5 * (s[1] + e[1])];
        buckets.entry(cell_of(mid)).or_default().push((s, e));
    }
    let mut out: Vec<[f64; 2]> = Vec::new();
    for (s, e) in a.segments() {
        let (ci, cj) = cell_of([0.5 * (s[0] + e[0]), 0.5 * (s[1] + e[1])]);
        for di in -1..=1 {
            for dj in -1..=1 {
                let Some(list) = buckets.get(&(ci + di, cj + dj)) else {
                    continue;
                };
                for &(c, d) in list {
                    if let Some(x) = segment_intersection(s, e, c, d) {
                        if !out.iter().any(|o| (o[0] - x[0]).hypot(o[1] - x[1]) < merge) {
                            out.push(x);
                        }
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    out
}

/// Pairs off-axis intersections of `W = 0` and `J_p = 0` with stagnation
/// points closer than two grid spacings in `x`.
pub fn pinch_point_report(
    w: &ScalarField,
    j: &VectorField,
    stagnation: &[StagnationPoint],
) -> Result<PinchReport> {
    if w.grid != j.grid {
        return Err(Error::GridMismatch);
    }
    let g = w.grid;
    let wc = zero_contours(w);
    let jc = zero_contours(&j.p_component());
    let merge = 1e-3 * g.dx().min(g.dp());
    let curve: Vec<[f64; 2]> = wc.vertices().collect();
    let match_radius = 2.0 * g.dx();
    let off_axis = |p: f64| p.abs() > 2.0 * g.dp();

    let mut degenerate_crossings = Vec::new();
    let mut crossings = Vec::new();
    for x in contour_intersections(&wc, &jc, merge) {
        if !off_axis(x[1]) {
            continue;
        }
        if vanishes_along(j, x, &curve) {
            degenerate_crossings.push(x);
        } else {
            crossings.push(x);
        }
    }

    let candidates: Vec<&StagnationPoint> = stagnation
        .iter()
        .filter(|s| !s.degenerate && off_axis(s.p))
        .collect();
    let mut used = vec![false; candidates.len()];
    let mut pairs = Vec::new();
    let mut unmatched_crossings = Vec::new();
    for x in crossings {
        let best = candidates
            .iter()
            .enumerate()
            .map(|(k, s)| (k, (s.x - x[0]).hypot(s.p - x[1])))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((k, d)) if d < match_radius => {
                used[k] = true;
                pairs.push(PinchPair {
                    crossing: x,
                    stagnation: [candidates[k].x, candidates[k].p],
                    distance: d,
                });
            }
            _ => unmatched_crossings.push(x),
        }
    }
    let unmatched_stagnation = candidates
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(s, _)| [s.x, s.p])
        .collect();
    Ok(PinchReport {
        pairs,
        unmatched_crossings,
        unmatched_stagnation,
        degenerate_crossings,
        match_radius,
    })
}
