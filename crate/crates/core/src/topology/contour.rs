//! Marching-squares zero level sets.

use std::collections::HashMap;

use crate::grid::{PhaseGrid, ScalarField};

/// Ordered vertices of one contour line.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<[f64; 2]>,
    /// The last vertex connects back to the first.
    pub closed: bool,
}

impl Polyline {
    /// Consecutive vertex pairs, including the closing segment.
    pub fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        let count = if self.closed && n > 2 {
            n
        } else {
            n.saturating_sub(1)
        };
        (0..count).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }
}

/// Zero contours of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    pub tag: String,
    pub grid: PhaseGrid,
    pub lines: Vec<Polyline>,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.lines.iter().flat_map(|l| l.vertices.iter().copied())
    }

    pub fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        self.lines.iter().flat_map(|l| l.segments())
    }

    /// Shortest distance from `pt` to any contour segment.
    pub fn distance_to(&self, pt: [f64; 2]) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(pt, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn point_segment_distance(pt: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((pt[0] - a[0]) * d[0] + (pt[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    (pt[0] - q[0]).hypot(pt[1] - q[1])
}

/// Grid edge carrying a contour vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Edge {
    /// Between nodes `(i, j)` and `(i+1, j)`.
    AlongX(usize, usize),
    /// Between nodes `(i, j)` and `(i, j+1)`.
    AlongP(usize, usize),
}

fn edge_vertex(field: &ScalarField, e: Edge) -> [f64; 2] {
    let g = &field.grid;
    let (i0, j0, i1, j1) = match e {
        Edge::AlongX(i, j) => (i, j, i + 1, j),
        Edge::AlongP(i, j) => (i, j, i, j + 1),
    };
    let v0 = field.at(i0, j0);
    let v1 = field.at(i1, j1);
    let t = v0 / (v0 - v1);
    let (x0, p0) = (g.x(i0), g.p(j0));
    let (x1, p1) = (g.x(i1), g.p(j1));
    [x0 + t * (x1 - x0), p0 + t * (p1 - p0)]
}

/// Marching-squares zero level set with linear edge interpolation.
///
/// Nodes with value `> 0` are inside; saddle cells are resolved by the sign
/// of the mean of the four corners. Segments are stitched in ascending cell
/// order, so the output is deterministic.
pub fn zero_contours(field: &ScalarField) -> ContourSet {
    zero_contours_tagged(field, field.quantity.tag())
}

pub fn zero_contours_tagged(field: &ScalarField, tag: impl Into<String>) -> ContourSet {
    let g = field.grid;
    let inside = |i: usize, j: usize| field.at(i, j) > 0.0;
    let mut segments: Vec<[Edge; 2]> = Vec::new();
    for i in 0..g.nx - 1 {
        for j in 0..g.np - 1 {
            // corners counterclockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
            let c = [
                inside(i, j),
                inside(i + 1, j),
                inside(i + 1, j + 1),
                inside(i, j + 1),
            ];
            let edges = [
                Edge::AlongX(i, j),
                Edge::AlongP(i + 1, j),
                Edge::AlongX(i, j + 1),
                Edge::AlongP(i, j),
            ];
            let crossed: Vec<usize> = (0..4).filter(|&e| c[e] != c[(e + 1) % 4]).collect();
            match crossed.len() {
                2 => segments.push([edges[crossed[0]], edges[crossed[1]]]),
                4 => {
                    let mean = 0.25
                        * (field.at(i, j)
                            + field.at(i + 1, j)
                            + field.at(i + 1, j + 1)
                            + field.at(i, j + 1));
                    if (mean > 0.0) == c[0] {
                        // corners 1 and 3 are cut off
                        segments.push([edges[0], edges[1]]);
                        segments.push([edges[2], edges[3]]);
                    } else {
                        segments.push([edges[3], edges[0]]);
                        segments.push([edges[1], edges[2]]);
                    }
                }
                _ => {}
            }
        }
    }

    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for e in seg {
            by_edge.entry(*e).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();

    let trace = |start: usize, from: Edge, used: &mut [bool]| -> Polyline {
        let mut vertices = vec![edge_vertex(field, from)];
        let mut seg = start;
        let mut at = from;
        let mut closed = false;
        loop {
            used[seg] = true;
            let [a, b] = segments[seg];
            let next_edge = if a == at { b } else { a };
            let next_seg = by_edge[&next_edge].iter().copied().find(|&s| s != seg);
            match next_seg {
                Some(s) if s == start => {
                    closed = true;
                    break;
                }
                Some(s) if !used[s] => {
                    vertices.push(edge_vertex(field, next_edge));
                    seg = s;
                    at = next_edge;
                }
                _ => {
                    vertices.push(edge_vertex(field, next_edge));
                    break;
                }
            }
        }
        Polyline { vertices, closed }
    };

    // open lines start at an edge used by a single segment (domain boundary)
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        if let Some(&free) = segments[s].iter().find(|e| by_edge[e].len() == 1) {
            lines.push(trace(s, free, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            lines.push(trace(s, segments[s][0], &mut used));
        }
    }
    ContourSet {
        tag: tag.into(),
        grid: g,
        lines,
    }
}
