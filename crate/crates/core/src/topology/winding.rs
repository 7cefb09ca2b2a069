//! Closed loops and Poincaré indices of the flow along them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::flow::FlowSampler;

/// Upper bound on flow samples per loop.
pub const MAX_LOOP_SAMPLES: usize = 1 << 20;
/// `|J|` below this fraction of the sampler scale counts as stagnation.
pub const LOOP_STAGNATION_RELATIVE: f64 = 1e-12;
const MAX_BISECTIONS: u32 = 60;

/// Closed, simple, counterclockwise polygon in phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopPath {
    vertices: Vec<[f64; 2]>,
}

impl LoopPath {
    /// Validates a polygon. The closing edge is implicit; a repeated first
    /// vertex at the end is dropped.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidLoop(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidLoop("non-finite vertex".into()));
        }
        let n = vertices.len();
        for a in 0..n {
            for b in a + 1..n {
                // adjacent edges share a vertex by construction
                if b == a + 1 || (a == 0 && b == n - 1) {
                    continue;
                }
                let e1 = (vertices[a], vertices[(a + 1) % n]);
                let e2 = (vertices[b], vertices[(b + 1) % n]);
                if segments_intersect(e1.0, e1.1, e2.0, e2.1) {
                    return Err(Error::InvalidLoop(format!("edges {a} and {b} intersect")));
                }
            }
        }
        let area = signed_area(&vertices);
        if area <= 0.0 {
            return Err(Error::InvalidLoop(format!(
                "loop must be counterclockwise with positive area (signed area {area:e})"
            )));
        }
        Ok(Self { vertices })
    }

    /// Regular `n`-gon inscribed in the circle, counterclockwise.
    pub fn circle(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidLoop(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let v = (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        Self::new(v)
    }

    pub fn rectangle(x0: f64, x1: f64, p0: f64, p1: f64) -> Result<Self> {
        Self::new(vec![[x0, p0], [x1, p0], [x1, p1], [x0, p1]])
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, pt: [f64; 2]) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a[1] > pt[1]) != (b[1] > pt[1]) {
                let x = a[0] + (pt[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if pt[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `pt` to the nearest edge.
    pub fn distance_to(&self, pt: [f64; 2]) -> f64 {
        self.edges()
            .map(|(a, b)| super::contour::point_segment_distance(pt, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|k| {
            let a = v[k];
            let b = v[(k + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], q: [f64; 2]) -> bool {
    q[0] >= a[0].min(b[0])
        && q[0] <= a[0].max(b[0])
        && q[1] >= a[1].min(b[1])
        && q[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test (touching counts).
pub(crate) fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

struct Walker<'s, S: ?Sized> {
    sampler: &'s S,
    floor: f64,
    samples: usize,
}

impl<S: FlowSampler + ?Sized> Walker<'_, S> {
    fn angle(&mut self, pt: [f64; 2]) -> Result<f64> {
        self.samples += 1;
        if self.samples > MAX_LOOP_SAMPLES {
            return Err(Error::WindingNotConverged {
                max_samples: MAX_LOOP_SAMPLES,
            });
        }
        let j = self
            .sampler
            .sample(pt[0], pt[1])
            .ok_or(Error::OutOfDomain { x: pt[0], p: pt[1] })?;
        if !(j[0].hypot(j[1]) > self.floor) {
            return Err(Error::LoopThroughStagnation { x: pt[0], p: pt[1] });
        }
        Ok(j[1].atan2(j[0]))
    }

    /// Total angle change of `J` from `a` to `b`, refining until every step
    /// turns by less than a quarter turn.
    fn sweep(&mut self, a: [f64; 2], ta: f64, b: [f64; 2], tb: f64, depth: u32) -> Result<f64> {
        let d = wrap(tb - ta);
        if d.abs() < FRAC_PI_2 {
            return Ok(d);
        }
        let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        if depth >= MAX_BISECTIONS {
            return Err(Error::LoopThroughStagnation { x: m[0], p: m[1] });
        }
        let tm = self.angle(m)?;
        Ok(self.sweep(a, ta, m, tm, depth + 1)? + self.sweep(m, tm, b, tb, depth + 1)?)
    }
}

/// Net rotation of `J` around the loop, in turns (not rounded).
pub fn winding_number<S: FlowSampler + ?Sized>(sampler: &S, path: &LoopPath) -> Result<f64> {
    let mut w = Walker {
        sampler,
        floor: LOOP_STAGNATION_RELATIVE * sampler.scale(),
        samples: 0,
    };
    let v = path.vertices();
    let angles = v
        .iter()
        .map(|&pt| w.angle(pt))
        .collect::<Result<Vec<_>>>()?;
    let n = v.len();
    let mut total = 0.0;
    for k in 0..n {
        let l = (k + 1) % n;
        total += w.sweep(v[k], angles[k], v[l], angles[l], 0)?;
    }
    Ok(total / TAU)
}

/// Poincaré index of the flow around a counterclockwise loop.
pub fn poincare_index<S: FlowSampler + ?Sized>(sampler: &S, path: &LoopPath) -> Result<i32> {
    Ok(winding_number(sampler, path)?.round() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::VectorField;
    use crate::grid::PhaseGrid;

    struct Analytic(fn(f64, f64) -> [f64; 2]);
    impl FlowSampler for Analytic {
        fn sample(&self, x: f64, p: f64) -> Option<[f64; 2]> {
            Some((self.0)(x, p))
        }
        fn scale(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn classic_indices() {
        let c = LoopPath::circle([0.0, 0.0], 1.0, 8).unwrap();
        assert_eq!(poincare_index(&Analytic(|x, p| [p, -x]), &c).unwrap(), 1);
        assert_eq!(poincare_index(&Analytic(|x, p| [x, p]), &c).unwrap(), 1);
        assert_eq!(poincare_index(&Analytic(|x, p| [x, -p]), &c).unwrap(), -1);
        // z^2 and conj(z)^3
        assert_eq!(
            poincare_index(&Analytic(|x, p| [x * x - p * p, 2.0 * x * p]), &c).unwrap(),
            2
        );
        assert_eq!(
            poincare_index(
                &Analytic(|x, p| [x * x * x - 3.0 * x * p * p, -(3.0 * x * x * p - p * p * p)]),
                &c
            )
            .unwrap(),
            -3
        );
        let off = LoopPath::circle([3.0, 0.0], 1.0, 8).unwrap();
        assert_eq!(poincare_index(&Analytic(|x, p| [p, -x]), &off).unwrap(), 0);
    }

    #[test]
    fn bilinear_field_index() {
        let g = PhaseGrid::square(2.0, 41).unwrap();
        let f = VectorField::from_fn(g, |x, p| [p - 0.3, -(x + 0.2)]);
        let c = LoopPath::rectangle(-1.0, 1.0, -1.0, 1.0).unwrap();
        assert_eq!(poincare_index(&f, &c).unwrap(), 1);
    }

    #[test]
    fn loop_through_zero_is_an_error() {
        let c = LoopPath::circle([1.0, 0.0], 1.0, 4).unwrap();
        let r = poincare_index(&Analytic(|x, p| [p, -x]), &c);
        assert!(matches!(r, Err(Error::LoopThroughStagnation { .. })));
    }

    #[test]
    fn rejects_bad_loops() {
        assert!(LoopPath::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        // clockwise
        assert!(LoopPath::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).is_err());
        // bow tie
        assert!(LoopPath::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(LoopPath::rectangle(0.0, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn outside_domain() {
        let g = PhaseGrid::square(1.0, 11).unwrap();
        let f = VectorField::from_fn(g, |x, p| [p, -x]);
        let c = LoopPath::circle([0.0, 0.0], 2.0, 8).unwrap();
        assert!(matches!(
            poincare_index(&f, &c),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn contains_points() {
        let c = LoopPath::rectangle(0.0, 2.0, 0.0, 1.0).unwrap();
        assert!(c.contains([1.0, 0.5]));
        assert!(!c.contains([3.0, 0.5]));
        assert!((c.distance_to([1.0, 2.0]) - 1.0).abs() < 1e-15);
    }
}
