//! Zeros of the flow field.

use serde::Serialize;

use super::contour::{point_segment_distance, zero_contours, ContourSet};
use super::winding::{poincare_index, LoopPath};
use crate::flow::VectorField;
use crate::grid::bilinear;

/// Isolated zero of `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StagnationPoint {
    pub x: f64,
    pub p: f64,
    /// Poincaré index on a small loop; 0 when it could not be computed.
    pub index: i32,
    /// `|J|` of the interpolant at the point.
    pub residual: f64,
    /// Lies on a curve along which `J` vanishes identically.
    pub degenerate: bool,
}

/// Search controls for [`stagnation_points_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StagnationOptions {
    /// Accept a root once `|J| <` this times the grid max of `|J|`.
    pub residual_relative: f64,
    /// Skip cells whose corner `|J|` all lie below this times the grid max;
    /// zeros there are quadrature noise in the tails of `W`.
    pub noise_floor_relative: f64,
    /// Bisection depth limit inside one cell.
    pub max_depth: u32,
    /// Live sub-rectangles kept per cell and level.
    pub max_live: usize,
}

impl Default for StagnationOptions {
    fn default() -> Self {
        Self {
            residual_relative: 1e-9,
            noise_floor_relative: 1e-8,
            max_depth: 52,
            max_live: 64,
        }
    }
}

fn straddles(c: &[f64; 4]) -> bool {
    let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lo <= 0.0 && hi >= 0.0 && !(lo == 0.0 && hi == 0.0)
}

/// Partial derivatives of the bilinear blend w.r.t. local `(u, v)`.
fn bilinear_grad(c: [f64; 4], u: f64, v: f64) -> [f64; 2] {
    let [f00, f10, f01, f11] = c;
    [
        (f10 - f00) * (1.0 - v) + (f11 - f01) * v,
        (f01 - f00) * (1.0 - u) + (f11 - f10) * u,
    ]
}

struct Cell {
    cx: [f64; 4],
    cp: [f64; 4],
}

impl Cell {
    fn eval(&self, u: f64, v: f64) -> [f64; 2] {
        [bilinear(self.cx, u, v), bilinear(self.cp, u, v)]
    }

    fn corners(&self, r: [f64; 4]) -> ([f64; 4], [f64; 4]) {
        let [u0, u1, v0, v1] = r;
        let pts = [(u0, v0), (u1, v0), (u0, v1), (u1, v1)];
        (
            pts.map(|(u, v)| bilinear(self.cx, u, v)),
            pts.map(|(u, v)| bilinear(self.cp, u, v)),
        )
    }

    /// Quadtree bisection. A bilinear function takes its extremes over a
    /// rectangle at the corners, so the corner sign test never discards a
    /// rectangle that holds a zero.
    fn candidates(&self, opts: &StagnationOptions, tol: f64) -> Vec<[f64; 2]> {
        let mut live = vec![[0.0, 1.0, 0.0, 1.0]];
        let mut roots = Vec::new();
        for _ in 0..=opts.max_depth {
            let mut next = Vec::new();
            for r in live {
                let (a, b) = self.corners(r);
                if !(straddles(&a) && straddles(&b)) {
                    continue;
                }
                let (uc, vc) = (0.5 * (r[0] + r[1]), 0.5 * (r[2] + r[3]));
                let [jx, jp] = self.eval(uc, vc);
                if jx.hypot(jp) < tol {
                    roots.push([uc, vc]);
                    continue;
                }
                next.push([r[0], uc, r[2], vc]);
                next.push([uc, r[1], r[2], vc]);
                next.push([r[0], uc, vc, r[3]]);
                next.push([uc, r[1], vc, r[3]]);
            }
            if next.len() > opts.max_live {
                next.sort_by(|a, b| {
                    let ra = self.centre_residual(a);
                    let rb = self.centre_residual(b);
                    ra.total_cmp(&rb)
                });
                next.truncate(opts.max_live);
            }
            if next.is_empty() {
                break;
            }
            live = next;
        }
        roots
    }

    fn centre_residual(&self, r: &[f64; 4]) -> f64 {
        let [a, b] = self.eval(0.5 * (r[0] + r[1]), 0.5 * (r[2] + r[3]));
        a.hypot(b)
    }

    /// Newton steps on the bilinear model, kept only while they help.
    fn polish(&self, mut uv: [f64; 2]) -> [f64; 2] {
        let mut res = {
            let [a, b] = self.eval(uv[0], uv[1]);
            a.hypot(b)
        };
        for _ in 0..4 {
            let [fx, fp] = self.eval(uv[0], uv[1]);
            let gx = bilinear_grad(self.cx, uv[0], uv[1]);
            let gp = bilinear_grad(self.cp, uv[0], uv[1]);
            let det = gx[0] * gp[1] - gx[1] * gp[0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let du = (fx * gp[1] - fp * gx[1]) / det;
            let dv = (gx[0] * fp - gp[0] * fx) / det;
            let cand = [(uv[0] - du).clamp(0.0, 1.0), (uv[1] - dv).clamp(0.0, 1.0)];
            let [a, b] = self.eval(cand[0], cand[1]);
            let r = a.hypot(b);
            if r < res {
                uv = cand;
                res = r;
            } else {
                break;
            }
        }
        uv
    }
}

/// Physical-unit Frobenius norm of the interpolant's Jacobian at `pt`.
fn jacobian_norm(j: &VectorField, pt: [f64; 2]) -> Option<f64> {
    let g = &j.grid;
    let (i, k, u, v) = g.locate(pt[0], pt[1])?;
    let (cx, cp) = j.cell(i, k);
    let gx = bilinear_grad(cx, u, v);
    let gp = bilinear_grad(cp, u, v);
    let (sx, sp) = (1.0 / g.dx(), 1.0 / g.dp());
    Some(
        ((gx[0] * sx).powi(2) + (gx[1] * sp).powi(2) + (gp[0] * sx).powi(2) + (gp[1] * sp).powi(2))
            .sqrt(),
    )
}

/// True when `|J|` stays far below its linear growth along the curve
/// through `pt`, sampled at curve vertices one to three cells away.
pub(crate) fn vanishes_along(j: &VectorField, pt: [f64; 2], curve: &[[f64; 2]]) -> bool {
    const RATIO: f64 = 0.1;
    let Some(slope) = jacobian_norm(j, pt) else {
        return false;
    };
    if slope == 0.0 {
        return true;
    }
    let g = &j.grid;
    let (lo, hi) = (g.dx().min(g.dp()), 3.0 * g.dx().max(g.dp()));
    curve
        .iter()
        .filter(|q| {
            let d = (q[0] - pt[0]).hypot(q[1] - pt[1]);
            d >= lo
                && d <= hi
                && j.interpolate(q[0], q[1])
                    .is_some_and(|[a, b]| a.hypot(b) < RATIO * slope * d)
        })
        .count()
        >= 2
}

/// A zero is degenerate when the `J_x = 0` and `J_p = 0` curves run
/// together through it instead of crossing: at least two `J_x = 0` vertices
/// one to three cells away lie within `COINCIDENCE * distance` of the
/// `J_p = 0` curve. Transversal crossings at angle `theta` give
/// `sin(theta)`; coincident curves give interpolation noise.
fn is_degenerate(
    grid: &crate::grid::PhaseGrid,
    pt: [f64; 2],
    x_curve: &ContourSet,
    p_curve: &ContourSet,
) -> bool {
    const COINCIDENCE: f64 = 0.04;
    let (lo, hi) = (grid.dx().min(grid.dp()), 3.0 * grid.dx().max(grid.dp()));
    let near = |q: [f64; 2], r: f64| (q[0] - pt[0]).abs() <= r && (q[1] - pt[1]).abs() <= r;
    let p_segments: Vec<_> = p_curve
        .segments()
        .filter(|(a, b)| near(*a, hi + lo) || near(*b, hi + lo))
        .collect();
    x_curve
        .vertices()
        .filter(|&q| {
            let d = (q[0] - pt[0]).hypot(q[1] - pt[1]);
            d >= lo
                && d <= hi
                && p_segments
                    .iter()
                    .any(|&(a, b)| point_segment_distance(q, a, b) < COINCIDENCE * d)
        })
        .count()
        >= 2
}

/// [`stagnation_points_with`] using default options.
pub fn stagnation_points(j: &VectorField) -> Vec<StagnationPoint> {
    stagnation_points_with(j, &StagnationOptions::default())
}

/// Zeros of the bilinear interpolant of `J`, sorted by `(x, p)`.
pub fn stagnation_points_with(j: &VectorField, opts: &StagnationOptions) -> Vec<StagnationPoint> {
    let g = j.grid;
    let scale = j.max_norm();
    if scale == 0.0 {
        return Vec::new();
    }
    let tol = opts.residual_relative * scale;
    let floor = opts.noise_floor_relative * scale;
    let mut found: Vec<[f64; 2]> = Vec::new();
    for i in 0..g.nx - 1 {
        for k in 0..g.np - 1 {
            let (cx, cp) = j.cell(i, k);
            if !(straddles(&cx) && straddles(&cp)) {
                continue;
            }
            if floor > 0.0 && (0..4).all(|c| cx[c].hypot(cp[c]) < floor) {
                continue;
            }
            let cell = Cell { cx, cp };
            // roots along a vanishing curve come in clusters; keep one per cluster
            let mut local: Vec<([f64; 2], f64)> = Vec::new();
            for uv in cell.candidates(opts, tol) {
                let uv = cell.polish(uv);
                let r = cell.centre_residual(&[uv[0], uv[0], uv[1], uv[1]]);
                match local
                    .iter_mut()
                    .find(|(q, _)| (q[0] - uv[0]).hypot(q[1] - uv[1]) < 0.25)
                {
                    Some(slot) if r < slot.1 => *slot = (uv, r),
                    Some(_) => {}
                    None => local.push((uv, r)),
                }
            }
            for ([u, v], _) in local {
                found.push([
                    g.x_min + (i as f64 + u) * g.dx(),
                    g.p_min + (k as f64 + v) * g.dp(),
                ]);
            }
        }
    }

    let merge = 1e-6 * g.dx().min(g.dp());
    found.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut roots: Vec<[f64; 2]> = Vec::new();
    for pt in found {
        if !roots
            .iter()
            .any(|r| (r[0] - pt[0]).hypot(r[1] - pt[1]) < merge)
        {
            roots.push(pt);
        }
    }

    let x_curve = zero_contours(&j.x_component());
    let p_curve = zero_contours(&j.p_component());
    let h = g.dx().min(g.dp());
    roots
        .iter()
        .enumerate()
        .map(|(n, &pt)| {
            let [a, b] = j.interpolate(pt[0], pt[1]).unwrap_or([f64::NAN; 2]);
            let degenerate = is_degenerate(&g, pt, &x_curve, &p_curve);
            let nearest = roots
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != n)
                .map(|(_, r)| (r[0] - pt[0]).hypot(r[1] - pt[1]))
                .fold(f64::INFINITY, f64::min);
            let index = if degenerate {
                0
            } else {
                let radius = (0.5 * h).min(0.45 * nearest);
                LoopPath::circle(pt, radius, 16)
                    .and_then(|c| poincare_index(j, &c))
                    .unwrap_or(0)
            };
            StagnationPoint {
                x: pt[0],
                p: pt[1],
                index,
                residual: a.hypot(b),
                degenerate,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhaseGrid;

    #[test]
    fn centre_and_saddle() {
        let g = PhaseGrid::square(2.0, 41).unwrap();
        // zeros at (0.33, 0.21) (centre-like) and none else
        let f = VectorField::from_fn(g, |x, p| [p - 0.21, -(x - 0.33)]);
        let s = stagnation_points(&f);
        assert_eq!(s.len(), 1);
        assert!((s[0].x - 0.33).abs() < 1e-9 && (s[0].p - 0.21).abs() < 1e-9);
        assert_eq!(s[0].index, 1);
        assert!(!s[0].degenerate);

        let f = VectorField::from_fn(g, |x, p| [x - 0.13, -(p + 0.41)]);
        let s = stagnation_points(&f);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].index, -1);
    }

    #[test]
    fn zero_on_grid_node_is_found_once() {
        let g = PhaseGrid::square(2.0, 41).unwrap();
        let f = VectorField::from_fn(g, |x, p| [p, -x]);
        let s = stagnation_points(&f);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].x, s[0].p), (0.0, 0.0));
        assert_eq!(s[0].index, 1);
    }

    #[test]
    fn vanishing_circle_is_degenerate() {
        let g = PhaseGrid::square(2.0, 81).unwrap();
        // J = W (p, -x) with W vanishing on a circle
        let f = VectorField::from_fn(g, |x, p| {
            let w = (x - 0.3).powi(2) + p * p - 0.5;
            [p * w, -x * w]
        });
        let s = stagnation_points(&f);
        assert!(s
            .iter()
            .any(|q| q.x.abs() < 1e-9 && q.p.abs() < 1e-9 && !q.degenerate && q.index == 1));
        let on_circle: Vec<_> = s
            .iter()
            .filter(|q| (((q.x - 0.3).powi(2) + q.p * q.p).sqrt() - 0.5f64.sqrt()).abs() < 0.05)
            .collect();
        assert!(!on_circle.is_empty());
        assert!(on_circle.iter().all(|q| q.degenerate));
    }

    #[test]
    fn empty_for_nonvanishing_field() {
        let g = PhaseGrid::square(1.0, 11).unwrap();
        let f = VectorField::from_fn(g, |_, _| [1.0, 0.5]);
        assert!(stagnation_points(&f).is_empty());
    }
}
