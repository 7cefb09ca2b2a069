//! Wigner flow `J` for mechanical, harmonic and Kerr Hamiltonians, and the
//! finite-difference divergence used for the continuity balance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{bilinear, PhaseGrid, Quantity, ScalarField};
use crate::states::{Basis, Oscillator, PhysicalParams};
use crate::wigner::{Request, WignerEngine};

/// Potential `U(x)` with exact derivatives of any order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Potential {
    /// `k x^2 / 2`
    Harmonic { spring_constant: f64 },
    /// `D (1 - exp(-a x))^2`
    Morse { depth: f64, range: f64 },
    /// `sum_i c_i x^i`
    Polynomial { coefficients: Vec<f64> },
}

impl Potential {
    pub fn harmonic(params: &PhysicalParams) -> Self {
        Potential::Harmonic {
            spring_constant: params.spring_constant,
        }
    }

    pub fn morse(params: &PhysicalParams) -> Self {
        Potential::Morse {
            depth: params.morse_depth,
            range: params.morse_range,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// Exact `d^order U / dx^order`.
    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        match self {
            Potential::Harmonic { spring_constant: k } => match order {
                0 => 0.5 * k * x * x,
                1 => k * x,
                2 => *k,
                _ => 0.0,
            },
            Potential::Morse { depth, range } => {
                let e = (-range * x).exp();
                if order == 0 {
                    let s = 1.0 - e;
                    return depth * s * s;
                }
                let n = order as i32;
                depth * (-2.0 * (-range).powi(n) * e + (-2.0 * range).powi(n) * e * e)
            }
            Potential::Polynomial { coefficients } => {
                let mut acc = 0.0;
                for (i, &c) in coefficients.iter().enumerate().skip(order).rev() {
                    let falling: f64 = ((i - order + 1)..=i).map(|f| f as f64).product();
                    acc = acc * x + c * falling;
                }
                acc
            }
        }
    }

    /// Highest derivative order that is not identically zero; `None` if unbounded.
    pub fn degree(&self) -> Option<usize> {
        match self {
            Potential::Harmonic { .. } => Some(2),
            Potential::Morse { .. } => None,
            Potential::Polynomial { coefficients } => {
                Some(coefficients.iter().rposition(|&c| c != 0.0).unwrap_or(0))
            }
        }
    }
}

/// Truncation of the hbar series of the mechanical flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationPolicy {
    pub max_order: usize,
    pub tail_tolerance: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            max_order: 8,
            tail_tolerance: 1e-10,
        }
    }
}

impl TruncationPolicy {
    pub fn violations(&self) -> Vec<String> {
        if self.tail_tolerance.is_finite() && self.tail_tolerance > 0.0 {
            Vec::new()
        } else {
            vec![format!(
                "tail_tolerance must be > 0 (got {})",
                self.tail_tolerance
            )]
        }
    }
}

/// How the series was summed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    /// Grid max of each summed term, ascending `l`.
    pub term_norms: Vec<f64>,
    /// Last term norm over the running-sum norm (0 if the series terminated exactly).
    pub tail_ratio: f64,
}

impl SeriesReport {
    /// Highest `l` included in the sum.
    pub fn converged_order(&self) -> usize {
        self.term_norms.len().saturating_sub(1)
    }
}

/// Flow `J = (J_x, J_p)` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: PhaseGrid,
    pub jx: Vec<f64>,
    pub jp: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: PhaseGrid, jx: Vec<f64>, jp: Vec<f64>) -> Self {
        assert_eq!(jx.len(), grid.len());
        assert_eq!(jp.len(), grid.len());
        Self { grid, jx, jp }
    }

    pub fn from_fn<F: Fn(f64, f64) -> [f64; 2]>(grid: PhaseGrid, f: F) -> Self {
        let mut jx = Vec::with_capacity(grid.len());
        let mut jp = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            for j in 0..grid.np {
                let [a, b] = f(grid.x(i), grid.p(j));
                jx.push(a);
                jp.push(b);
            }
        }
        Self::new(grid, jx, jp)
    }

    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        let k = self.grid.index(i, j);
        [self.jx[k], self.jp[k]]
    }

    pub fn x_component(&self) -> ScalarField {
        ScalarField::new(self.grid, self.jx.clone(), Quantity::FlowX)
    }

    pub fn p_component(&self) -> ScalarField {
        ScalarField::new(self.grid, self.jp.clone(), Quantity::FlowP)
    }

    /// Grid max of `|J|`.
    pub fn max_norm(&self) -> f64 {
        self.jx
            .iter()
            .zip(&self.jp)
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// Max of `|J|` over nodes at least `band` from the edge.
    pub fn interior_max_norm(&self, band: usize) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for i in band..g.nx.saturating_sub(band) {
            for j in band..g.np.saturating_sub(band) {
                let [a, b] = self.at(i, j);
                m = m.max(a.hypot(b));
            }
        }
        m
    }

    /// Corner values of cell `(i, j)` as `[f00, f10, f01, f11]` per component.
    pub fn cell(&self, i: usize, j: usize) -> ([f64; 4], [f64; 4]) {
        let g = &self.grid;
        let ks = [
            g.index(i, j),
            g.index(i + 1, j),
            g.index(i, j + 1),
            g.index(i + 1, j + 1),
        ];
        (ks.map(|k| self.jx[k]), ks.map(|k| self.jp[k]))
    }

    pub fn interpolate(&self, x: f64, p: f64) -> Option<[f64; 2]> {
        let (i, j, u, v) = self.grid.locate(x, p)?;
        let (cx, cp) = self.cell(i, j);
        Some([bilinear(cx, u, v), bilinear(cp, u, v)])
    }
}

/// Source of flow vectors at arbitrary phase-space points.
pub trait FlowSampler {
    /// `J(x, p)`, `None` outside the domain.
    fn sample(&self, x: f64, p: f64) -> Option<[f64; 2]>;
    /// Characteristic `|J|` for relative thresholds.
    fn scale(&self) -> f64;
}

impl FlowSampler for VectorField {
    fn sample(&self, x: f64, p: f64) -> Option<[f64; 2]> {
        self.interpolate(x, p)
    }

    fn scale(&self) -> f64 {
        self.max_norm()
    }
}

/// Which flow formula applies.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowModel {
    /// Closed form `W (p/M, -k x)`.
    Harmonic,
    /// Kerr oscillator `H + Lambda^2 H^2`.
    Kerr,
    /// `p^2/2M + U(x)` with the truncated hbar series.
    Mechanical {
        potential: Potential,
        truncation: TruncationPolicy,
    },
}

impl FlowModel {
    /// The model matching an oscillator's Hamiltonian.
    pub fn for_oscillator(osc: &Oscillator, truncation: TruncationPolicy) -> Self {
        match osc.basis() {
            Basis::Harmonic => FlowModel::Harmonic,
            Basis::Kerr => FlowModel::Kerr,
            Basis::Morse => FlowModel::Mechanical {
                potential: Potential::morse(osc.params()),
                truncation,
            },
        }
    }
}

fn classical_velocity(x: f64, p: f64, params: &PhysicalParams) -> [f64; 2] {
    [p / params.mass, -(params.spring_constant * x)]
}

fn harmonic_components(x: f64, p: f64, w: f64, params: &PhysicalParams) -> [f64; 2] {
    let [vx, vp] = classical_velocity(x, p, params);
    [vx * w, vp * w]
}

/// Derivatives in the order `[W, W_x, W_xx, W_p, W_pp]`.
const KERR_REQUESTS: [(u8, u8); 5] = [(0, 0), (1, 0), (2, 0), (0, 1), (0, 2)];

fn kerr_components(x: f64, p: f64, d: [f64; 5], params: &PhysicalParams) -> [f64; 2] {
    let [w, wx, wxx, wp, wpp] = d;
    if params.kerr_lambda == 0.0 {
        // exact reduction, signed zeros included
        return harmonic_components(x, p, w, params);
    }
    let m = params.mass;
    let k = params.spring_constant;
    let h2 = params.hbar * params.hbar;
    let lam2 = params.kerr_lambda * params.kerr_lambda;
    // d_p^2 (p W) = p W_pp + 2 W_p and d_x^2 (x W) = x W_xx + 2 W_x
    let qx = -(h2 * p / (4.0 * m * m)) * wxx + (p * p * p / (m * m) + k * x * x * p / m) * w
        - (h2 * k / (4.0 * m)) * (p * wpp + 2.0 * wp);
    let qp = (h2 * k * k * x / 4.0) * wpp - (k * k * x * x * x + k * x * p * p / m) * w
        + (h2 * k / (4.0 * m)) * (x * wxx + 2.0 * wx);
    let [vx, vp] = classical_velocity(x, p, params);
    [lam2 * qx + vx * w, lam2 * qp + vp * w]
}

/// `(i hbar/2)^{2l} / (2l+1)! = (-1)^l (hbar/2)^{2l} / (2l+1)!`.
fn series_coefficient(l: usize, hbar: f64) -> f64 {
    let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    let factorial: f64 = (1..=(2 * l + 1)).map(|f| f as f64).product();
    sign * (0.5 * hbar).powi(2 * l as i32) / factorial
}

fn require_harmonic_functions(engine: &WignerEngine) -> Result<()> {
    match engine.oscillator().basis() {
        Basis::Harmonic | Basis::Kerr => Ok(()),
        Basis::Morse => Err(Error::InvalidState(
            "harmonic and Kerr flows need a state in the harmonic eigenbasis".into(),
        )),
    }
}

/// Closed-form harmonic flow `J = W (p/M, -k x)`.
pub fn harmonic_flow(engine: &WignerEngine, grid: &PhaseGrid) -> Result<VectorField> {
    require_harmonic_functions(engine)?;
    let w = engine.field(grid, 0, 0)?;
    let params = *engine.params();
    let mut jx = Vec::with_capacity(grid.len());
    let mut jp = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        for j in 0..grid.np {
            let [a, b] = harmonic_components(grid.x(i), grid.p(j), w.at(i, j), &params);
            jx.push(a);
            jp.push(b);
        }
    }
    Ok(VectorField::new(*grid, jx, jp))
}

/// Kerr flow with the quantum `O(hbar^2)` corrections.
pub fn kerr_flow(engine: &WignerEngine, grid: &PhaseGrid) -> Result<VectorField> {
    require_harmonic_functions(engine)?;
    let requests = KERR_REQUESTS.map(|(a, b)| Request::wigner(a, b));
    let f = engine.fields(grid, &requests)?;
    let params = *engine.params();
    let mut jx = Vec::with_capacity(grid.len());
    let mut jp = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        for j in 0..grid.np {
            let k = grid.index(i, j);
            let d = [
                f[0].values[k],
                f[1].values[k],
                f[2].values[k],
                f[3].values[k],
                f[4].values[k],
            ];
            let [a, b] = kerr_components(grid.x(i), grid.p(j), d, &params);
            jx.push(a);
            jp.push(b);
        }
    }
    Ok(VectorField::new(*grid, jx, jp))
}

fn series_cap(potential: &Potential, truncation: &TruncationPolicy) -> (usize, bool) {
    match potential.degree() {
        // d_x^{2l+1} U vanishes once 2l+1 exceeds the degree
        Some(deg) if deg < 2 * truncation.max_order + 1 => (deg.saturating_sub(1) / 2, true),
        _ => (truncation.max_order, false),
    }
}

/// Mechanical flow `J_x = p W / M`,
/// `J_p = -sum_l (i hbar/2)^{2l}/(2l+1)! d_p^{2l} W d_x^{2l+1} U`,
/// summed in ascending `l` until a term falls below the tail tolerance.
pub fn mechanical_flow(
    engine: &WignerEngine,
    grid: &PhaseGrid,
    potential: &Potential,
    truncation: &TruncationPolicy,
) -> Result<(VectorField, SeriesReport)> {
    let params = *engine.params();
    let (cap, terminates) = series_cap(potential, truncation);
    let requests: Vec<Request> = (0..=cap)
        .map(|l| Request::wigner(0, (2 * l) as u8))
        .collect();
    let moments = engine.fields(grid, &requests)?;
    let w = &moments[0];

    let jx: Vec<f64> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            harmonic_components(grid.x(i), grid.p(j), w.values[k], &params)[0]
        })
        .collect();

    // -0.0 is the exact additive identity, so a single term passes through bit for bit
    let mut sum = vec![-0.0; grid.len()];
    let mut term_norms = Vec::new();
    let mut tail_ratio = 0.0;
    let mut converged = false;
    for (l, moment) in moments.iter().enumerate() {
        let c = series_coefficient(l, params.hbar);
        let forces: Vec<f64> = (0..grid.nx)
            .map(|i| c * potential.derivative(grid.x(i), 2 * l + 1))
            .collect();
        let mut term_norm: f64 = 0.0;
        for (k, s) in sum.iter_mut().enumerate() {
            let term = forces[k / grid.np] * moment.values[k];
            term_norm = term_norm.max(term.abs());
            *s += term;
        }
        term_norms.push(term_norm);
        let sum_norm = sum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        tail_ratio = if sum_norm > 0.0 {
            term_norm / sum_norm
        } else {
            0.0
        };
        if l > 0 && tail_ratio < truncation.tail_tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        if terminates {
            tail_ratio = 0.0;
        } else {
            return Err(Error::TruncationNotConverged {
                max_order: truncation.max_order,
                last_term_norm: *term_norms.last().unwrap_or(&0.0),
            });
        }
    }
    let jp = sum.into_iter().map(|s| -s).collect();
    Ok((
        VectorField::new(*grid, jx, jp),
        SeriesReport {
            term_norms,
            tail_ratio,
        },
    ))
}

/// Flow of any model on a grid; the series report is present for mechanical flows.
pub fn compute_flow(
    engine: &WignerEngine,
    grid: &PhaseGrid,
    model: &FlowModel,
) -> Result<(VectorField, Option<SeriesReport>)> {
    match model {
        FlowModel::Harmonic => Ok((harmonic_flow(engine, grid)?, None)),
        FlowModel::Kerr => Ok((kerr_flow(engine, grid)?, None)),
        FlowModel::Mechanical {
            potential,
            truncation,
        } => {
            let (j, r) = mechanical_flow(engine, grid, potential, truncation)?;
            Ok((j, Some(r)))
        }
    }
}

/// Flow evaluated pointwise from its own quadratures (no grid interpolation).
pub struct PointFlow<'a> {
    engine: &'a WignerEngine,
    model: FlowModel,
    scale: f64,
    bounds: PhaseGrid,
}

impl<'a> PointFlow<'a> {
    /// `scale` is the reference `|J|`; samples outside `bounds` return `None`.
    pub fn new(engine: &'a WignerEngine, model: FlowModel, scale: f64, bounds: PhaseGrid) -> Self {
        Self {
            engine,
            model,
            scale,
            bounds,
        }
    }

    pub fn flow(&self, x: f64, p: f64) -> [f64; 2] {
        let params = self.engine.params();
        match &self.model {
            FlowModel::Harmonic => {
                let w = self.engine.point(x, p, &[Request::wigner(0, 0)])[0];
                harmonic_components(x, p, w, params)
            }
            FlowModel::Kerr => {
                let req = KERR_REQUESTS.map(|(a, b)| Request::wigner(a, b));
                let v = self.engine.point(x, p, &req);
                kerr_components(x, p, [v[0], v[1], v[2], v[3], v[4]], params)
            }
            FlowModel::Mechanical {
                potential,
                truncation,
            } => {
                let (cap, _) = series_cap(potential, truncation);
                let req: Vec<Request> = (0..=cap)
                    .map(|l| Request::wigner(0, (2 * l) as u8))
                    .collect();
                let v = self.engine.point(x, p, &req);
                let mut sum = 0.0;
                for (l, m) in v.iter().enumerate() {
                    let c = series_coefficient(l, params.hbar);
                    sum += c * potential.derivative(x, 2 * l + 1) * m;
                }
                [harmonic_components(x, p, v[0], params)[0], -sum]
            }
        }
    }
}

impl FlowSampler for PointFlow<'_> {
    fn sample(&self, x: f64, p: f64) -> Option<[f64; 2]> {
        if self.bounds.contains(x, p) {
            Some(self.flow(x, p))
        } else {
            None
        }
    }

    fn scale(&self) -> f64 {
        self.scale
    }
}

/// Width of the edge band with reduced-accuracy stencils.
pub const STENCIL_BAND: usize = 2;

/// First derivative along a strided line: 4th-order central inside,
/// 2nd-order central one node in, 2nd-order one-sided at the ends.
fn differentiate_line(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    for i in 0..n {
        out[i] = if i >= 2 && i + 2 < n {
            (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
        } else if i == 0 {
            (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
        } else {
            (f[i + 1] - f[i - 1]) / (2.0 * h)
        };
    }
}

fn partial_x(grid: &PhaseGrid, values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    let mut line = vec![0.0; grid.nx];
    let mut d = vec![0.0; grid.nx];
    for j in 0..grid.np {
        for i in 0..grid.nx {
            line[i] = values[grid.index(i, j)];
        }
        differentiate_line(&line, grid.dx(), &mut d);
        for i in 0..grid.nx {
            out[grid.index(i, j)] = d[i];
        }
    }
    out
}

fn partial_p(grid: &PhaseGrid, values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.nx {
        let row = &values[i * grid.np..(i + 1) * grid.np];
        differentiate_line(row, grid.dp(), &mut out[i * grid.np..(i + 1) * grid.np]);
    }
    out
}

/// Finite-difference gradient `(d_x f, d_p f)`.
pub fn gradient(field: &ScalarField) -> (ScalarField, ScalarField) {
    let g = field.grid;
    let mut dx = ScalarField::new(g, partial_x(&g, &field.values), Quantity::Generic);
    let mut dp = ScalarField::new(g, partial_p(&g, &field.values), Quantity::Generic);
    dx.reduced_band = STENCIL_BAND;
    dp.reduced_band = STENCIL_BAND;
    (dx, dp)
}

/// `div J` by finite differences; the outer two-node band is marked reduced-accuracy.
pub fn flow_divergence(flow: &VectorField) -> ScalarField {
    let g = flow.grid;
    let ax = partial_x(&g, &flow.jx);
    let bp = partial_p(&g, &flow.jp);
    let values = ax.iter().zip(&bp).map(|(a, b)| a + b).collect();
    let mut f = ScalarField::new(g, values, Quantity::FlowDivergence);
    f.reduced_band = STENCIL_BAND;
    f
}

/// Interior `||d_t W + div J||_inf / (||J||_inf max(1/dx, 1/dp))`.
pub fn continuity_residual(
    dwdt: &ScalarField,
    div: &ScalarField,
    flow: &VectorField,
) -> Result<f64> {
    if dwdt.grid != div.grid || div.grid != flow.grid {
        return Err(Error::GridMismatch);
    }
    let g = flow.grid;
    let mut worst: f64 = 0.0;
    for i in 0..g.nx {
        for j in 0..g.np {
            if g.is_interior(i, j, STENCIL_BAND) {
                worst = worst.max((dwdt.at(i, j) + div.at(i, j)).abs());
            }
        }
    }
    let scale = flow.interior_max_norm(STENCIL_BAND) * g.inverse_spacing();
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn morse_derivatives() {
        let u = Potential::morse(&PhysicalParams::default());
        assert_eq!(u.derivative(0.0, 1), 0.0);
        assert_eq!(u.value(0.0), 0.0);
        assert!((u.derivative(0.0, 3) + 0.75).abs() < 1e-15);
    }

    #[test]
    fn polynomial_derivatives() {
        // 1 - 2x + 3x^3
        let u = Potential::Polynomial {
            coefficients: vec![1.0, -2.0, 0.0, 3.0],
        };
        assert_eq!(u.value(2.0), 1.0 - 4.0 + 24.0);
        assert_eq!(u.derivative(2.0, 1), -2.0 + 36.0);
        assert_eq!(u.derivative(2.0, 2), 36.0);
        assert_eq!(u.derivative(-7.0, 3), 18.0);
        assert_eq!(u.derivative(2.0, 4), 0.0);
        assert_eq!(u.degree(), Some(3));
    }

    #[test]
    fn harmonic_third_derivative_vanishes() {
        let u = Potential::harmonic(&PhysicalParams::default());
        for x in [-3.0, 0.0, 1.7] {
            assert_eq!(u.derivative(x, 3), 0.0);
        }
    }

    #[test]
    fn series_coefficients_are_signed() {
        assert_eq!(series_coefficient(0, 1.0), 1.0);
        assert!((series_coefficient(1, 1.0) + 0.25 / 6.0).abs() < 1e-16);
        assert!(series_coefficient(2, 1.0) > 0.0);
    }

    #[test]
    fn stencil_orders() {
        let g = PhaseGrid::new(0.0, 1.0, 41, -1.0, 1.0, 41).unwrap();
        let f = ScalarField::from_fn(g, Quantity::Generic, |x, p| x.powi(4) + p * p * p);
        let (dx, dp) = gradient(&f);
        // quartic in x and cubic in p are differentiated exactly by the 4th-order stencil
        for i in 2..39 {
            for j in 2..39 {
                let (x, p) = (g.x(i), g.p(j));
                assert!((dx.at(i, j) - 4.0 * x.powi(3)).abs() < 1e-11);
                assert!((dp.at(i, j) - 3.0 * p * p).abs() < 1e-11);
            }
        }
        // quadratic is exact everywhere
        let q = ScalarField::from_fn(g, Quantity::Generic, |x, _| x * x);
        let (qx, _) = gradient(&q);
        for i in 0..41 {
            assert!((qx.at(i, 3) - 2.0 * g.x(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_of_zero_field() {
        let g = PhaseGrid::square(1.0, 9).unwrap();
        let z = VectorField::new(g, vec![0.0; 81], vec![0.0; 81]);
        assert!(flow_divergence(&z).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rotation_is_divergence_free() {
        let g = PhaseGrid::square(2.0, 21).unwrap();
        let j = VectorField::from_fn(g, |x, p| [p, -x]);
        assert!(flow_divergence(&j).max_abs() < 1e-12);
    }
}
