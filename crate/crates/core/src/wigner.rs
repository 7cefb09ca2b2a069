//! Wigner transform of pure states, with mixed partial derivatives and the
//! analytic time derivative.
//!
//! Every value is a Simpson quadrature over `y` of
//! `d_x^a [Psi*(x+y) Psi(x-y)] (2iy/hbar)^b exp(2ipy/hbar) / (pi hbar)`.
//! p-derivatives enter only through the `(2iy/hbar)^b` moment weight and
//! x-derivatives through analytic eigenfunction derivatives, so no field is
//! ever differenced numerically here.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PhaseGrid, Quantity, ScalarField};
use crate::quadrature::simpson_rule;
use crate::states::{laguerre, Oscillator, PhysicalParams, StateSpec};

/// `|Psi|` threshold (relative to its peak) defining the automatic window.
pub const WINDOW_THRESHOLD: f64 = 1e-12;
/// Largest tolerated `|Psi(x+Y) Psi(x-Y)|` relative to the squared peak.
pub const TAIL_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_SAMPLES: usize = 1025;
pub const MIN_SAMPLES: usize = 65;

const ENVELOPE_SAMPLES: usize = 8001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    #[default]
    Simpson,
}

/// Quadrature over the coherence offset `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Half-width `Y` of the `y` window; chosen from the state when `None`.
    #[serde(default)]
    pub half_width: Option<f64>,
    pub samples: usize,
    #[serde(default)]
    pub rule: QuadratureRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            half_width: None,
            samples: DEFAULT_SAMPLES,
            rule: QuadratureRule::Simpson,
        }
    }
}

impl QuadratureSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.samples < MIN_SAMPLES || self.samples.is_multiple_of(2) {
            out.push(format!(
                "quadrature samples must be odd and >= {MIN_SAMPLES} (got {})",
                self.samples
            ));
        }
        if let Some(y) = self.half_width {
            if !(y.is_finite() && y > 0.0) {
                out.push(format!("quadrature half-width must be > 0 (got {y})"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidQuadrature(v.join("; ")))
        }
    }
}

/// What is being transformed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Density {
    /// `d_x^a` of the coherence `Psi*(x+y) Psi(x-y)`.
    Coherence { dx: u8 },
    /// `d_t` of the coherence, through the eigenphases only.
    TimeDerivative,
}

/// One requested field: a density and a p-derivative order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Request {
    pub density: Density,
    pub dp: u8,
}

impl Request {
    pub fn wigner(dx: u8, dp: u8) -> Self {
        Self {
            density: Density::Coherence { dx },
            dp,
        }
    }

    pub fn time_derivative() -> Self {
        Self {
            density: Density::TimeDerivative,
            dp: 0,
        }
    }

    fn quantity(&self) -> Quantity {
        match self.density {
            Density::Coherence { dx } => Quantity::Wigner { dx, dp: self.dp },
            Density::TimeDerivative => Quantity::WignerTimeDerivative,
        }
    }
}

/// `exp(2 i p_j y_k / hbar)` for a set of momenta, row j.
struct PhaseTable {
    ny: usize,
    values: Vec<Complex64>,
}

impl PhaseTable {
    fn new(ps: &[f64], ys: &[f64], hbar: f64) -> Self {
        let mut values = Vec::with_capacity(ps.len() * ys.len());
        for &p in ps {
            for &y in ys {
                values.push(Complex64::from_polar(1.0, 2.0 * p * y / hbar));
            }
        }
        Self {
            ny: ys.len(),
            values,
        }
    }

    fn row(&self, j: usize) -> &[Complex64] {
        &self.values[j * self.ny..(j + 1) * self.ny]
    }
}

/// Wigner transform engine for one state of one oscillator.
#[derive(Debug, Clone)]
pub struct WignerEngine {
    osc: Oscillator,
    state: StateSpec,
    levels: Vec<usize>,
    coherence: Vec<(usize, usize, Complex64)>,
    rate: Vec<(usize, usize, Complex64)>,
    half_width: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    envelope_peak: f64,
    parallel: bool,
}

impl WignerEngine {
    pub fn new(osc: &Oscillator, state: &StateSpec, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        state.check_against(osc)?;
        let hbar = osc.params().hbar;
        let terms = state.terms();
        let levels: Vec<usize> = terms.iter().map(|t| t.n).collect();
        let energies: Vec<f64> = levels
            .iter()
            .map(|&n| osc.energy(n))
            .collect::<Result<_>>()?;

        let mut coherence = Vec::new();
        let mut rate = Vec::new();
        for (m, tm) in terms.iter().enumerate() {
            for (n, tn) in terms.iter().enumerate() {
                if m == n {
                    coherence.push((m, n, Complex64::new(tm.coeff.norm_sqr(), 0.0)));
                } else {
                    let de = energies[m] - energies[n];
                    let c = tm.coeff.conj()
                        * tn.coeff
                        * Complex64::from_polar(1.0, de * state.time() / hbar);
                    coherence.push((m, n, c));
                    rate.push((m, n, c * Complex64::new(0.0, de / hbar)));
                }
            }
        }

        let mut engine = Self {
            osc: osc.clone(),
            state: state.clone(),
            levels,
            coherence,
            rate,
            half_width: 0.0,
            nodes: Vec::new(),
            weights: Vec::new(),
            envelope_peak: 0.0,
            parallel: true,
        };
        let (lo, hi, peak) = engine.support();
        engine.envelope_peak = peak;
        engine.half_width = quad.half_width.unwrap_or(0.5 * (hi - lo));
        let (nodes, weights) = simpson_rule(-engine.half_width, engine.half_width, quad.samples);
        engine.nodes = nodes;
        engine.weights = weights;
        Ok(engine)
    }

    /// Serial or rayon-parallel evaluation over grid rows. Results agree bitwise.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn oscillator(&self) -> &Oscillator {
        &self.osc
    }

    pub fn state(&self) -> &StateSpec {
        &self.state
    }

    pub fn params(&self) -> &PhysicalParams {
        self.osc.params()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn samples(&self) -> usize {
        self.nodes.len()
    }

    /// `sum_n |c_n| |psi_n(x)|`, a time-independent bound on `|Psi(x, t)|`.
    pub fn envelope(&self, x: f64) -> f64 {
        self.state
            .terms()
            .iter()
            .map(|t| t.coeff.norm() * self.osc.eigenfunction_unchecked(t.n, x, 0).abs())
            .sum()
    }

    /// `(lo, hi, peak)`: the envelope is below `WINDOW_THRESHOLD * peak` outside `[lo, hi]`.
    fn support(&self) -> (f64, f64, f64) {
        let (a, b) = self.osc.search_interval(self.state.max_level());
        let step = (b - a) / (ENVELOPE_SAMPLES - 1) as f64;
        let samples: Vec<f64> = (0..ENVELOPE_SAMPLES)
            .map(|k| self.envelope(a + step * k as f64))
            .collect();
        let peak = samples.iter().cloned().fold(0.0, f64::max);
        let cut = WINDOW_THRESHOLD * peak;
        let first = samples.iter().position(|&v| v >= cut).unwrap_or(0);
        let last = samples
            .iter()
            .rposition(|&v| v >= cut)
            .unwrap_or(ENVELOPE_SAMPLES - 1);
        let lo = a + step * first.saturating_sub(1) as f64;
        let hi = a + step * (last + 1).min(ENVELOPE_SAMPLES - 1) as f64;
        (lo, hi, peak)
    }

    fn check_window(&self, xs: &[f64]) -> Result<()> {
        let y = self.half_width;
        let limit = TAIL_TOLERANCE * self.envelope_peak * self.envelope_peak;
        for &x in xs {
            let tail = self.envelope(x + y) * self.envelope(x - y);
            if tail > limit {
                return Err(Error::InsufficientQuadratureWindow {
                    x,
                    half_width: y,
                    tail: tail / (self.envelope_peak * self.envelope_peak),
                });
            }
        }
        Ok(())
    }

    fn moment_weights(&self, dp: u8) -> Vec<f64> {
        let hbar = self.params().hbar;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| w * (2.0 * y / hbar).powi(dp as i32))
            .collect()
    }

    /// Real and imaginary parts of each request along one row `x`, over `ps`.
    fn row(
        &self,
        x: f64,
        table: &PhaseTable,
        np: usize,
        requests: &[Request],
        moments: &[Vec<f64>],
    ) -> Vec<(Vec<f64>, Vec<f64>)> {
        let ny = self.nodes.len();
        let max_dx = requests
            .iter()
            .map(|r| match r.density {
                Density::Coherence { dx } => dx as usize,
                Density::TimeDerivative => 0,
            })
            .max()
            .unwrap_or(0);

        // tab[t][d][k] = psi_{n_t}^{(d)}(x + y_k); the mirrored node gives x - y_k.
        let tab: Vec<Vec<Vec<f64>>> = self
            .levels
            .iter()
            .map(|&n| {
                (0..=max_dx)
                    .map(|d| {
                        self.nodes
                            .iter()
                            .map(|&y| self.osc.eigenfunction_unchecked(n, x + y, d))
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let density = |d: Density| -> Vec<Complex64> {
            let mut rho = vec![Complex64::new(0.0, 0.0); ny];
            match d {
                Density::Coherence { dx } => {
                    let a = dx as usize;
                    let binom = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 2.0, 1.0]];
                    for &(m, n, c) in &self.coherence {
                        for (k, r) in rho.iter_mut().enumerate() {
                            let mut s = 0.0;
                            for i in 0..=a {
                                s += binom[a][i] * tab[m][i][k] * tab[n][a - i][ny - 1 - k];
                            }
                            *r += c * s;
                        }
                    }
                }
                Density::TimeDerivative => {
                    for &(m, n, c) in &self.rate {
                        for (k, r) in rho.iter_mut().enumerate() {
                            *r += c * (tab[m][0][k] * tab[n][0][ny - 1 - k]);
                        }
                    }
                }
            }
            rho
        };

        let scale = 1.0 / (PI * self.params().hbar);
        let mut out: Vec<(Vec<f64>, Vec<f64>)> = requests
            .iter()
            .map(|_| (vec![0.0; np], vec![0.0; np]))
            .collect();

        // Group requests by density so each density is built once.
        let mut done = vec![false; requests.len()];
        for r0 in 0..requests.len() {
            if done[r0] {
                continue;
            }
            let d = requests[r0].density;
            let group: Vec<usize> = (r0..requests.len())
                .filter(|&r| requests[r].density == d)
                .collect();
            for &r in &group {
                done[r] = true;
            }
            let rho = density(d);
            let mut acc = vec![Complex64::new(0.0, 0.0); group.len()];
            for j in 0..np {
                acc.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
                let phase = table.row(j);
                for k in 0..ny {
                    let z = rho[k] * phase[k];
                    for (g, &r) in group.iter().enumerate() {
                        acc[g] += z * moments[r][k];
                    }
                }
                for (g, &r) in group.iter().enumerate() {
                    // multiply by i^b
                    let s = acc[g];
                    let (re, im) = match requests[r].dp % 4 {
                        0 => (s.re, s.im),
                        1 => (-s.im, s.re),
                        2 => (-s.re, -s.im),
                        _ => (s.im, -s.re),
                    };
                    out[r].0[j] = re * scale;
                    out[r].1[j] = im * scale;
                }
            }
        }
        out
    }

    fn compute(
        &self,
        grid: &PhaseGrid,
        requests: &[Request],
    ) -> Result<Vec<(ScalarField, ScalarField)>> {
        grid.validate()?;
        for r in requests {
            if let Density::Coherence { dx } = r.density {
                if dx > 2 {
                    return Err(Error::UnsupportedDerivative(dx as usize));
                }
            }
        }
        let xs = grid.xs();
        self.check_window(&xs)?;
        let ps = grid.ps();
        let table = PhaseTable::new(&ps, &self.nodes, self.params().hbar);
        let moments: Vec<Vec<f64>> = requests.iter().map(|r| self.moment_weights(r.dp)).collect();
        let np = grid.np;
        let rows: Vec<Vec<(Vec<f64>, Vec<f64>)>> = if self.parallel {
            xs.par_iter()
                .map(|&x| self.row(x, &table, np, requests, &moments))
                .collect()
        } else {
            xs.iter()
                .map(|&x| self.row(x, &table, np, requests, &moments))
                .collect()
        };
        let mut fields: Vec<(Vec<f64>, Vec<f64>)> = requests
            .iter()
            .map(|_| {
                (
                    Vec::with_capacity(grid.len()),
                    Vec::with_capacity(grid.len()),
                )
            })
            .collect();
        for row in rows {
            for (f, (re, im)) in fields.iter_mut().zip(row) {
                f.0.extend(re);
                f.1.extend(im);
            }
        }
        Ok(fields
            .into_iter()
            .zip(requests)
            .map(|((re, im), r)| {
                (
                    ScalarField::new(*grid, re, r.quantity()),
                    ScalarField::new(*grid, im, Quantity::Generic),
                )
            })
            .collect())
    }

    /// Several fields sharing one pass over the grid.
    pub fn fields(&self, grid: &PhaseGrid, requests: &[Request]) -> Result<Vec<ScalarField>> {
        Ok(self
            .compute(grid, requests)?
            .into_iter()
            .map(|(re, _)| re)
            .collect())
    }

    /// `d_x^a d_p^b W` on the grid.
    pub fn field(&self, grid: &PhaseGrid, dx: u8, dp: u8) -> Result<ScalarField> {
        Ok(self.fields(grid, &[Request::wigner(dx, dp)])?.remove(0))
    }

    /// `d_t W`, exactly zero for a single eigenstate.
    pub fn time_derivative(&self, grid: &PhaseGrid) -> Result<ScalarField> {
        Ok(self.fields(grid, &[Request::time_derivative()])?.remove(0))
    }

    /// Imaginary part left over by the quadrature of `W` (zero in exact arithmetic).
    pub fn imaginary_residual(&self, grid: &PhaseGrid) -> Result<ScalarField> {
        Ok(self.compute(grid, &[Request::wigner(0, 0)])?.remove(0).1)
    }

    /// Requested values at a single phase-space point.
    pub fn point(&self, x: f64, p: f64, requests: &[Request]) -> Vec<f64> {
        let table = PhaseTable::new(&[p], &self.nodes, self.params().hbar);
        let moments: Vec<Vec<f64>> = requests.iter().map(|r| self.moment_weights(r.dp)).collect();
        self.row(x, &table, 1, requests, &moments)
            .into_iter()
            .map(|(re, _)| re[0])
            .collect()
    }
}

/// `d_x^a d_p^b W` of `state` on `grid`.
pub fn wigner_field(
    state: &StateSpec,
    grid: &PhaseGrid,
    dx: u8,
    dp: u8,
    quad: &QuadratureSpec,
    osc: &Oscillator,
) -> Result<ScalarField> {
    WignerEngine::new(osc, state, quad)?.field(grid, dx, dp)
}

/// `d_t W` of `state` on `grid`.
pub fn wigner_time_derivative(
    state: &StateSpec,
    grid: &PhaseGrid,
    quad: &QuadratureSpec,
    osc: &Oscillator,
) -> Result<ScalarField> {
    WignerEngine::new(osc, state, quad)?.time_derivative(grid)
}

/// Closed-form Wigner function of the harmonic Fock state `|n>`:
/// `(-1)^n / (pi hbar) exp(-2H/(hbar w)) L_n(4H/(hbar w))`.
pub fn harmonic_wigner_oracle(n: usize, x: f64, p: f64, params: &PhysicalParams) -> f64 {
    let h = p * p / (2.0 * params.mass) + 0.5 * params.spring_constant * x * x;
    let e = h / (params.hbar * params.omega());
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / (PI * params.hbar) * (-2.0 * e).exp() * laguerre(n, 0.0, 4.0 * e)
}
