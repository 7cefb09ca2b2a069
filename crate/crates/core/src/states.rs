//! Eigenfunctions, eigenenergies and superposition states of the harmonic,
//! Kerr and Morse oscillators.
//!
//! Harmonic (and Kerr) eigenfunctions are Hermite functions evaluated by the
//! three-term recurrence on the normalized functions, so no factorials are
//! formed. Morse bound states are built from associated Laguerre polynomials
//! in `z = 2 lambda exp(-a x)`; their normalization constants are obtained by
//! quadrature and cached process-wide.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::simpson;

/// Highest Hermite-function order the recurrence is validated for.
pub const MAX_HARMONIC_ORDER: usize = 200;

/// Tolerance on `sum |c_n|^2 = 1` for a state to be accepted.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Physical constants of the three model systems.
///
/// Only the fields relevant to a given system are used: `spring_constant`
/// for the harmonic and Kerr oscillators, `kerr_lambda` for Kerr,
/// `morse_depth` and `morse_range` for Morse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub mass: f64,
    pub spring_constant: f64,
    pub hbar: f64,
    /// Kerr non-linearity; `kerr_lambda^2` has units of inverse energy.
    pub kerr_lambda: f64,
    pub morse_depth: f64,
    pub morse_range: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            spring_constant: 1.0,
            hbar: 1.0,
            kerr_lambda: 0.0,
            morse_depth: 8.0,
            morse_range: 0.25,
        }
    }
}

impl PhysicalParams {
    /// All violated invariants, empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("{name} must be finite and > 0 (got {v})"));
            }
        };
        positive("mass", self.mass);
        positive("spring_constant", self.spring_constant);
        positive("hbar", self.hbar);
        positive("morse_depth", self.morse_depth);
        positive("morse_range", self.morse_range);
        if !(self.kerr_lambda.is_finite() && self.kerr_lambda >= 0.0) {
            out.push(format!(
                "kerr_lambda must be finite and >= 0 (got {})",
                self.kerr_lambda
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(v.join("; ")))
        }
    }

    /// Harmonic angular frequency `sqrt(k/M)`.
    pub fn omega(&self) -> f64 {
        (self.spring_constant / self.mass).sqrt()
    }

    /// Oscillator length `sqrt(hbar / (M omega))`.
    pub fn oscillator_length(&self) -> f64 {
        (self.hbar / (self.mass * self.omega())).sqrt()
    }

    /// Morse `lambda = sqrt(2 M D) / (a hbar)`.
    pub fn morse_lambda(&self) -> f64 {
        (2.0 * self.mass * self.morse_depth).sqrt() / (self.morse_range * self.hbar)
    }

    /// Small-oscillation frequency of the Morse well, `a sqrt(2D/M)`.
    pub fn morse_omega(&self) -> f64 {
        self.morse_range * (2.0 * self.morse_depth / self.mass).sqrt()
    }
}

/// Which eigenbasis a state is expanded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Harmonic,
    Kerr,
    Morse,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Harmonic => "harmonic",
            Basis::Kerr => "kerr",
            Basis::Morse => "morse",
        }
    }
}

/// Number of Morse bound states: `|{n : n < lambda - 1/2}|`.
pub fn bound_state_count(params: &PhysicalParams) -> usize {
    let top = params.morse_lambda() - 0.5;
    if top <= 0.0 {
        0
    } else {
        top.ceil() as usize
    }
}

/// Eigenenergy of level `n` in the given basis.
pub fn eigenenergy(basis: Basis, n: usize, params: &PhysicalParams) -> Result<f64> {
    let nh = n as f64 + 0.5;
    match basis {
        Basis::Harmonic => Ok(params.hbar * params.omega() * nh),
        Basis::Kerr => {
            let e = params.hbar * params.omega() * nh;
            Ok(e + params.kerr_lambda * params.kerr_lambda * e * e)
        }
        Basis::Morse => {
            let count = bound_state_count(params);
            if n >= count {
                return Err(Error::NoSuchBoundState { n, count });
            }
            let e = params.hbar * params.morse_omega() * nh;
            Ok(e - e * e / (4.0 * params.morse_depth))
        }
    }
}

fn check_derivative(d: usize) -> Result<()> {
    if d > 2 {
        Err(Error::UnsupportedDerivative(d))
    } else {
        Ok(())
    }
}

/// Normalized Hermite functions `phi_{n-1}, phi_n, phi_{n+1}` at `xi`.
fn hermite_triplet(n: usize, xi: f64) -> [f64; 3] {
    let phi0 = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    let mut prev = 0.0;
    let mut cur = phi0;
    let mut below = 0.0;
    // After iteration k, `cur` holds phi_{k+1} and `prev` phi_k.
    for k in 0..=n {
        if k == n {
            below = prev;
        }
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    [below, prev, cur]
}

/// `d`-th x-derivative of the harmonic eigenfunction `psi_n(x)`.
pub fn harmonic_eigenfunction(n: usize, x: f64, d: usize, params: &PhysicalParams) -> Result<f64> {
    if n > MAX_HARMONIC_ORDER {
        return Err(Error::UnsupportedOrder {
            n,
            max: MAX_HARMONIC_ORDER,
        });
    }
    check_derivative(d)?;
    Ok(harmonic_unchecked(n, x, d, params.oscillator_length()))
}

fn harmonic_unchecked(n: usize, x: f64, d: usize, length: f64) -> f64 {
    let xi = x / length;
    let [below, at, above] = hermite_triplet(n, xi);
    let nf = n as f64;
    let value = match d {
        0 => at,
        1 => (0.5 * nf).sqrt() * below - (0.5 * (nf + 1.0)).sqrt() * above,
        _ => (xi * xi - 2.0 * nf - 1.0) * at,
    };
    value / length.powi(d as i32) / length.sqrt()
}

/// Generalized Laguerre polynomial `L_n^alpha(z)` by the three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, z: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - z;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - z) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Unnormalized Morse bound state and its `z d/dz` structure, as x-derivatives.
///
/// With `g(z) = z^s exp(-z/2) L_n^alpha(z)`, `dz/dx = -a z`:
/// `dg/dx = -a z g'`, `d2g/dx2 = a^2 (z^2 g'' + z g')`.
fn morse_unnormalized(n: usize, x: f64, d: usize, lambda: f64, a: f64) -> f64 {
    let z = 2.0 * lambda * (-a * x).exp();
    let s = lambda - n as f64 - 0.5;
    let alpha = 2.0 * s;
    let q = (s * z.ln() - 0.5 * z).exp();
    if q == 0.0 {
        return 0.0;
    }
    let l0 = laguerre(n, alpha, z);
    if d == 0 {
        return q * l0;
    }
    let l1 = if n >= 1 {
        -laguerre(n - 1, alpha + 1.0, z)
    } else {
        0.0
    };
    let u = s - 0.5 * z;
    let zg1 = q * (u * l0 + z * l1);
    if d == 1 {
        return -a * zg1;
    }
    let l2 = if n >= 2 {
        laguerre(n - 2, alpha + 2.0, z)
    } else {
        0.0
    };
    let zzg2 = q * ((u * u - s) * l0 + 2.0 * z * u * l1 + z * z * l2);
    a * a * (zzg2 + zg1)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct MorseKey {
    mass: u64,
    hbar: u64,
    depth: u64,
    range: u64,
    n: usize,
}

impl MorseKey {
    fn new(params: &PhysicalParams, n: usize) -> Self {
        Self {
            mass: params.mass.to_bits(),
            hbar: params.hbar.to_bits(),
            depth: params.morse_depth.to_bits(),
            range: params.morse_range.to_bits(),
            n,
        }
    }
}

fn morse_norm_cache() -> &'static RwLock<HashMap<MorseKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<MorseKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

const MORSE_NORM_POINTS: usize = 40_001;

/// Extent of `x` outside which `g^2` is below `exp(-80)` of its peak.
fn morse_support(n: usize, lambda: f64, a: f64) -> (f64, f64) {
    let log_g2 = |x: f64| {
        let g = morse_unnormalized(n, x, 0, lambda, a);
        if g == 0.0 {
            f64::NEG_INFINITY
        } else {
            2.0 * g.abs().ln()
        }
    };
    let step = 0.02 / a;
    let run = 100;
    let scan = |dir: f64| {
        let mut peak = f64::NEG_INFINITY;
        let mut below = 0;
        let mut x = 0.0;
        for _ in 0..2_000_000 {
            let v = log_g2(x);
            peak = peak.max(v);
            if v < peak - 80.0 {
                below += 1;
                if below >= run {
                    break;
                }
            } else {
                below = 0;
            }
            x += dir * step;
        }
        (x, peak)
    };
    let (lo, _) = scan(-1.0);
    let (hi, _) = scan(1.0);
    (lo, hi)
}

fn morse_normalization(params: &PhysicalParams, n: usize) -> f64 {
    let key = MorseKey::new(params, n);
    if let Some(&v) = morse_norm_cache().read().unwrap().get(&key) {
        return v;
    }
    let lambda = params.morse_lambda();
    let a = params.morse_range;
    let (lo, hi) = morse_support(n, lambda, a);
    let integral = simpson(
        |x| {
            let g = morse_unnormalized(n, x, 0, lambda, a);
            g * g
        },
        lo,
        hi,
        MORSE_NORM_POINTS,
    );
    let norm = 1.0 / integral.sqrt();
    // First writer wins; the computation is deterministic so racing writers agree.
    *morse_norm_cache()
        .write()
        .unwrap()
        .entry(key)
        .or_insert(norm)
}

/// `d`-th x-derivative of the normalized Morse bound state `psi_n(x)` for
/// `U(x) = D (1 - exp(-a x))^2`.
pub fn morse_eigenfunction(n: usize, x: f64, d: usize, params: &PhysicalParams) -> Result<f64> {
    check_derivative(d)?;
    let count = bound_state_count(params);
    if n >= count {
        return Err(Error::NoSuchBoundState { n, count });
    }
    let norm = morse_normalization(params, n);
    Ok(norm * morse_unnormalized(n, x, d, params.morse_lambda(), params.morse_range))
}

/// A validated system: basis, parameters and per-level constants.
///
/// Shared by reference across worker threads; all per-level data is
/// computed at construction.
#[derive(Debug, Clone)]
pub struct Oscillator {
    basis: Basis,
    params: PhysicalParams,
    length: f64,
    lambda: f64,
    morse_norms: Vec<f64>,
}

impl Oscillator {
    pub fn new(basis: Basis, params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        let morse_norms = if basis == Basis::Morse {
            (0..bound_state_count(&params))
                .map(|n| morse_normalization(&params, n))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            basis,
            params,
            length: params.oscillator_length(),
            lambda: params.morse_lambda(),
            morse_norms,
        })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Number of admissible levels, `None` for an unbounded ladder.
    pub fn level_count(&self) -> Option<usize> {
        match self.basis {
            Basis::Morse => Some(self.morse_norms.len()),
            _ => Some(MAX_HARMONIC_ORDER + 1),
        }
    }

    pub fn check_level(&self, n: usize) -> Result<()> {
        match self.basis {
            Basis::Morse if n >= self.morse_norms.len() => Err(Error::NoSuchBoundState {
                n,
                count: self.morse_norms.len(),
            }),
            Basis::Harmonic | Basis::Kerr if n > MAX_HARMONIC_ORDER => {
                Err(Error::UnsupportedOrder {
                    n,
                    max: MAX_HARMONIC_ORDER,
                })
            }
            _ => Ok(()),
        }
    }

    pub fn energy(&self, n: usize) -> Result<f64> {
        eigenenergy(self.basis, n, &self.params)
    }

    pub fn eigenfunction(&self, n: usize, x: f64, d: usize) -> Result<f64> {
        self.check_level(n)?;
        check_derivative(d)?;
        Ok(self.eigenfunction_unchecked(n, x, d))
    }

    /// Caller guarantees `n` admissible and `d <= 2`.
    pub(crate) fn eigenfunction_unchecked(&self, n: usize, x: f64, d: usize) -> f64 {
        match self.basis {
            Basis::Harmonic | Basis::Kerr => harmonic_unchecked(n, x, d, self.length),
            Basis::Morse => {
                self.morse_norms[n]
                    * morse_unnormalized(n, x, d, self.lambda, self.params.morse_range)
            }
        }
    }

    /// Interval guaranteed to contain the support of levels `0..=n_max`.
    pub(crate) fn search_interval(&self, n_max: usize) -> (f64, f64) {
        match self.basis {
            Basis::Harmonic | Basis::Kerr => {
                let r = self.length * ((2.0 * n_max as f64 + 1.0).sqrt() + 12.0);
                (-r, r)
            }
            Basis::Morse => {
                let mut lo: f64 = 0.0;
                let mut hi: f64 = 0.0;
                for n in 0..=n_max {
                    let (a, b) = morse_support(n, self.lambda, self.params.morse_range);
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                (lo, hi)
            }
        }
    }
}

/// One term `c_n |n>` of a superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub n: usize,
    pub coeff: Complex64,
}

/// A pure state `sum_n c_n exp(-i E_n t / hbar) |n>` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    basis: Basis,
    terms: Vec<Term>,
    time: f64,
}

impl StateSpec {
    /// Validates term list and normalization. Morse level bounds are checked
    /// against an [`Oscillator`] when the state is evaluated.
    pub fn new(basis: Basis, terms: Vec<Term>, time: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if terms.is_empty() {
            problems.push("term list is empty".to_string());
        }
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].iter().any(|u| u.n == t.n) {
                problems.push(format!("level {} listed twice", t.n));
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                problems.push(format!("coefficient of level {} is not finite", t.n));
            }
        }
        let norm: f64 = terms.iter().map(|t| t.coeff.norm_sqr()).sum();
        if !terms.is_empty() && (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
            problems.push(format!("sum |c_n|^2 = {norm} (must be 1 within 1e-12)"));
        }
        if !time.is_finite() {
            problems.push("time is not finite".to_string());
        }
        if problems.is_empty() {
            Ok(Self { basis, terms, time })
        } else {
            Err(Error::InvalidState(problems.join("; ")))
        }
    }

    /// The energy eigenstate `|n>`.
    pub fn eigenstate(basis: Basis, n: usize) -> Self {
        Self {
            basis,
            terms: vec![Term {
                n,
                coeff: Complex64::new(1.0, 0.0),
            }],
            time: 0.0,
        }
    }

    /// `cos(theta)|m> + sin(theta) e^{i phi} |n>`.
    pub fn two_level(basis: Basis, m: usize, n: usize, theta: f64, phi: f64) -> Result<Self> {
        Self::new(
            basis,
            vec![
                Term {
                    n: m,
                    coeff: Complex64::new(theta.cos(), 0.0),
                },
                Term {
                    n,
                    coeff: Complex64::from_polar(theta.sin(), phi),
                },
            ],
            0.0,
        )
    }

    pub fn at_time(&self, time: f64) -> Self {
        Self {
            time,
            ..self.clone()
        }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn max_level(&self) -> usize {
        self.terms.iter().map(|t| t.n).max().unwrap_or(0)
    }

    /// Ensures the state fits the oscillator's basis and level range.
    pub fn check_against(&self, osc: &Oscillator) -> Result<()> {
        if self.basis != osc.basis() {
            return Err(Error::InvalidState(format!(
                "state basis {} does not match oscillator basis {}",
                self.basis.name(),
                osc.basis().name()
            )));
        }
        for t in &self.terms {
            osc.check_level(t.n)?;
        }
        Ok(())
    }

    /// `exp(-i E_n t / hbar)` for every term, in term order.
    pub fn eigenphases(&self, osc: &Oscillator) -> Result<Vec<Complex64>> {
        let hbar = osc.params().hbar;
        self.terms
            .iter()
            .map(|t| {
                let e = osc.energy(t.n)?;
                Ok(Complex64::from_polar(1.0, -e * self.time / hbar))
            })
            .collect()
    }
}

/// `d`-th x-derivative of `Psi(x, t) = sum_n c_n exp(-i E_n t/hbar) psi_n(x)`.
pub fn evaluate_state_derivative(
    state: &StateSpec,
    osc: &Oscillator,
    x: f64,
    d: usize,
) -> Result<Complex64> {
    state.check_against(osc)?;
    check_derivative(d)?;
    let phases = state.eigenphases(osc)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (t, ph) in state.terms.iter().zip(&phases) {
        let psi = osc.eigenfunction_unchecked(t.n, x, d);
        sum += t.coeff * (ph * psi);
    }
    Ok(sum)
}

/// `Psi(x, t)` of a pure state.
pub fn evaluate_state(state: &StateSpec, osc: &Oscillator, x: f64) -> Result<Complex64> {
    evaluate_state_derivative(state, osc, x, 0)
}
