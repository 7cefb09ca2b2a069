#![allow(dead_code)]

use std::f64::consts::PI;

use wigner_flow::{
    Basis, FlowModel, Oscillator, PhaseGrid, PhysicalParams, QuadratureSpec, Request, ScalarField,
    StateSpec, TruncationPolicy, VectorField, WignerEngine,
};

pub struct Case {
    pub osc: Oscillator,
    pub engine: WignerEngine,
    pub grid: PhaseGrid,
}

/// `W`, `d_x W`, `d_p W`, `d_t W` and `J` on the case grid.
pub struct Fields {
    pub w: ScalarField,
    pub wx: ScalarField,
    pub wp: ScalarField,
    pub dwdt: ScalarField,
    pub j: VectorField,
}

impl Case {
    pub fn new(basis: Basis, params: PhysicalParams, state: StateSpec, grid: PhaseGrid) -> Self {
        let osc = Oscillator::new(basis, params).unwrap();
        let engine = WignerEngine::new(&osc, &state, &QuadratureSpec::default()).unwrap();
        Self { osc, engine, grid }
    }

    pub fn model(&self) -> FlowModel {
        FlowModel::for_oscillator(&self.osc, TruncationPolicy::default())
    }

    pub fn fields(&self) -> Fields {
        let req = [
            Request::wigner(0, 0),
            Request::wigner(1, 0),
            Request::wigner(0, 1),
            Request::time_derivative(),
        ];
        let mut f = self.engine.fields(&self.grid, &req).unwrap().into_iter();
        let (j, _) = wigner_flow::compute_flow(&self.engine, &self.grid, &self.model()).unwrap();
        Fields {
            w: f.next().unwrap(),
            wx: f.next().unwrap(),
            wp: f.next().unwrap(),
            dwdt: f.next().unwrap(),
            j,
        }
    }
}

pub fn square_grid() -> PhaseGrid {
    PhaseGrid::square(4.5, 201).unwrap()
}

pub fn morse_grid() -> PhaseGrid {
    PhaseGrid::new(-3.0, 12.0, 201, -4.0, 4.0, 201).unwrap()
}

pub fn kerr_params() -> PhysicalParams {
    PhysicalParams {
        kerr_lambda: 2.0,
        ..Default::default()
    }
}

/// cos(pi/3)|0> + sin(pi/3) e^{-7 i pi / 4}|1>.
pub fn superposition(basis: Basis) -> StateSpec {
    StateSpec::two_level(basis, 0, 1, PI / 3.0, -7.0 * PI / 4.0).unwrap()
}

pub fn fig1() -> Case {
    Case::new(
        Basis::Harmonic,
        PhysicalParams::default(),
        superposition(Basis::Harmonic),
        square_grid(),
    )
}

pub fn fig2() -> Case {
    Case::new(
        Basis::Kerr,
        kerr_params(),
        superposition(Basis::Kerr),
        square_grid(),
    )
}

pub fn kerr_eigenstate(n: usize) -> Case {
    Case::new(
        Basis::Kerr,
        kerr_params(),
        StateSpec::eigenstate(Basis::Kerr, n),
        square_grid(),
    )
}

pub fn morse_eigenstate(n: usize) -> Case {
    Case::new(
        Basis::Morse,
        PhysicalParams::default(),
        StateSpec::eigenstate(Basis::Morse, n),
        morse_grid(),
    )
}

/// Composite trapezoid; spectrally accurate for smooth integrands that decay inside `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for k in 1..n {
        s += f(a + h * k as f64);
    }
    s * h
}
