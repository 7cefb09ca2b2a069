//! Wigner functions, the Wigner phase-space flow `J`, the Wigner velocity
//! `w = J / W` and the topology of `J` for harmonic, Kerr and Morse
//! oscillators.
//!
//! ```
//! use wigner_flow::{PhaseGrid, StateSpec, Basis, Oscillator, PhysicalParams, WignerEngine, QuadratureSpec};
//!
//! let osc = Oscillator::new(Basis::Harmonic, PhysicalParams::default()).unwrap();
//! let state = StateSpec::eigenstate(Basis::Harmonic, 0);
//! let engine = WignerEngine::new(&osc, &state, &QuadratureSpec::default()).unwrap();
//! let grid = PhaseGrid::square(3.0, 31).unwrap();
//! let w = engine.field(&grid, 0, 0).unwrap();
//! assert!((w.at(15, 15) - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
//! ```

pub mod error;
pub mod flow;
pub mod grid;
pub mod quadrature;
pub mod states;
pub mod topology;
pub mod velocity;
pub mod wigner;

pub use error::{Error, Result};
pub use flow::{
    compute_flow, continuity_residual, flow_divergence, gradient, harmonic_flow, kerr_flow,
    mechanical_flow, FlowModel, FlowSampler, PointFlow, Potential, SeriesReport, TruncationPolicy,
    VectorField, STENCIL_BAND,
};
pub use grid::{PhaseGrid, Quantity, ScalarField};
pub use states::{
    bound_state_count, eigenenergy, evaluate_state, harmonic_eigenfunction, morse_eigenfunction,
    Basis, Oscillator, PhysicalParams, StateSpec, Term,
};
pub use topology::{
    pinch_point_report, poincare_index, stagnation_points, streamline, zero_contours, ContourSet,
    LoopPath, PinchReport, Polyline, StagnationPoint, Streamline, StreamlineOptions,
    StreamlineStop,
};
pub use velocity::{
    compress_divergence, phase_velocity, velocity_divergence, DivergenceMap, MaskedField,
    MaskedVectorField,
};
pub use wigner::{
    wigner_field, wigner_time_derivative, Density, QuadratureSpec, Request, WignerEngine,
};
