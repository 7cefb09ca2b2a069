//! Built-in scenarios for the three model systems.

use std::f64::consts::PI;
use std::path::PathBuf;

use wigner_flow::{Basis, PhaseGrid, PhysicalParams, QuadratureSpec, TruncationPolicy};

use crate::config::{
    LoopConfig, OutputSelection, ScenarioConfig, StateConfig, TimeConfig, TopologyConfig,
    TwoLevelConfig,
};

/// Name and one-line description of each preset.
pub const PRESETS: [(&str, &str); 3] = [
    (
        "fig1",
        "harmonic oscillator, M = k = hbar = 1, cos(pi/3)|0> + sin(pi/3) exp(-7 i pi/4)|1>",
    ),
    (
        "fig2",
        "the fig1 state under the Kerr Hamiltonian H + Lambda^2 H^2, Lambda = 2",
    ),
    (
        "fig3",
        "Morse first excited state, U(x) = 8 (1 - exp(-x/4))^2, M = hbar = 1",
    ),
];

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

fn superposition() -> StateConfig {
    StateConfig::TwoLevel(TwoLevelConfig {
        m: 0,
        n: 1,
        theta: PI / 3.0,
        phi: -7.0 * PI / 4.0,
    })
}

fn unit_params() -> PhysicalParams {
    PhysicalParams {
        mass: 1.0,
        spring_constant: 1.0,
        hbar: 1.0,
        kerr_lambda: 0.0,
        morse_depth: 8.0,
        morse_range: 0.25,
    }
}

fn square() -> PhaseGrid {
    PhaseGrid::square(4.5, 201).expect("valid grid")
}

/// Seeds along the positive x axis.
fn axis_seeds(from: f64, to: f64, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| [from + (to - from) * k as f64 / (n - 1) as f64, 0.0])
        .collect()
}

fn base(
    system: Basis,
    params: PhysicalParams,
    state: StateConfig,
    grid: PhaseGrid,
    name: &str,
) -> ScenarioConfig {
    ScenarioConfig {
        system,
        params,
        state,
        grid,
        quadrature: QuadratureSpec::default(),
        truncation: TruncationPolicy::default(),
        time: TimeConfig::At(0.0),
        outputs: OutputSelection::all(),
        topology: TopologyConfig::default(),
        output_dir: PathBuf::from(crate::config::DEFAULT_OUTPUT_DIR).join(name),
    }
}

/// The scenario behind a preset name.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    match name {
        "fig1" => {
            let mut c = base(
                Basis::Harmonic,
                unit_params(),
                superposition(),
                square(),
                name,
            );
            c.topology.loops = vec![
                LoopConfig::Circle {
                    center: [0.0, 0.0],
                    radius: 0.2,
                    vertices: 64,
                },
                LoopConfig::Circle {
                    center: [0.0, 0.0],
                    radius: 1.5,
                    vertices: 64,
                },
            ];
            c.topology.seeds = axis_seeds(0.25, 3.5, 14);
            c.topology.max_length = 25.0;
            Some(c)
        }
        "fig2" => {
            let params = PhysicalParams {
                kerr_lambda: 2.0,
                ..unit_params()
            };
            let mut c = base(Basis::Kerr, params, superposition(), square(), name);
            c.topology.loops = vec![LoopConfig::Rectangle {
                x: [-3.0, 3.0],
                p: [-3.0, 3.0],
            }];
            c.topology.seeds = axis_seeds(0.25, 3.5, 14);
            Some(c)
        }
        "fig3" => {
            let grid = PhaseGrid::new(-3.0, 12.0, 201, -4.0, 4.0, 201).expect("valid grid");
            let state = StateConfig::Terms(vec![crate::config::TermConfig {
                n: 1,
                re: 1.0,
                im: 0.0,
            }]);
            let mut c = base(Basis::Morse, unit_params(), state, grid, name);
            c.topology.loops = vec![LoopConfig::Rectangle {
                x: [-1.5, 3.0],
                p: [-1.5, 1.5],
            }];
            c.topology.seeds = axis_seeds(-1.0, 6.0, 15);
            Some(c)
        }
        _ => None,
    }
}
