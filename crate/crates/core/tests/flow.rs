mod common;

use proptest::prelude::*;
use wigner_flow::{
    compute_flow, continuity_residual, flow_divergence, harmonic_flow, kerr_flow, mechanical_flow,
    Basis, Error, FlowModel, FlowSampler, Oscillator, PhaseGrid, PhysicalParams, PointFlow,
    Potential, QuadratureSpec, StateSpec, TruncationPolicy, WignerEngine,
};

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| u.to_bits() == v.to_bits())
}

#[test]
fn mechanical_flow_on_harmonic_potential_is_harmonic_flow() {
    let case = common::fig1();
    let h = harmonic_flow(&case.engine, &case.grid).unwrap();
    let (m, report) = mechanical_flow(
        &case.engine,
        &case.grid,
        &Potential::harmonic(case.osc.params()),
        &TruncationPolicy::default(),
    )
    .unwrap();
    assert!(same_bits(&h.jx, &m.jx) && same_bits(&h.jp, &m.jp));
    assert_eq!(report.converged_order(), 0);
    assert_eq!(report.tail_ratio, 0.0);
}

#[test]
fn kerr_flow_without_nonlinearity_is_harmonic_flow() {
    let params = PhysicalParams::default();
    let state = common::superposition(Basis::Kerr);
    let case = common::Case::new(Basis::Kerr, params, state, common::square_grid());
    let k = kerr_flow(&case.engine, &case.grid).unwrap();
    let h = harmonic_flow(&case.engine, &case.grid).unwrap();
    assert!(same_bits(&h.jx, &k.jx) && same_bits(&h.jp, &k.jp));
}

#[test]
fn harmonic_flow_is_tangent_to_circles() {
    let case = common::fig1();
    let f = case.fields();
    let g = case.grid;
    for i in 0..g.nx {
        for j in 0..g.np {
            let (x, p) = (g.x(i), g.p(j));
            let [a, b] = f.j.at(i, j);
            let radial = x * a + p * b;
            assert!(
                radial.abs() <= 4.0 * f64::EPSILON * (x * p * f.w.at(i, j)).abs(),
                "({x}, {p}): {radial:e}"
            );
        }
        // no x-flow on the x axis
        assert_eq!(f.j.at(i, g.np / 2)[0], 0.0);
    }
}

#[test]
fn harmonic_flow_reverses_where_w_is_negative() {
    let case = common::fig1();
    let f = case.fields();
    let g = case.grid;
    let mut negative = 0;
    for i in 0..g.nx {
        for j in 0..g.np {
            let (x, p) = (g.x(i), g.p(j));
            let [a, b] = f.j.at(i, j);
            let dot = a * p + b * -x;
            let w = f.w.at(i, j);
            if w < 0.0 && x.hypot(p) > 0.0 {
                negative += 1;
                assert!(dot < 0.0);
            } else if w > 0.0 && x.hypot(p) > 0.0 {
                assert!(dot > 0.0);
            }
        }
    }
    assert!(negative > 100);
}

fn perpendicularity(case: &common::Case) -> f64 {
    let f = case.fields();
    let mut worst: f64 = 0.0;
    for k in 0..case.grid.len() {
        let (a, b) = (f.j.jx[k], f.j.jp[k]);
        let (gx, gp) = (f.wx.values[k], f.wp.values[k]);
        let eps = 1e-300;
        worst = worst.max((a * gx + b * gp).abs() / (a.hypot(b) * gx.hypot(gp) + eps));
    }
    worst
}

#[test]
fn kerr_eigenstate_flow_is_perpendicular_to_gradient() {
    for n in 0..=2 {
        let r = perpendicularity(&common::kerr_eigenstate(n));
        assert!(r < 1e-6, "n={n}: {r:e}");
    }
    // not so for a superposition
    assert!(perpendicularity(&common::fig2()) > 1e-2);
}

#[test]
fn continuity_holds_for_all_scenarios() {
    let cases = [
        common::fig1(),
        common::fig2(),
        common::morse_eigenstate(0),
        common::morse_eigenstate(1),
    ];
    for case in cases {
        let f = case.fields();
        let div = flow_divergence(&f.j);
        let r = continuity_residual(&f.dwdt, &div, &f.j).unwrap();
        assert!(r < 1e-4, "{:?}: {r:e}", case.osc.basis());
    }
}

#[test]
fn continuity_detects_a_wrong_flow() {
    // the harmonic flow of a Kerr superposition does not balance its d_t W
    let case = common::fig2();
    let f = case.fields();
    let wrong = harmonic_flow(&case.engine, &case.grid).unwrap();
    let r = continuity_residual(&f.dwdt, &flow_divergence(&wrong), &wrong).unwrap();
    assert!(r > 1e-2, "{r:e}");
}

#[test]
fn morse_series_converges_with_decreasing_terms() {
    for n in [0, 1] {
        let case = common::morse_eigenstate(n);
        let (_, report) = compute_flow(&case.engine, &case.grid, &case.model()).unwrap();
        let report = report.unwrap();
        assert!(report.converged_order() <= 8);
        assert!(report.tail_ratio < 1e-10);
        let t = &report.term_norms;
        assert!(t.windows(2).skip(1).all(|w| w[1] < w[0]), "{t:?}");
    }
}

#[test]
fn truncation_that_cannot_converge_is_reported() {
    let case = common::morse_eigenstate(1);
    let tight = TruncationPolicy {
        max_order: 2,
        tail_tolerance: 1e-10,
    };
    let r = mechanical_flow(
        &case.engine,
        &case.grid,
        &Potential::morse(case.osc.params()),
        &tight,
    );
    assert!(matches!(
        r,
        Err(Error::TruncationNotConverged { max_order: 2, .. })
    ));
}

#[test]
fn classical_limit_of_the_series() {
    // the l = 0 term alone is the Liouville flow -U'(x) W
    let case = common::morse_eigenstate(1);
    let g = PhaseGrid::new(-2.0, 8.0, 21, -3.0, 3.0, 21).unwrap();
    let pot = Potential::morse(case.osc.params());
    let w = case.engine.field(&g, 0, 0).unwrap();
    let (j, report) =
        mechanical_flow(&case.engine, &g, &pot, &TruncationPolicy::default()).unwrap();
    for k in 0..g.len() {
        let (i, _) = g.coords(k);
        let classical = -pot.derivative(g.x(i), 1) * w.values[k];
        // corrections are bounded by the sum of higher term norms
        let bound: f64 = report.term_norms[1..].iter().sum();
        assert!((j.jp[k] - classical).abs() <= bound * (1.0 + 1e-12));
    }
}

#[test]
fn point_flow_matches_grid_flow() {
    for case in [common::fig2(), common::morse_eigenstate(1)] {
        let g = PhaseGrid::new(
            case.grid.x_min,
            case.grid.x_max,
            13,
            case.grid.p_min,
            case.grid.p_max,
            11,
        )
        .unwrap();
        let (j, _) = compute_flow(&case.engine, &g, &case.model()).unwrap();
        let pf = PointFlow::new(&case.engine, case.model(), j.max_norm(), g);
        for i in 0..g.nx {
            for k in 0..g.np {
                let a = j.at(i, k);
                let b = pf.sample(g.x(i), g.p(k)).unwrap();
                assert!((a[0] - b[0]).abs() <= 1e-14 * j.max_norm());
                assert!((a[1] - b[1]).abs() <= 1e-12 * j.max_norm());
            }
        }
        assert!(pf.sample(g.x_max + 1.0, 0.0).is_none());
    }
}

#[test]
fn kerr_flow_needs_harmonic_functions() {
    let osc = Oscillator::new(Basis::Morse, PhysicalParams::default()).unwrap();
    let e = WignerEngine::new(
        &osc,
        &StateSpec::eigenstate(Basis::Morse, 0),
        &QuadratureSpec::default(),
    )
    .unwrap();
    let g = PhaseGrid::square(1.0, 9).unwrap();
    assert!(kerr_flow(&e, &g).is_err());
    assert!(harmonic_flow(&e, &g).is_err());
    assert!(compute_flow(&e, &g, &FlowModel::Kerr).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn morse_derivatives_match_differences(x in -3.0f64..12.0, order in 1usize..8) {
        let pot = Potential::morse(&PhysicalParams::default());
        let h = 1e-3;
        let d = |s: f64| pot.derivative(s, order - 1);
        let fd = (-d(x + 2.0 * h) + 8.0 * d(x + h) - 8.0 * d(x - h) + d(x - 2.0 * h)) / (12.0 * h);
        let exact = pot.derivative(x, order);
        prop_assert!((fd - exact).abs() <= 1e-8 * exact.abs().max(1e-3), "{fd} vs {exact}");
    }

    #[test]
    fn polynomial_derivatives(c in proptest::collection::vec(-2.0f64..2.0, 1..6), x in -2.0f64..2.0) {
        let pot = Potential::Polynomial { coefficients: c.clone() };
        let value: f64 = c.iter().enumerate().map(|(i, a)| a * x.powi(i as i32)).sum();
        prop_assert!((pot.value(x) - value).abs() < 1e-12);
        let slope: f64 = c.iter().enumerate().skip(1).map(|(i, a)| i as f64 * a * x.powi(i as i32 - 1)).sum();
        prop_assert!((pot.derivative(x, 1) - slope).abs() < 1e-12);
        prop_assert_eq!(pot.derivative(x, c.len()), 0.0);
    }
}

#[test]
fn harmonic_model_selected_for_harmonic_oscillator() {
    let osc = Oscillator::new(Basis::Harmonic, PhysicalParams::default()).unwrap();
    assert_eq!(
        FlowModel::for_oscillator(&osc, TruncationPolicy::default()),
        FlowModel::Harmonic
    );
}
