//! Field lines of the flow.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::FlowSampler;

/// Why integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamlineStop {
    /// The next step would leave the domain.
    Boundary,
    /// `|J|` dropped below the stagnation threshold.
    Stagnation,
    MaxLength,
    /// The seed itself is a stagnation point; the line has zero length.
    SeedAtStagnation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamlineOptions {
    /// Arc-length step.
    pub step: f64,
    pub max_length: f64,
    /// Stop once `|J|` falls below this times the sampler scale.
    pub stagnation_relative: f64,
}

impl Default for StreamlineOptions {
    fn default() -> Self {
        Self {
            step: 1e-2,
            max_length: 10.0,
            stagnation_relative: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Streamline {
    pub points: Vec<[f64; 2]>,
    pub length: f64,
    pub stop: StreamlineStop,
}

enum Probe {
    Dir([f64; 2]),
    Outside,
    Stagnant,
}

/// RK4 on the unit field `J / |J|` from `seed`.
///
/// The direction is kept continuous from step to step, so the curve follows
/// the field line through sign changes of `J` (which happen across `W = 0`).
pub fn streamline<S: FlowSampler + ?Sized>(
    sampler: &S,
    seed: [f64; 2],
    opts: &StreamlineOptions,
) -> Result<Streamline> {
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "streamline step must be positive, got {}",
            opts.step
        )));
    }
    if !(opts.max_length >= 0.0 && opts.max_length.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "max length must be finite, got {}",
            opts.max_length
        )));
    }
    let floor = opts.stagnation_relative * sampler.scale();
    let probe = |pt: [f64; 2], reference: Option<[f64; 2]>| -> Probe {
        let Some([a, b]) = sampler.sample(pt[0], pt[1]) else {
            return Probe::Outside;
        };
        let n = a.hypot(b);
        if !(n > floor) {
            return Probe::Stagnant;
        }
        let mut d = [a / n, b / n];
        if let Some(r) = reference {
            if d[0] * r[0] + d[1] * r[1] < 0.0 {
                d = [-d[0], -d[1]];
            }
        }
        Probe::Dir(d)
    };

    let mut points = vec![seed];
    let mut heading = match probe(seed, None) {
        Probe::Dir(d) => d,
        Probe::Stagnant => {
            return Ok(Streamline {
                points,
                length: 0.0,
                stop: StreamlineStop::SeedAtStagnation,
            })
        }
        Probe::Outside => {
            return Err(Error::OutOfDomain {
                x: seed[0],
                p: seed[1],
            })
        }
    };
    let mut length = 0.0;
    let mut x = seed;
    let stop = loop {
        if length >= opts.max_length {
            break StreamlineStop::MaxLength;
        }
        let h = opts.step.min(opts.max_length - length);
        let at = |base: [f64; 2], k: [f64; 2], s: f64| [base[0] + s * k[0], base[1] + s * k[1]];
        let mut stages = [[0.0; 2]; 4];
        let offsets = [0.0, 0.5 * h, 0.5 * h, h];
        let mut halted = None;
        for s in 0..4 {
            let pt = if s == 0 {
                x
            } else {
                at(x, stages[s - 1], offsets[s])
            };
            match probe(pt, Some(heading)) {
                Probe::Dir(d) => stages[s] = d,
                Probe::Outside => {
                    halted = Some(StreamlineStop::Boundary);
                    break;
                }
                Probe::Stagnant => {
                    halted = Some(StreamlineStop::Stagnation);
                    break;
                }
            }
        }
        if let Some(reason) = halted {
            break reason;
        }
        let [k1, k2, k3, k4] = stages;
        let next = [
            x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        match probe(next, Some(heading)) {
            Probe::Dir(d) => heading = d,
            Probe::Outside => break StreamlineStop::Boundary,
            Probe::Stagnant => {
                points.push(next);
                length += h;
                break StreamlineStop::Stagnation;
            }
        }
        points.push(next);
        length += h;
        x = next;
    };
    Ok(Streamline {
        points,
        length,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::VectorField;
    use crate::grid::PhaseGrid;

    struct Analytic(fn(f64, f64) -> [f64; 2]);
    impl FlowSampler for Analytic {
        fn sample(&self, x: f64, p: f64) -> Option<[f64; 2]> {
            let v = (self.0)(x, p);
            (x.abs() <= 3.0 && p.abs() <= 3.0).then_some(v)
        }
        fn scale(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn rotation_closes() {
        let opts = StreamlineOptions {
            step: 1e-3,
            max_length: std::f64::consts::TAU,
            ..Default::default()
        };
        let s = streamline(&Analytic(|x, p| [p, -x]), [1.0, 0.0], &opts).unwrap();
        assert_eq!(s.stop, StreamlineStop::MaxLength);
        let end = s.points.last().unwrap();
        assert!((end[0] - 1.0).abs() < 1e-9 && end[1].abs() < 1e-9);
        assert!(s
            .points
            .iter()
            .all(|q| (q[0].hypot(q[1]) - 1.0).abs() < 1e-10));
        // clockwise: first step goes to negative p
        assert!(s.points[1][1] < 0.0);
    }

    #[test]
    fn follows_line_through_sign_flip() {
        // J reverses across x = 0.51; the field line runs straight through
        let opts = StreamlineOptions {
            step: 0.1,
            max_length: 1.0,
            ..Default::default()
        };
        let s = streamline(&Analytic(|x, _| [0.51 - x, 0.0]), [0.0, 0.0], &opts).unwrap();
        assert_eq!(s.stop, StreamlineStop::MaxLength);
        assert!(s.points.windows(2).all(|w| w[1][0] > w[0][0]));
        assert!((s.points.last().unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stops_at_boundary_and_seed() {
        let g = PhaseGrid::square(1.0, 11).unwrap();
        let f = VectorField::from_fn(g, |_, _| [1.0, 0.0]);
        let s = streamline(&f, [0.0, 0.0], &StreamlineOptions::default()).unwrap();
        assert_eq!(s.stop, StreamlineStop::Boundary);
        assert!(s.points.last().unwrap()[0] <= 1.0);
        let r = VectorField::from_fn(g, |x, p| [p, -x]);
        let s = streamline(&r, [0.0, 0.0], &StreamlineOptions::default()).unwrap();
        assert_eq!(s.stop, StreamlineStop::SeedAtStagnation);
        assert_eq!(s.points.len(), 1);
    }
}
