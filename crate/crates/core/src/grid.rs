//! Uniform phase-space grids and fields sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of nodes per axis.
pub const MIN_NODES: usize = 8;

/// Uniform rectangular `(x, p)` grid, node-centred (endpoints included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl PhaseGrid {
    pub fn new(
        x_min: f64,
        x_max: f64,
        nx: usize,
        p_min: f64,
        p_max: f64,
        np: usize,
    ) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            nx,
            p_min,
            p_max,
            np,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square window `[-half, half]^2` with `n` nodes per axis.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new(-half, half, n, -half, half, n)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.nx < MIN_NODES || self.np < MIN_NODES {
            out.push(format!(
                "grid needs at least {MIN_NODES} nodes per axis (got {}x{})",
                self.nx, self.np
            ));
        }
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            out.push(format!("x range [{}, {}] is empty", self.x_min, self.x_max));
        }
        if !(self.p_min.is_finite() && self.p_max.is_finite() && self.p_min < self.p_max) {
            out.push(format!("p range [{}, {}] is empty", self.p_min, self.p_max));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGrid(v.join("; ")))
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + (self.p_max - self.p_min) * j as f64 / (self.np - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.p(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index, x outer.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.np + j
    }

    /// Inverse of `index`.
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k / self.np, k % self.np)
    }

    /// True when node `(i, j)` lies at least `band` nodes from every edge.
    pub fn is_interior(&self, i: usize, j: usize, band: usize) -> bool {
        i >= band && j >= band && i + band < self.nx && j + band < self.np
    }

    pub fn contains(&self, x: f64, p: f64) -> bool {
        x >= self.x_min && x <= self.x_max && p >= self.p_min && p <= self.p_max
    }

    /// Cell containing `(x, p)` and local coordinates in `[0, 1]^2`.
    pub fn locate(&self, x: f64, p: f64) -> Option<(usize, usize, f64, f64)> {
        if !self.contains(x, p) {
            return None;
        }
        let fx = (x - self.x_min) / self.dx();
        let fp = (p - self.p_min) / self.dp();
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fp.floor() as usize).min(self.np - 2);
        Some((i, j, fx - i as f64, fp - j as f64))
    }

    /// Inverse grid spacing scale `max(1/dx, 1/dp)`.
    pub fn inverse_spacing(&self) -> f64 {
        (1.0 / self.dx()).max(1.0 / self.dp())
    }
}

/// Physical quantity a field holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// `d_x^a d_p^b W`.
    Wigner {
        dx: u8,
        dp: u8,
    },
    WignerTimeDerivative,
    FlowX,
    FlowP,
    FlowDivergence,
    VelocityX,
    VelocityP,
    VelocityDivergence,
    CompressedDivergence,
    /// Anything else (test fields, user data).
    Generic,
}

impl Quantity {
    pub fn tag(&self) -> String {
        match self {
            Quantity::Wigner { dx: 0, dp: 0 } => "W".into(),
            Quantity::Wigner { dx, dp } => format!("dW_x{dx}_p{dp}"),
            Quantity::WignerTimeDerivative => "dWdt".into(),
            Quantity::FlowX => "Jx".into(),
            Quantity::FlowP => "Jp".into(),
            Quantity::FlowDivergence => "divJ".into(),
            Quantity::VelocityX => "wx".into(),
            Quantity::VelocityP => "wp".into(),
            Quantity::VelocityDivergence => "div_w".into(),
            Quantity::CompressedDivergence => "div_w_compressed".into(),
            Quantity::Generic => "field".into(),
        }
    }
}

/// Real field sampled on a [`PhaseGrid`], row-major with x outer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    pub quantity: Quantity,
    /// Width (in nodes) of the edge band computed with reduced accuracy.
    pub reduced_band: usize,
}

impl ScalarField {
    pub fn new(grid: PhaseGrid, values: Vec<f64>, quantity: Quantity) -> Self {
        assert_eq!(values.len(), grid.len(), "value count must match grid");
        Self {
            grid,
            values,
            quantity,
            reduced_band: 0,
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: PhaseGrid, quantity: Quantity, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.np {
                values.push(f(x, grid.p(j)));
            }
        }
        Self::new(grid, values, quantity)
    }

    pub fn zeros(grid: PhaseGrid, quantity: Quantity) -> Self {
        Self::new(grid, vec![0.0; grid.len()], quantity)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max |value| over nodes at least `band` from the edge.
    pub fn interior_max_abs(&self, band: usize) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for i in band..g.nx.saturating_sub(band) {
            for j in band..g.np.saturating_sub(band) {
                m = m.max(self.at(i, j).abs());
            }
        }
        m
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64, p: f64) -> Option<f64> {
        let (i, j, u, v) = self.grid.locate(x, p)?;
        Some(bilinear(
            [
                self.at(i, j),
                self.at(i + 1, j),
                self.at(i, j + 1),
                self.at(i + 1, j + 1),
            ],
            u,
            v,
        ))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Bilinear blend of corner values `[f00, f10, f01, f11]` (first index x).
pub fn bilinear(c: [f64; 4], u: f64, v: f64) -> f64 {
    let [f00, f10, f01, f11] = c;
    (f00 * (1.0 - u) + f10 * u) * (1.0 - v) + (f01 * (1.0 - u) + f11 * u) * v
}
