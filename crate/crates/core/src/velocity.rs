//! Wigner phase-space velocity `w = J / W` and its divergence
//! `div w = -(J . grad W + W d_t W) / W^2`.

use std::f64::consts::FRAC_2_PI;

use crate::error::{Error, Result};
use crate::flow::VectorField;
use crate::grid::{PhaseGrid, Quantity, ScalarField};

/// Default mask threshold relative to the grid max of `|W|`.
pub const DEFAULT_MASK_RELATIVE: f64 = 1e-12;
/// Relative `|W|` threshold of the statistics mask used for quantitative claims.
pub const STATISTICS_MASK_RELATIVE: f64 = 1e-3;

/// Scalar field defined only where `mask` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedField {
    field: ScalarField,
    mask: Vec<bool>,
}

impl MaskedField {
    fn new(grid: PhaseGrid, values: Vec<f64>, mask: Vec<bool>, quantity: Quantity) -> Self {
        let values = values
            .into_iter()
            .zip(&mask)
            .map(|(v, &m)| if m { v } else { 0.0 })
            .collect();
        Self {
            field: ScalarField::new(grid, values, quantity),
            mask,
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.field.grid
    }

    pub fn quantity(&self) -> Quantity {
        self.field.quantity
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.field.grid.index(i, j);
        self.mask[k].then(|| self.field.values[k])
    }

    pub fn get_flat(&self, k: usize) -> Option<f64> {
        self.mask[k].then(|| self.field.values[k])
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// `(flat index, value)` over unmasked points.
    pub fn valid(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.field
            .values
            .iter()
            .enumerate()
            .filter(move |(k, _)| self.mask[*k])
            .map(|(k, &v)| (k, v))
    }

    pub fn masked_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| !m).count() as f64 / self.mask.len() as f64
    }
}

/// `w = J / W` where `|W| >= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedVectorField {
    pub grid: PhaseGrid,
    wx: Vec<f64>,
    wp: Vec<f64>,
    mask: Vec<bool>,
}

impl MaskedVectorField {
    pub fn get(&self, i: usize, j: usize) -> Option<[f64; 2]> {
        let k = self.grid.index(i, j);
        self.mask[k].then(|| [self.wx[k], self.wp[k]])
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn masked_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| !m).count() as f64 / self.mask.len() as f64
    }
}

/// Raw and arctan-compressed `div w`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceMap {
    pub raw: MaskedField,
    pub compressed: MaskedField,
}

/// `DEFAULT_MASK_RELATIVE * max |W|`.
pub fn default_mask_threshold(w: &ScalarField) -> f64 {
    DEFAULT_MASK_RELATIVE * w.max_abs()
}

/// Points with `|W| > relative * max |W|`.
pub fn statistics_mask(w: &ScalarField, relative: f64) -> Vec<bool> {
    let cut = relative * w.max_abs();
    w.values.iter().map(|v| v.abs() > cut).collect()
}

fn same_grid(a: &PhaseGrid, b: &PhaseGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Wigner phase-space velocity, masked where `|W| < threshold`.
pub fn phase_velocity(
    flow: &VectorField,
    w: &ScalarField,
    threshold: f64,
) -> Result<MaskedVectorField> {
    same_grid(&flow.grid, &w.grid)?;
    let mask: Vec<bool> = w.values.iter().map(|v| v.abs() >= threshold).collect();
    let pick = |c: &[f64]| -> Vec<f64> {
        c.iter()
            .zip(&w.values)
            .zip(&mask)
            .map(|((j, w), &m)| if m { j / w } else { 0.0 })
            .collect()
    };
    Ok(MaskedVectorField {
        grid: flow.grid,
        wx: pick(&flow.jx),
        wp: pick(&flow.jp),
        mask,
    })
}

/// `(2/pi) arctan(raw)`, pointwise.
pub fn compress_divergence(raw: &ScalarField) -> ScalarField {
    let values = raw.values.iter().map(|v| FRAC_2_PI * v.atan()).collect();
    ScalarField::new(raw.grid, values, Quantity::CompressedDivergence)
}

/// `div w = -(J . grad W + W d_t W) / W^2` on the unmasked set.
///
/// `grad_w` is `(d_x W, d_p W)`; `dwdt = None` means a stationary state.
pub fn velocity_divergence(
    flow: &VectorField,
    w: &ScalarField,
    grad_w: (&ScalarField, &ScalarField),
    dwdt: Option<&ScalarField>,
    threshold: f64,
) -> Result<DivergenceMap> {
    let g = flow.grid;
    same_grid(&g, &w.grid)?;
    same_grid(&g, &grad_w.0.grid)?;
    same_grid(&g, &grad_w.1.grid)?;
    if let Some(d) = dwdt {
        same_grid(&g, &d.grid)?;
    }
    let mask: Vec<bool> = w.values.iter().map(|v| v.abs() >= threshold).collect();
    let raw: Vec<f64> = (0..g.len())
        .map(|k| {
            if !mask[k] {
                return 0.0;
            }
            let wk = w.values[k];
            let transport = flow.jx[k] * grad_w.0.values[k] + flow.jp[k] * grad_w.1.values[k];
            let local = dwdt.map_or(0.0, |d| wk * d.values[k]);
            -(transport + local) / (wk * wk)
        })
        .collect();
    let compressed = raw.iter().map(|v| FRAC_2_PI * v.atan()).collect();
    Ok(DivergenceMap {
        raw: MaskedField::new(g, raw, mask.clone(), Quantity::VelocityDivergence),
        compressed: MaskedField::new(g, compressed, mask, Quantity::CompressedDivergence),
    })
}

/// Fraction of points in `mask` (and interior to `band`) where `|div w| > threshold`.
pub fn non_liouvillian_fraction(
    map: &DivergenceMap,
    mask: &[bool],
    band: usize,
    threshold: f64,
) -> f64 {
    let g = map.raw.grid();
    let mut total = 0usize;
    let mut hits = 0usize;
    for (k, v) in map.raw.valid() {
        let (i, j) = g.coords(k);
        if mask[k] && g.is_interior(i, j, band) {
            total += 1;
            if v.abs() > threshold {
                hits += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PhaseGrid {
        PhaseGrid::square(2.0, 9).unwrap()
    }

    #[test]
    fn compression_values() {
        let g = grid();
        let raw = ScalarField::from_fn(g, Quantity::Generic, |x, _| x);
        let c = compress_divergence(&raw);
        assert_eq!(c.at(4, 0), 0.0);
        // x = 1 at i = 6
        assert!((c.at(6, 0) - 0.5).abs() < 1e-15);
        let big = ScalarField::from_fn(g, Quantity::Generic, |_, _| 1e300);
        assert!((compress_divergence(&big).at(0, 0) - 1.0).abs() < 1e-15);
        let neg = ScalarField::from_fn(g, Quantity::Generic, |_, _| f64::NEG_INFINITY);
        assert_eq!(compress_divergence(&neg).at(0, 0), -1.0);
    }

    #[test]
    fn masks_small_w() {
        let g = grid();
        let w = ScalarField::from_fn(g, Quantity::Generic, |x, _| x);
        let j = VectorField::from_fn(g, |x, p| [p * x, -x * x]);
        let v = phase_velocity(&j, &w, 0.1).unwrap();
        assert_eq!(v.get(4, 2), None);
        let [a, b] = v.get(6, 2).unwrap();
        assert!((a - g.p(2)).abs() < 1e-15 && (b + 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_mismatch() {
        let w = ScalarField::zeros(grid(), Quantity::Generic);
        let other = PhaseGrid::square(3.0, 9).unwrap();
        let j = VectorField::from_fn(other, |_, _| [0.0, 0.0]);
        assert_eq!(phase_velocity(&j, &w, 1.0), Err(Error::GridMismatch));
    }
}
