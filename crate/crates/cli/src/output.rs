//! Artifact writers: CSV fields, JSON documents and PPM rasters.
//!
//! Every writer records what it wrote so the run manifest can list it.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use wigner_flow::{MaskedField, MaskedVectorField, PhaseGrid, ScalarField, VectorField};

use crate::error::CliError;

/// One file written by a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub quantity: String,
    pub grid: PhaseGrid,
    pub time: f64,
}

/// Writes artifacts under one run directory and keeps the list.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

/// Fixed number format for every CSV value: 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl ArtifactWriter {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(CliError::io(&root))?;
        Ok(Self {
            root,
            artifacts: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    pub fn into_artifacts(self) -> Vec<Artifact> {
        self.artifacts
    }

    fn write_file(
        &mut self,
        rel: &str,
        kind: &str,
        quantity: &str,
        grid: PhaseGrid,
        time: f64,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        }
        let file = File::create(&path).map_err(CliError::io(&path))?;
        let mut out = BufWriter::new(file);
        body(&mut out)
            .and_then(|_| out.flush())
            .map_err(CliError::io(&path))?;
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            kind: kind.into(),
            quantity: quantity.into(),
            grid,
            time,
        });
        Ok(())
    }

    /// `x,p,value`, x outer.
    pub fn scalar_csv(
        &mut self,
        rel: &str,
        field: &ScalarField,
        time: f64,
    ) -> Result<(), CliError> {
        let g = field.grid;
        self.write_file(rel, "scalar_field", &field.quantity.tag(), g, time, |out| {
            writeln!(out, "x,p,value")?;
            for k in 0..g.len() {
                let (i, j) = g.coords(k);
                writeln!(
                    out,
                    "{},{},{}",
                    num(g.x(i)),
                    num(g.p(j)),
                    num(field.values[k])
                )?;
            }
            Ok(())
        })
    }

    /// `x,p,value` with an empty value cell at masked points.
    pub fn masked_csv(
        &mut self,
        rel: &str,
        field: &MaskedField,
        time: f64,
    ) -> Result<(), CliError> {
        let g = *field.grid();
        self.write_file(
            rel,
            "masked_scalar_field",
            &field.quantity().tag(),
            g,
            time,
            |out| {
                writeln!(out, "x,p,value")?;
                for k in 0..g.len() {
                    let (i, j) = g.coords(k);
                    let v = field.get_flat(k).map(num).unwrap_or_default();
                    writeln!(out, "{},{},{}", num(g.x(i)), num(g.p(j)), v)?;
                }
                Ok(())
            },
        )
    }

    /// `x,p,Jx,Jp`.
    pub fn vector_csv(
        &mut self,
        rel: &str,
        field: &VectorField,
        time: f64,
    ) -> Result<(), CliError> {
        let g = field.grid;
        self.write_file(rel, "vector_field", "J", g, time, |out| {
            writeln!(out, "x,p,Jx,Jp")?;
            for k in 0..g.len() {
                let (i, j) = g.coords(k);
                writeln!(
                    out,
                    "{},{},{},{}",
                    num(g.x(i)),
                    num(g.p(j)),
                    num(field.jx[k]),
                    num(field.jp[k])
                )?;
            }
            Ok(())
        })
    }

    /// `x,p,wx,wp`, both components empty at masked points.
    pub fn masked_vector_csv(
        &mut self,
        rel: &str,
        field: &MaskedVectorField,
        time: f64,
    ) -> Result<(), CliError> {
        let g = field.grid;
        self.write_file(rel, "masked_vector_field", "w", g, time, |out| {
            writeln!(out, "x,p,wx,wp")?;
            for k in 0..g.len() {
                let (i, j) = g.coords(k);
                let (a, b) = match field.get(i, j) {
                    Some([a, b]) => (num(a), num(b)),
                    None => (String::new(), String::new()),
                };
                writeln!(out, "{},{},{},{}", num(g.x(i)), num(g.p(j)), a, b)?;
            }
            Ok(())
        })
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn json<T: Serialize>(
        &mut self,
        rel: &str,
        kind: &str,
        quantity: &str,
        grid: PhaseGrid,
        time: f64,
        value: &T,
    ) -> Result<(), CliError> {
        self.write_file(rel, kind, quantity, grid, time, |out| {
            serde_json::to_writer_pretty(&mut *out, value).map_err(std::io::Error::from)?;
            writeln!(out)
        })
    }

    pub fn ppm(
        &mut self,
        rel: &str,
        quantity: &str,
        image: &Image,
        time: f64,
    ) -> Result<(), CliError> {
        self.write_file(rel, "image", quantity, image.grid, time, |out| {
            image.write_ppm(out)
        })
    }
}

/// Diverging map endpoints: blue at -1, near-white at 0, red at +1.
pub const COLD: [u8; 3] = [33, 102, 172];
pub const NEUTRAL: [u8; 3] = [247, 247, 247];
pub const HOT: [u8; 3] = [178, 24, 43];
/// Masked points.
pub const MASKED: [u8; 3] = [128, 128, 128];
pub const PEN: [u8; 3] = [0, 0, 0];

/// Colour of `v` in [-1, 1] (clamped); NaN maps to [`MASKED`].
pub fn diverging(v: f64) -> [u8; 3] {
    if v.is_nan() {
        return MASKED;
    }
    let v = v.clamp(-1.0, 1.0);
    let (end, t) = if v < 0.0 { (COLD, -v) } else { (HOT, v) };
    let mut c = [0u8; 3];
    for k in 0..3 {
        let a = NEUTRAL[k] as f64;
        let b = end[k] as f64;
        c[k] = (a + (b - a) * t).round() as u8;
    }
    c
}

/// RGB raster with one pixel per grid node; the top row is `p_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub grid: PhaseGrid,
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn width(&self) -> usize {
        self.grid.nx
    }

    pub fn height(&self) -> usize {
        self.grid.np
    }

    /// Colours `value(k)` (already scaled to [-1, 1], NaN for masked) at node `k`.
    pub fn from_values(grid: PhaseGrid, value: impl Fn(usize) -> f64) -> Self {
        let mut pixels = vec![MASKED; grid.len()];
        for k in 0..grid.len() {
            let (i, j) = grid.coords(k);
            let row = grid.np - 1 - j;
            pixels[row * grid.nx + i] = diverging(value(k));
        }
        Self { grid, pixels }
    }

    /// `W / max |W|`.
    pub fn wigner(w: &ScalarField) -> Self {
        let m = w.max_abs();
        let scale = if m > 0.0 { 1.0 / m } else { 0.0 };
        Self::from_values(w.grid, |k| w.values[k] * scale)
    }

    /// Values used directly, masked points gray.
    pub fn masked(f: &MaskedField) -> Self {
        Self::from_values(*f.grid(), |k| f.get_flat(k).unwrap_or(f64::NAN))
    }

    fn pixel_of(&self, pt: [f64; 2]) -> (i64, i64) {
        let g = &self.grid;
        let col = ((pt[0] - g.x_min) / g.dx()).round() as i64;
        let row = (g.np as i64 - 1) - ((pt[1] - g.p_min) / g.dp()).round() as i64;
        (col, row)
    }

    fn put(&mut self, col: i64, row: i64, c: [u8; 3]) {
        if col >= 0 && row >= 0 && (col as usize) < self.width() && (row as usize) < self.height() {
            let w = self.width();
            self.pixels[row as usize * w + col as usize] = c;
        }
    }

    /// One-pixel Bresenham line.
    fn line(&mut self, a: (i64, i64), b: (i64, i64), c: [u8; 3]) {
        let (mut x, mut y) = a;
        let dx = (b.0 - x).abs();
        let dy = -(b.1 - y).abs();
        let sx = if x < b.0 { 1 } else { -1 };
        let sy = if y < b.1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.put(x, y, c);
            if (x, y) == b {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    pub fn polyline(&mut self, points: &[[f64; 2]], c: [u8; 3]) {
        if let Some(first) = points.first() {
            let mut prev = self.pixel_of(*first);
            self.put(prev.0, prev.1, c);
            for pt in &points[1..] {
                let next = self.pixel_of(*pt);
                self.line(prev, next, c);
                prev = next;
            }
        }
    }

    pub fn write_ppm(&self, out: &mut impl Write) -> std::io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width(), self.height())?;
        for px in &self.pixels {
            out.write_all(px)?;
        }
        Ok(())
    }
}
