//! Scenario orchestration: computes the selected quantities and writes them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use wigner_flow::topology::{winding_number, zero_contours_tagged};
use wigner_flow::velocity::{non_liouvillian_fraction, statistics_mask, STATISTICS_MASK_RELATIVE};
use wigner_flow::{
    compute_flow, continuity_residual, flow_divergence, phase_velocity, pinch_point_report,
    poincare_index, stagnation_points, streamline, velocity_divergence, ContourSet, DivergenceMap,
    FlowModel, Oscillator, PhaseGrid, PinchReport, Request, ScalarField, SeriesReport,
    StagnationPoint, Streamline, VectorField, WignerEngine, STENCIL_BAND,
};

use crate::config::{LoopConfig, ScenarioConfig};
use crate::error::{CliError, Stage};
use crate::output::{Artifact, ArtifactWriter, Image, PEN};

/// `|div w|` above this counts as non-Liouvillian in the summary.
pub const NON_LIOUVILLIAN_THRESHOLD: f64 = 1e-2;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Evaluate Wigner quadratures on the rayon pool.
    pub parallel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { parallel: true }
    }
}

/// Record of a finished run, written as `manifest.json` in the run directory.
///
/// Lists every other file the run wrote; the manifest itself is not listed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub wall_time_seconds: f64,
    pub config: ScenarioConfig,
    pub artifacts: Vec<Artifact>,
}

#[derive(Serialize)]
struct ContourRecord<'a> {
    tag: &'a str,
    closed: bool,
    vertices: &'a [[f64; 2]],
}

#[derive(Serialize)]
struct LoopRecord {
    #[serde(rename = "loop")]
    path: LoopConfig,
    index: Option<i32>,
    winding: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct PinchRecord {
    pinch: [f64; 2],
    stagnation: [f64; 2],
    distance: f64,
}

#[derive(Serialize)]
struct TopologyReport<'a> {
    time: f64,
    stagnation_points: Vec<&'a StagnationPoint>,
    degenerate_points: Vec<&'a StagnationPoint>,
    contours: Vec<ContourRecord<'a>>,
    pinch_pairs: Vec<PinchRecord>,
    unmatched_crossings: &'a [[f64; 2]],
    unmatched_stagnation: &'a [[f64; 2]],
    degenerate_crossings: &'a [[f64; 2]],
    match_radius: f64,
    loops: Vec<LoopRecord>,
}

#[derive(Serialize)]
struct StreamlineRecord<'a> {
    seed: [f64; 2],
    #[serde(flatten)]
    line: &'a Streamline,
}

#[derive(Serialize)]
struct SeriesSummary {
    converged_order: usize,
    term_norms: Vec<f64>,
    tail_ratio: f64,
}

impl From<&SeriesReport> for SeriesSummary {
    fn from(r: &SeriesReport) -> Self {
        Self {
            converged_order: r.converged_order(),
            term_norms: r.term_norms.clone(),
            tail_ratio: r.tail_ratio,
        }
    }
}

#[derive(Serialize)]
struct Summary {
    time: f64,
    max_abs_w: f64,
    max_norm_j: f64,
    continuity_residual: f64,
    series: Option<SeriesSummary>,
    mask_threshold: f64,
    masked_fraction: f64,
    statistics_mask_relative: f64,
    statistics_points: usize,
    non_liouvillian_threshold: f64,
    non_liouvillian_fraction: f64,
    max_abs_div_w_statistics: f64,
    max_abs_compressed: f64,
}

/// Directory of step `k` of `n` time steps.
pub fn step_dir(k: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len().max(3);
    format!("t{k:0width$}")
}

/// Everything computed for one time.
#[derive(Default)]
struct Fields {
    w: Option<ScalarField>,
    wx: Option<ScalarField>,
    wp: Option<ScalarField>,
    dwdt: Option<ScalarField>,
    j: Option<VectorField>,
    series: Option<SeriesReport>,
    div_j: Option<ScalarField>,
    divergence: Option<DivergenceMap>,
}

/// Runs every time step of `config` and writes the manifest.
pub fn run_scenario(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    config.validate()?;
    let start = Instant::now();
    let root = config.output_dir.clone();
    let times = config.time.times();
    let mut writer = ArtifactWriter::new(&root)?;
    let osc = Oscillator::new(config.system, config.params).stage("oscillator")?;
    for (k, &t) in times.iter().enumerate() {
        let prefix = if config.time.is_sweep() {
            format!("{}/", step_dir(k, times.len()))
        } else {
            String::new()
        };
        run_step(config, opts, &osc, t, &prefix, &mut writer)?;
    }
    let manifest = RunManifest {
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config: config.clone(),
        artifacts: writer.into_artifacts(),
    };
    write_manifest(&root, &manifest)?;
    Ok(manifest)
}

fn write_manifest(root: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let path: PathBuf = root.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(CliError::io(&path))
}

fn run_step(
    config: &ScenarioConfig,
    opts: &RunOptions,
    osc: &Oscillator,
    t: f64,
    prefix: &str,
    out: &mut ArtifactWriter,
) -> Result<(), CliError> {
    let sel = config.outputs;
    let g = config.grid;
    let need_divergence = sel.divergence || sel.summary || sel.plots;
    let need_j = sel.flow
        || sel.flow_divergence
        || sel.velocity
        || sel.topology
        || sel.streamlines
        || sel.summary
        || need_divergence;
    let need_w = sel.wigner || sel.velocity || sel.topology || sel.plots || need_divergence;
    let need_grad = sel.gradient || need_divergence;
    let need_dwdt = sel.time_derivative || need_divergence;
    if !(need_w || need_j || need_grad || need_dwdt || sel.flow_divergence) {
        return Ok(());
    }

    let state = config.state_spec(t).stage("state")?;
    let engine = WignerEngine::new(osc, &state, &config.quadrature)
        .stage("wigner")?
        .with_parallel(opts.parallel);

    let mut f = Fields::default();
    let mut requests = Vec::new();
    if need_w {
        requests.push(Request::wigner(0, 0));
    }
    if need_grad {
        requests.push(Request::wigner(1, 0));
        requests.push(Request::wigner(0, 1));
    }
    if need_dwdt {
        requests.push(Request::time_derivative());
    }
    let mut computed = engine.fields(&g, &requests).stage("wigner")?.into_iter();
    if need_w {
        f.w = computed.next();
    }
    if need_grad {
        f.wx = computed.next();
        f.wp = computed.next();
    }
    if need_dwdt {
        f.dwdt = computed.next();
    }
    let model = FlowModel::for_oscillator(osc, config.truncation);
    if need_j {
        let (j, series) = compute_flow(&engine, &g, &model).stage("flow")?;
        f.j = Some(j);
        f.series = series;
    }
    if sel.flow_divergence || sel.summary {
        f.div_j = f.j.as_ref().map(flow_divergence);
    }
    let threshold =
        f.w.as_ref()
            .map_or(0.0, |w| config.topology.mask_relative * w.max_abs());
    if need_divergence {
        let (j, w) = (f.j.as_ref().unwrap(), f.w.as_ref().unwrap());
        let grad = (f.wx.as_ref().unwrap(), f.wp.as_ref().unwrap());
        f.divergence = Some(
            velocity_divergence(j, w, grad, f.dwdt.as_ref(), threshold)
                .stage("velocity divergence")?,
        );
    }

    let path = |name: &str| format!("{prefix}{name}");
    if sel.wigner {
        out.scalar_csv(&path("W.csv"), f.w.as_ref().unwrap(), t)?;
    }
    if sel.gradient {
        out.scalar_csv(&path("dW_x1_p0.csv"), f.wx.as_ref().unwrap(), t)?;
        out.scalar_csv(&path("dW_x0_p1.csv"), f.wp.as_ref().unwrap(), t)?;
    }
    if sel.time_derivative {
        out.scalar_csv(&path("dWdt.csv"), f.dwdt.as_ref().unwrap(), t)?;
    }
    if sel.flow {
        out.vector_csv(&path("J.csv"), f.j.as_ref().unwrap(), t)?;
    }
    if sel.flow_divergence {
        out.scalar_csv(&path("divJ.csv"), f.div_j.as_ref().unwrap(), t)?;
    }
    if sel.velocity {
        let v = phase_velocity(f.j.as_ref().unwrap(), f.w.as_ref().unwrap(), threshold)
            .stage("velocity")?;
        out.masked_vector_csv(&path("w.csv"), &v, t)?;
    }
    if sel.divergence {
        let d = f.divergence.as_ref().unwrap();
        out.masked_csv(&path("div_w.csv"), &d.raw, t)?;
        out.masked_csv(&path("div_w_compressed.csv"), &d.compressed, t)?;
    }
    if sel.topology {
        write_topology(config, &f, t, &path("topology.json"), out)?;
    }
    let lines = if sel.streamlines {
        let lines = trace_streamlines(config, f.j.as_ref().unwrap())?;
        let records: Vec<StreamlineRecord> = config
            .topology
            .seeds
            .iter()
            .zip(&lines)
            .map(|(&seed, line)| StreamlineRecord { seed, line })
            .collect();
        out.json(
            &path("streamlines.json"),
            "streamlines",
            "J",
            g,
            t,
            &records,
        )?;
        lines
    } else {
        Vec::new()
    };
    if sel.summary {
        let summary = summarize(&f, threshold, t)?;
        out.json(&path("summary.json"), "summary", "summary", g, t, &summary)?;
    }
    if sel.plots {
        let w = f.w.as_ref().unwrap();
        let image = Image::wigner(w);
        out.ppm(&path("W.ppm"), "W", &image, t)?;
        let d = f.divergence.as_ref().unwrap();
        out.ppm(
            &path("div_w_compressed.ppm"),
            "div_w_compressed",
            &Image::masked(&d.compressed),
            t,
        )?;
        if sel.streamlines {
            let mut image = image;
            for line in &lines {
                image.polyline(&line.points, PEN);
            }
            out.ppm(&path("streamlines.ppm"), "streamlines", &image, t)?;
        }
    }
    Ok(())
}

fn trace_streamlines(
    config: &ScenarioConfig,
    j: &VectorField,
) -> Result<Vec<Streamline>, CliError> {
    let opts = config.topology.streamline_options();
    config
        .topology
        .seeds
        .iter()
        .map(|&seed| streamline(j, seed, &opts).stage("streamline"))
        .collect()
}

fn write_topology(
    config: &ScenarioConfig,
    f: &Fields,
    t: f64,
    rel: &str,
    out: &mut ArtifactWriter,
) -> Result<(), CliError> {
    let (w, j) = (f.w.as_ref().unwrap(), f.j.as_ref().unwrap());
    let points = stagnation_points(j);
    let sets: Vec<ContourSet> = vec![
        zero_contours_tagged(w, "W"),
        zero_contours_tagged(&j.x_component(), "Jx"),
        zero_contours_tagged(&j.p_component(), "Jp"),
    ];
    let pinch: PinchReport = pinch_point_report(w, j, &points).stage("pinch point report")?;
    let loops = config
        .topology
        .loops
        .iter()
        .map(|l| {
            let path = l.path().stage("loop")?;
            let (index, winding, error) = match (poincare_index(j, &path), winding_number(j, &path))
            {
                (Ok(i), Ok(w)) => (Some(i), Some(w), None),
                (Err(e), _) | (_, Err(e)) => (None, None, Some(e.to_string())),
            };
            Ok(LoopRecord {
                path: *l,
                index,
                winding,
                error,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = TopologyReport {
        time: t,
        stagnation_points: points.iter().filter(|s| !s.degenerate).collect(),
        degenerate_points: points.iter().filter(|s| s.degenerate).collect(),
        contours: sets
            .iter()
            .flat_map(|s| {
                s.lines.iter().map(|l| ContourRecord {
                    tag: &s.tag,
                    closed: l.closed,
                    vertices: &l.vertices,
                })
            })
            .collect(),
        pinch_pairs: pinch
            .pairs
            .iter()
            .map(|p| PinchRecord {
                pinch: p.crossing,
                stagnation: p.stagnation,
                distance: p.distance,
            })
            .collect(),
        unmatched_crossings: &pinch.unmatched_crossings,
        unmatched_stagnation: &pinch.unmatched_stagnation,
        degenerate_crossings: &pinch.degenerate_crossings,
        match_radius: pinch.match_radius,
        loops,
    };
    out.json(rel, "topology", "J", config.grid, t, &report)
}

fn summarize(f: &Fields, threshold: f64, t: f64) -> Result<Summary, CliError> {
    let (w, j) = (f.w.as_ref().unwrap(), f.j.as_ref().unwrap());
    let d = f.divergence.as_ref().unwrap();
    let residual = continuity_residual(f.dwdt.as_ref().unwrap(), f.div_j.as_ref().unwrap(), j)
        .stage("continuity")?;
    let mask = statistics_mask(w, STATISTICS_MASK_RELATIVE);
    let g: PhaseGrid = w.grid;
    let interior = |k: usize| {
        let (i, jj) = g.coords(k);
        mask[k] && g.is_interior(i, jj, STENCIL_BAND)
    };
    let statistics_points = (0..g.len()).filter(|&k| interior(k)).count();
    let max_abs_div_w_statistics = d
        .raw
        .valid()
        .filter(|(k, _)| interior(*k))
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    let max_abs_compressed = d
        .compressed
        .valid()
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    Ok(Summary {
        time: t,
        max_abs_w: w.max_abs(),
        max_norm_j: j.max_norm(),
        continuity_residual: residual,
        series: f.series.as_ref().map(SeriesSummary::from),
        mask_threshold: threshold,
        masked_fraction: d.raw.masked_fraction(),
        statistics_mask_relative: STATISTICS_MASK_RELATIVE,
        statistics_points,
        non_liouvillian_threshold: NON_LIOUVILLIAN_THRESHOLD,
        non_liouvillian_fraction: non_liouvillian_fraction(
            d,
            &mask,
            STENCIL_BAND,
            NON_LIOUVILLIAN_THRESHOLD,
        ),
        max_abs_div_w_statistics,
        max_abs_compressed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_directories_sort_lexically() {
        assert_eq!(step_dir(0, 16), "t000");
        assert_eq!(step_dir(15, 16), "t015");
        assert_eq!(step_dir(7, 2000), "t0007");
    }
}
