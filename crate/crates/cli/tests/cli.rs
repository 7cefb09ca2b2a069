use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;
use wigner_flow_cli::config::ConfigFile;
use wigner_flow_cli::{
    presets, run_scenario, CliError, OutputSelection, RunOptions, ScenarioConfig, MANIFEST_FILE,
};

fn preset_into(name: &str, dir: &Path) -> ScenarioConfig {
    let mut c = presets::preset(name).unwrap();
    c.output_dir = dir.to_path_buf();
    c
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// A small harmonic scenario that runs in well under a second.
fn small_config(dir: &Path) -> String {
    format!(
        r#"{{
  "system": "harmonic",
  "params": {{"mass": 1.0, "spring_constant": 1.0, "hbar": 1.0, "kerr_lambda": 0.0, "morse_depth": 8.0, "morse_range": 0.25}},
  "state": {{"two_level": {{"m": 0, "n": 1, "theta": 1.0471975511965976, "phi": -5.497787143782138}}}},
  "grid": {{"x_min": -4.0, "x_max": 4.0, "nx": 33, "p_min": -4.0, "p_max": 4.0, "np": 33}},
  "time": {{"start": 0.0, "stop": 1.0, "steps": 2}},
  "outputs": {{"wigner": true, "gradient": true, "time_derivative": true, "flow": true, "flow_divergence": true,
              "velocity": true, "divergence": true, "topology": true, "streamlines": true, "summary": true, "plots": true}},
  "topology": {{"loops": [{{"circle": {{"center": [0.0, 0.0], "radius": 1.5, "vertices": 32}}}}], "seeds": [[1.0, 0.0]]}},
  "output_dir": {:?}
}}"#,
        dir.display().to_string()
    )
}

fn files_under(root: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap();
                out.push(
                    rel.components()
                        .map(|c| c.as_os_str().to_string_lossy())
                        .collect::<Vec<_>>()
                        .join("/"),
                );
            }
        }
    }
    out.sort();
    out
}

#[test]
fn fig1_preset_emits_one_stagnation_point_of_index_one() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_scenario(&preset_into("fig1", dir.path()), &RunOptions::default()).unwrap();
    let paths: Vec<&str> = manifest.artifacts.iter().map(|a| a.path.as_str()).collect();
    for f in [
        "W.csv",
        "J.csv",
        "streamlines.json",
        "topology.json",
        "W.ppm",
        "streamlines.ppm",
    ] {
        assert!(paths.contains(&f), "{f} missing from {paths:?}");
    }
    let topo = read_json(&dir.path().join("topology.json"));
    let points = topo["stagnation_points"].as_array().unwrap();
    assert_eq!(points.len(), 1, "{points:?}");
    assert_eq!(points[0]["index"], 1);
    let dx = 9.0 / 200.0;
    assert!(points[0]["x"].as_f64().unwrap().abs() < dx / 2.0);
    assert!(points[0]["p"].as_f64().unwrap().abs() < dx / 2.0);
    for l in topo["loops"].as_array().unwrap() {
        assert_eq!(l["index"], 1, "{l}");
    }
    assert!(topo["pinch_pairs"].as_array().unwrap().is_empty());

    let w = std::fs::read_to_string(dir.path().join("W.csv")).unwrap();
    let mut lines = w.lines();
    assert_eq!(lines.next(), Some("x,p,value"));
    assert_eq!(lines.count(), 201 * 201);
    let streams = read_json(&dir.path().join("streamlines.json"));
    assert_eq!(streams.as_array().unwrap().len(), 14);
}

#[test]
fn fig3_preset_emits_bounded_compressed_map_and_pinch_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = preset_into("fig3", dir.path());
    c.outputs = OutputSelection {
        divergence: true,
        topology: true,
        ..Default::default()
    };
    run_scenario(&c, &RunOptions::default()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("div_w_compressed.csv")).unwrap();
    let mut valid = 0;
    let mut extreme: f64 = 0.0;
    for line in text.lines().skip(1) {
        let cell = line.rsplit(',').next().unwrap();
        if !cell.is_empty() {
            let v: f64 = cell.parse().unwrap();
            assert!((-1.0..=1.0).contains(&v));
            extreme = extreme.max(v.abs());
            valid += 1;
        }
    }
    assert!(valid > 1000);
    assert!(extreme > 0.99);
    let topo = read_json(&dir.path().join("topology.json"));
    assert!(!topo["pinch_pairs"].as_array().unwrap().is_empty());
    assert!(topo["unmatched_crossings"].as_array().unwrap().is_empty());
}

#[test]
fn empty_selection_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = preset_into("fig3", dir.path());
    c.outputs = OutputSelection::default();
    let m = run_scenario(&c, &RunOptions::default()).unwrap();
    assert!(m.artifacts.is_empty());
    assert_eq!(files_under(dir.path()), vec![MANIFEST_FILE.to_string()]);
    let on_disk = read_json(&dir.path().join(MANIFEST_FILE));
    assert_eq!(on_disk["artifacts"].as_array().unwrap().len(), 0);
}

#[test]
fn manifest_lists_every_file_once() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ConfigFile::parse(&small_config(dir.path()))
        .unwrap()
        .resolve()
        .unwrap();
    let m = run_scenario(&cfg, &RunOptions::default()).unwrap();
    let mut listed: Vec<String> = m.artifacts.iter().map(|a| a.path.clone()).collect();
    listed.push(MANIFEST_FILE.into());
    listed.sort();
    let mut dedup = listed.clone();
    dedup.dedup();
    assert_eq!(dedup, listed, "duplicate entries");
    assert_eq!(files_under(dir.path()), listed);
    // the sweep writes one directory per step
    assert!(listed.iter().any(|p| p.starts_with("t000/")));
    assert!(listed.iter().any(|p| p.starts_with("t001/")));
    let times: Vec<f64> = m.artifacts.iter().map(|a| a.time).collect();
    assert!(times.contains(&0.0) && times.contains(&0.5));
    assert_eq!(
        read_json(&dir.path().join(MANIFEST_FILE))["config_hash"],
        m.config_hash.as_str()
    );
}

#[test]
fn masked_points_are_empty_cells() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = preset_into("fig1", dir.path());
    c.grid = wigner_flow::PhaseGrid::square(4.5, 41).unwrap();
    c.topology.mask_relative = 1e-3;
    c.outputs = OutputSelection {
        velocity: true,
        divergence: true,
        ..Default::default()
    };
    run_scenario(&c, &RunOptions::default()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("x,p,wx,wp"));
    // corners of the window are far in the tails
    let corner = text.lines().nth(1).unwrap();
    assert!(corner.ends_with(",,"), "{corner}");
    let center = text.lines().nth(1 + 20 * 41 + 20).unwrap();
    assert_eq!(center.split(',').filter(|s| s.is_empty()).count(), 0);
}

#[test]
fn serial_and_parallel_runs_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = ConfigFile::parse(&small_config(a.path()))
        .unwrap()
        .resolve()
        .unwrap();
    let cb = ConfigFile::parse(&small_config(b.path()))
        .unwrap()
        .resolve()
        .unwrap();
    let ma = run_scenario(&ca, &RunOptions { parallel: true }).unwrap();
    run_scenario(&cb, &RunOptions { parallel: false }).unwrap();
    for art in &ma.artifacts {
        let x = std::fs::read(a.path().join(&art.path)).unwrap();
        let y = std::fs::read(b.path().join(&art.path)).unwrap();
        assert!(x == y, "{} differs", art.path);
    }
}

#[test]
fn validation_reports_every_violation() {
    let text = r#"{
      "system": "morse",
      "params": {"mass": -1.0, "spring_constant": 1.0, "hbar": 1.0, "kerr_lambda": 0.0, "morse_depth": 8.0, "morse_range": 0.25},
      "state": {"terms": [{"n": 1, "re": 1.0}]},
      "grid": {"x_min": 1.0, "x_max": -1.0, "nx": 3, "p_min": -1.0, "p_max": 1.0, "np": 33},
      "time": {"start": 0.0, "stop": 1.0, "steps": 0}
    }"#;
    let err = ConfigFile::parse(text).unwrap().resolve().unwrap_err();
    let CliError::Validation(msgs) = &err else {
        panic!("{err:?}")
    };
    for section in ["params", "grid", "time"] {
        assert!(
            msgs.iter().any(|m| m.starts_with(section)),
            "{section}: {msgs:?}"
        );
    }
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn missing_fields_are_listed_together() {
    let err = ConfigFile::parse(r#"{"system": "kerr"}"#)
        .unwrap()
        .resolve()
        .unwrap_err();
    let CliError::Validation(msgs) = err else {
        panic!()
    };
    assert_eq!(msgs.len(), 3, "{msgs:?}");
}

#[test]
fn unknown_fields_and_presets_are_rejected() {
    assert!(ConfigFile::parse(r#"{"preset": "fig1", "colour": "red"}"#).is_err());
    let err = ConfigFile::parse(r#"{"preset": "fig9"}"#)
        .unwrap()
        .resolve()
        .unwrap_err();
    assert!(err.to_string().contains("fig9"));
}

#[test]
fn preset_fields_can_be_overridden() {
    let c = ConfigFile::parse(r#"{"preset": "fig2", "params": {"mass": 1.0, "spring_constant": 1.0, "hbar": 1.0, "kerr_lambda": 0.5, "morse_depth": 8.0, "morse_range": 0.25}}"#)
        .unwrap()
        .resolve()
        .unwrap();
    assert_eq!(c.params.kerr_lambda, 0.5);
    assert_eq!(c.system, wigner_flow::Basis::Kerr);
}

#[test]
fn presets_match_their_descriptions() {
    let f1 = presets::preset("fig1").unwrap();
    assert_eq!(f1.system, wigner_flow::Basis::Harmonic);
    assert_eq!(
        (f1.params.mass, f1.params.spring_constant, f1.params.hbar),
        (1.0, 1.0, 1.0)
    );
    let f2 = presets::preset("fig2").unwrap();
    assert_eq!(f2.system, wigner_flow::Basis::Kerr);
    assert_eq!(f2.params.kerr_lambda, 2.0);
    assert_eq!(f2.state, f1.state);
    let f3 = presets::preset("fig3").unwrap();
    assert_eq!(f3.system, wigner_flow::Basis::Morse);
    assert_eq!(
        (f3.params.morse_depth, f3.params.morse_range, f3.params.mass),
        (8.0, 0.25, 1.0)
    );
    for name in presets::names() {
        assert!(
            presets::preset(name).unwrap().violations().is_empty(),
            "{name}"
        );
    }
}

#[test]
fn hash_ignores_the_output_directory() {
    let a = preset_into("fig1", Path::new("a"));
    let b = preset_into("fig1", Path::new("b"));
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), presets::preset("fig2").unwrap().hash());
}

fn small_fields() -> BTreeMap<&'static str, String> {
    let v: Value = serde_json::from_str(&small_config(Path::new("out"))).unwrap();
    v.as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| {
            let key: &'static str = Box::leak(k.clone().into_boxed_str());
            (key, v.to_string())
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hash_is_stable_under_key_reordering(order in Just((0..8).collect::<Vec<usize>>()).prop_shuffle()) {
        let fields: Vec<(&str, String)> = small_fields().into_iter().collect();
        prop_assert_eq!(fields.len(), 8);
        let body = |idx: &mut dyn Iterator<Item = usize>| {
            let parts: Vec<String> = idx.map(|k| format!("{:?}: {}", fields[k].0, fields[k].1)).collect();
            format!("{{{}}}", parts.join(", "))
        };
        let sorted = ConfigFile::parse(&body(&mut (0..8))).unwrap().resolve().unwrap();
        let shuffled = ConfigFile::parse(&body(&mut order.into_iter())).unwrap().resolve().unwrap();
        prop_assert_eq!(sorted.hash(), shuffled.hash());
    }
}

fn wflow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_wflow"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let list = wflow(&["presets", "list"]);
    assert!(list.status.success());
    let text = String::from_utf8(list.stdout).unwrap();
    assert!(text.contains("fig1") && text.contains("fig2") && text.contains("fig3"));

    let good = dir.path().join("good.json");
    std::fs::write(&good, small_config(&dir.path().join("out"))).unwrap();
    assert_eq!(
        wflow(&["validate", "--config", good.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"preset": "fig1", "grid": {"x_min": 0.0, "x_max": 1.0, "nx": 2, "p_min": 0.0, "p_max": 1.0, "np": 2}}"#).unwrap();
    let out = wflow(&["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("grid"));

    // a series cut off at second order cannot meet the tail tolerance
    let numerical = dir.path().join("numerical.json");
    std::fs::write(
        &numerical,
        format!(
            r#"{{"preset": "fig3", "truncation": {{"max_order": 2, "tail_tolerance": 1e-10}},
                "grid": {{"x_min": -3.0, "x_max": 12.0, "nx": 17, "p_min": -4.0, "p_max": 4.0, "np": 17}},
                "output_dir": {:?}}}"#,
            dir.path().join("num").display().to_string()
        ),
    )
    .unwrap();
    let out = wflow(&["run", "--config", numerical.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("flow failed"));

    let out = wflow(&["run", "--config", good.to_str().unwrap(), "--serial"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("out").join(MANIFEST_FILE).exists());
}
