use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn mbcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbcs"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ];
    args.extend_from_slice(extra);
    mbcs(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn pair(mode: &str) -> String {
    format!(
        r#"{{
  "interferometer": {{"type": "beam_splitter"}},
  "sources": [
    {{"port": 1, "bandwidth": 1.0, "central_frequency": 50.0}},
    {{"port": 2, "bandwidth": 1.0, "central_frequency": 50.0}}
  ],
  "mode": {mode}
}}"#
    )
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn validate_accepts_the_shipped_configs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in [
        "hom_dip.json",
        "haar_distribution.json",
        "mbcs_sampling.json",
    ] {
        let o = mbcs(&["validate", dir.join(name).to_str().unwrap()]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn validate_reports_too_many_photons() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{
  "interferometer": {"type": "beam_splitter"},
  "sources": [
    {"port": 1, "bandwidth": 1.0, "central_frequency": 50.0},
    {"port": 2, "bandwidth": 1.0, "central_frequency": 50.0},
    {"port": 3, "bandwidth": 1.0, "central_frequency": 50.0}
  ],
  "mode": {"type": "distribution"}
}"#,
    );
    let o = mbcs(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("sources[2].port"), "{err}");
    assert!(
        err.contains("3 photons need 3 distinct input ports but the interferometer has 2"),
        "{err}"
    );
}

#[test]
fn validate_names_the_uncovered_source() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{
  "interferometer": {"type": "beam_splitter"},
  "sources": [
    {"port": 1, "bandwidth": 1.0, "central_frequency": 50.0},
    {"port": 2, "bandwidth": 1.0, "central_frequency": 50.0, "emission_time": 30.0}
  ],
  "mode": {"type": "sample_mbcs", "count": 10, "grid": {"t_min": -5.0, "t_max": 5.0, "num_points": 64}}
}"#,
    );
    let o = mbcs(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("sources[1]"), "{err}");
    assert!(!err.contains("sources[0]"), "{err}");
}

#[test]
fn validate_reports_field_paths() {
    let dir = TempDir::new().unwrap();
    let bad_type = write_config(
        &dir,
        "a.json",
        &pair(r#"{"type": "averaged", "ports": [1, "two"]}"#),
    );
    let o = mbcs(&["validate", bad_type.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mode.ports[1]"), "{}", stderr(&o));

    let negative = pair(r#"{"type": "distribution"}"#).replacen(
        r#""bandwidth": 1.0"#,
        r#""bandwidth": -1.0"#,
        1,
    );
    let cfg = write_config(&dir, "b.json", &negative);
    let o = mbcs(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("sources[0].bandwidth"),
        "{}",
        stderr(&o)
    );

    let unknown =
        pair(r#"{"type": "distribution"}"#).replace(r#""port": 2,"#, r#""port": 2, "colour": 3,"#);
    let cfg = write_config(&dir, "c.json", &unknown);
    let o = mbcs(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sources[1]"), "{}", stderr(&o));

    let cfg = write_config(
        &dir,
        "d.json",
        &pair(r#"{"type": "sample_mbcs", "count": 5, "grid": {"points": 8}}"#),
    );
    let o = mbcs(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mode.grid"), "{}", stderr(&o));
}

#[test]
fn hom_dip_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        &pair(r#"{"type": "figure", "figure": "hom_dip"}"#),
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 101);
    assert!((rows[0][1] - 0.5).abs() <= 1e-9);
    assert!((rows[100][1] - 0.5).abs() <= 1e-9);
    assert!(rows[50][0].abs() < 1e-12 && rows[50][1].abs() <= 1e-12);
    assert!(rows.iter().all(|r| (0.0..=0.5 + 1e-9).contains(&r[1])));
}

#[test]
fn overlap_a_ignores_color() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        &pair(r#"{"type": "figure", "figure": "overlap_a", "time_points": 11, "color_points": 9}"#),
    );
    let out = dir.path().join("out");
    assert!(run(&cfg, &out, &[]).status.success());
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 99);
    for chunk in rows.chunks(9) {
        let dt = chunk[0][0];
        let expected = (-dt * dt / 2.0).exp();
        assert!(chunk
            .iter()
            .all(|r| r[0] == dt && (r[2] - expected).abs() <= 1e-12));
    }
}

#[test]
fn overlap_g_decays_with_color() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        &pair(r#"{"type": "figure", "figure": "overlap_g", "time_points": 5, "color_points": 11}"#),
    );
    let out = dir.path().join("out");
    assert!(run(&cfg, &out, &[]).status.success());
    let rows = csv_rows(&out.join("sweep.csv"));
    for chunk in rows.chunks(11) {
        assert!(chunk.windows(2).all(|w| w[1][2] < w[0][2]));
        for r in chunk {
            let expected = (-r[0] * r[0] / 2.0 - r[1] * r[1] / 8.0).exp();
            assert!((r[2] - expected).abs() <= 1e-12);
        }
    }
}

fn manifest_without_timestamp(dir: &Path) -> serde_json::Value {
    let mut m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert!(m["timestamp"].as_str().is_some_and(|t| t.ends_with('Z')));
    m.as_object_mut().unwrap().remove("timestamp");
    m
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{
  "interferometer": {"type": "beam_splitter"},
  "sources": [
    {"port": 1, "bandwidth": 1.0, "central_frequency": 50.0},
    {"port": 2, "bandwidth": 1.0, "central_frequency": 53.0}
  ],
  "seed": 5,
  "mode": {"type": "sample_mbcs", "count": 2000, "grid": {"num_points": 64}}
}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a, &[]).status.success());
    assert!(run(&cfg, &b, &[]).status.success());
    assert_eq!(
        fs::read(a.join("samples.csv")).unwrap(),
        fs::read(b.join("samples.csv")).unwrap()
    );
    let manifest = manifest_without_timestamp(&a);
    assert_eq!(manifest, manifest_without_timestamp(&b));
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["mode"], "sample_mbcs");

    let c = dir.path().join("c");
    assert!(run(&cfg, &c, &["--seed", "6"]).status.success());
    assert_eq!(manifest_without_timestamp(&c)["seed"], 6);
    assert_ne!(
        fs::read(a.join("samples.csv")).unwrap(),
        fs::read(c.join("samples.csv")).unwrap()
    );
}

#[test]
fn failed_runs_leave_no_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        &pair(r#"{"type": "averaged", "ports": [1, 3]}"#),
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());

    let blocked = dir.path().join("file");
    fs::write(&blocked, "").unwrap();
    let cfg = write_config(
        &dir,
        "d.json",
        &pair(r#"{"type": "averaged", "ports": [1, 2]}"#),
    );
    let o = run(&cfg, &blocked.join("out"), &[]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn emitted_probabilities_are_probabilities() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{
  "interferometer": {"type": "haar", "m": 5, "seed": 3},
  "sources": [
    {"port": 2, "bandwidth": 1.0, "central_frequency": 50.0},
    {"port": 3, "bandwidth": 1.1, "central_frequency": 50.4, "emission_time": 0.5},
    {"port": 5, "bandwidth": 0.8, "central_frequency": 49.8, "polarization": {"re": [0.6, 0.0], "im": [0.0, 0.8]}}
  ],
  "mode": {"type": "distribution"}
}"#,
    );
    let out = dir.path().join("out");
    assert!(run(&cfg, &out, &[]).status.success());
    let dist: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    let entries = dist["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 35);
    let probs: Vec<f64> = entries.iter().map(|e| e["p"].as_f64().unwrap()).collect();
    assert!(probs.iter().all(|p| (0.0..=1.0 + 1e-9).contains(p)));
    assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);

    let cfg = write_config(
        &dir,
        "d.json",
        &pair(r#"{"type": "averaged", "ports": [2, 1]}"#),
    );
    assert!(run(&cfg, &out, &[]).status.success());
    let avg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!(avg["p_av"].as_f64().unwrap().abs() <= 1e-12);
    assert!((avg["p_distinguishable"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
}

#[test]
fn resolved_rate_accepts_any_detection_order() {
    let dir = TempDir::new().unwrap();
    let rate = |detection: &str, name: &str| {
        let cfg = write_config(
            &dir,
            name,
            &pair(&format!(
                r#"{{"type": "resolved_rate", "detection": {detection}}}"#
            )),
        );
        let out = dir.path().join(name.replace(".json", ""));
        assert!(run(&cfg, &out, &[]).status.success());
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
        v["rate"].as_f64().unwrap()
    };
    let a = rate(r#"{"ports": [1, 2], "times": [0.1, -0.3]}"#, "a.json");
    let b = rate(r#"{"ports": [2, 1], "times": [-0.3, 0.1]}"#, "b.json");
    assert!(a >= 0.0);
    assert_eq!(a, b);
}
