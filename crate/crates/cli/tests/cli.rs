use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn canal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_canal"))
        .args(args)
        .env_remove("CANAL_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn scenes() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

fn write_scene(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scene.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn shipped_scenes_validate() {
    for entry in std::fs::read_dir(scenes()).unwrap() {
        let p = entry.unwrap().path();
        let o = canal(&["validate", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
    }
}

#[test]
fn empty_scene_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let scene = scenes().join("empty.json");
    let o = canal(&["run", scene.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["entries"].as_array().unwrap().len(), 0);
    assert_eq!(report["errors"], 0);
    assert_eq!(report["provenance"]["tool"], "canal");
    assert!(report["provenance"]["tolerances"]["canal"].is_number());
}

#[test]
fn nonpositive_radius_is_reported_with_its_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scene(
        dir.path(),
        r#"{"version": 1, "families": [{"name": "flat", "family": {"kind": "circle-tube", "major": 2, "rho": 0}}]}"#,
    );
    let o = canal(&["validate", "--json", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let diags: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(diags[0]["location"], "families[0] (flat).family.rho");
    let o = canal(&["run", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn unknown_surface_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scene(
        dir.path(),
        r#"{"version": 1, "surfaces": [{"name": "s", "surface": {"kind": "moebius"}}]}"#,
    );
    let o = canal(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("moebius"), "{}", stderr(&o));
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scene(dir.path(), "{\n  \"version\": 1,\n  \"families\": [,]\n}\n");
    let o = canal(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3 column"), "{}", stderr(&o));
}

#[test]
fn torus_scene_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scene = scenes().join("torus.json");
    let o = Command::new(env!("CARGO_BIN_EXE_canal"))
        .args(["run", scene.to_str().unwrap(), "--mesh-along", "24", "--mesh-angular", "12", "--jobs", "2"])
        .env("CANAL_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let obj = std::fs::read_to_string(dir.path().join("torus-tube_envelope.obj")).unwrap();
    let verts: Vec<Vec<f64>> = obj
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| l.split(' ').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(verts.len(), 24 * 12);
    for v in &verts {
        let ring = (v[0].hypot(v[1]) - 2.0).hypot(v[2]);
        assert!((ring - 0.5).abs() < 1e-12, "{v:?}");
    }
    assert_eq!(obj.lines().filter(|l| l.starts_with("vn ")).count(), verts.len());
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 2 * 24 * 12);

    let csv = std::fs::read_to_string(dir.path().join("torus-tube_singular.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,D,sigma_count,s1_x,s1_y,s1_z,s2_x,s2_y,s2_z"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 64);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert!(cells[1].parse::<f64>().unwrap() < 0.0);
        assert_eq!(cells[2], "0");
    }

    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let torus = &report["entries"][0]["results"];
    assert_eq!(torus[0]["result"]["is_canal"], true);
    assert_eq!(torus[1]["result"]["dupin"], true);
    assert_eq!(report["provenance"]["grid"]["mesh"]["along"], 24);
}

#[test]
fn analysis_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scene(
        dir.path(),
        r#"{"version": 1, "planes": [{"name": "line", "span": [[0, 1, 0, 0, 0], [0, 2, 0, 0, 0], [0, 0, 1, 0, 0]]}],
            "pencils": [{"name": "ok", "first": {"center": [0, 0], "radius": 1}, "second": {"vector": [1, 1, 0, 0]}}]}"#,
    );
    let out = dir.path().join("out");
    let o = canal(&["run", p.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["errors"], 1);
    assert!(report["entries"][1]["results"][0]["error"].is_string());
    assert_eq!(report["entries"][0]["results"][0]["result"]["kind"], "elliptic");
}

#[test]
fn tolerance_overrides_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let scene = scenes().join("empty.json");
    let s = scene.to_str().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(canal(&["run", s, "-o", d, "--tol", "nonsense=1"]).status.code(), Some(2));
    assert_eq!(canal(&["run", s, "-o", d, "--tol", "canal=-1"]).status.code(), Some(2));
    assert_eq!(canal(&["run", s, "-o", d, "--surface-samples", "1"]).status.code(), Some(2));
    let o = canal(&["run", s, "-o", d, "--tol", "canal=1e-5", "--print"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["provenance"]["tolerances"]["canal"], 1e-5);
}

#[test]
fn catalog_lists_everything() {
    let o = canal(&["catalog", "--json"]);
    assert!(o.status.success());
    let cat: Value = serde_json::from_slice(&o.stdout).unwrap();
    let names = |k: &str| -> Vec<String> {
        cat[k].as_array().unwrap().iter().map(|p| p[0].as_str().unwrap().to_string()).collect()
    };
    assert!(names("surfaces").contains(&"torus".to_string()));
    assert!(names("families").contains(&"circle-tube".to_string()));
    assert!(names("analyses").contains(&"singularities".to_string()));
    assert!(names("tolerances").contains(&"discriminant".to_string()));
}
