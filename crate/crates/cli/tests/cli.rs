use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dconf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dconf"))
        .args(args)
        .env_remove("DCONF_TOLERANCE")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

const FLIPPED_QUAD: &str = r#"{
  "vertices": [[0, -1.0, 0.0], [1, 1.0, 0.0], [2, 0.0, 0.3], [3, 0.0, -0.3]],
  "faces": [[0, 1, 2], [1, 0, 3]]
}"#;

#[test]
fn hex_disk_has_37_vertices() {
    let out = dconf(&["gen", "hex", "--rings", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["vertices"].as_array().unwrap().len(), 37);
    assert_eq!(doc["faces"].as_array().unwrap().len(), 54);
}

#[test]
fn hex_disk_is_delaunay() {
    let dir = TempDir::new().unwrap();
    let mesh = path(&dir, "hex.json");
    assert!(dconf(&["gen", "hex", "--rings", "3", "--out", &mesh])
        .status
        .success());
    let out = dconf(&["check", "--mesh", &mesh, "--what", "delaunay"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "margin 1.047198\n");
    for what in ["nondegenerate", "acute", "embedding"] {
        let out = dconf(&["check", "--mesh", &mesh, "--what", what, "--exhaustive"]);
        assert_eq!(out.status.code(), Some(0), "{what}");
    }
}

#[test]
fn flipped_edge_is_reported() {
    let dir = TempDir::new().unwrap();
    let mesh = path(&dir, "quad.json");
    fs::write(&mesh, FLIPPED_QUAD).unwrap();
    let out = dconf(&["check", "--mesh", &mesh, "--what", "delaunay"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.starts_with("margin -"), "{text}");
    assert!(text.contains("violated at edge"), "{text}");
    assert_eq!(
        dconf(&["check", "--mesh", &mesh, "--what", "acute"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        dconf(&["check", "--mesh", &mesh, "--what", "embedding"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn tolerance_from_environment() {
    let dir = TempDir::new().unwrap();
    let mesh = path(&dir, "quad.json");
    fs::write(&mesh, FLIPPED_QUAD).unwrap();
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_dconf"))
            .args(["check", "--mesh", &mesh, "--what", "delaunay"])
            .env("DCONF_TOLERANCE", value)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("10"), Some(0));
    assert_eq!(run("1e-12"), Some(1));
    assert_eq!(run("abc"), Some(2));
    assert_eq!(run("-1"), Some(2));
    let out = dconf(&[
        "check",
        "--mesh",
        &mesh,
        "--what",
        "delaunay",
        "--tolerance",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn lemma21_writes_report() {
    let dir = TempDir::new().unwrap();
    let report = path(&dir, "report.json");
    let csv = path(&dir, "trials.csv");
    let out = dconf(&[
        "experiment",
        "lemma21",
        "--seed",
        "7",
        "--trials",
        "1000",
        "--report",
        &report,
        "--csv",
        &csv,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["summary"]["passed"], 1000);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1001);
}

#[test]
fn outputs_are_reproducible() {
    let run = || {
        stdout(&dconf(&[
            "experiment",
            "gradient",
            "--seed",
            "11",
            "--trials",
            "50",
        ]))
    };
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
    let mesh = || stdout(&dconf(&["gen", "random", "--n", "30", "--seed", "5"]));
    assert_eq!(mesh(), mesh());
    assert_ne!(
        mesh(),
        stdout(&dconf(&["gen", "random", "--n", "30", "--seed", "6"]))
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(dconf(&["--bogus"]).status.code(), Some(2));
    assert_eq!(dconf(&["experiment", "nope"]).status.code(), Some(2));
    assert_eq!(
        dconf(&["experiment", "lemma21", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        dconf(&["gen", "hex", "--rings", "0"]).status.code(),
        Some(2)
    );
    let missing = dconf(&[
        "check",
        "--mesh",
        "/nonexistent/mesh.json",
        "--what",
        "delaunay",
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn malformed_mesh_exits_2() {
    let dir = TempDir::new().unwrap();
    let mesh = path(&dir, "bad.json");
    fs::write(
        &mesh,
        r#"{"vertices": [[0, 0.0, 0.0]], "faces": [[0, 1, 2]]}"#,
    )
    .unwrap();
    let out = dconf(&["curvature", "--mesh", &mesh]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn solve_round_trip() {
    let dir = TempDir::new().unwrap();
    let mesh = path(&dir, "random.json");
    let solved = path(&dir, "solved.json");
    let report = path(&dir, "solve.json");
    let generated = stdout(&dconf(&["gen", "random", "--n", "40", "--seed", "3"]));
    let mut doc: serde_json::Value = serde_json::from_str(&generated).unwrap();
    let n = doc["vertices"].as_array().unwrap().len();
    let factors: Vec<(usize, f64)> = (0..n).map(|v| (v, 0.2 * (v as f64).sin())).collect();
    doc["factors"] = serde_json::to_value(&factors).unwrap();
    fs::write(&mesh, doc.to_string()).unwrap();
    let out = dconf(&[
        "solve", "--mesh", &mesh, "--out", &solved, "--report", &report,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["converged"], true);
    let iterations = doc["iterations"].as_u64().unwrap();
    assert!((1..=12).contains(&iterations), "{iterations}");
    let solved_doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&solved).unwrap()).unwrap();
    assert_eq!(solved_doc["factors"].as_array().unwrap().len(), n);
    assert!(Path::new(&solved).exists());

    let curvature = stdout(&dconf(&["curvature", "--mesh", &solved]));
    let mut lines = curvature.lines();
    assert_eq!(lines.next(), Some("vertex,boundary,curvature"));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let k: f64 = fields[2].parse().unwrap();
        if fields[1] == "false" {
            assert!(k.abs() < 1e-9, "{line}");
        }
    }
}
