use std::fs;
use std::path::Path;
use std::sync::Arc;

use sweepout_cli::report::{export_colored_mesh, export_report, read_report, region_ids, rounded};
use sweepout_cli::{exit, run_command};
use sweepout_core::constants::ConstantBundle;
use sweepout_core::pipeline::{assemble_upper_bound, SCHEMA_VERSION};
use sweepout_core::surface::{icosphere, io, torus, Domain};

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["sweepout".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    run_command(argv)
}

fn path(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["constants", "--n", "2"]), exit::OK);
    assert_eq!(run(&["tree-verify", "--lambda", "0.25", "--n", "2", "--xmax", "4", "--resolution", "0.01"]), exit::OK);
    assert_eq!(run(&["decompose", "--mesh", "/nonexistent/mesh.off", "-k", "4", "--out", "/tmp"]), exit::INPUT);
    assert_eq!(run(&["no-such-command"]), exit::INPUT);
    assert_eq!(run(&["thin", "--generate", "torus:20", "-r", "-1", "--alpha", "1"]), exit::INPUT);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["decompose", "--generate", "torus:30", "-k", "5000", "--out", path(dir.path())]), exit::RESOLUTION);
}

#[test]
fn paper_mode_resolution_error_keeps_constants() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["decompose", "--generate", "torus:30", "-k", "4", "--mode", "paper", "--out", path(dir.path())]);
    assert_eq!(code, exit::RESOLUTION);
    assert!(dir.path().join("constants.json").exists());
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn decompose_writes_report_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["decompose", "--generate", "torus:60", "-k", "9", "--out", path(dir.path())]), exit::OK);
    let report = read_report(&dir.path().join("report.json")).unwrap();
    assert_eq!(report.schema_version, SCHEMA_VERSION);
    assert!(!report.certificates.is_empty());
    assert!(report.pass);
    let ply = fs::read_to_string(dir.path().join("pieces.ply")).unwrap();
    assert!(ply.contains("property int region"));
}

#[test]
fn loaded_mesh_matches_generated() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("t.off");
    io::write_off(&mesh, &icosphere(3).unwrap()).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["thick", "--mesh", mesh.to_str().unwrap(), "-k", "50", "--out", path(&a)]), exit::OK);
    assert_eq!(run(&["thick", "--generate", "sphere:3", "-k", "50", "--out", path(&b)]), exit::OK);
    assert_eq!(fs::read(a.join("thick.json")).unwrap(), fs::read(b.join("thick.json")).unwrap());
}

#[test]
fn report_round_trip() {
    let s = Arc::new(torus(60).unwrap());
    let bundle = ConstantBundle::empirical(s.clone(), 1.0, 1.0).unwrap();
    let out = assemble_upper_bound(&s, 9, &bundle).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("report.json");
    export_report(&out.report, &file).unwrap();
    assert_eq!(read_report(&file).unwrap(), rounded(&out.report).unwrap());
}

#[test]
fn colored_mesh_regions() {
    let s = torus(20).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("one.ply");
    export_colored_mesh(&s, &[Domain::whole(&s)], &file).unwrap();
    let text = fs::read_to_string(&file).unwrap();
    let body: Vec<&str> = text.split("end_header\n").nth(1).unwrap().lines().collect();
    let faces = &body[s.vertex_count()..];
    assert_eq!(faces.len(), s.face_count());
    assert!(faces.iter().all(|l| l.ends_with(" 0")));

    let half = s.face_count() as u32 / 2;
    let a = Domain::new((0..half).collect());
    let b = Domain::new((half..s.face_count() as u32).collect());
    let ids = region_ids(&s, &[a.clone(), b]).unwrap();
    assert_eq!(ids.iter().filter(|&&i| i == 0).count(), half as usize);
    assert!(region_ids(&s, &[a.clone()]).is_err());
    assert!(region_ids(&s, &[Domain::whole(&s), a]).is_err());
}
