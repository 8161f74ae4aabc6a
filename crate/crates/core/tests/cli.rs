use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mrbc_core::config::{parse_config, Experiment, Overrides};
use mrbc_core::postproc::read_csv;

fn mrbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrbc"))
        .args(args)
        .output()
        .expect("spawn mrbc")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn shipped_configs_parse() {
    let mut names: Vec<PathBuf> = std::fs::read_dir(configs())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 6, "{names:?}");
    for p in &names {
        let cfg = parse_config(Some(p), &Overrides::default())
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let stem = p.file_stem().unwrap().to_str().unwrap();
        let expected = match stem {
            "cavity" => Experiment::Cavity,
            "stir" => Experiment::Stir,
            _ => Experiment::Convergence,
        };
        assert_eq!(cfg.experiment, expected, "{stem}");
    }
    let t3 = parse_config(Some(&configs().join("table3.toml")), &Overrides::default()).unwrap();
    assert_eq!(t3.params.mu, 0.01);
    assert_eq!(t3.resolutions, vec![8, 16, 24, 32, 40, 48, 56]);
}

#[test]
fn convergence_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = mrbc(&[
        "convergence",
        "--resolutions",
        "4,8",
        "--T",
        "0.05",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("rate 8"));
    let (header, rows) = read_csv(&dir.path().join("convergence.csv")).unwrap();
    assert_eq!(header.len(), 15);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], Some(4.0));
    assert!(rows[1][1].unwrap() < rows[0][1].unwrap());
}

#[test]
fn cavity_writes_energy_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = mrbc(&[
        "cavity",
        "--resolutions",
        "8",
        "--dt",
        "0.01",
        "--T",
        "0.05",
        "--snapshot-times",
        "0.02",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("5 steps"), "{}", stdout(&o));
    let (_, rows) = read_csv(&dir.path().join("energy.csv")).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(dir.path().join("cavity_final.vtk").exists());
    assert!(dir.path().join("cavity_000002.vtk").exists());
}

#[test]
fn stir_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = mrbc(&[
        "stir",
        "--resolutions",
        "4",
        "--T",
        "0.03",
        "--snapshot-times",
        "0,0.03",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("3 steps") && s.contains("2 snapshots"), "{s}");
    let vtk = std::fs::read_to_string(dir.path().join("stir_000000.vtk")).unwrap();
    assert!(vtk.contains("SCALARS phi double 1"));
}

#[test]
fn bad_input_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "experiment = \"cavity\"\nviscosity = 1.0\n").unwrap();
    let o = mrbc(&["cavity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("viscosity"));

    let o = mrbc(&[
        "cavity",
        "--dt",
        "-1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = mrbc(&[
        "stir",
        "--config",
        dir.path().join("missing.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_mismatch_is_rejected() {
    let o = mrbc(&[
        "stir",
        "--config",
        configs().join("cavity.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
