use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dpnls_cli::suite::shipped_fixtures;
use tempfile::TempDir;

fn dpnls(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpnls"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .env_remove("DPNLS_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

/// Reads a CSV written by the tool into rows of numbers.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

const DOUBLE_POLE: &str = r#"{"z_grid": [], "r": [], "discrete": [{"z": [0.0, 1.0], "order": 2, "c0": [0.0, 0.0], "c1": [1.0, 0.0]}]}"#;

#[test]
fn defaults_parse_back() {
    let dir = TempDir::new().unwrap();
    let o = dpnls(dir.path(), &["defaults"]);
    assert_eq!(o.status.code(), Some(0));
    let cfg = write(dir.path(), "d.toml", &String::from_utf8_lossy(&o.stdout));
    let o = dpnls(dir.path(), &["--config", &cfg, "soliton"]);
    // parses, then stops at the missing data source
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("no data source"), "{}", text(&o));
}

#[test]
fn scatter_zero_profile_has_no_spectrum() {
    let dir = TempDir::new().unwrap();
    let args = [
        "scatter",
        "--set", "source.builtin.kind=\"zero\"",
        "--set", "source.builtin.x_min=-5.0",
        "--set", "source.builtin.x_max=5.0",
        "--set", "source.builtin.points=101",
        "--set", "scatter.r_points=21",
    ];
    let o = dpnls(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("scattering.json")).unwrap()).unwrap();
    assert_eq!(doc["discrete"].as_array().unwrap().len(), 0);
    assert!(rows(&dir.path().join("reflection.csv")).iter().all(|r| r[3] == 0.0));
}

#[test]
fn scatter_two_sech_reports_two_simple_zeros() {
    let dir = TempDir::new().unwrap();
    let profile = shipped_fixtures().join("two_sech.csv");
    let o = dpnls(dir.path(), &["scatter", "--profile", profile.to_str().unwrap(), "--set", "scatter.r_points=41"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("scattering.json")).unwrap()).unwrap();
    let zs: Vec<(f64, u64)> = doc["discrete"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| (d["z"][1].as_f64().unwrap(), d["order"].as_u64().unwrap()))
        .collect();
    assert_eq!(zs.len(), 2);
    assert!((zs[0].0 - 0.5).abs() < 1e-8 && (zs[1].0 - 1.5).abs() < 1e-8);
    assert!(zs.iter().all(|z| z.1 == 1));
}

#[test]
fn spectral_singularity_exits_with_input_error() {
    // a threshold above |s11| on the whole line flags the first real sample
    let dir = TempDir::new().unwrap();
    let profile = shipped_fixtures().join("gaussian.csv");
    let o = dpnls(
        dir.path(),
        &["scatter", "--profile", profile.to_str().unwrap(), "--set", "scatter.singular_threshold=10.0", "--set", "scatter.search_box=[-1.0, 1.0, 0.5, 1.0]"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("spectral singularity at z ="), "{}", text(&o));
}

#[test]
fn soliton_sweep_is_deterministic_and_zero_without_data() {
    let dir = TempDir::new().unwrap();
    let empty = write(dir.path(), "empty.json", r#"{"z_grid": [], "r": [], "discrete": []}"#);
    let o = dpnls(dir.path(), &["soliton", "--scattering", &empty, "--set", "grid.x_points=11", "--set", "grid.t_points=3"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let r = rows(&dir.path().join("soliton.csv"));
    assert_eq!(r.len(), 33);
    assert!(r.iter().all(|row| row[4] == 0.0));

    let data = write(dir.path(), "dp.json", DOUBLE_POLE);
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = dpnls(&out, &["soliton", "--scattering", &data, "--set", "grid.x_points=101"]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
        fs::read(out.join("soliton.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    // 17 significant digits
    let first = String::from_utf8_lossy(&a).lines().nth(1).unwrap().to_string();
    assert_eq!(first.split(',').next().unwrap(), "-2.0000000000000000e1");
}

#[test]
fn malformed_data_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"z_grid": [], "r": [], "discrete": [{"z": [0.0, -1.0], "order": 2, "c0": [0.0, 0.0], "c1": [1.0, 0.0]}]}"#);
    let o = dpnls(dir.path(), &["soliton", "--scattering", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("Im z must be positive"));
    let o = dpnls(dir.path(), &["soliton", "--scattering", &bad, "--profile", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("more than one data source"));
    let o = dpnls(dir.path(), &["soliton", "--scattering", &bad, "--set", "cone.x1=1.0", "--set", "cone.x2=0.0", "--set", "cone.v1=0.0", "--set", "cone.v2=0.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("cone must satisfy"));
}

#[test]
fn asymptote_without_radiation_and_below_the_guard() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "dp.json", DOUBLE_POLE);
    let cone = ["--set", "cone.x1=-1.0", "--set", "cone.x2=1.0", "--set", "cone.v1=-0.5", "--set", "cone.v2=0.5"];
    let mut args = vec!["asymptote", "--scattering", &data];
    args.extend(cone);
    let o = dpnls(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let r = rows(&dir.path().join("asymptote.csv"));
    assert_eq!(r.len(), 4 * 41);
    // r = 0: no dispersive term, and q_total is the soliton part
    assert!(r.iter().all(|row| row[4] == 0.0 && row[5] == 0.0 && row[6] == row[2]));

    args.extend(["--set", "asymptote.t_min=1.0"]);
    let o = dpnls(dir.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("below the asymptotic guard"), "{}", text(&o));
}

#[test]
fn evolve_then_compare_against_the_closure() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "dp.json", DOUBLE_POLE);
    let common = [
        "--scattering", &data,
        "--set", "evolve.x_min=-20.0",
        "--set", "evolve.x_max=20.0",
        "--set", "evolve.modes=1024",
        "--set", "evolve.t_end=0.5",
        "--set", "evolve.t_slices=3",
        "--set", "evolve.dt=2.5e-4",
    ];
    let mut args = vec!["evolve"];
    args.extend(common);
    let o = dpnls(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let inv = rows(&dir.path().join("conserved.csv"));
    assert!((inv[0][1] - 8.0).abs() < 1e-8 && (inv[2][1] - inv[0][1]).abs() < 1e-10);

    let field = dir.path().join("field");
    let mut args = vec!["compare", "--set"];
    let set = format!("compare.field=\"{}\"", field.display());
    args.push(&set);
    args.extend(common);
    let o = dpnls(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let cmp = rows(&dir.path().join("compare.csv"));
    assert_eq!(cmp.len(), 3);
    assert_eq!(cmp[0][1], 0.0);
    // Strang error at dt = 2.5e-4 is about 1e-5
    assert!(cmp[2][1] < 1e-4, "{cmp:?}");
}

#[test]
fn output_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "dp.json", DOUBLE_POLE);
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_dpnls"))
        .args(["soliton", "--scattering", &data, "--set", "grid.x_points=5", "--set", "grid.t_points=1"])
        .env("DPNLS_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(target.join("soliton.csv").is_file());
}

#[test]
fn verify_fixture_errors() {
    let dir = TempDir::new().unwrap();
    let fx = dir.path().join("fixtures");
    fs::create_dir(&fx).unwrap();
    for f in fs::read_dir(shipped_fixtures()).unwrap() {
        let f = f.unwrap();
        fs::copy(f.path(), fx.join(f.file_name())).unwrap();
    }
    let fx_s = fx.to_str().unwrap();

    let o = dpnls(dir.path(), &["verify", "--fixtures", fx_s, "--only", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["criteria"][0]["id"], "7");
    assert_eq!(report["criteria"][0]["pass"], true);

    fs::write(fx.join("double_pole.json"), "{ not json").unwrap();
    let o = dpnls(dir.path(), &["verify", "--fixtures", fx_s, "--only", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("[FAIL] 1") && text(&o).contains("fixture double_pole.json"), "{}", text(&o));

    fs::remove_file(fx.join("cone_pair.json")).unwrap();
    let o = dpnls(dir.path(), &["verify", "--fixtures", fx_s, "--only", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("missing fixture"));

    let o = dpnls(dir.path(), &["verify", "--only", "9"]);
    assert_eq!(o.status.code(), Some(2));
}
