use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn csf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csf")).args(args).env("CSF_OUTPUT_DIR", dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate(dir: &Path, config: &str) -> Value {
    let path = write(dir, "run.toml", config);
    let out = csf(dir, &["simulate", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const CIRCLE: &str = "[flow]\ngrid_size = 64\ndt = 0.001\nt_end = 0.25\nemit_every = 1\n\
                      [initial]\nfamily = \"latitude-circle\"\nphi0 = 0.3\n";

#[test]
fn equator_summary_has_zero_residuals() {
    let tmp = TempDir::new().unwrap();
    let s = simulate(tmp.path(), "[flow]\ngrid_size = 32\nt_end = 0.2\n[initial]\nfamily = \"equator\"\n");
    assert_eq!(s["stop_reason"], "time-end");
    for key in ["gauss_bonnet", "area_law", "k_evolution", "length"] {
        assert_eq!(s["residuals"][key].as_f64(), Some(0.0), "{key}");
    }
    assert_eq!(s["version"], 1);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    assert!(tmp.path().join("trajectory.jsonl").exists());
    let csv = std::fs::read_to_string(tmp.path().join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("version,config_hash,seed,t,area,"));
    assert_eq!(csv.lines().count(), 1 + s["states"].as_u64().unwrap() as usize);
}

#[test]
fn low_circle_matches_the_oracle() {
    let tmp = TempDir::new().unwrap();
    let s = simulate(
        tmp.path(),
        "[flow]\ngrid_size = 64\ndt = 0.001\nt_end = 1.0\n[initial]\nfamily = \"latitude-circle\"\nphi0 = 0.1\n",
    );
    let dev = s["residuals"]["oracle_max_deviation"].as_f64().unwrap();
    assert!(dev < 1e-6, "{dev}");
}

#[test]
fn invalid_config_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let path = write(tmp.path(), "bad.toml", "[flow]\ncfl = 0.0\n[initial]\nfamily = \"equator\"\n");
    let out = csf(tmp.path(), &["simulate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("flow.cfl"), "{}", stderr(&out));
}

#[test]
fn circle_trajectory_passes_every_check() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), CIRCLE);
    let traj = tmp.path().join("trajectory.jsonl");
    let out = csf(tmp.path(), &["verify", traj.to_str().unwrap(), "--checks", "all", "--json"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(out.status.success(), "{report:#}");
    let outcomes = report["outcomes"].as_array().unwrap();
    assert_eq!(outcomes.len(), 6);
    assert!(outcomes.iter().all(|o| o["passed"] == true));
}

#[test]
fn injected_fault_is_localized() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), CIRCLE);
    let traj = tmp.path().join("trajectory.jsonl");
    let mut lines: Vec<Value> =
        std::fs::read_to_string(&traj).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let f = &mut lines[7]["f"][5];
    *f = Value::from(f.as_f64().unwrap() + 1e-3);
    let text: String = lines.iter().map(|v| format!("{v}\n")).collect();
    let faulty = write(tmp.path(), "faulty.jsonl", &text);

    let out = csf(tmp.path(), &["verify", faulty.to_str().unwrap(), "-c", "gauss-bonnet", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let o = &report["outcomes"][0];
    assert_eq!(o["passed"], false);
    assert_eq!(o["state"], 7);
    assert!(o["worst"].as_f64().unwrap() > 1e-8);
}

#[test]
fn empty_check_list_is_an_error() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), CIRCLE);
    let traj = tmp.path().join("trajectory.jsonl");
    for args in [vec!["--checks", ""], vec!["--checks"]] {
        let mut full = vec!["verify", traj.to_str().unwrap()];
        full.extend(args);
        let out = csf(tmp.path(), &full);
        assert_eq!(out.status.code(), Some(2));
        assert!(stderr(&out).contains("no checks selected"), "{}", stderr(&out));
    }
    let out = csf(tmp.path(), &["verify", traj.to_str().unwrap(), "--checks", "curl"]);
    assert!(stderr(&out).contains("unknown check"));
}

#[test]
fn version_mismatch_is_reported() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), CIRCLE);
    let text = std::fs::read_to_string(tmp.path().join("trajectory.jsonl")).unwrap();
    let old = write(tmp.path(), "old.jsonl", &text.replace("\"version\":1", "\"version\":0"));
    let out = csf(tmp.path(), &["verify", old.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("version 0"));
}

#[test]
fn reflect_reports_circles_and_rejects_wide_tilts() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), CIRCLE);
    let traj = tmp.path().join("trajectory.jsonl");
    let traj = traj.to_str().unwrap();

    let out = csf(tmp.path(), &["reflect", traj, "--delta", "0.1,0.3,0.6", "--directions", "8", "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["below"], 0);
    assert_eq!(report["cells"].as_array().unwrap().len(), 3 * 251);
    assert!(report["final_symmetry"]["PoleCircle"].is_object());

    let out = csf(tmp.path(), &["reflect", traj, "--delta", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("outside"), "{}", stderr(&out));
    let out = csf(tmp.path(), &["reflect", traj, "--delta", "1.0", "--directions", "4", "--exploratory"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn perturbed_trajectory_is_not_symmetric() {
    let tmp = TempDir::new().unwrap();
    simulate(
        tmp.path(),
        "[flow]\ngrid_size = 64\ndt = 0.001\nt_end = 0.1\nemit_every = 50\n\
         [initial]\nfamily = \"fourier\"\ncos = [0.3, 0.0, 0.05]\n",
    );
    let traj = tmp.path().join("trajectory.jsonl");
    let out = csf(tmp.path(), &["reflect", traj.to_str().unwrap(), "--delta", "0.2", "--directions", "4", "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let margin = report["final_symmetry"]["NotSymmetric"]["margin"].as_f64().unwrap();
    assert!(margin > 1e-3, "{margin}");
}

#[test]
fn sweeps() {
    let tmp = TempDir::new().unwrap();
    let empty = write(tmp.path(), "empty.toml", "");
    let out = csf(tmp.path(), &["sweep", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sweep spec is empty"));

    let spec = write(
        tmp.path(),
        "sweep.toml",
        "grid_sizes = [32, 64]\ndts = [0.004, 0.002]\n[flow]\nt_end = 0.2\n\
         [[families]]\nfamily = \"latitude-circle\"\nphi0 = 0.3\n\
         [[families]]\nfamily = \"fourier\"\ncos = [0.3, 0.0, 0.05]\n",
    );
    let out = csf(tmp.path(), &["sweep", spec.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut table = csv::Reader::from_path(tmp.path().join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = table.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| &r[6] == "ok"));

    let failing = write(
        tmp.path(),
        "failing.toml",
        "dts = [0.001, -1.0]\n[flow]\nt_end = 0.01\n[[families]]\nfamily = \"equator\"\n",
    );
    let out = csf(tmp.path(), &["sweep", failing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("1 of 2 sweep cells failed"), "{}", stderr(&out));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let config = "seed = 99\n[flow]\ngrid_size = 64\ndt = 0.002\nt_end = 0.1\n[initial]\nfamily = \"random-convex\"\n";
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    simulate(a.path(), config);
    simulate(b.path(), config);
    let read = |d: &TempDir| std::fs::read(d.path().join("trajectory.jsonl")).unwrap();
    assert_eq!(read(&a), read(&b));
    let first: Value = serde_json::from_slice(read(&a).split(|&c| c == b'\n').next().unwrap()).unwrap();
    assert_eq!(first["seed"], 99);
}

#[test]
fn oracle_prints_closed_forms() {
    let tmp = TempDir::new().unwrap();
    let out = csf(tmp.path(), &["oracle", "--t", "0", "--phi0", "0.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let f = v["values"]["f"].as_f64().unwrap();
    assert!((f - 0.5).abs() < 1e-14);
    let out = csf(tmp.path(), &["oracle", "--t", "3", "--t-collapse", "2"]);
    assert_eq!(out.status.code(), Some(2));
}
