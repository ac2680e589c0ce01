use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tacnode_lab::config::LabConfig;
use tacnode_lab::provenance::sha256_hex;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tacnode-lab"))
}

fn run(cmd: &str, config: &str, dir: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{cmd}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("out-{cmd}-{}", extra.join("-").replace(['-', ' '], "")));
    let output = bin().arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(&out).args(extra).output().unwrap();
    (output, out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_SIM: &str = r#"
seed = 11

[simulate.scaling]
d = 8
kappa = 2.0
r = 1
rho = 1

[simulate.chain]
levels = [0, 1]
sweeps = 1500
burnin = 200
thin = 5
"#;

#[test]
fn identical_seeds_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, out_a) = run("simulate", SMALL_SIM, dir.path(), &[]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let (b, out_b) = run("simulate", SMALL_SIM, dir.path(), &["--seed", "11"]);
    assert_eq!(b.status.code(), Some(0));
    for f in ["histogram.csv", "summary.json", "snapshot.json", "snapshot.svg"] {
        assert_eq!(fs::read(out_a.join(f)).unwrap(), fs::read(out_b.join(f)).unwrap(), "{f}");
    }
    let (_, out_c) = run("simulate", SMALL_SIM, dir.path(), &["--seed", "12"]);
    assert_ne!(fs::read(out_a.join("histogram.csv")).unwrap(), fs::read(out_c.join("histogram.csv")).unwrap());
}

#[test]
fn outputs_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run("simulate", SMALL_SIM, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("histogram.csv")).unwrap();
    assert!(csv.contains(&format!("# config-sha256: {}", sha256_hex(SMALL_SIM.as_bytes()))));
    assert!(csv.contains("# seed: 11"));
    assert!(csv.lines().any(|l| l.starts_with("# git: ")));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["provenance"]["seed"], 11);
    // the stamped snapshot still loads as a tiling
    let snap = fs::read_to_string(out.join("snapshot.json")).unwrap();
    assert!(tacnode_tiling::tiling_sim::TilingState::from_json(&snap).is_ok());
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run("kernel", "[params]\nr = 1\nrhoo = 2\n", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("params.rhoo"), "{}", stderr(&o));
    let (o, _) = run("kernel", "[params]\nr = 1\nrho = \"two\"\n", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("params.rho"), "{}", stderr(&o));
    let (o, _) = run("kernel", "seed = 1\n", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`params`"), "{}", stderr(&o));
    let bad_scaling = SMALL_SIM.replace("kappa = 2.0", "kappa = 4.0");
    let (o, _) = run("simulate", &bad_scaling, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("simulate.scaling"), "{}", stderr(&o));
}

#[test]
fn empty_grid_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run("kernel", "[params]\nr = 1\nrho = 1\n", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("kernel.csv")).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data, ["tau1,theta1,tau2,theta2,route,value,contour,series,agreement,involution,status"]);
}

#[test]
fn kernel_grid_reports_routes_and_flags_mixed_levels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[params]\nr = 1\nrho = 1\n[kernel]\ntau1 = [0, 2]\ntheta1 = [0.1]\ntau2 = [1, 2]\ntheta2 = [-0.4]\n";
    let (o, out) = run("kernel", cfg, dir.path(), &[]);
    // (0, 2) straddles the strip edge: no series, flagged
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("max involution discrepancy"));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(out.join("kernel.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let status: Vec<&str> = rows.iter().map(|r| &r[10]).collect();
    assert_eq!(status, ["ok", "unsupported", "ok", "ok"]);
    for r in &rows {
        let contour: f64 = r[6].parse().unwrap();
        let value: f64 = r[5].parse().unwrap();
        assert!((value - contour).abs() < 1e-7);
        // 17 significant digits
        assert_eq!(r[5].split('e').next().unwrap().trim_start_matches('-').len(), 18);
    }
    assert_eq!(&rows[1][4], "contour");
    assert_eq!(&rows[0][4], "series");
}

#[test]
fn route_disagreement_beyond_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[params]\nr = 1\nrho = 1\n[kernel]\ntau1 = [1]\ntheta1 = [0.1]\ntau2 = [1]\ntheta2 = [-0.4]\ntolerance = 1e-30\n";
    let (o, _) = run("kernel", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("disagree"));
}

#[test]
fn only_restricts_the_suites() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run("verify", "", dir.path(), &["--only", "volume"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let names: Vec<&str> = report["suites"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["volume_quadrature", "volume_monte_carlo", "volume_reorder"]);
    assert_eq!(report["passed"], true);
    let (o, _) = run("verify", "", dir.path(), &["--only", "nothing"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--only"));
}

#[test]
fn tightened_tolerance_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run("verify", "[verify.tolerances]\nfay = 1e-30\n", dir.path(), &["--only", "fay"]);
    assert_eq!(o.status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let s = &report["suites"][0];
    assert_eq!(s["passed"], false);
    assert!((s["tolerance"].as_f64().unwrap() / 1e-30 - 1.0).abs() < 1e-12);
    assert!(s["discrepancy"].as_f64().unwrap() < 1e-8);
    assert_eq!(report["passed"], false);
}

#[test]
fn infeasible_region_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[simulate.region]\nb = 2\nc = 2\nd = 0\nm1 = 1\nm2 = 1\nn1 = 1\nn2 = 1\nn = 1\n\
               [simulate.chain]\nlevels = []\nsweeps = 10\nburnin = 0\n";
    let (o, _) = run("simulate", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn density_and_volume_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[params]\nr = 1\nrho = 1\n[density]\nnormalize = [1]\n\
               [[density.points]]\ntau1 = 0\nx = [0.2]\ntau2 = 2\ny = [0.9, -0.3]\n\
               [[density.points]]\ntau1 = 1\nx = [0.1]\ntau2 = 3\n";
    let (o, _) = run("density", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1), "y without tau2 is a config error");
    assert!(stderr(&o).contains("density.points[1]"));
    let cfg = cfg.replace("tau2 = 3\n", "");
    let (o, out) = run("density", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2), "(0, 2) straddles the strip edge for rho = 1");
    let text = fs::read_to_string(out.join("density.csv")).unwrap();
    assert!(text.contains(",unsupported,"));
    let mass = fs::read_to_string(out.join("normalization.csv")).unwrap();
    assert!(mass.lines().last().unwrap().ends_with(",ok"));

    let cfg = "[volume]\nsamples = 50000\n[[volume.instances]]\ntau1 = 0\nx = [0.1]\ntau2 = 2\ny = [1.3, -0.4]\n";
    let (o, out) = run("volume", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(out.join("volume.csv")).unwrap();
    let row = rdr.records().next().unwrap().unwrap();
    // the cone is the segment [0.1, 1.3]
    assert!((row[5].parse::<f64>().unwrap() - 1.2).abs() < 1e-14);
    assert_eq!(&row[10], "ok");
}

#[test]
fn only_is_rejected_outside_verify() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run("kernel", "[params]\nr = 1\nrho = 1\n", dir.path(), &["--only", "phi"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        LabConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 5);
}
