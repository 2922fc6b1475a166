use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bsrm_cli::simulate::read_manifest;

const BIN: &str = env!("CARGO_BIN_EXE_bsrm");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Small 2D quadrant run, cheap enough for every command.
const SMALL: &str = r#"
experiment = "small"
seed = 11
samples = 3
order = 3

[grid]
d = 2
n = [6, 5]
dkappa = [0.5, 0.6]
quadrant = true
phases = "independent"
coupling = "all"

[spectrum]
power = "ex1_power"
bispectrum = "ex1_bispectrum"
bispectrum_scale = 0.02

[verify.third]
variance_tol = 0.5
skewness_tol = 0.5
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_files_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ex1");
    let o = run(
        &["simulate", "--set", "samples=2"],
        &configs().join("example1.toml"),
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m = read_manifest(&out).unwrap();
    let idx: Vec<u64> = m.samples.iter().map(|s| s.sample_index).collect();
    assert_eq!(idx, vec![0, 1]);
    assert!(m.samples.iter().all(|s| out.join(&s.file).is_file()));
    assert_eq!(m.decomposition.sha256.len(), 64);
    let fields = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "bsrmf")
        })
        .count();
    assert_eq!(fields, 2);
}

#[test]
fn simulate_is_deterministic_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&["simulate", "--workers", "1"], &cfg, &a)
        .status
        .success());
    assert!(run(&["simulate", "--workers", "3"], &cfg, &b)
        .status
        .success());
    for k in 0..3 {
        let name = format!("sample_{k:06}_fft.bsrmf");
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap()
        );
    }
}

#[test]
fn both_methods_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("v");
    let o = run(&["verify", "--set", "method=\"both\""], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let dev = rep["fft_naive_max_rel"].as_f64().unwrap();
    assert!(dev <= 1e-8, "{dev}");
}

#[test]
fn undersampled_grid_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = run(
        &["simulate", "--set", "grid.m=[8,10]"],
        &cfg,
        &tmp.path().join("x"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alias"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_rejected_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &SMALL.replace("quadrant = true", "quadrant = true\nqudrant = 1"),
    );
    let o = run(&["simulate"], &cfg, &tmp.path().join("x"));
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("grid") && e.contains("qudrant"), "{e}");
}

#[test]
fn decompose_reports_residual() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("d");
    let o = run(
        &["decompose", "--set", "decompose.coefficients=true"],
        &cfg,
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("residual"));
    let csv = fs::read_to_string(out.join("decomposition.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "pattern,n1,n2,S,S_p,sum_b2,interactions"
    );
    // Quadrant: one spectral pattern over the 7 x 6 orthant.
    assert_eq!(lines.count(), 42);
    assert!(out.join("coefficients.csv").is_file());
}

#[test]
fn zero_bispectrum_has_no_interactions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("d");
    let o = run(
        &["decompose", "--set", "spectrum.bispectrum=\"zero\""],
        &cfg,
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("decomposition.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[f.len() - 1], "0");
        assert_eq!(f[3], f[4], "S_p must equal S: {line}");
    }
}

#[test]
fn oversized_bispectrum_reports_negative_pure_power() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = run(
        &["decompose", "--set", "spectrum.bispectrum_scale=50.0"],
        &cfg,
        &tmp.path().join("d"),
    );
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("pure power"), "{e}");
    assert!(e.contains('['), "offending index missing: {e}");
}

#[test]
fn single_sample_verify_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("v");
    let o = run(&["verify", "--set", "samples=1"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("single sample"));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(rep["standard_errors"].is_null());
    let checks = rep["checks"].as_array().unwrap();
    let skew = checks.iter().find(|c| c["name"] == "skewness").unwrap();
    assert_eq!(skew["status"], "skipped");
    assert!(rep["warnings"][0].as_str().unwrap().contains("Monte Carlo"));
}

#[test]
fn verify_fails_on_tight_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = run(
        &["verify", "--set", "verify.third.variance=1000.0"],
        &cfg,
        &tmp.path().join("v"),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_loads_existing_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let sim = tmp.path().join("sim");
    assert!(run(&["simulate"], &cfg, &sim).status.success());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let set = format!("verify.fields=\"{}\"", sim.display());
    assert!(run(&["verify", "--set", &set], &cfg, &a).status.success());
    assert!(run(&["verify"], &cfg, &b).status.success());
    let ra: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    let rb: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(b.join("report.json")).unwrap()).unwrap();
    assert_eq!(ra["estimates"], rb["estimates"]);

    let missing = format!("verify.fields=\"{}\"", tmp.path().join("nowhere").display());
    let o = run(&["verify", "--set", &missing], &cfg, &a);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_writes_spectrum_and_bispectrum_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("v");
    let o = run(
        &[
            "verify",
            "--set",
            "verify.spectrum=true",
            "--set",
            "verify.bispectrum_max_index=2",
        ],
        &cfg,
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let b = fs::read_to_string(out.join("bispectrum.csv")).unwrap();
    assert!(b.starts_with("i1,i2,j1,j2,target_re"));
    assert!(b.lines().count() > 1);
    assert!(out.join("spectrum.csv").is_file());
    assert!(out.join("report.csv").is_file());
}

#[test]
fn bench_rejects_empty_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[bench]\nsamples = []\n"));
    let o = run(&["bench"], &cfg, &tmp.path().join("b"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bench.samples"), "{}", stderr(&o));
}

#[test]
fn bench_writes_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[bench]\nsamples = [1, 4]\n"));
    let out = tmp.path().join("b");
    let o = run(&["bench"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("bench.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "d,method,K,setup_s,total_s,per_sample_s"
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn missing_config_flag_is_a_config_error() {
    let o = Command::new(BIN).arg("simulate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
