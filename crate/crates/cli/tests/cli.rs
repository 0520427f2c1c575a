use nli_cli::config::{self, Value};
use nli_cli::runner::{build_jsf, run, run_file, RunOptions, ScanParam, Stage};
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.cfg"))
}

fn all_bundled() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    v.sort();
    v
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn opts(out: &Path, grid: Option<usize>) -> RunOptions {
    RunOptions { grid, ..RunOptions::new(out) }
}

#[test]
fn every_bundled_config_validates_and_round_trips() {
    let names: Vec<_> = all_bundled().iter().map(|p| p.file_stem().unwrap().to_string_lossy().into_owned()).collect();
    for want in [
        "fig1", "fig2a", "fig2b", "fig3a", "fig3b", "fig4", "fig5", "fig6-N2", "fig6-N3", "fig6-N4", "fig6-N5", "fig7a",
        "fig7b", "fig7c", "fig9a", "fig9b", "fig9c", "fig9d", "fig10",
    ] {
        assert!(names.iter().any(|n| n == want), "missing bundled config {want}");
    }
    for p in all_bundled() {
        let (cfg, _) = config::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(!cfg.scenario.is_empty());
        let a = cfg.normalized().unwrap();
        let b = config::parse_str(&a.to_toml().unwrap()).unwrap().normalized().unwrap();
        assert_eq!(a, b, "{}", p.display());
    }
}

#[test]
fn fig1_schmidt_number() {
    let dir = tempfile::tempdir().unwrap();
    run_file(&bundled("fig1"), &opts(dir.path(), None)).unwrap();
    let k = json(&dir.path().join("fig1/schmidt.json"))["K"].as_f64().unwrap();
    assert!((k - 6.1).abs() <= 0.2, "K = {k}");
}

#[test]
fn fig2b_first_island_center() {
    let dir = tempfile::tempdir().unwrap();
    run_file(&bundled("fig2b"), &RunOptions { stage: Stage::Schmidt, ..opts(dir.path(), None) }).unwrap();
    let s = json(&dir.path().join("fig2b/schmidt.json"));
    let m1 = &s["islands"][0];
    assert_eq!(m1["m"], 1);
    let (cs, ci) = (m1["center_s_nm"].as_f64().unwrap(), m1["center_i_nm"].as_f64().unwrap());
    // One grid step at 256 points is ≈0.16 nm.
    assert!((cs - 1556.7).abs() < 0.2, "signal {cs}");
    assert!((ci - 1540.4).abs() < 0.2, "idler {ci}");
}

fn checksums(dir: &Path, threads: usize) -> BTreeMap<String, String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let m = pool.install(|| run_file(&bundled("fig2b"), &opts(dir, Some(96)))).unwrap();
    m.files.into_iter().map(|f| (f.path, f.sha256)).collect()
}

#[test]
fn deterministic_across_runs_and_worker_counts() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = checksums(a.path(), 1);
    let again = checksums(b.path(), 1);
    let many = checksums(c.path(), 4);
    assert!(!one.is_empty());
    assert_eq!(one, again);
    assert_eq!(one, many);
    for (path, sum) in &one {
        let bytes = std::fs::read(a.path().join(path)).unwrap();
        assert_eq!(&nli_cli::runner::sha256_hex(&bytes), sum);
    }
}

#[test]
fn empty_scenario_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    std::fs::write(&cfg, "# nothing to run\n").unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_nli"))
        .args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["files"].as_array().unwrap().len(), 0);
    assert_eq!(m["scenarios"].as_array().unwrap().len(), 0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    let text = std::fs::read_to_string(bundled("fig2b")).unwrap().replace("\"17 ps/(km·nm)\"", "\"17 nm\"");
    std::fs::write(&bad, text).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nli"))
        .args(["jsf", bad.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario[0].dm.d"));

    // The 1528–1568 nm window clips the phase-matching tails.
    let out = Command::new(env!("CARGO_BIN_EXE_nli"))
        .args(["jsf", bundled("fig2b").to_str().unwrap(), "--grid", "64", "--strict", "--format", "bin"])
        .args(["--out", dir.path().join("s").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let m = json(&dir.path().join("s/manifest.json"));
    assert!(!m["warnings"].as_array().unwrap().is_empty());
    assert!(dir.path().join("s/fig2b/jsf.bin").exists());
}

#[test]
fn binary_grid_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c");
    let bin = dir.path().join("b");
    for (out, fmt) in [(&csv, "csv"), (&bin, "bin")] {
        let st = Command::new(env!("CARGO_BIN_EXE_nli"))
            .args(["jsf", bundled("fig2a").to_str().unwrap(), "--grid", "32", "--format", fmt])
            .args(["--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
    }
    let (_, a) = nli_core::io::read_grid_csv(std::fs::File::open(csv.join("fig2a/jsf.csv")).unwrap()).unwrap();
    let (_, b) = nli_core::io::read_grid_bin(std::fs::File::open(bin.join("fig2a/jsf.bin")).unwrap()).unwrap();
    assert_eq!(a.dim(), (32, 32));
    for (x, y) in a.iter().zip(b.iter()) {
        assert!((x - y).norm() <= 1e-12 * y.norm().max(1e-300), "{x} vs {y}");
    }
}

const SINGLE_POINT: &str = r#"
[[scenario]]
name = "point"
kind = "nli"

[scenario.pump]
lambda = 1548.5
fwhm = 1

[scenario.fiber]
length = 50
lambda_zero = 1548.2
d_slope = 0.075
gamma_pp = 1

[scenario.dm]
kind = "smf"
length = 7
d = 17

[scenario.nli]
stages = 2
stage_length = 50
include_dk_in_theta = true

[scenario.grid]
n = 128
lambda_min = 1528
lambda_max = 1568

[scenario.filter]
island = 1
bandwidth = 2.5

[scenario.scan]
from = 2.5
to = 2.5
"#;

#[test]
fn single_point_scan_equals_run_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config::parse_str(SINGLE_POINT).unwrap();
    run(&cfg, SINGLE_POINT.as_bytes(), &opts(dir.path(), None)).unwrap();
    let m = json(&dir.path().join("point/metrics.json"));
    let scan = std::fs::read_to_string(dir.path().join("point/scan_bandwidth.csv")).unwrap();
    let rows: Vec<_> = scan.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let f: Vec<f64> = rows[0].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(f[0], 2.5);
    assert_eq!(f[1], m["g2_bar_s"].as_f64().unwrap());
    assert_eq!(f[2], m["g2_bar_i"].as_f64().unwrap());
    assert_eq!(f[3], m["xi_s"].as_f64().unwrap());
    assert_eq!(f[4], m["xi_i"].as_f64().unwrap());
}

#[test]
fn stage_and_gain_scans() {
    let text = SINGLE_POINT.replace("from = 2.5\nto = 2.5\n", "stages = [2, 3, 4]\ngains = [0.1, 0.2]\n");
    let cfg = config::parse_str(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for param in [ScanParam::StageCount, ScanParam::Gain, ScanParam::FilterBandwidth] {
        run(&cfg, text.as_bytes(), &RunOptions { stage: Stage::Scan(param), ..opts(dir.path(), None) }).unwrap();
    }
    let stages = std::fs::read_to_string(dir.path().join("point/scan_stages.csv")).unwrap();
    let ks: Vec<usize> = stages.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ks, vec![2, 3, 4]);
    let gains = std::fs::read_to_string(dir.path().join("point/scan_gain.csv")).unwrap();
    let pc: Vec<f64> = gains.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    // P_c ∝ G² at low gain.
    assert!((pc[1] / pc[0] - 4.0).abs() < 1e-9);
    assert!(!dir.path().join("point/scan_bandwidth.csv").exists());
}

#[test]
fn fig7_scans_meet_joint_criterion() {
    for name in ["fig7a", "fig7b", "fig7c"] {
        let dir = tempfile::tempdir().unwrap();
        let o = RunOptions { stage: Stage::Scan(ScanParam::FilterBandwidth), ..opts(dir.path(), None) };
        run_file(&bundled(name), &o).unwrap();
        let scan = std::fs::read_to_string(dir.path().join(format!("{name}/scan_bandwidth.csv"))).unwrap();
        let hit = scan.lines().skip(1).any(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect();
            f[1] > 1.95 && f[3] > 0.95
        });
        assert!(hit, "{name}: no bandwidth with ḡ²_s > 1.95 and ξ_s > 0.95");
    }
}

#[test]
fn fig10_leading_mode_grows_with_gain() {
    let dir = tempfile::tempdir().unwrap();
    let o = RunOptions { stage: Stage::HighGain, ..opts(dir.path(), Some(192)) };
    run_file(&bundled("fig10"), &o).unwrap();
    let table = std::fs::read_to_string(dir.path().join("fig10/mode_index.csv")).unwrap();
    let lead: Vec<f64> = table
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("1,"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(lead.len(), 3);
    assert!(lead[0] < lead[1] && lead[1] < lead[2], "{lead:?}");
    let hg = json(&dir.path().join("fig10/highgain.json"));
    for row in hg.as_array().unwrap() {
        assert!(row["commutator_residual_signal"].as_f64().unwrap() < 1e-6);
    }
    assert!(dir.path().join("fig10/h2s_G3/jsf.csv").exists());
}

#[test]
fn design_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fig5", "fig9b"] {
        run_file(&bundled(name), &RunOptions { stage: Stage::Design, ..opts(dir.path(), Some(64)) }).unwrap();
    }
    let f5 = json(&dir.path().join("fig5/design.json"));
    assert_eq!(f5["elliptical"]["verdict"], "feasible");
    assert!(f5["cross_term"].as_f64().unwrap().abs() < 1e-12);
    let f9 = json(&dir.path().join("fig9b/design.json"));
    let ls: Vec<f64> = f9["binomial_lengths_m"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(ls, vec![50.0, 150.0, 150.0, 50.0]);
}

#[test]
fn interference_grid_is_bounded() {
    let cfg = config::load(&bundled("fig3b")).unwrap().0;
    let j = build_jsf("s", &cfg.scenario[0], Some(64)).unwrap();
    assert!(j.values.iter().all(|z| z.norm() <= 1.0 + 1e-12));
    assert!(j.values.iter().any(|z| z.norm() > 0.99));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unit_spelling_does_not_change_meaning(
        lambda_nm in 1500.0f64..1600.0,
        length_m in 1.0f64..200.0,
        d in 1.0f64..30.0,
    ) {
        let plain = SINGLE_POINT
            .replace("lambda = 1548.5", &format!("lambda = {lambda_nm}"))
            .replace("length = 7\n", &format!("length = {length_m}\n"))
            .replace("d = 17", &format!("d = {d}"));
        let spelled = SINGLE_POINT
            .replace("lambda = 1548.5", &format!("lambda = \"{} µm\"", lambda_nm / 1000.0))
            .replace("length = 7\n", &format!("length = \"{} km\"\n", length_m / 1000.0))
            .replace("d = 17", &format!("d = \"{} s/m²\"", d * 1e-6));
        let a = config::parse_str(&plain).unwrap().normalized().unwrap();
        let b = config::parse_str(&spelled).unwrap().normalized().unwrap();
        let sa = &a.scenario[0];
        let sb = &b.scenario[0];
        for (x, y) in [
            (&sa.pump.lambda, &sb.pump.lambda),
            (&sa.dm.as_ref().unwrap().length, &sb.dm.as_ref().unwrap().length),
            (sa.dm.as_ref().unwrap().d.as_ref().unwrap(), sb.dm.as_ref().unwrap().d.as_ref().unwrap()),
        ] {
            match (x, y) {
                (Value::Number(x), Value::Number(y)) => prop_assert!((x - y).abs() <= 1e-12 * x.abs()),
                _ => prop_assert!(false, "not normalized"),
            }
        }
        let again = config::parse_str(&a.to_toml().unwrap()).unwrap().normalized().unwrap();
        prop_assert_eq!(a, again);
    }
}
