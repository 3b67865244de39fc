//! End-to-end runs of the `tfe` binary and the library entry points.

use std::fs;
use std::path::Path;
use std::process::Command;

use tfe_cli::{run_experiment, Experiment, RunConfig};

fn tfe(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tfe"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn tfe")
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, json).unwrap();
    p.display().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"source": {"sigma_plus": 0.3}, "sfg_spectrum": {"d_omega": 0.3, "d_t": 0.5, "grid_points": 128},
            "sdc_run": {"n_trials": 300}}"#,
    );
    for exp in ["sfg-spectrum", "sdc-run"] {
        for run in ["a", "b"] {
            let o = tfe(&[exp, "--config", &cfg, "--seed", "7", "--out", run], tmp.path());
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        for entry in fs::read_dir(tmp.path().join("a")).unwrap() {
            let name = entry.unwrap().file_name();
            let a = fs::read(tmp.path().join("a").join(&name)).unwrap();
            let b = fs::read(tmp.path().join("b").join(&name)).unwrap();
            assert_eq!(a, b, "{exp}: {name:?} differs");
        }
    }
}

#[test]
fn different_seeds_change_monte_carlo_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"sdc_run": {"n_trials": 200, "messages": [{"d_omega": 0, "d_t": 0}]}}"#);
    for (seed, dir) in [("1", "a"), ("2", "b")] {
        assert!(tfe(&["sdc-run", "--config", &cfg, "--seed", seed, "--out", dir], tmp.path()).status.success());
    }
    let a = fs::read(tmp.path().join("a/sdc_trials.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/sdc_trials.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn manifest_hashes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(r#"{"schmidt": {"grid_points": 96}, "source": {"sigma_plus": 0.3}}"#).unwrap();
    let report = run_experiment(Experiment::Schmidt, &cfg, tmp.path()).unwrap();
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report.manifest).unwrap()).unwrap();
    assert_eq!(m["experiment"], "schmidt");
    assert_eq!(m["seed"], tfe_cli::DEFAULT_SEED);
    assert_eq!(m["config"]["source"]["sigma_plus"], 0.3);
    let artifacts = m["artifacts"].as_array().unwrap();
    assert!(artifacts.len() >= 2);
    for a in artifacts {
        let bytes = fs::read(tmp.path().join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"], tfe_cli::output::sha256_hex(&bytes));
        assert_eq!(a["bytes"], bytes.len());
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_field = write_config(tmp.path(), r#"{"source": {"sigma": 1.0}}"#);
    assert_eq!(tfe(&["schmidt", "--config", &bad_field], tmp.path()).status.code(), Some(2));

    let empty_sweep = write_config(tmp.path(), r#"{"sdc_sweep": {"sigma_minus": []}}"#);
    let o = tfe(&["sdc-sweep", "--config", &empty_sweep, "--out", "x"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("x").exists());

    let missing = tmp.path().join("nope.json").display().to_string();
    assert_eq!(tfe(&["schmidt", "--config", &missing], tmp.path()).status.code(), Some(4));

    // output path blocked by a regular file
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let ok = write_config(tmp.path(), r#"{"schmidt": {"grid_points": 64}, "source": {"sigma_plus": 0.5}}"#);
    let o = tfe(&["schmidt", "--config", &ok, "--out", "blocker/sub"], tmp.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn corrupted_lambdas_fail_before_any_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"qi_run": {"sources": [
            {"name": "good", "spectrum": {"uniform": 4}},
            {"name": "bad", "spectrum": {"lambdas": [0.5, 0.4]}}
        ]}}"#,
    );
    let o = tfe(&["qi-run", "--config", &cfg, "--out", "q"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad"));
    assert!(!tmp.path().join("q").exists());
}

#[test]
fn sweep_peak_and_one_over_root_e_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(
        r#"{"source": {"eps2_lambda0": 0.02},
            "sdc_sweep": {"sigma_minus": [0.5, 1.0], "plots": false,
                          "d_omega": {"min": -1, "max": 1, "points": 5},
                          "d_t": {"min": -4, "max": 4, "points": 81}}}"#,
    )
    .unwrap();
    run_experiment(Experiment::SdcSweep, &cfg, tmp.path()).unwrap();
    let (h, rows) = read_csv(&tmp.path().join("sdc_sweep.csv"));
    assert_eq!(h, ["sigma_minus", "d_omega", "d_t", "n_sfg"]);
    let (sm, dw, dt, n) = (col(&h, "sigma_minus"), col(&h, "d_omega"), col(&h, "d_t"), col(&h, "n_sfg"));
    for s in [0.5, 1.0] {
        let mine: Vec<&Vec<String>> = rows.iter().filter(|r| f(&r[sm]) == s).collect();
        let peak = mine.iter().map(|r| f(&r[n])).fold(0.0, f64::max);
        let origin = mine.iter().find(|r| f(&r[dw]) == 0.0 && f(&r[dt]).abs() < 1e-12).unwrap();
        assert_eq!(f(&origin[n]), peak);
        assert!((peak - 0.02).abs() < 1e-15);
        let row = mine
            .iter()
            .find(|r| f(&r[dw]) == 0.0 && (f(&r[dt]) * s - 1.0).abs() < 1e-9)
            .unwrap();
        assert!((f(&row[n]) / peak - (-0.5f64).exp()).abs() < 1e-10);
    }
}

#[test]
fn qi_noise_term_scales_inversely_with_schmidt_number() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(r#"{"qi_run": {"blocks": 20, "block_len": 1000}}"#).unwrap();
    run_experiment(Experiment::QiRun, &cfg, tmp.path()).unwrap();
    let (h, rows) = read_csv(&tmp.path().join("qi_analytic.csv"));
    let (sn, mu, noise, pd) = (col(&h, "sn"), col(&h, "mu_b"), col(&h, "noise_term"), col(&h, "pd_qi"));
    let noisy: Vec<&Vec<String>> = rows.iter().filter(|r| f(&r[mu]) > 0.0).collect();
    assert_eq!(noisy.len(), 3);
    let base = f(&noisy[0][noise]) * f(&noisy[0][sn]);
    for r in &noisy {
        assert!((f(&r[noise]) * f(&r[sn]) - base).abs() < 1e-12 * base);
    }
    let quiet: Vec<&Vec<String>> = rows.iter().filter(|r| f(&r[mu]) == 0.0).collect();
    assert_eq!(quiet.len(), 3);
    for r in &quiet {
        assert_eq!(r[pd], quiet[0][pd]);
        assert_eq!(r[noise], "0");
    }
    let (h, rows) = read_csv(&tmp.path().join("qi_summary.csv"));
    assert_eq!(h, ["source", "protocol", "hypothesis", "shots", "detections", "p_hat", "ci_low", "ci_high"]);
    assert_eq!(rows.len(), 3 * 3 * 2);
    let (h, _) = read_csv(&tmp.path().join("qi_roc.csv"));
    assert_eq!(h, ["source", "protocol", "threshold", "p_fa", "p_detect"]);
}

#[test]
fn spectrum_csv_integrates_to_n_sfg() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(r#"{"sfg_spectrum": {"grid_points": 256, "pair_density": {"omega_points": 5, "t_points": 7}}}"#)
        .unwrap();
    let report = run_experiment(Experiment::SfgSpectrum, &cfg, tmp.path()).unwrap();
    let (h, rows) = read_csv(&tmp.path().join("sfg_spectrum.csv"));
    assert_eq!(h, ["omega_p", "density", "analytic"]);
    let w: Vec<f64> = rows.iter().map(|r| f(&r[0])).collect();
    let d: Vec<f64> = rows.iter().map(|r| f(&r[1])).collect();
    let dw = w[1] - w[0];
    // trapezoid over a grid whose ends carry no weight
    let total: f64 = d.iter().sum::<f64>() * dw - 0.5 * (d[0] + d[d.len() - 1]) * dw;
    let n = report.results["n_sfg"].as_f64().unwrap();
    assert!((total - n).abs() < 1e-4 * n, "{total} vs {n}");
    let (h, rows) = read_csv(&tmp.path().join("pair_density.csv"));
    assert_eq!(h, ["omega", "t", "density"]);
    assert_eq!(rows.len(), 35);
}

#[test]
fn schmidt_csv_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(
        r#"{"source": {"sigma_plus": 0.4, "sigma_minus": 1.0}, "schmidt": {"grid_points": 160, "write_amplitude": true}}"#,
    )
    .unwrap();
    let report = run_experiment(Experiment::Schmidt, &cfg, tmp.path()).unwrap();
    let (h, rows) = read_csv(&tmp.path().join("schmidt.csv"));
    assert_eq!(h, ["n", "lambda"]);
    let lambdas: Vec<f64> = rows.iter().map(|r| f(&r[1])).collect();
    let sn = 1.0 / lambdas.iter().map(|l| l * l).sum::<f64>();
    let want = report.results["schmidt_number_closed_form"].as_f64().unwrap();
    assert!((sn - want).abs() < 1e-6 * want, "{sn} vs {want}");
    let (h, rows) = read_csv(&tmp.path().join("jsa.csv"));
    assert_eq!(h, ["omega_s", "omega_i", "re", "im"]);
    assert_eq!(rows.len(), 160 * 160);
}

#[test]
fn thz_units_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(r#"{"source": {"units": "THz", "sigma_plus": 0.05, "sigma_minus": 0.2}, "schmidt": {"grid_points": 64}}"#)
        .unwrap();
    let report = run_experiment(Experiment::Schmidt, &cfg, tmp.path()).unwrap();
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report.manifest).unwrap()).unwrap();
    assert_eq!(m["units"]["input"], "THz");
    assert!((m["units"]["factor"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        for exp in [
            Experiment::SfgSpectrum,
            Experiment::SdcSweep,
            Experiment::SdcRun,
            Experiment::QiRun,
            Experiment::Schmidt,
        ] {
            if let Err(e) = tfe_cli::commands::plan(exp, &cfg) {
                panic!("{} / {}: {e}", path.display(), exp.name());
            }
        }
        n += 1;
    }
    assert!(n >= 5);
}
