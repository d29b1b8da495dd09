use std::fs;
use std::path::Path;
use std::process::Command;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_shrinkage"));
    c.env("RUST_LOG", "error");
    c
}

fn write_data(dir: &Path) -> std::path::PathBuf {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut text = String::from("y,a,b,c,flat\n");
    for _ in 0..60 {
        let v: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = 1.0 + 2.0 * v[0] - v[1] + 0.5 * v[3];
        text.push_str(&format!("{y},{},{},{},7\n", v[0], v[1], v[2]));
    }
    let path = dir.join("data.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn fit_writes_archive_and_manifest_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let out1 = dir.path().join("run1");
    let st = bin()
        .args(["fit", "--prior.family=ssvs_fixed", "--sampler.iterations=600", "--sampler.burn_in=100"])
        .arg(format!("--data.path={}", data.display()))
        .arg("--out")
        .arg(&out1)
        .args(["--output.formats", "csv,binary"])
        .output()
        .unwrap();
    assert!(st.status.success());
    let csv = fs::read_to_string(out1.join("draws.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    // constant column dropped; 2 chains × 500 retained rows
    assert_eq!(lines[0], "chain,iter,beta_1,beta_2,beta_3,sigma2,gamma_1,gamma_2,gamma_3");
    assert_eq!(lines.len(), 1 + 1000);
    let (rows, cols, _) = shrinkage::cli_io::read_draws_binary(&out1.join("draws.bin")).unwrap();
    assert_eq!((rows, cols), (1000, 9));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out1.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["coefficients"][0]["name"], "a");
    assert_eq!(summary["coefficients"][0]["median_model"], true);

    let out2 = dir.path().join("run2");
    let st = bin().arg("fit").arg("--config").arg(out1.join("run_manifest.cfg")).arg("--out").arg(&out2).output().unwrap();
    assert!(st.status.success());
    assert_eq!(fs::read(out1.join("draws.csv")).unwrap(), fs::read(out2.join("draws.csv")).unwrap());
}

#[test]
fn thread_count_does_not_change_draws() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let mut outs = Vec::new();
    for t in ["1", "3"] {
        let out = dir.path().join(format!("t{t}"));
        let st = bin()
            .args(["fit", "--prior.family=horseshoe_ms", "--sampler.iterations=300", "--sampler.burn_in=50", "--sampler.chains=3"])
            .arg(format!("--data.path={}", data.display()))
            .args(["--threads", t, "--seed", "5"])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(st.status.success());
        outs.push(fs::read(out.join("draws.csv")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "sampler.burn_in = 6000\nsampler.iterations = 5000\n").unwrap();
    let o = bin().arg("fit").arg("--config").arg(&cfg).arg(format!("--data.path={}", data.display())).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("burn_in ≥ iterations"));

    let o = bin().args(["fit", "--prior.family=horsehoe"]).arg(format!("--data.path={}", data.display())).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did you mean"));

    let o = bin().args(["fit", "--data.path=/no/such/file.csv"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evidence_and_quantile_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let out = dir.path().join("ev");
    let o = bin()
        .args(["evidence", "--evidence.coordinate=3", "--evidence.dic_plugin=mode"])
        .arg(format!("--data.path={}", data.display()))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ev: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("evidence.json")).unwrap()).unwrap();
    assert!(ev["log_marginal"].as_f64().unwrap().is_finite());
    assert_eq!(ev["bma"]["models_enumerated"], 8);
    let pips = ev["bma"]["inclusion_probs"].as_array().unwrap();
    assert!(pips[0].as_f64().unwrap() > 0.99);

    let out = dir.path().join("qr");
    let o = bin()
        .args(["quantile", "--levels", "0.3,0.7", "--sampler.iterations=800", "--sampler.burn_in=200"])
        .arg(format!("--data.path={}", data.display()))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let q: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("quantile.json")).unwrap()).unwrap();
    assert_eq!(q["levels"].as_array().unwrap().len(), 2);
    assert!(out.join("level_0.3").join("draws.csv").exists());
}

#[test]
fn simulate_runs_a_small_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = bin()
        .args([
            "simulate",
            "--simulate.study=ssvs",
            "--simulate.p=20",
            "--simulate.r2=0.8",
            "--simulate.replications=2",
            "--simulate.iterations=300",
            "--simulate.burn_in=100",
            "--simulate.methods=Kuo-Mallick",
        ])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("ssvs_lasso_table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("Kuo-Mallick,20,0.8,"));
}
