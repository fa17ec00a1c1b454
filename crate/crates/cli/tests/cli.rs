use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wishent(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wishent"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("WISHENT_OUT")
        .output()
        .expect("spawn wishent")
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

const SWEEP: &[&str] = &["sweep", "--protocol", "EE", "--N", "8", "--samples", "30", "--y-points", "9", "--seed", "5"];

#[test]
fn sweep_writes_csv_and_manifest_and_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    ok(&wishent(&a, SWEEP));
    let csv = fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("protocol,param,Y,N,beta,n,R1,R1_se,R2,R2_se,R0,R0_se,invS2,invS2_se,S3S22,S3S22_se,n_floored\n"));
    assert_eq!(csv.lines().count(), 10);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("sweep.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["run"]["command"], "sweep");
    assert_eq!(manifest["run"]["N"], 8);
    assert_eq!(manifest["run"]["gamma"], 0.25);

    let b = dir.path().join("b");
    ok(&wishent(&b, SWEEP));
    assert_eq!(fs::read(a.join("sweep.csv")).unwrap(), fs::read(b.join("sweep.csv")).unwrap());

    let c = dir.path().join("c");
    let m = a.join("sweep.manifest.json");
    ok(&wishent(&c, &["--manifest", m.to_str().unwrap()]));
    assert_eq!(fs::read(a.join("sweep.csv")).unwrap(), fs::read(c.join("sweep.csv")).unwrap());
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for w in ["1", "3"] {
        let d = dir.path().join(w);
        let mut args = vec!["--workers", w];
        args.extend_from_slice(SWEEP);
        ok(&wishent(&d, &args));
        outs.push(fs::read(d.join("sweep.csv")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn invalid_gamma_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = wishent(dir.path(), &["sample", "--protocol", "EB", "--mu", "1", "--N", "4", "--gamma", "0"]);
    assert_eq!(o.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("spectra.csv").exists());
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "N = 6\nsamplez = 10\n").unwrap();
    let o = wishent(&dir.path().join("out"), &["--config", cfg.to_str().unwrap(), "sweep", "--protocol", "EB"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("samplez") && err.contains("samples"), "{err}");
}

#[test]
fn config_values_override_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "N = 6\nsamples = 12\ny_points = 8\n").unwrap();
    let out = dir.path().join("out");
    ok(&wishent(&out, &["--config", cfg.to_str().unwrap(), "sweep", "--protocol", "EP"]));
    let rows: Vec<String> = fs::read_to_string(out.join("sweep.csv")).unwrap().lines().skip(1).map(String::from).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("6") && r.split(',').nth(5) == Some("12")));
}

#[test]
fn report_without_inputs_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = wishent(&dir.path().join("out"), &["report", "--dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn fit_and_report_produce_plots() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&wishent(d, &["sweep", "--protocol", "EB", "--N", "12", "--samples", "40", "--y-points", "12"]));
    ok(&wishent(d, &["fit", "--input", d.join("sweep.csv").to_str().unwrap()]));
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("fit.json")).unwrap()).unwrap();
    assert!(fit["R1"]["fit"]["A"].as_f64().unwrap() > 0.0);
    ok(&wishent(d, &["report", "--dir", d.to_str().unwrap()]));
    let svg = fs::read_to_string(d.join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<text"));
}

#[test]
fn sample_writes_spectra_and_measures() {
    let dir = tempfile::tempdir().unwrap();
    ok(&wishent(dir.path(), &["sample", "--protocol", "EP", "--a", "2", "--b", "3", "--N", "5", "--samples", "7", "--beta", "2"]));
    let spectra = fs::read_to_string(dir.path().join("spectra.csv")).unwrap();
    assert!(spectra.starts_with("sample,index,lambda\n"));
    assert_eq!(spectra.lines().count(), 1 + 7 * 5);
    let measures = fs::read_to_string(dir.path().join("measures.csv")).unwrap();
    assert!(measures.starts_with("sample,R1,R2,R3,Rinf,R0,R0_floored,S2,S3"));
}
