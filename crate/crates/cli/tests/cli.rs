use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn lab(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_subquantum-lab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).expect("manifest written")).expect("valid json")
}

fn listing(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect()
}

#[test]
fn gadget_with_one_marked_input() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, stdout) = lab(tmp.path(), &["gadget", "--n", "2", "--oracle", "08"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("s=1 probability=0.625"), "{stdout}");
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["metrics"]["s"], 1);
    assert!((m["metrics"]["probability"].as_f64().unwrap() - 0.625).abs() < 1e-12);
}

#[test]
fn manifest_lists_exactly_the_files_written() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let (code, _) = lab(&dir, &["qkd-b92", "--rounds", "300", "--eve", "--sweep", "1e-4,1e-2,1", "--seed", "4"]);
    assert_eq!(code, 0);
    let m = manifest(&dir);
    let mut named: BTreeSet<String> = m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap().to_string()).collect();
    named.insert("manifest.json".to_string());
    assert_eq!(named, listing(&dir));
    for f in m["files"].as_array().unwrap() {
        let text = std::fs::read_to_string(dir.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, text.len());
        assert_eq!(f["rows"].as_u64().unwrap() as usize, text.lines().filter(|l| !l.starts_with('#')).count());
    }
    assert_eq!(m["seed"], 4);
    assert_eq!(m["config"]["rounds"], 300);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert_eq!(lab(dir, &["qkd-b92", "--rounds", "500", "--eve", "--seed", "11"]).0, 0);
    }
    let ta = std::fs::read(a.join("transcript.txt")).unwrap();
    assert_eq!(ta, std::fs::read(b.join("transcript.txt")).unwrap());
    let c = tmp.path().join("c");
    assert_eq!(lab(&c, &["qkd-b92", "--rounds", "500", "--eve", "--seed", "12"]).0, 0);
    assert_ne!(ta, std::fs::read(c.join("transcript.txt")).unwrap());
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("lab.toml");
    std::fs::write(&cfg, "seed = 9\n\n[qkd-b92]\nrounds = 200\noverlap = 0.6\n").unwrap();
    let dir = tmp.path().join("out");
    let cfg_arg = cfg.to_str().unwrap();
    assert_eq!(lab(&dir, &["--config", cfg_arg, "qkd-b92", "--rounds", "120"]).0, 0);
    let m = manifest(&dir);
    assert_eq!(m["seed"], 9);
    assert_eq!(m["config"]["rounds"], 120);
    assert_eq!(m["config"]["overlap"], 0.6);
    assert_eq!(m["config"]["transit"], 1.2);
    assert_eq!(lab(&dir, &["--config", cfg_arg, "--seed", "3", "qkd-b92"]).0, 0);
    assert_eq!(manifest(&dir)["seed"], 3);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("lab.toml");
    std::fs::write(&cfg, "[relax]\nparticle = 10\n").unwrap();
    let dir = tmp.path().join("out");
    let (code, _) = lab(&dir, &["--config", cfg.to_str().unwrap(), "relax"]);
    assert_eq!(code, 2);
    let m = manifest(&dir);
    assert_eq!(m["status"], "config-error");
    assert!(m["error"].as_str().unwrap().contains("particle"));
    assert_eq!(listing(&dir), BTreeSet::from(["manifest.json".to_string()]));
}

#[test]
fn invalid_parameters_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["relax", "--modes", "15"][..],
        &["gadget", "--n", "2", "--oracle", "zz"],
        &["detect", "--n-sample", "1"],
        &["discriminate", "--overlap", "1.5"],
    ] {
        let (code, _) = lab(tmp.path(), args);
        assert_eq!(code, 2, "{args:?}");
        assert_eq!(manifest(tmp.path())["status"], "config-error", "{args:?}");
    }
    assert_eq!(lab(tmp.path(), &["relax", "--no-such-flag"]).0, 2);
}

#[test]
fn packet_leaving_the_grid_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) =
        lab(tmp.path(), &["signal", "--pairs", "10000", "--half-width", "6", "--points", "64", "--coupling", "20", "--t-signal", "3"]);
    assert_eq!(code, 3);
    assert_eq!(manifest(tmp.path())["status"], "runtime-error");
}

#[test]
fn broken_invariant_exits_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = lab(
        tmp.path(),
        &["relax", "--equilibrium", "--particles", "1000", "--periods", "0.5", "--cells", "64", "--judged-cells", "64"],
    );
    assert_eq!(code, 4);
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "invariant-failure");
    assert!(m["error"].as_str().unwrap().contains("equivariance"));
    assert!(tmp.path().join("relax.txt").exists());
}

#[test]
fn detect_accepts_each_parent_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let small = ["--n-cloud", "20000", "--n-sample", "2000", "--repetitions", "2"];
    for kind in [&["--parent", "equilibrium"][..], &["--parent", "lomax", "--alpha", "3"], &["--parent", "relaxing", "--lambda", "2"]] {
        let args: Vec<&str> = ["detect"].iter().chain(kind).chain(&small).copied().collect();
        assert_eq!(lab(tmp.path(), &args).0, 0, "{kind:?}");
        assert_eq!(manifest(tmp.path())["metrics"]["parent"]["kind"], kind[1]);
    }
    assert_eq!(lab(tmp.path(), &["detect", "--parent", "bogus"]).0, 2);
}
