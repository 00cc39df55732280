//! End-to-end runs of the `care-lab` binary on small inputs.

use std::path::Path;
use std::process::Command;

fn care_lab(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_care-lab")).args(args).output().expect("binary runs");
    assert!(out.status.success(), "care-lab {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_data_fci_and_train_chain_together() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("train.csv");
    care_lab(&["gen-data", "--n", "800", "--seed", "3", "--out", path(&csv)]);
    let header = std::fs::read_to_string(&csv).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "X1,X2,Xproxy,Xspur,Xnoise,Y");

    let fci_dir = dir.path().join("fci");
    care_lab(&["fci", "--in", path(&csv), "--target", "Y", "--tester", "fisher_z", "--out", path(&fci_dir)]);
    let mask: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fci_dir.join("mask.json")).unwrap()).unwrap();
    let keys: Vec<&String> = mask.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 5);
    assert!(fci_dir.join("pag.json").exists());

    let model = dir.path().join("model.json");
    let stdout = care_lab(&[
        "train",
        "--in",
        path(&csv),
        "--target",
        "Y",
        "--mask",
        path(&fci_dir.join("mask.json")),
        "--lambda",
        "1",
        "--model",
        "lr",
        "--max-iters",
        "200",
        "--out",
        path(&model),
    ]);
    assert!(stdout.starts_with("trained lr"));
    let fitted: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(fitted["lambda"], 1.0);
}

#[test]
fn experiment_writes_deterministic_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        care_lab(&[
            "experiment",
            "synthetic",
            "--seeds",
            "0",
            "--n-train",
            "300",
            "--n-test",
            "300",
            "--models",
            "lr,lr_acr",
            "--out",
            path(&out),
        ]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    let results = |d: &Path| std::fs::read(d.join("results.json")).unwrap();
    assert_eq!(results(&a), results(&b));
    assert!(a.join("timing.json").exists());
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_care-lab"))
        .args(["gen-data", "--mode", "validation", "--out", "/dev/null"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mode must be train or test"));
}
