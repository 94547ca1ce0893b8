//
// Copyright 2026 The dpb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

use dpb::curves::{read_csv, PrivacyProfile, TradeoffCurve};
use dpb::mechanism::{tradeoff_curve, MechanismSpec};
use serde_json::Value;
use std::process::{Command, Output};

fn dpb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpb"))
        .args(args)
        .env_remove("DPB_THREADS")
        .output()
        .expect("run dpb")
}

fn json(args: &[&str]) -> Value {
    let out = dpb(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn compare_gaussian_laplace_golden() {
    let v = json(&[
        "compare",
        "gaussian:mu=1",
        "laplace:mu=1",
        "--precision",
        "3",
    ]);
    assert_eq!(num(&v, "delta_ab"), 0.005);
    assert_eq!(num(&v, "delta_ba"), 0.034);
    assert_eq!(v["universal"], Value::Bool(false));
    assert_eq!(v["grid_size"], 10001);
}

#[test]
fn compare_pp_with_itself() {
    let v = json(&["compare", "pp", "pp"]);
    assert_eq!(num(&v, "delta_ab"), 0.0);
    assert_eq!(num(&v, "delta_ba"), 0.0);
    assert_eq!(num(&v, "symmetric"), 0.0);
    assert_eq!(v["universal"], Value::Bool(true));
}

#[test]
fn tolerance_flag_decides_universality() {
    let args = [
        "compare",
        "gaussian:mu=1",
        "laplace:mu=1",
        "--grid-size",
        "1001",
    ];
    let v = json(&args);
    assert_eq!(v["universal"], Value::Bool(false));
    let loose = [&args[..], &["--tolerance", "0.01"]].concat();
    let v = json(&loose);
    assert_eq!(v["universal"], Value::Bool(true));
    assert_eq!(num(&v, "tolerance"), 0.01);
}

#[test]
fn csv_verdict_has_a_header_and_one_row() {
    let out = dpb(&[
        "compare",
        "pp",
        "bnp",
        "--grid-size",
        "11",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("a,b,delta_ab,delta_ba"), "{text}");
    assert!(lines[1].starts_with("pp,bnp,0.5,0.0"), "{text}");
}

#[test]
fn calibration_is_deterministic_and_monotone() {
    let args = [
        "calibrate",
        "--eps",
        "8",
        "--delta",
        "1e-5",
        "--p",
        "0.01",
        "--steps",
        "500",
    ];
    let first = dpb(&args);
    let second = dpb(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let v: Value = serde_json::from_slice(&first.stdout).unwrap();
    let sigma8 = num(&v, "sigma");
    assert!((sigma8 - 0.54).abs() < 0.01, "{sigma8}");
    let v = json(&[
        "calibrate",
        "--eps",
        "4",
        "--delta",
        "1e-5",
        "--p",
        "0.01",
        "--steps",
        "500",
    ]);
    assert!(num(&v, "sigma") > sigma8);
}

#[test]
fn exit_codes() {
    assert_eq!(
        dpb(&["compare", "gaussian:mu=abc", "pp"]).status.code(),
        Some(2)
    );
    assert_eq!(
        dpb(&["compare", "cauchy:mu=1", "pp"]).status.code(),
        Some(2)
    );
    assert_eq!(dpb(&["frobnicate"]).status.code(), Some(2));
    // No σ in the bracket is noisy enough for ε = 1e-3 after 1000 full-batch steps.
    let out = dpb(&[
        "calibrate",
        "--eps",
        "0.001",
        "--delta",
        "1e-5",
        "--p",
        "1",
        "--steps",
        "1000",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = dpb(&[
        "calibrate",
        "--eps=-1",
        "--delta",
        "1e-5",
        "--p",
        "0.1",
        "--steps",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bound_precondition_is_reported_as_json() {
    let out = dpb(&[
        "bound",
        "sgm:sigma=2,p=0.0009,steps=14000",
        "sgm:sigma=3,p=0.0009,steps=34000",
        "--grid-size",
        "1001",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["precondition_forward"], Value::Bool(false));
    assert!(v["error"].as_str().unwrap().contains("precondition"));
    assert!(num(&v, "ratio") < num(&v, "required"));
}

#[test]
fn bound_of_identical_specs_has_zero_gap_in_divergence() {
    let spec = "sgm:sigma=2,p=0.01,steps=200";
    let v = json(&["bound", spec, spec, "--grid-size", "1001"]);
    assert_eq!(num(&v, "delta_ab"), 0.0);
    assert_eq!(num(&v, "delta_ba"), 0.0);
    assert_eq!(v["sound"], Value::Bool(true));
}

#[test]
fn weighted_priors() {
    let v = json(&[
        "weighted",
        "gaussian:mu=1",
        "gaussian:mu=1",
        "--prior",
        "jeffreys",
    ]);
    assert_eq!(num(&v, "delta_ab"), 0.0);
    let v = json(&[
        "weighted",
        "gaussian:mu=1",
        "laplace:mu=1",
        "--grid-size",
        "2001",
    ]);
    assert!(
        (num(&v, "delta_ab") - num(&v, "unweighted_ab")).abs() < 1e-6,
        "{v}"
    );
    let out = dpb(&["weighted", "pp", "pp", "--prior", "beta"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exported_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let path_s = path.to_str().unwrap();
    let out = dpb(&[
        "export",
        "gaussian:mu=1.5",
        "--grid-size",
        "501",
        "--out",
        path_s,
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let back: TradeoffCurve = read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    let direct = tradeoff_curve(&MechanismSpec::gaussian(1.5), 501).unwrap();
    for (a, b) in back.betas().iter().zip(direct.betas()) {
        // Nine significant digits.
        assert!((a - b).abs() <= 5e-9 * b.abs(), "{a} {b}");
    }

    let path = dir.path().join("p.csv");
    let out = dpb(&[
        "export",
        "--sigma",
        "1",
        "--p",
        "1",
        "--steps",
        "4",
        "--kind",
        "profile",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let profile: PrivacyProfile = read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    // Four unit-sensitivity Gaussian steps compose to μ = 2.
    let d0 = profile.deltas()[0];
    assert!((d0 - 0.682_689_492_137_085_9).abs() < 1e-3, "{d0}");
}

#[test]
fn compare_writes_curve_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dpb(&[
        "compare",
        "gaussian:mu=1",
        "bnp",
        "--grid-size",
        "101",
        "--curves",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for side in ["a", "b"] {
        for kind in ["tradeoff", "profile", "bayes"] {
            let p = dir.path().join(format!("{side}_{kind}.csv"));
            assert!(p.exists(), "{p:?}");
        }
    }
    let head = std::fs::read_to_string(dir.path().join("a_bayes.csv")).unwrap();
    assert!(head.starts_with("pi,rmin\n"));
}

#[test]
fn sweep_cell_equal_to_base_is_close() {
    let out = dpb(&[
        "sweep",
        "--base",
        "sgm:sigma=0.54,p=0.01,steps=500",
        "--p-values",
        "0.01",
        "--steps-values",
        "500",
        "--grid-size",
        "1001",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut r = csv::Reader::from_reader(&out.stdout[..]);
    let header = r.headers().unwrap().clone();
    assert_eq!(&header[0], "p");
    assert_eq!(&header[1], "steps");
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let col = |name: &str| -> f64 {
        let i = header.iter().position(|h| h == name).unwrap();
        rows[0][i].parse().unwrap()
    };
    assert!(col("delta_base_target") < 2e-3);
    assert!(col("delta_target_base") < 2e-3);
    assert!(col("calibration_error") <= 1e-5);
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = [
        "compare",
        "gaussian:mu=0.7",
        "laplace:mu=0.4",
        "--grid-size",
        "3001",
    ];
    let free = dpb(&args);
    let capped = Command::new(env!("CARGO_BIN_EXE_dpb"))
        .args(args)
        .env("DPB_THREADS", "1")
        .output()
        .unwrap();
    assert!(capped.status.success());
    assert_eq!(free.stdout, capped.stdout);
}
