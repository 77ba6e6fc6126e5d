use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use realmask::walk::{coin_x, masking_schedule, CoinLayer, Layer};

fn realmask(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_realmask")).args(args).output().expect("spawn realmask")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).expect("valid json")
}

#[test]
fn fig3_outputs_are_byte_identical_for_a_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        stdout(&realmask(&["fig3", "--seed", "7", "--out", dir.to_str().unwrap()]));
    }
    for name in ["fig3.json", "fig3.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let csv = fs::read_to_string(a.path().join("fig3.csv")).unwrap();
    assert!(csv.starts_with("probe,fidelity,"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn different_seeds_give_different_counts() {
    let a = stdout(&realmask(&["fig4", "--seed", "1"]));
    let b = stdout(&realmask(&["fig4", "--seed", "2"]));
    assert_ne!(a, b);
}

#[test]
fn reports_carry_the_required_fields() {
    let v = json(&stdout(&realmask(&["fig5", "--seed", "3", "--phi-grid", "0,90"])));
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        for key in ["experiment", "target", "estimate", "error", "error_kind", "N", "shots", "seed", "noise_p"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
        assert_eq!(r["seed"], 3);
        assert_eq!(r["shots"], 10_000);
    }
}

#[test]
fn analytic_fig5_follows_cosine_without_noise() {
    let v = json(&stdout(&realmask(&["fig5", "--analytic", "--noise-p", "0", "--phi-grid", "0,30,60,90"])));
    for row in v["rows"].as_array().unwrap() {
        let est = row["concurrence_est"].as_f64().unwrap();
        let cos = row["theory_cos"].as_f64().unwrap();
        assert!((est - cos.abs()).abs() < 1e-9, "{row}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 11\nshots_per_setting = 500\nnoise_p = 0.02\n").unwrap();
    let v = json(&stdout(&realmask(&["fig4", "--config", cfg.to_str().unwrap(), "--seed", "12"])));
    let r = &v["reports"][0];
    assert_eq!(r["seed"], 12);
    assert_eq!(r["shots"], 500);
    assert_eq!(r["noise_p"], 0.02);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "sede = 1\n").unwrap();
    let out = realmask(&["fig3", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_range_noise_is_an_error() {
    let out = realmask(&["fig3", "--noise-p", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise_p"));
}

#[test]
fn equiv_passes_on_builtin_schedule() {
    let v = json(&stdout(&realmask(&["equiv"])));
    assert_eq!(v["passed"], true);
    assert!(v["max_infidelity"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn equiv_round_trips_a_saved_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walk.json");
    masking_schedule().save(&path).unwrap();
    let v = json(&stdout(&realmask(&["equiv", "--schedule", path.to_str().unwrap()])));
    assert_eq!(v["passed"], true);
}

fn corrupted_schedule(path: &Path) {
    let mut s = masking_schedule();
    s.name = "corrupted".into();
    let last = s.layers.len() - 1;
    let mut coins: Vec<_> = match &s.layers[last] {
        Layer::Coins(c) => c.coins().iter().map(|(&p, m)| (p, m.clone())).collect(),
        Layer::Translate => panic!("expected a coin layer"),
    };
    coins[0].1 = coin_x();
    s.layers[last] = Layer::Coins(CoinLayer::new(coins).unwrap());
    s.save(path).unwrap();
}

#[test]
fn equiv_fails_with_exit_code_one_on_a_wrong_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    corrupted_schedule(&path);
    let out = realmask(&["equiv", "--schedule", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(v["passed"], false);
}

#[test]
fn angles_for_uniform_amplitudes_and_phase() {
    let v = json(&stdout(&realmask(&["angles", "--amplitudes", "1,1,1,1", "--phi-deg", "90"])));
    let p = &v["preparation"];
    assert_eq!((p["h1"].as_f64(), p["h2"].as_f64(), p["h3"].as_f64()), (Some(22.5), Some(22.5), Some(67.5)));
    assert_eq!(v["phase_preparation"]["h2"], 45.0);
    assert_eq!(v["q1"], 45.0);
}

#[test]
fn angles_for_computational_basis_are_zero() {
    let v = json(&stdout(&realmask(&["angles", "--setting", "ZZ"])));
    for k in ["q2", "h4", "q3", "h5"] {
        assert_eq!(v["measurement"][k], 0.0, "{k}");
    }
}

#[test]
fn angles_rejects_bad_input() {
    assert_eq!(realmask(&["angles"]).status.code(), Some(2));
    assert_eq!(realmask(&["angles", "--amplitudes", "1,0,0"]).status.code(), Some(2));
    assert_eq!(realmask(&["angles", "--setting", "QQ"]).status.code(), Some(2));
}
