use std::fs;
use std::path::Path;
use std::process::Command;

use clayer::io::Checkpoint;
use serde_json::Value;

fn clayer(dir: &Path, config: &str, args: &[&str]) -> i32 {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_clayer"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    status.code().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

const SMALL: &str = r#"
[grid]
n_x = 16
n_y = 17

[integrator]
dt = 0.02
t_end = 0.4
monitor_every = 2
checkpoint_every = 10
"#;

#[test]
fn zero_preset_gives_zero_energies() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}\n[initial]\npreset = \"zero\"\n");
    assert_eq!(clayer(tmp.path(), &cfg, &["simulate"]), 0);
    let mut rdr = csv::Reader::from_path(tmp.path().join("out/report.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let expected = "t,Es,Es_half,Es_one,Ds0,Ds_half,Ds_one,Ds_threehalf,tau_t,tau_empirical,decay_slack,master_slack";
    assert_eq!(headers.iter().collect::<Vec<_>>().join(","), expected);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        for col in 1..8 {
            assert_eq!(rec[col].parse::<f64>().unwrap(), 0.0);
        }
        assert_eq!(&rec[9], "");
        rows += 1;
    }
    assert_eq!(rows, 11);
    let s = summary(tmp.path());
    assert_eq!(s["schema"], "clayer/1");
    assert_eq!(s["config"]["grid"]["n_x"], 16);
    assert_eq!(s["config"]["lemma"]["cases"], 1000);
    let cps: Vec<_> = fs::read_dir(tmp.path().join("out/checkpoints"))
        .unwrap()
        .collect();
    assert_eq!(cps.len(), 3);
}

#[test]
fn malformed_config_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        clayer(tmp.path(), "[grid]\nn_x = \"many\"", &["simulate"]),
        1
    );
    assert_eq!(clayer(tmp.path(), "unknown_key = 3", &["simulate"]), 1);
    assert_eq!(
        clayer(tmp.path(), "[integrator]\ndt = 0.0", &["simulate"]),
        1
    );
}

#[test]
fn divergence_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{}\n[initial]\npreset = \"random\"\namplitude = 1.0\nradius = 1.0\n",
        SMALL.replace(
            "checkpoint_every = 10",
            "checkpoint_every = 10\nmax_norm_guard = 1e-9"
        )
    );
    assert_eq!(clayer(tmp.path(), &cfg, &["simulate"]), 2);
    assert_eq!(summary(tmp.path())["exit_code"], 2);
}

#[test]
fn oversized_data_fails_smallness() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}\n[initial]\npreset = \"analytic\"\namplitude = 1.0\nradius = 1.5\n");
    assert_eq!(clayer(tmp.path(), &cfg, &["verify-theorem"]), 3);
    assert_eq!(summary(tmp.path())["results"]["smallness"]["passes"], false);
}

#[test]
fn small_data_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{}\n[initial]\npreset = \"analytic\"\namplitude = 1.0\nradius = 1.5\nsmallness_fraction = 0.5\n",
        SMALL.replace("n_y = 17", "n_y = 33")
    );
    assert_eq!(clayer(tmp.path(), &cfg, &["verify-theorem"]), 0);
    let s = summary(tmp.path());
    assert_eq!(s["results"]["decay"]["passes"], true);
    assert_eq!(s["results"]["constants"]["C_decay"], 64.0);
}

#[test]
fn identical_seed_gives_identical_csv() {
    let cfg = format!("{SMALL}\n[initial]\npreset = \"random\"\namplitude = 0.01\nradius = 1.0\n");
    let read = |seed: &str| {
        let tmp = tempfile::tempdir().unwrap();
        assert_eq!(clayer(tmp.path(), &cfg, &["simulate", "--seed", seed]), 0);
        fs::read(tmp.path().join("out/report.csv")).unwrap()
    };
    assert_eq!(read("7"), read("7"));
    assert_ne!(read("7"), read("8"));
}

#[test]
fn resume_from_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}\n[initial]\npreset = \"random\"\namplitude = 0.01\nradius = 1.0\n");
    assert_eq!(clayer(tmp.path(), &cfg, &["simulate"]), 0);
    let last = tmp.path().join("out/checkpoints/step_0000020.clayer");
    let cp = Checkpoint::load(&last).unwrap();
    assert_eq!(cp.step, 20);
    let resumed = format!(
        "{SMALL}\n[initial]\npreset = \"checkpoint\"\npath = {:?}\n",
        last.to_str().unwrap()
    );
    let tmp2 = tempfile::tempdir().unwrap();
    assert_eq!(clayer(tmp2.path(), &resumed, &["simulate"]), 0);
    let t_final = summary(tmp2.path())["results"]["t_final"].as_f64().unwrap();
    assert!((t_final - 0.8).abs() < 1e-12);
}

#[test]
fn lemma_suite() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        clayer(
            tmp.path(),
            "",
            &["verify-lemma", "--cases", "25", "--seed", "3"]
        ),
        0
    );
    let rows = csv::Reader::from_path(tmp.path().join("out/lemma_cases.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(rows, 25);
    assert_eq!(summary(tmp.path())["config"]["seed"], 3);
}

#[test]
fn scaling_suite() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(clayer(tmp.path(), "", &["verify-scaling"]), 0);
    let rows = csv::Reader::from_path(tmp.path().join("out/terms.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(rows, 80);
    assert_eq!(
        clayer(
            tmp.path(),
            "[scaling]\nsmall_values = [0.1, 0.01]",
            &["verify-scaling"]
        ),
        1
    );
}

#[test]
fn mms_needs_several_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "[mms]\nn_x = 8\nt_end = 0.1\ndts = [1e-3]\nn_ys = [17]\n";
    assert_eq!(clayer(tmp.path(), cfg, &["mms"]), 1);
    assert!(summary(tmp.path())["results"]["error"].is_string());
}
