use std::path::Path;
use std::process::Command;

use drpp_harness::experiment::ARTIFACTS;

const BIN: &str = env!("CARGO_BIN_EXE_drpp");

fn config(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn drpp(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("spawning drpp")
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn minimal_run_writes_exactly_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = drpp(&["--out", out.to_str().unwrap(), "run", &config("quick.toml")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut want: Vec<String> = ARTIFACTS.iter().map(|s| s.to_string()).collect();
    want.sort();
    assert_eq!(listing(&out), want);

    let gap = std::fs::read_to_string(out.join("param_gap.csv")).unwrap();
    assert_eq!(
        gap.lines().next().unwrap(),
        "epsilon,algorithm,iteration,param_gap,param_gap_scaled,robust_risk,plain_loss,accuracy,detection_rate"
    );
    // every line of the run log is an object carrying the config hash
    let log = std::fs::read_to_string(out.join("run_log.jsonl")).unwrap();
    let mut last: Option<(String, u64)> = None;
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["config_hash"].as_str().unwrap().len(), 16);
        let key = format!("{}/{}/{}", v["cell"], v["algorithm"], v["lambda_c"]);
        let it = v["iteration"].as_u64().unwrap();
        if let Some((k, prev)) = &last {
            if *k == key {
                assert_eq!(it, prev + 1);
            }
        }
        last = Some((key, it));
    }
}

#[test]
fn overrides_and_seed_flag_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = drpp(&[
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
        "run",
        &config("quick.toml"),
        "--outer_iters=2",
        "--sweep.epsilons=[0.1, 0.2]",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let gap = std::fs::read_to_string(out.join("param_gap.csv")).unwrap();
    assert!(gap.lines().skip(1).all(|l| l.starts_with("0.1,") || l.starts_with("0.2,")));
    assert!(gap.lines().skip(1).all(|l| l.split(',').nth(2).unwrap().parse::<u32>().unwrap() <= 2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(drpp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(drpp(&["run", &config("quick.toml"), "--threads"]).status.code(), Some(2));
    assert_eq!(drpp(&["--nope", "validate", "linear"]).status.code(), Some(2));
}

#[test]
fn failures_exit_1() {
    assert_eq!(drpp(&["run", "/nonexistent.toml"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    // a multiplier this small breaks concavity of the inner problem
    let o = drpp(&["--out", out.to_str().unwrap(), "run", &config("quick.toml"), "--penalty.lambda_c=0.2", "--sweep.lambda_c=[]"]);
    assert_eq!(o.status.code(), Some(1));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("FAILED"));
    let log = std::fs::read_to_string(out.join("run_log.jsonl")).unwrap();
    assert!(log.lines().any(|l| l.contains("\"error\":\"")));
}

#[test]
fn constants_prints_the_report() {
    let o = drpp(&["constants", &config("credit.toml")]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for key in ["kappa_rm = ", "kappa_gd = ", "eta_bound = ", "subopt_param_bound = ", "subopt_risk_bound = "] {
        assert_eq!(text.matches(key).count(), 4, "{key}");
    }
}

#[test]
fn validate_quadratic_passes() {
    let o = drpp(&["validate", "quadratic"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8(o.stdout).unwrap().contains(", 0 failed"));
}

#[test]
fn compare_prints_a_row_per_epsilon() {
    let o = drpp(&["compare", &config("quick.toml"), "--model.loss={kind = \"instance\"}"]);
    // the quadratic instance is unlabeled: detection rates are NaN but the table prints
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
}

#[test]
fn sweep_writes_one_directory_per_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = drpp(&["--out", out.to_str().unwrap(), "sweep", &config("quick.toml"), "--sweep.lambda_c=[20.0, 50.0]"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(listing(&out), vec!["lambda_c_20", "lambda_c_50"]);
}
