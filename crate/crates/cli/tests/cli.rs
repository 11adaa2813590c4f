use std::path::Path;
use std::process::{Command, Output};

fn spinxfer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinxfer"))
        .args(args)
        .env_remove("SPINXFER_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn missing_config_is_a_validation_error() {
    let out = spinxfer(&["free-sweep-n", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(
        err.contains("missing.toml") && err.contains("cannot read"),
        "{err}"
    );
}

#[test]
fn help_exits_zero() {
    let out = spinxfer(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let out = spinxfer(&["adiabatic-run", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("--alpha-scale"));
}

#[test]
fn unknown_flag_is_named() {
    let out = spinxfer(&["free-sweep-n", "--bogus", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--bogus"));
}

#[test]
fn invalid_value_names_the_key() {
    let out = spinxfer(&["adiabatic-run", "--f-target", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("f_target"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "n = 5\nsigma_jj = 0.1\n").unwrap();
    let out = spinxfer(&["free-sweep-n", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sigma_jj"), "{}", stderr(&out));
}

#[test]
fn config_kind_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "kind = \"adiabatic-run\"\n").unwrap();
    let out = spinxfer(&["free-sweep-n", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("`kind`"));
}

#[test]
fn too_many_failed_realizations_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinxfer(&[
        "free-sweep-n",
        "--n",
        "8",
        "--sigma-j2",
        "1",
        "--sigma-b2",
        "4",
        "--b-field",
        "2",
        "--realizations",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("realizations failed"));
}

fn compensation_run(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "compensation-scan",
        "--n",
        "6",
        "--sigma-j2",
        "0.1",
        "--sigma-b2",
        "0.5",
        "--realizations",
        "6",
        "--deviations",
        "0,1e-3,1e-2",
        "--emit-plot-data",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    spinxfer(&args)
}

#[test]
fn compensation_scan_writes_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = compensation_run(dir.path(), &["--seed", "11"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let data = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert!(!data.contains('\r'));
    let mut lines = data.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("n,b_field,deviation,ok,failed,delta_b_star_mean,"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    // floats carry 17 significant digits
    let field = rows[0].split(',').nth(1).unwrap();
    assert_eq!(field, "5.0000000000000000e0");

    let jsonl = std::fs::read_to_string(dir.path().join("realizations.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 18);
    assert!(dir.path().join("plot_f_max_vs_deviation.csv").exists());

    let m = manifest(dir.path());
    assert_eq!(m["master_seed"], 11);
    assert_eq!(m["kind"], "compensation-scan");
    assert_eq!(m["config"]["realizations"], 6);
    assert_eq!(m["failed"], 0);
    assert_eq!(m["points"][2]["deviation_percent_of_field"], 0.2);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(compensation_run(a.path(), &["--workers", "1"])
        .status
        .success());
    assert!(compensation_run(b.path(), &["--workers", "4"])
        .status
        .success());
    for file in [
        "data.csv",
        "realizations.jsonl",
        "plot_f_max_vs_deviation.csv",
    ] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
}

#[test]
fn seed_environment_variable_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_spinxfer"));
        cmd.args([
            "monte-carlo-fidelity",
            "--n",
            "5",
            "--sigma-j2",
            "0.05",
            "--realizations",
            "2",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .args(extra)
        .env_remove("SPINXFER_SEED");
        if let Some(v) = env {
            cmd.env("SPINXFER_SEED", v);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        manifest(dir.path())["master_seed"].as_u64().unwrap()
    };
    assert_eq!(run(&[], None), 0);
    assert_eq!(run(&[], Some("77")), 77);
    assert_eq!(run(&["--seed", "5"], Some("77")), 5);

    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spinxfer"));
    let out = cmd
        .args(["monte-carlo-fidelity", "--n", "5"])
        .env("SPINXFER_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("SPINXFER_SEED"));
}

#[test]
fn adiabatic_run_writes_trajectory_and_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinxfer(&[
        "adiabatic-run",
        "--n",
        "4",
        "--b-field",
        "3",
        "--beta",
        "10",
        "--realizations",
        "1",
        "--samples",
        "200",
        "--emit-plot-data",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let header = traj.lines().next().unwrap();
    assert_eq!(
        header,
        "time,re_c1,im_c1,re_c2,im_c2,re_c3,im_c3,re_c4,im_c4,occ_first,occ_last,eps"
    );
    assert!(traj.lines().count() >= 201);
    let plan: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep_plan.json")).unwrap())
            .unwrap();
    assert_eq!(plan["beta"], 10.0);
    assert_eq!(plan["side"], "sender");
    assert!(dir.path().join("plot_fidelity_vs_time.csv").exists());
}

#[test]
fn config_file_values_are_used_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "kind = \"leakage-vs-field\"\nn = 5\nb_grid = [3.0, 4.0]\nmaster_seed = 9\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = spinxfer(&[
        "leakage-vs-field",
        "--config",
        path.to_str().unwrap(),
        "--n-list",
        "4-5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let m = manifest(&out_dir);
    assert_eq!(m["master_seed"], 9);
    assert_eq!(m["config"]["n_list"], serde_json::json!([4, 5]));
    let data = std::fs::read_to_string(out_dir.join("data.csv")).unwrap();
    assert_eq!(data.lines().count(), 5);
}
