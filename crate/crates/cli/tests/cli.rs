use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stochmem(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochmem"))
        .args(args)
        .current_dir(cwd)
        .env_remove("STOCHMEM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn solve_prints_the_big_match_value() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("v.csv");
    let out = stochmem(
        &["solve", "--lambda", "0.1", "--csv", csv.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(csv).unwrap();
    let live = text.lines().find(|l| l.contains(",live,")).unwrap();
    let v: f64 = live.split(',').nth(2).unwrap().parse().unwrap();
    assert!((v - 0.5).abs() < 1e-9);
}

#[test]
fn invalid_arguments_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["solve", "--lambda", "1.5"][..],
        &["solve", "--lambda", "0.1", "--bogus"],
        &["validate-constants", "--threshold", "10"],
        &["impossibility", "--sigma", "always:1", "--delta", "0"],
        &[
            "simulate",
            "--horizon",
            "10",
            "--replications",
            "2",
            "--adversary",
            "nobody",
        ],
    ] {
        let out = stochmem(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn iteration_cap_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("swap.json");
    let game = r#"{
        "states": ["a", "b"],
        "actions1": ["x"],
        "actions2": ["y"],
        "payoff": [[[1.0]], [[0.0]]],
        "transition": [[[[0.0, 1.0]]], [[[1.0, 0.0]]]],
        "initial_state": "a"
    }"#;
    fs::write(&path, game).unwrap();
    let args = [
        "solve",
        "--game",
        path.to_str().unwrap(),
        "--lambda",
        "0.001",
        "--max-iterations",
        "5",
    ];
    let out = stochmem(&args, dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn malformed_game_file_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("game.json");
    fs::write(
        &path,
        "{\n  \"states\": [\"s\"],\n  \"actions1\": [\"a\"\n  \"actions2\": []\n}\n",
    )
    .unwrap();
    let out = stochmem(
        &["solve", "--game", path.to_str().unwrap(), "--lambda", "0.5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn inconsistent_game_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("game.json");
    let game = r#"{
        "states": ["s", "t"],
        "actions1": ["a"],
        "actions2": ["b"],
        "payoff": [[[0.0]], [[1.0]]],
        "transition": [[[[0.5, 0.6]]], [[[0.0]]]],
        "initial_state": "u"
    }"#;
    fs::write(&path, game).unwrap();
    let out = stochmem(
        &["solve", "--game", path.to_str().unwrap(), "--lambda", "0.5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("initial") && err.contains("sum"), "{err}");
}

#[test]
fn flags_override_config_and_env_sets_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "strategy = \"always:1\"\nadversary = \"always-0\"\nhorizon = 50\nreplications = 3\nseed = 4\n",
    )
    .unwrap();
    let env_out = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_stochmem"))
        .args(["simulate", "--config", config.to_str().unwrap(), "--horizon", "20"])
        .current_dir(dir.path())
        .env("STOCHMEM_OUT_DIR", &env_out)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = fs::read_to_string(env_out.join("summary.csv")).unwrap();
    assert!(summary.contains("horizon,20\n"), "{summary}");
    assert!(summary.contains("replications,3\n"));
    assert!(summary.contains("base_seed,4\n"));
    let stats = fs::read_to_string(env_out.join("stats.csv")).unwrap();
    // Always continuing against always-0 earns 1 every stage.
    let last = stats.lines().last().unwrap();
    assert!(last.starts_with("20,1.0000000000000000e0,"), "{stats}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "horizons = 5\n").unwrap();
    let out = stochmem(&["simulate", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("horizons"));
}

#[test]
fn impossibility_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = stochmem(
        &[
            "impossibility",
            "--sigma",
            "always:1",
            "--delta",
            "0.25",
            "--horizon",
            "200",
            "--replications",
            "50",
            "--out-dir",
            "imp",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["adversary.json", "certificate.json", "certificate.csv"] {
        assert!(dir.path().join("imp").join(name).exists(), "{name}");
    }
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("imp/certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["certificate_holds"], serde_json::Value::Bool(true));
}

#[test]
fn trace_writes_one_row_per_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = stochmem(
        &[
            "trace",
            "--horizon",
            "30",
            "--replications",
            "2",
            "--seed",
            "1",
            "--out-dir",
            "tr",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let entries: Vec<_> = fs::read_dir(dir.path().join("tr")).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let text = fs::read_to_string(entries[0].as_ref().unwrap().path()).unwrap();
    assert_eq!(text.lines().next(), Some("replication,t,z,k,i,j,x"));
    assert_eq!(text.lines().count(), 1 + 2 * 30);
}
