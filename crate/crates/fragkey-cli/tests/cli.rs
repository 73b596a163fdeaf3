//! End-to-end tests of the `fragkey` binary: exit-code contract, seed
//! precedence, reproducible outputs, and the shape of each subcommand's
//! output. Sessions are kept small (4x4 patterns, nu=2) so the whole file
//! runs in seconds.

use std::path::Path;
use std::process::{Command, Output};

fn fragkey(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fragkey"));
    cmd.args(args).env_remove("FRAGKEY_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    fragkey(args).output().expect("binary should spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const SMALL: &[&str] = &[
    "run",
    "--users",
    "3",
    "--width",
    "4",
    "--height",
    "4",
    "--nu",
    "2",
    "--measurements",
    "640",
    "--ratio",
    "1:1",
    "--method",
    "sorting",
];

fn small_run(extra: &[&str]) -> Output {
    let mut args: Vec<&str> = SMALL.to_vec();
    args.extend_from_slice(extra);
    run(&args)
}

/// Same session shape but at a chosen sequence length (`--measurements`
/// cannot be passed twice).
fn small_run_n(measurements: &str, extra: &[&str]) -> Output {
    let mut args: Vec<&str> = SMALL.to_vec();
    let n_pos = args.iter().position(|a| *a == "--measurements").unwrap() + 1;
    args[n_pos] = measurements;
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn clean_run_is_authentic_and_exits_zero() {
    let out = small_run(&["--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("config: {"), "missing reproducibility line:\n{text}");
    assert!(text.contains("verdict: Authentic"), "{text}");
    assert!(text.contains("matches the server's expectation"), "{text}");
}

#[test]
fn detected_attack_exits_two() {
    // N=160 with half the buckets zeroed: this seed flips cells and the
    // synthesis catches it
    let out = small_run_n(
        "160",
        &["--seed", "8", "--attack", "zeroset", "--attack-fraction", "0.5"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("verdict: Attacked"));
}

#[test]
fn transcripts_are_byte_identical_for_equal_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let c = dir.path().join("c.json");
    assert!(small_run(&["--seed", "5", "--out", a.to_str().unwrap()]).status.success());
    assert!(small_run(&["--seed", "5", "--out", b.to_str().unwrap()]).status.success());
    assert!(small_run(&["--seed", "6", "--out", c.to_str().unwrap()]).status.success());
    let (a, b, c) = (
        std::fs::read(a).unwrap(),
        std::fs::read(b).unwrap(),
        std::fs::read(c).unwrap(),
    );
    assert_eq!(a, b, "same seed must give identical transcripts");
    assert_ne!(a, c, "different seeds must give different transcripts");
}

#[test]
fn keys_dir_gets_one_file_per_user() {
    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("keys");
    let out = small_run(&["--seed", "5", "--keys-dir", keys.to_str().unwrap()]);
    assert!(out.status.success());
    for user in 0..3 {
        let path = keys.join(format!("user{user}.key"));
        let contents = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("missing {}: {e}", path.display()));
        assert!(contents.trim().chars().all(|c| c.is_ascii_uppercase()));
    }
}

#[test]
fn seed_env_is_a_fallback_and_the_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let flag = dir.path().join("flag.json");
    let env = dir.path().join("env.json");
    let both = dir.path().join("both.json");

    assert!(small_run(&["--seed", "5", "--out", flag.to_str().unwrap()]).status.success());

    let mut args: Vec<&str> = SMALL.to_vec();
    let env_s = env.to_str().unwrap();
    args.extend_from_slice(&["--out", env_s]);
    let out = fragkey(&args).env("FRAGKEY_SEED", "5").output().unwrap();
    assert!(out.status.success());

    let mut args: Vec<&str> = SMALL.to_vec();
    let both_s = both.to_str().unwrap();
    args.extend_from_slice(&["--seed", "5", "--out", both_s]);
    let out = fragkey(&args).env("FRAGKEY_SEED", "999").output().unwrap();
    assert!(out.status.success());

    let flag = std::fs::read(flag).unwrap();
    assert_eq!(flag, std::fs::read(env).unwrap(), "env seed must match the flag");
    assert_eq!(flag, std::fs::read(both).unwrap(), "flag must beat the env seed");
}

#[test]
fn bad_env_seed_is_an_error() {
    let out = fragkey(SMALL).env("FRAGKEY_SEED", "not-a-number").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FRAGKEY_SEED"));
}

#[test]
fn sweep_prints_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let dat = dir.path().join("sweep.dat");
    let out = run(&[
        "sweep",
        "--nu",
        "2",
        "--width",
        "4",
        "--height",
        "4",
        "--ratios",
        "1:1",
        "--from",
        "500",
        "--to",
        "500",
        "--trials",
        "3",
        "--seed",
        "9",
        "--dat",
        dat.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("ratio,percent,n_measurements,successes,trials,rate"), "{text}");
    // 500% of 4x4 at nu=2 is 320 measurements: recovery is exact
    assert!(text.contains("1:1,500,320,3,3,1"), "{text}");
    assert!(std::fs::read_to_string(dat).unwrap().contains("# series 1:1"));
}

#[test]
fn attacks_table_has_five_kinds_and_a_control() {
    let dir = tempfile::tempdir().unwrap();
    let transcripts = dir.path().join("transcripts");
    let out = run(&[
        "attacks",
        "--trials",
        "2",
        "--fraction",
        "0.5",
        "--seed",
        "1",
        "--measurements",
        "200",
        "--transcripts-dir",
        transcripts.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for kind in ["disorder", "forge", "tamper", "discard", "zeroset"] {
        assert!(text.contains(&format!("{kind},2,")), "missing row for {kind}:\n{text}");
        assert!(
            transcripts.join(format!("{kind}.json")).exists(),
            "missing example transcript for {kind}"
        );
    }
    // the oversampled no-attack control stays clean
    assert!(text.contains("control,2,0,2"), "{text}");
    assert!(transcripts.join("control.json").exists());
}

#[test]
fn export_mirrors_the_stored_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    assert!(small_run(&["--seed", "5", "--out", path.to_str().unwrap()]).status.success());
    let out = run(&["export", "--transcript", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("channel discipline: clean"), "{text}");
    assert!(text.contains("verdict: Authentic"), "{text}");

    let attacked = dir.path().join("attacked.json");
    assert_eq!(
        small_run_n(
            "160",
            &[
                "--seed",
                "8",
                "--attack",
                "zeroset",
                "--attack-fraction",
                "0.5",
                "--out",
                attacked.to_str().unwrap(),
            ],
        )
        .status
        .code(),
        Some(2)
    );
    let out = run(&["export", "--transcript", attacked.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("evidence:"));
}

#[test]
fn config_file_reproduces_the_flag_run() {
    let dir = tempfile::tempdir().unwrap();
    let by_flags = dir.path().join("flags.json");
    let out = small_run(&["--seed", "5", "--out", by_flags.to_str().unwrap()]);
    assert!(out.status.success());

    // the printed config line is itself a loadable configuration
    let text = stdout(&out);
    let config_json = text
        .lines()
        .find_map(|l| l.strip_prefix("config: "))
        .expect("run must print its config line");
    let config_path = dir.path().join("session.json");
    std::fs::write(&config_path, config_json).unwrap();

    let by_file = dir.path().join("file.json");
    let out = run(&[
        "run",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        by_file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(by_flags).unwrap(),
        std::fs::read(by_file).unwrap(),
        "a run rebuilt from its printed config line must match byte for byte"
    );
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(run(&["run", "--ratio", "nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["run", "--users", "0"]).status.code(), Some(1));
    let missing = run(&["export", "--transcript", "/nonexistent/t.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&missing.stderr).is_empty());
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("Exit codes"));
}

#[test]
fn attack_flags_require_an_attack_kind() {
    let out = run(&["run", "--attack-fraction", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}
