//! End-to-end checks of the `legacy-forge` binary: exit codes, config
//! loading, and report recomputation.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_legacy-forge"))
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/corpus")
}

fn write_stub_checker(dir: &Path) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join("checker_ok.sh");
    std::fs::write(&path, "#!/bin/sh\necho 'VERIFICATION SUCCESSFUL'\nexit 0\n").unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

const SUM_RANGE_TESTS: &str = "\
void test_sum_forward(void) {
    TENX_ASSERT(sum_range(1, 3) == 6);
}
void test_sum_swapped(void) {
    TENX_ASSERT(sum_range(3, 1) == 6);
}
";

fn write_script(script_root: &Path, target: &str, responses: &[String]) {
    let dir = script_root.join(target);
    std::fs::create_dir_all(&dir).unwrap();
    for (i, r) in responses.iter().enumerate() {
        std::fs::write(dir.join(format!("{i:03}.txt")), r).unwrap();
    }
}

fn steady_script(code: &str) -> Vec<String> {
    let mut out = Vec::new();
    for _ in 0..4 {
        out.push(format!("```c\n{code}```\n"));
        out.push("RATING: 8\nPLAN: keep\n".to_string());
    }
    out
}

fn write_config(dir: &Path, checker: &Path, script_root: &Path, out_dir: &Path) -> PathBuf {
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            r#"
source_roots = ["{corpus}"]
targets = ["sum_range"]
output_dir = "{out}"

[verifier]
executable = "{checker}"
timeout_secs = 5

[backend]
kind = "scripted"
script_dir = "{scripts}"
"#,
            corpus = corpus_dir().canonicalize().unwrap().display(),
            out = out_dir.display(),
            checker = checker.display(),
            scripts = script_root.display(),
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn run_exits_zero_when_all_targets_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let checker = write_stub_checker(tmp.path());
    let script_root = tmp.path().join("scripts");
    write_script(&script_root, "sum_range", &steady_script(SUM_RANGE_TESTS));
    let out_dir = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &checker, &script_root, &out_dir);

    let output = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(output.status.code(), Some(0), "stdout:\n{stdout}");
    assert!(stdout.contains("sum_range"));
    assert!(out_dir.join("summary.json").exists());
    assert!(out_dir.join("targets.csv").exists());
    assert!(out_dir.join("sum_range/sum_range_mockup.c").exists());
    assert!(out_dir.join("sum_range/sum_range_mockup.map.json").exists());
}

#[test]
fn run_exits_two_when_a_target_never_compiles() {
    let tmp = tempfile::tempdir().unwrap();
    let checker = write_stub_checker(tmp.path());
    let script_root = tmp.path().join("scripts");
    let broken: Vec<String> = (0..8)
        .map(|_| "```c\nvoid test_x(void) { TENX_ASSERT(no_such_fn() == 0); }\n```\n".to_string())
        .collect();
    write_script(&script_root, "sum_range", &broken);
    let out_dir = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &checker, &script_root, &out_dir);

    let output = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn run_exits_one_on_fatal_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "this is not valid toml [\n").unwrap();
    let output = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
}

#[test]
fn report_recomputes_from_session_records() {
    let tmp = tempfile::tempdir().unwrap();
    let checker = write_stub_checker(tmp.path());
    let script_root = tmp.path().join("scripts");
    write_script(&script_root, "sum_range", &steady_script(SUM_RANGE_TESTS));
    let out_dir = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &checker, &script_root, &out_dir);

    let run_out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(run_out.status.code(), Some(0));
    let summary_before = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();

    let rep_out = bin().args(["report", "--out"]).arg(&out_dir).output().unwrap();
    assert_eq!(rep_out.status.code(), Some(0));
    let summary_after = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    assert_eq!(summary_before, summary_after);
    assert!(String::from_utf8_lossy(&rep_out.stdout).contains("sum_range"));
}

#[test]
fn report_errors_on_empty_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let output = bin().args(["report", "--out"]).arg(tmp.path()).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn cli_overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let checker = write_stub_checker(tmp.path());
    let script_root = tmp.path().join("scripts");
    // config selects a target we will override away; max-iter drops to 1
    let mut responses = Vec::new();
    responses.push(format!("```c\n{SUM_RANGE_TESTS}```\n"));
    responses.push("RATING: 8\nPLAN: keep\n".to_string());
    write_script(&script_root, "sum_range", &responses);
    let out_dir = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &checker, &script_root, &out_dir);

    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--targets", "sum_range", "--max-iter", "1"])
        .args(["--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let session =
        std::fs::read_to_string(out_dir.join("sum_range/session.json")).unwrap();
    let record: serde_json::Value = serde_json::from_str(&session).unwrap();
    assert_eq!(record["entries"].as_array().unwrap().len(), 1);
}

#[test]
fn relative_paths_in_config_resolve_against_the_config_dir() {
    // regression: a relative output_dir plus per-target working
    // directories used to break binary and checker spawning
    let tmp = tempfile::tempdir().unwrap();
    write_stub_checker(tmp.path());
    let script_root = tmp.path().join("scripts");
    write_script(&script_root, "sum_range", &steady_script(SUM_RANGE_TESTS));
    std::fs::create_dir_all(tmp.path().join("src")).unwrap();
    std::fs::copy(
        corpus_dir().join("order.c"),
        tmp.path().join("src/order.c"),
    )
    .unwrap();
    std::fs::write(
        tmp.path().join("run.toml"),
        r#"
source_roots = ["src"]
targets = ["sum_range"]
output_dir = "out"

[verifier]
executable = "checker_ok.sh"
timeout_secs = 5

[backend]
kind = "scripted"
script_dir = "scripts"
"#,
    )
    .unwrap();

    let output = bin()
        .args(["run", "--config", "run.toml"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(output.status.code(), Some(0), "stdout:\n{stdout}");
    assert!(stdout.contains("100.0% coverage"), "stdout:\n{stdout}");
    let session =
        std::fs::read_to_string(tmp.path().join("out/sum_range/session.json")).unwrap();
    assert!(session.contains("\"final_status\": \"completed\""));
}
