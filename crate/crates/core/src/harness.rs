//! Test harness: materializes generated tests against a mockup, compiles
//! with coverage instrumentation, executes each case in its own process,
//! comments out crashing cases under a `// CRASH` marker, and parses the
//! coverage tool's annotated-source report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::c_frontend::{parse_source, SymbolKind};
use crate::mockup::MockupUnit;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("no test_* function found in generated code")]
    NoTestsFound,
    #[error("generated code is not parseable C (line {line}): {message}")]
    CodeUnparsable { line: u32, message: String },
    #[error("compiler executable not found: {0}")]
    CompilerMissing(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, thiserror::Error)]
pub enum CoverageError {
    #[error("coverage tool failed: {stderr}")]
    CoverageToolFailed { stderr: String },
    #[error("no coverage data present (no test case has executed)")]
    NoCoverageData,
    #[error("coverage tool executable not found: {0}")]
    CoverageToolMissing(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestCaseStatus {
    Untried,
    Passed,
    FailedAssert,
    Crashed,
    DisabledCrash,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub name: String,
    /// Full C text of the test function.
    pub body: String,
    pub status: TestCaseStatus,
    pub crash_signal: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TestSuite {
    pub target: String,
    pub cases: Vec<TestCase>,
    pub harness_source: String,
    pub iteration: u32,
    /// Non-test top-level support code carried from the generated block.
    pub extra_support: String,
    /// Lines 1..=N of `harness_source` are the mockup.
    pub mockup_line_count: u32,
}

pub const CRASH_MARKER: &str = "// CRASH";

const ASSERT_MACRO: &str = "#define TENX_ASSERT(cond) do { if (!(cond)) { \
fprintf(stderr, \"TENX_ASSERT failed at %s:%d: %s\\n\", __FILE__, __LINE__, #cond); \
exit(1); } } while (0)";

impl TestSuite {
    pub fn harness_file_name(&self) -> String {
        format!("{}_test.c", self.target)
    }

    pub fn active_cases(&self) -> impl Iterator<Item = &TestCase> {
        self.cases
            .iter()
            .filter(|c| c.status != TestCaseStatus::DisabledCrash)
    }

    pub fn disabled_cases(&self) -> impl Iterator<Item = &TestCase> {
        self.cases
            .iter()
            .filter(|c| c.status == TestCaseStatus::DisabledCrash)
    }
}

/// Split generated code into test cases (functions named `test_*`) and
/// support code, then synthesize a dispatching harness over the mockup.
/// Disabled cases from the prior iteration's suite are carried forward,
/// still commented out.
pub fn build_harness(
    mockup: &MockupUnit,
    generated_code: &str,
    iteration: u32,
    prior: Option<&TestSuite>,
) -> Result<TestSuite, HarnessError> {
    if generated_code.trim().is_empty() {
        return Err(HarnessError::NoTestsFound);
    }
    let parsed = parse_source(generated_code, "generated.c").map_err(|e| match e {
        crate::c_frontend::FrontendError::ParseFailed { line, message } => {
            HarnessError::CodeUnparsable { line, message }
        }
        other => HarnessError::CodeUnparsable {
            line: 1,
            message: other.to_string(),
        },
    })?;
    let gen_lines: Vec<&str> = parsed.preprocessed_text.lines().collect();

    let mut carried: Vec<TestCase> = prior
        .map(|p| p.disabled_cases().cloned().collect())
        .unwrap_or_default();
    let mut taken: std::collections::BTreeSet<String> =
        carried.iter().map(|c| c.name.clone()).collect();

    let mut new_cases: Vec<TestCase> = Vec::new();
    let mut support = String::new();
    for sym in &parsed.symbols {
        let text = gen_lines
            [(sym.span.start_line as usize - 1)..(sym.span.end_line as usize)]
            .join("\n");
        let is_test = sym.kind == SymbolKind::Function
            && sym.is_definition
            && sym.name.starts_with("test_");
        if is_test {
            let mut name = sym.name.clone();
            let mut body = text;
            if taken.contains(&name) {
                let mut candidate = format!("{name}_v{iteration}");
                let mut k = 1;
                while taken.contains(&candidate) {
                    candidate = format!("{name}_v{iteration}_{k}");
                    k += 1;
                }
                body = body.replacen(&name, &candidate, 1);
                name = candidate;
            }
            taken.insert(name.clone());
            new_cases.push(TestCase {
                name,
                body,
                status: TestCaseStatus::Untried,
                crash_signal: None,
            });
        } else {
            support.push_str(&text);
            support.push('\n');
        }
    }
    if new_cases.is_empty() {
        return Err(HarnessError::NoTestsFound);
    }

    let mut cases = new_cases;
    cases.append(&mut carried);

    let mut suite = TestSuite {
        target: mockup.target.clone(),
        cases,
        harness_source: String::new(),
        iteration,
        extra_support: support,
        mockup_line_count: mockup.line_count(),
    };
    suite.harness_source = render_harness(&suite, mockup);
    Ok(suite)
}

/// Render the disabled form of a case: marker line, then every body line
/// behind a uniform `// ` prefix so the original text is recoverable.
fn render_disabled(case: &TestCase) -> String {
    let signal = case.crash_signal.as_deref().unwrap_or("crash");
    let mut out = format!("{CRASH_MARKER}: {signal}\n");
    for line in case.body.lines() {
        out.push_str("// ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Inverse of the disabled-case rendering: drop the marker line and strip
/// the `// ` prefix from each following line.
pub fn strip_crash_comment(block: &str) -> String {
    let mut out = String::new();
    for line in block.lines() {
        if line.starts_with(CRASH_MARKER) {
            continue;
        }
        let restored = line.strip_prefix("// ").unwrap_or(line);
        out.push_str(restored);
        out.push('\n');
    }
    // the rendered block is newline-terminated; the original body was not
    if out.ends_with('\n') {
        out.pop();
    }
    out
}

fn render_harness(suite: &TestSuite, mockup: &MockupUnit) -> String {
    let mut out = String::new();
    out.push_str(&mockup.source_text);
    out.push('\n');
    out.push_str(ASSERT_MACRO);
    out.push('\n');
    if !suite.extra_support.trim().is_empty() {
        out.push('\n');
        out.push_str(suite.extra_support.trim_end_matches('\n'));
        out.push('\n');
    }
    for case in suite.active_cases() {
        out.push('\n');
        out.push_str(&case.body);
        out.push('\n');
    }
    for case in suite.disabled_cases() {
        out.push('\n');
        out.push_str(&render_disabled(case));
    }
    out.push('\n');
    out.push_str("int main(int argc, char **argv) {\n");
    out.push_str("    if (argc < 2) {\n");
    out.push_str("        fprintf(stderr, \"usage: %s <test-name>\\n\", argv[0]);\n");
    out.push_str("        return 2;\n    }\n");
    for case in suite.active_cases() {
        out.push_str(&format!(
            "    if (strcmp(argv[1], \"{0}\") == 0) {{ {0}(); return 0; }}\n",
            case.name
        ));
    }
    out.push_str("    fprintf(stderr, \"unknown test: %s\\n\", argv[1]);\n");
    out.push_str("    return 3;\n}\n");
    out
}

#[derive(Debug, Clone)]
pub struct CompilerConfig {
    pub command: String,
    pub flags: Vec<String>,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        CompilerConfig {
            command: "cc".to_string(),
            flags: vec![
                "-std=gnu99".to_string(),
                "-O0".to_string(),
                "--coverage".to_string(),
            ],
        }
    }
}

/// Compile failure is a value the loop recovers from, not an error.
#[derive(Debug, Clone)]
pub enum CompileOutcome {
    Compiled(PathBuf),
    CompileFailure { diagnostics: String },
}

/// Compile the harness with coverage instrumentation inside `work_dir`.
/// Stale coverage counters from earlier iterations are removed so each
/// report reflects the current suite only.
pub fn compile_suite(
    suite: &TestSuite,
    cfg: &CompilerConfig,
    work_dir: &Path,
) -> Result<CompileOutcome, HarnessError> {
    std::fs::create_dir_all(work_dir)?;
    let work_dir = &work_dir.canonicalize()?;
    let src_name = suite.harness_file_name();
    std::fs::write(work_dir.join(&src_name), &suite.harness_source)?;
    let bin_name = format!("{}_test", suite.target);
    let output = Command::new(&cfg.command)
        .args(&cfg.flags)
        .arg("-o")
        .arg(&bin_name)
        .arg(&src_name)
        .current_dir(work_dir)
        .stdin(Stdio::null())
        .output()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                HarnessError::CompilerMissing(cfg.command.clone())
            } else {
                HarnessError::Io(e)
            }
        })?;
    if !output.status.success() {
        return Ok(CompileOutcome::CompileFailure {
            diagnostics: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    clear_coverage_data(work_dir)?;
    Ok(CompileOutcome::Compiled(work_dir.join(bin_name)))
}

/// Remove accumulated `.gcda` counters in `work_dir`.
pub fn clear_coverage_data(work_dir: &Path) -> std::io::Result<()> {
    for entry in std::fs::read_dir(work_dir)? {
        let path = entry?.path();
        if path.extension().map(|e| e == "gcda").unwrap_or(false) {
            std::fs::remove_file(path)?;
        }
    }
    Ok(())
}

fn signal_name(sig: i32) -> String {
    let name = match sig {
        4 => "SIGILL",
        6 => "SIGABRT",
        7 => "SIGBUS",
        8 => "SIGFPE",
        11 => "SIGSEGV",
        _ => return format!("signal {sig}"),
    };
    format!("{name} (signal {sig})")
}

/// Run every enabled case in its own child process so one crashing case
/// never prevents status determination of any other.
pub fn execute_suite(
    binary: &Path,
    suite: &TestSuite,
    per_case_timeout: Duration,
) -> std::io::Result<TestSuite> {
    use std::os::unix::process::ExitStatusExt;
    let mut updated = suite.clone();
    let work_dir = binary.parent().unwrap_or_else(|| Path::new("."));
    for case in updated.cases.iter_mut() {
        if case.status == TestCaseStatus::DisabledCrash {
            continue;
        }
        let mut child = Command::new(binary)
            .arg(&case.name)
            .current_dir(work_dir)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()?;
        let deadline = Instant::now() + per_case_timeout;
        let status = loop {
            match child.try_wait()? {
                Some(st) => break Some(st),
                None => {
                    if Instant::now() >= deadline {
                        let _ = child.kill();
                        let _ = child.wait();
                        break None;
                    }
                    std::thread::sleep(Duration::from_millis(10));
                }
            }
        };
        match status {
            None => {
                case.status = TestCaseStatus::Crashed;
                case.crash_signal = Some("timeout".to_string());
            }
            Some(st) => {
                if let Some(sig) = st.signal() {
                    case.status = TestCaseStatus::Crashed;
                    case.crash_signal = Some(signal_name(sig));
                } else if st.success() {
                    case.status = TestCaseStatus::Passed;
                } else {
                    case.status = TestCaseStatus::FailedAssert;
                }
            }
        }
    }
    Ok(updated)
}

/// Every crashed case becomes `disabled_crash`: its source is commented out
/// behind a `// CRASH: <signal>` marker and its dispatcher entry disappears.
/// Idempotent.
pub fn disable_crashed(suite: &TestSuite, mockup: &MockupUnit) -> TestSuite {
    let mut updated = suite.clone();
    for case in updated.cases.iter_mut() {
        if case.status == TestCaseStatus::Crashed {
            case.status = TestCaseStatus::DisabledCrash;
            if case.crash_signal.is_none() {
                case.crash_signal = Some("crash".to_string());
            }
        }
    }
    updated.harness_source = render_harness(&updated, mockup);
    updated
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Execution count per executable mockup line.
    pub per_line: BTreeMap<u32, u64>,
    pub line_coverage_pct: f64,
    pub uncovered_lines: Vec<u32>,
}

impl CoverageReport {
    pub fn summary_text(&self) -> String {
        let total = self.per_line.len();
        let covered = total - self.uncovered_lines.len();
        let mut s = format!(
            "Line coverage: {:.1}% ({covered}/{total} executable lines).",
            self.line_coverage_pct
        );
        if self.uncovered_lines.is_empty() {
            s.push_str(" All executable lines are covered.");
        } else {
            let list: Vec<String> =
                self.uncovered_lines.iter().map(|l| l.to_string()).collect();
            s.push_str(&format!(" Uncovered mockup lines: {}.", list.join(", ")));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct CoverageToolConfig {
    pub command: String,
}

impl Default for CoverageToolConfig {
    fn default() -> Self {
        CoverageToolConfig {
            command: "gcov".to_string(),
        }
    }
}

/// Run the coverage tool on the harness source and fold its annotated
/// report down to the mockup's line range.
pub fn measure_coverage(
    work_dir: &Path,
    mockup: &MockupUnit,
    cfg: &CoverageToolConfig,
) -> Result<CoverageReport, CoverageError> {
    let has_data = std::fs::read_dir(work_dir)?
        .filter_map(|e| e.ok())
        .any(|e| e.path().extension().map(|x| x == "gcda").unwrap_or(false));
    if !has_data {
        return Err(CoverageError::NoCoverageData);
    }
    let src_name = format!("{}_test.c", mockup.target);
    let output = Command::new(&cfg.command)
        .arg(&src_name)
        .current_dir(work_dir)
        .stdin(Stdio::null())
        .output()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CoverageError::CoverageToolMissing(cfg.command.clone())
            } else {
                CoverageError::Io(e)
            }
        })?;
    if !output.status.success() {
        return Err(CoverageError::CoverageToolFailed {
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    let gcov_file = work_dir.join(format!("{src_name}.gcov"));
    let annotated = std::fs::read_to_string(&gcov_file).map_err(|e| {
        CoverageError::CoverageToolFailed {
            stderr: format!("missing {}: {e}", gcov_file.display()),
        }
    })?;
    Ok(parse_gcov_annotated(&annotated, mockup.line_count()))
}

/// Parse gcov's annotated-source format: `count: lineno: source`, with `-`
/// for non-executable lines and `#####` for executable-but-unexecuted ones.
/// Only lines within the mockup range are kept.
pub fn parse_gcov_annotated(annotated: &str, mockup_lines: u32) -> CoverageReport {
    let mut per_line: BTreeMap<u32, u64> = BTreeMap::new();
    for line in annotated.lines() {
        let mut parts = line.splitn(3, ':');
        let count_field = match parts.next() {
            Some(c) => c.trim(),
            None => continue,
        };
        let lineno: u32 = match parts.next().and_then(|l| l.trim().parse().ok()) {
            Some(n) => n,
            None => continue,
        };
        if lineno == 0 || lineno > mockup_lines {
            continue;
        }
        if count_field == "-" {
            continue;
        }
        let count = if count_field.starts_with('#') || count_field.starts_with('=') {
            0
        } else {
            count_field
                .trim_end_matches(['*', '%'])
                .parse::<u64>()
                .unwrap_or(0)
        };
        per_line.insert(lineno, count);
    }
    let total = per_line.len();
    let uncovered_lines: Vec<u32> = per_line
        .iter()
        .filter(|(_, &c)| c == 0)
        .map(|(&l, _)| l)
        .collect();
    let covered = total - uncovered_lines.len();
    let line_coverage_pct = if total == 0 {
        100.0
    } else {
        100.0 * covered as f64 / total as f64
    };
    CoverageReport {
        per_line,
        line_coverage_pct,
        uncovered_lines,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c_frontend::{build_graph, implied_closure};
    use std::collections::BTreeMap as Map;

    fn mockup_for(src: &str, target: &str) -> MockupUnit {
        let unit = crate::c_frontend::parse_source(src, "fix.c").unwrap();
        let graph = build_graph(&unit);
        let closure = implied_closure(&graph, target).unwrap();
        crate::mockup::generate_mockup(
            target,
            &closure,
            &unit,
            &graph.external_unresolved,
            &Map::new(),
        )
        .unwrap()
    }

    fn add_mockup() -> MockupUnit {
        mockup_for("int add(int a,int b){return a+b;}\n", "add")
    }

    #[test]
    fn splits_test_functions_into_cases() {
        let code = "void test_basic(void) { TENX_ASSERT(add(2,2) == 4); }\n\
void test_null(void) { TENX_ASSERT(add(0,0) == 0); }\n";
        let suite = build_harness(&add_mockup(), code, 1, None).unwrap();
        assert_eq!(suite.cases.len(), 2);
        assert_eq!(suite.cases[0].name, "test_basic");
        assert_eq!(suite.cases[1].name, "test_null");
        assert!(suite.harness_source.contains("strcmp(argv[1], \"test_basic\")"));
        assert!(suite.harness_source.contains("strcmp(argv[1], \"test_null\")"));
    }

    #[test]
    fn empty_generated_code_is_no_tests() {
        assert!(matches!(
            build_harness(&add_mockup(), "", 1, None),
            Err(HarnessError::NoTestsFound)
        ));
        assert!(matches!(
            build_harness(&add_mockup(), "int helper(void){return 0;}\n", 1, None),
            Err(HarnessError::NoTestsFound)
        ));
    }

    #[test]
    fn duplicate_against_carried_case_renamed() {
        let m = add_mockup();
        let code1 = "void test_a(void) { TENX_ASSERT(1); }\n";
        let mut suite1 = build_harness(&m, code1, 1, None).unwrap();
        suite1.cases[0].status = TestCaseStatus::Crashed;
        suite1.cases[0].crash_signal = Some("SIGSEGV (signal 11)".to_string());
        let suite1 = disable_crashed(&suite1, &m);
        let suite2 = build_harness(&m, code1, 2, Some(&suite1)).unwrap();
        let names: Vec<&str> = suite2.cases.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"test_a"));
        assert!(names.contains(&"test_a_v2"));
        // uniqueness across the whole harness
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert!(suite2.harness_source.contains("void test_a_v2(void)"));
    }

    #[test]
    fn disabled_block_is_byte_reversible() {
        let m = add_mockup();
        let code = "void test_boom(void) {\n    int *p = 0;\n    TENX_ASSERT(*p == 0);\n}\n";
        let mut suite = build_harness(&m, code, 1, None).unwrap();
        let original_body = suite.cases[0].body.clone();
        suite.cases[0].status = TestCaseStatus::Crashed;
        suite.cases[0].crash_signal = Some("SIGSEGV (signal 11)".to_string());
        let disabled = disable_crashed(&suite, &m);
        let block = render_disabled(&disabled.cases[0]);
        assert!(block.starts_with("// CRASH: SIGSEGV (signal 11)"));
        assert_eq!(strip_crash_comment(&block), original_body);
        // dispatcher entry removed
        assert!(!disabled
            .harness_source
            .contains("strcmp(argv[1], \"test_boom\")"));
        // idempotent
        let again = disable_crashed(&disabled, &m);
        assert_eq!(again.harness_source, disabled.harness_source);
    }

    #[test]
    fn disable_without_crashes_is_identity() {
        let m = add_mockup();
        let suite = build_harness(&m, "void test_x(void) { TENX_ASSERT(1); }\n", 1, None).unwrap();
        let out = disable_crashed(&suite, &m);
        assert_eq!(out.harness_source, suite.harness_source);
    }

    #[test]
    fn compile_execute_statuses_and_isolation() {
        let m = add_mockup();
        let code = "\
void test_pass(void) { TENX_ASSERT(add(2,2) == 4); }
void test_fail(void) { TENX_ASSERT(add(2,2) == 5); }
void test_crash(void) { int *p = (int*)0; TENX_ASSERT(*p == 0); }
void test_also_pass(void) { TENX_ASSERT(add(1,1) == 2); }
";
        let suite = build_harness(&m, code, 1, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = compile_suite(&suite, &CompilerConfig::default(), dir.path()).unwrap();
        let binary = match outcome {
            CompileOutcome::Compiled(b) => b,
            CompileOutcome::CompileFailure { diagnostics } => {
                panic!("compile failed: {diagnostics}")
            }
        };
        let run = execute_suite(&binary, &suite, Duration::from_secs(5)).unwrap();
        let by_name: Map<&str, TestCaseStatus> =
            run.cases.iter().map(|c| (c.name.as_str(), c.status)).collect();
        assert_eq!(by_name["test_pass"], TestCaseStatus::Passed);
        assert_eq!(by_name["test_fail"], TestCaseStatus::FailedAssert);
        assert_eq!(by_name["test_crash"], TestCaseStatus::Crashed);
        assert_eq!(by_name["test_also_pass"], TestCaseStatus::Passed);
        let crash = run.cases.iter().find(|c| c.name == "test_crash").unwrap();
        assert!(crash.crash_signal.as_deref().unwrap().contains("SIGSEGV"));
    }

    #[test]
    fn compile_failure_is_a_value_with_diagnostics() {
        let m = add_mockup();
        let code = "void test_bad(void) { TENX_ASSERT(no_such_symbol_xyz()); }\n";
        let suite = build_harness(&m, code, 1, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = CompilerConfig::default();
        // the old C default would only warn about implicit declarations
        cfg.flags.push("-Werror=implicit-function-declaration".to_string());
        match compile_suite(&suite, &cfg, dir.path()).unwrap() {
            CompileOutcome::CompileFailure { diagnostics } => {
                assert!(diagnostics.contains("no_such_symbol_xyz"), "{diagnostics}");
            }
            CompileOutcome::Compiled(_) => panic!("expected compile failure"),
        }
        // recompiling an unchanged suite gives the same outcome class
        match compile_suite(&suite, &cfg, dir.path()).unwrap() {
            CompileOutcome::CompileFailure { .. } => {}
            CompileOutcome::Compiled(_) => panic!("outcome changed on recompile"),
        }
    }

    #[test]
    fn infinite_loop_times_out_as_crash() {
        let m = add_mockup();
        let code = "void test_spin(void) { while (add(1,1) > 0) { } }\n";
        let suite = build_harness(&m, code, 1, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let binary = match compile_suite(&suite, &CompilerConfig::default(), dir.path()).unwrap() {
            CompileOutcome::Compiled(b) => b,
            CompileOutcome::CompileFailure { diagnostics } => panic!("{diagnostics}"),
        };
        let started = Instant::now();
        let run = execute_suite(&binary, &suite, Duration::from_secs(2)).unwrap();
        assert!(started.elapsed() < Duration::from_secs(3));
        assert_eq!(run.cases[0].status, TestCaseStatus::Crashed);
        assert_eq!(run.cases[0].crash_signal.as_deref(), Some("timeout"));
    }

    #[test]
    fn coverage_full_and_partial() {
        let src = "\
int pick(int n) {
    if (n > 0) {
        return 1;
    }
    return 0;
}
";
        let m = mockup_for(src, "pick");
        let dir = tempfile::tempdir().unwrap();
        let cov_cfg = CoverageToolConfig::default();
        // only the then-branch exercised
        let suite = build_harness(&m, "void test_pos(void) { TENX_ASSERT(pick(5) == 1); }\n", 1, None)
            .unwrap();
        let binary = match compile_suite(&suite, &CompilerConfig::default(), dir.path()).unwrap() {
            CompileOutcome::Compiled(b) => b,
            CompileOutcome::CompileFailure { diagnostics } => panic!("{diagnostics}"),
        };
        let run = execute_suite(&binary, &suite, Duration::from_secs(5)).unwrap();
        assert_eq!(run.cases[0].status, TestCaseStatus::Passed);
        let partial = measure_coverage(dir.path(), &m, &cov_cfg).unwrap();
        assert!(partial.line_coverage_pct < 100.0);
        // the else-path return is exactly the uncovered line
        let else_line = m
            .source_text
            .lines()
            .position(|l| l.trim() == "return 0;")
            .unwrap() as u32
            + 1;
        assert_eq!(partial.uncovered_lines, vec![else_line]);

        // both branches exercised: full coverage
        let code2 = "void test_pos(void) { TENX_ASSERT(pick(5) == 1); }\n\
void test_neg(void) { TENX_ASSERT(pick(-5) == 0); }\n";
        let suite2 = build_harness(&m, code2, 2, None).unwrap();
        let binary2 = match compile_suite(&suite2, &CompilerConfig::default(), dir.path()).unwrap()
        {
            CompileOutcome::Compiled(b) => b,
            CompileOutcome::CompileFailure { diagnostics } => panic!("{diagnostics}"),
        };
        let _ = execute_suite(&binary2, &suite2, Duration::from_secs(5)).unwrap();
        let full = measure_coverage(dir.path(), &m, &cov_cfg).unwrap();
        assert_eq!(full.line_coverage_pct, 100.0);
        assert!(full.uncovered_lines.is_empty());
    }

    #[test]
    fn no_coverage_data_error() {
        let m = add_mockup();
        let dir = tempfile::tempdir().unwrap();
        let suite = build_harness(&m, "void test_x(void) { TENX_ASSERT(1); }\n", 1, None).unwrap();
        let _ = compile_suite(&suite, &CompilerConfig::default(), dir.path()).unwrap();
        // compiled but never executed
        assert!(matches!(
            measure_coverage(dir.path(), &m, &CoverageToolConfig::default()),
            Err(CoverageError::NoCoverageData)
        ));
    }

    #[test]
    fn gcov_parser_handles_partial_markers() {
        let annotated = "\
        -:    0:Source:t.c
        -:    1:#include <stdio.h>
        3:    2:int f(int n) {
       1*:    3:    if (n > 0) { return 1; }
    #####:    4:    return 0;
        -:    5:}
        7:    6:int beyond_mockup(void) { return 0; }
";
        let report = parse_gcov_annotated(annotated, 5);
        assert_eq!(report.per_line.len(), 3);
        assert_eq!(report.per_line[&2], 3);
        assert_eq!(report.per_line[&3], 1);
        assert_eq!(report.per_line[&4], 0);
        assert_eq!(report.uncovered_lines, vec![4]);
        assert!((report.line_coverage_pct - 66.666).abs() < 0.01);
        // coverage bounds invariant
        assert!(report.line_coverage_pct >= 0.0 && report.line_coverage_pct <= 100.0);
    }
}
