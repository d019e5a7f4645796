//! External bounded-model-checker adapter: runs the checker on a mockup
//! under a hard timeout and parses its counterexample text into structured
//! sensitization conditions.
//!
//! The counterexample grammar targets the text format of ESBMC v7.x via
//! anchored markers (`[Counterexample]`, `Violated property:`, `State N`);
//! the marker and classification tables are data, so other versions can be
//! slotted in.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use regex::Regex;

use crate::mockup::{map_back, MappedOrigin, MockupUnit};

#[derive(Debug, thiserror::Error)]
pub enum VerifierError {
    #[error("verifier executable not found: {0}")]
    ToolMissing(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct VerifierConfig {
    pub executable: PathBuf,
    pub extra_flags: Vec<String>,
    pub timeout: Duration,
    pub unwind_bound: u32,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            executable: PathBuf::from("esbmc"),
            extra_flags: Vec::new(),
            timeout: Duration::from_secs(10),
            unwind_bound: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    VerificationFailed,
    VerificationSuccessful,
    Timeout,
    ToolError,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::VerificationFailed => "verification_failed",
            Verdict::VerificationSuccessful => "verification_successful",
            Verdict::Timeout => "timeout",
            Verdict::ToolError => "tool_error",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyKind {
    ArrayBounds,
    PointerDeref,
    ArithmeticOverflow,
    DivisionByZero,
    Assertion,
    Other(String),
}

impl std::fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PropertyKind::ArrayBounds => f.write_str("array bounds violation"),
            PropertyKind::PointerDeref => f.write_str("pointer dereference failure"),
            PropertyKind::ArithmeticOverflow => f.write_str("arithmetic overflow"),
            PropertyKind::DivisionByZero => f.write_str("division by zero"),
            PropertyKind::Assertion => f.write_str("assertion failure"),
            PropertyKind::Other(text) => write!(f, "other: {text}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub property_kind: PropertyKind,
    /// (file, line) in mockup coordinates.
    pub location: (String, u32),
    /// Variable assignments in trace order.
    pub assignments: Vec<(String, String)>,
    pub trace_depth: u32,
    /// Violated-property description text as printed by the checker.
    pub description: String,
}

#[derive(Debug, Clone)]
pub struct VerifierReport {
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
    pub raw_output: String,
    pub elapsed: Duration,
    pub unwind_bound: u32,
}

impl VerifierReport {
    /// Verdict/violations consistency required of every report.
    pub fn is_consistent(&self) -> bool {
        match self.verdict {
            Verdict::VerificationFailed => !self.violations.is_empty(),
            _ => self.violations.is_empty(),
        }
    }
}

type KindCtor = fn() -> PropertyKind;

/// Ordered substring table mapping violated-property descriptions to kinds.
const PROPERTY_TABLE: &[(&str, KindCtor)] = &[
    ("array bounds", || PropertyKind::ArrayBounds),
    ("bounds violated", || PropertyKind::ArrayBounds),
    ("out of bounds", || PropertyKind::ArrayBounds),
    ("dereference failure", || PropertyKind::PointerDeref),
    ("null pointer", || PropertyKind::PointerDeref),
    ("invalid pointer", || PropertyKind::PointerDeref),
    ("division by zero", || PropertyKind::DivisionByZero),
    ("arithmetic overflow", || PropertyKind::ArithmeticOverflow),
    ("overflow", || PropertyKind::ArithmeticOverflow),
    ("assertion", || PropertyKind::Assertion),
];

fn classify_property(description: &str) -> PropertyKind {
    let lower = description.to_lowercase();
    for (pat, make) in PROPERTY_TABLE {
        if lower.contains(pat) {
            return make();
        }
    }
    PropertyKind::Other(description.trim().to_string())
}

fn state_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?m)^State\s+(\d+)\s+file\s+(\S+)\s+line\s+(\d+)").unwrap()
    })
}

fn location_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"file\s+(\S+)\s+line\s+(\d+)").unwrap())
}

fn assignment_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // `  name = value` with an optional trailing bit-pattern in parens
    RE.get_or_init(|| {
        Regex::new(r"(?m)^\s+([A-Za-z_][A-Za-z0-9_\[\]\.]*)\s*=\s*(.+?)(?:\s+\([01xX?\s]+\))?\s*$")
            .unwrap()
    })
}

/// Extract every counterexample section from checker output. Total: never
/// fails; unparseable sections degrade to `Other` violations.
pub fn parse_counterexample(raw_output: &str) -> Vec<Violation> {
    let mut sections: Vec<&str> = Vec::new();
    let marker = "[Counterexample]";
    if raw_output.contains(marker) {
        let mut rest = raw_output;
        while let Some(pos) = rest.find(marker) {
            let after = &rest[pos + marker.len()..];
            let end = after.find(marker).unwrap_or(after.len());
            sections.push(&after[..end]);
            rest = &after[end..];
        }
    } else if raw_output.contains("Violated property:") {
        sections.push(raw_output);
    } else {
        return Vec::new();
    }

    let mut violations = Vec::new();
    for section in sections {
        violations.push(parse_section(section));
    }
    violations
}

fn parse_section(section: &str) -> Violation {
    let mut assignments: Vec<(String, String)> = Vec::new();
    let mut last_state_loc: Option<(String, u32)> = None;
    let mut trace_depth = 0u32;

    let violated_pos = section.find("Violated property:");
    let trace_part = &section[..violated_pos.unwrap_or(section.len())];

    for cap in state_re().captures_iter(trace_part) {
        trace_depth += 1;
        let file = cap[2].to_string();
        let line = cap[3].parse::<u32>().unwrap_or(1).max(1);
        last_state_loc = Some((file, line));
    }
    for line in trace_part.lines() {
        if state_re().is_match(line) || line.trim_start().starts_with('-') {
            continue;
        }
        if let Some(cap) = assignment_re().captures(line) {
            assignments.push((cap[1].to_string(), cap[2].trim().to_string()));
        }
    }

    let (description, prop_loc) = match violated_pos {
        Some(pos) => {
            let block = &section[pos + "Violated property:".len()..];
            let block_end = block.find("\n\n").unwrap_or(block.len());
            let block = &block[..block_end];
            let mut loc = None;
            let mut desc_lines: Vec<&str> = Vec::new();
            for line in block.lines() {
                let t = line.trim();
                if t.is_empty() || t.starts_with("VERIFICATION") {
                    continue;
                }
                if let Some(cap) = location_re().captures(t) {
                    if loc.is_none() {
                        loc = Some((
                            cap[1].to_string(),
                            cap[2].parse::<u32>().unwrap_or(1).max(1),
                        ));
                        continue;
                    }
                }
                desc_lines.push(t);
            }
            (desc_lines.join("\n"), loc)
        }
        None => (String::new(), None),
    };

    if description.is_empty() && violated_pos.is_none() {
        // no recognizable violated-property block: preserve the raw section
        return Violation {
            property_kind: PropertyKind::Other(section.trim().to_string()),
            location: last_state_loc.unwrap_or_else(|| ("<unknown>".to_string(), 1)),
            assignments,
            trace_depth,
            description: section.trim().to_string(),
        };
    }

    Violation {
        property_kind: classify_property(&description),
        location: prop_loc
            .or(last_state_loc)
            .unwrap_or_else(|| ("<unknown>".to_string(), 1)),
        assignments,
        trace_depth,
        description,
    }
}

/// Source text handed to the checker: the mockup plus, when it has no entry
/// point of its own, a driver calling the target with nondeterministic
/// arguments.
pub fn verification_source(mockup: &MockupUnit) -> String {
    let mut src = mockup.source_text.clone();
    if mockup.has_main {
        return src;
    }
    let sig = &mockup.target_sig;
    let mut args: Vec<String> = Vec::new();
    for p in &sig.params {
        if p == "void" {
            continue;
        }
        if p == "..." {
            break;
        }
        if p.contains('*') || p.contains('[') {
            args.push("malloc(64)".to_string());
        } else {
            args.push("nondet_int()".to_string());
        }
    }
    src.push_str("\nint nondet_int(void);\n");
    src.push_str("int main(void) {\n");
    src.push_str(&format!("    {}({});\n", sig.name, args.join(", ")));
    src.push_str("    return 0;\n}\n");
    src
}

/// Run the checker on the mockup, forcibly terminating it at the configured
/// timeout. Tool crashes map to `Verdict::ToolError`; only a missing
/// executable is an error, because the pipeline cannot proceed without one.
pub fn run_verifier(
    mockup: &MockupUnit,
    config: &VerifierConfig,
    work_dir: &Path,
) -> Result<VerifierReport, VerifierError> {
    let exe = &config.executable;
    if exe.components().count() > 1 && !exe.exists() {
        return Err(VerifierError::ToolMissing(exe.display().to_string()));
    }
    std::fs::create_dir_all(work_dir)?;
    let input = work_dir.join(format!("{}_verify.c", mockup.target));
    std::fs::write(&input, verification_source(mockup))?;

    let mut cmd = Command::new(exe);
    cmd.arg(&input)
        .arg("--unwind")
        .arg(config.unwind_bound.to_string())
        .arg("--overflow-check")
        .args(&config.extra_flags)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .current_dir(work_dir);
    {
        // give the checker its own process group so the timeout kill also
        // reaps any helpers it spawned (otherwise they keep our pipes open)
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }

    let start = Instant::now();
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(VerifierError::ToolMissing(exe.display().to_string()));
        }
        Err(e) => return Err(VerifierError::Io(e)),
    };

    // drain pipes on threads so a chatty tool cannot deadlock on a full pipe
    let mut stdout_pipe = child.stdout.take().expect("stdout piped");
    let mut stderr_pipe = child.stderr.take().expect("stderr piped");
    let out_thread = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout_pipe.read_to_end(&mut buf);
        buf
    });
    let err_thread = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr_pipe.read_to_end(&mut buf);
        buf
    });

    let deadline = start + config.timeout;
    let mut timed_out = false;
    let status = loop {
        match child.try_wait()? {
            Some(status) => break Some(status),
            None => {
                if Instant::now() >= deadline {
                    timed_out = true;
                    unsafe {
                        libc::kill(-(child.id() as i32), libc::SIGKILL);
                    }
                    let _ = child.kill();
                    let _ = child.wait();
                    break None;
                }
                std::thread::sleep(Duration::from_millis(20));
            }
        }
    };
    let elapsed = start.elapsed();
    let stdout = out_thread.join().unwrap_or_default();
    let stderr = err_thread.join().unwrap_or_default();
    let mut raw_output = String::from_utf8_lossy(&stdout).into_owned();
    if !stderr.is_empty() {
        raw_output.push('\n');
        raw_output.push_str(&String::from_utf8_lossy(&stderr));
    }

    if timed_out {
        return Ok(VerifierReport {
            verdict: Verdict::Timeout,
            violations: Vec::new(),
            raw_output,
            elapsed,
            unwind_bound: config.unwind_bound,
        });
    }

    let status = status.expect("status present when not timed out");
    let has_marker =
        raw_output.contains("VERIFICATION FAILED") || raw_output.contains("[Counterexample]");
    let (verdict, violations) = if status.success() {
        (Verdict::VerificationSuccessful, Vec::new())
    } else if has_marker {
        let mut v = parse_counterexample(&raw_output);
        if v.is_empty() {
            v.push(Violation {
                property_kind: PropertyKind::Other(
                    "counterexample marker present but no section parsed".to_string(),
                ),
                location: (input.display().to_string(), 1),
                assignments: Vec::new(),
                trace_depth: 0,
                description: "counterexample marker present but no section parsed".to_string(),
            });
        }
        (Verdict::VerificationFailed, v)
    } else {
        (Verdict::ToolError, Vec::new())
    };

    let report = VerifierReport {
        verdict,
        violations,
        raw_output,
        elapsed,
        unwind_bound: config.unwind_bound,
    };
    debug_assert!(report.is_consistent());
    Ok(report)
}

/// Human/LLM-readable rendering of a report in original-source coordinates.
/// This is the text the test generator consumes.
pub fn sensitization_summary(report: &VerifierReport, mockup: &MockupUnit) -> String {
    let mut s = String::new();
    match report.verdict {
        Verdict::VerificationSuccessful => {
            s.push_str(
                "Verifier verdict: verification successful (decisive). No property violations \
                 were found within the explored bounds.\n",
            );
        }
        Verdict::Timeout => {
            s.push_str(&format!(
                "Verifier verdict: timeout after {:.1}s. Result inconclusive at unwind bound {}; \
                 no sensitization conditions were extracted.\n",
                report.elapsed.as_secs_f64(),
                report.unwind_bound
            ));
        }
        Verdict::ToolError => {
            s.push_str(
                "Verifier verdict: tool error (inconclusive). No sensitization conditions were \
                 extracted.\n",
            );
        }
        Verdict::VerificationFailed => {
            s.push_str(&format!(
                "Verifier verdict: verification failed with {} violation(s). Unsafe execution \
                 states follow; drive tests into these conditions.\n",
                report.violations.len()
            ));
            for (i, v) in report.violations.iter().enumerate() {
                let loc = describe_location(mockup, v.location.1);
                s.push_str(&format!("[{}] {} at {}\n", i + 1, v.property_kind, loc));
                if v.assignments.is_empty() {
                    s.push_str("    inputs: (none recorded)\n");
                } else {
                    let mut seen = BTreeSet::new();
                    let pairs: Vec<String> = v
                        .assignments
                        .iter()
                        .filter(|(name, _)| seen.insert(name.clone()))
                        .map(|(name, value)| format!("{name} = {value}"))
                        .collect();
                    s.push_str(&format!("    inputs: {}\n", pairs.join(", ")));
                }
            }
        }
    }
    s
}

fn describe_location(mockup: &MockupUnit, line: u32) -> String {
    match map_back(mockup, line) {
        Ok(MappedOrigin::Source { file, line }) => format!("{file}:{line}"),
        Ok(MappedOrigin::Synthesized) => format!("synthesized mockup line {line}"),
        Err(_) => format!("harness line {line}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOUNDS_CE: &str = "\
ESBMC version 7.7.0 64-bit x86_64 linux
Parsing fill_verify.c
Starting Bounded Model Checking

[Counterexample]


State 1 file fill_verify.c line 8 column 7 function fill thread 0
----------------------------------------------------
  i = 10 (00000000 00000000 00000000 00001010)

State 2 file fill_verify.c line 9 column 5 function fill thread 0
----------------------------------------------------
  len = 2147483647 (01111111 11111111 11111111 11111111)

Violated property:
  file fill_verify.c line 9 column 5 function fill
  array bounds violated: array `buf' upper bound
  (signed long int)i < 10

VERIFICATION FAILED
";

    #[test]
    fn empty_output_no_violations() {
        assert!(parse_counterexample("").is_empty());
        assert!(parse_counterexample("VERIFICATION SUCCESSFUL").is_empty());
    }

    #[test]
    fn bounds_counterexample_parsed() {
        let vs = parse_counterexample(BOUNDS_CE);
        assert_eq!(vs.len(), 1);
        let v = &vs[0];
        assert_eq!(v.property_kind, PropertyKind::ArrayBounds);
        assert_eq!(v.location, ("fill_verify.c".to_string(), 9));
        assert_eq!(v.trace_depth, 2);
        assert_eq!(
            v.assignments,
            vec![
                ("i".to_string(), "10".to_string()),
                ("len".to_string(), "2147483647".to_string())
            ]
        );
    }

    #[test]
    fn dereference_failure_classified() {
        let out = "[Counterexample]\n\nState 1 file m.c line 4 column 3 function f thread 0\n\
----------------------------------------------------\n  p = 0 (00000000)\n\n\
Violated property:\n  file m.c line 4 column 3 function f\n  dereference failure: NULL pointer\n\nVERIFICATION FAILED\n";
        let vs = parse_counterexample(out);
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].property_kind, PropertyKind::PointerDeref);
    }

    #[test]
    fn two_sections_in_document_order() {
        let one = "[Counterexample]\n\nViolated property:\n  file a.c line 3\n  division by zero\n\n";
        let two = "[Counterexample]\n\nViolated property:\n  file a.c line 9\n  arithmetic overflow on add\n\n";
        let vs = parse_counterexample(&format!("{one}{two}VERIFICATION FAILED\n"));
        assert_eq!(vs.len(), 2);
        assert_eq!(vs[0].property_kind, PropertyKind::DivisionByZero);
        assert_eq!(vs[0].location.1, 3);
        assert_eq!(vs[1].property_kind, PropertyKind::ArithmeticOverflow);
        assert_eq!(vs[1].location.1, 9);
    }

    #[test]
    fn unparseable_section_degrades_to_other() {
        let vs = parse_counterexample("[Counterexample]\n\ncomplete garbage here\n");
        assert_eq!(vs.len(), 1);
        assert!(matches!(vs[0].property_kind, PropertyKind::Other(_)));
        assert!(vs[0].description.contains("complete garbage"));
        assert!(vs[0].location.1 >= 1);
    }

    fn test_mockup() -> crate::mockup::MockupUnit {
        use std::collections::{BTreeMap, BTreeSet};
        let unit = crate::c_frontend::parse_source("int add(int a,int b){return a+b;}\n", "f.c")
            .unwrap();
        let graph = crate::c_frontend::build_graph(&unit);
        let closure = crate::c_frontend::implied_closure(&graph, "add").unwrap();
        crate::mockup::generate_mockup(
            "add",
            &closure,
            &unit,
            &BTreeSet::new(),
            &BTreeMap::new(),
        )
        .unwrap()
    }

    fn stub_tool(dir: &Path, body: &str) -> std::path::PathBuf {
        use std::os::unix::fs::PermissionsExt;
        let path = dir.join("tool.sh");
        std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    #[test]
    fn timeout_hard_bound_holds() {
        let tmp = tempfile::tempdir().unwrap();
        let tool = stub_tool(tmp.path(), "sleep 30");
        let config = VerifierConfig {
            executable: tool,
            extra_flags: vec![],
            timeout: Duration::from_millis(500),
            unwind_bound: 10,
        };
        let started = Instant::now();
        let report = run_verifier(&test_mockup(), &config, tmp.path()).unwrap();
        assert!(started.elapsed() < Duration::from_millis(1500));
        assert_eq!(report.verdict, Verdict::Timeout);
        assert!(report.violations.is_empty());
        assert!(report.is_consistent());
    }

    #[test]
    fn tool_crash_is_a_verdict_not_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let tool = stub_tool(tmp.path(), "echo 'internal solver fault'\nexit 3");
        let config = VerifierConfig {
            executable: tool,
            ..VerifierConfig::default()
        };
        let report = run_verifier(&test_mockup(), &config, tmp.path()).unwrap();
        assert_eq!(report.verdict, Verdict::ToolError);
        assert!(report.raw_output.contains("internal solver fault"));
        assert!(report.is_consistent());
    }

    #[test]
    fn exit_codes_map_to_verdicts() {
        let tmp = tempfile::tempdir().unwrap();
        let ok = stub_tool(tmp.path(), "echo 'VERIFICATION SUCCESSFUL'\nexit 0");
        let config = VerifierConfig {
            executable: ok,
            ..VerifierConfig::default()
        };
        let report = run_verifier(&test_mockup(), &config, tmp.path()).unwrap();
        assert_eq!(report.verdict, Verdict::VerificationSuccessful);

        let failed = stub_tool(tmp.path(), "echo 'VERIFICATION FAILED'\nexit 1");
        let config = VerifierConfig {
            executable: failed,
            ..VerifierConfig::default()
        };
        let report = run_verifier(&test_mockup(), &config, tmp.path()).unwrap();
        assert_eq!(report.verdict, Verdict::VerificationFailed);
        // the marker was present but unparsable: a placeholder violation
        // keeps the report consistent
        assert_eq!(report.violations.len(), 1);
        assert!(report.is_consistent());
    }

    #[test]
    fn missing_tool_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let config = VerifierConfig {
            executable: std::path::PathBuf::from("/nonexistent/checker"),
            ..VerifierConfig::default()
        };
        assert!(matches!(
            run_verifier(&test_mockup(), &config, tmp.path()),
            Err(VerifierError::ToolMissing(_))
        ));
    }

    #[test]
    fn driver_synthesized_for_mockups_without_main() {
        let src = verification_source(&test_mockup());
        assert!(src.contains("int main(void)"));
        assert!(src.contains("add(nondet_int(), nondet_int());"));
    }

    #[test]
    fn report_consistency() {
        let ok = VerifierReport {
            verdict: Verdict::VerificationSuccessful,
            violations: vec![],
            raw_output: String::new(),
            elapsed: Duration::from_millis(5),
            unwind_bound: 10,
        };
        assert!(ok.is_consistent());
        let bad = VerifierReport {
            verdict: Verdict::VerificationFailed,
            violations: vec![],
            raw_output: String::new(),
            elapsed: Duration::from_millis(5),
            unwind_bound: 10,
        };
        assert!(!bad.is_consistent());
    }
}
