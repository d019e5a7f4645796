//! Drives the five-step pipeline per target function across a codebase,
//! persists per-iteration session records, and emits aggregate reports.
//!
//! Per target: parse -> closure -> mockup -> verifier -> loop(generate ->
//! build -> compile -> execute -> disable crashes -> coverage -> reflect ->
//! decide). A failure in one target never aborts the others.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::c_frontend::{
    build_graph, implied_closure, parse_unit_with, SymbolKind, SymbolStorage, TranslationUnit,
};
use crate::config::{BackendConfig, RunConfig, TargetSelector};
use crate::harness::{
    build_harness, clear_coverage_data, compile_suite, disable_crashed, execute_suite,
    measure_coverage, CompileOutcome, CompilerConfig, CoverageToolConfig, TestCaseStatus,
    TestSuite,
};
use crate::llm::{
    assemble_prompt, complete, HttpBackend, ModelBackend, PromptBundle, PromptInstruction,
};
use crate::mockup::{generate_mockup_with, MockupOptions, MockupUnit};
use crate::reflection::{
    fallback_verdict, reflect, should_continue, ErrorCounters, LoopDecision, LoopState,
    ReflectionVerdict, VerdictSource,
};
use crate::stats::{pearson, StatsError};
use crate::verifier::{run_verifier, sensitization_summary, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error("fatal config error: {0}")]
    FatalConfig(#[from] crate::config::ConfigError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("backend error: {0}")]
    Backend(#[from] crate::llm::GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalStatus {
    Completed,
    ParseFailed,
    NeverCompiled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationEntry {
    pub iteration: u32,
    pub compile_ok: bool,
    pub n_cases: u32,
    /// Cases that crashed (and were disabled) in this iteration.
    pub n_crashed: u32,
    pub coverage_pct: Option<f64>,
    pub rating: Option<u8>,
    pub rating_source: Option<VerdictSource>,
    pub verdicts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionRecord {
    pub target: String,
    pub verifier_verdict: String,
    pub entries: Vec<IterationEntry>,
    pub final_status: FinalStatus,
    pub wall_time_secs: f64,
    /// Cumulative error counters over the whole session.
    pub counters: ErrorCounters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SessionRecord {
    fn failed(target: &str, status: FinalStatus, error: String) -> Self {
        SessionRecord {
            target: target.to_string(),
            verifier_verdict: "not_run".to_string(),
            entries: Vec::new(),
            final_status: status,
            wall_time_secs: 0.0,
            counters: ErrorCounters::default(),
            error: Some(error),
        }
    }

    /// First and last recorded quality rating, when any reflection ran.
    pub fn rating_pair(&self) -> Option<(u8, u8)> {
        let ratings: Vec<u8> = self.entries.iter().filter_map(|e| e.rating).collect();
        match (ratings.first(), ratings.last()) {
            (Some(&i), Some(&f)) => Some((i, f)),
            _ => None,
        }
    }

    pub fn final_coverage_pct(&self) -> Option<f64> {
        self.entries.iter().rev().find_map(|e| e.coverage_pct)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateCounters {
    pub compile_errors_total: u32,
    pub crash_tests_total: u32,
    pub verifier_timeouts_total: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetStats {
    pub target: String,
    pub final_status: FinalStatus,
    pub initial_rating: Option<u8>,
    pub final_rating: Option<u8>,
    pub cycles: u32,
    pub gain: Option<i32>,
    pub coverage_pct: Option<f64>,
    pub compile_errors: u32,
    pub crashes: u32,
    pub verifier_timeouts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_targets: usize,
    pub n_executed: usize,
    pub n_coverage_measured: usize,
    pub n_improved: usize,
    pub counters: AggregateCounters,
    pub per_target: Vec<TargetStats>,
    pub pearson_r: Option<f64>,
    pub pearson_p: Option<f64>,
}

impl AggregateReport {
    pub fn all_completed(&self) -> bool {
        self.per_target
            .iter()
            .all(|t| t.final_status == FinalStatus::Completed)
    }
}

/// Aggregate session records into the run report. Counters are exact sums
/// over the records, so the report is recomputable offline.
pub fn aggregate(records: &[SessionRecord]) -> AggregateReport {
    let mut records: Vec<&SessionRecord> = records.iter().collect();
    records.sort_by(|a, b| a.target.cmp(&b.target));

    let mut counters = AggregateCounters::default();
    let mut per_target = Vec::new();
    for r in &records {
        counters.compile_errors_total += r.counters.compile_errors;
        counters.crash_tests_total += r.counters.crashes;
        counters.verifier_timeouts_total += r.counters.verifier_timeouts;
        let pair = r.rating_pair();
        per_target.push(TargetStats {
            target: r.target.clone(),
            final_status: r.final_status,
            initial_rating: pair.map(|(i, _)| i),
            final_rating: pair.map(|(_, f)| f),
            cycles: r.entries.len() as u32,
            gain: pair.map(|(i, f)| f as i32 - i as i32),
            coverage_pct: r.final_coverage_pct(),
            compile_errors: r.counters.compile_errors,
            crashes: r.counters.crashes,
            verifier_timeouts: r.counters.verifier_timeouts,
        });
    }
    let n_executed = records
        .iter()
        .filter(|r| r.entries.iter().any(|e| e.compile_ok))
        .count();
    let n_coverage_measured = records
        .iter()
        .filter(|r| r.entries.iter().any(|e| e.coverage_pct.is_some()))
        .count();
    let n_improved = per_target
        .iter()
        .filter(|t| t.gain.map(|g| g > 0).unwrap_or(false))
        .count();

    // cycles vs gain, per the reflection-impact analysis
    let pairs: Vec<(f64, f64)> = per_target
        .iter()
        .filter_map(|t| t.gain.map(|g| (t.cycles as f64, g as f64)))
        .collect();
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (pearson_r, pearson_p) = match pearson(&xs, &ys) {
        Ok((r, p)) => (Some(r), Some(p)),
        Err(_) => (None, None),
    };

    AggregateReport {
        n_targets: records.len(),
        n_executed,
        n_coverage_measured,
        n_improved,
        counters,
        per_target,
        pearson_r,
        pearson_p,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementStats {
    pub n_improved: usize,
    /// Percentage of records whose final rating exceeds the initial one.
    pub improvement_rate_pct: f64,
    /// Lower median of the per-target gains.
    pub median_gain: i32,
    pub max_gain: i32,
}

/// Per-target gain statistics over records that carry at least one rating.
pub fn improvement_stats(records: &[SessionRecord]) -> Result<ImprovementStats, StatsError> {
    let mut gains: Vec<i32> = records
        .iter()
        .filter_map(|r| r.rating_pair())
        .map(|(i, f)| f as i32 - i as i32)
        .collect();
    if gains.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    gains.sort_unstable();
    let n = gains.len();
    let n_improved = gains.iter().filter(|&&g| g > 0).count();
    Ok(ImprovementStats {
        n_improved,
        improvement_rate_pct: 100.0 * n_improved as f64 / n as f64,
        median_gain: gains[(n - 1) / 2],
        max_gain: *gains.last().unwrap(),
    })
}

struct TargetJob {
    name: String,
    unit: Arc<TranslationUnit>,
}

fn collect_c_files(root: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    if root.is_file() {
        out.push(root.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(root)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_c_files(&path, out)?;
        } else if path.extension().map(|e| e == "c").unwrap_or(false) {
            out.push(path);
        }
    }
    Ok(())
}

type DiscoveryResult = (Vec<TargetJob>, Vec<(PathBuf, String)>);

/// Find every externally linked function definition under the source roots,
/// keyed by name, plus per-file parse failures.
fn discover_targets(config: &RunConfig) -> std::io::Result<DiscoveryResult> {
    let preprocessor = vec![config.compiler_command.clone(), "-E".to_string()];
    let mut jobs: BTreeMap<String, TargetJob> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut files = Vec::new();
    for root in &config.source_roots {
        collect_c_files(root, &mut files)?;
    }
    files.sort();
    files.dedup();
    for file in files {
        match parse_unit_with(&preprocessor, &file, &config.include_dirs, &config.defines) {
            Ok(unit) => {
                let unit = Arc::new(unit);
                for sym in &unit.symbols {
                    let is_target = sym.kind == SymbolKind::Function
                        && sym.is_definition
                        && sym.storage == SymbolStorage::External
                        && sym.name != "main";
                    if !is_target || !config.targets.matches(&sym.name) {
                        continue;
                    }
                    if jobs.contains_key(&sym.name) {
                        log::warn!(
                            "duplicate target `{}` in {}; keeping the first definition",
                            sym.name,
                            file.display()
                        );
                        continue;
                    }
                    jobs.insert(
                        sym.name.clone(),
                        TargetJob {
                            name: sym.name.clone(),
                            unit: Arc::clone(&unit),
                        },
                    );
                }
            }
            Err(e) => failures.push((file, e.to_string())),
        }
    }
    Ok((jobs.into_values().collect(), failures))
}

enum TargetBackend {
    Own(ModelBackend),
    Shared(Arc<ModelBackend>),
}

impl TargetBackend {
    fn backend(&self) -> &ModelBackend {
        match self {
            TargetBackend::Own(b) => b,
            TargetBackend::Shared(b) => b,
        }
    }
}

fn backend_for_target(
    config: &RunConfig,
    shared: &Option<Arc<ModelBackend>>,
    target: &str,
) -> Result<TargetBackend, crate::llm::GatewayError> {
    if let BackendConfig::Scripted { script_dir } = &config.backend {
        let sub = script_dir.join(target);
        if sub.is_dir() {
            return Ok(TargetBackend::Own(ModelBackend::scripted(&sub)?));
        }
    }
    match shared {
        Some(b) => Ok(TargetBackend::Shared(Arc::clone(b))),
        None => Err(crate::llm::GatewayError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no scripted responses for target {target}"),
        ))),
    }
}

/// Run the whole pipeline. Per-target failures become recorded statuses;
/// only configuration problems abort the run.
pub fn run_pipeline(config: &RunConfig) -> Result<AggregateReport, OrchestratorError> {
    config.validate().map_err(OrchestratorError::FatalConfig)?;
    // child processes run with per-target working directories; the output
    // root must be absolute so artifact paths survive those cwd changes
    let mut config = config.clone();
    config.output_dir = config.output_dir.canonicalize()?;
    let config = &config;
    let (jobs, failures) = discover_targets(config)?;
    for (file, err) in &failures {
        log::warn!("skipping unparsable unit {}: {err}", file.display());
    }

    let shared: Option<Arc<ModelBackend>> = match &config.backend {
        BackendConfig::Scripted { script_dir } => {
            let has_root_files = script_dir.is_dir()
                && std::fs::read_dir(script_dir)?
                    .filter_map(|e| e.ok())
                    .any(|e| e.path().is_file());
            if has_root_files {
                Some(Arc::new(ModelBackend::scripted(script_dir)?))
            } else {
                None
            }
        }
        BackendConfig::Http {
            url,
            model_name,
            credentials_env_var,
            temperature,
        } => {
            let mut h = HttpBackend::new(url, model_name, credentials_env_var.clone());
            h.temperature = *temperature;
            Some(Arc::new(ModelBackend::Http(h)))
        }
    };

    let mut explicit_missing: Vec<SessionRecord> = Vec::new();
    if let TargetSelector::List(names) = &config.targets {
        for name in names {
            if !jobs.iter().any(|j| &j.name == name) {
                explicit_missing.push(SessionRecord::failed(
                    name,
                    FinalStatus::ParseFailed,
                    "target not found in any parsable translation unit".to_string(),
                ));
            }
        }
    }

    let records: Vec<SessionRecord> = crate::par::map_items(&jobs, config.parallelism, |job| {
        let target_dir = config.output_dir.join(&job.name);
        // resume completed targets from their persisted record
        if let Some(existing) = load_session(&target_dir) {
            if existing.final_status == FinalStatus::Completed {
                log::info!("skipping completed target {}", job.name);
                return existing;
            }
        }
        let record = run_target_isolated(job, config, &shared);
        if let Err(e) = persist_session(&target_dir, &record) {
            log::error!("failed to persist session for {}: {e}", job.name);
        }
        record
    });

    let mut all = records;
    all.extend(explicit_missing);
    let report = aggregate(&all);
    emit_reports(&report, &config.output_dir)?;
    Ok(report)
}

fn load_session(target_dir: &Path) -> Option<SessionRecord> {
    let path = target_dir.join("session.json");
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn persist_session(target_dir: &Path, record: &SessionRecord) -> std::io::Result<()> {
    std::fs::create_dir_all(target_dir)?;
    let json = serde_json::to_string_pretty(record).expect("session record serializes");
    std::fs::write(target_dir.join("session.json"), json)
}

/// Panic-equivalent failures in one target's pipeline must leave the other
/// records intact, so each target runs behind a catch_unwind.
fn run_target_isolated(
    job: &TargetJob,
    config: &RunConfig,
    shared: &Option<Arc<ModelBackend>>,
) -> SessionRecord {
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        run_target(job, config, shared)
    }));
    match result {
        Ok(record) => record,
        Err(panic) => {
            let text = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".to_string());
            SessionRecord::failed(
                &job.name,
                FinalStatus::ParseFailed,
                format!("pipeline panicked: {text}"),
            )
        }
    }
}

fn run_target(
    job: &TargetJob,
    config: &RunConfig,
    shared: &Option<Arc<ModelBackend>>,
) -> SessionRecord {
    let started = Instant::now();
    let target = &job.name;
    let target_dir = config.output_dir.join(target);

    let backend = match backend_for_target(config, shared, target) {
        Ok(b) => b,
        Err(e) => {
            return SessionRecord::failed(
                target,
                FinalStatus::ParseFailed,
                format!("backend unavailable: {e}"),
            )
        }
    };

    // closure + mockup
    let graph = build_graph(&job.unit);
    let closure = match implied_closure(&graph, target) {
        Ok(c) => c,
        Err(e) => return SessionRecord::failed(target, FinalStatus::ParseFailed, e.to_string()),
    };
    let mockup_opts = MockupOptions {
        prelude: config.prelude_includes.clone(),
    };
    let mockup = match generate_mockup_with(
        &mockup_opts,
        target,
        &closure,
        &job.unit,
        &graph.external_unresolved,
        &BTreeMap::new(),
    ) {
        Ok(m) => m,
        Err(e) => return SessionRecord::failed(target, FinalStatus::ParseFailed, e.to_string()),
    };
    if let Err(e) = persist_mockup(&target_dir, &mockup) {
        return SessionRecord::failed(target, FinalStatus::ParseFailed, e.to_string());
    }

    // one verifier pass feeds every generation prompt
    let mut counters = ErrorCounters::default();
    let (verifier_verdict, verifier_summary) =
        match run_verifier(&mockup, &config.verifier, &target_dir) {
            Ok(report) => {
                if report.verdict == Verdict::Timeout {
                    counters.verifier_timeouts += 1;
                }
                (
                    report.verdict.to_string(),
                    sensitization_summary(&report, &mockup),
                )
            }
            Err(e) => {
                log::warn!("verifier unavailable for {target}: {e}");
                (
                    "unavailable".to_string(),
                    format!("Verifier unavailable ({e}); no sensitization conditions.\n"),
                )
            }
        };

    let compiler_cfg = CompilerConfig {
        command: config.compiler_command.clone(),
        flags: config.compiler_flags.clone(),
    };
    let coverage_cfg = CoverageToolConfig {
        command: config.coverage_tool_command.clone(),
    };

    let mut state = LoopState::new(config.max_iterations);
    let mut entries: Vec<IterationEntry> = Vec::new();
    let mut prior_suite: Option<TestSuite> = None;
    let mut prior_tests_section: Option<String> = None;
    let mut coverage_summary: Option<String> = None;

    loop {
        let iteration = state.iteration + 1;
        let mut iter_errors = ErrorCounters::default();

        let mut bundle = PromptBundle::new(PromptInstruction::GenerateTests, &mockup.source_text);
        bundle.token_budget = config.token_budget;
        bundle.verifier_summary = Some(verifier_summary.clone());
        bundle.coverage_summary = coverage_summary.clone();
        bundle.prior_tests = prior_tests_section.clone();

        let generated = assemble_prompt(&bundle)
            .map_err(|e| e.to_string())
            .and_then(|prompt| {
                complete(backend.backend(), &prompt).map_err(|e| e.to_string())
            })
            .and_then(|resp| {
                resp.extracted_code
                    .ok_or_else(|| "response contained no code block".to_string())
            });

        let mut entry = IterationEntry {
            iteration,
            compile_ok: false,
            n_cases: 0,
            n_crashed: 0,
            coverage_pct: None,
            rating: None,
            rating_source: None,
            verdicts: vec![format!("verifier: {verifier_verdict}")],
        };

        let verdict: ReflectionVerdict = match generated {
            Err(msg) => {
                log::warn!("{target} iteration {iteration}: generation failed: {msg}");
                iter_errors.compile_errors += 1;
                prior_tests_section = Some(format!(
                    "The previous attempt produced no usable code ({msg}). \
                     Provide a complete fenced C code block."
                ));
                fallback_verdict(None)
            }
            Ok(code) => match build_harness(&mockup, &code, iteration, prior_suite.as_ref()) {
                Err(e) => {
                    log::warn!("{target} iteration {iteration}: harness build failed: {e}");
                    iter_errors.compile_errors += 1;
                    prior_tests_section = Some(format!(
                        "Plan: fix the generation error below\n---\n\
                         The previous code could not be turned into a harness: {e}\n\n{code}"
                    ));
                    fallback_verdict(None)
                }
                Ok(suite) => {
                    entry.n_cases = suite.cases.len() as u32;
                    match compile_suite(&suite, &compiler_cfg, &target_dir) {
                        Err(e) => {
                            log::warn!("{target}: compiler unavailable: {e}");
                            iter_errors.compile_errors += 1;
                            reflect(None, &suite, &mockup, backend.backend(), config.token_budget)
                        }
                        Ok(CompileOutcome::CompileFailure { diagnostics }) => {
                            iter_errors.compile_errors += 1;
                            entry.verdicts.push("compile: failed".to_string());
                            prior_tests_section = Some(format!(
                                "Plan: fix the compile errors below\n---\n\
                                 Compiler diagnostics:\n{diagnostics}\n\nPrevious code:\n{code}"
                            ));
                            reflect(None, &suite, &mockup, backend.backend(), config.token_budget)
                        }
                        Ok(CompileOutcome::Compiled(binary)) => {
                            entry.compile_ok = true;
                            entry.verdicts.push("compile: ok".to_string());
                            let executed =
                                match execute_suite(&binary, &suite, config.per_case_timeout) {
                                    Ok(s) => s,
                                    Err(e) => {
                                        log::error!("{target}: execution failed: {e}");
                                        suite.clone()
                                    }
                                };
                            let newly_crashed = executed
                                .cases
                                .iter()
                                .filter(|c| c.status == TestCaseStatus::Crashed)
                                .count() as u32;
                            iter_errors.crashes += newly_crashed;
                            entry.n_crashed = newly_crashed;
                            let disabled = disable_crashed(&executed, &mockup);
                            // re-persist the harness with crash annotations
                            let _ = std::fs::write(
                                target_dir.join(disabled.harness_file_name()),
                                &disabled.harness_source,
                            );
                            let coverage =
                                match measure_coverage(&target_dir, &mockup, &coverage_cfg) {
                                    Ok(c) => Some(c),
                                    Err(e) => {
                                        log::warn!("{target}: coverage unavailable: {e}");
                                        None
                                    }
                                };
                            if let Some(cov) = &coverage {
                                entry.coverage_pct = Some(cov.line_coverage_pct);
                                coverage_summary = Some(cov.summary_text());
                                let _ = std::fs::write(
                                    target_dir.join(format!("{target}_coverage.json")),
                                    serde_json::to_string_pretty(cov).expect("coverage serializes"),
                                );
                            } else {
                                coverage_summary = None;
                            }
                            let _ = clear_coverage_data(&target_dir);
                            let verdict = reflect(
                                coverage.as_ref(),
                                &disabled,
                                &mockup,
                                backend.backend(),
                                config.token_budget,
                            );
                            prior_tests_section = Some(format!(
                                "Plan: {}\n---\n{}",
                                verdict.plan, disabled.harness_source
                            ));
                            prior_suite = Some(disabled);
                            verdict
                        }
                    }
                }
            },
        };

        entry.rating = Some(verdict.rating);
        entry.rating_source = Some(verdict.source);
        entry
            .verdicts
            .push(format!("reflection: {:?}", verdict.source));
        counters.compile_errors += iter_errors.compile_errors;
        counters.crashes += iter_errors.crashes;
        state.rating_history.push(verdict);
        state.iteration = iteration;
        state.last_errors = iter_errors;
        entries.push(entry);

        match should_continue(&state) {
            LoopDecision::ContinueLoop => continue,
            LoopDecision::ExitSuccess | LoopDecision::ExitBudgetExhausted => break,
        }
    }

    let final_status = if entries.last().map(|e| e.compile_ok).unwrap_or(false) {
        FinalStatus::Completed
    } else {
        FinalStatus::NeverCompiled
    };

    SessionRecord {
        target: target.clone(),
        verifier_verdict,
        entries,
        final_status,
        wall_time_secs: started.elapsed().as_secs_f64(),
        counters,
        error: None,
    }
}

fn persist_mockup(target_dir: &Path, mockup: &MockupUnit) -> std::io::Result<()> {
    std::fs::create_dir_all(target_dir)?;
    std::fs::write(
        target_dir.join(mockup.default_file_name()),
        &mockup.source_text,
    )?;
    std::fs::write(target_dir.join(mockup.map_file_name()), mockup.map_json())
}

/// Reload every persisted session record under an output directory, in
/// target order.
pub fn load_session_records(output_dir: &Path) -> std::io::Result<Vec<SessionRecord>> {
    let mut records = Vec::new();
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(output_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        if let Some(record) = load_session(&dir) {
            records.push(record);
        }
    }
    Ok(records)
}

fn fmt_opt_u8(v: Option<u8>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_opt_i32(v: Option<i32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_opt_pct(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_default()
}

/// Write the machine-readable summary, the per-target CSV, and the two
/// plot-ready CSVs (initial vs final rating; cycles vs gain).
pub fn emit_reports(report: &AggregateReport, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let summary = dir.join("summary.json");
    std::fs::write(
        &summary,
        serde_json::to_string_pretty(report).expect("report serializes"),
    )?;
    written.push(summary);

    let mut csv = String::from(
        "target,initial_rating,final_rating,cycles,gain,coverage_pct,compile_errors,crashes,verifier_timeouts,final_status\n",
    );
    for t in &report.per_target {
        let status = match t.final_status {
            FinalStatus::Completed => "completed",
            FinalStatus::ParseFailed => "parse_failed",
            FinalStatus::NeverCompiled => "never_compiled",
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            t.target,
            fmt_opt_u8(t.initial_rating),
            fmt_opt_u8(t.final_rating),
            t.cycles,
            fmt_opt_i32(t.gain),
            fmt_opt_pct(t.coverage_pct),
            t.compile_errors,
            t.crashes,
            t.verifier_timeouts,
            status,
        ));
    }
    let targets_csv = dir.join("targets.csv");
    std::fs::write(&targets_csv, csv)?;
    written.push(targets_csv);

    let mut rq1 = String::from("initial_rating,final_rating\n");
    for t in &report.per_target {
        if let (Some(i), Some(f)) = (t.initial_rating, t.final_rating) {
            rq1.push_str(&format!("{i},{f}\n"));
        }
    }
    let rq1_path = dir.join("rq1_initial_vs_final.csv");
    std::fs::write(&rq1_path, rq1)?;
    written.push(rq1_path);

    let mut rq3 = String::from("cycles,gain\n");
    for t in &report.per_target {
        if let Some(g) = t.gain {
            rq3.push_str(&format!("{},{}\n", t.cycles, g));
        }
    }
    let rq3_path = dir.join("rq3_cycles_vs_gain.csv");
    std::fs::write(&rq3_path, rq3)?;
    written.push(rq3_path);

    Ok(written)
}
