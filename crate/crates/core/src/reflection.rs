//! Reflection step: rate the current suite 0-8, produce an improvement
//! plan, and decide whether the per-function loop continues.

use serde::{Deserialize, Serialize};

use crate::harness::{CoverageReport, TestSuite};
use crate::llm::{assemble_prompt, complete, ModelBackend, PromptBundle, PromptInstruction};
use crate::mockup::MockupUnit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    Model,
    HeuristicFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionVerdict {
    /// 0..=8 quality rating.
    pub rating: u8,
    pub plan: String,
    pub source: VerdictSource,
}

/// Coverage-proportional fallback rating: floor(pct/100 * 8).
pub fn heuristic_rating(line_coverage_pct: f64) -> u8 {
    ((line_coverage_pct / 100.0) * 8.0).floor().clamp(0.0, 8.0) as u8
}

/// The heuristic verdict used whenever no schema-valid model reply is
/// available. Also what iterations without coverage data record.
pub fn fallback_verdict(coverage: Option<&CoverageReport>) -> ReflectionVerdict {
    match coverage {
        Some(cov) => {
            let plan = if cov.uncovered_lines.is_empty() {
                "coverage complete; keep the suite as regression tests".to_string()
            } else {
                let lines: Vec<String> =
                    cov.uncovered_lines.iter().map(|l| l.to_string()).collect();
                format!("cover mockup lines {}", lines.join(", "))
            };
            ReflectionVerdict {
                rating: heuristic_rating(cov.line_coverage_pct),
                plan,
                source: VerdictSource::HeuristicFallback,
            }
        }
        None => ReflectionVerdict {
            rating: 0,
            plan: "no coverage data; produce a suite that compiles and runs".to_string(),
            source: VerdictSource::HeuristicFallback,
        },
    }
}

fn render_case_outcomes(suite: &TestSuite) -> String {
    let mut s = String::new();
    for c in &suite.cases {
        let status = match c.status {
            crate::harness::TestCaseStatus::Untried => "untried",
            crate::harness::TestCaseStatus::Passed => "passed",
            crate::harness::TestCaseStatus::FailedAssert => "failed assertion",
            crate::harness::TestCaseStatus::Crashed => "crashed",
            crate::harness::TestCaseStatus::DisabledCrash => "disabled after crash",
        };
        s.push_str(&format!("- {}: {status}", c.name));
        if let Some(sig) = &c.crash_signal {
            s.push_str(&format!(" ({sig})"));
        }
        s.push('\n');
    }
    s
}

/// Rate the current suite. A schema-valid model response wins; anything
/// else (malformed reply, exhausted script, unreachable endpoint, missing
/// coverage) falls back to the coverage heuristic, so reflection is total.
///
/// Without coverage there is nothing for the model to rate, so the backend
/// is not consulted at all; the heuristic verdict is recorded directly.
pub fn reflect(
    coverage: Option<&CoverageReport>,
    suite: &TestSuite,
    mockup: &MockupUnit,
    backend: &ModelBackend,
    token_budget: usize,
) -> ReflectionVerdict {
    let cov = match coverage {
        Some(c) => c,
        None => return fallback_verdict(None),
    };
    let mut bundle = PromptBundle::new(PromptInstruction::Reflect, &mockup.source_text);
    bundle.token_budget = token_budget;
    bundle.coverage_summary = Some(cov.summary_text());
    bundle.prior_tests = Some(format!(
        "Case outcomes:\n{}\nHarness source:\n{}",
        render_case_outcomes(suite),
        suite.harness_source
    ));
    let prompt = match assemble_prompt(&bundle) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("reflection prompt assembly failed ({e}); falling back to heuristic");
            return fallback_verdict(coverage);
        }
    };
    match complete(backend, &prompt) {
        Ok(resp) => match (resp.extracted_rating, resp.extracted_plan) {
            (Some(rating), Some(plan)) => ReflectionVerdict {
                rating,
                plan,
                source: VerdictSource::Model,
            },
            _ => {
                log::warn!("reflection reply missing RATING/PLAN; using heuristic");
                fallback_verdict(coverage)
            }
        },
        Err(e) => {
            log::warn!("reflection call failed ({e}); using heuristic");
            fallback_verdict(coverage)
        }
    }
}

/// Error counters of the most recent iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounters {
    pub compile_errors: u32,
    pub crashes: u32,
    pub verifier_timeouts: u32,
}

#[derive(Debug, Clone, Default)]
pub struct LoopState {
    /// Completed generate/evaluate iterations.
    pub iteration: u32,
    pub max_iterations: u32,
    /// Counters of the latest iteration, not cumulative.
    pub last_errors: ErrorCounters,
    pub rating_history: Vec<ReflectionVerdict>,
}

impl LoopState {
    pub fn new(max_iterations: u32) -> Self {
        LoopState {
            max_iterations,
            ..LoopState::default()
        }
    }

    /// Hard safety cap: no target loops past twice the budget.
    pub fn hard_cap(&self) -> u32 {
        2 * self.max_iterations
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopDecision {
    ContinueLoop,
    ExitSuccess,
    ExitBudgetExhausted,
}

/// Exit once the iteration budget is reached and the latest iteration had no
/// compile errors; unconditionally stop at twice the budget.
pub fn should_continue(state: &LoopState) -> LoopDecision {
    if state.iteration >= state.hard_cap() {
        return LoopDecision::ExitBudgetExhausted;
    }
    if state.iteration >= state.max_iterations && state.last_errors.compile_errors == 0 {
        return LoopDecision::ExitSuccess;
    }
    LoopDecision::ContinueLoop
}
