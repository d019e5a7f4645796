//! Pipeline library for generating, executing, and iteratively improving
//! unit-test suites for legacy C functions.
//!
//! The pipeline runs five stages per target function:
//!
//! 1. parse the translation unit and compute the transitive closure of the
//!    target's symbol dependencies ([`c_frontend`]),
//! 2. consolidate the closure into one self-contained C file with statics
//!    exposed and unresolved externals stubbed ([`mockup`]),
//! 3. run an external bounded model checker on the consolidated file and
//!    extract sensitization conditions from its counterexamples
//!    ([`verifier`]),
//! 4. ask a chat-completion backend for candidate tests, compile them with
//!    coverage instrumentation, and execute each case in its own process
//!    ([`llm`], [`harness`]),
//! 5. rate the suite and decide whether the per-function loop continues
//!    ([`reflection`]).
//!
//! [`orchestrator`] drives the loop across a codebase and aggregates run
//! reports; [`stats`] holds the reporting statistics.

pub mod c_frontend;
pub mod config;
pub mod harness;
pub mod llm;
pub mod mockup;
pub mod orchestrator;
pub mod par;
pub mod reflection;
pub mod stats;
pub mod verifier;

pub use c_frontend::{
    build_graph, implied_closure, parse_unit, SymbolDecl, SymbolGraph, SymbolKind, SymbolStorage,
    TranslationUnit,
};
pub use config::{BackendConfig, RunConfig, TargetSelector};
pub use harness::{CoverageReport, TestCase, TestCaseStatus, TestSuite};
pub use llm::{ModelBackend, ModelResponse, PromptBundle, PromptInstruction};
pub use mockup::{generate_mockup, MockupUnit, StubBehavior, StubDecl};
pub use orchestrator::{run_pipeline, AggregateReport, SessionRecord};
pub use reflection::{should_continue, LoopDecision, LoopState, ReflectionVerdict};
pub use verifier::{run_verifier, parse_counterexample, Verdict, VerifierConfig, VerifierReport, Violation};
