//! Prompt assembly and pluggable chat-completion backends.
//!
//! Prompts are concatenated in a fixed section order so identical inputs
//! produce byte-identical prompts. The scripted backend replays canned
//! response files in order, which makes whole pipeline runs reproducible.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use regex::Regex;
use std::sync::OnceLock;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("mockup source alone ({source_chars} chars) exceeds the prompt budget ({budget})")]
    SourceTooLarge { source_chars: usize, budget: usize },
    #[error("scripted backend exhausted after {consumed} responses from {dir}")]
    ScriptExhausted { dir: PathBuf, consumed: usize },
    #[error("endpoint unreachable after {attempts} attempts: {last_error}")]
    EndpointUnreachable { attempts: u32, last_error: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptInstruction {
    GenerateTests,
    Reflect,
}

pub const GENERATE_TEMPLATE: &str = include_str!("templates/generate.txt");
pub const REFLECT_TEMPLATE: &str = include_str!("templates/reflect.txt");

pub const DEFAULT_TOKEN_BUDGET: usize = 32_768;

#[derive(Debug, Clone)]
pub struct PromptBundle {
    pub mockup_source: String,
    pub prior_tests: Option<String>,
    pub coverage_summary: Option<String>,
    pub verifier_summary: Option<String>,
    pub instruction: PromptInstruction,
    /// Character-approximated budget for the assembled prompt.
    pub token_budget: usize,
}

impl PromptBundle {
    pub fn new(instruction: PromptInstruction, mockup_source: &str) -> Self {
        PromptBundle {
            mockup_source: mockup_source.to_string(),
            prior_tests: None,
            coverage_summary: None,
            verifier_summary: None,
            instruction,
            token_budget: DEFAULT_TOKEN_BUDGET,
        }
    }
}

struct Section {
    header: &'static str,
    body: String,
}

fn render(sections: &[Section]) -> String {
    let mut out = String::new();
    for s in sections {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(s.header);
        out.push('\n');
        out.push_str(s.body.trim_end_matches('\n'));
        out.push('\n');
    }
    out
}

/// Deterministic concatenation in fixed section order: instruction, source,
/// verifier summary, coverage, prior tests. Over budget, bodies are cut
/// tail-first in reverse priority order (prior tests, then coverage, then
/// verifier summary); the mockup source is never cut.
pub fn assemble_prompt(bundle: &PromptBundle) -> Result<String, GatewayError> {
    let instruction = match bundle.instruction {
        PromptInstruction::GenerateTests => GENERATE_TEMPLATE,
        PromptInstruction::Reflect => REFLECT_TEMPLATE,
    };
    let mut sections: Vec<Section> = vec![
        Section {
            header: "## Instruction",
            body: instruction.to_string(),
        },
        Section {
            header: "## Source Under Test",
            body: bundle.mockup_source.clone(),
        },
    ];
    if let Some(v) = &bundle.verifier_summary {
        sections.push(Section {
            header: "## Verifier Findings",
            body: v.clone(),
        });
    }
    if let Some(c) = &bundle.coverage_summary {
        sections.push(Section {
            header: "## Coverage",
            body: c.clone(),
        });
    }
    if let Some(p) = &bundle.prior_tests {
        sections.push(Section {
            header: "## Prior Tests",
            body: p.clone(),
        });
    }

    let budget = bundle.token_budget;
    let mut prompt = render(&sections);
    if prompt.chars().count() <= budget {
        return Ok(prompt);
    }
    // cut in reverse priority: prior tests, coverage, verifier findings
    for header in ["## Prior Tests", "## Coverage", "## Verifier Findings"] {
        let over = prompt.chars().count().saturating_sub(budget);
        if over == 0 {
            break;
        }
        if let Some(idx) = sections.iter().position(|s| s.header == header) {
            let body_len = sections[idx].body.chars().count();
            if body_len > over {
                let keep = body_len - over;
                sections[idx].body = sections[idx].body.chars().take(keep).collect();
            } else {
                sections.remove(idx);
            }
            prompt = render(&sections);
        }
    }
    let total = prompt.chars().count();
    if total > budget {
        return Err(GatewayError::SourceTooLarge {
            source_chars: bundle.mockup_source.chars().count(),
            budget,
        });
    }
    Ok(prompt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelResponse {
    pub text: String,
    pub extracted_code: Option<String>,
    pub extracted_rating: Option<u8>,
    pub extracted_plan: Option<String>,
}

fn fence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[a-zA-Z]*\r?\n(.*?)```").unwrap())
}

fn rating_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^\s*RATING:\s*(-?\d+)\s*$").unwrap())
}

fn plan_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?ms)^\s*PLAN:\s*(.+)$").unwrap())
}

impl ModelResponse {
    /// Extract the first fenced code block and the RATING/PLAN fields from a
    /// raw completion. Out-of-range ratings clamp into 0..=8 and are flagged
    /// in the log.
    pub fn parse(text: &str) -> Self {
        let extracted_code = fence_re()
            .captures(text)
            .map(|c| c[1].to_string())
            .filter(|code| !code.trim().is_empty());
        let extracted_rating = rating_re().captures(text).map(|c| {
            let raw: i64 = c[1].parse().unwrap_or(0);
            let clamped = raw.clamp(0, 8) as u8;
            if !(0..=8).contains(&raw) {
                log::warn!("model rating {raw} out of range, clamped to {clamped}");
            }
            clamped
        });
        let extracted_plan = plan_re()
            .captures(text)
            .map(|c| c[1].trim().to_string())
            .filter(|p| !p.is_empty());
        ModelResponse {
            text: text.to_string(),
            extracted_code,
            extracted_rating,
            extracted_plan,
        }
    }
}

/// Deterministic scripted backend: replays response files in lexicographic
/// order and fails loudly when the script runs out.
#[derive(Debug)]
pub struct ScriptedBackend {
    dir: PathBuf,
    files: Vec<PathBuf>,
    cursor: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn from_dir(dir: &Path) -> Result<Self, GatewayError> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file() && p.extension().map(|x| x == "txt").unwrap_or(false))
            .collect();
        files.sort();
        Ok(ScriptedBackend {
            dir: dir.to_path_buf(),
            files,
            cursor: Mutex::new(0),
        })
    }

    pub fn remaining(&self) -> usize {
        let cur = *self.cursor.lock().unwrap();
        self.files.len().saturating_sub(cur)
    }

    fn next_response(&self) -> Result<String, GatewayError> {
        let mut cur = self.cursor.lock().unwrap();
        if *cur >= self.files.len() {
            return Err(GatewayError::ScriptExhausted {
                dir: self.dir.clone(),
                consumed: *cur,
            });
        }
        let text = std::fs::read_to_string(&self.files[*cur])?;
        *cur += 1;
        Ok(text)
    }
}

/// Configuration of an HTTP chat-completion endpoint with an
/// OpenAI-compatible request shape.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    pub url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer credential.
    /// Credentials never appear in config files.
    pub credentials_env_var: Option<String>,
    pub temperature: f64,
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl HttpBackend {
    pub fn new(url: &str, model_name: &str, credentials_env_var: Option<String>) -> Self {
        HttpBackend {
            url: url.to_string(),
            model_name: model_name.to_string(),
            credentials_env_var,
            temperature: 0.0,
            max_attempts: 3,
            base_delay: Duration::from_millis(100),
        }
    }

    fn request_once(&self, prompt: &str) -> Result<String, String> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| e.to_string())?;
        let body = serde_json::json!({
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        });
        let mut req = client.post(&self.url).json(&body);
        if let Some(var) = &self.credentials_env_var {
            if let Ok(token) = std::env::var(var) {
                req = req.bearer_auth(token);
            }
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("http status {}", resp.status()));
        }
        let json: serde_json::Value = resp.json().map_err(|e| e.to_string())?;
        json.pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .map(|s| s.to_string())
            .ok_or_else(|| "response missing choices[0].message.content".to_string())
    }

    fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        let mut last_error = String::new();
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                std::thread::sleep(self.base_delay * 2u32.pow(attempt - 1));
            }
            match self.request_once(prompt) {
                Ok(text) => return Ok(text),
                Err(e) => last_error = e,
            }
        }
        Err(GatewayError::EndpointUnreachable {
            attempts: self.max_attempts,
            last_error,
        })
    }
}

#[derive(Debug)]
pub enum ModelBackend {
    Http(HttpBackend),
    Scripted(ScriptedBackend),
}

impl ModelBackend {
    pub fn scripted(dir: &Path) -> Result<Self, GatewayError> {
        Ok(ModelBackend::Scripted(ScriptedBackend::from_dir(dir)?))
    }
}

/// Send one prompt to the backend and parse the raw completion.
pub fn complete(backend: &ModelBackend, prompt: &str) -> Result<ModelResponse, GatewayError> {
    let text = match backend {
        ModelBackend::Scripted(s) => s.next_response()?,
        ModelBackend::Http(h) => h.complete(prompt)?,
    };
    Ok(ModelResponse::parse(&text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_bundle_has_two_sections() {
        let bundle = PromptBundle::new(PromptInstruction::GenerateTests, "int f(void){return 0;}");
        let prompt = assemble_prompt(&bundle).unwrap();
        assert_eq!(prompt.matches("## ").count(), 2);
        assert!(prompt.contains("## Instruction"));
        assert!(prompt.contains("## Source Under Test"));
        let inst = prompt.find("## Instruction").unwrap();
        let src = prompt.find("## Source Under Test").unwrap();
        assert!(inst < src);
    }

    #[test]
    fn identical_bundles_identical_prompts() {
        let mut bundle = PromptBundle::new(PromptInstruction::Reflect, "int f;");
        bundle.coverage_summary = Some("50% covered".to_string());
        let a = assemble_prompt(&bundle).unwrap();
        let b = assemble_prompt(&bundle).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn section_order_is_fixed() {
        let mut bundle = PromptBundle::new(PromptInstruction::GenerateTests, "src");
        bundle.prior_tests = Some("tests".into());
        bundle.coverage_summary = Some("cov".into());
        bundle.verifier_summary = Some("verif".into());
        let p = assemble_prompt(&bundle).unwrap();
        let order = [
            "## Instruction",
            "## Source Under Test",
            "## Verifier Findings",
            "## Coverage",
            "## Prior Tests",
        ];
        let mut last = 0;
        for h in order {
            let pos = p.find(h).unwrap_or_else(|| panic!("missing {h}"));
            assert!(pos >= last, "{h} out of order");
            last = pos;
        }
    }

    #[test]
    fn over_budget_truncates_prior_tests_first() {
        let mut bundle = PromptBundle::new(PromptInstruction::GenerateTests, "short source");
        bundle.verifier_summary = Some("V".repeat(100));
        bundle.coverage_summary = Some("C".repeat(100));
        bundle.prior_tests = Some("P".repeat(2000));
        // size everything: baseline without prior tests
        let mut without = bundle.clone();
        without.prior_tests = None;
        let base = assemble_prompt(&without).unwrap().chars().count();
        // leave room for the header plus 300 chars of prior tests
        bundle.token_budget = base + "\n## Prior Tests\n".chars().count() + 300 + 1;
        let p = assemble_prompt(&bundle).unwrap();
        assert!(p.chars().count() <= bundle.token_budget);
        // other sections intact
        assert!(p.contains(&"V".repeat(100)));
        assert!(p.contains(&"C".repeat(100)));
        // prior tests truncated tail-first but head kept
        assert!(p.contains("## Prior Tests"));
        assert!(p.contains(&"P".repeat(200)));
        assert!(!p.contains(&"P".repeat(1999)));
    }

    #[test]
    fn source_too_large_is_an_error() {
        let mut bundle = PromptBundle::new(PromptInstruction::GenerateTests, &"s".repeat(4000));
        bundle.token_budget = 1000;
        assert!(matches!(
            assemble_prompt(&bundle),
            Err(GatewayError::SourceTooLarge { .. })
        ));
    }

    #[test]
    fn response_extracts_code_fence() {
        let r = ModelResponse::parse("Here you go:\n```c\nvoid test_a(void) { }\n```\nDone.");
        assert_eq!(r.extracted_code.as_deref(), Some("void test_a(void) { }\n"));
    }

    #[test]
    fn response_without_fence_has_no_code() {
        let r = ModelResponse::parse("I can't produce tests for that.");
        assert!(r.extracted_code.is_none());
    }

    #[test]
    fn rating_and_plan_extraction() {
        let r = ModelResponse::parse("RATING: 5\nPLAN: add boundary tests");
        assert_eq!(r.extracted_rating, Some(5));
        assert_eq!(r.extracted_plan.as_deref(), Some("add boundary tests"));
    }

    #[test]
    fn out_of_range_rating_clamped() {
        assert_eq!(ModelResponse::parse("RATING: 12\nPLAN: x").extracted_rating, Some(8));
        assert_eq!(ModelResponse::parse("RATING: -3\nPLAN: x").extracted_rating, Some(0));
    }

    #[test]
    fn scripted_backend_replays_in_order_and_exhausts() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("001.txt"), "second").unwrap();
        std::fs::write(dir.path().join("000.txt"), "first").unwrap();
        let backend = ModelBackend::scripted(dir.path()).unwrap();
        assert_eq!(complete(&backend, "p").unwrap().text, "first");
        assert_eq!(complete(&backend, "p").unwrap().text, "second");
        match complete(&backend, "p") {
            Err(GatewayError::ScriptExhausted { consumed, .. }) => assert_eq!(consumed, 2),
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn http_backend_against_local_listener() {
        use std::io::{Read, Write};
        use std::net::TcpListener;
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            // first connection: refused response; second: valid completion
            for i in 0..2 {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = [0u8; 4096];
                let _ = stream.read(&mut buf);
                let body = if i == 0 {
                    "HTTP/1.1 500 Internal Server Error\r\ncontent-length: 0\r\n\r\n".to_string()
                } else {
                    let json = r#"{"choices":[{"message":{"content":"RATING: 7\nPLAN: ok"}}]}"#;
                    format!(
                        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
                        json.len(),
                        json
                    )
                };
                stream.write_all(body.as_bytes()).unwrap();
            }
        });
        let backend = ModelBackend::Http(HttpBackend::new(
            &format!("http://{addr}/v1/chat/completions"),
            "test-model",
            None,
        ));
        let resp = complete(&backend, "rate this").unwrap();
        assert_eq!(resp.extracted_rating, Some(7));
        handle.join().unwrap();
    }

    #[test]
    fn unreachable_endpoint_errors_after_retries() {
        let mut h = HttpBackend::new("http://127.0.0.1:1/nothing", "m", None);
        h.base_delay = Duration::from_millis(1);
        let backend = ModelBackend::Http(h);
        match complete(&backend, "p") {
            Err(GatewayError::EndpointUnreachable { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("expected unreachable, got {other:?}"),
        }
    }
}
