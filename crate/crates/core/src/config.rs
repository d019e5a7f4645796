//! Run configuration: a flat TOML file whose keys mirror the RunConfig
//! fields, plus CLI-side overrides.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::verifier::VerifierConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSelector {
    All,
    List(Vec<String>),
    Glob(String),
}

impl TargetSelector {
    pub fn matches(&self, name: &str) -> bool {
        match self {
            TargetSelector::All => true,
            TargetSelector::List(names) => names.iter().any(|n| n == name),
            TargetSelector::Glob(pat) => glob_match(pat, name),
        }
    }

    pub fn parse(text: &str) -> TargetSelector {
        if text == "all" {
            TargetSelector::All
        } else {
            TargetSelector::Glob(text.to_string())
        }
    }
}

/// Shell-style glob with `*` and `?` only, anchored at both ends.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    let mut regex = String::from("^");
    for c in pattern.chars() {
        match c {
            '*' => regex.push_str(".*"),
            '?' => regex.push('.'),
            c if c.is_ascii_alphanumeric() || c == '_' => regex.push(c),
            c => {
                regex.push('\\');
                regex.push(c);
            }
        }
    }
    regex.push('$');
    regex::Regex::new(&regex)
        .map(|re| re.is_match(name))
        .unwrap_or(false)
}

#[derive(Debug, Clone)]
pub enum BackendConfig {
    Scripted { script_dir: PathBuf },
    Http {
        url: String,
        model_name: String,
        credentials_env_var: Option<String>,
        temperature: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source_roots: Vec<PathBuf>,
    pub targets: TargetSelector,
    pub verifier: VerifierConfig,
    pub backend: BackendConfig,
    pub max_iterations: u32,
    pub compiler_command: String,
    pub compiler_flags: Vec<String>,
    pub coverage_tool_command: String,
    pub output_dir: PathBuf,
    pub parallelism: usize,
    pub include_dirs: Vec<String>,
    pub defines: Vec<String>,
    pub per_case_timeout: Duration,
    pub token_budget: usize,
    /// System headers emitted at the top of every mockup.
    pub prelude_includes: Vec<String>,
}

impl RunConfig {
    /// Defaults matching the experimental protocol: 10 s verifier timeout,
    /// 4 iterations, one worker for deterministic logs.
    pub fn new(source_roots: Vec<PathBuf>, backend: BackendConfig, output_dir: PathBuf) -> Self {
        RunConfig {
            source_roots,
            targets: TargetSelector::All,
            verifier: VerifierConfig::default(),
            backend,
            max_iterations: 4,
            compiler_command: "cc".to_string(),
            compiler_flags: vec![
                "-std=gnu99".to_string(),
                "-O0".to_string(),
                "--coverage".to_string(),
            ],
            coverage_tool_command: "gcov".to_string(),
            output_dir,
            parallelism: 1,
            include_dirs: Vec::new(),
            defines: Vec::new(),
            per_case_timeout: Duration::from_secs(5),
            token_budget: crate::llm::DEFAULT_TOKEN_BUDGET,
            prelude_includes: crate::mockup::DEFAULT_PRELUDE
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.source_roots.is_empty() {
            return Err(ConfigError::Invalid("source_roots must not be empty".into()));
        }
        if self.max_iterations == 0 {
            return Err(ConfigError::Invalid("max_iterations must be >= 1".into()));
        }
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid("parallelism must be >= 1".into()));
        }
        if self.verifier.timeout.is_zero() {
            return Err(ConfigError::Invalid("verifier.timeout_secs must be > 0".into()));
        }
        if self.verifier.unwind_bound == 0 {
            return Err(ConfigError::Invalid("verifier.unwind_bound must be >= 1".into()));
        }
        std::fs::create_dir_all(&self.output_dir).map_err(|e| {
            ConfigError::Invalid(format!(
                "output_dir {} is not writable: {e}",
                self.output_dir.display()
            ))
        })?;
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawTargets {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerifier {
    executable: Option<String>,
    extra_flags: Option<Vec<String>>,
    timeout_secs: Option<f64>,
    unwind_bound: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBackend {
    kind: String,
    script_dir: Option<String>,
    url: Option<String>,
    model_name: Option<String>,
    credentials_env_var: Option<String>,
    temperature: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    source_roots: Vec<String>,
    targets: Option<RawTargets>,
    verifier: Option<RawVerifier>,
    backend: Option<RawBackend>,
    max_iterations: Option<u32>,
    compiler_command: Option<String>,
    compiler_flags: Option<Vec<String>>,
    coverage_tool_command: Option<String>,
    output_dir: Option<String>,
    parallelism: Option<usize>,
    include_dirs: Option<Vec<String>>,
    defines: Option<Vec<String>>,
    per_case_timeout_secs: Option<f64>,
    token_budget: Option<usize>,
    prelude_includes: Option<Vec<String>>,
}

/// Load a RunConfig from a TOML file. Paths in the file are interpreted
/// relative to the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
        path: path.to_path_buf(),
        source: e,
    })?;
    let raw: RawConfig = toml::from_str(&text)?;
    // resolve config-relative paths against the file's absolute directory,
    // so later subprocess spawns with their own working directories cannot
    // reinterpret them
    let canonical = path.canonicalize().map_err(|e| ConfigError::Unreadable {
        path: path.to_path_buf(),
        source: e,
    })?;
    let base = canonical
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    let resolve = |p: &str| -> PathBuf {
        let pb = PathBuf::from(p);
        if pb.is_absolute() {
            pb
        } else {
            base.join(pb)
        }
    };

    let backend = match raw.backend {
        None => {
            return Err(ConfigError::Invalid(
                "a [backend] section is required (kind = \"scripted\" or \"http\")".into(),
            ))
        }
        Some(b) => match b.kind.as_str() {
            "scripted" => BackendConfig::Scripted {
                script_dir: resolve(&b.script_dir.ok_or_else(|| {
                    ConfigError::Invalid("backend.script_dir required for scripted".into())
                })?),
            },
            "http" => BackendConfig::Http {
                url: b.url.ok_or_else(|| {
                    ConfigError::Invalid("backend.url required for http".into())
                })?,
                model_name: b.model_name.unwrap_or_else(|| "default".to_string()),
                credentials_env_var: b.credentials_env_var,
                temperature: b.temperature.unwrap_or(0.0),
            },
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown backend.kind `{other}`"
                )))
            }
        },
    };

    let mut verifier = VerifierConfig::default();
    if let Some(v) = raw.verifier {
        if let Some(exe) = v.executable {
            // a file next to the config wins; otherwise treat the value as
            // a command to find on the search path
            let candidate = resolve(&exe);
            verifier.executable = if candidate.exists() {
                candidate
            } else {
                PathBuf::from(exe)
            };
        }
        if let Some(f) = v.extra_flags {
            verifier.extra_flags = f;
        }
        if let Some(t) = v.timeout_secs {
            verifier.timeout = Duration::from_secs_f64(t);
        }
        if let Some(u) = v.unwind_bound {
            verifier.unwind_bound = u;
        }
    }

    let output_dir = resolve(raw.output_dir.as_deref().unwrap_or("forge-out"));
    let mut cfg = RunConfig::new(
        raw.source_roots.iter().map(|p| resolve(p)).collect(),
        backend,
        output_dir,
    );
    cfg.verifier = verifier;
    cfg.targets = match raw.targets {
        None => TargetSelector::All,
        Some(RawTargets::One(s)) => TargetSelector::parse(&s),
        Some(RawTargets::Many(v)) => TargetSelector::List(v),
    };
    if let Some(m) = raw.max_iterations {
        cfg.max_iterations = m;
    }
    if let Some(c) = raw.compiler_command {
        cfg.compiler_command = c;
    }
    if let Some(f) = raw.compiler_flags {
        cfg.compiler_flags = f;
    }
    if let Some(c) = raw.coverage_tool_command {
        cfg.coverage_tool_command = c;
    }
    if let Some(p) = raw.parallelism {
        cfg.parallelism = p;
    }
    if let Some(i) = raw.include_dirs {
        cfg.include_dirs = i;
    }
    if let Some(d) = raw.defines {
        cfg.defines = d;
    }
    if let Some(t) = raw.per_case_timeout_secs {
        cfg.per_case_timeout = Duration::from_secs_f64(t);
    }
    if let Some(t) = raw.token_budget {
        cfg.token_budget = t;
    }
    if let Some(p) = raw.prelude_includes {
        cfg.prelude_includes = p;
    }
    cfg.validate()?;
    Ok(cfg)
}
