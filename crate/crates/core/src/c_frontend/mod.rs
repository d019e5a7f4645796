//! C translation-unit frontend: external preprocessing, top-level symbol
//! scanning, dependency graph construction, and transitive closure ordering.

pub mod graph;
pub mod lexer;
pub mod parser;

pub use graph::{build_graph, implied_closure, GraphError, SymbolGraph};
pub use parser::{
    parse_source, FrontendError, LineOrigin, Span, SymbolDecl, SymbolKind, SymbolStorage,
    TagKind, TranslationUnit,
};

use std::path::Path;
use std::process::Command;

/// Default preprocessor invocation, `cc -E`-equivalent.
pub const DEFAULT_PREPROCESSOR: &[&str] = &["cc", "-E"];

/// Preprocess `source_path` with the system C preprocessor and parse the
/// result into a translation unit.
pub fn parse_unit(
    source_path: &Path,
    include_dirs: &[String],
    defines: &[String],
) -> Result<TranslationUnit, FrontendError> {
    let cmd: Vec<String> = DEFAULT_PREPROCESSOR.iter().map(|s| s.to_string()).collect();
    parse_unit_with(&cmd, source_path, include_dirs, defines)
}

/// Like [`parse_unit`] with an explicit preprocessor command line
/// (program + leading flags).
pub fn parse_unit_with(
    preprocessor: &[String],
    source_path: &Path,
    include_dirs: &[String],
    defines: &[String],
) -> Result<TranslationUnit, FrontendError> {
    if !source_path.exists() {
        return Err(FrontendError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("source file not found: {}", source_path.display()),
        )));
    }
    let (prog, flags) = preprocessor
        .split_first()
        .expect("preprocessor command must not be empty");
    let mut cmd = Command::new(prog);
    cmd.args(flags);
    for dir in include_dirs {
        cmd.arg("-I").arg(dir);
    }
    for def in defines {
        cmd.arg(format!("-D{def}"));
    }
    cmd.arg(source_path);
    let output = cmd.output().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            FrontendError::PreprocessorMissing(prog.clone())
        } else {
            FrontendError::Io(e)
        }
    })?;
    if !output.status.success() {
        return Err(FrontendError::PreprocessFailed {
            status: output.status.code().unwrap_or(-1),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    let text = String::from_utf8_lossy(&output.stdout).into_owned();
    parse_source(&text, &source_path.display().to_string())
}
