//! Top-level declaration scanner for preprocessed C translation units.
//!
//! The scanner does not type-check. It segments a preprocessed unit into
//! top-level declarations, classifies each one, and over-approximates the
//! identifier references of each declaration so the dependency graph errs on
//! the side of extra edges. Declarations it cannot classify are kept as
//! `macro_residue` symbols instead of being dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::lexer::{is_keyword, is_storage_keyword, is_type_keyword, tokenize, Token};

#[derive(Debug, thiserror::Error)]
pub enum FrontendError {
    #[error("preprocessor failed with status {status}: {stderr}")]
    PreprocessFailed { status: i32, stderr: String },
    #[error("parse failed at line {line}: {message}")]
    ParseFailed { line: u32, message: String },
    #[error("preprocessor executable not found: {0}")]
    PreprocessorMissing(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Function,
    GlobalVar,
    Typedef,
    StructUnionEnum,
    MacroResidue,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymbolKind::Function => "function",
            SymbolKind::GlobalVar => "global_var",
            SymbolKind::Typedef => "typedef",
            SymbolKind::StructUnionEnum => "struct_union_enum",
            SymbolKind::MacroResidue => "macro_residue",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolStorage {
    StaticInternal,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagKind {
    Struct,
    Union,
    Enum,
}

impl TagKind {
    pub fn keyword(self) -> &'static str {
        match self {
            TagKind::Struct => "struct",
            TagKind::Union => "union",
            TagKind::Enum => "enum",
        }
    }
}

/// 1-based inclusive line span within the preprocessed text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start_line: u32,
    pub end_line: u32,
}

/// Original-source coordinates of one preprocessed line, recovered from the
/// preprocessor's linemarkers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineOrigin {
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDecl {
    pub name: String,
    pub kind: SymbolKind,
    pub storage: SymbolStorage,
    pub span: Span,
    /// Identifier names referenced from the declaration's signature, body, or
    /// initializer, in first-appearance order, deduplicated.
    pub references: Vec<String>,
    /// Subset of `references` that appear in call position.
    pub called: BTreeSet<String>,
    /// Subset of `references` that appear in type position (typedef usage).
    pub type_idents: BTreeSet<String>,
    /// struct/union/enum tags referenced, with the introducing keyword.
    pub tag_refs: BTreeMap<String, TagKind>,
    /// Additional names this declaration introduces (extra declarators in a
    /// comma list, enum member names).
    pub aliases: Vec<String>,
    pub is_definition: bool,
    /// (line, col) of the declarator name token, for in-place renames.
    pub name_loc: (u32, u32),
    /// (line, col) of a top-level `static` keyword, if present.
    pub static_loc: Option<(u32, u32)>,
    /// Return type text for functions ("int" fallback when unreadable).
    pub ret_text: String,
    /// Parameter list texts for functions, one entry per parameter.
    pub param_texts: Vec<String>,
    /// Parameter names for functions, where the declaration names them.
    pub param_names: Vec<String>,
}

impl SymbolDecl {
    /// Bare symbol for synthetic graphs in tests and tools.
    pub fn synthetic(name: &str, kind: SymbolKind, references: &[&str]) -> Self {
        SymbolDecl {
            name: name.to_string(),
            kind,
            storage: SymbolStorage::External,
            span: Span { start_line: 1, end_line: 1 },
            references: references.iter().map(|s| s.to_string()).collect(),
            called: BTreeSet::new(),
            type_idents: BTreeSet::new(),
            tag_refs: BTreeMap::new(),
            aliases: Vec::new(),
            is_definition: true,
            name_loc: (1, 0),
            static_loc: None,
            ret_text: "int".to_string(),
            param_texts: Vec::new(),
            param_names: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TranslationUnit {
    pub path: String,
    pub symbols: Vec<SymbolDecl>,
    /// Preprocessed source with linemarkers and residual directives removed.
    pub preprocessed_text: String,
    /// One entry per line of `preprocessed_text`.
    pub line_origins: Vec<LineOrigin>,
}

impl TranslationUnit {
    pub fn lines(&self) -> Vec<&str> {
        self.preprocessed_text.lines().collect()
    }

    pub fn find_symbol(&self, name: &str) -> Option<&SymbolDecl> {
        self.symbols
            .iter()
            .find(|s| s.name == name && s.is_definition)
            .or_else(|| self.symbols.iter().find(|s| s.name == name))
    }
}

/// Strip preprocessor linemarkers and residual `#` directives, recording the
/// original file/line of every retained line.
fn strip_directives(raw: &str, fallback_file: &str) -> (String, Vec<LineOrigin>) {
    let mut text = String::new();
    let mut origins = Vec::new();
    let mut cur_file = fallback_file.to_string();
    let mut cur_line: u32 = 1;
    let mut physical: u32 = 0;

    for line in raw.lines() {
        physical += 1;
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim_start();
            // linemarker: `# <line> "<file>" [flags]`
            let mut parts = rest.splitn(2, char::is_whitespace);
            if let Ok(n) = parts.next().unwrap_or("").parse::<u32>() {
                if let Some(tail) = parts.next() {
                    let tail = tail.trim_start();
                    if let Some(q) = tail.strip_prefix('"') {
                        if let Some(end) = q.find('"') {
                            cur_file = q[..end].to_string();
                            cur_line = n;
                            continue;
                        }
                    }
                }
                cur_line = n;
                continue;
            }
            // residual directive (#pragma etc.): drop, keep counting
            cur_line += 1;
            continue;
        }
        text.push_str(line);
        text.push('\n');
        origins.push(LineOrigin {
            file: cur_file.clone(),
            line: if cur_file == fallback_file && cur_line == 1 && origins.is_empty() {
                physical.max(cur_line)
            } else {
                cur_line
            },
        });
        cur_line += 1;
    }
    (text, origins)
}

/// Parse already-preprocessed C source text into a translation unit.
/// Linemarkers, when present, are consumed to recover original coordinates.
pub fn parse_source(raw: &str, path: &str) -> Result<TranslationUnit, FrontendError> {
    let (text, mut origins) = strip_directives(raw, path);
    // With no markers at all, origins count lines of the input directly.
    if origins.iter().all(|o| o.file == path) {
        for (i, o) in origins.iter_mut().enumerate() {
            o.line = i as u32 + 1;
        }
    }
    let tokens = tokenize(&text);
    // classify eagerly so a malformed declaration reports its own error
    // rather than the end-of-file symptom it causes downstream
    let (decls, trailing_err) = segment_decls(&tokens);
    let mut symbols = Vec::new();
    for d in &decls {
        symbols.push(classify_decl(&tokens[d.clone()])?);
    }
    if let Some(e) = trailing_err {
        return Err(e);
    }
    check_redefinitions(&symbols)?;
    Ok(TranslationUnit {
        path: path.to_string(),
        symbols,
        preprocessed_text: text,
        line_origins: origins,
    })
}

fn check_redefinitions(symbols: &[SymbolDecl]) -> Result<(), FrontendError> {
    let mut defined: BTreeMap<(&str, SymbolStorage), u32> = BTreeMap::new();
    for s in symbols {
        let strong = match s.kind {
            SymbolKind::Function => s.is_definition,
            _ => false,
        };
        if !strong {
            continue;
        }
        if let Some(prev) = defined.insert((s.name.as_str(), s.storage), s.span.start_line) {
            return Err(FrontendError::ParseFailed {
                line: s.span.start_line,
                message: format!("redefinition of `{}` (first defined at line {prev})", s.name),
            });
        }
    }
    Ok(())
}

/// Token index ranges of each top-level declaration, plus any error hit
/// after the last complete declaration.
fn segment_decls(
    tokens: &[Token],
) -> (Vec<std::ops::Range<usize>>, Option<FrontendError>) {
    let mut decls = Vec::new();
    let mut start: Option<usize> = None;
    let mut brace = 0i32;
    let mut paren = 0i32;
    let mut saw_eq = false;
    let mut body_is_function = false;
    let mut prev_significant: Option<usize> = None;

    let mut i = 0usize;
    while i < tokens.len() {
        let t = &tokens[i];
        if start.is_none() {
            if t.is(";") {
                i += 1;
                continue; // stray empty declaration
            }
            start = Some(i);
            saw_eq = false;
            body_is_function = false;
        }
        match t.text.as_str() {
            "(" => paren += 1,
            ")" => paren -= 1,
            "{" => {
                if brace == 0 {
                    body_is_function = !saw_eq
                        && prev_significant
                            .map(|p| tokens[p].is(")"))
                            .unwrap_or(false);
                }
                brace += 1;
            }
            "}" => {
                brace -= 1;
                if brace < 0 {
                    return (
                        decls,
                        Some(FrontendError::ParseFailed {
                            line: t.line,
                            message: "unbalanced `}` at top level".to_string(),
                        }),
                    );
                }
                if brace == 0 && body_is_function && paren == 0 {
                    decls.push(start.unwrap()..i + 1);
                    start = None;
                }
            }
            "=" => {
                if brace == 0 && paren == 0 {
                    saw_eq = true;
                }
            }
            ";" if brace == 0 && paren == 0 => {
                decls.push(start.unwrap()..i + 1);
                start = None;
            }
            _ => {}
        }
        prev_significant = Some(i);
        i += 1;
    }
    if let Some(s) = start {
        return (
            decls,
            Some(FrontendError::ParseFailed {
                line: tokens[s].line,
                message: "unterminated declaration at end of file".to_string(),
            }),
        );
    }
    (decls, None)
}

fn matching_close(tokens: &[Token], open: usize) -> usize {
    let open_text = tokens[open].text.as_str();
    let close_text = match open_text {
        "(" => ")",
        "{" => "}",
        "[" => "]",
        _ => return open,
    };
    let mut depth = 0;
    for (j, t) in tokens.iter().enumerate().skip(open) {
        if t.is(open_text) {
            depth += 1;
        } else if t.is(close_text) {
            depth -= 1;
            if depth == 0 {
                return j;
            }
        }
    }
    tokens.len() - 1
}

/// Skip `__attribute__((..))`, `__asm__("..")` and similar decorations.
fn skip_decorations(tokens: &[Token], mut i: usize) -> usize {
    while i < tokens.len() {
        let t = &tokens[i];
        let deco = t.is_ident()
            && (t.text == "__attribute__"
                || t.text == "__attribute"
                || t.text == "__asm__"
                || t.text == "__asm"
                || t.text == "__extension__"
                || t.text == "_Noreturn");
        if !deco {
            break;
        }
        i += 1;
        if i < tokens.len() && tokens[i].is("(") {
            i = matching_close(tokens, i) + 1;
        }
    }
    i
}

struct DeclaratorInfo {
    name: String,
    name_idx: usize,
    in_parens: bool,
    /// token index of `(` opening the parameter list, if any
    params_open: Option<usize>,
}

/// Locate the declarator name inside `tokens[from..]`, skipping pointers,
/// qualifiers, and grouping parens.
fn find_declarator(tokens: &[Token], from: usize) -> Option<DeclaratorInfo> {
    let mut i = from;
    let mut pdepth = 0usize;
    while i < tokens.len() {
        let t = &tokens[i];
        if t.is("*") || (t.is_ident() && is_keyword(&t.text) && is_type_keyword(&t.text)) {
            i += 1;
            continue;
        }
        if t.is_ident() && (t.text == "__attribute__" || t.text == "__attribute") {
            i = skip_decorations(tokens, i);
            continue;
        }
        if t.is("(") {
            pdepth += 1;
            i += 1;
            continue;
        }
        if t.is_ident() && !is_keyword(&t.text) {
            let next_is_params = tokens
                .get(i + 1)
                .map(|n| n.is("(") && tokens.get(i + 2).map(|m| !m.is("*")).unwrap_or(true))
                .unwrap_or(false);
            return Some(DeclaratorInfo {
                name: t.text.clone(),
                name_idx: i,
                in_parens: pdepth > 0,
                params_open: if next_is_params { Some(i + 1) } else { None },
            });
        }
        return None;
    }
    None
}

/// Names declared by statements inside a brace-delimited body (locals,
/// struct fields). Shadowing is not modeled; these names are simply excluded
/// from the reference scan.
fn declared_names(tokens: &[Token]) -> BTreeSet<String> {
    let mut declared = BTreeSet::new();
    let mut stmt_start = 0usize;
    let mut i = 0usize;
    while i <= tokens.len() {
        let at_boundary = i == tokens.len()
            || tokens[i].is(";")
            || tokens[i].is("{")
            || tokens[i].is("}");
        if at_boundary {
            if i > stmt_start {
                collect_stmt_decls(&tokens[stmt_start..i], &mut declared);
            }
            stmt_start = i + 1;
            i += 1;
            continue;
        }
        // `for (init; ...)`: the init clause declares into the body scope
        if tokens[i].is_ident() && tokens[i].text == "for" {
            if let Some(open) = tokens.get(i + 1).filter(|t| t.is("(")) {
                let _ = open;
                let close = matching_close(tokens, i + 1);
                let inner = &tokens[i + 2..close];
                let init_end = inner.iter().position(|t| t.is(";")).unwrap_or(inner.len());
                collect_stmt_decls(&inner[..init_end], &mut declared);
                i = close + 1;
                stmt_start = i;
                continue;
            }
        }
        i += 1;
    }
    declared
}

fn stmt_is_declaration(stmt: &[Token]) -> bool {
    let first = match stmt.first() {
        Some(t) => t,
        None => return false,
    };
    if !first.is_ident() {
        return false;
    }
    if is_storage_keyword(&first.text) || is_type_keyword(&first.text) {
        return true;
    }
    if is_keyword(&first.text) {
        return false;
    }
    // `typename x`, `typename *x`, `typename (*fp)(..)`
    let mut j = 1;
    while j < stmt.len() && stmt[j].is("*") {
        j += 1;
    }
    if j < stmt.len() {
        if j > 1 {
            return stmt[j].is_ident() && !is_keyword(&stmt[j].text);
        }
        if stmt[j].is_ident() && !is_keyword(&stmt[j].text) {
            return true;
        }
        if stmt[j].is("(") && stmt.get(j + 1).map(|t| t.is("*")).unwrap_or(false) {
            return true;
        }
    }
    false
}

fn collect_stmt_decls(stmt: &[Token], declared: &mut BTreeSet<String>) {
    if !stmt_is_declaration(stmt) {
        return;
    }
    // skip leading specifiers
    let mut i = 0usize;
    let mut saw_type = false;
    while i < stmt.len() {
        let t = &stmt[i];
        if t.is_ident() && (is_storage_keyword(&t.text) || matches!(t.text.as_str(), "const" | "volatile" | "restrict" | "__restrict" | "__restrict__")) {
            i += 1;
            continue;
        }
        if t.is_ident() && matches!(t.text.as_str(), "struct" | "union" | "enum") {
            i += 1;
            if i < stmt.len() && stmt[i].is_ident() && !is_keyword(&stmt[i].text) {
                i += 1;
            }
            saw_type = true;
            continue;
        }
        if t.is_ident() && is_type_keyword(&t.text) {
            saw_type = true;
            i += 1;
            continue;
        }
        if t.is_ident() && !is_keyword(&t.text) && !saw_type {
            // typedef-name specifier
            saw_type = true;
            i += 1;
            continue;
        }
        break;
    }
    // comma-separated declarators, each truncated at its initializer
    let mut depth = 0i32;
    let mut seg_start = i;
    let mut j = i;
    while j <= stmt.len() {
        let boundary = j == stmt.len()
            || (depth == 0 && stmt[j].is(","));
        if boundary {
            let seg = &stmt[seg_start..j];
            let eq = seg
                .iter()
                .scan(0i32, |d, t| {
                    if t.is("(") || t.is("[") || t.is("{") {
                        *d += 1;
                    } else if t.is(")") || t.is("]") || t.is("}") {
                        *d -= 1;
                    }
                    Some((*d, t))
                })
                .position(|(d, t)| d == 0 && t.is("="));
            let seg = &seg[..eq.unwrap_or(seg.len())];
            if let Some(d) = find_declarator(seg, 0) {
                declared.insert(d.name);
            }
            seg_start = j + 1;
        } else {
            match stmt[j].text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                _ => {}
            }
        }
        j += 1;
    }
}

/// Split a parameter list (tokens strictly inside the parens) at top-level
/// commas.
fn split_params(tokens: &[Token]) -> Vec<&[Token]> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0usize;
    for (j, t) in tokens.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 => {
                out.push(&tokens[start..j]);
                start = j + 1;
            }
            _ => {}
        }
    }
    if start < tokens.len() {
        out.push(&tokens[start..]);
    }
    out
}

fn render_tokens(tokens: &[Token]) -> String {
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            let glue = matches!(t.text.as_str(), ")" | "]" | "," | ";")
                || matches!(tokens[i - 1].text.as_str(), "(" | "[");
            if !glue {
                s.push(' ');
            }
        }
        s.push_str(&t.text);
    }
    s
}

/// Classify one top-level declaration.
fn classify_decl(toks: &[Token]) -> Result<SymbolDecl, FrontendError> {
    debug_assert!(!toks.is_empty());
    let span = Span {
        start_line: toks[0].line,
        end_line: toks[toks.len() - 1].line,
    };

    // top-level inline assembly is out of the supported subset
    let mut head = 0usize;
    while head < toks.len() && toks[head].is_ident() && toks[head].text == "__extension__" {
        head += 1;
    }
    if head < toks.len()
        && toks[head].is_ident()
        && matches!(toks[head].text.as_str(), "asm" | "__asm__" | "__asm")
    {
        return Err(FrontendError::ParseFailed {
            line: toks[head].line,
            message: "top-level inline assembly is not supported".to_string(),
        });
    }

    let mut has_typedef = false;
    let mut has_static = false;
    let mut has_extern = false;
    let mut static_loc = None;
    let mut tag: Option<(TagKind, Option<String>)> = None;
    let mut tag_body: Option<(usize, usize)> = None;
    let mut saw_type = false;
    let mut type_specifier_idents: Vec<String> = Vec::new();

    let mut i = head;
    while i < toks.len() {
        let t = &toks[i];
        if !t.is_ident() {
            break;
        }
        let w = t.text.as_str();
        if is_storage_keyword(w) {
            match w {
                "typedef" => has_typedef = true,
                "static" => {
                    has_static = true;
                    static_loc = Some((t.line, t.col));
                }
                "extern" => has_extern = true,
                _ => {}
            }
            i += 1;
            continue;
        }
        if w == "__attribute__" || w == "__attribute" {
            i = skip_decorations(toks, i);
            continue;
        }
        if matches!(w, "struct" | "union" | "enum") {
            let kind = match w {
                "struct" => TagKind::Struct,
                "union" => TagKind::Union,
                _ => TagKind::Enum,
            };
            i += 1;
            let mut tag_name = None;
            if i < toks.len() && toks[i].is_ident() && !is_keyword(&toks[i].text) {
                tag_name = Some(toks[i].text.clone());
                i += 1;
            }
            i = skip_decorations(toks, i);
            if i < toks.len() && toks[i].is("{") {
                let close = matching_close(toks, i);
                tag_body = Some((i, close));
                i = close + 1;
            }
            tag = Some((kind, tag_name));
            saw_type = true;
            continue;
        }
        if is_type_keyword(w) || matches!(w, "const" | "volatile" | "restrict") {
            saw_type = true;
            i += 1;
            continue;
        }
        if is_keyword(w) {
            i += 1;
            continue;
        }
        // a plain identifier: typedef-name specifier or the declarator name
        if !saw_type {
            let next = toks.get(i + 1);
            let is_typename = match next {
                Some(n) if n.is_ident() && !is_keyword(&n.text) => true,
                Some(n) if n.is("*") => true,
                Some(n) if n.is("(") => toks.get(i + 2).map(|m| m.is("*")).unwrap_or(false),
                _ => false,
            };
            if is_typename {
                type_specifier_idents.push(t.text.clone());
                saw_type = true;
                i += 1;
                continue;
            }
        }
        break;
    }

    let declarator = find_declarator(toks, i);

    // function-ness and terminator inspection
    let mut kind = SymbolKind::MacroResidue;
    let mut is_definition = false;
    let mut name = String::new();
    let mut name_loc = (span.start_line, 0);
    let mut name_idx = None;
    let mut ret_text = String::from("int");
    let mut param_texts = Vec::new();
    let mut param_names = Vec::new();
    let mut aliases: Vec<String> = Vec::new();
    let mut body_range: Option<(usize, usize)> = None;

    if let Some(d) = &declarator {
        name = d.name.clone();
        name_loc = (toks[d.name_idx].line, toks[d.name_idx].col);
        name_idx = Some(d.name_idx);
        if let Some(open) = d.params_open {
            let close = matching_close(toks, open);
            let mut j = skip_decorations(toks, close + 1);
            // function pointer suffix for declarators like `(*f(..))(..)`
            if d.in_parens {
                while j < toks.len() && (toks[j].is(")") || toks[j].is("(")) {
                    if toks[j].is("(") {
                        j = matching_close(toks, j) + 1;
                    } else {
                        j += 1;
                    }
                    j = skip_decorations(toks, j);
                }
            }
            if j < toks.len() && toks[j].is("{") {
                kind = SymbolKind::Function;
                is_definition = true;
                body_range = Some((j, matching_close(toks, j)));
            } else if j < toks.len() && (toks[j].is(";") || toks[j].is(",") || toks[j].is("=")) {
                kind = SymbolKind::Function;
                is_definition = false;
            } else if j < toks.len()
                && toks[j].is_ident()
                && (is_type_keyword(&toks[j].text)
                    || is_storage_keyword(&toks[j].text)
                    || !is_keyword(&toks[j].text))
            {
                return Err(FrontendError::ParseFailed {
                    line: toks[j].line,
                    message: format!(
                        "K&R-style parameter declarations are not supported (function `{name}`)"
                    ),
                });
            }
            if kind == SymbolKind::Function {
                let params = &toks[open + 1..close];
                for p in split_params(params) {
                    if p.is_empty() || (p.len() == 1 && (p[0].is("...") || p[0].is("void"))) {
                        if !p.is_empty() {
                            param_texts.push(p[0].text.clone());
                        }
                        continue;
                    }
                    param_texts.push(render_tokens(p));
                    if let Some(pd) = find_declarator_in_param(p) {
                        param_names.push(pd);
                    }
                }
                let ret_toks: Vec<Token> = toks[head..d.name_idx]
                    .iter()
                    .filter(|t| {
                        !(t.is_ident() && is_storage_keyword(&t.text)) && !t.is("(")
                    })
                    .cloned()
                    .collect();
                let rt = render_tokens(&ret_toks);
                if !rt.is_empty() {
                    ret_text = rt;
                }
            }
        } else if has_typedef {
            kind = SymbolKind::Typedef;
            is_definition = true;
        } else {
            kind = SymbolKind::GlobalVar;
            let init = toks.iter().scan(0i32, |depth, t| {
                match t.text.as_str() {
                    "(" | "[" | "{" => *depth += 1,
                    ")" | "]" | "}" => *depth -= 1,
                    _ => {}
                }
                Some((*depth, t))
            });
            let has_init = init
                .skip(d.name_idx)
                .any(|(depth, t)| depth == 0 && t.is("="));
            is_definition = !has_extern || has_init;
            // extra declarators after top-level commas
            aliases.extend(extra_declarators(toks, d.name_idx));
        }
        if has_typedef && kind != SymbolKind::Function {
            kind = SymbolKind::Typedef;
            is_definition = true;
            aliases.extend(extra_declarators(toks, d.name_idx));
        }
    } else if let Some((tk, tag_name)) = &tag {
        kind = SymbolKind::StructUnionEnum;
        is_definition = tag_body.is_some();
        match tag_name {
            Some(n) => name = n.clone(),
            None => {
                kind = SymbolKind::MacroResidue;
                name = format!("__residue_line_{}", span.start_line);
            }
        }
        if *tk == TagKind::Enum {
            if let Some((open, close)) = tag_body {
                aliases.extend(enum_member_names(&toks[open + 1..close]));
            }
        }
    }

    if name.is_empty() {
        kind = SymbolKind::MacroResidue;
        name = toks
            .iter()
            .find(|t| t.is_ident() && !is_keyword(&t.text))
            .map(|t| t.text.clone())
            .unwrap_or_else(|| format!("__residue_line_{}", span.start_line));
    }
    // enum member names of a typedef'd enum are also introduced
    if kind == SymbolKind::Typedef || kind == SymbolKind::StructUnionEnum {
        if let (Some((TagKind::Enum, _)), Some((open, close))) = (&tag, tag_body) {
            for m in enum_member_names(&toks[open + 1..close]) {
                if !aliases.contains(&m) {
                    aliases.push(m);
                }
            }
        }
    }
    aliases.dedup();

    // reference scan over the whole declaration
    let mut excluded: BTreeSet<String> = BTreeSet::new();
    excluded.extend(param_names.iter().cloned());
    excluded.extend(aliases.iter().cloned());
    excluded.insert(name.clone());
    if let Some((open, close)) = tag_body {
        if !matches!(tag, Some((TagKind::Enum, _))) {
            excluded.extend(declared_names(&toks[open + 1..close]));
        }
    }
    if let Some((open, close)) = body_range {
        excluded.extend(declared_names(&toks[open + 1..close]));
    }

    let mut references = Vec::new();
    let mut seen = BTreeSet::new();
    let mut called = BTreeSet::new();
    let mut type_idents: BTreeSet<String> = type_specifier_idents.iter().cloned().collect();
    let mut tag_refs: BTreeMap<String, TagKind> = BTreeMap::new();

    for (j, t) in toks.iter().enumerate() {
        if !t.is_ident() || is_keyword(&t.text) {
            continue;
        }
        if Some(j) == name_idx {
            continue;
        }
        let prev = if j > 0 { Some(&toks[j - 1]) } else { None };
        let next = toks.get(j + 1);
        if let Some(p) = prev {
            if p.is(".") || p.is("->") {
                continue; // member access / designated initializer
            }
            if p.is_ident() && matches!(p.text.as_str(), "struct" | "union" | "enum") {
                let tk = match p.text.as_str() {
                    "struct" => TagKind::Struct,
                    "union" => TagKind::Union,
                    _ => TagKind::Enum,
                };
                tag_refs.insert(t.text.clone(), tk);
                if seen.insert(t.text.clone()) {
                    references.push(t.text.clone());
                }
                continue;
            }
            if p.is_ident() && t.text == "goto" {
                continue;
            }
        }
        // goto labels: `ident :` at statement position
        if next.map(|n| n.is(":")).unwrap_or(false)
            && prev
                .map(|p| p.is(";") || p.is("{") || p.is("}"))
                .unwrap_or(true)
        {
            continue;
        }
        if excluded.contains(&t.text) {
            continue;
        }
        if seen.insert(t.text.clone()) {
            references.push(t.text.clone());
        }
        if next.map(|n| n.is("(")).unwrap_or(false)
            && toks.get(j + 2).map(|m| !m.is("*")).unwrap_or(true)
        {
            called.insert(t.text.clone());
        }
        // type position: `ident ident`, `(ident *)`, or `ident *name` at
        // the start of a parameter or statement
        if next.map(|n| n.is_ident() && !is_keyword(&n.text)).unwrap_or(false) {
            type_idents.insert(t.text.clone());
        }
        let mut k = j + 1;
        while k < toks.len() && toks[k].is("*") {
            k += 1;
        }
        if k > j + 1 {
            let after_stars_closes = toks.get(k).map(|m| m.is(")")).unwrap_or(false);
            let after_stars_names = toks
                .get(k)
                .map(|m| m.is_ident() && !is_keyword(&m.text))
                .unwrap_or(false);
            let at_type_position = prev
                .map(|p| p.is("(") || p.is(",") || p.is(";") || p.is("{") || p.is("}"))
                .unwrap_or(true);
            if (prev.map(|p| p.is("(")).unwrap_or(false) && after_stars_closes)
                || (at_type_position && after_stars_names)
            {
                type_idents.insert(t.text.clone());
            }
        }
    }
    for ti in &type_specifier_idents {
        if seen.insert(ti.clone()) {
            references.push(ti.clone());
        }
    }
    type_idents.retain(|n| !excluded.contains(n));
    called.retain(|n| references.iter().any(|r| r == n));
    type_idents.retain(|n| references.iter().any(|r| r == n));

    Ok(SymbolDecl {
        name,
        kind,
        storage: if has_static {
            SymbolStorage::StaticInternal
        } else {
            SymbolStorage::External
        },
        span,
        references,
        called,
        type_idents,
        tag_refs,
        aliases,
        is_definition,
        name_loc,
        static_loc,
        ret_text,
        param_texts,
        param_names,
    })
}

fn find_declarator_in_param(p: &[Token]) -> Option<String> {
    let mut saw_type = false;
    let mut i = 0usize;
    while i < p.len() {
        let t = &p[i];
        if !t.is_ident() {
            if t.is("*") || t.is("(") || t.is("[") {
                i += 1;
                continue;
            }
            i += 1;
            continue;
        }
        let w = t.text.as_str();
        if matches!(w, "struct" | "union" | "enum") {
            i += 1;
            if i < p.len() && p[i].is_ident() && !is_keyword(&p[i].text) {
                i += 1;
            }
            saw_type = true;
            continue;
        }
        if is_type_keyword(w) || is_storage_keyword(w) || is_keyword(w) {
            saw_type = true;
            i += 1;
            continue;
        }
        if !saw_type {
            saw_type = true; // typedef-name type
            i += 1;
            continue;
        }
        return Some(t.text.clone());
    }
    None
}

fn extra_declarators(toks: &[Token], after: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut j = after;
    while j < toks.len() {
        match toks[j].text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 => {
                let rest = &toks[j + 1..];
                let end = rest
                    .iter()
                    .scan(0i32, |d, t| {
                        match t.text.as_str() {
                            "(" | "[" | "{" => *d += 1,
                            ")" | "]" | "}" => *d -= 1,
                            _ => {}
                        }
                        Some((*d, t))
                    })
                    .position(|(d, t)| d <= 0 && (t.is(",") || t.is(";") || t.is("=")))
                    .unwrap_or(rest.len());
                if let Some(d) = find_declarator(&rest[..end], 0) {
                    out.push(d.name);
                }
            }
            _ => {}
        }
        j += 1;
    }
    out
}

fn enum_member_names(toks: &[Token]) -> Vec<String> {
    let mut out = Vec::new();
    let mut expect_name = true;
    let mut depth = 0i32;
    for t in toks {
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 => expect_name = true,
            _ => {
                if expect_name && t.is_ident() && !is_keyword(&t.text) {
                    out.push(t.text.clone());
                    expect_name = false;
                }
            }
        }
    }
    out
}
