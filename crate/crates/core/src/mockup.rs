//! Consolidates a target function's dependency closure into one
//! self-contained C source file: internal linkage removed, unresolved
//! externals stubbed, and a reversible line map back to the original files.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::c_frontend::{SymbolDecl, SymbolKind, TagKind, TranslationUnit};

#[derive(Debug, thiserror::Error)]
pub enum MockupError {
    #[error("emitted line {line} out of range 1..={max}")]
    LineOutOfRange { line: u32, max: u32 },
    #[error("line {line} is synthesized (stub or prelude); it has no original location")]
    SynthesizedLine { line: u32 },
    #[error("de-static name collision on `{name}` could not be resolved by renaming")]
    EmitCollision { name: String },
}

/// What a stub does when the generated tests reach it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StubBehavior {
    ReturnZero,
    ReturnFixed(String),
    AbortOnCall,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubDecl {
    pub name: String,
    /// C declarator text, e.g. `int byte_copy()`.
    pub signature: String,
    pub behavior: StubBehavior,
}

/// One copied line of the emitted mockup and its original location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceMapEntry {
    pub emitted_line: u32,
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappedOrigin<'a> {
    Source { file: &'a str, line: u32 },
    Synthesized,
}

/// Rename applied to resolve a post-de-static name collision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rename {
    pub original: String,
    pub renamed: String,
}

/// Signature of the target function, kept for entry-point synthesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSig {
    pub name: String,
    pub ret: String,
    pub params: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct MockupUnit {
    pub target: String,
    pub source_text: String,
    /// Entries for copied lines only; synthesized lines have no entry.
    pub source_map: Vec<SourceMapEntry>,
    pub stubs: Vec<StubDecl>,
    /// Identifiers whose `static` qualifier was removed.
    pub exposed: Vec<String>,
    /// Typedef/tag forward declarations synthesized for unresolved types.
    pub type_shims: Vec<String>,
    pub renames: Vec<Rename>,
    /// Emitted lines whose content was edited (de-static, renames). They
    /// still map back to their origin, but are not byte-identical to it.
    pub modified_lines: BTreeSet<u32>,
    pub target_sig: TargetSig,
    pub has_main: bool,
}

impl MockupUnit {
    pub fn line_count(&self) -> u32 {
        self.source_text.lines().count() as u32
    }

    pub fn default_file_name(&self) -> String {
        format!("{}_mockup.c", self.target)
    }

    pub fn map_file_name(&self) -> String {
        format!("{}_mockup.map.json", self.target)
    }

    pub fn map_json(&self) -> String {
        serde_json::to_string_pretty(&self.source_map).expect("source map serializes")
    }
}

pub const DEFAULT_PRELUDE: &[&str] = &["stdio.h", "stdlib.h", "string.h", "stdint.h"];

#[derive(Debug, Clone)]
pub struct MockupOptions {
    /// System headers included at the top of every mockup.
    pub prelude: Vec<String>,
}

impl Default for MockupOptions {
    fn default() -> Self {
        MockupOptions {
            prelude: DEFAULT_PRELUDE.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Emit the single-file mockup for `target` from its dependency closure.
///
/// `closure` must come from `implied_closure` over `unit`'s graph;
/// `unresolved` is the graph's unresolved-externals set.
pub fn generate_mockup(
    target: &str,
    closure: &[SymbolDecl],
    unit: &TranslationUnit,
    unresolved: &BTreeSet<String>,
    stub_policy: &BTreeMap<String, StubBehavior>,
) -> Result<MockupUnit, MockupError> {
    generate_mockup_with(
        &MockupOptions::default(),
        target,
        closure,
        unit,
        unresolved,
        stub_policy,
    )
}

pub fn generate_mockup_with(
    opts: &MockupOptions,
    target: &str,
    closure: &[SymbolDecl],
    unit: &TranslationUnit,
    unresolved: &BTreeSet<String>,
    stub_policy: &BTreeMap<String, StubBehavior>,
) -> Result<MockupUnit, MockupError> {
    let unit_lines: Vec<&str> = unit.preprocessed_text.lines().collect();

    // ---- classify what needs stubbing ----
    let mut called: BTreeSet<&str> = BTreeSet::new();
    let mut typeish: BTreeSet<&str> = BTreeSet::new();
    let mut tags: BTreeMap<&str, TagKind> = BTreeMap::new();
    let mut objects: BTreeSet<&str> = BTreeSet::new();
    for sym in closure {
        for r in &sym.references {
            if !unresolved.contains(r) {
                continue;
            }
            if sym.called.contains(r) {
                called.insert(r);
            } else if let Some(tk) = sym.tag_refs.get(r) {
                tags.insert(r, *tk);
            } else if sym.type_idents.contains(r) {
                typeish.insert(r);
            } else {
                objects.insert(r);
            }
        }
        for (t, tk) in &sym.tag_refs {
            if unresolved.contains(t) {
                tags.insert(t, *tk);
            }
        }
    }
    // a name used both as call and object is a function
    objects.retain(|n| !called.contains(n));
    typeish.retain(|n| !called.contains(n) && !objects.contains(n));

    let mut stubs: BTreeMap<String, StubDecl> = BTreeMap::new();
    // closure members declared but not defined in this unit become stubs
    let mut skipped: BTreeSet<&str> = BTreeSet::new();
    for sym in closure {
        if sym.is_definition {
            continue;
        }
        match sym.kind {
            SymbolKind::Function => {
                skipped.insert(&sym.name);
                let sig = format!("{} {}()", sym.ret_text, sym.name);
                stubs.insert(
                    sym.name.clone(),
                    StubDecl {
                        name: sym.name.clone(),
                        behavior: stub_behavior_for(&sym.name, &sym.ret_text, stub_policy),
                        signature: sig,
                    },
                );
            }
            SymbolKind::GlobalVar => {
                skipped.insert(&sym.name);
                // tentative definition: copy the declaration minus `extern`
                let text = span_text(&unit_lines, sym);
                let sig = text.replacen("extern", "", 1).trim().trim_end_matches(';').trim().to_string();
                stubs.insert(
                    sym.name.clone(),
                    StubDecl {
                        name: sym.name.clone(),
                        signature: sig,
                        behavior: StubBehavior::ReturnZero,
                    },
                );
            }
            _ => {}
        }
    }
    for name in &called {
        stubs.entry(name.to_string()).or_insert_with(|| StubDecl {
            name: name.to_string(),
            signature: format!("int {name}()"),
            behavior: stub_behavior_for(name, "int", stub_policy),
        });
    }
    for name in &objects {
        stubs.entry(name.to_string()).or_insert_with(|| StubDecl {
            name: name.to_string(),
            signature: format!("int {name}"),
            behavior: StubBehavior::ReturnZero,
        });
    }

    let mut type_shims: Vec<String> = Vec::new();
    for (tag, tk) in &tags {
        type_shims.push(format!("{} {};", tk.keyword(), tag));
    }
    for name in &typeish {
        type_shims.push(format!("typedef int {name};"));
    }

    // ---- forward prototypes for mutually recursive groups ----
    let groups = function_sccs(closure);
    let mut group_protos: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for group in &groups {
        if group.len() < 2 {
            continue;
        }
        let protos: Vec<String> = group
            .iter()
            .filter_map(|n| closure.iter().find(|s| &s.name == n))
            .filter(|s| s.kind == SymbolKind::Function && s.is_definition)
            .map(|s| format!("{} {}({});", s.ret_text, s.name, s.param_texts.join(", ")))
            .collect();
        // attach before the group's first emitted member
        if let Some(first) = closure
            .iter()
            .find(|s| group.contains(&s.name))
            .map(|s| s.name.clone())
        {
            group_protos.insert(first, protos);
        }
    }

    // ---- emit ----
    let mut out: Vec<String> = Vec::new();
    let mut map: Vec<SourceMapEntry> = Vec::new();
    let mut modified_lines: BTreeSet<u32> = BTreeSet::new();
    let mut exposed: Vec<String> = Vec::new();
    let mut renames: Vec<Rename> = Vec::new();
    let mut emitted_names: BTreeSet<String> = BTreeSet::new();

    for inc in &opts.prelude {
        out.push(format!("#include <{inc}>"));
    }
    if !type_shims.is_empty() {
        out.push(String::new());
        out.extend(type_shims.iter().cloned());
    }
    if !stubs.is_empty() {
        out.push(String::new());
        for stub in stubs.values() {
            out.push(render_stub(stub));
            emitted_names.insert(stub.name.clone());
        }
    }

    for sym in closure {
        if skipped.contains(sym.name.as_str()) {
            continue;
        }
        if let Some(protos) = group_protos.get(&sym.name) {
            out.push(String::new());
            out.extend(protos.iter().cloned());
        }
        out.push(String::new());
        let start = sym.span.start_line as usize;
        let end = sym.span.end_line as usize;
        let mut head_extra_rename: Option<Rename> = None;
        let mut new_name: Option<String> = None;
        if !emitted_names.insert(sym.name.clone()) {
            // de-static collision: suffix with the origin file stem
            let origin = unit
                .line_origins
                .get(start - 1)
                .map(|o| o.file.clone())
                .unwrap_or_else(|| unit.path.clone());
            let stem = std::path::Path::new(&origin)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dup".to_string());
            let candidate = format!("{}__{stem}", sym.name);
            if !emitted_names.insert(candidate.clone()) {
                return Err(MockupError::EmitCollision {
                    name: sym.name.clone(),
                });
            }
            head_extra_rename = Some(Rename {
                original: sym.name.clone(),
                renamed: candidate.clone(),
            });
            new_name = Some(candidate);
        }
        for src_line in start..=end {
            let mut text = unit_lines.get(src_line - 1).copied().unwrap_or("").to_string();
            let mut modified = false;
            if let Some((sl, sc)) = sym.static_loc {
                if sl as usize == src_line {
                    text = remove_word_at(&text, sc as usize, "static");
                    modified = true;
                }
            }
            if let Some(newn) = &new_name {
                let (nl, nc) = sym.name_loc;
                if nl as usize == src_line {
                    text = replace_word_at(&text, nc as usize, &sym.name, newn);
                    modified = true;
                }
            }
            out.push(text);
            let emitted_line = out.len() as u32;
            if let Some(origin) = unit.line_origins.get(src_line - 1) {
                map.push(SourceMapEntry {
                    emitted_line,
                    file: origin.file.clone(),
                    line: origin.line,
                });
            }
            if modified {
                modified_lines.insert(emitted_line);
            }
        }
        if sym.static_loc.is_some() {
            exposed.push(new_name.clone().unwrap_or_else(|| sym.name.clone()));
        }
        if let Some(r) = head_extra_rename {
            renames.push(r);
        }
    }

    let target_sym = closure
        .iter()
        .find(|s| s.name == target && s.kind == SymbolKind::Function)
        .or_else(|| closure.iter().find(|s| s.name == target));
    let target_sig = match target_sym {
        Some(s) => TargetSig {
            name: s.name.clone(),
            ret: s.ret_text.clone(),
            params: s.param_texts.clone(),
        },
        None => TargetSig {
            name: target.to_string(),
            ret: "int".to_string(),
            params: Vec::new(),
        },
    };
    let has_main = closure.iter().any(|s| s.name == "main" && s.is_definition);

    let mut source_text = out.join("\n");
    source_text.push('\n');

    Ok(MockupUnit {
        target: target.to_string(),
        source_text,
        source_map: map,
        stubs: stubs.into_values().collect(),
        exposed,
        type_shims,
        renames,
        modified_lines,
        target_sig,
        has_main,
    })
}

fn stub_behavior_for(
    name: &str,
    ret_text: &str,
    policy: &BTreeMap<String, StubBehavior>,
) -> StubBehavior {
    if let Some(b) = policy.get(name) {
        return b.clone();
    }
    if ret_text.contains('*') {
        return StubBehavior::AbortOnCall;
    }
    if (ret_text.contains("struct") || ret_text.contains("union")) && !ret_text.contains('*') {
        return StubBehavior::AbortOnCall;
    }
    StubBehavior::ReturnZero
}

fn render_stub(stub: &StubDecl) -> String {
    let is_function = stub.signature.contains('(');
    if !is_function {
        return format!("{} = 0;", stub.signature);
    }
    let is_void = stub.signature.trim_start().starts_with("void ")
        && !stub.signature.contains('*');
    let body = match &stub.behavior {
        StubBehavior::ReturnZero if is_void => "{ }".to_string(),
        StubBehavior::ReturnZero => "{ return 0; }".to_string(),
        StubBehavior::ReturnFixed(v) => format!("{{ return {v}; }}"),
        StubBehavior::AbortOnCall => format!(
            "{{ fprintf(stderr, \"unstubbed call: {}\\n\"); abort(); }}",
            stub.name
        ),
    };
    format!("{} {}", stub.signature, body)
}

fn span_text(unit_lines: &[&str], sym: &SymbolDecl) -> String {
    let start = sym.span.start_line as usize;
    let end = sym.span.end_line as usize;
    unit_lines[start - 1..end.min(unit_lines.len())].join("\n")
}

fn remove_word_at(line: &str, col: usize, word: &str) -> String {
    let mut s = String::new();
    let end = col + word.len();
    if line.len() >= end && &line[col..end] == word {
        s.push_str(&line[..col]);
        let rest = &line[end..];
        s.push_str(rest.strip_prefix(' ').unwrap_or(rest));
    } else if let Some(pos) = line.find(word) {
        s.push_str(&line[..pos]);
        let rest = &line[pos + word.len()..];
        s.push_str(rest.strip_prefix(' ').unwrap_or(rest));
    } else {
        s.push_str(line);
    }
    s
}

fn replace_word_at(line: &str, col: usize, word: &str, with: &str) -> String {
    let end = col + word.len();
    if line.len() >= end && &line[col..end] == word {
        format!("{}{}{}", &line[..col], with, &line[end..])
    } else {
        line.replacen(word, with, 1)
    }
}

/// Strongly connected components among the closure's functions, as name sets.
fn function_sccs(closure: &[SymbolDecl]) -> Vec<BTreeSet<String>> {
    use crate::c_frontend::SymbolGraph;
    let nodes: Vec<SymbolDecl> = closure.to_vec();
    let mut edges = BTreeSet::new();
    let index: BTreeMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    for (i, s) in nodes.iter().enumerate() {
        for r in &s.references {
            if let Some(&j) = index.get(r.as_str()) {
                edges.insert((i, j));
            }
        }
    }
    let graph = SymbolGraph::new(nodes, edges, BTreeSet::new());
    // reuse Tarjan through the public closure entry: compute SCCs by
    // lowlink equality via repeated reachability is wasteful; instead walk
    // pairs: a and b share a component iff reachable both ways.
    let n = graph.node_count();
    let reach = |from: usize| -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        seen.insert(from);
        while let Some(x) = stack.pop() {
            for y in graph.successors(x) {
                if seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        seen
    };
    let reaches: Vec<BTreeSet<usize>> = (0..n).map(reach).collect();
    let mut assigned = vec![false; n];
    let mut comps = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let mut comp = BTreeSet::new();
        for j in i..n {
            if !assigned[j] && reaches[i].contains(&j) && reaches[j].contains(&i) {
                comp.insert(graph.nodes[j].name.clone());
                assigned[j] = true;
            }
        }
        comps.push(comp);
    }
    comps
}

/// Map an emitted mockup line back to its original location.
pub fn map_back(mockup: &MockupUnit, emitted_line: u32) -> Result<MappedOrigin<'_>, MockupError> {
    let max = mockup.line_count();
    if emitted_line == 0 || emitted_line > max {
        return Err(MockupError::LineOutOfRange {
            line: emitted_line,
            max,
        });
    }
    match mockup
        .source_map
        .binary_search_by_key(&emitted_line, |e| e.emitted_line)
    {
        Ok(i) => {
            let e = &mockup.source_map[i];
            Ok(MappedOrigin::Source {
                file: &e.file,
                line: e.line,
            })
        }
        Err(_) => Ok(MappedOrigin::Synthesized),
    }
}

/// One pending annotation against an original source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub file: String,
    pub line: u32,
    pub comment: String,
}

/// Ordered set of annotations. Application inserts each comment on its own
/// line directly above the target line; per file, edits apply bottom-up so
/// earlier insertions never shift later targets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EditScript {
    edits: Vec<Edit>,
}

impl EditScript {
    pub fn new() -> Self {
        EditScript::default()
    }

    pub fn push(&mut self, edit: Edit) {
        self.edits.push(edit);
    }

    pub fn merge(&mut self, other: EditScript) {
        self.edits.extend(other.edits);
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    /// Edits sorted by file, then by descending line number.
    pub fn ordered(&self) -> Vec<Edit> {
        let mut v = self.edits.clone();
        v.sort_by(|a, b| a.file.cmp(&b.file).then(b.line.cmp(&a.line)));
        v
    }

    /// Apply this script's edits for `file` to its contents.
    pub fn apply_to(&self, file: &str, contents: &str) -> String {
        let mut lines: Vec<String> = contents.lines().map(|l| l.to_string()).collect();
        for e in self.ordered().iter().filter(|e| e.file == file) {
            let idx = (e.line as usize).saturating_sub(1).min(lines.len());
            lines.insert(idx, e.comment.clone());
        }
        let mut s = lines.join("\n");
        if contents.ends_with('\n') {
            s.push('\n');
        }
        s
    }
}

/// Produce a one-entry edit script annotating the original location of an
/// emitted line.
pub fn annotate_original(
    mockup: &MockupUnit,
    emitted_line: u32,
    note: &str,
) -> Result<EditScript, MockupError> {
    match map_back(mockup, emitted_line)? {
        MappedOrigin::Source { file, line } => {
            let mut script = EditScript::new();
            script.push(Edit {
                file: file.to_string(),
                line,
                comment: note.to_string(),
            });
            Ok(script)
        }
        MappedOrigin::Synthesized => Err(MockupError::SynthesizedLine { line: emitted_line }),
    }
}
