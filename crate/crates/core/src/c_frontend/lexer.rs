//! Minimal C tokenizer for preprocessed translation units.
//!
//! Comments are skipped, string/char literals are single tokens, and every
//! token carries its 1-based line and 0-based column so declaration spans and
//! in-place edits (de-static, renames) can be computed later.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    pub line: u32,
    pub col: u32,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokKind::Ident
    }
}

/// C keywords plus the gcc/clang extension spellings that survive
/// preprocessing. These never become symbol references.
const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while", "_Bool", "_Complex", "_Imaginary",
    "_Noreturn", "_Static_assert", "_Alignas", "_Alignof", "_Atomic", "_Thread_local",
    "_Generic", "__restrict", "__restrict__", "__inline", "__inline__", "__volatile__",
    "__const", "__signed__", "__extension__", "__attribute__", "__attribute", "__asm__",
    "__asm", "asm", "__typeof__", "__typeof", "typeof", "__builtin_va_list", "__builtin_va_arg",
    "__label__", "__alignof__", "__complex__", "__real__", "__imag__", "__thread", "_Float128",
    "__float128", "__int128", "NULL",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word) || word.starts_with("__builtin_")
}

/// Type-introducing keywords: a declaration statement may begin with one.
const TYPE_KEYWORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool",
    "_Complex", "struct", "union", "enum", "const", "volatile", "restrict", "__restrict",
    "__restrict__", "_Atomic", "__builtin_va_list", "_Float128", "__float128", "__int128",
];

pub fn is_type_keyword(word: &str) -> bool {
    TYPE_KEYWORDS.contains(&word)
}

/// Storage-class and function specifiers that may prefix a declaration.
const STORAGE_KEYWORDS: &[&str] = &[
    "typedef", "extern", "static", "auto", "register", "inline", "__inline", "__inline__",
    "_Noreturn", "_Thread_local", "__thread", "__extension__",
];

pub fn is_storage_keyword(word: &str) -> bool {
    STORAGE_KEYWORDS.contains(&word)
}

const PUNCT3: &[&str] = &["<<=", ">>=", "..."];
const PUNCT2: &[&str] = &[
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=",
    "%=", "&=", "^=", "|=", "##",
];

pub fn tokenize(text: &str) -> Vec<Token> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line: u32 = 1;
    let mut col: u32 = 0;

    macro_rules! advance {
        () => {{
            if bytes[i] == b'\n' {
                line += 1;
                col = 0;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            advance!();
            continue;
        }
        // comments
        if c == b'/' && i + 1 < bytes.len() {
            if bytes[i + 1] == b'/' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    advance!();
                }
                continue;
            }
            if bytes[i + 1] == b'*' {
                advance!();
                advance!();
                while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                    advance!();
                }
                if i + 1 < bytes.len() {
                    advance!();
                    advance!();
                } else if i < bytes.len() {
                    advance!();
                }
                continue;
            }
        }
        let start_line = line;
        let start_col = col;
        // string / char literals
        if c == b'"' || c == b'\'' {
            let quote = c;
            let start = i;
            advance!();
            while i < bytes.len() && bytes[i] != quote {
                if bytes[i] == b'\\' && i + 1 < bytes.len() {
                    advance!();
                }
                advance!();
            }
            if i < bytes.len() {
                advance!();
            }
            toks.push(Token {
                kind: if quote == b'"' { TokKind::Str } else { TokKind::Char },
                text: String::from_utf8_lossy(&bytes[start..i]).into_owned(),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        // identifiers
        if c == b'_' || c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric()) {
                advance!();
            }
            toks.push(Token {
                kind: TokKind::Ident,
                text: String::from_utf8_lossy(&bytes[start..i]).into_owned(),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        // numbers (integers, floats, hex; exponents may carry a sign)
        if c.is_ascii_digit() || (c == b'.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit())
        {
            let start = i;
            while i < bytes.len() {
                let b = bytes[i];
                let exp_sign = (b == b'+' || b == b'-')
                    && matches!(bytes[i - 1], b'e' | b'E' | b'p' | b'P');
                if b == b'_' || b.is_ascii_alphanumeric() || b == b'.' || exp_sign {
                    advance!();
                } else {
                    break;
                }
            }
            toks.push(Token {
                kind: TokKind::Number,
                text: String::from_utf8_lossy(&bytes[start..i]).into_owned(),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        // punctuation, maximal munch
        let rest = &text[i..];
        let mut matched: Option<&str> = None;
        for p in PUNCT3 {
            if rest.starts_with(p) {
                matched = Some(p);
                break;
            }
        }
        if matched.is_none() {
            for p in PUNCT2 {
                if rest.starts_with(p) {
                    matched = Some(p);
                    break;
                }
            }
        }
        let len = matched.map_or(1, |p| p.len());
        let tok_text = &text[i..i + len];
        for _ in 0..len {
            advance!();
        }
        toks.push(Token {
            kind: TokKind::Punct,
            text: tok_text.to_string(),
            line: start_line,
            col: start_col,
        });
    }
    toks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_simple_function() {
        let toks = tokenize("int add(int a,int b){return a+b;}");
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(
            texts,
            vec![
                "int", "add", "(", "int", "a", ",", "int", "b", ")", "{", "return", "a", "+",
                "b", ";", "}"
            ]
        );
        assert!(toks.iter().all(|t| t.line == 1));
    }

    #[test]
    fn skips_comments_and_tracks_lines() {
        let toks = tokenize("/* multi\nline */ int x; // trailing\nint y;");
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["int", "x", ";", "int", "y", ";"]);
        assert_eq!(toks[0].line, 2);
        assert_eq!(toks[3].line, 3);
    }

    #[test]
    fn string_literals_are_single_tokens() {
        let toks = tokenize(r#"char *s = "a // not a comment \" }";"#);
        assert_eq!(toks.iter().filter(|t| t.kind == TokKind::Str).count(), 1);
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert!(texts.contains(&";"));
        assert!(!texts.contains(&"}"));
    }

    #[test]
    fn maximal_munch_operators() {
        let toks = tokenize("p->x == y && a <<= 2");
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["p", "->", "x", "==", "y", "&&", "a", "<<=", "2"]);
    }

    #[test]
    fn columns_are_zero_based() {
        let toks = tokenize("static int f;");
        assert_eq!(toks[0].col, 0);
        assert_eq!(toks[1].col, 7);
        assert_eq!(toks[2].col, 11);
    }
}
