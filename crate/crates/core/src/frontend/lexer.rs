// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::FrontendError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

// Longest first so that `<<=` wins over `<<` and `<`.
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "<=",
    ">=", "==", "!=", "&&", "||", "->", "(", ")", "{", "}", "[", "]", ";", ",", "=", "+", "-",
    "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "?", ":", ".",
];

/// Tokenize a kernel source. `#define NAME <tokens>` lines are expanded in
/// place; `#include` lines are ignored; any other directive is rejected.
pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let mut defines: HashMap<String, Vec<Tok>> = HashMap::new();
    let mut out = Vec::new();
    for (lineno, line) in logical_lines(src) {
        let trimmed = line.trim_start();
        if let Some(directive) = trimmed.strip_prefix('#') {
            let col = (line.len() - trimmed.len()) as u32 + 1;
            let directive = directive.trim_start();
            if directive.starts_with("include") || directive.starts_with("pragma") {
                continue;
            }
            if let Some(rest) = directive.strip_prefix("define") {
                let toks = scan_line(rest, lineno, col + 7)?;
                let mut it = toks.into_iter();
                let name = match it.next() {
                    Some(Token {
                        tok: Tok::Ident(n), ..
                    }) => n,
                    _ => return Err(FrontendError::syntax(lineno, col, "expected macro name after #define")),
                };
                let body: Vec<Tok> = it.flat_map(|t| expand(&defines, t.tok)).collect();
                if body.is_empty() {
                    return Err(FrontendError::unsupported("empty #define", lineno, col));
                }
                defines.insert(name, body);
                continue;
            }
            return Err(FrontendError::unsupported("preprocessor directive", lineno, col));
        }
        for t in scan_line(&line, lineno, 1)? {
            for tok in expand(&defines, t.tok) {
                out.push(Token {
                    tok,
                    line: t.line,
                    col: t.col,
                });
            }
        }
    }
    let last = src.lines().count() as u32 + 1;
    out.push(Token {
        tok: Tok::Eof,
        line: last,
        col: 1,
    });
    Ok(out)
}

fn expand(defines: &HashMap<String, Vec<Tok>>, tok: Tok) -> Vec<Tok> {
    if let Tok::Ident(name) = &tok {
        if let Some(body) = defines.get(name) {
            // Macro bodies are parenthesized so `#define N 4+1` behaves.
            let mut v = vec![Tok::Punct("(")];
            v.extend(body.iter().cloned());
            v.push(Tok::Punct(")"));
            return v;
        }
    }
    vec![tok]
}

/// Split into lines with block comments blanked out (newlines kept) and
/// line comments removed.
fn logical_lines(src: &str) -> Vec<(u32, String)> {
    let mut cleaned = String::with_capacity(src.len());
    let mut chars = src.chars().peekable();
    let mut in_str = false;
    while let Some(c) = chars.next() {
        if in_str {
            cleaned.push(c);
            if c == '"' {
                in_str = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_str = true;
                cleaned.push(c);
            }
            '/' if chars.peek() == Some(&'/') => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                chars.next();
                cleaned.push_str("  ");
                let mut prev = ' ';
                for n in chars.by_ref() {
                    if n == '\n' {
                        cleaned.push('\n');
                    } else {
                        cleaned.push(' ');
                    }
                    if prev == '*' && n == '/' {
                        break;
                    }
                    prev = n;
                }
            }
            _ => cleaned.push(c),
        }
    }
    cleaned
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i as u32 + 1, l.trim_end_matches('\r').to_string()))
        .collect()
}

fn scan_line(line: &str, lineno: u32, col0: u32) -> Result<Vec<Token>, FrontendError> {
    let bytes = line.as_bytes();
    let mut i = 0;
    let mut toks = Vec::new();
    while i < bytes.len() {
        let c = bytes[i];
        let col = col0 + i as u32;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push(Token {
                tok: Tok::Ident(line[start..i].to_string()),
                line: lineno,
                col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &line[start..i];
            let digits = text.trim_end_matches(['u', 'U', 'l', 'L']);
            let parsed = if let Some(hex) = digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
                i64::from_str_radix(hex, 16)
            } else if let Some(bin) = digits.strip_prefix("0b").or_else(|| digits.strip_prefix("0B")) {
                i64::from_str_radix(bin, 2)
            } else {
                digits.parse::<i64>()
            };
            let v = parsed.map_err(|_| FrontendError::syntax(lineno, col, format!("invalid integer literal '{text}'")))?;
            toks.push(Token {
                tok: Tok::Int(v),
                line: lineno,
                col,
            });
            continue;
        }
        if c == b'"' {
            let start = i + 1;
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' {
                i += 1;
            }
            if i >= bytes.len() {
                return Err(FrontendError::syntax(lineno, col, "unterminated string literal"));
            }
            toks.push(Token {
                tok: Tok::Str(line[start..i].to_string()),
                line: lineno,
                col,
            });
            i += 1;
            continue;
        }
        if c == b'\'' {
            return Err(FrontendError::unsupported("character literal", lineno, col));
        }
        match PUNCTS.iter().find(|p| line[i..].starts_with(**p)) {
            Some(p) => {
                toks.push(Token {
                    tok: Tok::Punct(p),
                    line: lineno,
                    col,
                });
                i += p.len();
            }
            None => {
                return Err(FrontendError::syntax(
                    lineno,
                    col,
                    format!("unexpected character '{}'", line[i..].chars().next().unwrap()),
                ))
            }
        }
    }
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn longest_punct_wins() {
        assert_eq!(
            kinds("a<<=b"),
            vec![Tok::Ident("a".into()), Tok::Punct("<<="), Tok::Ident("b".into()), Tok::Eof]
        );
    }

    #[test]
    fn defines_expand_parenthesized() {
        let toks = kinds("#define N 17\nx < N;");
        assert_eq!(toks[2], Tok::Punct("("));
        assert_eq!(toks[3], Tok::Int(17));
    }

    #[test]
    fn comments_keep_line_numbers() {
        let toks = tokenize("/* a\n b */ x // y\nz").unwrap();
        assert_eq!((toks[0].line, toks[1].line), (2, 3));
    }

    #[test]
    fn hex_literals() {
        assert_eq!(kinds("0xFF")[0], Tok::Int(255));
    }

    #[test]
    fn unknown_directive_rejected() {
        assert!(matches!(tokenize("#if 1\n"), Err(FrontendError::Unsupported { .. })));
    }
}
