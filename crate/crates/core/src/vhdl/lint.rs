// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use super::names::RESERVED;

/// Words the generated code uses that are neither keywords nor declared.
const BUILTIN: &[&str] = &["ns", "image", "falling_edge"];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StructuralCounts {
    pub entities: usize,
    pub clocked_processes: usize,
    /// Vector registers assigned in a reset branch.
    pub registers: usize,
    /// Enumerated state registers assigned in a reset branch.
    pub state_registers: usize,
    pub multipliers: usize,
    pub adders: usize,
    pub fsm_states: usize,
    pub tables: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Num,
    Lit,
    Sym(char),
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let b = line.as_bytes();
    for i in 0..b.len() {
        match b[i] {
            b'"' => in_str = !in_str,
            b'-' if !in_str && b.get(i + 1) == Some(&b'-') => return &line[..i],
            _ => {}
        }
    }
    line
}

fn tokenize(text: &str) -> Vec<(usize, Tok)> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = strip_comment(line).chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() {
                let s = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let w: String = chars[s..i].iter().collect::<String>().to_ascii_lowercase();
                out.push((ln + 1, Tok::Word(w)));
            } else if c.is_ascii_digit() {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((ln + 1, Tok::Num));
            } else if c == '"' {
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    i += 1;
                }
                i += 1;
                out.push((ln + 1, Tok::Lit));
            } else if c == '\'' && chars.get(i + 2) == Some(&'\'') {
                i += 3;
                out.push((ln + 1, Tok::Lit));
            } else {
                i += 1;
                out.push((ln + 1, Tok::Sym(c)));
            }
        }
    }
    out
}

struct Frame {
    kind: &'static str,
    line: usize,
    begins: usize,
}

/// Structural problems in generated VHDL: unbalanced blocks, a missing or
/// repeated `begin`, and identifiers used before any declaration.
pub fn lint_vhdl(text: &str) -> Vec<String> {
    let toks = tokenize(text);
    let word = |k: usize| match toks.get(k) {
        Some((_, Tok::Word(w))) => Some(w.as_str()),
        _ => None,
    };
    let sym = |k: usize, c: char| matches!(toks.get(k), Some((_, Tok::Sym(x))) if *x == c);
    let mut problems = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut declared: HashSet<String> = HashSet::new();
    let known: HashSet<&str> = RESERVED.iter().chain(BUILTIN).copied().collect();
    let mut k = 0;
    while k < toks.len() {
        let line = toks[k].0;
        let Some(w) = word(k) else {
            k += 1;
            continue;
        };
        let prev_end = k > 0 && word(k - 1) == Some("end");
        let opened = match w {
            "entity" if !prev_end && word(k + 2) == Some("is") => Some("entity"),
            "architecture" if !prev_end => Some("architecture"),
            "process" if !prev_end => Some("process"),
            "if" if !prev_end => Some("if"),
            "case" if !prev_end => Some("case"),
            "component" if !prev_end => Some("component"),
            "loop" if !prev_end => Some("loop"),
            _ => None,
        };
        if let Some(kind) = opened {
            stack.push(Frame { kind, line, begins: 0 });
            if matches!(kind, "entity" | "architecture" | "component") {
                if let Some(n) = word(k + 1) {
                    declared.insert(n.to_string());
                }
                k += 2;
                continue;
            }
        }
        match w {
            "begin" => match stack.last_mut() {
                Some(f) if matches!(f.kind, "architecture" | "process") => {
                    f.begins += 1;
                    if f.begins > 1 {
                        problems.push(format!("line {line}: second 'begin' in {}", f.kind));
                    }
                }
                _ => problems.push(format!("line {line}: 'begin' outside a block")),
            },
            "end" => {
                let kind = word(k + 1).filter(|n| {
                    matches!(*n, "entity" | "architecture" | "process" | "if" | "case" | "component" | "loop")
                });
                match (stack.pop(), kind) {
                    (None, _) => problems.push(format!("line {line}: 'end' without an open block")),
                    (Some(f), Some(kind)) if f.kind != kind => problems.push(format!(
                        "line {line}: 'end {kind}' closes '{}' opened at line {}",
                        f.kind, f.line
                    )),
                    (Some(f), _) => {
                        if matches!(f.kind, "architecture" | "process") && f.begins == 0 {
                            problems.push(format!("line {line}: {} without 'begin'", f.kind));
                        }
                    }
                }
                // The closing name repeats a declared one.
                k += 2;
                while word(k).is_some() {
                    k += 1;
                }
                continue;
            }
            "type" => {
                if let Some(n) = word(k + 1) {
                    declared.insert(n.to_string());
                }
                if word(k + 2) == Some("is") && sym(k + 3, '(') {
                    k += 4;
                    while k < toks.len() && !sym(k, ')') {
                        if let Some(n) = word(k) {
                            declared.insert(n.to_string());
                        }
                        k += 1;
                    }
                    continue;
                }
                k += 2;
                continue;
            }
            _ => {}
        }
        if sym(k + 1, ':') && !sym(k + 2, '=') {
            declared.insert(w.to_string());
        } else if !known.contains(w) && !declared.contains(w) {
            problems.push(format!("line {line}: '{w}' used before declaration"));
            declared.insert(w.to_string());
        }
        k += 1;
    }
    for f in stack {
        problems.push(format!("line {}: '{}' is never closed", f.line, f.kind));
    }
    problems
}

/// Counts of structural features read back from generated text.
pub fn structural_counts(text: &str) -> StructuralCounts {
    let mut c = StructuralCounts::default();
    let lines: Vec<&str> = text.lines().map(strip_comment).collect();
    let mut in_reset = false;
    let mut after_clock = false;
    for l in &lines {
        let t = l.trim();
        if t.starts_with("entity ") && t.ends_with(" is") {
            c.entities += 1;
        }
        if t.contains("rising_edge(") {
            c.clocked_processes += 1;
            after_clock = true;
            continue;
        }
        if after_clock {
            after_clock = false;
            in_reset = t.starts_with("if ") && t.ends_with("= '1' then");
            continue;
        }
        if in_reset {
            if t == "else" || t == "end if;" {
                in_reset = false;
            } else if let Some((_, rhs)) = t.split_once("<=") {
                if rhs.trim_start().starts_with('"') {
                    c.registers += 1;
                } else {
                    c.state_registers += 1;
                }
            }
        }
        c.multipliers += t.matches(" * ").count();
        c.adders += t.matches(" + ").count() + t.matches(" - ").count();
        if t.starts_with("type ") && t.contains(" is (") {
            let inner = t.split_once(" is (").map(|x| x.1).unwrap_or("");
            c.fsm_states += inner.split(',').count();
        }
        if t.starts_with("constant ") && t.ends_with(":= (") {
            c.tables += 1;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "library ieee;
use ieee.std_logic_1164.all;
use ieee.numeric_std.all;

entity k is
  port (
    clk : in std_logic;
    rst : in std_logic;
    a : in unsigned(3 downto 0);
    y : out unsigned(3 downto 0)
  );
end entity k;

architecture rtl of k is
  type m_state_t is (M_S_IDLE, M_S_RUN);
  signal r : unsigned(3 downto 0);
  signal st : m_state_t;
begin
  regs : process (clk)
  begin
    if rising_edge(clk) then
      if rst = '1' then
        r <= \"0000\";
        st <= M_S_IDLE;
      else
        r <= a + r; -- add
        st <= M_S_RUN;
      end if;
    end if;
  end process regs;
  y <= r;
end architecture rtl;
";

    #[test]
    fn clean_text_passes() {
        assert_eq!(lint_vhdl(GOOD), Vec::<String>::new());
        let c = structural_counts(GOOD);
        assert_eq!(c.entities, 1);
        assert_eq!(c.clocked_processes, 1);
        assert_eq!(c.registers, 1);
        assert_eq!(c.state_registers, 1);
        assert_eq!(c.adders, 1);
        assert_eq!(c.fsm_states, 2);
    }

    #[test]
    fn unbalanced_if_detected() {
        let bad = GOOD.replacen("      end if;\n", "", 1);
        assert!(!lint_vhdl(&bad).is_empty());
    }

    #[test]
    fn undeclared_signal_detected() {
        let bad = GOOD.replace("y <= r;", "y <= q;");
        let p = lint_vhdl(&bad);
        assert!(p.iter().any(|m| m.contains("'q'")), "{p:?}");
    }

    #[test]
    fn double_begin_detected() {
        let bad = GOOD.replace("  y <= r;", "begin\n  y <= r;");
        assert!(lint_vhdl(&bad).iter().any(|m| m.contains("second 'begin'")));
    }
}
