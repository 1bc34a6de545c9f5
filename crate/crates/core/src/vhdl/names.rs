// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};

use super::EmitError;

/// Reserved words of VHDL-93 plus the library names the generated code uses.
pub(crate) const RESERVED: &[&str] = &[
    "abs", "access", "after", "alias", "all", "and", "architecture", "array", "assert", "attribute", "begin",
    "block", "body", "buffer", "bus", "case", "component", "configuration", "constant", "disconnect", "downto",
    "else", "elsif", "end", "entity", "exit", "file", "for", "function", "generate", "generic", "group",
    "guarded", "if", "impure", "in", "inertial", "inout", "is", "label", "library", "linkage", "literal", "loop",
    "map", "mod", "nand", "new", "next", "nor", "not", "null", "of", "on", "open", "or", "others", "out",
    "package", "port", "postponed", "procedure", "process", "pure", "range", "record", "register", "reject",
    "rem", "report", "return", "rol", "ror", "select", "severity", "signal", "shared", "sla", "sll", "sra",
    "srl", "subtype", "then", "to", "transport", "type", "unaffected", "units", "until", "use", "variable",
    "wait", "when", "while", "with", "xnor", "xor", "ieee", "std", "std_logic", "std_logic_1164", "numeric_std",
    "signed", "unsigned", "resize", "to_integer", "to_signed", "to_unsigned", "rising_edge", "falling_edge", "shift_left",
    "shift_right", "integer", "natural", "boolean", "string", "work", "rtl", "sim", "now", "note", "error",
    "failure", "warning", "true", "false",
];

/// A legal VHDL basic identifier for an arbitrary signal name: every run
/// of other characters becomes one underscore, leading digits get a
/// prefix, and reserved words a suffix.
pub fn sanitize(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let mut out = out.trim_matches('_').to_string();
    if out.is_empty() {
        out = "s".to_string();
    }
    if out.starts_with(|c: char| c.is_ascii_digit()) {
        out = format!("s_{out}");
    }
    if RESERVED.contains(&out.to_ascii_lowercase().as_str()) {
        out.push_str("_s");
    }
    out
}

/// Whether `s` is a VHDL basic identifier.
pub(crate) fn is_identifier(s: &str) -> bool {
    let b = s.as_bytes();
    !b.is_empty()
        && b[0].is_ascii_alphabetic()
        && b.iter().all(|c| c.is_ascii_alphanumeric() || *c == b'_')
        && !s.contains("__")
        && !s.ends_with('_')
}

/// Injective map from netlist names to VHDL identifiers, checked
/// case-insensitively.
#[derive(Clone, Debug, Default)]
pub struct NameMap {
    map: BTreeMap<String, String>,
    taken: HashMap<String, String>,
}

impl NameMap {
    pub fn insert(&mut self, name: &str, ident: String) -> Result<(), EmitError> {
        if !is_identifier(&ident) {
            return Err(EmitError::Identifier(ident));
        }
        let key = ident.to_ascii_lowercase();
        if let Some(other) = self.taken.get(&key) {
            if other != name {
                return Err(EmitError::Collision(other.clone(), name.to_string(), ident));
            }
        }
        self.taken.insert(key, name.to_string());
        self.map.insert(name.to_string(), ident);
        Ok(())
    }

    /// A second name for an identifier already inserted.
    pub(crate) fn alias(&mut self, name: &str, of: &str) {
        let ident = self.get(of).to_string();
        self.map.insert(name.to_string(), ident);
    }

    /// Reserve an identifier that no netlist name maps to.
    pub fn reserve(&mut self, ident: &str) -> Result<(), EmitError> {
        self.insert(&format!("\0{ident}"), ident.to_string())
    }

    pub fn get(&self, name: &str) -> &str {
        self.map
            .get(name)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("no identifier for '{name}'"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hierarchical_names() {
        assert_eq!(sanitize("dp.n12"), "dp_n12");
        assert_eq!(sanitize("sb_A.window_data_0"), "sb_A_window_data_0");
        assert_eq!(sanitize("ctl.ku5_16"), "ctl_ku5_16");
        assert_eq!(sanitize("x__y_"), "x_y");
        assert_eq!(sanitize("3a"), "s_3a");
        assert_eq!(sanitize("out"), "out_s");
        assert_eq!(sanitize("Signal"), "Signal_s");
    }

    #[test]
    fn case_collision_detected() {
        let mut m = NameMap::default();
        m.insert("sb_A.x", sanitize("sb_A.x")).unwrap();
        let e = m.insert("sb_a.x", sanitize("sb_a.x")).unwrap_err();
        assert!(matches!(e, EmitError::Collision(..)), "{e}");
    }
}
