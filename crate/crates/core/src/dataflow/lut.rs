// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;
use std::path::PathBuf;

use crate::frontend::ScalarType;

use super::*;

pub const COS_ADDRESS_WIDTH: u32 = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LutSource {
    Builtin(String),
    InitFile(PathBuf),
}

/// A table name bound to its contents source and data type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LutBinding {
    pub name: String,
    pub source: LutSource,
    pub data: ScalarType,
}

impl LutBinding {
    pub fn builtin(name: &str) -> Self {
        LutBinding {
            name: name.to_string(),
            source: LutSource::Builtin(name.to_string()),
            data: ScalarType::new(true, 16),
        }
    }

    pub fn file(name: &str, path: impl Into<PathBuf>, data: ScalarType) -> Self {
        LutBinding {
            name: name.to_string(),
            source: LutSource::InitFile(path.into()),
            data,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LutSpec {
    pub name: String,
    /// Zero until fixed by width inference.
    pub addr_width: u32,
    pub data: ScalarType,
    pub source: LutSource,
    /// `2^addr_width` entries once bound.
    pub contents: Vec<i64>,
}

impl LutSpec {
    pub fn unresolved(b: &LutBinding) -> Self {
        LutSpec {
            name: b.name.clone(),
            addr_width: 0,
            data: b.data,
            source: b.source.clone(),
            contents: Vec::new(),
        }
    }

    pub fn fixed_address_width(&self) -> Option<u32> {
        match &self.source {
            LutSource::Builtin(n) if n == "cos" => Some(COS_ADDRESS_WIDTH),
            _ => None,
        }
    }

    pub fn is_bound(&self) -> bool {
        self.addr_width > 0 && self.contents.len() == 1usize << self.addr_width
    }
}

/// One period of cosine over 1024 addresses, scaled to 16-bit signed.
pub fn builtin_cos() -> Vec<i64> {
    let n = 1usize << COS_ADDRESS_WIDTH;
    (0..n)
        .map(|k| (32767.0 * (2.0 * PI * k as f64 / n as f64).cos()).round() as i64)
        .collect()
}

/// Parse a text initialization file: one decimal or `0x` hex value per
/// line, line k holding address k; `#` starts a comment.
pub fn parse_init_file(text: &str, addr_width: u32, data: ScalarType) -> Result<Vec<i64>, String> {
    let expected = 1usize << addr_width;
    let mut out = Vec::with_capacity(expected);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let w = data.width as u32;
        let value = if let Some(hex) = line.strip_prefix("0x").or_else(|| line.strip_prefix("0X")) {
            let bits = i128::from_str_radix(hex, 16)
                .map_err(|_| format!("line {}: cannot parse '{line}'", lineno + 1))?;
            if bits >= 1i128 << w {
                return Err(format!("value exceeds {w} bits (line {}: {line})", lineno + 1));
            }
            data.wrap(bits)
        } else {
            let v: i128 = line
                .parse()
                .map_err(|_| format!("line {}: cannot parse '{line}'", lineno + 1))?;
            if !data.contains(v) {
                return Err(format!("value exceeds {w} bits (line {}: {line})", lineno + 1));
            }
            v
        };
        out.push(value as i64);
    }
    if out.len() != expected {
        return Err(format!("expected {expected} entries, found {}", out.len()));
    }
    Ok(out)
}

/// Resolve the contents of every table used by the graph.
pub fn bind_luts(mut g: DataflowGraph) -> Result<DataflowGraph, DataflowError> {
    for lut in &mut g.luts {
        let err = |message: String| DataflowError::InitFile {
            table: lut.name.clone(),
            message,
        };
        if lut.addr_width == 0 {
            return Err(err("address width not inferred".into()));
        }
        lut.contents = match &lut.source {
            LutSource::Builtin(n) if n == "cos" => {
                if lut.addr_width != COS_ADDRESS_WIDTH {
                    return Err(err(format!("builtin table 'cos' has a {COS_ADDRESS_WIDTH}-bit address")));
                }
                builtin_cos()
            }
            LutSource::Builtin(n) => return Err(err(format!("no builtin table '{n}'"))),
            LutSource::InitFile(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
                parse_init_file(&text, lut.addr_width, lut.data).map_err(err)?
            }
        };
        if let Some(bad) = lut.contents.iter().find(|&&v| !lut.data.contains(v as i128)) {
            return Err(err(format!("value {bad} exceeds {} bits", lut.data.width)));
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cos_table_endpoints() {
        let t = builtin_cos();
        assert_eq!(t.len(), 1024);
        assert_eq!(t[0], 32767);
        assert_eq!(t[256], 0);
        assert_eq!(t[512], -32767);
        assert_eq!(t[128], (32767.0 * 0.5f64.sqrt()).round() as i64);
    }

    #[test]
    fn init_file_formats() {
        let s16 = ScalarType::new(true, 16);
        let v = parse_init_file("# header\n1\n-2 # two\n0x10\n\n0xFFFF\n", 2, s16).unwrap();
        assert_eq!(v, vec![1, -2, 16, -1]);
    }

    #[test]
    fn init_file_length_checked() {
        let text = "0\n".repeat(1023);
        let e = parse_init_file(&text, 10, ScalarType::new(false, 16)).unwrap_err();
        assert!(e.contains("expected 1024 entries"), "{e}");
    }

    #[test]
    fn init_file_range_checked() {
        let mut text = "0\n".repeat(1023);
        text.push_str("70000\n");
        let e = parse_init_file(&text, 10, ScalarType::new(false, 16)).unwrap_err();
        assert!(e.contains("value exceeds 16 bits"), "{e}");
        let e = parse_init_file("40000\n", 0, ScalarType::new(true, 16)).unwrap_err();
        assert!(e.contains("value exceeds 16 bits"), "{e}");
    }

    #[test]
    fn init_file_garbage() {
        assert!(parse_init_file("abc\n", 0, ScalarType::new(true, 16)).unwrap_err().contains("cannot parse"));
    }
}
