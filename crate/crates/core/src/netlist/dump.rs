// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use thiserror::Error;

use crate::dataflow::{LutSource, LutSpec};
use crate::frontend::ScalarType;

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("netlist dump line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn su(signed: bool) -> char {
    if signed {
        's'
    } else {
        'u'
    }
}

/// Stable text form with sections PORTS, REGS, NODES, FSMS, MEMS and LUTS.
pub fn dump_netlist(nl: &Netlist) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "netlist {}", nl.name);
    out.push_str("PORTS\n");
    for p in &nl.ports {
        let dir = if p.dir == Direction::In { "in" } else { "out" };
        let _ = writeln!(out, "{dir} {} {} {}", p.name, p.width, su(p.signed));
    }
    out.push_str("REGS\n");
    for r in &nl.regs {
        let _ = write!(out, "{} {} {} reset {} d {}", r.name, r.width, su(r.signed), r.reset, r.d);
        if let Some(e) = &r.en {
            let _ = write!(out, " en {e}");
        }
        let _ = writeln!(out, " kind {}", r.kind.name());
    }
    out.push_str("NODES\n");
    for n in &nl.nodes {
        let _ = write!(out, "{} = {}({},{})", n.name, n.op.mnemonic(), n.width, su(n.signed));
        for o in &n.operands {
            let _ = write!(out, " {o}");
        }
        match &n.op {
            NetOp::Const(v) => {
                let _ = write!(out, " #{v}");
            }
            NetOp::Slice(lo) => {
                let _ = write!(out, " @{lo}");
            }
            NetOp::Lut(t) => {
                let _ = write!(out, " table={t}");
            }
            _ => {}
        }
        out.push('\n');
    }
    out.push_str("FSMS\n");
    for f in &nl.fsms {
        let _ = writeln!(
            out,
            "fsm {} state {} reset {} states {}",
            f.name,
            f.state,
            f.states[f.reset],
            f.states.join(" ")
        );
        for t in &f.transitions {
            let _ = write!(out, "  trans {} -> {}", f.states[t.from], f.states[t.to]);
            if let Some(c) = &t.cond {
                let _ = write!(out, " if {c}");
            }
            out.push('\n');
        }
        for o in &f.outputs {
            let states: Vec<&str> = o.states.iter().map(|&s| f.states[s].as_str()).collect();
            let _ = writeln!(out, "  out {} {}", o.signal, states.join(" "));
        }
    }
    out.push_str("MEMS\n");
    for m in &nl.mems {
        let kind = if m.kind == MemKind::Read { "read" } else { "write" };
        let _ = writeln!(
            out,
            "mem {} {kind} width {} depth {} elem {} {} count {} addr {} en {} data {}",
            m.name,
            m.word_width,
            m.depth,
            m.element_width,
            su(m.element_signed),
            m.elements,
            m.addr,
            m.en,
            m.data
        );
    }
    out.push_str("LUTS\n");
    for l in &nl.luts {
        let source = match &l.source {
            LutSource::Builtin(b) => format!("builtin:{b}"),
            LutSource::InitFile(p) => format!("file:{}", p.display()),
        };
        let _ = write!(out, "lut {} addr {} data {} source {source} contents", l.name, l.addr_width, l.data);
        for v in &l.contents {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

struct Lines<'a> {
    line: usize,
    words: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: self.line,
            message: message.into(),
        })
    }

    fn word(&mut self) -> Result<&'a str, ParseError> {
        match self.words.get(self.pos) {
            Some(w) => {
                self.pos += 1;
                Ok(w)
            }
            None => self.err("unexpected end of line"),
        }
    }

    fn keyword(&mut self, k: &str) -> Result<(), ParseError> {
        let w = self.word()?;
        if w != k {
            return self.err(format!("expected '{k}', found '{w}'"));
        }
        Ok(())
    }

    fn num<T: std::str::FromStr>(&mut self) -> Result<T, ParseError> {
        let w = self.word()?;
        w.parse().or_else(|_| self.err(format!("expected a number, found '{w}'")))
    }

    fn sign(&mut self) -> Result<bool, ParseError> {
        match self.word()? {
            "s" => Ok(true),
            "u" => Ok(false),
            w => self.err(format!("expected s or u, found '{w}'")),
        }
    }

    fn rest(&self) -> &[&'a str] {
        &self.words[self.pos..]
    }

    fn done(&self) -> bool {
        self.pos >= self.words.len()
    }
}

fn scalar_type(w: &str) -> Option<ScalarType> {
    let signed = match w.as_bytes().first()? {
        b's' => true,
        b'u' => false,
        _ => return None,
    };
    let width: u8 = w[1..].parse().ok()?;
    (1..=64).contains(&width).then(|| ScalarType::new(signed, width))
}

fn parse_node(l: &mut Lines) -> Result<CombNode, ParseError> {
    let name = l.word()?.to_string();
    l.keyword("=")?;
    let head = l.word()?;
    let (op, ty) = head
        .strip_suffix(')')
        .and_then(|h| h.split_once('('))
        .map_or_else(|| l.err(format!("bad node head '{head}'")), Ok)?;
    let (w, s) = ty.split_once(',').map_or_else(|| l.err("bad node type"), Ok)?;
    let width: u32 = w.parse().or_else(|_| l.err("bad node width"))?;
    let signed = s == "s";
    let mut operands = Vec::new();
    let mut extra = None;
    for &w in l.rest() {
        if w.starts_with('#') || w.starts_with('@') || w.starts_with("table=") {
            extra = Some(w);
        } else {
            operands.push(w.to_string());
        }
    }
    let extra_str = |prefix: &str| extra.and_then(|e| e.strip_prefix(prefix));
    let op = match op {
        "CONST" => NetOp::Const(
            extra_str("#")
                .and_then(|v| v.parse().ok())
                .map_or_else(|| l.err("constant without value"), Ok)?,
        ),
        "SLICE" => NetOp::Slice(
            extra_str("@")
                .and_then(|v| v.parse().ok())
                .map_or_else(|| l.err("slice without position"), Ok)?,
        ),
        "LUT" => NetOp::Lut(extra_str("table=").map_or_else(|| l.err("lut without table"), Ok)?.to_string()),
        "COPY" => NetOp::Copy,
        "ADD" => NetOp::Add,
        "SUB" => NetOp::Sub,
        "MUL" => NetOp::Mul,
        "AND" => NetOp::And,
        "OR" => NetOp::Or,
        "XOR" => NetOp::Xor,
        "NOT" => NetOp::Not,
        "SHL" => NetOp::Shl,
        "SHR" => NetOp::Shr,
        "EQ" => NetOp::Eq,
        "NE" => NetOp::Ne,
        "LT" => NetOp::Lt,
        "LE" => NetOp::Le,
        "GT" => NetOp::Gt,
        "GE" => NetOp::Ge,
        "SELECT" => NetOp::Select,
        "MUX" => NetOp::Mux,
        other => return l.err(format!("unknown opcode '{other}'")),
    };
    Ok(CombNode {
        name,
        op,
        operands,
        width,
        signed,
    })
}

/// Read a dump produced by [`dump_netlist`].
pub fn parse_netlist(text: &str) -> Result<Netlist, ParseError> {
    let mut nl = Netlist::default();
    let mut section = "";
    for (k, raw) in text.lines().enumerate() {
        let mut l = Lines {
            line: k + 1,
            words: raw.split_whitespace().collect(),
            pos: 0,
        };
        if l.words.is_empty() {
            continue;
        }
        match l.words[0] {
            "PORTS" | "REGS" | "NODES" | "FSMS" | "MEMS" | "LUTS" if l.words.len() == 1 => {
                section = l.words[0];
                continue;
            }
            "netlist" if section.is_empty() => {
                l.pos = 1;
                nl.name = l.word()?.to_string();
                continue;
            }
            _ => {}
        }
        match section {
            "PORTS" => {
                let dir = match l.word()? {
                    "in" => Direction::In,
                    "out" => Direction::Out,
                    w => return l.err(format!("bad direction '{w}'")),
                };
                let name = l.word()?.to_string();
                let width = l.num()?;
                let signed = l.sign()?;
                nl.ports.push(PortDecl {
                    name,
                    dir,
                    width,
                    signed,
                });
            }
            "REGS" => {
                let name = l.word()?.to_string();
                let width = l.num()?;
                let signed = l.sign()?;
                l.keyword("reset")?;
                let reset = l.num()?;
                l.keyword("d")?;
                let d = l.word()?.to_string();
                let mut en = None;
                let mut w = l.word()?;
                if w == "en" {
                    en = Some(l.word()?.to_string());
                    w = l.word()?;
                }
                if w != "kind" {
                    return l.err("expected 'kind'");
                }
                let kw = l.word()?;
                let kind = RegKind::from_name(kw).map_or_else(|| l.err(format!("bad register kind '{kw}'")), Ok)?;
                nl.regs.push(Register {
                    name,
                    width,
                    signed,
                    reset,
                    d,
                    en,
                    kind,
                });
            }
            "NODES" => nl.nodes.push(parse_node(&mut l)?),
            "FSMS" => match l.word()? {
                "fsm" => {
                    let name = l.word()?.to_string();
                    l.keyword("state")?;
                    let state = l.word()?.to_string();
                    l.keyword("reset")?;
                    let reset = l.word()?.to_string();
                    l.keyword("states")?;
                    let states: Vec<String> = l.rest().iter().map(|s| s.to_string()).collect();
                    let reset = states
                        .iter()
                        .position(|s| *s == reset)
                        .map_or_else(|| l.err("reset state not listed"), Ok)?;
                    nl.fsms.push(Fsm {
                        name,
                        state,
                        states,
                        reset,
                        transitions: Vec::new(),
                        outputs: Vec::new(),
                    });
                }
                kind @ ("trans" | "out") => {
                    let Some(f) = nl.fsms.last_mut() else {
                        return l.err("fsm item before any fsm");
                    };
                    let find = |s: &str, l: &Lines| {
                        f.states
                            .iter()
                            .position(|x| x == s)
                            .map_or_else(|| l.err(format!("unknown state '{s}'")), Ok)
                    };
                    if kind == "trans" {
                        let from = find(l.word()?, &l)?;
                        l.keyword("->")?;
                        let to = find(l.word()?, &l)?;
                        let cond = if l.done() {
                            None
                        } else {
                            l.keyword("if")?;
                            Some(l.word()?.to_string())
                        };
                        f.transitions.push(Transition { from, cond, to });
                    } else {
                        let signal = l.word()?.to_string();
                        let states = l.rest().iter().map(|s| find(s, &l)).collect::<Result<_, _>>()?;
                        f.outputs.push(FsmOutput { signal, states });
                    }
                }
                w => return l.err(format!("unexpected '{w}' in FSMS")),
            },
            "MEMS" => {
                l.keyword("mem")?;
                let name = l.word()?.to_string();
                let kind = match l.word()? {
                    "read" => MemKind::Read,
                    "write" => MemKind::Write,
                    w => return l.err(format!("bad memory kind '{w}'")),
                };
                l.keyword("width")?;
                let word_width = l.num()?;
                l.keyword("depth")?;
                let depth = l.num()?;
                l.keyword("elem")?;
                let element_width = l.num()?;
                let element_signed = l.sign()?;
                l.keyword("count")?;
                let elements = l.num()?;
                l.keyword("addr")?;
                let addr = l.word()?.to_string();
                l.keyword("en")?;
                let en = l.word()?.to_string();
                l.keyword("data")?;
                let data = l.word()?.to_string();
                nl.mems.push(Memory {
                    name,
                    kind,
                    word_width,
                    depth,
                    element_width,
                    element_signed,
                    elements,
                    addr,
                    en,
                    data,
                });
            }
            "LUTS" => {
                l.keyword("lut")?;
                let name = l.word()?.to_string();
                l.keyword("addr")?;
                let addr_width = l.num()?;
                l.keyword("data")?;
                let tw = l.word()?;
                let data = scalar_type(tw).map_or_else(|| l.err(format!("bad type '{tw}'")), Ok)?;
                l.keyword("source")?;
                let sw = l.word()?;
                let source = if let Some(b) = sw.strip_prefix("builtin:") {
                    LutSource::Builtin(b.to_string())
                } else if let Some(p) = sw.strip_prefix("file:") {
                    LutSource::InitFile(p.into())
                } else {
                    return l.err(format!("bad lut source '{sw}'"));
                };
                l.keyword("contents")?;
                let mut contents = Vec::new();
                while !l.done() {
                    contents.push(l.num()?);
                }
                nl.luts.push(LutSpec {
                    name,
                    addr_width,
                    data,
                    source,
                    contents,
                });
            }
            _ => return l.err("content outside any section"),
        }
    }
    Ok(nl)
}
