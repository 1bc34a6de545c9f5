// SPDX-License-Identifier: Apache-2.0

//! Flat register-transfer model shared by the emitter and the simulator.
//!
//! Every signal is a bit vector with a declared width and signedness. A
//! signal is driven by exactly one of: an input port, a register, a
//! combinational node, or an FSM (its state register and decoded outputs).
//! Combinational results are wrapped to the node's width.

mod build;
mod check;
mod dump;

pub use build::{bits_for, FragmentBuilder, Sig};
pub use check::{check, link, LinkError};
pub(crate) use check::comb_order;
pub use dump::{dump_netlist, parse_netlist, ParseError};

use std::collections::BTreeMap;
use std::fmt;

use crate::dataflow::LutSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub dir: Direction,
    pub width: u32,
    pub signed: bool,
}

/// What a register is for; used by the register census.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegKind {
    /// Pipeline latch of a data-path operation.
    Datapath,
    /// Delay register balancing converging paths.
    Delay,
    /// Loop-carried feedback register.
    Feedback,
    /// Valid bit travelling with each pipeline stage.
    Valid,
    /// Smart-buffer element slot.
    Slot,
    /// Counters and flags of the address generators and controller.
    Control,
    /// Output capture and pending-store registers.
    Output,
}

impl RegKind {
    pub const ALL: [RegKind; 7] = [
        RegKind::Datapath,
        RegKind::Delay,
        RegKind::Feedback,
        RegKind::Valid,
        RegKind::Slot,
        RegKind::Control,
        RegKind::Output,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegKind::Datapath => "datapath",
            RegKind::Delay => "delay",
            RegKind::Feedback => "feedback",
            RegKind::Valid => "valid",
            RegKind::Slot => "slot",
            RegKind::Control => "control",
            RegKind::Output => "output",
        }
    }

    pub fn from_name(s: &str) -> Option<RegKind> {
        RegKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub width: u32,
    pub signed: bool,
    pub reset: i64,
    pub d: String,
    pub en: Option<String>,
    pub kind: RegKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetOp {
    Const(i64),
    Copy,
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Not,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// `(cond, then, else)`.
    Select,
    /// `(sel, x0, .., xn-1)`.
    Mux,
    /// Bits of the operand starting at the given position.
    Slice(u32),
    Lut(String),
}

impl NetOp {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            NetOp::Const(_) => "CONST",
            NetOp::Copy => "COPY",
            NetOp::Add => "ADD",
            NetOp::Sub => "SUB",
            NetOp::Mul => "MUL",
            NetOp::And => "AND",
            NetOp::Or => "OR",
            NetOp::Xor => "XOR",
            NetOp::Not => "NOT",
            NetOp::Shl => "SHL",
            NetOp::Shr => "SHR",
            NetOp::Eq => "EQ",
            NetOp::Ne => "NE",
            NetOp::Lt => "LT",
            NetOp::Le => "LE",
            NetOp::Gt => "GT",
            NetOp::Ge => "GE",
            NetOp::Select => "SELECT",
            NetOp::Mux => "MUX",
            NetOp::Slice(_) => "SLICE",
            NetOp::Lut(_) => "LUT",
        }
    }

    pub fn is_comparison(&self) -> bool {
        matches!(self, NetOp::Eq | NetOp::Ne | NetOp::Lt | NetOp::Le | NetOp::Gt | NetOp::Ge)
    }

    /// Operand count, or `None` for variadic MUX.
    pub fn arity(&self) -> Option<usize> {
        match self {
            NetOp::Const(_) => Some(0),
            NetOp::Copy | NetOp::Not | NetOp::Slice(_) | NetOp::Lut(_) => Some(1),
            NetOp::Select => Some(3),
            NetOp::Mux => None,
            _ => Some(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombNode {
    pub name: String,
    pub op: NetOp,
    pub operands: Vec<String>,
    pub width: u32,
    pub signed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    /// One-bit condition; `None` is unconditional.
    pub cond: Option<String>,
    pub to: usize,
}

/// A Moore output: high in the listed states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FsmOutput {
    pub signal: String,
    pub states: Vec<usize>,
}

/// Transitions are tried in order; the first whose source matches and whose
/// condition holds wins, otherwise the state is kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fsm {
    pub name: String,
    pub state: String,
    pub states: Vec<String>,
    pub reset: usize,
    pub transitions: Vec<Transition>,
    pub outputs: Vec<FsmOutput>,
}

impl Fsm {
    pub fn state_width(&self) -> u32 {
        bits_for(self.states.len().saturating_sub(1) as u64)
    }

    pub fn next_state(&self, current: usize, cond: impl Fn(&str) -> bool) -> usize {
        self.transitions
            .iter()
            .find(|t| t.from == current && t.cond.as_deref().is_none_or(&cond))
            .map_or(current, |t| t.to)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemKind {
    /// Input memory: one-cycle read latency, driven by `en`.
    Read,
    /// Output memory: written when `en` (the write enable) is high.
    Write,
}

/// An external single-port memory bound to boundary ports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Memory {
    pub name: String,
    pub kind: MemKind,
    pub word_width: u32,
    pub depth: usize,
    pub element_width: u32,
    pub element_signed: bool,
    pub elements: usize,
    pub addr: String,
    pub en: String,
    pub data: String,
}

impl Memory {
    pub fn elements_per_word(&self) -> usize {
        (self.word_width / self.element_width) as usize
    }

    pub fn addr_width(&self) -> u32 {
        bits_for(self.depth.saturating_sub(1) as u64)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Netlist {
    pub name: String,
    pub ports: Vec<PortDecl>,
    pub regs: Vec<Register>,
    pub nodes: Vec<CombNode>,
    pub fsms: Vec<Fsm>,
    pub mems: Vec<Memory>,
    pub luts: Vec<LutSpec>,
}

/// Register count per kind, plus one state register per FSM.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RegisterCensus {
    pub by_kind: BTreeMap<RegKind, usize>,
    pub fsm_states: usize,
}

impl RegisterCensus {
    pub fn get(&self, k: RegKind) -> usize {
        self.by_kind.get(&k).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.by_kind.values().sum::<usize>() + self.fsm_states
    }
}

impl fmt::Display for RegisterCensus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in RegKind::ALL {
            write!(f, "{}={} ", k.name(), self.get(k))?;
        }
        write!(f, "fsm={} total={}", self.fsm_states, self.total())
    }
}

impl Netlist {
    pub fn new(name: &str) -> Self {
        Netlist {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn reg(&self, name: &str) -> Option<&Register> {
        self.regs.iter().find(|r| r.name == name)
    }

    pub fn node(&self, name: &str) -> Option<&CombNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn memory(&self, name: &str) -> Option<&Memory> {
        self.mems.iter().find(|m| m.name == name)
    }

    /// Width and signedness of every driven signal.
    pub fn signal_types(&self) -> BTreeMap<String, (u32, bool)> {
        let mut m = BTreeMap::new();
        for p in self.ports.iter().filter(|p| p.dir == Direction::In) {
            m.insert(p.name.clone(), (p.width, p.signed));
        }
        for r in &self.regs {
            m.insert(r.name.clone(), (r.width, r.signed));
        }
        for n in &self.nodes {
            m.insert(n.name.clone(), (n.width, n.signed));
        }
        for f in &self.fsms {
            m.insert(f.state.clone(), (f.state_width(), false));
            for o in &f.outputs {
                m.insert(o.signal.clone(), (1, false));
            }
        }
        m
    }

    pub fn census(&self) -> RegisterCensus {
        let mut c = RegisterCensus::default();
        for r in &self.regs {
            *c.by_kind.entry(r.kind).or_insert(0) += 1;
        }
        c.fsm_states = self.fsms.len();
        c
    }

    pub fn register_count(&self) -> usize {
        self.census().total()
    }

    pub fn count_ops(&self, op: &NetOp) -> usize {
        let d = std::mem::discriminant(op);
        self.nodes.iter().filter(|n| std::mem::discriminant(&n.op) == d).count()
    }
}
