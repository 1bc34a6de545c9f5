// SPDX-License-Identifier: Apache-2.0

//! SSA dataflow graph of one loop iteration, with per-node widths and
//! pipeline stages.

mod check;
mod compact;
mod dump;
mod eval;
mod lower;
mod lut;
mod predicate;
mod rebalance;
mod schedule;
mod widths;

pub use check::{check_acyclic, check_balance, check_ssa, check_width_safety, GraphViolation};
pub use compact::compact;
pub use dump::dump_graph;
pub use eval::{eval_iteration, EvalError, Evaluator};
pub use lower::lower;
pub use lut::{bind_luts, builtin_cos, parse_init_file, LutBinding, LutSource, LutSpec};
pub use predicate::predicate;
pub use rebalance::rebalance;
pub use schedule::{schedule, MAX_FEEDBACK_DEPTH};
pub use widths::{const_type, infer_widths, promote};

use std::fmt;

use thiserror::Error;

use crate::frontend::ScalarType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Opcode {
    /// Graph input port.
    Input,
    Const,
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
    /// Gated merge `(cond, then, else)` left by lowering; replaced by SELECT.
    Phi,
    Select,
    Lpr,
    Snx,
    Lut,
    Copy,
}

impl Opcode {
    pub fn name(self) -> &'static str {
        match self {
            Opcode::Input => "INPUT",
            Opcode::Const => "CONST",
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Mul => "MUL",
            Opcode::And => "AND",
            Opcode::Or => "OR",
            Opcode::Xor => "XOR",
            Opcode::Not => "NOT",
            Opcode::Shl => "SHL",
            Opcode::Shr => "SHR",
            Opcode::Eq => "EQ",
            Opcode::Ne => "NE",
            Opcode::Lt => "LT",
            Opcode::Le => "LE",
            Opcode::Gt => "GT",
            Opcode::Ge => "GE",
            Opcode::Phi => "PHI",
            Opcode::Select => "SELECT",
            Opcode::Lpr => "LPR",
            Opcode::Snx => "SNX",
            Opcode::Lut => "LUT",
            Opcode::Copy => "COPY",
        }
    }

    pub fn from_name(s: &str) -> Option<Opcode> {
        use Opcode::*;
        [
            Input, Const, Add, Sub, Mul, And, Or, Xor, Not, Shl, Shr, Eq, Ne, Lt, Le, Gt, Ge, Phi, Select, Lpr, Snx,
            Lut, Copy,
        ]
        .into_iter()
        .find(|o| o.name() == s)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, Opcode::Eq | Opcode::Ne | Opcode::Lt | Opcode::Le | Opcode::Gt | Opcode::Ge)
    }

    /// Operations that occupy a pipeline stage under uniform latching.
    pub fn is_operation(self) -> bool {
        !matches!(self, Opcode::Input | Opcode::Const | Opcode::Copy | Opcode::Lpr | Opcode::Snx)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub op: Opcode,
    pub operands: Vec<NodeId>,
    /// Value of a CONST node.
    pub value: i64,
    pub width: u32,
    pub signed: bool,
    /// Stage at which the value is available.
    pub stage: u32,
    /// Output is a register (set by the scheduler).
    pub latched: bool,
    /// Declared type the result wraps to: casts, assignments to declared
    /// variables, feedback registers and ports.
    pub wrap: Option<ScalarType>,
    /// Port name, feedback variable, LUT table or source variable.
    pub name: Option<String>,
}

impl Node {
    pub fn new(id: NodeId, op: Opcode, operands: Vec<NodeId>) -> Self {
        Node {
            id,
            op,
            operands,
            value: 0,
            width: 0,
            signed: false,
            stage: 0,
            latched: false,
            wrap: None,
            name: None,
        }
    }

    pub fn ty(&self) -> ScalarType {
        ScalarType::new(self.signed, self.width.min(255) as u8)
    }

    /// A COPY with no wrap is a wire when not latched.
    pub fn is_transparent(&self) -> bool {
        self.op == Opcode::Copy && self.wrap.is_none() && !self.latched
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortRole {
    /// Element read by the `k`-th load.
    Load(usize),
    Param,
    LoopIndex,
    /// Value written by the `k`-th store.
    Store(usize),
    /// Final value of a pointer parameter.
    Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub ty: ScalarType,
    pub node: NodeId,
    pub role: PortRole,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeedbackPair {
    pub var: String,
    pub lpr: NodeId,
    pub snx: NodeId,
    pub ty: ScalarType,
    pub init: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataflowGraph {
    pub name: String,
    pub nodes: Vec<Node>,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
    pub feedbacks: Vec<FeedbackPair>,
    pub luts: Vec<LutSpec>,
    /// Stage at which every output is valid; 0 before scheduling.
    pub depth: u32,
}

impl DataflowGraph {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.0]
    }

    pub fn add(&mut self, op: Opcode, operands: Vec<NodeId>) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node::new(id, op, operands));
        id
    }

    pub fn input(&self, name: &str) -> Option<&Port> {
        self.inputs.iter().find(|p| p.name == name)
    }

    pub fn output(&self, name: &str) -> Option<&Port> {
        self.outputs.iter().find(|p| p.name == name)
    }

    pub fn lut(&self, name: &str) -> Option<&LutSpec> {
        self.luts.iter().find(|l| l.name == name)
    }

    pub fn feedback_of_lpr(&self, id: NodeId) -> Option<&FeedbackPair> {
        self.feedbacks.iter().find(|f| f.lpr == id)
    }

    pub fn feedback_of_snx(&self, id: NodeId) -> Option<&FeedbackPair> {
        self.feedbacks.iter().find(|f| f.snx == id)
    }

    /// Users of every node; ports and feedback edges are not included.
    pub fn users(&self) -> Vec<Vec<NodeId>> {
        let mut users = vec![Vec::new(); self.nodes.len()];
        for n in &self.nodes {
            for &o in &n.operands {
                if o.0 < users.len() && !users[o.0].contains(&n.id) {
                    users[o.0].push(n.id);
                }
            }
        }
        users
    }

    pub fn count(&self, op: Opcode) -> usize {
        self.nodes.iter().filter(|n| n.op == op).count()
    }

    /// Number of pipeline registers: latched nodes, with each SNX counted
    /// once.
    pub fn register_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.latched).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataflowError {
    #[error("cannot lower: {0}")]
    Lowering(String),
    #[error("unstructured control flow: {0}")]
    UnstructuredControlFlow(String),
    #[error("node {node} needs {width} bits, above the 64-bit limit")]
    WidthOverflow { node: NodeId, width: u32 },
    #[error("{0}")]
    Width(String),
    #[error("feedback loop of '{var}' has {depth} chained operations; at most {limit} close in one cycle")]
    FeedbackTooDeep { var: String, depth: usize, limit: usize },
    #[error("unbound lookup table '{0}'")]
    UnboundLut(String),
    #[error("lookup table '{table}': {message}")]
    InitFile { table: String, message: String },
}

/// Full data path generation with a callback after every pass.
pub fn build_traced(
    sk: &crate::transforms::ScalarizedKernel,
    luts: &[LutBinding],
    trace: &mut dyn FnMut(&str, &DataflowGraph),
) -> Result<DataflowGraph, DataflowError> {
    let g = lower(sk, luts)?;
    trace("lower", &g);
    let g = predicate(g)?;
    trace("predicate", &g);
    let g = infer_widths(g)?;
    let g = rebalance(g);
    trace("rebalance", &g);
    let g = infer_widths(g)?;
    trace("widths", &g);
    let g = bind_luts(g)?;
    trace("bind_lut", &g);
    let g = schedule(g)?;
    trace("schedule", &g);
    Ok(g)
}

pub fn build(sk: &crate::transforms::ScalarizedKernel, luts: &[LutBinding]) -> Result<DataflowGraph, DataflowError> {
    build_traced(sk, luts, &mut |_, _| {})
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Graph of a kernel source: lowered and predicated, with widths when
    /// `scheduled` is false, or through the full pass pipeline.
    pub(crate) fn graph_of(src: &str, scheduled: bool) -> DataflowGraph {
        let sk = crate::test_util::scalarized(src);
        if scheduled {
            build(&sk, &[]).unwrap()
        } else {
            infer_widths(predicate(lower(&sk, &[]).unwrap()).unwrap()).unwrap()
        }
    }

    #[test]
    fn fir_graph_shape() {
        let g = graph_of(
            "void fir(int A[21], int C[17]) { for (int i = 0; i < 17; i++) { C[i] = 3*A[i] + 5*A[i+1] + 7*A[i+2] + 9*A[i+3] - A[i+4]; } }",
            false,
        );
        assert_eq!(g.count(Opcode::Mul), 4);
        assert_eq!(g.count(Opcode::Add), 3);
        assert_eq!(g.count(Opcode::Sub), 1);
        assert_eq!(g.inputs.len(), 5);
        assert_eq!(g.outputs[0].name, "Tmp0");
        check_ssa(&g).unwrap();
        check_acyclic(&g).unwrap();
    }

    #[test]
    fn accumulator_single_cycle() {
        let g = graph_of(
            "void acc(int A[4], int* out) { int sum = 0; for (int i = 0; i < 4; i++) { sum = sum + A[i]; } *out = sum; }",
            false,
        );
        assert_eq!(g.feedbacks.len(), 1);
        assert_eq!(g.count(Opcode::Lpr), 1);
        assert_eq!(g.count(Opcode::Snx), 1);
        let mut ev = Evaluator::new(&g);
        let mut last = 0;
        for x in [1, 2, 3, 4] {
            last = ev.outputs(&[x]).unwrap()[0];
        }
        assert_eq!(last, 10);
    }

    #[test]
    fn division_truncates_toward_zero() {
        let g = graph_of("void k(int a, int* q, int* r) { *q = a / 4; *r = a % 4; }", true);
        for a in -9i128..=9 {
            let out = eval_iteration(&g, &[a]).unwrap();
            assert_eq!(out, vec![a / 4, a % 4], "a = {a}");
        }
    }

    #[test]
    fn unbound_table_named() {
        let sk = crate::test_util::scalarized("void k(uint10_t i, int16_t* o) { *o = lut(\"pdf\", i); }");
        let e = lower(&sk, &[]).unwrap_err();
        assert_eq!(e.to_string(), "unbound lookup table 'pdf'");
    }

    #[test]
    fn cos_table_bound() {
        let g = graph_of("void k(uint10_t i, int16_t* o) { *o = lut(\"cos\", i); }", true);
        assert_eq!(g.luts[0].addr_width, 10);
        assert_eq!(eval_iteration(&g, &[0]).unwrap(), vec![32767]);
        assert_eq!(eval_iteration(&g, &[512]).unwrap(), vec![-32767]);
    }
}
