// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::fmt;

use super::schedule::{const_like, registered};
use super::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphViolation {
    pub invariant: &'static str,
    pub node: Option<NodeId>,
    pub message: String,
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(n) => write!(f, "{} violated at node {n}: {}", self.invariant, self.message),
            None => write!(f, "{} violated: {}", self.invariant, self.message),
        }
    }
}

fn violation(invariant: &'static str, node: Option<NodeId>, message: impl Into<String>) -> GraphViolation {
    GraphViolation {
        invariant,
        node,
        message: message.into(),
    }
}

fn arity(op: Opcode) -> usize {
    match op {
        Opcode::Input | Opcode::Const | Opcode::Lpr => 0,
        Opcode::Not | Opcode::Snx | Opcode::Lut | Opcode::Copy => 1,
        Opcode::Select | Opcode::Phi => 3,
        _ => 2,
    }
}

/// Every node defined once, at its own index, with all operands connected.
pub fn check_ssa(g: &DataflowGraph) -> Result<(), GraphViolation> {
    let mut seen = HashSet::new();
    for (k, n) in g.nodes.iter().enumerate() {
        if !seen.insert(n.id) {
            return Err(violation("SSA", Some(n.id), "defined more than once"));
        }
        if n.id.0 != k {
            return Err(violation("SSA", Some(n.id), format!("stored at index {k}")));
        }
        if n.operands.len() != arity(n.op) {
            return Err(violation(
                "SSA",
                Some(n.id),
                format!("{} has {} operands", n.op.name(), n.operands.len()),
            ));
        }
        if let Some(o) = n.operands.iter().find(|o| o.0 >= g.nodes.len()) {
            return Err(violation("SSA", Some(n.id), format!("operand {o} is undefined")));
        }
    }
    let ports = g.inputs.iter().chain(&g.outputs);
    if let Some(p) = ports.clone().find(|p| p.node.0 >= g.nodes.len()) {
        return Err(violation("SSA", None, format!("port '{}' is unconnected", p.name)));
    }
    for f in &g.feedbacks {
        let ok = g.nodes.get(f.lpr.0).is_some_and(|n| n.op == Opcode::Lpr)
            && g.nodes.get(f.snx.0).is_some_and(|n| n.op == Opcode::Snx);
        if !ok {
            return Err(violation("SSA", None, format!("feedback '{}' is not an LPR/SNX pair", f.var)));
        }
    }
    Ok(())
}

/// Operand edges form a DAG; feedback only flows through LPR/SNX pairs.
pub fn check_acyclic(g: &DataflowGraph) -> Result<(), GraphViolation> {
    let n = g.nodes.len();
    let mut pending = vec![0usize; n];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, node) in g.nodes.iter().enumerate() {
        for o in &node.operands {
            if o.0 < n {
                pending[k] += 1;
                users[o.0].push(k);
            }
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&k| pending[k] == 0).collect();
    let mut done = 0;
    while let Some(k) = stack.pop() {
        done += 1;
        for &u in &users[k] {
            pending[u] -= 1;
            if pending[u] == 0 {
                stack.push(u);
            }
        }
    }
    if done != n {
        let stuck = (0..n).find(|&k| pending[k] > 0).map(NodeId);
        return Err(violation("acyclicity", stuck, "node lies on a cycle of operand edges"));
    }
    Ok(())
}

/// Every path from the inputs to a node crosses the same number of
/// registers, feedback registers close in one stage, and all outputs leave
/// registers at the final stage.
pub fn check_balance(g: &DataflowGraph) -> Result<(), GraphViolation> {
    let bad = |id: NodeId, msg: String| Err(violation("balance", Some(id), msg));
    for n in &g.nodes {
        if const_like(g, n.id) {
            continue;
        }
        let stages: Vec<(NodeId, u32)> = n
            .operands
            .iter()
            .filter(|&&o| !const_like(g, o))
            .map(|&o| (o, g.node(o).stage))
            .collect();
        match n.op {
            Opcode::Input => {
                if n.stage != 0 {
                    return bad(n.id, format!("input at stage {}", n.stage));
                }
            }
            Opcode::Lpr => {
                let Some(f) = g.feedback_of_lpr(n.id) else {
                    return bad(n.id, "unpaired LPR".into());
                };
                if g.node(f.snx).stage != n.stage + 1 {
                    return bad(
                        n.id,
                        format!("feedback '{}' read at stage {} but written at {}", f.var, n.stage, g.node(f.snx).stage),
                    );
                }
            }
            _ => {
                let want = if n.latched { n.stage.checked_sub(1) } else { Some(n.stage) };
                if n.latched && n.stage == 0 {
                    return bad(n.id, "register at stage 0".into());
                }
                if !n.latched && n.op.is_operation() && !in_feedback_loop(g, n.id) {
                    return bad(n.id, format!("{} is neither latched nor inside a feedback loop", n.op.name()));
                }
                if let Some(&(o, s)) = stages.iter().find(|&&(_, s)| Some(s) != want) {
                    return bad(
                        n.id,
                        format!("operand {o} arrives at stage {s}, node at stage {} expects {:?}", n.stage, want),
                    );
                }
            }
        }
    }
    for p in &g.outputs {
        let n = g.node(p.node);
        if !registered(g, p.node) {
            return bad(p.node, format!("output '{}' is not registered", p.name));
        }
        if n.stage != g.depth {
            return bad(p.node, format!("output '{}' at stage {}, depth is {}", p.name, n.stage, g.depth));
        }
    }
    Ok(())
}

fn in_feedback_loop(g: &DataflowGraph, id: NodeId) -> bool {
    // Reachable from some LPR and reaching its SNX.
    g.feedbacks.iter().any(|f| reaches(g, f.lpr, id) && reaches(g, id, f.snx))
}

fn reaches(g: &DataflowGraph, from: NodeId, to: NodeId) -> bool {
    let mut stack = vec![to];
    let mut seen = HashSet::new();
    while let Some(k) = stack.pop() {
        if k == from {
            return true;
        }
        if seen.insert(k) {
            stack.extend(g.node(k).operands.iter().copied());
        }
    }
    false
}

/// Evaluate a sequence of iterations and confirm that every node's exact
/// value lies within its inferred width.
pub fn check_width_safety(g: &DataflowGraph, iterations: &[Vec<i128>]) -> Result<(), GraphViolation> {
    let mut ev = Evaluator::new(g);
    for inputs in iterations {
        let v = ev
            .step(inputs)
            .map_err(|e| violation("width safety", None, e.to_string()))?;
        for n in &g.nodes {
            let (lo, hi) = if n.signed {
                (-(1i128 << n.width.saturating_sub(1)), (1i128 << n.width.saturating_sub(1)) - 1)
            } else {
                (0, (1i128 << n.width) - 1)
            };
            let x = v[n.id.0];
            if n.width == 0 || n.width > 64 || x < lo || x > hi {
                return Err(violation(
                    "width safety",
                    Some(n.id),
                    format!("value {} outside {}{}", v[n.id.0], if n.signed { "s" } else { "u" }, n.width),
                ));
            }
        }
    }
    Ok(())
}
