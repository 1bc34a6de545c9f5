// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("expected {expected} input values, got {got}")]
    InputCount { expected: usize, got: usize },
    #[error("node {0}: shift amount out of range")]
    Shift(NodeId),
    #[error("node {0}: value exceeds 128 bits")]
    Overflow(NodeId),
    #[error("lookup table '{table}' read at address {address} outside its {len} entries")]
    LutAddress { table: String, address: i128, len: usize },
}

/// Untimed evaluation: one call computes one iteration, carrying feedback
/// registers between calls.
#[derive(Clone, Debug)]
pub struct Evaluator<'g> {
    pub graph: &'g DataflowGraph,
    /// Register value per feedback pair, in `graph.feedbacks` order.
    pub state: Vec<i128>,
}

impl<'g> Evaluator<'g> {
    pub fn new(graph: &'g DataflowGraph) -> Self {
        Evaluator {
            graph,
            state: graph.feedbacks.iter().map(|f| f.init as i128).collect(),
        }
    }

    /// Values of every node for one iteration; inputs in port order.
    pub fn step(&mut self, inputs: &[i128]) -> Result<Vec<i128>, EvalError> {
        let g = self.graph;
        if inputs.len() != g.inputs.len() {
            return Err(EvalError::InputCount {
                expected: g.inputs.len(),
                got: inputs.len(),
            });
        }
        let mut v = vec![0i128; g.nodes.len()];
        for (p, &x) in g.inputs.iter().zip(inputs) {
            v[p.node.0] = p.ty.wrap(x);
        }
        for n in &g.nodes {
            let id = n.id;
            let a = |k: usize| v[n.operands[k].0];
            let r = match n.op {
                Opcode::Input => v[id.0],
                Opcode::Const => n.value as i128,
                Opcode::Add => a(0).checked_add(a(1)).ok_or(EvalError::Overflow(id))?,
                Opcode::Sub => a(0).checked_sub(a(1)).ok_or(EvalError::Overflow(id))?,
                Opcode::Mul => a(0).checked_mul(a(1)).ok_or(EvalError::Overflow(id))?,
                Opcode::And => a(0) & a(1),
                Opcode::Or => a(0) | a(1),
                Opcode::Xor => a(0) ^ a(1),
                Opcode::Not => !a(0),
                Opcode::Shl => {
                    let k = a(1);
                    if !(0..=64).contains(&k) {
                        return Err(EvalError::Shift(id));
                    }
                    a(0).checked_mul(1i128 << k).ok_or(EvalError::Overflow(id))?
                }
                Opcode::Shr => {
                    let k = a(1);
                    if k < 0 {
                        return Err(EvalError::Shift(id));
                    }
                    a(0) >> k.min(127)
                }
                Opcode::Eq => (a(0) == a(1)) as i128,
                Opcode::Ne => (a(0) != a(1)) as i128,
                Opcode::Lt => (a(0) < a(1)) as i128,
                Opcode::Le => (a(0) <= a(1)) as i128,
                Opcode::Gt => (a(0) > a(1)) as i128,
                Opcode::Ge => (a(0) >= a(1)) as i128,
                Opcode::Select | Opcode::Phi => {
                    if a(0) != 0 {
                        a(1)
                    } else {
                        a(2)
                    }
                }
                Opcode::Lpr => {
                    let k = g.feedbacks.iter().position(|f| f.lpr == id).expect("paired LPR");
                    self.state[k]
                }
                Opcode::Snx | Opcode::Copy => a(0),
                Opcode::Lut => {
                    let table = n.name.as_deref().unwrap_or("");
                    let lut = g.lut(table);
                    let len = lut.map_or(0, |l| l.contents.len());
                    let addr = a(0);
                    if addr < 0 || addr as usize >= len {
                        return Err(EvalError::LutAddress {
                            table: table.to_string(),
                            address: addr,
                            len,
                        });
                    }
                    lut.unwrap().contents[addr as usize] as i128
                }
            };
            v[id.0] = match n.wrap {
                Some(t) => t.wrap(r),
                None => r,
            };
        }
        for (k, f) in g.feedbacks.iter().enumerate() {
            self.state[k] = v[f.snx.0];
        }
        Ok(v)
    }

    /// Output port values for one iteration.
    pub fn outputs(&mut self, inputs: &[i128]) -> Result<Vec<i128>, EvalError> {
        let v = self.step(inputs)?;
        Ok(self.graph.outputs.iter().map(|p| p.ty.wrap(v[p.node.0])).collect())
    }
}

/// Evaluate a single iteration from the initial feedback state.
pub fn eval_iteration(g: &DataflowGraph, inputs: &[i128]) -> Result<Vec<i128>, EvalError> {
    Evaluator::new(g).outputs(inputs)
}
