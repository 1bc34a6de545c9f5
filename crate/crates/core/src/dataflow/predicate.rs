// SPDX-License-Identifier: Apache-2.0

use super::*;

/// Replace every gated PHI by a SELECT. Both arms of a branch are already
/// computed unconditionally, so the result is branch-free.
pub fn predicate(mut g: DataflowGraph) -> Result<DataflowGraph, DataflowError> {
    for k in 0..g.nodes.len() {
        if g.nodes[k].op != Opcode::Phi {
            continue;
        }
        if g.nodes[k].operands.len() != 3 {
            return Err(DataflowError::UnstructuredControlFlow(format!(
                "merge node {k} has {} inputs",
                g.nodes[k].operands.len()
            )));
        }
        let c = g.node(g.nodes[k].operands[0]);
        if !(c.op.is_comparison() || c.op == Opcode::Const) {
            return Err(DataflowError::UnstructuredControlFlow(format!(
                "merge node {k} is not gated by a condition"
            )));
        }
        g.nodes[k].op = Opcode::Select;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::tests::graph_of;

    #[test]
    fn branch_becomes_select() {
        let g = graph_of(
            "void m(bool nd[8], int12_t A[8], int12_t B[8], int32_t P[8]) { int32_t sum = 0; for (int i = 0; i < 8; i++) { if (nd[i]) { sum = sum + A[i]*B[i]; } P[i] = sum; } }",
            false,
        );
        assert_eq!(g.count(Opcode::Phi), 0);
        assert_eq!(g.count(Opcode::Select), 1);
        let sel = g.nodes.iter().find(|n| n.op == Opcode::Select).unwrap();
        // else arm is the previous value
        assert_eq!(g.node(sel.operands[2]).op, Opcode::Lpr);
    }

    #[test]
    fn nested_ifs_cascade() {
        let g = graph_of(
            "void k(int a, int b, int* o) { int x = 0; if (a > 0) { if (b > 0) { x = 1; } else { x = 2; } } *o = x; }",
            false,
        );
        assert_eq!(g.count(Opcode::Select), 2);
    }
}
