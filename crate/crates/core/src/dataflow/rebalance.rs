// SPDX-License-Identifier: Apache-2.0

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::*;

const LATE: u32 = 1 << 16;

fn is_chain_op(op: Opcode) -> bool {
    matches!(op, Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::And | Opcode::Or | Opcode::Xor)
}

fn family(op: Opcode) -> Opcode {
    if op == Opcode::Sub {
        Opcode::Add
    } else {
        op
    }
}

/// Estimated stage at which each node's value is ready. Feedback reads
/// count as late so that they join a reduction last.
fn ready_times(g: &DataflowGraph) -> Vec<u32> {
    let mut ready = vec![0u32; g.nodes.len()];
    for n in &g.nodes {
        let at = n.operands.iter().map(|o| ready[o.0]).max().unwrap_or(0);
        ready[n.id.0] = match n.op {
            Opcode::Lpr => LATE,
            Opcode::Const | Opcode::Input => 0,
            Opcode::Copy | Opcode::Snx => at,
            _ => at + 1,
        };
    }
    ready
}

/// Rewrite chains of one associative operation into trees that combine the
/// earliest-ready operands first. Subtraction joins addition chains with
/// negated leaves.
pub fn rebalance(mut g: DataflowGraph) -> DataflowGraph {
    let users = g.users();
    let mut pinned = vec![false; g.nodes.len()];
    for p in &g.outputs {
        pinned[p.node.0] = true;
    }
    for f in &g.feedbacks {
        for &o in &g.node(f.snx).operands {
            pinned[o.0] = true;
        }
    }
    let ready = ready_times(&g);
    let absorbable = |g: &DataflowGraph, id: NodeId, fam: Opcode| {
        let n = g.node(id);
        is_chain_op(n.op)
            && family(n.op) == fam
            && !pinned[id.0]
            && users[id.0].len() == 1
            && g.node(users[id.0][0]).operands.iter().filter(|&&o| o == id).count() == 1
            && family(g.node(users[id.0][0]).op) == fam
            && is_chain_op(g.node(users[id.0][0]).op)
    };

    let roots: Vec<NodeId> = g
        .nodes
        .iter()
        .filter(|n| is_chain_op(n.op) && !absorbable(&g, n.id, family(n.op)))
        .map(|n| n.id)
        .collect();
    let mut ready = ready;
    for root in roots {
        let fam = family(g.node(root).op);
        let mut leaves: Vec<(NodeId, bool)> = Vec::new();
        let mut stack = vec![(root, false)];
        while let Some((id, neg)) = stack.pop() {
            let n = g.node(id);
            if id == root || absorbable(&g, id, fam) {
                let (a, b) = (n.operands[0], n.operands[1]);
                let flip = n.op == Opcode::Sub;
                stack.push((b, neg ^ flip));
                stack.push((a, neg));
            } else {
                leaves.push((id, neg));
            }
        }
        if leaves.len() < 3 {
            continue;
        }
        let mut heap: BinaryHeap<Reverse<(u32, usize, NodeId, bool)>> = leaves
            .iter()
            .enumerate()
            .map(|(seq, &(id, neg))| Reverse((ready[id.0], seq, id, neg)))
            .collect();
        let mut seq = leaves.len();
        while heap.len() > 1 {
            let Reverse((ra, _, a, na)) = heap.pop().unwrap();
            let Reverse((rb, _, b, nb)) = heap.pop().unwrap();
            let (op, x, y, neg) = match (fam, na, nb) {
                (Opcode::Add, false, false) => (Opcode::Add, a, b, false),
                (Opcode::Add, false, true) => (Opcode::Sub, a, b, false),
                (Opcode::Add, true, false) => (Opcode::Sub, b, a, false),
                (Opcode::Add, true, true) => (Opcode::Add, a, b, true),
                (op, _, _) => (op, a, b, false),
            };
            let id = g.add(op, vec![x, y]);
            ready.push(ra.max(rb) + 1);
            heap.push(Reverse((ra.max(rb) + 1, seq, id, neg)));
            seq += 1;
        }
        let Reverse((r_top, _, mut top, neg)) = heap.pop().unwrap();
        if neg {
            let zero = match g.nodes.iter().find(|n| n.op == Opcode::Const && n.value == 0) {
                Some(n) => n.id,
                None => {
                    ready.push(0);
                    g.add(Opcode::Const, vec![])
                }
            };
            top = g.add(Opcode::Sub, vec![zero, top]);
            ready.push(r_top + 1);
        }
        let r = g.node_mut(root);
        r.op = Opcode::Copy;
        r.operands = vec![top];
        r.wrap = None;
        r.latched = false;
    }
    compact(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::tests::graph_of;

    #[test]
    fn fir_tree_depth() {
        let g = graph_of(
            "void fir(int A[21], int C[17]) { for (int i = 0; i < 17; i++) { C[i] = 3*A[i] + 5*A[i+1] + 7*A[i+2] + 9*A[i+3] - A[i+4]; } }",
            true,
        );
        assert_eq!(g.count(Opcode::Mul), 4);
        assert_eq!(g.count(Opcode::Add), 3);
        assert_eq!(g.count(Opcode::Sub), 1);
        assert_eq!(g.depth, 4);
    }

    #[test]
    fn feedback_read_joins_last() {
        let g = graph_of(
            "void k(int A[8], int B[8], int C[8], int* o) { int s = 0; for (int i = 0; i < 8; i++) { s = s + A[i] + B[i] + C[i]; } *o = s; }",
            true,
        );
        let f = &g.feedbacks[0];
        let mut top = g.node(g.node(f.snx).operands[0]);
        while top.op == Opcode::Copy {
            top = g.node(top.operands[0]);
        }
        assert!(top.operands.contains(&f.lpr), "{:?}", top);
    }

    #[test]
    fn all_negative_chain() {
        let g = graph_of("void k(int a, int b, int c, int* o) { *o = 0 - a - b - c; }", true);
        assert_eq!(g.count(Opcode::Sub) + g.count(Opcode::Add), 3);
    }
}
