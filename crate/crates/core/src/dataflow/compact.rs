// SPDX-License-Identifier: Apache-2.0

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::*;

/// Forward transparent copies, drop nodes that reach no port or feedback
/// register, and renumber so that every operand precedes its user.
pub fn compact(mut g: DataflowGraph) -> DataflowGraph {
    let n = g.nodes.len();
    let resolve = |g: &DataflowGraph, mut id: NodeId| {
        let mut guard = 0;
        while g.node(id).is_transparent() && guard <= n {
            id = g.node(id).operands[0];
            guard += 1;
        }
        id
    };
    for k in 0..n {
        let ops: Vec<NodeId> = g.nodes[k].operands.iter().map(|&o| resolve(&g, o)).collect();
        g.nodes[k].operands = ops;
    }
    for k in 0..g.outputs.len() {
        g.outputs[k].node = resolve(&g, g.outputs[k].node);
    }

    let mut live = vec![false; n];
    let mut stack: Vec<NodeId> = g.outputs.iter().map(|p| p.node).collect();
    stack.extend(g.inputs.iter().map(|p| p.node));
    for f in &g.feedbacks {
        stack.push(f.lpr);
        stack.push(f.snx);
    }
    while let Some(id) = stack.pop() {
        if !live[id.0] {
            live[id.0] = true;
            stack.extend(g.node(id).operands.iter().copied());
        }
    }

    // Kahn's algorithm preferring the lowest original id.
    let mut pending = vec![0usize; n];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, node) in g.nodes.iter().enumerate() {
        if !live[k] {
            continue;
        }
        for o in &node.operands {
            pending[k] += 1;
            users[o.0].push(k);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&k| live[k] && pending[k] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(k)) = ready.pop() {
        order.push(k);
        for &u in &users[k] {
            pending[u] -= 1;
            if pending[u] == 0 {
                ready.push(Reverse(u));
            }
        }
    }
    let mut remap = vec![usize::MAX; n];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let map = |id: NodeId| NodeId(remap[id.0]);
    let mut nodes = Vec::with_capacity(order.len());
    for &old in &order {
        let mut node = g.nodes[old].clone();
        node.id = NodeId(remap[old]);
        node.operands = node.operands.iter().map(|&o| map(o)).collect();
        nodes.push(node);
    }
    g.nodes = nodes;
    for p in g.inputs.iter_mut().chain(g.outputs.iter_mut()) {
        p.node = map(p.node);
    }
    for f in &mut g.feedbacks {
        f.lpr = map(f.lpr);
        f.snx = map(f.snx);
    }
    g
}
