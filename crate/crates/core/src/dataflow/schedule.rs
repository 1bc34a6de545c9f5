// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap};

use super::*;

/// Chained operations a feedback loop may contain and still update its
/// register every cycle.
pub const MAX_FEEDBACK_DEPTH: usize = 3;

/// Constants, and wraps of constants, need no register and fit any stage.
pub(crate) fn const_like(g: &DataflowGraph, mut id: NodeId) -> bool {
    loop {
        let n = g.node(id);
        match n.op {
            Opcode::Const => return true,
            Opcode::Copy if !n.latched => id = n.operands[0],
            _ => return false,
        }
    }
}

/// Whether the value comes straight from a register, looking through
/// combinational wraps.
pub(crate) fn registered(g: &DataflowGraph, mut id: NodeId) -> bool {
    loop {
        let n = g.node(id);
        match n.op {
            Opcode::Copy if !n.latched => id = n.operands[0],
            Opcode::Lpr => return true,
            _ => return n.latched,
        }
    }
}

/// Strongly connected groups formed by feedback pairs: every node on a
/// cycle through an SNX-to-LPR edge, plus each pair's SNX.
fn feedback_groups(g: &DataflowGraph) -> Vec<BTreeSet<NodeId>> {
    let n = g.nodes.len();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for node in &g.nodes {
        for o in &node.operands {
            succ[o.0].push(node.id.0);
            pred[node.id.0].push(o.0);
        }
    }
    for f in &g.feedbacks {
        succ[f.snx.0].push(f.lpr.0);
        pred[f.lpr.0].push(f.snx.0);
    }
    let reach = |start: usize, edges: &Vec<Vec<usize>>| {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        while let Some(k) = stack.pop() {
            if !seen[k] {
                seen[k] = true;
                stack.extend(edges[k].iter().copied());
            }
        }
        seen
    };
    let mut groups: Vec<BTreeSet<NodeId>> = Vec::new();
    for f in &g.feedbacks {
        if groups.iter().any(|grp| grp.contains(&f.lpr)) {
            continue;
        }
        let fwd = reach(f.lpr.0, &succ);
        let bwd = reach(f.lpr.0, &pred);
        let mut grp: BTreeSet<NodeId> = (0..n).filter(|&k| fwd[k] && bwd[k]).map(NodeId).collect();
        grp.insert(f.lpr);
        grp.insert(f.snx);
        groups.push(grp);
    }
    groups
}

struct Scheduler {
    g: DataflowGraph,
    delays: HashMap<(NodeId, u32), NodeId>,
}

impl Scheduler {
    fn avail(&self, id: NodeId) -> Option<u32> {
        if const_like(&self.g, id) {
            None
        } else {
            Some(self.g.node(id).stage)
        }
    }

    /// `x` as seen at stage `target`, through a chain of delay registers.
    fn delayed(&mut self, x: NodeId, target: u32) -> NodeId {
        let Some(at) = self.avail(x) else { return x };
        assert!(at <= target, "value at stage {at} needed at {target}");
        let mut cur = x;
        for s in at + 1..=target {
            cur = match self.delays.get(&(x, s)) {
                Some(&d) => d,
                None => {
                    let (w, sg) = (self.g.node(x).width, self.g.node(x).signed);
                    let d = self.g.add(Opcode::Copy, vec![cur]);
                    let n = self.g.node_mut(d);
                    n.width = w;
                    n.signed = sg;
                    n.stage = s;
                    n.latched = true;
                    self.delays.insert((x, s), d);
                    d
                }
            };
        }
        cur
    }

    fn schedule_node(&mut self, id: NodeId) {
        let node = self.g.node(id).clone();
        match node.op {
            Opcode::Const | Opcode::Input => self.g.node_mut(id).stage = 0,
            Opcode::Copy => {
                let s = self.avail(node.operands[0]).unwrap_or(0);
                self.g.node_mut(id).stage = s;
            }
            _ => {
                let s = node.operands.iter().filter_map(|&o| self.avail(o)).max().unwrap_or(0) + 1;
                let ops: Vec<NodeId> = node.operands.iter().map(|&o| self.delayed(o, s - 1)).collect();
                let n = self.g.node_mut(id);
                n.operands = ops;
                n.stage = s;
                n.latched = true;
            }
        }
    }

    fn schedule_group(&mut self, grp: &BTreeSet<NodeId>) -> Result<(), DataflowError> {
        let mut external = Vec::new();
        for &m in grp {
            for &o in &self.g.node(m).operands {
                if !grp.contains(&o) {
                    external.push(o);
                }
            }
        }
        let sc = external.iter().filter_map(|&o| self.avail(o)).max().unwrap_or(0);

        // Longest chain of operations inside the group.
        let mut chain: HashMap<NodeId, usize> = HashMap::new();
        let mut deepest = 0;
        for &m in grp {
            let node = self.g.node(m).clone();
            let before = if node.op == Opcode::Lpr {
                0
            } else {
                node.operands.iter().filter_map(|o| chain.get(o)).copied().max().unwrap_or(0)
            };
            let here = before + node.op.is_operation() as usize;
            chain.insert(m, here);
            deepest = deepest.max(here);
        }
        if deepest > MAX_FEEDBACK_DEPTH {
            let var = self
                .g
                .feedbacks
                .iter()
                .find(|f| grp.contains(&f.lpr))
                .map(|f| f.var.clone())
                .unwrap_or_default();
            return Err(DataflowError::FeedbackTooDeep {
                var,
                depth: deepest,
                limit: MAX_FEEDBACK_DEPTH,
            });
        }

        for &m in grp {
            let node = self.g.node(m).clone();
            let ops: Vec<NodeId> = node
                .operands
                .iter()
                .map(|&o| if grp.contains(&o) { o } else { self.delayed(o, sc) })
                .collect();
            let n = self.g.node_mut(m);
            n.operands = ops;
            if node.op == Opcode::Snx {
                n.stage = sc + 1;
                n.latched = true;
            } else {
                n.stage = sc;
                n.latched = false;
            }
        }
        Ok(())
    }
}

/// Assign pipeline stages as soon as possible under uniform latching,
/// insert delay registers so that converging paths have equal depth, and
/// register every output at the common final stage.
pub fn schedule(g: DataflowGraph) -> Result<DataflowGraph, DataflowError> {
    let groups = feedback_groups(&g);
    let n = g.nodes.len();
    let mut unit: Vec<usize> = (0..n).map(|k| k + groups.len()).collect();
    for (gi, grp) in groups.iter().enumerate() {
        for m in grp {
            unit[m.0] = gi;
        }
    }
    // Kahn over units; a group waits for all of its external operands.
    let units = n + groups.len();
    let mut deps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); units];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); units];
    for node in &g.nodes {
        let u = unit[node.id.0];
        for o in &node.operands {
            let v = unit[o.0];
            if v != u && deps[u].insert(v) {
                users[v].push(u);
            }
        }
    }
    let present = |u: usize| u < groups.len() || unit[u - groups.len()] == u;
    let mut pending: Vec<usize> = deps.iter().map(BTreeSet::len).collect();
    let mut ready: BTreeSet<usize> = (0..units).filter(|&u| present(u) && pending[u] == 0).collect();
    let mut order = Vec::new();
    while let Some(u) = ready.pop_first() {
        order.push(u);
        for &v in &users[u] {
            pending[v] -= 1;
            if pending[v] == 0 {
                ready.insert(v);
            }
        }
    }

    let mut s = Scheduler { g, delays: HashMap::new() };
    for u in order {
        if u < groups.len() {
            s.schedule_group(&groups[u])?;
        } else {
            s.schedule_node(NodeId(u - groups.len()));
        }
    }

    let depth = s
        .g
        .outputs
        .iter()
        .map(|p| {
            let a = s.avail(p.node).unwrap_or(0);
            if registered(&s.g, p.node) {
                a
            } else {
                a + 1
            }
        })
        .max()
        .unwrap_or(0)
        .max(1);
    for k in 0..s.g.outputs.len() {
        let o = s.g.outputs[k].node;
        let mut x = s.delayed(o, depth);
        if !registered(&s.g, x) {
            let (w, sg) = (s.g.node(x).width, s.g.node(x).signed);
            let d = s.g.add(Opcode::Copy, vec![x]);
            let n = s.g.node_mut(d);
            n.width = w;
            n.signed = sg;
            n.stage = depth;
            n.latched = true;
            x = d;
        }
        s.g.outputs[k].node = x;
    }
    s.g.depth = depth;
    Ok(compact(s.g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::tests::graph_of;

    #[test]
    fn mul_add_delays_addend() {
        let g = graph_of("void k(int16_t a, int16_t b, int16_t c, int* o) { *o = a * b + c; }", true);
        assert_eq!(g.depth, 2);
        let mul = g.nodes.iter().find(|n| n.op == Opcode::Mul).unwrap();
        assert_eq!(mul.stage, 1);
        let add = g.nodes.iter().find(|n| n.op == Opcode::Add).unwrap();
        assert_eq!(add.stage, 2);
        let delays = g.nodes.iter().filter(|n| n.op == Opcode::Copy && n.latched).count();
        assert_eq!(delays, 1);
        check_balance(&g).unwrap();
    }

    #[test]
    fn single_copy_kernel() {
        let g = graph_of("void k(int a, int* o) { *o = a; }", true);
        assert_eq!(g.depth, 1);
        let ops: Vec<Opcode> = g.nodes.iter().map(|n| n.op).collect();
        assert_eq!(ops, vec![Opcode::Input, Opcode::Copy]);
    }

    #[test]
    fn accumulator_closes_in_one_cycle() {
        let g = graph_of(
            "void acc(int A[4], int* out) { int sum = 0; for (int i = 0; i < 4; i++) { sum = sum + A[i]; } *out = sum; }",
            true,
        );
        let f = &g.feedbacks[0];
        assert_eq!(g.node(f.snx).stage, g.node(f.lpr).stage + 1);
        assert_eq!(g.depth, 1);
        check_balance(&g).unwrap();
    }

    #[test]
    fn deep_feedback_rejected() {
        let src = "void k(int8_t A[4], int8_t* out) { int8_t s = 1; for (int i = 0; i < 4; i++) { s = ((s * A[i]) ^ 5) * s + 1; } *out = s; }";
        let sk = crate::test_util::scalarized(src);
        let g = crate::dataflow::build(&sk, &[]).unwrap_err();
        assert!(matches!(g, DataflowError::FeedbackTooDeep { .. }), "{g}");
    }
}
