// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("multiple drivers: {0}")]
    MultipleDrivers(String),
    #[error("undriven signal '{0}'")]
    Undriven(String),
    #[error("width mismatch: {0}")]
    WidthMismatch(String),
    #[error("fragments disagree on port '{0}'")]
    PortConflict(String),
}

/// Combine fragments into one netlist and verify that every signal has one
/// driver and that connections agree on width.
pub fn link(name: &str, fragments: Vec<Netlist>) -> Result<Netlist, LinkError> {
    let mut nl = Netlist::new(name);
    for f in fragments {
        for p in f.ports {
            match nl.ports.iter().find(|q| q.name == p.name) {
                Some(q) if *q == p => {}
                Some(_) => return Err(LinkError::PortConflict(p.name)),
                None => nl.ports.push(p),
            }
        }
        nl.regs.extend(f.regs);
        nl.nodes.extend(f.nodes);
        nl.fsms.extend(f.fsms);
        nl.mems.extend(f.mems);
        for l in f.luts {
            if !nl.luts.iter().any(|m| m.name == l.name) {
                nl.luts.push(l);
            }
        }
    }
    let drivers = drivers(&nl)?;
    let problems = connection_errors(&nl, &drivers);
    if let Some(e) = problems.into_iter().next() {
        return Err(e);
    }
    Ok(nl)
}

fn drivers(nl: &Netlist) -> Result<HashMap<&str, (u32, bool)>, LinkError> {
    let mut m: HashMap<&str, (u32, bool)> = HashMap::new();
    let mut entries: Vec<(&str, (u32, bool))> = Vec::new();
    for p in nl.ports.iter().filter(|p| p.dir == Direction::In) {
        entries.push((&p.name, (p.width, p.signed)));
    }
    for r in &nl.regs {
        entries.push((&r.name, (r.width, r.signed)));
    }
    for n in &nl.nodes {
        entries.push((&n.name, (n.width, n.signed)));
    }
    for f in &nl.fsms {
        entries.push((&f.state, (f.state_width(), false)));
        for o in &f.outputs {
            entries.push((&o.signal, (1, false)));
        }
    }
    for (name, t) in entries {
        if m.insert(name, t).is_some() {
            return Err(LinkError::MultipleDrivers(name.to_string()));
        }
    }
    Ok(m)
}

/// Undriven references and width conflicts, in a stable order.
fn connection_errors(nl: &Netlist, drivers: &HashMap<&str, (u32, bool)>) -> Vec<LinkError> {
    let mut errs = Vec::new();
    let exact = |sig: &str, want: u32, sink: &str, errs: &mut Vec<LinkError>| match drivers.get(sig) {
        None => errs.push(LinkError::Undriven(sig.to_string())),
        Some(&(w, _)) if w != want => errs.push(LinkError::WidthMismatch(format!(
            "{sig} is {w} bits but {sink} expects {want}"
        ))),
        _ => {}
    };
    for n in &nl.nodes {
        if let Some(a) = n.op.arity() {
            if a != n.operands.len() {
                errs.push(LinkError::WidthMismatch(format!(
                    "{} has {} operands, {} expects {a}",
                    n.name,
                    n.operands.len(),
                    n.op.mnemonic()
                )));
            }
        }
        for (k, o) in n.operands.iter().enumerate() {
            match (&n.op, k) {
                (NetOp::Select, 0) => exact(o, 1, &n.name, &mut errs),
                _ if !drivers.contains_key(o.as_str()) => errs.push(LinkError::Undriven(o.clone())),
                _ => {}
            }
        }
        if let NetOp::Lut(t) = &n.op {
            if !nl.luts.iter().any(|l| &l.name == t) {
                errs.push(LinkError::Undriven(format!("lookup table {t}")));
            }
        }
    }
    for r in &nl.regs {
        exact(&r.d, r.width, &r.name, &mut errs);
        if let Some(e) = &r.en {
            exact(e, 1, &format!("enable of {}", r.name), &mut errs);
        }
    }
    for f in &nl.fsms {
        for t in &f.transitions {
            if let Some(c) = &t.cond {
                exact(c, 1, &format!("fsm {}", f.name), &mut errs);
            }
        }
    }
    for p in nl.ports.iter().filter(|p| p.dir == Direction::Out) {
        exact(&p.name, p.width, &format!("port {}", p.name), &mut errs);
    }
    for m in &nl.mems {
        let port_width = |name: &str| nl.port(name).map(|p| p.width);
        match m.kind {
            MemKind::Read => {
                for (sig, w) in [(&m.addr, m.addr_width()), (&m.en, 1)] {
                    exact(sig, w, &format!("memory {}", m.name), &mut errs);
                }
                if port_width(&m.data) != Some(m.word_width) {
                    errs.push(LinkError::WidthMismatch(format!(
                        "{} must be a {}-bit input port of memory {}",
                        m.data, m.word_width, m.name
                    )));
                }
            }
            MemKind::Write => {
                for (sig, w) in [(&m.addr, m.addr_width()), (&m.en, 1), (&m.data, m.word_width)] {
                    exact(sig, w, &format!("memory {}", m.name), &mut errs);
                }
            }
        }
    }
    errs
}

/// Strongly connected groups of combinational signals with a cycle.
fn comb_cycles(nl: &Netlist) -> Vec<BTreeSet<String>> {
    let idx: HashMap<&str, usize> = nl.nodes.iter().enumerate().map(|(k, n)| (n.name.as_str(), k)).collect();
    let succ: Vec<Vec<usize>> = nl
        .nodes
        .iter()
        .map(|n| n.operands.iter().filter_map(|o| idx.get(o.as_str()).copied()).collect())
        .collect();
    // Tarjan, iterative.
    let n = nl.nodes.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut out = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work = vec![(root, 0usize)];
        while let Some(&mut (v, ref mut i)) = work.last_mut() {
            if *i == 0 && index[v] == usize::MAX {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on[v] = true;
            }
            if *i < succ[v].len() {
                let w = succ[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(p, _)) = work.last() {
                low[p] = low[p].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = BTreeSet::new();
                loop {
                    let w = stack.pop().unwrap();
                    on[w] = false;
                    comp.insert(nl.nodes[w].name.clone());
                    if w == v {
                        break;
                    }
                }
                if comp.len() > 1 || succ[v].contains(&v) {
                    out.push(comp);
                }
            }
        }
    }
    out.sort();
    out
}

/// Every invariant violation of a linked netlist, one line each; empty when
/// the netlist is well formed.
pub fn check(nl: &Netlist) -> Vec<String> {
    let mut report = Vec::new();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let names = nl
        .ports
        .iter()
        .filter(|p| p.dir == Direction::In)
        .map(|p| p.name.as_str())
        .chain(nl.regs.iter().map(|r| r.name.as_str()))
        .chain(nl.nodes.iter().map(|n| n.name.as_str()))
        .chain(nl.fsms.iter().flat_map(|f| {
            std::iter::once(f.state.as_str()).chain(f.outputs.iter().map(|o| o.signal.as_str()))
        }));
    for n in names {
        *seen.entry(n).or_insert(0) += 1;
    }
    for (n, c) in &seen {
        if *c > 1 {
            report.push(format!("multiple drivers: {n}"));
        }
    }
    let types = nl.signal_types();
    let drivers: HashMap<&str, (u32, bool)> = types.iter().map(|(k, &v)| (k.as_str(), v)).collect();
    for e in connection_errors(nl, &drivers) {
        report.push(e.to_string());
    }
    for c in comb_cycles(nl) {
        report.push(format!("combinational cycle {{{}}}", c.into_iter().collect::<Vec<_>>().join(",")));
    }
    report
}

/// Combinational nodes in evaluation order, or the first cycle found.
pub(crate) fn comb_order(nl: &Netlist) -> Result<Vec<usize>, BTreeSet<String>> {
    let idx: HashMap<&str, usize> = nl.nodes.iter().enumerate().map(|(k, n)| (n.name.as_str(), k)).collect();
    let n = nl.nodes.len();
    let mut pending = vec![0usize; n];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, node) in nl.nodes.iter().enumerate() {
        for o in &node.operands {
            if let Some(&j) = idx.get(o.as_str()) {
                pending[k] += 1;
                users[j].push(k);
            }
        }
    }
    let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
        (0..n).filter(|&k| pending[k] == 0).map(std::cmp::Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(std::cmp::Reverse(k)) = ready.pop() {
        order.push(k);
        for &u in &users[k] {
            pending[u] -= 1;
            if pending[u] == 0 {
                ready.push(std::cmp::Reverse(u));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(comb_cycles(nl).into_iter().next().unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bit_node(name: &str, op: NetOp, ops: &[&str], width: u32) -> CombNode {
        CombNode {
            name: name.into(),
            op,
            operands: ops.iter().map(|s| s.to_string()).collect(),
            width,
            signed: false,
        }
    }

    fn port(name: &str, dir: Direction, width: u32) -> PortDecl {
        PortDecl {
            name: name.into(),
            dir,
            width,
            signed: false,
        }
    }

    #[test]
    fn two_drivers_of_result_valid() {
        let mut a = Netlist::new("a");
        a.nodes.push(bit_node("result_valid", NetOp::Const(1), &[], 1));
        let b = a.clone();
        let e = link("k", vec![a, b]).unwrap_err();
        assert_eq!(e.to_string(), "multiple drivers: result_valid");
    }

    #[test]
    fn typo_is_undriven() {
        let mut a = Netlist::new("a");
        a.nodes.push(bit_node("window_valid", NetOp::Const(1), &[], 1));
        a.nodes.push(bit_node("fire", NetOp::Copy, &["windw_valid"], 1));
        let e = link("k", vec![a]).unwrap_err();
        assert!(e.to_string().starts_with("undriven signal"), "{e}");
        assert!(e.to_string().contains("windw_valid"));
    }

    #[test]
    fn combinational_loop_reported() {
        let mut nl = Netlist::new("k");
        nl.nodes.push(bit_node("one", NetOp::Const(1), &[], 8));
        nl.nodes.push(bit_node("a", NetOp::Add, &["b", "one"], 8));
        nl.nodes.push(bit_node("b", NetOp::Add, &["a", "one"], 8));
        let r = check(&nl);
        assert_eq!(r, vec!["combinational cycle {a,b}".to_string()]);
        assert!(comb_order(&nl).is_err());
    }

    #[test]
    fn narrow_port_flags_width() {
        let mut nl = Netlist::new("k");
        nl.ports.push(port("x", Direction::In, 8));
        nl.nodes.push(bit_node("y", NetOp::Add, &["x", "x"], 9));
        nl.ports.push(port("y", Direction::Out, 8));
        let r = check(&nl);
        assert_eq!(r.len(), 1);
        assert!(r[0].starts_with("width mismatch"), "{r:?}");
    }

    #[test]
    fn clean_netlist_has_empty_report() {
        let mut nl = Netlist::new("k");
        nl.ports.push(port("x", Direction::In, 8));
        nl.nodes.push(bit_node("s", NetOp::Add, &["x", "q"], 9));
        nl.regs.push(Register {
            name: "q".into(),
            width: 9,
            signed: false,
            reset: 0,
            d: "s".into(),
            en: None,
            kind: RegKind::Datapath,
        });
        nl.ports.push(port("q", Direction::Out, 9));
        assert!(check(&nl).is_empty());
        assert_eq!(comb_order(&nl).unwrap(), vec![0]);
    }
}
