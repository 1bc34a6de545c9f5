// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use super::*;

/// Stable text form: port and feedback headers, then one line per node as
/// `id: OPCODE(width,s|u,stage) operands`.
pub fn dump_graph(g: &DataflowGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph {} depth {}", g.name, g.depth);
    for p in &g.inputs {
        let _ = writeln!(out, "in {} {} = {}", p.name, p.ty, p.node);
    }
    for p in &g.outputs {
        let _ = writeln!(out, "out {} {} = {}", p.name, p.ty, p.node);
    }
    for f in &g.feedbacks {
        let _ = writeln!(out, "feedback {} {} lpr {} snx {} init {}", f.var, f.ty, f.lpr, f.snx, f.init);
    }
    for l in &g.luts {
        let _ = writeln!(out, "lut {} addr {} data {} entries {}", l.name, l.addr_width, l.data, l.contents.len());
    }
    for n in &g.nodes {
        let _ = write!(
            out,
            "{}: {}({},{},{})",
            n.id,
            n.op.name(),
            n.width,
            if n.signed { 's' } else { 'u' },
            n.stage
        );
        for o in &n.operands {
            let _ = write!(out, " {o}");
        }
        if n.op == Opcode::Const {
            let _ = write!(out, " #{}", n.value);
        }
        if let Some(t) = n.wrap {
            if !matches!(n.op, Opcode::Input | Opcode::Lpr | Opcode::Snx) {
                let _ = write!(out, " wrap {t}");
            }
        }
        if n.latched {
            out.push_str(" reg");
        }
        if let Some(name) = &n.name {
            let _ = write!(out, " ; {name}");
        }
        out.push('\n');
    }
    out
}
