// SPDX-License-Identifier: Apache-2.0

//! Human-readable summary of a compiled kernel.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::dataflow::PortRole;
use crate::pipeline::Compiled;

/// Published output width of the fully unrolled 8-point DCT for 8-bit
/// input, shown for comparison only.
pub const REFERENCE_DCT_OUTPUT_WIDTH: u32 = 19;

/// Steady-state rates predicted from the window and store shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct Throughput {
    /// Loop iterations started per cycle once the pipeline is full.
    pub firings_per_cycle: f64,
    /// Array elements stored per iteration.
    pub outputs_per_firing: usize,
    /// The whole iteration space runs as a single firing.
    pub single_firing: bool,
}

pub fn predicted_throughput(c: &Compiled) -> Throughput {
    let sk = &c.scalarized;
    let mut rate: f64 = 1.0;
    for w in &c.windows {
        let fresh = if w.stride.iter().any(|&s| s > 0) {
            w.size() - w.overlap()
        } else {
            w.size()
        };
        if fresh > 0 {
            rate = rate.min(w.elements_per_word() as f64 / fresh as f64);
        }
    }
    let mut per_array: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &sk.stores {
        *per_array.entry(s.array.as_str()).or_default() += 1;
    }
    let single_firing = sk.loop_spec.trip() <= 1;
    if !single_firing {
        for &n in per_array.values() {
            rate = rate.min(1.0 / n as f64);
        }
    }
    Throughput {
        firings_per_cycle: rate,
        outputs_per_firing: sk.stores.len(),
        single_firing,
    }
}

fn ty(n: &crate::dataflow::Node) -> String {
    format!("{}{}", if n.signed { "s" } else { "u" }, n.width)
}

/// Widths, depth, registers, windows and predicted throughput.
pub fn report(c: &Compiled) -> String {
    let g = &c.graph;
    let nl = &c.netlist;
    let mut s = String::new();
    let _ = writeln!(s, "kernel {}", g.name);
    let _ = writeln!(s, "pipeline depth: {}", g.depth);
    let _ = writeln!(s, "data path registers: {}", g.register_count());
    let _ = writeln!(s, "netlist registers: {} ({})", nl.register_count(), nl.census());
    let _ = writeln!(s, "state machines: {}", nl.fsms.len());
    let _ = writeln!(s, "iterations: {}", c.scalarized.loop_spec.trip());
    for w in &c.windows {
        let _ = writeln!(
            s,
            "window {}: shape {:?} stride {:?} overlap {} ({} elements of {} bits per {}-bit word)",
            w.array,
            w.shape,
            w.stride,
            w.overlap(),
            w.elements_per_word(),
            w.data_width,
            w.bus_width
        );
    }
    let t = predicted_throughput(c);
    if t.single_firing {
        let _ = writeln!(s, "throughput: single firing, {} outputs/firing", t.outputs_per_firing);
    } else {
        let _ = writeln!(
            s,
            "throughput: {} firings/cycle, {} outputs/firing",
            t.firings_per_cycle, t.outputs_per_firing
        );
    }
    let _ = writeln!(s, "signal widths:");
    for p in &g.inputs {
        let _ = writeln!(s, "  in  {:<16} {}", p.name, ty(g.node(p.node)));
    }
    for p in &g.outputs {
        let _ = writeln!(s, "  out {:<16} {}", p.name, ty(g.node(p.node)));
    }
    for n in &g.nodes {
        if n.op.is_operation() {
            let _ = writeln!(s, "  {:<20} {:<6} {}", n.id.to_string(), n.op.name(), ty(n));
        }
    }
    if g.name.starts_with("dct") {
        if let Some(w) = stored_width(c) {
            let _ = writeln!(
                s,
                "dct output width: inferred {w} bits, published {REFERENCE_DCT_OUTPUT_WIDTH} bits (informational)"
            );
        }
    }
    s
}

/// Widest inferred width among the values handed to stores.
pub fn stored_width(c: &Compiled) -> Option<u32> {
    let g = &c.graph;
    g.outputs
        .iter()
        .filter(|p| matches!(p.role, PortRole::Store(_)))
        .map(|p| g.node(p.node).width)
        .max()
}
