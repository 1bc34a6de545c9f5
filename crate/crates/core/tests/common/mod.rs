// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

pub mod width;

use std::collections::BTreeMap;

use minihls::corpus::CorpusKernel;
use minihls::netlist::{dump_netlist, MemKind};
use minihls::pipeline::{compile, CompileOptions, Compiled};
use minihls::sim::{
    interpret_oracle, oracle_tables, random_vectors, simulate, SimConfig, SimResult, SimTrace, TestVectors,
    DEFAULT_MAX_CYCLES, DEFAULT_SEED,
};
use minihls::transforms::{ScalarizedKernel, WindowSpec};
use minihls::vhdl::{emit, emit_testbench, EmitConfig, TestbenchData};

pub fn compile_corpus(k: &CorpusKernel) -> Compiled {
    let opts = CompileOptions {
        keep_ir: true,
        ..k.options()
    };
    compile(k.source, &opts).unwrap_or_else(|e| panic!("{}: {e}", k.name))
}

/// Every generated text artifact of a corpus kernel, keyed by file suffix.
pub fn artifacts(k: &CorpusKernel) -> BTreeMap<&'static str, String> {
    let c = compile_corpus(k);
    let cfg = EmitConfig::default();
    let tables = oracle_tables(&c.source, &k.options().luts).unwrap();
    let v = random_vectors(&c.source, DEFAULT_SEED, 1).remove(0);
    let gold = interpret_oracle(&c.source, &v, &tables).unwrap();
    let data = TestbenchData {
        vectors: v,
        expected_arrays: gold.arrays,
        expected_scalars: gold.scalars,
        max_cycles: DEFAULT_MAX_CYCLES,
    };
    BTreeMap::from([
        (".vhd", emit(&c.netlist, &cfg).unwrap()),
        ("_tb.vhd", emit_testbench(&c.netlist, &data, &cfg).unwrap()),
        (".ir", c.ir_text()),
        (".netlist", dump_netlist(&c.netlist)),
        (".log", c.log_text()),
        (".passes", c.passes_text()),
    ])
}

pub fn run(c: &Compiled, v: &TestVectors) -> SimResult {
    simulate(&c.netlist, &SimConfig::from_vectors(&c.netlist, v).unwrap()).unwrap()
}

/// Output arrays of a simulation as optional cells.
pub fn sim_arrays(c: &Compiled, r: &SimResult) -> BTreeMap<String, Vec<Option<i64>>> {
    c.netlist
        .mems
        .iter()
        .filter(|m| m.kind == MemKind::Write)
        .map(|m| (m.name.clone(), r.memory(&m.name).unwrap().unpack(m)))
        .collect()
}

/// Window lanes every firing must export, computed from the access
/// pattern alone: lane k of iteration t holds the element at the window
/// corner plus the k-th tap offset.
pub fn expected_windows(sk: &ScalarizedKernel, ws: &WindowSpec, elements: &[i64]) -> Vec<Vec<i64>> {
    sk.loop_spec
        .iterations()
        .iter()
        .map(|it| {
            let corner: Vec<i64> = ws.anchor.iter().map(|a| sk.loop_spec.eval(a, it)).collect();
            ws.taps
                .iter()
                .map(|(_, off)| {
                    let idx: Vec<i64> = corner.iter().zip(off).map(|(c, o)| c + o).collect();
                    elements[ws.row_major(&idx) as usize]
                })
                .collect()
        })
        .collect()
}

/// Compare every exported window against the access pattern; the first
/// disagreement is returned.
pub fn check_liveness(c: &Compiled, trace: &SimTrace, v: &TestVectors) -> Result<(), String> {
    for ws in &c.windows {
        let want = expected_windows(&c.scalarized, ws, &v.memories[&ws.array]);
        let got: Vec<&Vec<i64>> = trace
            .records
            .iter()
            .filter(|r| r.fire)
            .filter_map(|r| r.windows.iter().find(|w| w.array == ws.array).map(|w| &w.lanes))
            .collect();
        if got.len() != want.len() {
            return Err(format!("{}: {} windows exported, {} expected", ws.array, got.len(), want.len()));
        }
        for (t, (g, w)) in got.iter().zip(&want).enumerate() {
            if *g != w {
                return Err(format!("{} iteration {t}: lanes {g:?}, expected {w:?}", ws.array));
            }
        }
    }
    Ok(())
}

/// A sliding-window kernel with the given taps `(coefficient, op)`.
pub fn window_kernel(elem: &str, out: &str, taps: &[(i64, char)], trip: usize, stride: usize) -> String {
    let n_in = stride * (trip - 1) + taps.len();
    let mut expr = String::new();
    for (k, (c, op)) in taps.iter().enumerate() {
        let term = if k == 0 {
            format!("{c} * A[{}]", index(stride, 0))
        } else {
            format!(" {op} {c} * A[{}]", index(stride, k))
        };
        expr.push_str(&term);
    }
    format!(
        "void k({elem} A[{n_in}], {out} C[{trip}]) {{\n  for (int i = 0; i < {trip}; i = i + 1) {{\n    C[i] = {expr};\n  }}\n}}\n"
    )
}

fn index(stride: usize, k: usize) -> String {
    let base = if stride == 1 { "i".to_string() } else { format!("{stride} * i") };
    if k == 0 {
        base
    } else {
        format!("{base} + {k}")
    }
}
