// SPDX-License-Identifier: Apache-2.0

//! Structural invariants over generated kernels, each paired with a
//! deliberate defect the same check must catch.

mod common;

use minihls::corpus::kernel;
use minihls::dataflow::{check_acyclic, check_ssa, parse_init_file, Opcode};
use minihls::frontend::ScalarType;
use minihls::netlist::{check, CombNode, NetOp, Netlist};
use minihls::pipeline::{compile, CompileOptions, Compiled};
use minihls::sim::{interpret_oracle, oracle_tables, random_vectors, simulate, SimConfig};
use proptest::prelude::*;

#[derive(Clone, Debug)]
struct Shape {
    elem: &'static str,
    out: &'static str,
    taps: Vec<(i64, char)>,
    trip: usize,
    stride: usize,
    bus: u32,
    seed: u64,
}

fn shape() -> impl Strategy<Value = Shape> {
    (
        prop::sample::select(vec![("int8_t", 8u32), ("uint8_t", 8), ("int16_t", 16), ("uint4_t", 4)]),
        prop::sample::select(vec!["int16_t", "int32_t", "uint16_t"]),
        prop::collection::vec((-9i64..=9, prop::sample::select(vec!['+', '-', '^', '&', '|'])), 1..=6),
        2usize..=12,
        1usize..=2,
        prop::sample::select(vec![8u32, 16, 32, 64]),
        any::<u64>(),
    )
        .prop_map(|((elem, w), out, taps, trip, stride, bus, seed)| Shape {
            elem,
            out,
            stride: stride.min(taps.len()),
            taps,
            trip,
            bus: bus.max(w.next_power_of_two().max(8)),
            seed,
        })
}

fn build(s: &Shape) -> Compiled {
    let src = common::window_kernel(s.elem, s.out, &s.taps, s.trip, s.stride);
    let opts = CompileOptions {
        bus_width: s.bus,
        ..CompileOptions::default()
    };
    compile(&src, &opts).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

fn with_duplicate_node(c: &Compiled, k: usize) -> minihls::dataflow::DataflowGraph {
    let mut g = c.graph.clone();
    let dup = g.nodes[k % g.nodes.len()].clone();
    g.nodes.push(dup);
    g
}

fn with_second_driver(nl: &Netlist, k: usize) -> Netlist {
    let mut m = nl.clone();
    let victim = m.nodes[k % m.nodes.len()].clone();
    m.nodes.push(CombNode {
        op: NetOp::Const(0),
        operands: Vec::new(),
        ..victim
    });
    m
}

/// Route a node's first operand through itself.
fn with_comb_loop(nl: &Netlist, k: usize) -> Option<Netlist> {
    let mut m = nl.clone();
    let n = m.nodes.len();
    let i = (0..n).map(|d| (k + d) % n).find(|&i| !m.nodes[i].operands.is_empty())?;
    let name = m.nodes[i].name.clone();
    m.nodes[i].operands[0] = name;
    Some(m)
}

/// Let the address generator fetch regardless of free ring space.
fn without_room_check(nl: &Netlist, array: &str) -> Netlist {
    let mut m = nl.clone();
    let n = m
        .nodes
        .iter_mut()
        .find(|n| n.name == format!("sb_{array}.room"))
        .expect("room signal");
    n.op = NetOp::Const(1);
    n.operands.clear();
    m
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn graphs_are_single_assignment(s in shape(), k in any::<usize>()) {
        let c = build(&s);
        prop_assert!(check_ssa(&c.graph).is_ok());
        prop_assert!(check_acyclic(&c.graph).is_ok());
        prop_assert!(check_ssa(&with_duplicate_node(&c, k)).is_err());
    }

    #[test]
    fn netlists_have_single_drivers_and_no_comb_cycles(s in shape(), k in any::<usize>()) {
        let c = build(&s);
        prop_assert_eq!(check(&c.netlist), Vec::<String>::new());
        let two = check(&with_second_driver(&c.netlist, k));
        prop_assert!(two.iter().any(|m| m.starts_with("multiple drivers")), "{:?}", two);
        let looped = check(&with_comb_loop(&c.netlist, k).unwrap());
        prop_assert!(looped.iter().any(|m| m.starts_with("combinational cycle")), "{:?}", looped);
    }

    #[test]
    fn buffers_never_overwrite_live_elements(s in shape()) {
        let c = build(&s);
        let tables = oracle_tables(&c.source, &[]).unwrap();
        for v in random_vectors(&c.source, s.seed, 2) {
            let r = common::run(&c, &v);
            prop_assert_eq!(common::check_liveness(&c, &r.trace, &v), Ok(()));
            let gold = interpret_oracle(&c.source, &v, &tables).unwrap();
            prop_assert_eq!(common::sim_arrays(&c, &r), gold.arrays);
        }
    }

    #[test]
    fn init_files_round_trip(
        addr in 1u32..=6,
        signed in any::<bool>(),
        width in 2u8..=16,
        seed in any::<u64>(),
        hex in any::<bool>(),
    ) {
        let ty = ScalarType::new(signed, width);
        let n = 1usize << addr;
        let span = (ty.max_value() - ty.min_value() + 1) as u64;
        let values: Vec<i64> = (0..n as u64)
            .map(|k| (ty.min_value() + ((seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)) % span) as i128) as i64)
            .collect();
        let line = |v: i64| {
            if hex {
                format!("0x{:x}", (v as i128).rem_euclid(1 << width))
            } else {
                v.to_string()
            }
        };
        let mut text = String::from("# table\n");
        for v in &values {
            text.push_str(&format!("{}  # entry\n", line(*v)));
        }
        prop_assert_eq!(parse_init_file(&text, addr, ty), Ok(values.clone()));

        let short: String = text.lines().take(n).map(|l| format!("{l}\n")).collect();
        prop_assert!(parse_init_file(&short, addr, ty).is_err());
        let long = format!("{text}{}\n", line(values[0]));
        prop_assert!(parse_init_file(&long, addr, ty).is_err());
        let wide = text.replacen(&format!("{}  #", line(values[0])), &format!("{}  #", ty.max_value() + 1), 1);
        prop_assert!(parse_init_file(&wide, addr, ty).is_err());
        let junk = text.replacen("  # entry", " z", 1);
        prop_assert!(parse_init_file(&junk, addr, ty).is_err());
    }
}

#[test]
fn overwriting_live_elements_is_detected() {
    let c = common::compile_corpus(kernel("fir").unwrap());
    let broken = without_room_check(&c.netlist, "A");
    let v = random_vectors(&c.source, 7, 1).remove(0);
    let r = simulate(&broken, &SimConfig::from_vectors(&broken, &v).unwrap()).unwrap();
    let e = common::check_liveness(&c, &r.trace, &v).unwrap_err();
    assert!(e.contains("lanes"), "{e}");
    let ok = common::run(&c, &v);
    assert_eq!(common::check_liveness(&c, &ok.trace, &v), Ok(()));
}

#[test]
fn feedback_pair_mismatch_breaks_ssa() {
    let c = common::compile_corpus(kernel("accumulator").unwrap());
    let mut g = c.graph.clone();
    let f = &mut g.feedbacks[0];
    f.snx = f.lpr;
    assert!(check_ssa(&g).is_err());
    let ops: Vec<Opcode> = c.graph.nodes.iter().map(|n| n.op).collect();
    assert!(ops.contains(&Opcode::Lpr) && ops.contains(&Opcode::Snx));
}
