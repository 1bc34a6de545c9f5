// SPDX-License-Identifier: Apache-2.0

mod common;

use minihls::corpus::{kernel, CORPUS};
use common::width::{declared, ranges};
use minihls::dataflow::{check_width_safety, Opcode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn propagated_ranges_fit_inferred_widths() {
    for k in &CORPUS {
        let c = common::compile_corpus(k);
        let g = &c.graph;
        for (n, r) in g.nodes.iter().zip(ranges(g)) {
            if matches!(n.op, Opcode::Lpr | Opcode::Snx) {
                continue;
            }
            let d = declared(n.width, n.signed);
            assert!(
                r.0 >= d.0 && r.1 <= d.1,
                "{}: node {} {} range {r:?} exceeds {}{}",
                k.name,
                n.id,
                n.op.name(),
                if n.signed { "s" } else { "u" },
                n.width
            );
        }
    }
}

/// Each tap swept over all 256 values while the others sit at every
/// combination of minimum, zero and maximum.
#[test]
fn fir_exhaustive_tap_sweeps() {
    let c = common::compile_corpus(kernel("fir").unwrap());
    let g = &c.graph;
    let taps = g.inputs.len();
    assert_eq!(taps, 5);
    let corners = [-128i128, 0, 127];
    let mut iterations = Vec::new();
    for swept in 0..taps {
        for combo in 0..3usize.pow(taps as u32 - 1) {
            let mut rest = combo;
            let base: Vec<i128> = (0..taps)
                .map(|t| {
                    if t == swept {
                        0
                    } else {
                        let v = corners[rest % 3];
                        rest /= 3;
                        v
                    }
                })
                .collect();
            for x in -128i128..=127 {
                let mut it = base.clone();
                it[swept] = x;
                iterations.push(it);
            }
        }
    }
    assert_eq!(iterations.len(), 5 * 81 * 256);
    check_width_safety(g, &iterations).unwrap();
}

#[test]
fn corpus_random_vectors_stay_in_width() {
    for k in &CORPUS {
        let c = common::compile_corpus(k);
        let g = &c.graph;
        let mut rng = ChaCha8Rng::seed_from_u64(0x1000);
        let iterations: Vec<Vec<i128>> = (0..1000)
            .map(|_| {
                g.inputs
                    .iter()
                    .map(|p| rng.gen_range(p.ty.min_value()..=p.ty.max_value()))
                    .collect()
            })
            .collect();
        check_width_safety(g, &iterations).unwrap_or_else(|e| panic!("{}: {e}", k.name));
    }
}

/// A node narrowed below its true range is reported.
#[test]
fn narrowed_node_is_caught() {
    let c = common::compile_corpus(kernel("fir").unwrap());
    let mut g = c.graph.clone();
    let n = g.nodes.iter_mut().find(|n| n.op == Opcode::Add).unwrap();
    n.width -= 4;
    let it = vec![vec![127i128; 5], vec![-128; 5]];
    assert!(check_width_safety(&g, &it).is_err());
}
