// SPDX-License-Identifier: Apache-2.0

mod common;

use minihls::corpus::{kernel, CORPUS};
use minihls::netlist::{check, dump_netlist, parse_netlist, NetOp};
use minihls::sim::{random_vectors, simulate, SimConfig, DEFAULT_SEED};
use minihls::vhdl::{emit, structural_counts, EmitConfig};

#[test]
fn dump_parse_dump_is_identity() {
    for k in &CORPUS {
        let c = common::compile_corpus(k);
        let text = dump_netlist(&c.netlist);
        let back = parse_netlist(&text).unwrap_or_else(|e| panic!("{}: {e}", k.name));
        assert_eq!(dump_netlist(&back), text, "{}", k.name);
        assert_eq!(back.census(), c.netlist.census(), "{}", k.name);
        assert!(check(&back).is_empty(), "{}", k.name);
    }
}

#[test]
fn parsed_netlist_simulates_identically() {
    let c = common::compile_corpus(kernel("fir").unwrap());
    let back = parse_netlist(&dump_netlist(&c.netlist)).unwrap();
    for v in random_vectors(&c.source, DEFAULT_SEED, 3) {
        let a = simulate(&c.netlist, &SimConfig::from_vectors(&c.netlist, &v).unwrap()).unwrap();
        let b = simulate(&back, &SimConfig::from_vectors(&back, &v).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

/// Registers and operators counted in the emitted text agree with the
/// netlist they came from.
#[test]
fn vhdl_census_matches_netlist() {
    for k in &CORPUS {
        let c = common::compile_corpus(k);
        let nl = &c.netlist;
        let counts = structural_counts(&emit(nl, &EmitConfig::default()).unwrap());
        let census = nl.census();
        assert_eq!(counts.entities, 1, "{}", k.name);
        assert_eq!(counts.clocked_processes, 1, "{}", k.name);
        assert_eq!(counts.registers + counts.state_registers, census.total(), "{}", k.name);
        assert_eq!(counts.state_registers, census.fsm_states, "{}", k.name);
        assert_eq!(counts.multipliers, nl.count_ops(&NetOp::Mul), "{}", k.name);
        assert_eq!(
            counts.adders,
            nl.count_ops(&NetOp::Add) + nl.count_ops(&NetOp::Sub),
            "{}",
            k.name
        );
        let states: usize = nl.fsms.iter().map(|f| f.states.len()).sum();
        assert_eq!(counts.fsm_states, states, "{}", k.name);
        assert_eq!(counts.tables, nl.luts.len(), "{}", k.name);
    }
}
