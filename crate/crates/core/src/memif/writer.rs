// SPDX-License-Identifier: Apache-2.0

use crate::dataflow::{DataflowGraph, PortRole};
use crate::frontend::ArrayDecl;
use crate::netlist::{bits_for, FragmentBuilder, MemKind, Memory, NetOp, Netlist, RegKind, Sig};
use crate::transforms::ScalarizedKernel;

use super::{affine_reg, flatten, level_deltas, mem_ports};

/// Output writer for one array: captures an iteration's stores when
/// `result_valid` rises, then writes them one element per word on
/// consecutive cycles.
pub fn build_writer(
    sk: &ScalarizedKernel,
    g: &DataflowGraph,
    array: &ArrayDecl,
    values: &[Sig],
    alone: bool,
) -> Netlist {
    let a = &array.name;
    let mut b = FragmentBuilder::new(&sk.name, &format!("wr_{a}"));
    let (addr_port, we_port, data_port) = mem_ports("out", a, alone);
    let capture = Sig::bit("result_valid");
    let ty = array.element;
    let d = ty.width as u32;
    let addr_width = bits_for(array.len().saturating_sub(1) as u64);
    let first = sk.loop_spec.iterations().swap_remove(0);
    let rinc: Vec<Sig> = sk
        .loop_spec
        .indices
        .iter()
        .map(|i| Sig::bit(format!("ctl.rinc_{}", i.name)))
        .collect();

    let mut pend = Vec::new();
    let mut addrs = Vec::new();
    for (p, port) in g.outputs.iter().enumerate() {
        let PortRole::Store(k) = port.role else { continue };
        let st = &sk.stores[k];
        if st.array != *a {
            continue;
        }
        let j = pend.len();
        let r = b.reg(&format!("pend_{j}"), d, ty.signed, 0, RegKind::Output);
        b.drive(&r, &values[p], Some(&capture));
        pend.push(r);
        let flat = flatten(&st.offset, &array.extents);
        let init = sk.loop_spec.eval(&flat, &first);
        let deltas = level_deltas(&sk.loop_spec, &flat);
        if deltas.iter().all(|&x| x == 0) {
            addrs.push(b.konst(init, addr_width, false));
        } else {
            let (nxt, _) = affine_reg(&mut b, &format!("next_{j}"), init, &deltas, &rinc, addr_width);
            let cur = b.reg(&format!("addr_{j}"), addr_width, false, init, RegKind::Control);
            b.drive(&cur, &nxt, Some(&capture));
            addrs.push(cur);
        }
    }
    let k = pend.len() as i64;
    let busy = b.reg("busy", 1, false, 0, RegKind::Control);
    let (data, addr) = if k == 1 {
        b.drive(&busy, &capture, None);
        (pend[0].clone(), addrs[0].clone())
    } else {
        let wsel = b.reg("wsel", bits_for((k - 1) as u64), false, 0, RegKind::Control);
        let zero = b.konst(0, wsel.width, false);
        let step = b.add_const(&wsel, 1, wsel.width);
        let moved = b.select(&busy, &step, &wsel);
        let next = b.select(&capture, &zero, &moved);
        b.drive(&wsel, &next, None);
        let at_end = b.eq_const(&wsel, k - 1);
        let more = b.not(&at_end);
        let cont = b.and(&busy, &more);
        let next = b.or(&capture, &cont);
        b.drive(&busy, &next, None);
        let mut ops: Vec<&Sig> = vec![&wsel];
        ops.extend(pend.iter());
        let data = b.node(NetOp::Mux, &ops, d, ty.signed);
        let mut ops: Vec<&Sig> = vec![&wsel];
        ops.extend(addrs.iter());
        let addr = b.node(NetOp::Mux, &ops, addr_width, false);
        (data, addr)
    };
    b.output(&addr_port, &addr);
    b.output(&we_port, &busy);
    b.output(&data_port, &data);
    let idle = b.not(&busy);
    b.node_named(format!("wr_{a}.idle"), NetOp::Copy, &[&idle], 1, false);
    b.nl.mems.push(Memory {
        name: a.clone(),
        kind: MemKind::Write,
        word_width: d,
        depth: array.len(),
        element_width: d,
        element_signed: ty.signed,
        elements: array.len(),
        addr: addr_port,
        en: we_port,
        data: data_port,
    });
    b.finish()
}

/// Capture registers for pointer outputs, loaded on every result.
pub fn build_scalar_outputs(g: &DataflowGraph, values: &[Sig]) -> Netlist {
    let mut b = FragmentBuilder::new(&g.name, "so");
    let capture = Sig::bit("result_valid");
    for (p, port) in g.outputs.iter().enumerate() {
        if port.role != PortRole::Scalar {
            continue;
        }
        let r = b.reg(&port.name, port.ty.width as u32, port.ty.signed, 0, RegKind::Output);
        b.drive(&r, &values[p], Some(&capture));
        b.output(&port.name, &r);
    }
    b.finish()
}
