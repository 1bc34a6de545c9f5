// SPDX-License-Identifier: Apache-2.0

use crate::netlist::{bits_for, FragmentBuilder, MemKind, Memory, NetOp, Netlist, RegKind, Sig};
use crate::transforms::ScalarizedKernel;

use super::{affine_reg, mem_ports, modular_reg, BufferPlan};

/// Signal carrying the `k`-th tap of `array`'s window.
pub(crate) fn lane_name(array: &str, k: usize) -> String {
    format!("sb_{array}.window_data_{k}")
}

pub(crate) fn window_valid_name(array: &str) -> String {
    format!("sb_{array}.window_valid")
}

fn inc_signals(sk: &ScalarizedKernel) -> Vec<Sig> {
    sk.loop_spec
        .indices
        .iter()
        .map(|i| Sig::bit(format!("ctl.inc_{}", i.name)))
        .collect()
}

/// Address generator and smart buffer for one input array.
///
/// The generator fetches the contiguous run of bus words covering every
/// window, ascending, each once, and only while the ring has room for a
/// whole word beyond the live elements. The buffer lands each word in the
/// ring and exports the window at the current corner once its last tap has
/// arrived.
pub fn build_smart_buffer(sk: &ScalarizedKernel, bp: &BufferPlan, alone: bool, bus_width: u32) -> [Netlist; 2] {
    let a = &bp.array;
    let e = bp.elements_per_word as i64;
    let c = bp.capacity as i64;
    let (addr_port, en_port, data_port) = mem_ports("in", a, alone);
    let inc = inc_signals(sk);

    // Address generator.
    let mut ag = FragmentBuilder::new(&sk.name, &format!("ag_{a}"));
    let running = Sig::bit("ctl.running");
    let room = Sig::bit(format!("sb_{a}.room"));
    let issued = ag.reg("issued", bits_for(bp.words as u64), false, 0, RegKind::Control);
    let issued_el = ag.reg(
        "issued_el",
        bits_for((bp.words * e + e) as u64),
        false,
        0,
        RegKind::Control,
    );
    let landing = ag.reg("landing", 1, false, 0, RegKind::Control);
    let all_issued = ag.eq_const(&issued, bp.words);
    let more = ag.not(&all_issued);
    let go = ag.and(&running, &more);
    let fetch = ag.and(&go, &room);
    let w = issued.width;
    let next = ag.add_const(&issued, 1, w);
    let next = ag.select(&fetch, &next, &issued);
    ag.drive(&issued, &next, None);
    let w = issued_el.width;
    let next = ag.add_const(&issued_el, e, w);
    let next = ag.select(&fetch, &next, &issued_el);
    ag.drive(&issued_el, &next, None);
    ag.drive(&landing, &fetch, None);
    let addr_width = bits_for(bp.depth.saturating_sub(1) as u64);
    let addr = ag.add_const(&issued, bp.first_word, addr_width.max(issued.width + 1));
    let addr = ag.fit(&addr, addr_width, false);
    ag.output(&addr_port, &addr);
    ag.output(&en_port, &fetch);
    let data = ag.input(&data_port, bus_width, false);
    ag.nl.mems.push(Memory {
        name: a.clone(),
        kind: MemKind::Read,
        word_width: bus_width,
        depth: bp.depth,
        element_width: bp.data_width,
        element_signed: bp.signed,
        elements: bp.elements,
        addr: addr_port.clone(),
        en: en_port.clone(),
        data: data_port.clone(),
    });

    // Smart buffer.
    let mut sb = FragmentBuilder::new(&sk.name, &format!("sb_{a}"));
    let landing = Sig::bit(format!("ag_{a}.landing"));
    let issued_el = Sig::new(format!("ag_{a}.issued_el"), issued_el.width, false);
    let d = bp.data_width;
    let lanes_in: Vec<Sig> = (0..e)
        .map(|j| sb.named(&format!("lane_in_{j}"), NetOp::Slice(j as u32 * d), &[&data], d, bp.signed))
        .collect();

    let wptr = sb.reg("wptr", bits_for((c - 1) as u64), false, 0, RegKind::Control);
    let arrived = sb.reg("arrived", bits_for((bp.words * e) as u64), false, 0, RegKind::Control);
    let groups: Vec<Sig> = (0..c / e).map(|g| sb.eq_const(&wptr, g * e)).collect();
    for i in 0..c {
        let slot = sb.reg(&format!("slot_{i}"), d, bp.signed, 0, RegKind::Slot);
        let en = sb.and(&landing, &groups[(i / e) as usize]);
        sb.drive(&slot, &lanes_in[(i % e) as usize], Some(&en));
    }
    let w = wptr.width;
    let end = sb.eq_const(&wptr, c - e);
    let zero = sb.konst(0, w, false);
    let step = sb.add_const(&wptr, e, w);
    let wrapped = sb.select(&end, &zero, &step);
    let next = sb.select(&landing, &wrapped, &wptr);
    sb.drive(&wptr, &next, None);
    let w = arrived.width;
    let step = sb.add_const(&arrived, e, w);
    let next = sb.select(&landing, &step, &arrived);
    sb.drive(&arrived, &next, None);

    let moves = bp.anchor_deltas.iter().any(|&x| x != 0);
    let anchor_width = bits_for((bp.anchor_last + c) as u64);
    let (anchor, anchor_next) = if moves {
        affine_reg(&mut sb, "anchor", bp.anchor_init, &bp.anchor_deltas, &inc, anchor_width)
    } else {
        let k = sb.konst(bp.anchor_init, anchor_width, false);
        (k.clone(), k)
    };
    let need_width = bits_for((bp.anchor_last + bp.span) as u64).max(anchor_width);
    let need = sb.add_const(&anchor, bp.span, need_width);
    let ready = sb.cmp(NetOp::Le, &need, &arrived);
    sb.node_named(window_valid_name(a), NetOp::Copy, &[&ready], 1, false);
    let lhs_width = issued_el.width.max(bits_for((bp.words * e + e) as u64)) + 1;
    let lhs = sb.add_const(&issued_el, e, lhs_width);
    let rhs = sb.add_const(&anchor_next, c, bits_for((bp.anchor_last + c) as u64) + 1);
    let fits = sb.cmp(NetOp::Le, &lhs, &rhs);
    sb.node_named(format!("sb_{a}.room"), NetOp::Copy, &[&fits], 1, false);

    let slots: Vec<Sig> = (0..c).map(|i| Sig::new(sb.local(&format!("slot_{i}")), d, bp.signed)).collect();
    if moves {
        let head = modular_reg(&mut sb, "head", bp.anchor_init, &bp.anchor_deltas, &inc, c);
        let wide = bits_for((2 * c) as u64);
        let limit = sb.konst(c, wide, false);
        for (k, (_, off)) in bp.taps.iter().enumerate() {
            let pos = sb.add_const(&head, *off, wide);
            let over = sb.cmp(NetOp::Ge, &pos, &limit);
            let less = sb.add_const(&pos, -c, wide);
            let sel = sb.select(&over, &less, &pos);
            let sel = sb.fit(&sel, head.width, false);
            let mut ops: Vec<&Sig> = vec![&sel];
            ops.extend(slots.iter());
            sb.node_named(lane_name(a, k), NetOp::Mux, &ops, d, bp.signed);
        }
    } else {
        for (k, (_, off)) in bp.taps.iter().enumerate() {
            let i = (bp.anchor_init + off).rem_euclid(c) as usize;
            sb.node_named(lane_name(a, k), NetOp::Copy, &[&slots[i]], d, bp.signed);
        }
    }
    [ag.finish(), sb.finish()]
}
