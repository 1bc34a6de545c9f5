// SPDX-License-Identifier: Apache-2.0

use crate::dataflow::DataflowGraph;
use crate::netlist::{bits_for, FragmentBuilder, Fsm, FsmOutput, NetOp, Netlist, RegKind, Sig, Transition};
use crate::transforms::ScalarizedKernel;

use super::buffer::window_valid_name;
use super::{loop_counters, InterfacePlan};

pub const CONTROLLER_STATES: [&str; 5] = ["IDLE", "FILL", "STEADY", "DRAIN", "DONE"];

pub(crate) fn valid_name(stage: u32) -> String {
    if stage == 0 {
        "ctl.fire".to_string()
    } else {
        format!("ctl.vs_{stage}")
    }
}

/// Iteration controller: fires one window per cycle when every buffer has
/// one ready, counts iterations, carries a valid bit down the pipeline and
/// raises `done` once the last result has been written.
///
/// A kernel without a rolled loop gets no state machine, only a running
/// flag that clears when its single window fires.
pub fn build_controller(sk: &ScalarizedKernel, g: &DataflowGraph, plan: &InterfacePlan) -> Netlist {
    let mut b = FragmentBuilder::new(&sk.name, "ctl");
    b.input("clk", 1, false);
    b.input("rst", 1, false);
    let start = b.input("start", 1, false);
    let running = Sig::bit("ctl.running");

    let ready: Vec<Sig> = plan.buffers.iter().map(|p| Sig::bit(window_valid_name(&p.array))).collect();
    let ready = b.all(&ready);
    let mut gate = vec![running.clone(), ready];
    if plan.rolled && plan.throttle > 1 {
        let k = plan.throttle as i64;
        let thr = b.reg("thr", bits_for((k - 1) as u64), false, 0, RegKind::Control);
        let free = b.eq_const(&thr, 0);
        let fire = Sig::bit("ctl.fire");
        let reload = b.konst(k - 1, thr.width, false);
        let dec = b.add_const(&thr, -1, thr.width);
        let idle = b.select(&free, &thr, &dec);
        let next = b.select(&fire, &reload, &idle);
        b.drive(&thr, &next, None);
        gate.push(free);
    }
    let fire = b.all(&gate);
    let fire = b.node_named("ctl.fire".into(), NetOp::Copy, &[&fire], 1, false);

    let mut stages = Vec::new();
    let mut prev = fire.clone();
    for s in 1..=g.depth {
        let r = b.reg_named(valid_name(s), 1, false, 0, RegKind::Valid);
        b.drive(&r, &prev, None);
        stages.push(r.clone());
        prev = r;
    }
    let result_valid = b.node_named("result_valid".into(), NetOp::Copy, &[&prev], 1, false);
    let busy = b.any(&stages);
    let empty = b.not(&busy);
    let idle: Vec<Sig> = sk
        .output_arrays()
        .iter()
        .map(|a| Sig::bit(format!("wr_{}.idle", a.name)))
        .collect();
    let mut quiet = idle;
    quiet.push(empty);
    let drained = b.all(&quiet);

    if !plan.rolled {
        let run = b.reg("running", 1, false, 0, RegKind::Control);
        let fired = b.reg("fired", 1, false, 0, RegKind::Control);
        let done = b.reg("done", 1, false, 0, RegKind::Control);
        let not_fire = b.not(&fire);
        let keep = b.and(&run, &not_fire);
        let not_run = b.not(&run);
        let not_fired = b.not(&fired);
        let fresh = b.all(&[start, not_run, not_fired]);
        let next = b.or(&keep, &fresh);
        b.drive(&run, &next, None);
        let next = b.or(&fired, &fire);
        b.drive(&fired, &next, None);
        let finished = b.and(&fired, &drained);
        let next = b.or(&done, &finished);
        b.drive(&done, &next, None);
        b.output("done", &done);
        return b.finish();
    }

    let issue = loop_counters(&mut b, &sk.loop_spec, &fire, "idx");
    for (i, s) in sk.loop_spec.indices.iter().zip(&issue.inc) {
        b.node_named(format!("ctl.inc_{}", i.name), NetOp::Copy, &[s], 1, false);
    }
    if !sk.output_arrays().is_empty() {
        let retire = loop_counters(&mut b, &sk.loop_spec, &result_valid, "ret");
        for (i, s) in sk.loop_spec.indices.iter().zip(&retire.inc) {
            b.node_named(format!("ctl.rinc_{}", i.name), NetOp::Copy, &[s], 1, false);
        }
    }
    let fire_last = b.and(&fire, &issue.last);
    let fire_last = b.node_named("ctl.fire_last".into(), NetOp::Copy, &[&fire_last], 1, false);
    let drained = b.node_named("ctl.drained".into(), NetOp::Copy, &[&drained], 1, false);

    let st = |n: &str| CONTROLLER_STATES.iter().position(|s| *s == n).unwrap();
    let t = |from: &str, cond: Option<&Sig>, to: &str| Transition {
        from: st(from),
        cond: cond.map(|c| c.name.clone()),
        to: st(to),
    };
    b.nl.fsms.push(Fsm {
        name: "ctl".into(),
        state: "ctl.state".into(),
        states: CONTROLLER_STATES.iter().map(|s| s.to_string()).collect(),
        reset: st("IDLE"),
        transitions: vec![
            t("IDLE", Some(&start), "FILL"),
            t("FILL", Some(&fire_last), "DRAIN"),
            t("FILL", Some(&fire), "STEADY"),
            t("STEADY", Some(&fire_last), "DRAIN"),
            t("DRAIN", Some(&drained), "DONE"),
        ],
        outputs: vec![
            FsmOutput {
                signal: running.name.clone(),
                states: vec![st("FILL"), st("STEADY")],
            },
            FsmOutput {
                signal: "ctl.done".into(),
                states: vec![st("DONE")],
            },
        ],
    });
    b.output("done", &Sig::bit("ctl.done"));
    b.finish()
}
