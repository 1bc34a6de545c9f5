// SPDX-License-Identifier: Apache-2.0

use crate::dataflow::{DataflowGraph, Opcode, PortRole};
use crate::netlist::{FragmentBuilder, NetOp, Netlist, RegKind, Sig};
use crate::transforms::ScalarizedKernel;

use super::buffer::lane_name;
use super::controller::valid_name;
use super::{InterfacePlan, MemifError};

fn net_op(op: Opcode, table: Option<&str>, value: i64) -> NetOp {
    match op {
        Opcode::Const => NetOp::Const(value),
        Opcode::Add => NetOp::Add,
        Opcode::Sub => NetOp::Sub,
        Opcode::Mul => NetOp::Mul,
        Opcode::And => NetOp::And,
        Opcode::Or => NetOp::Or,
        Opcode::Xor => NetOp::Xor,
        Opcode::Not => NetOp::Not,
        Opcode::Shl => NetOp::Shl,
        Opcode::Shr => NetOp::Shr,
        Opcode::Eq => NetOp::Eq,
        Opcode::Ne => NetOp::Ne,
        Opcode::Lt => NetOp::Lt,
        Opcode::Le => NetOp::Le,
        Opcode::Gt => NetOp::Gt,
        Opcode::Ge => NetOp::Ge,
        Opcode::Select | Opcode::Phi => NetOp::Select,
        Opcode::Lut => NetOp::Lut(table.unwrap_or_default().to_string()),
        Opcode::Copy | Opcode::Input | Opcode::Lpr | Opcode::Snx => NetOp::Copy,
    }
}

/// Translate the scheduled graph node for node: latched nodes become a
/// combinational function feeding a register, feedback pairs share one
/// register enabled by the valid bit of their stage. Returns the fragment
/// and the signal behind each graph output, in port order.
pub fn build_datapath(
    sk: &ScalarizedKernel,
    g: &DataflowGraph,
    plan: &InterfacePlan,
) -> Result<(Netlist, Vec<Sig>), MemifError> {
    let mut b = FragmentBuilder::new(&sk.name, "dp");
    let mut sig: Vec<Option<Sig>> = vec![None; g.nodes.len()];
    for n in &g.nodes {
        let name = format!("dp.n{}", n.id.0);
        let ops: Vec<Sig> = n
            .operands
            .iter()
            .map(|o| sig[o.0].clone().expect("operands precede users"))
            .collect();
        let refs: Vec<&Sig> = ops.iter().collect();
        let s = match n.op {
            Opcode::Input => {
                let port = g
                    .inputs
                    .iter()
                    .find(|p| p.node == n.id)
                    .ok_or_else(|| MemifError::Config(format!("input node {} has no port", n.id)))?;
                let src = match port.role {
                    PortRole::Load(j) => {
                        let load = &sk.loads[j];
                        let bp = plan
                            .buffers
                            .iter()
                            .find(|bp| bp.array == load.array)
                            .ok_or_else(|| MemifError::Config(format!("no buffer for '{}'", load.array)))?;
                        let k = bp.taps.iter().position(|t| t.0 == load.scalar).ok_or_else(|| {
                            MemifError::Config(format!("load '{}' is not a tap of '{}'", load.scalar, load.array))
                        })?;
                        Sig::new(lane_name(&load.array, k), bp.data_width, bp.signed)
                    }
                    PortRole::Param => b.input(&port.name, port.ty.width as u32, port.ty.signed),
                    PortRole::LoopIndex => {
                        Sig::new(format!("ctl.idx_{}", port.name), port.ty.width as u32, port.ty.signed)
                    }
                    _ => return Err(MemifError::Config(format!("port '{}' is not an input", port.name))),
                };
                b.node_named(name, NetOp::Copy, &[&src], n.width, n.signed)
            }
            Opcode::Lpr => {
                let f = g.feedback_of_lpr(n.id).expect("paired LPR");
                let r = b.reg_named(
                    format!("dp.fb_{}", f.var),
                    f.ty.width as u32,
                    f.ty.signed,
                    f.init,
                    RegKind::Feedback,
                );
                r
            }
            Opcode::Snx => {
                let f = g.feedback_of_snx(n.id).expect("paired SNX");
                let lpr = sig[f.lpr.0].clone().expect("LPR precedes SNX");
                let en = Sig::bit(valid_name(g.node(f.lpr).stage));
                b.drive(&lpr, &ops[0], Some(&en));
                lpr
            }
            Opcode::Copy if n.latched => {
                let r = b.reg_named(name, n.width, n.signed, 0, RegKind::Delay);
                b.drive(&r, &ops[0], None);
                r
            }
            op => {
                let net = net_op(op, n.name.as_deref(), n.value);
                if n.latched {
                    let d = b.node_named(format!("{name}_d"), net, &refs, n.width, n.signed);
                    let r = b.reg_named(name, n.width, n.signed, 0, RegKind::Datapath);
                    b.drive(&r, &d, None);
                    r
                } else {
                    b.node_named(name, net, &refs, n.width, n.signed)
                }
            }
        };
        sig[n.id.0] = Some(s);
    }
    let outs = g
        .outputs
        .iter()
        .map(|p| sig[p.node.0].clone().expect("output node translated"))
        .collect();
    b.nl.luts = g.luts.clone();
    Ok((b.finish(), outs))
}
