// SPDX-License-Identifier: Apache-2.0

use crate::frontend::ScalarType;

use super::*;

const MAX_WIDTH: u32 = 64;

/// Narrowest type holding `v`: unsigned for non-negative values.
pub fn const_type(v: i64) -> (u32, bool) {
    if v >= 0 {
        ((64 - (v as u64).leading_zeros()).max(1), false)
    } else {
        (65 - (!v as u64).leading_zeros(), true)
    }
}

/// Common signedness of two operands: an unsigned operand meeting a signed
/// one gains a bit and becomes signed.
pub fn promote(a: (u32, bool), b: (u32, bool)) -> ((u32, bool), (u32, bool)) {
    match (a.1, b.1) {
        (false, true) => ((a.0 + 1, true), b),
        (true, false) => (a, (b.0 + 1, true)),
        _ => (a, b),
    }
}

fn fits(w: u32, signed: bool, t: ScalarType) -> bool {
    let (lo, hi) = if signed {
        (-(1i128 << (w - 1)), (1i128 << (w - 1)) - 1)
    } else {
        (0, (1i128 << w) - 1)
    };
    t.contains(lo) && t.contains(hi)
}

/// Assign a width and signedness to every node from the port types and the
/// opcode rules. Wraps that cannot change a value are dropped, and LUT
/// address widths are fixed from their index operands.
pub fn infer_widths(mut g: DataflowGraph) -> Result<DataflowGraph, DataflowError> {
    for k in 0..g.nodes.len() {
        let node = &g.nodes[k];
        let ops: Vec<(u32, bool)> = node.operands.iter().map(|&o| (g.node(o).width, g.node(o).signed)).collect();
        let operand_is_const = |i: usize| g.node(node.operands[i]).op == Opcode::Const;
        let const_value = |i: usize| g.node(node.operands[i]).value;
        let both = || {
            let (a, b) = promote(ops[0], ops[1]);
            (a.0.max(b.0), a.1)
        };
        let mut drop_wrap = false;
        let (w, s) = match node.op {
            Opcode::Const => const_type(node.value),
            Opcode::Input | Opcode::Lpr | Opcode::Snx => {
                let t = node.wrap.expect("typed node");
                (t.width as u32, t.signed)
            }
            Opcode::Add => {
                let (w, s) = both();
                (w + 1, s)
            }
            Opcode::Sub => {
                let (w, _) = both();
                (w + 1, true)
            }
            Opcode::Mul => {
                let (a, b) = promote(ops[0], ops[1]);
                (a.0 + b.0, a.1)
            }
            Opcode::And | Opcode::Or | Opcode::Xor => both(),
            Opcode::Not => (ops[0].0 + !ops[0].1 as u32, true),
            Opcode::Shl | Opcode::Shr => {
                let amount = if operand_is_const(1) {
                    const_value(1) as u32
                } else if ops[1].1 {
                    return Err(DataflowError::Width(format!("node {k}: shift amount must be unsigned")));
                } else if ops[1].0 >= 7 {
                    return Err(DataflowError::WidthOverflow {
                        node: NodeId(k),
                        width: u32::MAX,
                    });
                } else {
                    (1u32 << ops[1].0) - 1
                };
                if node.op == Opcode::Shl {
                    (ops[0].0.saturating_add(amount), ops[0].1)
                } else if operand_is_const(1) {
                    (ops[0].0.saturating_sub(amount).max(1), ops[0].1)
                } else {
                    ops[0]
                }
            }
            op if op.is_comparison() => (1, false),
            Opcode::Select | Opcode::Phi => {
                let (a, b) = promote(ops[1], ops[2]);
                (a.0.max(b.0), a.1)
            }
            Opcode::Lut => {
                let table = node.name.clone().unwrap_or_default();
                let (aw, signed) = ops[0];
                if signed {
                    return Err(DataflowError::Width(format!(
                        "address of lookup table '{table}' must be unsigned"
                    )));
                }
                let lut = g
                    .luts
                    .iter_mut()
                    .find(|l| l.name == table)
                    .ok_or_else(|| DataflowError::UnboundLut(table.clone()))?;
                let fixed = lut.fixed_address_width();
                let aw = match fixed {
                    Some(f) if aw > f => {
                        return Err(DataflowError::Width(format!(
                            "lookup table '{table}' has a {f}-bit address but is indexed with {aw} bits"
                        )))
                    }
                    Some(f) => f,
                    None if aw > 20 => {
                        return Err(DataflowError::Width(format!(
                            "lookup table '{table}' indexed with {aw} bits; at most 20 are supported"
                        )))
                    }
                    None => aw,
                };
                if lut.addr_width != 0 && lut.addr_width != aw {
                    return Err(DataflowError::Width(format!(
                        "lookup table '{table}' indexed with both {} and {aw} bits",
                        lut.addr_width
                    )));
                }
                lut.addr_width = aw;
                (lut.data.width as u32, lut.data.signed)
            }
            Opcode::Copy => match node.wrap {
                Some(t) if fits(ops[0].0, ops[0].1, t) => {
                    drop_wrap = true;
                    ops[0]
                }
                Some(t) => (t.width as u32, t.signed),
                None => ops[0],
            },
            _ => unreachable!(),
        };
        if w > MAX_WIDTH {
            return Err(DataflowError::WidthOverflow { node: NodeId(k), width: w });
        }
        let node = &mut g.nodes[k];
        node.width = w;
        node.signed = s;
        if drop_wrap {
            node.wrap = None;
        }
    }
    Ok(compact(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::tests::graph_of;

    #[test]
    fn constant_types() {
        assert_eq!(const_type(0), (1, false));
        assert_eq!(const_type(3), (2, false));
        assert_eq!(const_type(255), (8, false));
        assert_eq!(const_type(-1), (1, true));
        assert_eq!(const_type(-128), (8, true));
        assert_eq!(const_type(-129), (9, true));
    }

    fn out_width(src: &str) -> (u32, bool) {
        let g = graph_of(src, false);
        let n = g.node(g.outputs[0].node);
        // The port wrap is dropped when the value already fits.
        (n.width, n.signed)
    }

    #[test]
    fn add_and_mul_rules() {
        assert_eq!(out_width("void k(uint8_t a, uint8_t b, int* o) { *o = a + b; }"), (9, false));
        assert_eq!(out_width("void k(uint8_t a, uint8_t b, int* o) { *o = a * b; }"), (16, false));
        assert_eq!(out_width("void k(uint8_t a, int* o) { *o = 3 * a; }"), (10, false));
        assert_eq!(out_width("void k(uint8_t a, uint8_t b, int* o) { *o = a - b; }"), (9, true));
        assert_eq!(out_width("void k(uint8_t a, int8_t b, int* o) { *o = a + b; }"), (10, true));
    }

    #[test]
    fn shifts_and_compares() {
        assert_eq!(out_width("void k(uint8_t a, int* o) { *o = a << 3; }"), (11, false));
        assert_eq!(out_width("void k(int8_t a, int* o) { *o = a >> 3; }"), (5, true));
        assert_eq!(out_width("void k(int a, int b, int* o) { *o = a < b; }"), (1, false));
    }

    #[test]
    fn wrap_kept_when_needed() {
        let g = graph_of("void k(int a, int b, int8_t* o) { *o = a + b; }", false);
        let n = g.node(g.outputs[0].node);
        assert_eq!((n.op, n.width, n.signed), (Opcode::Copy, 8, true));
    }

    #[test]
    fn overflow_reported() {
        let src = "void k(int a, int b, int c, int* o) { *o = a * b * c; }";
        let sk = crate::test_util::scalarized(src);
        let g = predicate(lower(&sk, &[]).unwrap()).unwrap();
        assert!(matches!(infer_widths(g), Err(DataflowError::WidthOverflow { .. })));
    }
}
