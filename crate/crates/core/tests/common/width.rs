// SPDX-License-Identifier: Apache-2.0

//! Value ranges by interval propagation, independent of the compiler's
//! width inference.

use minihls::dataflow::{DataflowGraph, Opcode};

pub type Range = (i128, i128);

pub fn declared(width: u32, signed: bool) -> Range {
    if signed {
        (-(1i128 << (width - 1)), (1i128 << (width - 1)) - 1)
    } else {
        (0, (1i128 << width) - 1)
    }
}

/// Bits of a two's-complement vector holding every value of `r`.
pub fn signed_bits(r: Range) -> u32 {
    let m = (r.0.max(-r.0 - 1)).max(r.1.max(-r.1 - 1)) as u128;
    128 - m.leading_zeros() + 1
}

pub fn unsigned_bits(r: Range) -> u32 {
    128 - (r.1 as u128).leading_zeros()
}

pub fn span(xs: [i128; 4]) -> Range {
    (*xs.iter().min().unwrap(), *xs.iter().max().unwrap())
}

/// Exact value ranges by interval propagation over unbounded integers.
/// Bitwise operators fall back to the tightest power-of-two envelope.
pub fn ranges(g: &DataflowGraph) -> Vec<Range> {
    let mut r: Vec<Range> = vec![(0, 0); g.nodes.len()];
    for n in &g.nodes {
        let a = |k: usize| r[n.operands[k].0];
        let v = match n.op {
            Opcode::Input => {
                let p = g.inputs.iter().find(|p| p.node == n.id).unwrap();
                declared(p.ty.width as u32, p.ty.signed)
            }
            Opcode::Const => (n.value as i128, n.value as i128),
            Opcode::Add => (a(0).0 + a(1).0, a(0).1 + a(1).1),
            Opcode::Sub => (a(0).0 - a(1).1, a(0).1 - a(1).0),
            Opcode::Mul => {
                let (x, y) = (a(0), a(1));
                span([x.0 * y.0, x.0 * y.1, x.1 * y.0, x.1 * y.1])
            }
            Opcode::And | Opcode::Or | Opcode::Xor => {
                let (x, y) = (a(0), a(1));
                if x.0 >= 0 && y.0 >= 0 {
                    (0, (1i128 << unsigned_bits(x).max(unsigned_bits(y))) - 1)
                } else {
                    let b = signed_bits(x).max(signed_bits(y)) - 1;
                    (-(1i128 << b), (1i128 << b) - 1)
                }
            }
            Opcode::Not => (-a(0).1 - 1, -a(0).0 - 1),
            Opcode::Shl | Opcode::Shr => {
                let k = g.node(n.operands[1]);
                assert_eq!(k.op, Opcode::Const, "variable shift");
                let x = a(0);
                if n.op == Opcode::Shl {
                    (x.0 << k.value, x.1 << k.value)
                } else {
                    (x.0 >> k.value, x.1 >> k.value)
                }
            }
            op if op.is_comparison() => (0, 1),
            Opcode::Phi | Opcode::Select => {
                let (x, y) = (a(1), a(2));
                (x.0.min(y.0), x.1.max(y.1))
            }
            Opcode::Lpr => {
                let f = g.feedbacks.iter().find(|f| f.lpr == n.id).unwrap();
                declared(f.ty.width as u32, f.ty.signed)
            }
            Opcode::Lut => {
                let t = g.luts.iter().find(|l| Some(&l.name) == n.name.as_ref()).unwrap();
                let lo = *t.contents.iter().min().unwrap() as i128;
                let hi = *t.contents.iter().max().unwrap() as i128;
                (lo, hi)
            }
            _ => a(0),
        };
        r[n.id.0] = match n.wrap {
            Some(t) => {
                let d = declared(t.width as u32, t.signed);
                if v.0 >= d.0 && v.1 <= d.1 {
                    v
                } else {
                    d
                }
            }
            None => v,
        };
    }
    r
}
