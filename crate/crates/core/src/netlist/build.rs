// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::*;

/// Bits needed to hold `0..=max` unsigned; at least one.
pub fn bits_for(max: u64) -> u32 {
    (64 - max.leading_zeros()).max(1)
}

/// A typed reference to a signal by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sig {
    pub name: String,
    pub width: u32,
    pub signed: bool,
}

impl Sig {
    pub fn new(name: impl Into<String>, width: u32, signed: bool) -> Self {
        Sig {
            name: name.into(),
            width,
            signed,
        }
    }

    pub fn bit(name: impl Into<String>) -> Self {
        Sig::new(name, 1, false)
    }
}

/// Builds one netlist fragment whose internal signals share a prefix.
pub struct FragmentBuilder {
    pub nl: Netlist,
    prefix: String,
    consts: HashMap<(i64, u32, bool), Sig>,
    temps: usize,
}

impl FragmentBuilder {
    pub fn new(netlist: &str, prefix: &str) -> Self {
        FragmentBuilder {
            nl: Netlist::new(netlist),
            prefix: prefix.to_string(),
            consts: HashMap::new(),
            temps: 0,
        }
    }

    pub fn finish(self) -> Netlist {
        self.nl
    }

    pub fn local(&self, name: &str) -> String {
        format!("{}.{}", self.prefix, name)
    }

    fn temp(&mut self) -> String {
        self.temps += 1;
        format!("{}.t{}", self.prefix, self.temps)
    }

    pub fn input(&mut self, name: &str, width: u32, signed: bool) -> Sig {
        self.nl.ports.push(PortDecl {
            name: name.to_string(),
            dir: Direction::In,
            width,
            signed,
        });
        Sig::new(name, width, signed)
    }

    /// Declare an output port driven by `s`, copying when the name differs.
    pub fn output(&mut self, name: &str, s: &Sig) {
        if s.name != name {
            self.nl.nodes.push(CombNode {
                name: name.to_string(),
                op: NetOp::Copy,
                operands: vec![s.name.clone()],
                width: s.width,
                signed: s.signed,
            });
        }
        self.nl.ports.push(PortDecl {
            name: name.to_string(),
            dir: Direction::Out,
            width: s.width,
            signed: s.signed,
        });
    }

    pub fn konst(&mut self, v: i64, width: u32, signed: bool) -> Sig {
        if let Some(s) = self.consts.get(&(v, width, signed)) {
            return s.clone();
        }
        let name = format!("{}.k{}{}_{}", self.prefix, if signed { "s" } else { "u" }, width, v.unsigned_abs());
        let name = if v < 0 { format!("{name}n") } else { name };
        self.nl.nodes.push(CombNode {
            name: name.clone(),
            op: NetOp::Const(v),
            operands: vec![],
            width,
            signed,
        });
        let s = Sig::new(name, width, signed);
        self.consts.insert((v, width, signed), s.clone());
        s
    }

    /// Unsigned constant in its narrowest width.
    pub fn uconst(&mut self, v: u64) -> Sig {
        self.konst(v as i64, bits_for(v), false)
    }

    pub fn node_named(&mut self, name: String, op: NetOp, ops: &[&Sig], width: u32, signed: bool) -> Sig {
        self.nl.nodes.push(CombNode {
            name: name.clone(),
            op,
            operands: ops.iter().map(|s| s.name.clone()).collect(),
            width,
            signed,
        });
        Sig::new(name, width, signed)
    }

    pub fn node(&mut self, op: NetOp, ops: &[&Sig], width: u32, signed: bool) -> Sig {
        let name = self.temp();
        self.node_named(name, op, ops, width, signed)
    }

    pub fn named(&mut self, local: &str, op: NetOp, ops: &[&Sig], width: u32, signed: bool) -> Sig {
        let name = self.local(local);
        self.node_named(name, op, ops, width, signed)
    }

    /// Declare a register; its input is attached later with [`Self::drive`].
    pub fn reg(&mut self, local: &str, width: u32, signed: bool, reset: i64, kind: RegKind) -> Sig {
        let name = self.local(local);
        self.reg_named(name, width, signed, reset, kind)
    }

    pub fn reg_named(&mut self, name: String, width: u32, signed: bool, reset: i64, kind: RegKind) -> Sig {
        self.nl.regs.push(Register {
            name: name.clone(),
            width,
            signed,
            reset,
            d: String::new(),
            en: None,
            kind,
        });
        Sig::new(name, width, signed)
    }

    pub fn drive(&mut self, reg: &Sig, d: &Sig, en: Option<&Sig>) {
        let d = self.fit(d, reg.width, reg.signed);
        let r = self
            .nl
            .regs
            .iter_mut()
            .find(|r| r.name == reg.name)
            .expect("register declared in this fragment");
        r.d = d.name;
        r.en = en.map(|e| e.name.clone());
    }

    /// `s` at exactly the given type, copying when it differs.
    pub fn fit(&mut self, s: &Sig, width: u32, signed: bool) -> Sig {
        if s.width == width && s.signed == signed {
            s.clone()
        } else {
            self.node(NetOp::Copy, &[s], width, signed)
        }
    }

    pub fn and(&mut self, a: &Sig, b: &Sig) -> Sig {
        self.node(NetOp::And, &[a, b], 1, false)
    }

    pub fn or(&mut self, a: &Sig, b: &Sig) -> Sig {
        self.node(NetOp::Or, &[a, b], 1, false)
    }

    pub fn not(&mut self, a: &Sig) -> Sig {
        self.node(NetOp::Not, &[a], 1, false)
    }

    pub fn all(&mut self, xs: &[Sig]) -> Sig {
        match xs {
            [] => self.konst(1, 1, false),
            [x] => x.clone(),
            [x, rest @ ..] => {
                let r = self.all(rest);
                self.and(x, &r)
            }
        }
    }

    pub fn any(&mut self, xs: &[Sig]) -> Sig {
        match xs {
            [] => self.konst(0, 1, false),
            [x] => x.clone(),
            [x, rest @ ..] => {
                let r = self.any(rest);
                self.or(x, &r)
            }
        }
    }

    pub fn cmp(&mut self, op: NetOp, a: &Sig, b: &Sig) -> Sig {
        debug_assert!(op.is_comparison());
        self.node(op, &[a, b], 1, false)
    }

    pub fn eq_const(&mut self, a: &Sig, v: i64) -> Sig {
        let k = self.konst(v, a.width, a.signed);
        self.cmp(NetOp::Eq, a, &k)
    }

    pub fn select(&mut self, c: &Sig, t: &Sig, e: &Sig) -> Sig {
        let (w, s) = if t.width == e.width && t.signed == e.signed {
            (t.width, t.signed)
        } else {
            let s = t.signed || e.signed;
            let w = |x: &Sig| x.width + (s && !x.signed) as u32;
            (w(t).max(w(e)), s)
        };
        self.node(NetOp::Select, &[c, t, e], w, s)
    }

    /// `a + v` computed at the given width.
    pub fn add_const(&mut self, a: &Sig, v: i64, width: u32) -> Sig {
        if v == 0 {
            return self.fit(a, width, a.signed);
        }
        let k = self.konst(v.abs(), bits_for(v.unsigned_abs()), false);
        let op = if v > 0 { NetOp::Add } else { NetOp::Sub };
        self.node(op, &[a, &k], width, a.signed)
    }
}
