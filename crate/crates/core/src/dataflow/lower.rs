// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};

use crate::frontend::{BinOp, Expr, LValue, ScalarType, Stmt, UnOp};
use crate::transforms::ScalarizedKernel;

use super::*;

struct Builder<'a> {
    sk: &'a ScalarizedKernel,
    g: DataflowGraph,
    consts: HashMap<i64, NodeId>,
    lprs: BTreeMap<String, NodeId>,
}

impl Builder<'_> {
    fn constant(&mut self, v: i64) -> NodeId {
        if let Some(&id) = self.consts.get(&v) {
            return id;
        }
        let id = self.g.add(Opcode::Const, vec![]);
        self.g.node_mut(id).value = v;
        self.consts.insert(v, id);
        id
    }

    fn op(&mut self, op: Opcode, operands: Vec<NodeId>) -> NodeId {
        self.g.add(op, operands)
    }

    fn wrap(&mut self, x: NodeId, ty: ScalarType, name: Option<&str>) -> NodeId {
        let n = self.g.node(x);
        let typed = matches!(n.op, Opcode::Input | Opcode::Lpr | Opcode::Snx | Opcode::Copy);
        if typed && n.wrap == Some(ty) {
            return x;
        }
        let id = self.g.add(Opcode::Copy, vec![x]);
        let n = self.g.node_mut(id);
        n.wrap = Some(ty);
        n.name = name.map(str::to_string);
        id
    }

    fn input(&mut self, name: &str, ty: ScalarType, role: PortRole) -> NodeId {
        if let Some(p) = self.g.input(name) {
            return p.node;
        }
        let id = self.g.add(Opcode::Input, vec![]);
        let n = self.g.node_mut(id);
        n.name = Some(name.to_string());
        n.wrap = Some(ty);
        self.g.inputs.push(Port {
            name: name.to_string(),
            ty,
            node: id,
            role,
        });
        id
    }

    fn read(&mut self, env: &HashMap<String, NodeId>, v: &str) -> Result<NodeId, DataflowError> {
        if let Some(&id) = env.get(v) {
            return Ok(id);
        }
        if let Some(p) = self.sk.scalar_inputs().find(|p| p.name == v) {
            return Ok(self.input(v, p.ty, PortRole::Param));
        }
        if let Some(idx) = self.sk.loop_spec.index(v) {
            return Ok(self.input(v, idx.ty(), PortRole::LoopIndex));
        }
        // A variable read before any assignment in its iteration holds zero.
        if self.sk.type_of(v).is_some() {
            return Ok(self.constant(0));
        }
        Err(DataflowError::Lowering(format!("unknown scalar '{v}'")))
    }

    fn lpr(&mut self, var: &str) -> Result<NodeId, DataflowError> {
        if let Some(&id) = self.lprs.get(var) {
            return Ok(id);
        }
        let f = self
            .sk
            .feedbacks
            .iter()
            .find(|f| f.var == var)
            .ok_or_else(|| DataflowError::Lowering(format!("ROCCC_load_prev({var}) without a feedback variable")))?;
        let id = self.g.add(Opcode::Lpr, vec![]);
        let n = self.g.node_mut(id);
        n.name = Some(var.to_string());
        n.wrap = Some(f.ty);
        self.lprs.insert(var.to_string(), id);
        Ok(id)
    }

    /// Force a truth value to one bit.
    fn boolean(&mut self, c: NodeId) -> NodeId {
        let n = self.g.node(c);
        if n.op.is_comparison() {
            return c;
        }
        if n.op == Opcode::Const {
            let v = (n.value != 0) as i64;
            return self.constant(v);
        }
        let zero = self.constant(0);
        self.op(Opcode::Ne, vec![c, zero])
    }

    fn expr(&mut self, env: &HashMap<String, NodeId>, e: &Expr) -> Result<NodeId, DataflowError> {
        Ok(match e {
            Expr::Int(v) => self.constant(*v),
            Expr::Var(v) => self.read(env, v)?,
            Expr::LoadPrev(v) => self.lpr(v)?,
            Expr::Unary(op, a) => {
                let a = self.expr(env, a)?;
                match op {
                    UnOp::Neg => {
                        let zero = self.constant(0);
                        self.op(Opcode::Sub, vec![zero, a])
                    }
                    UnOp::Not => {
                        let zero = self.constant(0);
                        self.op(Opcode::Eq, vec![a, zero])
                    }
                    UnOp::BitNot => self.op(Opcode::Not, vec![a]),
                }
            }
            Expr::Binary(op, a, b) => {
                let x = self.expr(env, a)?;
                match op {
                    BinOp::Div | BinOp::Rem => return self.divide(*op, x, b),
                    _ => {}
                }
                let y = self.expr(env, b)?;
                let code = match op {
                    BinOp::Add => Opcode::Add,
                    BinOp::Sub => Opcode::Sub,
                    BinOp::Mul => Opcode::Mul,
                    BinOp::And => Opcode::And,
                    BinOp::Or => Opcode::Or,
                    BinOp::Xor => Opcode::Xor,
                    BinOp::Shl => Opcode::Shl,
                    BinOp::Shr => Opcode::Shr,
                    BinOp::Eq => Opcode::Eq,
                    BinOp::Ne => Opcode::Ne,
                    BinOp::Lt => Opcode::Lt,
                    BinOp::Le => Opcode::Le,
                    BinOp::Gt => Opcode::Gt,
                    BinOp::Ge => Opcode::Ge,
                    BinOp::Div | BinOp::Rem => unreachable!(),
                };
                if matches!(code, Opcode::Shl | Opcode::Shr) {
                    let amount = self.g.node(y);
                    if amount.op == Opcode::Const && amount.value < 0 {
                        return Err(DataflowError::Lowering(format!("negative shift amount {}", amount.value)));
                    }
                }
                self.op(code, vec![x, y])
            }
            Expr::Cast(t, a) => {
                let a = self.expr(env, a)?;
                self.wrap(a, *t, None)
            }
            Expr::Lut { table, index } => {
                if self.g.lut(table).is_none() {
                    return Err(DataflowError::UnboundLut(table.clone()));
                }
                let a = self.expr(env, index)?;
                let id = self.op(Opcode::Lut, vec![a]);
                self.g.node_mut(id).name = Some(table.clone());
                id
            }
            Expr::Index { array, .. } => {
                return Err(DataflowError::Lowering(format!("array '{array}' in the compute fragment")))
            }
            Expr::Deref(o) => return Err(DataflowError::Lowering(format!("'*{o}' in the compute fragment"))),
            Expr::Call { name, .. } => return Err(DataflowError::Lowering(format!("call to '{name}'"))),
        })
    }

    /// Division and remainder by a constant power of two. Signed dividends
    /// are biased by `2^k - 1` when negative so the shift truncates toward
    /// zero like C division.
    fn divide(&mut self, op: BinOp, x: NodeId, divisor: &Expr) -> Result<NodeId, DataflowError> {
        let d = divisor.as_int().ok_or_else(|| {
            DataflowError::Lowering(format!("'{}' by a non-constant divisor", op.symbol()))
        })?;
        if d == 0 {
            return Err(DataflowError::Lowering("division by zero".into()));
        }
        let m = d.unsigned_abs();
        if !m.is_power_of_two() {
            return Err(DataflowError::Lowering(format!(
                "'{}' by {d}: only powers of two are supported",
                op.symbol()
            )));
        }
        let k = m.trailing_zeros() as i64;
        let kc = self.constant(k);
        let zero = self.constant(0);
        let neg = self.op(Opcode::Lt, vec![x, zero]);
        let bias = self.constant((1i64 << k) - 1);
        let adj = self.op(Opcode::Select, vec![neg, bias, zero]);
        let biased = self.op(Opcode::Add, vec![x, adj]);
        let q = self.op(Opcode::Shr, vec![biased, kc]);
        match op {
            BinOp::Div if d < 0 => Ok(self.op(Opcode::Sub, vec![zero, q])),
            BinOp::Div => Ok(q),
            _ => {
                // x % d == x % |d| in C.
                let back = self.op(Opcode::Shl, vec![q, kc]);
                Ok(self.op(Opcode::Sub, vec![x, back]))
            }
        }
    }

    fn body(&mut self, env: &mut HashMap<String, NodeId>, body: &[Stmt]) -> Result<(), DataflowError> {
        for s in body {
            match s {
                Stmt::Assign {
                    target: LValue::Var(v),
                    op,
                    value,
                    ..
                } => {
                    let value = match op {
                        Some(op) => Expr::bin(*op, Expr::var(v), value.clone()),
                        None => value.clone(),
                    };
                    let x = self.expr(env, &value)?;
                    let ty = self
                        .sk
                        .type_of(v)
                        .ok_or_else(|| DataflowError::Lowering(format!("'{v}' has no declared type")))?;
                    let id = self.wrap(x, ty, Some(v));
                    env.insert(v.clone(), id);
                }
                Stmt::Assign { target, .. } => {
                    return Err(DataflowError::Lowering(format!("memory write {target:?} in the compute fragment")))
                }
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                    ..
                } => {
                    let c = self.expr(env, cond)?;
                    let c = self.boolean(c);
                    let mut a = env.clone();
                    self.body(&mut a, then_body)?;
                    let mut b = env.clone();
                    self.body(&mut b, else_body)?;
                    let mut vars: Vec<&String> = a.keys().chain(b.keys()).collect();
                    vars.sort();
                    vars.dedup();
                    let mut merged = env.clone();
                    for v in vars {
                        let (x, y) = (a.get(v).copied(), b.get(v).copied());
                        if x == y {
                            if let Some(x) = x {
                                merged.insert(v.clone(), x);
                            }
                            continue;
                        }
                        let zero = self.constant(0);
                        let phi = self.op(Opcode::Phi, vec![c, x.unwrap_or(zero), y.unwrap_or(zero)]);
                        self.g.node_mut(phi).name = Some(v.clone());
                        merged.insert(v.clone(), phi);
                    }
                    *env = merged;
                }
                Stmt::StoreNext { var, value, .. } => {
                    let f = self
                        .sk
                        .feedbacks
                        .iter()
                        .find(|f| f.var == *var)
                        .cloned()
                        .ok_or_else(|| DataflowError::Lowering(format!("ROCCC_store2next({var}, ..) without a feedback variable")))?;
                    if self.g.feedbacks.iter().any(|p| p.var == *var) {
                        return Err(DataflowError::Lowering(format!("second ROCCC_store2next({var}, ..)")));
                    }
                    let x = self.expr(env, value)?;
                    let lpr = self.lpr(var)?;
                    let snx = self.op(Opcode::Snx, vec![x]);
                    let n = self.g.node_mut(snx);
                    n.name = Some(var.clone());
                    n.wrap = Some(f.ty);
                    self.g.feedbacks.push(FeedbackPair {
                        var: var.clone(),
                        lpr,
                        snx,
                        ty: f.ty,
                        init: f.init,
                    });
                }
                Stmt::Return(..) => {
                    return Err(DataflowError::UnstructuredControlFlow("return inside the loop body".into()))
                }
                Stmt::For(..) => return Err(DataflowError::Lowering("loop inside the compute fragment".into())),
                Stmt::Decl { name, .. } => {
                    return Err(DataflowError::Lowering(format!("declaration of '{name}' in the compute fragment")))
                }
            }
        }
        Ok(())
    }
}

/// Build the SSA graph of the compute fragment. Branches become PHI nodes
/// gated by their condition; `predicate` turns them into selects.
pub fn lower(sk: &ScalarizedKernel, luts: &[LutBinding]) -> Result<DataflowGraph, DataflowError> {
    let mut b = Builder {
        sk,
        g: DataflowGraph {
            name: sk.name.clone(),
            nodes: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            feedbacks: Vec::new(),
            luts: Vec::new(),
            depth: 0,
        },
        consts: HashMap::new(),
        lprs: BTreeMap::new(),
    };
    let mut used = std::collections::BTreeSet::new();
    crate::frontend::walk_stmts(&sk.compute, &mut |s| {
        s.walk_exprs(&mut |e| {
            if let Expr::Lut { table, .. } = e {
                used.insert(table.clone());
            }
        })
    });
    for t in used {
        let spec = match luts.iter().find(|l| l.name == t) {
            Some(l) => LutSpec::unresolved(l),
            None if t == "cos" => LutSpec::unresolved(&LutBinding::builtin("cos")),
            None => return Err(DataflowError::UnboundLut(t)),
        };
        b.g.luts.push(spec);
    }

    let mut env = HashMap::new();
    for (k, l) in sk.loads.iter().enumerate() {
        let ty = sk.type_of(&l.scalar).expect("load scalar has a type");
        let id = b.input(&l.scalar, ty, PortRole::Load(k));
        env.insert(l.scalar.clone(), id);
    }
    b.body(&mut env, &sk.compute)?;
    for f in &sk.feedbacks {
        if !b.g.feedbacks.iter().any(|p| p.var == f.var) {
            return Err(DataflowError::Lowering(format!("feedback '{}' has no ROCCC_store2next", f.var)));
        }
    }

    let snx_of: HashMap<NodeId, NodeId> = b
        .g
        .feedbacks
        .iter()
        .map(|f| (b.g.node(f.snx).operands[0], f.snx))
        .collect();
    let mut outputs = Vec::new();
    for (k, st) in sk.stores.iter().enumerate() {
        let x = b.read(&env, &st.scalar)?;
        let elem = sk
            .arrays
            .iter()
            .find(|a| a.name == st.array)
            .map(|a| a.element)
            .ok_or_else(|| DataflowError::Lowering(format!("store to unknown array '{}'", st.array)))?;
        outputs.push((st.scalar.clone(), elem, x, PortRole::Store(k)));
    }
    for o in &sk.outputs {
        let x = b.read(&env, &o.source)?;
        outputs.push((o.name.clone(), o.ty, x, PortRole::Scalar));
    }
    for (mut name, ty, x, role) in outputs {
        if b.g.output(&name).is_some() {
            name = format!("{name}_{}", b.g.outputs.len());
        }
        let x = snx_of.get(&x).copied().unwrap_or(x);
        let node = b.wrap(x, ty, None);
        b.g.outputs.push(Port { name, ty, node, role });
    }
    b.g.feedbacks.sort_by(|a, c| a.var.cmp(&c.var));
    Ok(compact(b.g))
}
