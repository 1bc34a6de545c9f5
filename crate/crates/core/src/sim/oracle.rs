// SPDX-License-Identifier: Apache-2.0

//! Reference interpreter: runs a kernel statement by statement with exact
//! integer arithmetic, wrapping to the declared type on every assignment,
//! cast, parameter pass and store.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::dataflow::{builtin_cos, LutBinding, LutSource};
use crate::frontend::{walk_stmts, BoundOp, Direction, Expr, KernelAst, LValue, ScalarType, Stmt};

use super::TestVectors;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("subscript out of bounds: {array}{indices:?}")]
    OutOfBounds { array: String, indices: Vec<i128> },
    #[error("read of unwritten element {array}[{index}]")]
    Unwritten { array: String, index: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("shift amount {0} out of range")]
    Shift(i128),
    #[error("address {address} out of range for table '{table}'")]
    TableAddress { table: String, address: i128 },
    #[error("unknown name '{0}'")]
    Unknown(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("loop did not terminate within {0} iterations")]
    Runaway(u64),
}

/// Final contents of every output array and pointer parameter.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleOutputs {
    pub arrays: BTreeMap<String, Vec<Option<i64>>>,
    pub scalars: BTreeMap<String, i64>,
}

const MAX_ITERATIONS: u64 = 1 << 24;

/// Load the contents of every table the kernel looks up. Tables without a
/// binding must be builtins.
pub fn oracle_tables(ast: &KernelAst, bindings: &[LutBinding]) -> Result<BTreeMap<String, Vec<i64>>, OracleError> {
    let mut names = Vec::new();
    let mut visit = |body: &[Stmt]| {
        walk_stmts(body, &mut |s| {
            s.walk_exprs(&mut |e| {
                if let Expr::Lut { table, .. } = e {
                    names.push(table.clone());
                }
            })
        })
    };
    visit(&ast.body);
    for h in &ast.helpers {
        visit(&h.body);
    }
    let mut out = BTreeMap::new();
    for name in names {
        if out.contains_key(&name) {
            continue;
        }
        let binding = bindings.iter().find(|b| b.name == name);
        let contents = match binding.map(|b| (&b.source, b.data)) {
            None if name == "cos" => builtin_cos(),
            Some((LutSource::Builtin(n), _)) if n == "cos" => builtin_cos(),
            Some((LutSource::InitFile(path), data)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| OracleError::Input(format!("cannot read {}: {e}", path.display())))?;
                read_table(&text, data)?
            }
            _ => return Err(OracleError::Input(format!("unbound lookup table '{name}'"))),
        };
        out.insert(name, contents);
    }
    Ok(out)
}

fn read_table(text: &str, data: ScalarType) -> Result<Vec<i64>, OracleError> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let v = match l.strip_prefix("0x").or_else(|| l.strip_prefix("0X")) {
                Some(h) => i128::from_str_radix(h, 16).map(|v| data.wrap(v)),
                None => l.parse::<i128>(),
            };
            v.map(|v| v as i64)
                .map_err(|_| OracleError::Input(format!("bad table entry '{l}'")))
        })
        .collect()
}

struct Array {
    ty: ScalarType,
    extents: Vec<usize>,
    cells: Vec<Option<i128>>,
}

enum Flow {
    Next,
    Return(Option<i128>),
}

struct Interp<'a> {
    ast: &'a KernelAst,
    tables: &'a BTreeMap<String, Vec<i64>>,
    arrays: HashMap<String, Array>,
    pointers: BTreeMap<String, (ScalarType, i128)>,
    scopes: Vec<HashMap<String, (ScalarType, i128)>>,
    /// Values handed to the next iteration, per enclosing loop.
    pending: Vec<Vec<(String, i128)>>,
    steps: u64,
}

impl Interp<'_> {
    fn lookup(&mut self, name: &str) -> Result<&mut (ScalarType, i128), OracleError> {
        self.scopes
            .iter_mut()
            .rev()
            .find_map(|s| s.get_mut(name))
            .ok_or_else(|| OracleError::Unknown(name.to_string()))
    }

    fn declare(&mut self, name: &str, ty: ScalarType, v: i128) {
        self.scopes.last_mut().unwrap().insert(name.to_string(), (ty, ty.wrap(v)));
    }

    fn set(&mut self, name: &str, v: i128) -> Result<(), OracleError> {
        let slot = self.lookup(name)?;
        slot.1 = slot.0.wrap(v);
        Ok(())
    }

    fn cell(&mut self, array: &str, indices: &[Expr]) -> Result<usize, OracleError> {
        let idx = indices.iter().map(|e| self.eval(e)).collect::<Result<Vec<_>, _>>()?;
        let extents = match self.arrays.get(array) {
            Some(a) => a.extents.clone(),
            None => return Err(OracleError::Unknown(array.to_string())),
        };
        flat_index(&extents, &idx).ok_or(OracleError::OutOfBounds {
            array: array.to_string(),
            indices: idx,
        })
    }

    fn eval(&mut self, e: &Expr) -> Result<i128, OracleError> {
        Ok(match e {
            Expr::Int(v) => *v as i128,
            Expr::Var(n) | Expr::LoadPrev(n) => self.lookup(n)?.1,
            Expr::Deref(p) => {
                self.pointers
                    .get(p)
                    .ok_or_else(|| OracleError::Unknown(p.clone()))?
                    .1
            }
            Expr::Index { array, indices } => {
                if let Some(c) = self.ast.const_array(array) {
                    let idx = indices.iter().map(|e| self.eval(e)).collect::<Result<Vec<_>, _>>()?;
                    let k = flat_index(&c.extents, &idx).ok_or(OracleError::OutOfBounds {
                        array: array.clone(),
                        indices: idx,
                    })?;
                    return Ok(c.values[k] as i128);
                }
                let k = self.cell(array, indices)?;
                self.arrays[array].cells[k].ok_or(OracleError::Unwritten {
                    array: array.clone(),
                    index: k,
                })?
            }
            Expr::Unary(op, a) => op.eval(self.eval(a)?),
            Expr::Binary(op, a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                match op {
                    crate::frontend::BinOp::Div | crate::frontend::BinOp::Rem if b == 0 => {
                        return Err(OracleError::DivisionByZero)
                    }
                    crate::frontend::BinOp::Shl | crate::frontend::BinOp::Shr if !(0..=64).contains(&b) => {
                        return Err(OracleError::Shift(b))
                    }
                    _ => {}
                }
                op.eval(a, b).ok_or(OracleError::DivisionByZero)?
            }
            Expr::Cast(t, a) => t.wrap(self.eval(a)?),
            Expr::Call { name, args } => {
                let h = self.ast.helper(name).ok_or_else(|| OracleError::Unknown(name.clone()))?;
                let vals = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                self.scopes.push(HashMap::new());
                for ((p, t), v) in h.params.iter().zip(vals) {
                    self.declare(p, *t, v);
                }
                let flow = self.block(&h.body);
                self.scopes.pop();
                match flow? {
                    Flow::Return(Some(v)) => h.ret.wrap(v),
                    _ => 0,
                }
            }
            Expr::Lut { table, index } => {
                let a = self.eval(index)?;
                let t = self.tables.get(table).ok_or_else(|| OracleError::Unknown(table.clone()))?;
                if a < 0 || a as usize >= t.len() {
                    return Err(OracleError::TableAddress {
                        table: table.clone(),
                        address: a,
                    });
                }
                t[a as usize] as i128
            }
        })
    }

    fn block(&mut self, body: &[Stmt]) -> Result<Flow, OracleError> {
        for s in body {
            if let Flow::Return(v) = self.stmt(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn scoped(&mut self, body: &[Stmt]) -> Result<Flow, OracleError> {
        self.scopes.push(HashMap::new());
        let r = self.block(body);
        self.scopes.pop();
        r
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Flow, OracleError> {
        match s {
            Stmt::Decl { name, ty, init, .. } => {
                let v = match init {
                    Some(e) => self.eval(e)?,
                    None => 0,
                };
                self.declare(name, *ty, v);
            }
            Stmt::Assign { target, op, value, .. } => {
                let rhs = self.eval(value)?;
                let rhs = match op {
                    Some(op) => {
                        let cur = match target {
                            LValue::Var(n) => Expr::Var(n.clone()),
                            LValue::Deref(p) => Expr::Deref(p.clone()),
                            LValue::Index { array, indices } => Expr::Index {
                                array: array.clone(),
                                indices: indices.clone(),
                            },
                        };
                        let cur = self.eval(&cur)?;
                        op.eval(cur, rhs).ok_or(OracleError::DivisionByZero)?
                    }
                    None => rhs,
                };
                match target {
                    LValue::Var(n) => self.set(n, rhs)?,
                    LValue::Deref(p) => {
                        let slot = self.pointers.get_mut(p).ok_or_else(|| OracleError::Unknown(p.clone()))?;
                        slot.1 = slot.0.wrap(rhs);
                    }
                    LValue::Index { array, indices } => {
                        let k = self.cell(array, indices)?;
                        let a = self.arrays.get_mut(array).unwrap();
                        a.cells[k] = Some(a.ty.wrap(rhs));
                    }
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                ..
            } => {
                let body = if self.eval(cond)? != 0 { then_body } else { else_body };
                return self.scoped(body);
            }
            Stmt::For(l, _) => {
                self.scopes.push(HashMap::new());
                let start = self.eval(&l.init)?;
                if l.declares {
                    self.declare(&l.var, ScalarType::int(), start);
                } else {
                    self.set(&l.var, start)?;
                }
                let flow = loop {
                    let i = self.lookup(&l.var)?.1;
                    let bound = self.eval(&l.bound)?;
                    let go = match l.bound_op {
                        BoundOp::Lt => i < bound,
                        BoundOp::Le => i <= bound,
                    };
                    if !go {
                        break Flow::Next;
                    }
                    self.steps += 1;
                    if self.steps > MAX_ITERATIONS {
                        return Err(OracleError::Runaway(MAX_ITERATIONS));
                    }
                    self.pending.push(Vec::new());
                    let flow = self.scoped(&l.body)?;
                    for (v, x) in self.pending.pop().unwrap() {
                        self.set(&v, x)?;
                    }
                    if let Flow::Return(v) = flow {
                        break Flow::Return(v);
                    }
                    let i = self.lookup(&l.var)?.1;
                    self.set(&l.var, i + l.step as i128)?;
                };
                self.scopes.pop();
                return Ok(flow);
            }
            Stmt::StoreNext { var, value, .. } => {
                let v = self.eval(value)?;
                let ty = self.lookup(var)?.0;
                match self.pending.last_mut() {
                    Some(p) => p.push((var.clone(), ty.wrap(v))),
                    None => self.set(var, v)?,
                }
            }
            Stmt::Return(e, _) => {
                let v = match e {
                    Some(e) => Some(self.eval(e)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }
}

fn flat_index(extents: &[usize], idx: &[i128]) -> Option<usize> {
    if idx.len() != extents.len() {
        return None;
    }
    let mut flat = 0usize;
    for (&v, &e) in idx.iter().zip(extents) {
        if v < 0 || v >= e as i128 {
            return None;
        }
        flat = flat * e + v as usize;
    }
    Some(flat)
}

/// Interpret `ast` on the given inputs. Every input array and scalar
/// parameter must be supplied; output arrays start unwritten and pointer
/// outputs start at zero.
pub fn interpret_oracle(
    ast: &KernelAst,
    inputs: &TestVectors,
    tables: &BTreeMap<String, Vec<i64>>,
) -> Result<OracleOutputs, OracleError> {
    let mut arrays = HashMap::new();
    for a in &ast.arrays {
        let cells = match a.direction {
            Direction::In => {
                let v = inputs
                    .memories
                    .get(&a.name)
                    .ok_or_else(|| OracleError::Input(format!("no contents for input array '{}'", a.name)))?;
                if v.len() != a.len() {
                    return Err(OracleError::Input(format!(
                        "array '{}' holds {} elements, {} given",
                        a.name,
                        a.len(),
                        v.len()
                    )));
                }
                if let Some(bad) = v.iter().find(|&&x| !a.element.contains(x as i128)) {
                    return Err(OracleError::Input(format!("value {bad} does not fit '{}'", a.name)));
                }
                v.iter().map(|&x| Some(x as i128)).collect()
            }
            Direction::Out => vec![None; a.len()],
        };
        arrays.insert(
            a.name.clone(),
            Array {
                ty: a.element,
                extents: a.extents.clone(),
                cells,
            },
        );
    }
    let mut globals = HashMap::new();
    let mut pointers = BTreeMap::new();
    for p in &ast.params {
        if p.pointer {
            pointers.insert(p.name.clone(), (p.ty, 0));
            continue;
        }
        let v = *inputs
            .scalars
            .get(&p.name)
            .ok_or_else(|| OracleError::Input(format!("no value for scalar input '{}'", p.name)))?;
        if !p.ty.contains(v as i128) {
            return Err(OracleError::Input(format!("scalar '{}' = {v} does not fit {}", p.name, p.ty)));
        }
        globals.insert(p.name.clone(), (p.ty, v as i128));
    }
    let mut it = Interp {
        ast,
        tables,
        arrays,
        pointers,
        scopes: vec![globals, HashMap::new()],
        pending: Vec::new(),
        steps: 0,
    };
    it.block(&ast.body)?;
    let mut out = OracleOutputs::default();
    for a in ast.arrays.iter().filter(|a| a.direction == Direction::Out) {
        let cells = it.arrays[&a.name].cells.iter().map(|c| c.map(|v| v as i64)).collect();
        out.arrays.insert(a.name.clone(), cells);
    }
    for (n, (_, v)) in it.pointers {
        out.scalars.insert(n, v as i64);
    }
    Ok(out)
}
