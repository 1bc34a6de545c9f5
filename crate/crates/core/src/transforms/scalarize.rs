// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::frontend::*;

use super::fold::fold_node;
use super::unroll::trip_count;
use super::TransformError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopIndex {
    pub name: String,
    pub lower: i64,
    pub count: i64,
    pub step: i64,
}

impl LoopIndex {
    pub fn upper(&self) -> i64 {
        self.lower + self.step * (self.count - 1)
    }

    /// Narrowest type holding every value the index takes.
    pub fn ty(&self) -> ScalarType {
        let (lo, hi) = (self.lower.min(self.upper()), self.lower.max(self.upper()));
        let signed = lo < 0;
        (1..=32u8)
            .map(|w| ScalarType::new(signed, w))
            .find(|t| t.contains(lo as i128) && t.contains(hi as i128))
            .unwrap_or_else(ScalarType::int)
    }
}

/// The rolled loop nest, outermost first. Empty for loop-free kernels,
/// which execute their body exactly once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoopSpec {
    pub indices: Vec<LoopIndex>,
}

impl LoopSpec {
    pub fn trip(&self) -> i64 {
        self.indices.iter().map(|i| i.count).product()
    }

    pub fn is_rolled(&self) -> bool {
        !self.indices.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<&LoopIndex> {
        self.indices.iter().find(|i| i.name == name)
    }

    pub fn innermost(&self) -> Option<&LoopIndex> {
        self.indices.last()
    }

    /// Index values of every iteration, in execution order.
    pub fn iterations(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for idx in &self.indices {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..idx.count).map(move |t| {
                        let mut v = prefix.clone();
                        v.push(idx.lower + t * idx.step);
                        v
                    })
                })
                .collect();
        }
        out
    }

    /// Evaluate an affine subscript at one iteration.
    pub fn eval(&self, a: &Affine, iteration: &[i64]) -> i64 {
        a.eval(&|n| {
            self.indices
                .iter()
                .position(|i| i.name == n)
                .map(|p| iteration[p])
                .unwrap_or(0)
        })
    }

    /// Smallest and largest value of `a` over the iteration space.
    pub fn range(&self, a: &Affine) -> (i64, i64) {
        let (mut lo, mut hi) = (a.constant, a.constant);
        for (n, &c) in &a.coeffs {
            if let Some(idx) = self.index(n) {
                let (x, y) = (c * idx.lower, c * idx.upper());
                lo += x.min(y);
                hi += x.max(y);
            }
        }
        (lo, hi)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Load {
    pub scalar: String,
    pub array: String,
    pub offset: Vec<Affine>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Store {
    pub array: String,
    pub offset: Vec<Affine>,
    pub scalar: String,
}

/// A loop-carried variable: `prev` reads the value left by the previous
/// iteration (or `init`), `next` is the value handed to the next one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feedback {
    pub var: String,
    pub prev: String,
    pub next: String,
    pub ty: ScalarType,
    pub init: i64,
}

/// A pointer parameter and the compute scalar whose final value it receives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarOutput {
    pub name: String,
    pub ty: ScalarType,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarizedKernel {
    pub name: String,
    pub params: Vec<Param>,
    pub arrays: Vec<ArrayDecl>,
    pub loop_spec: LoopSpec,
    pub loads: Vec<Load>,
    pub compute: Vec<Stmt>,
    pub stores: Vec<Store>,
    pub feedbacks: Vec<Feedback>,
    pub outputs: Vec<ScalarOutput>,
    /// Every scalar assigned by the loads or the compute fragment, in order
    /// of first definition.
    pub locals: Vec<(String, ScalarType)>,
}

impl ScalarizedKernel {
    pub fn scalar_inputs(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| !p.pointer)
    }

    /// Type of any scalar the compute fragment may reference.
    pub fn type_of(&self, name: &str) -> Option<ScalarType> {
        if let Some((_, t)) = self.locals.iter().find(|(n, _)| n == name) {
            return Some(*t);
        }
        if let Some(p) = self.params.iter().find(|p| p.name == name && !p.pointer) {
            return Some(p.ty);
        }
        self.loop_spec.index(name).map(LoopIndex::ty)
    }

    pub fn loads_of<'a>(&'a self, array: &'a str) -> impl Iterator<Item = &'a Load> + 'a {
        self.loads.iter().filter(move |l| l.array == array)
    }

    pub fn input_arrays(&self) -> Vec<&ArrayDecl> {
        self.arrays
            .iter()
            .filter(|a| self.loads.iter().any(|l| l.array == a.name))
            .collect()
    }

    pub fn output_arrays(&self) -> Vec<&ArrayDecl> {
        self.arrays
            .iter()
            .filter(|a| self.stores.iter().any(|s| s.array == a.name))
            .collect()
    }

    /// Rebuild a kernel in explicit form: loads and stores as separate
    /// statements, feedback through the macros.
    pub fn to_ast(&self) -> KernelAst {
        let sp = Span::default();
        let mut body = Vec::new();
        for f in &self.feedbacks {
            body.push(Stmt::Decl {
                name: f.var.clone(),
                ty: f.ty,
                init: Some(Expr::Int(f.init)),
                span: sp,
            });
        }
        for (n, t) in &self.locals {
            body.push(Stmt::Decl {
                name: n.clone(),
                ty: *t,
                init: None,
                span: sp,
            });
        }
        let mut inner: Vec<Stmt> = self
            .loads
            .iter()
            .map(|l| {
                Stmt::assign(
                    LValue::Var(l.scalar.clone()),
                    Expr::Index {
                        array: l.array.clone(),
                        indices: l.offset.iter().map(Affine::to_expr).collect(),
                    },
                )
            })
            .collect();
        inner.extend(self.compute.iter().cloned());
        inner.extend(self.stores.iter().map(|s| {
            Stmt::assign(
                LValue::Index {
                    array: s.array.clone(),
                    indices: s.offset.iter().map(Affine::to_expr).collect(),
                },
                Expr::var(&s.scalar),
            )
        }));
        for idx in self.loop_spec.indices.iter().rev() {
            inner = vec![Stmt::For(
                ForLoop {
                    var: idx.name.clone(),
                    declares: true,
                    init: Expr::Int(idx.lower),
                    bound_op: BoundOp::Lt,
                    bound: Expr::Int(idx.lower + idx.count * idx.step),
                    step: idx.step,
                    body: inner,
                },
                sp,
            )];
        }
        body.extend(inner);
        for o in &self.outputs {
            body.push(Stmt::assign(LValue::Deref(o.name.clone()), Expr::var(&o.source)));
        }
        KernelAst {
            name: self.name.clone(),
            params: self.params.clone(),
            arrays: self.arrays.clone(),
            consts: Vec::new(),
            helpers: Vec::new(),
            body,
        }
    }
}

fn restriction(msg: impl Into<String>) -> TransformError {
    TransformError::Restriction(msg.into())
}

fn unsupported(msg: impl Into<String>) -> TransformError {
    TransformError::Unsupported(msg.into())
}

struct Names {
    used: BTreeSet<String>,
}

impl Names {
    fn new(ast: &KernelAst) -> Self {
        let mut used = BTreeSet::new();
        used.extend(ast.params.iter().map(|p| p.name.clone()));
        used.extend(ast.arrays.iter().map(|a| a.name.clone()));
        used.extend(ast.consts.iter().map(|c| c.name.clone()));
        walk_stmts(&ast.body, &mut |s| {
            match s {
                Stmt::Decl { name, .. } => {
                    used.insert(name.clone());
                }
                Stmt::For(l, _) => {
                    used.insert(l.var.clone());
                }
                _ => {}
            }
            s.walk_exprs(&mut |e| {
                if let Expr::Var(v) | Expr::LoadPrev(v) = e {
                    used.insert(v.clone());
                }
            });
        });
        Names { used }
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut k = 1;
        while self.used.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.used.insert(name.clone());
        name
    }
}

fn map_body(body: Vec<Stmt>, f: &mut dyn FnMut(Expr) -> Expr) -> Vec<Stmt> {
    body.into_iter().map(|s| s.map_exprs(f)).collect()
}

fn expr_reads(e: &Expr, var: &str) -> bool {
    let mut hit = false;
    e.walk(&mut |x| hit |= matches!(x, Expr::Var(v) if v == var));
    hit
}

fn body_reads(body: &[Stmt], var: &str) -> bool {
    let mut hit = false;
    walk_stmts(body, &mut |s| s.walk_exprs(&mut |e| hit |= matches!(e, Expr::Var(v) if v == var)));
    hit
}

fn assign_count(body: &[Stmt], var: &str) -> usize {
    let mut n = 0;
    walk_stmts(body, &mut |s| match s {
        Stmt::Assign {
            target: LValue::Var(v),
            ..
        } if v == var => n += 1,
        Stmt::Decl { name, .. } if name == var => n += 1,
        Stmt::StoreNext { var: v, .. } if v == var => n += 1,
        _ => {}
    });
    n
}

fn assigned_vars(body: &[Stmt]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    walk_stmts(body, &mut |s| {
        let name = match s {
            Stmt::Assign {
                target: LValue::Var(v),
                ..
            } => v,
            Stmt::Decl { name, .. } => name,
            _ => return,
        };
        if !out.contains(name) {
            out.push(name.clone());
        }
    });
    out
}

/// Rewrite compound assignments `x op= e` as `x = x op e`.
fn desugar(body: Vec<Stmt>) -> Vec<Stmt> {
    body.into_iter()
        .map(|s| match s {
            Stmt::Assign {
                target,
                op: Some(op),
                value,
                span,
            } => {
                let cur = match &target {
                    LValue::Var(v) => Expr::Var(v.clone()),
                    LValue::Deref(v) => Expr::Deref(v.clone()),
                    LValue::Index { array, indices } => Expr::Index {
                        array: array.clone(),
                        indices: indices.clone(),
                    },
                };
                Stmt::Assign {
                    target,
                    op: None,
                    value: Expr::bin(op, cur, value),
                    span,
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                span,
            } => Stmt::If {
                cond,
                then_body: desugar(then_body),
                else_body: desugar(else_body),
                span,
            },
            Stmt::For(mut l, span) => {
                l.body = desugar(l.body);
                Stmt::For(l, span)
            }
            s => s,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Def {
    No,
    Maybe,
    Yes,
}

fn meet(a: Def, b: Def) -> Def {
    if a == b {
        a
    } else {
        Def::Maybe
    }
}

/// Forward walk tracking whether `var` is definitely assigned. Each read is
/// reported with the current state and may be renamed; writes may be renamed
/// through `write_as`. The `marker`-th uninitialized declaration of `var`
/// resets the state to `No`; any other declaration counts as a definition.
struct Tracker<'a> {
    var: &'a str,
    write_as: Option<String>,
    marker: Option<usize>,
    decls: usize,
    on_read: &'a mut dyn FnMut(Def) -> Option<String>,
}

impl Tracker<'_> {
    fn expr(&mut self, e: Expr, st: Def) -> Expr {
        if !expr_reads(&e, self.var) {
            return e;
        }
        match (self.on_read)(st) {
            Some(name) => {
                let var = self.var;
                e.map(&mut |x| match x {
                    Expr::Var(v) if v == var => Expr::Var(name.clone()),
                    x => x,
                })
            }
            None => e,
        }
    }

    fn body(&mut self, body: Vec<Stmt>, st: &mut Def) -> Vec<Stmt> {
        body.into_iter().map(|s| self.stmt(s, st)).collect()
    }

    fn stmt(&mut self, s: Stmt, st: &mut Def) -> Stmt {
        match s {
            Stmt::Decl { name, ty, init, span } => {
                let init = init.map(|e| self.expr(e, *st));
                if name == self.var {
                    *st = Def::Yes;
                    if init.is_none() {
                        if self.marker == Some(self.decls) {
                            *st = Def::No;
                        }
                        self.decls += 1;
                    }
                }
                Stmt::Decl { name, ty, init, span }
            }
            Stmt::Assign {
                target,
                op,
                value,
                span,
            } => {
                let target = match target {
                    LValue::Index { array, indices } => LValue::Index {
                        array,
                        indices: indices.into_iter().map(|e| self.expr(e, *st)).collect(),
                    },
                    t => t,
                };
                let value = self.expr(value, *st);
                let target = match target {
                    LValue::Var(v) if v == self.var => {
                        *st = Def::Yes;
                        LValue::Var(self.write_as.clone().unwrap_or(v))
                    }
                    t => t,
                };
                Stmt::Assign {
                    target,
                    op,
                    value,
                    span,
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                span,
            } => {
                let cond = self.expr(cond, *st);
                let mut a = *st;
                let then_body = self.body(then_body, &mut a);
                let mut b = *st;
                let else_body = self.body(else_body, &mut b);
                *st = meet(a, b);
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                    span,
                }
            }
            Stmt::StoreNext { var, value, span } => Stmt::StoreNext {
                var,
                value: self.expr(value, *st),
                span,
            },
            Stmt::Return(e, span) => Stmt::Return(e.map(|e| self.expr(e, *st)), span),
            s => s,
        }
    }
}

/// States of every read of `var` plus the state at the end of `body`.
fn read_states(body: &[Stmt], var: &str, start: Def, marker: Option<usize>) -> (Vec<Def>, Def) {
    let mut states = Vec::new();
    let mut st = start;
    let mut on_read = |d: Def| {
        states.push(d);
        None
    };
    Tracker {
        var,
        write_as: None,
        marker,
        decls: 0,
        on_read: &mut on_read,
    }
    .body(body.to_vec(), &mut st);
    (states, st)
}

fn contains_for(body: &[Stmt]) -> bool {
    let mut hit = false;
    walk_stmts(body, &mut |s| hit |= matches!(s, Stmt::For(..)));
    hit
}

fn check_no_arrays(body: &[Stmt], where_: &str) -> Result<(), TransformError> {
    let mut bad = None;
    walk_stmts(body, &mut |s| {
        if let Stmt::Assign {
            target: LValue::Index { array, .. },
            ..
        } = s
        {
            bad.get_or_insert(format!("store to '{array}' {where_}"));
        }
        if let Stmt::StoreNext { .. } = s {
            bad.get_or_insert(format!("ROCCC_store2next {where_}"));
        }
        s.walk_exprs(&mut |e| match e {
            Expr::Index { array, .. } => {
                bad.get_or_insert(format!("array access '{array}' {where_}"));
            }
            Expr::LoadPrev(_) => {
                bad.get_or_insert(format!("ROCCC_load_prev {where_}"));
            }
            _ => {}
        });
    });
    match bad {
        Some(m) => Err(restriction(m)),
        None => Ok(()),
    }
}

fn fold_expr(e: Expr, ast: &KernelAst) -> Result<Expr, TransformError> {
    let mut err = None;
    let r = e.map(&mut |x| match fold_node(x, ast) {
        Ok(x) => x,
        Err(e) => {
            err.get_or_insert(e);
            Expr::Int(0)
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

/// Value of `e` converted to `ty` on assignment.
fn coerce(e: Expr, ty: ScalarType, types: &HashMap<String, ScalarType>) -> Expr {
    match &e {
        Expr::Int(v) => Expr::Int(ty.wrap(*v as i128) as i64),
        Expr::Var(v) if types.get(v) == Some(&ty) => e,
        Expr::Cast(t, _) if *t == ty => e,
        _ => Expr::Cast(ty, Box::new(e)),
    }
}

struct Prologue {
    /// Value of each variable at loop entry, with earlier prologue values
    /// substituted.
    env: BTreeMap<String, Expr>,
    order: Vec<String>,
}

fn run_prologue(
    prologue: &[Stmt],
    ast: &KernelAst,
    types: &HashMap<String, ScalarType>,
    holders: &BTreeMap<String, String>,
) -> Result<Prologue, TransformError> {
    let mut p = Prologue {
        env: BTreeMap::new(),
        order: Vec::new(),
    };
    check_no_arrays(prologue, "before the loop")?;
    for s in desugar(prologue.to_vec()) {
        let (name, value) = match s {
            Stmt::Decl { name, init, .. } => (name, init.unwrap_or(Expr::Int(0))),
            Stmt::Assign {
                target: LValue::Var(v),
                value,
                ..
            } => (v, value),
            Stmt::Assign {
                target: LValue::Deref(o),
                value,
                ..
            } => (holders[&o].clone(), value),
            _ => return Err(unsupported("only scalar declarations and assignments may precede the loop")),
        };
        let env = &p.env;
        let value = value.map(&mut |e| match e {
            Expr::Var(v) if env.contains_key(&v) => env[&v].clone(),
            Expr::Deref(o) => env.get(&holders[&o]).cloned().unwrap_or(Expr::Int(0)),
            e => e,
        });
        let value = fold_expr(coerce(value, types[&name], types), ast)?;
        if !p.env.contains_key(&name) {
            p.order.push(name.clone());
        }
        p.env.insert(name, value);
    }
    Ok(p)
}

fn loop_nest(l: &ForLoop) -> Result<(LoopSpec, Vec<Stmt>), TransformError> {
    let mut spec = LoopSpec::default();
    let mut cur = l;
    loop {
        let count = trip_count(cur)?;
        if count == 0 {
            return Err(TransformError::ZeroTrip { var: cur.var.clone() });
        }
        spec.indices.push(LoopIndex {
            name: cur.var.clone(),
            lower: cur.init.as_int().unwrap_or(0),
            count,
            step: cur.step,
        });
        match cur.body.as_slice() {
            [Stmt::For(inner, _)] => cur = inner,
            body => {
                if contains_for(body) {
                    return Err(unsupported(format!(
                        "loop inside the body of '{}' must be fully unrolled",
                        cur.var
                    )));
                }
                return Ok((spec, body.to_vec()));
            }
        }
    }
}

/// Isolate memory accesses from computation: array reads become named load
/// scalars, array writes become stores of named scalars, scalar outputs bind
/// to compute scalars and loop-carried variables become feedback pairs.
pub fn scalar_replace(ast: &KernelAst) -> Result<ScalarizedKernel, TransformError> {
    let mut names = Names::new(ast);

    let mut types: HashMap<String, ScalarType> = HashMap::new();
    for p in &ast.params {
        types.insert(p.name.clone(), p.ty);
    }
    walk_stmts(&ast.body, &mut |s| {
        if let Stmt::Decl { name, ty, .. } = s {
            types.insert(name.clone(), *ty);
        }
    });

    // Split into prologue, the rolled nest and epilogue.
    let loops: Vec<usize> = (0..ast.body.len())
        .filter(|&k| matches!(ast.body[k], Stmt::For(..)))
        .collect();
    if loops.len() > 1 {
        return Err(unsupported("more than one loop nest remains after unrolling"));
    }
    let (prologue, nest, epilogue) = match loops.first() {
        Some(&k) => {
            let Stmt::For(l, _) = &ast.body[k] else { unreachable!() };
            (&ast.body[..k], Some(loop_nest(l)?), &ast.body[k + 1..])
        }
        None => (&ast.body[..0], None, &ast.body[..]),
    };
    if contains_for(prologue) || contains_for(epilogue) {
        return Err(unsupported("loops outside the main loop nest must be fully unrolled"));
    }
    let looped = nest.is_some();
    let (spec, inner) = nest.unwrap_or_default();
    let is_index = |v: &str| spec.index(v).is_some();
    for idx in &spec.indices {
        types.insert(idx.name.clone(), idx.ty());
    }

    let outputs: Vec<&Param> = ast.params.iter().filter(|p| p.pointer).collect();
    let holders: BTreeMap<String, String> = outputs
        .iter()
        .map(|p| (p.name.clone(), format!("*{}", p.name)))
        .collect();

    let mut body: Vec<Stmt>;
    let mut pro = Prologue {
        env: BTreeMap::new(),
        order: Vec::new(),
    };
    if looped {
        // Prologue writes to `*o` go to a placeholder that cannot collide
        // with a user name; they force a holder below.
        let mut holders_pro = BTreeMap::new();
        for p in &outputs {
            let name = holders[&p.name].clone();
            holders_pro.insert(p.name.clone(), name.clone());
            types.insert(name, p.ty);
        }
        pro = run_prologue(prologue, ast, &types, &holders_pro)?;
        // The loop header reassigns its indices.
        pro.env.retain(|v, _| !is_index(v));
        pro.order.retain(|v| !is_index(v));
        check_no_arrays(epilogue, "after the loop")?;
        let mut bad = None;
        walk_stmts(epilogue, &mut |s| {
            s.walk_exprs(&mut |e| match e {
                Expr::Var(v) if is_index(v) => {
                    bad.get_or_insert(format!("loop index '{v}' read after the loop"));
                }
                Expr::Deref(o) => {
                    bad.get_or_insert(format!("output '*{o}' read after the loop"));
                }
                _ => {}
            })
        });
        for v in assigned_vars(epilogue) {
            if body_reads(&inner, &v) || assign_count(&inner, &v) > 0 {
                bad.get_or_insert(format!("'{v}' is assigned after the loop and also used inside it"));
            }
            let (states, _) = read_states(&desugar(epilogue.to_vec()), &v, Def::No, None);
            if states.iter().any(|d| *d != Def::Yes) {
                bad.get_or_insert(format!("'{v}' is updated after the loop from its own value"));
            }
        }
        if let Some(m) = bad {
            return Err(unsupported(m));
        }
        body = desugar(inner.iter().chain(epilogue).cloned().collect());
    } else {
        body = desugar(ast.body.clone());
        let mut bad = false;
        walk_stmts(&body, &mut |s| {
            bad |= matches!(s, Stmt::StoreNext { .. });
            s.walk_exprs(&mut |e| bad |= matches!(e, Expr::LoadPrev(_)));
        });
        if bad {
            return Err(unsupported("feedback macros require a loop"));
        }
    }

    // Scalar outputs: bind directly when the only access is a final
    // `*o = v`, otherwise route every access through a holder variable.
    let mut bindings: Vec<ScalarOutput> = Vec::new();
    let mut outside: BTreeSet<String> = pro.env.keys().cloned().collect();
    for p in &outputs {
        let holder = &holders[&p.name];
        let touches = |s: &Stmt| {
            let mut hit = matches!(s, Stmt::Assign { target: LValue::Deref(o), .. } if *o == p.name);
            s.walk_exprs(&mut |e| hit |= matches!(e, Expr::Deref(o) if *o == p.name));
            hit
        };
        let mut touching = Vec::new();
        walk_stmts(&body, &mut |s| {
            if touches(s) {
                touching.push(s.clone());
            }
        });
        let direct = if touching.len() == 1 && !pro.env.contains_key(holder) {
            body.iter().position(|s| *s == touching[0]).and_then(|k| match &body[k] {
                Stmt::Assign {
                    target: LValue::Deref(_),
                    value: Expr::Var(v),
                    ..
                } if assign_count(&body[k + 1..], v) == 0 => Some((k, v.clone())),
                _ => None,
            })
        } else {
            None
        };
        if let Some((k, v)) = direct {
            body.remove(k);
            bindings.push(ScalarOutput {
                name: p.name.clone(),
                ty: p.ty,
                source: v,
            });
            continue;
        }
        let holder = names.fresh(&format!("{}_val", p.name));
        types.insert(holder.clone(), p.ty);
        if looped {
            let v = pro.env.remove(&holders[&p.name]).unwrap_or(Expr::Int(0));
            pro.env.insert(holder.clone(), v);
            outside.insert(holder.clone());
        }
        let name = p.name.clone();
        body = body
            .into_iter()
            .map(|s| {
                let s = match s {
                    Stmt::Assign {
                        target: LValue::Deref(o),
                        op,
                        value,
                        span,
                    } if o == name => Stmt::Assign {
                        target: LValue::Var(holder.clone()),
                        op,
                        value,
                        span,
                    },
                    s => s,
                };
                s.map_exprs(&mut |e| match e {
                    Expr::Deref(o) if o == name => Expr::Var(holder.clone()),
                    e => e,
                })
            })
            .collect();
        body = rename_nested_deref(body, &name, &holder);
        bindings.push(ScalarOutput {
            name: p.name.clone(),
            ty: p.ty,
            source: holder,
        });
    }
    outside.retain(|v| pro.env.contains_key(v));
    let bound: BTreeSet<String> = bindings.iter().map(|b| b.source.clone()).collect();

    // Declarations become assignments; uninitialized ones are dropped when
    // no read can observe their zero.
    let decl_vars = {
        let mut v = Vec::new();
        walk_stmts(&body, &mut |s| {
            if let Stmt::Decl { name, init: None, .. } = s {
                v.push(name.clone());
            }
        });
        v
    };
    let mut live: HashMap<(String, usize), bool> = HashMap::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for v in &decl_vars {
        let k = seen.entry(v.clone()).or_insert(0);
        let (states, end) = read_states(&body, v, Def::Yes, Some(*k));
        let end_read = bound.contains(v) || (looped && outside.contains(v));
        let is_live = states.iter().any(|d| *d != Def::Yes) || (end_read && end != Def::Yes);
        live.insert((v.clone(), *k), is_live);
        *k += 1;
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    body = lower_decls(body, &live, &mut seen);

    // Loop-invariant prologue values are substituted.
    if looped {
        let explicit = explicit_feedback_vars(&body);
        let invariant: Vec<String> = pro
            .order
            .iter()
            .chain(pro.env.keys())
            .filter(|v| pro.env.contains_key(*v) && assign_count(&body, v) == 0 && !explicit.contains(*v))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut prefix = Vec::new();
        for v in &invariant {
            if bound.contains(v) {
                prefix.push(Stmt::assign(LValue::Var(v.clone()), pro.env[v].clone()));
            }
        }
        let env = &pro.env;
        body = map_body(body, &mut |e| match e {
            Expr::Var(v) if invariant.contains(&v) => env[&v].clone(),
            e => e,
        });
        prefix.extend(body);
        body = prefix;
    }

    // Explicit feedback macros are brought to canonical form.
    let mut feedbacks: Vec<Feedback> = Vec::new();
    if looped {
        for v in explicit_feedback_vars(&body) {
            if body_reads(&body, &v) || assign_count(&body, &v) > assign_count_macro(&body, &v) {
                return Err(restriction(format!(
                    "feedback variable '{v}' is accessed directly alongside ROCCC macros"
                )));
            }
            let ty = *types
                .get(&v)
                .ok_or_else(|| restriction(format!("feedback variable '{v}' is not declared")))?;
            let init = feedback_init(&pro, &v, ast)?;
            let (b, prev, next) = canonical_macros(body, &v, ty, &mut names, &mut types)?;
            body = b;
            feedbacks.push(Feedback {
                var: v,
                prev,
                next,
                ty,
                init,
            });
        }
    }

    // Loads.
    let (mut body, loads) = replace_loads(body, ast, &spec, &mut names, &mut types)?;
    let load_names: BTreeSet<String> = loads.iter().map(|l| l.scalar.clone()).collect();

    // Implicit feedback: variables read before they are assigned in an
    // iteration carry their value from the previous one.
    let mut sources: BTreeMap<String, String> = bound.iter().map(|b| (b.clone(), b.clone())).collect();
    if looped {
        let mut implicit = Vec::new();
        for v in assigned_vars(&body) {
            let (states, end) = read_states(&body, &v, Def::No, None);
            let end_read = bound.contains(&v);
            let mut all = states.clone();
            if end_read {
                all.push(end);
            }
            if all.iter().any(|d| *d != Def::Yes) {
                implicit.push((v, states.contains(&Def::Maybe) || end != Def::Yes));
            }
        }
        implicit.sort();
        let mut prefix = Vec::new();
        let mut copies = Vec::new();
        let mut suffix = Vec::new();
        for (v, copy) in implicit {
            let ty = types[&v];
            let init = if outside.contains(&v) || pro.env.contains_key(&v) {
                feedback_init(&pro, &v, ast)?
            } else {
                0
            };
            let prev = names.fresh(&format!("{v}_prev"));
            let next = names.fresh(&format!("{v}_next"));
            types.insert(prev.clone(), ty);
            types.insert(next.clone(), ty);
            let (p, n) = (prev.clone(), next.clone());
            let mut on_read = move |d: Def| {
                Some(if copy || d == Def::Yes { n.clone() } else { p.clone() })
            };
            let mut st = Def::No;
            body = Tracker {
                var: &v,
                write_as: Some(next.clone()),
                marker: None,
                decls: 0,
                on_read: &mut on_read,
            }
            .body(body, &mut st);
            prefix.push(Stmt::assign(LValue::Var(prev.clone()), Expr::LoadPrev(v.clone())));
            if copy {
                copies.push(Stmt::assign(LValue::Var(next.clone()), Expr::var(&prev)));
            }
            suffix.push(Stmt::StoreNext {
                var: v.clone(),
                value: Expr::var(&next),
                span: Span::default(),
            });
            if let Some(s) = sources.get_mut(&v) {
                *s = next.clone();
            }
            feedbacks.push(Feedback {
                var: v,
                prev,
                next,
                ty,
                init,
            });
        }
        prefix.extend(copies);
        prefix.extend(body);
        prefix.extend(suffix);
        body = prefix;
    } else {
        // Executed once: anything read before assignment holds its zero
        // initial value.
        let mut prefix = Vec::new();
        let mut candidates: BTreeSet<String> = assigned_vars(&body).into_iter().collect();
        candidates.extend(bound.iter().cloned());
        for v in candidates {
            if load_names.contains(&v) || ast.param(&v).is_some_and(|p| !p.pointer) {
                continue;
            }
            let (states, end) = read_states(&body, &v, Def::No, None);
            if states.iter().any(|d| *d != Def::Yes) || (bound.contains(&v) && end != Def::Yes) {
                prefix.push(Stmt::assign(LValue::Var(v.clone()), Expr::Int(0)));
            }
        }
        prefix.extend(body);
        body = prefix;
    }
    feedbacks.sort_by(|a, b| a.var.cmp(&b.var));
    for b in &mut bindings {
        b.source = sources[&b.source].clone();
    }

    // Stores.
    let mut stores = Vec::new();
    let mut compute = Vec::new();
    let n = body.len();
    let body_vec = body;
    for (k, s) in body_vec.iter().enumerate() {
        match s {
            Stmt::Assign {
                target: LValue::Index { array, indices },
                value,
                ..
            } => {
                let offset = subscripts(array, indices, &spec)?;
                if stores.iter().any(|st: &Store| st.array == *array && st.offset == offset) {
                    return Err(restriction(format!(
                        "two stores to the same element of '{array}' in one iteration"
                    )));
                }
                check_bounds(ast, array, &offset, &spec)?;
                let scalar = match value {
                    Expr::Var(v) if k + 1 <= n && assign_count(&body_vec[k + 1..], v) == 0 => v.clone(),
                    _ => {
                        let elem = ast.array(array).map(|a| a.element).unwrap_or_else(ScalarType::int);
                        let t = names.fresh(&format!("Tmp{}", stores.len()));
                        types.insert(t.clone(), elem);
                        compute.push(Stmt::assign(LValue::Var(t.clone()), value.clone()));
                        t
                    }
                };
                stores.push(Store {
                    array: array.clone(),
                    offset,
                    scalar,
                });
            }
            s => {
                let mut conditional = None;
                walk_stmts(std::slice::from_ref(s), &mut |x| {
                    if let Stmt::Assign {
                        target: LValue::Index { array, .. },
                        ..
                    } = x
                    {
                        conditional.get_or_insert(array.clone());
                    }
                });
                if let Some(a) = conditional {
                    return Err(restriction(format!("conditional store to '{a}'")));
                }
                compute.push(s.clone());
            }
        }
    }

    let mut leftovers = None;
    walk_stmts(&compute, &mut |s| {
        s.walk_exprs(&mut |e| match e {
            Expr::Index { array, .. } => {
                leftovers.get_or_insert(format!("array '{array}' remains in the compute fragment"));
            }
            Expr::Deref(o) => {
                leftovers.get_or_insert(format!("output '*{o}' remains in the compute fragment"));
            }
            _ => {}
        })
    });
    if let Some(m) = leftovers {
        return Err(unsupported(m));
    }

    let mut locals: Vec<(String, ScalarType)> = loads
        .iter()
        .map(|l| (l.scalar.clone(), types[&l.scalar]))
        .collect();
    for v in assigned_vars(&compute) {
        if !locals.iter().any(|(n, _)| *n == v) {
            let ty = types
                .get(&v)
                .copied()
                .ok_or_else(|| restriction(format!("'{v}' is not declared")))?;
            locals.push((v, ty));
        }
    }

    Ok(ScalarizedKernel {
        name: ast.name.clone(),
        params: ast.params.clone(),
        arrays: ast.arrays.clone(),
        loop_spec: spec,
        loads,
        compute,
        stores,
        feedbacks,
        outputs: bindings,
        locals,
    })
}

fn rename_nested_deref(body: Vec<Stmt>, name: &str, holder: &str) -> Vec<Stmt> {
    body.into_iter()
        .map(|s| match s {
            Stmt::If {
                cond,
                then_body,
                else_body,
                span,
            } => Stmt::If {
                cond,
                then_body: rename_nested_deref(redirect(then_body, name, holder), name, holder),
                else_body: rename_nested_deref(redirect(else_body, name, holder), name, holder),
                span,
            },
            s => s,
        })
        .collect()
}

fn redirect(body: Vec<Stmt>, name: &str, holder: &str) -> Vec<Stmt> {
    body.into_iter()
        .map(|s| match s {
            Stmt::Assign {
                target: LValue::Deref(o),
                op,
                value,
                span,
            } if o == name => Stmt::Assign {
                target: LValue::Var(holder.to_string()),
                op,
                value,
                span,
            },
            s => s,
        })
        .collect()
}

fn lower_decls(
    body: Vec<Stmt>,
    live: &HashMap<(String, usize), bool>,
    seen: &mut HashMap<String, usize>,
) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in body {
        match s {
            Stmt::Decl {
                name,
                init: Some(e),
                span,
                ..
            } => out.push(Stmt::Assign {
                target: LValue::Var(name),
                op: None,
                value: e,
                span,
            }),
            Stmt::Decl {
                name, init: None, span, ..
            } => {
                let k = seen.entry(name.clone()).or_insert(0);
                let keep = live.get(&(name.clone(), *k)).copied().unwrap_or(true);
                *k += 1;
                if keep {
                    out.push(Stmt::Assign {
                        target: LValue::Var(name),
                        op: None,
                        value: Expr::Int(0),
                        span,
                    });
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                span,
            } => {
                let then_body = lower_decls(then_body, live, seen);
                let else_body = lower_decls(else_body, live, seen);
                out.push(Stmt::If {
                    cond,
                    then_body,
                    else_body,
                    span,
                });
            }
            s => out.push(s),
        }
    }
    out
}

fn explicit_feedback_vars(body: &[Stmt]) -> Vec<String> {
    let mut vars = BTreeSet::new();
    walk_stmts(body, &mut |s| {
        if let Stmt::StoreNext { var, .. } = s {
            vars.insert(var.clone());
        }
        s.walk_exprs(&mut |e| {
            if let Expr::LoadPrev(v) = e {
                vars.insert(v.clone());
            }
        });
    });
    vars.into_iter().collect()
}

fn assign_count_macro(body: &[Stmt], var: &str) -> usize {
    let mut n = 0;
    walk_stmts(body, &mut |s| n += matches!(s, Stmt::StoreNext { var: v, .. } if v == var) as usize);
    n
}

fn feedback_init(pro: &Prologue, v: &str, ast: &KernelAst) -> Result<i64, TransformError> {
    match pro.env.get(v) {
        None => Ok(0),
        Some(e) => match fold_expr(e.clone(), ast)? {
            Expr::Int(k) => Ok(k),
            _ => Err(restriction(format!(
                "initial value of feedback variable '{v}' is not a constant"
            ))),
        },
    }
}

/// Ensure `v` has exactly one `prev = ROCCC_load_prev(v)` statement and one
/// trailing `ROCCC_store2next(v, next)` with a plain scalar argument.
fn canonical_macros(
    mut body: Vec<Stmt>,
    v: &str,
    ty: ScalarType,
    names: &mut Names,
    types: &mut HashMap<String, ScalarType>,
) -> Result<(Vec<Stmt>, String, String), TransformError> {
    let mut nested = false;
    for s in &body {
        if let Stmt::If {
            then_body,
            else_body,
            ..
        } = s
        {
            walk_stmts(then_body, &mut |x| nested |= matches!(x, Stmt::StoreNext { var, .. } if var == v));
            walk_stmts(else_body, &mut |x| nested |= matches!(x, Stmt::StoreNext { var, .. } if var == v));
        }
    }
    if nested || assign_count_macro(&body, v) > 1 {
        return Err(restriction(format!(
            "ROCCC_store2next({v}, ..) must appear once, unconditionally"
        )));
    }

    let prev_stmt = body.iter().position(|s| {
        matches!(s, Stmt::Assign { target: LValue::Var(p), value: Expr::LoadPrev(x), .. }
            if x == v && assign_count(&body, p) == 1)
    });
    let prev = match prev_stmt {
        Some(k) => {
            let Stmt::Assign {
                target: LValue::Var(p), ..
            } = &body[k]
            else {
                unreachable!()
            };
            p.clone()
        }
        None => {
            let p = names.fresh(&format!("{v}_prev"));
            types.insert(p.clone(), ty);
            body.insert(0, Stmt::assign(LValue::Var(p.clone()), Expr::LoadPrev(v.to_string())));
            p
        }
    };
    // Every other read of the macro goes through `prev`.
    let keep = body
        .iter()
        .position(|s| matches!(s, Stmt::Assign { target: LValue::Var(p), .. } if *p == prev))
        .unwrap_or(0);
    body = body
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            if k == keep {
                s
            } else {
                s.map_exprs(&mut |e| match e {
                    Expr::LoadPrev(x) if x == v => Expr::var(&prev),
                    e => e,
                })
            }
        })
        .collect();

    let store = body
        .iter()
        .position(|s| matches!(s, Stmt::StoreNext { var, .. } if var == v));
    let next = match store {
        Some(k) => match &body[k] {
            Stmt::StoreNext {
                value: Expr::Var(n), ..
            } if assign_count(&body[k + 1..], n) == 0 && n != &prev => n.clone(),
            Stmt::StoreNext { value, .. } => {
                let n = names.fresh(&format!("{v}_next"));
                types.insert(n.clone(), ty);
                let value = value.clone();
                body[k] = Stmt::StoreNext {
                    var: v.to_string(),
                    value: Expr::var(&n),
                    span: Span::default(),
                };
                body.insert(k, Stmt::assign(LValue::Var(n.clone()), value));
                n
            }
            _ => unreachable!(),
        },
        None => {
            let n = names.fresh(&format!("{v}_next"));
            types.insert(n.clone(), ty);
            body.push(Stmt::assign(LValue::Var(n.clone()), Expr::var(&prev)));
            body.push(Stmt::StoreNext {
                var: v.to_string(),
                value: Expr::var(&n),
                span: Span::default(),
            });
            n
        }
    };
    Ok((body, prev, next))
}

fn subscripts(array: &str, indices: &[Expr], spec: &LoopSpec) -> Result<Vec<Affine>, TransformError> {
    indices
        .iter()
        .map(|e| {
            affine_of(e, &|v| spec.index(v).is_some())
                .ok_or_else(|| restriction(format!("subscript of '{array}' is not affine in the loop indices")))
        })
        .collect()
}

fn check_bounds(ast: &KernelAst, array: &str, offset: &[Affine], spec: &LoopSpec) -> Result<(), TransformError> {
    let decl = ast
        .array(array)
        .ok_or_else(|| restriction(format!("'{array}' is not an array parameter")))?;
    for (d, a) in offset.iter().enumerate() {
        let (lo, hi) = spec.range(a);
        if lo < 0 || hi >= decl.extents[d] as i64 {
            return Err(restriction(format!(
                "access {array}[..{a}..] reaches index {} outside 0..{} in dimension {d}",
                if lo < 0 { lo } else { hi },
                decl.extents[d]
            )));
        }
    }
    Ok(())
}

fn replace_loads(
    body: Vec<Stmt>,
    ast: &KernelAst,
    spec: &LoopSpec,
    names: &mut Names,
    types: &mut HashMap<String, ScalarType>,
) -> Result<(Vec<Stmt>, Vec<Load>), TransformError> {
    // Every distinct (array, subscript) read in the body.
    let mut keys: BTreeSet<(usize, Vec<Affine>, String)> = BTreeSet::new();
    let mut err = None;
    walk_stmts(&body, &mut |s| {
        s.walk_exprs(&mut |e| {
            if let Expr::Index { array, indices } = e {
                if ast.const_array(array).is_some() {
                    err.get_or_insert(unsupported(format!(
                        "constant table '{array}' indexed by a loop variable"
                    )));
                    return;
                }
                match subscripts(array, indices, spec) {
                    Ok(off) => {
                        let pos = ast.arrays.iter().position(|a| a.name == *array).unwrap_or(usize::MAX);
                        keys.insert((pos, off, array.clone()));
                    }
                    Err(e) => {
                        err.get_or_insert(e);
                    }
                }
            }
        })
    });
    if let Some(e) = err {
        return Err(e);
    }

    // Load statements already in explicit form keep their scalar names.
    let mut named: BTreeMap<(String, Vec<Affine>), String> = BTreeMap::new();
    let mut drop = BTreeSet::new();
    for (k, s) in body.iter().enumerate() {
        if let Stmt::Assign {
            target: LValue::Var(v),
            value: Expr::Index { array, indices },
            ..
        } = s
        {
            let Ok(off) = subscripts(array, indices, spec) else { continue };
            let elem = ast.array(array).map(|a| a.element);
            let ty_ok = match (types.get(v), elem) {
                (Some(t), Some(e)) => t.contains(e.min_value()) && t.contains(e.max_value()),
                _ => false,
            };
            let key = (array.clone(), off);
            if ty_ok
                && assign_count(&body, v) == 1
                && !body_reads(&body[..k], v)
                && !named.contains_key(&key)
                && !named.values().any(|n| n == v)
            {
                named.insert(key, v.clone());
                drop.insert(k);
            }
        }
    }

    let mut loads = Vec::new();
    let mut rank: HashMap<String, usize> = HashMap::new();
    for (_, off, array) in &keys {
        check_bounds(ast, array, off, spec)?;
        let r = rank.entry(array.clone()).or_insert(0);
        let key = (array.clone(), off.clone());
        let scalar = match named.get(&key) {
            Some(n) => n.clone(),
            None => {
                let n = names.fresh(&format!("{array}{r}"));
                named.insert(key, n.clone());
                n
            }
        };
        *r += 1;
        types.insert(scalar.clone(), ast.array(array).unwrap().element);
        loads.push(Load {
            scalar,
            array: array.clone(),
            offset: off.clone(),
        });
    }

    let body: Vec<Stmt> = body
        .into_iter()
        .enumerate()
        .filter(|(k, _)| !drop.contains(k))
        .map(|(_, s)| s)
        .collect();
    let body = map_body(body, &mut |e| match e {
        Expr::Index { array, indices } => match subscripts(&array, &indices, spec) {
            Ok(off) => match named.get(&(array.clone(), off)) {
                Some(n) => Expr::Var(n.clone()),
                None => Expr::Index { array, indices },
            },
            Err(_) => Expr::Index { array, indices },
        },
        e => e,
    });
    // Store subscripts were rewritten as loads above only if they were reads;
    // the Index lvalues are untouched by map_exprs.
    Ok((body, loads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{fold_constants, unroll, DEFAULT_UNROLL_LIMIT};

    pub(crate) fn prepare(src: &str) -> KernelAst {
        let ast = check_restrictions(&parse(src).unwrap()).unwrap();
        let ast = inline_calls(&ast).unwrap();
        let ast = fold_constants(&ast).unwrap();
        unroll(&ast, &[], DEFAULT_UNROLL_LIMIT).unwrap()
    }

    const FIR: &str = "void fir(int A[21], int C[17]) { for (int i = 0; i < 17; i = i + 1) { C[i] = 3*A[i] + 5*A[i+1] + 7*A[i+2] + 9*A[i+3] - A[i+4]; } }";

    #[test]
    fn fir_matches_explicit_form() {
        let sk = scalar_replace(&prepare(FIR)).unwrap();
        let names: Vec<&str> = sk.loads.iter().map(|l| l.scalar.as_str()).collect();
        assert_eq!(names, ["A0", "A1", "A2", "A3", "A4"]);
        for (k, l) in sk.loads.iter().enumerate() {
            assert_eq!(l.offset[0].constant, k as i64);
            assert_eq!(l.offset[0].coeff("i"), 1);
        }
        assert_eq!(sk.stores.len(), 1);
        assert_eq!(sk.stores[0].scalar, "Tmp0");
        assert_eq!(sk.compute.len(), 1);
        let Stmt::Assign { target, value, .. } = &sk.compute[0] else { panic!() };
        assert_eq!(*target, LValue::Var("Tmp0".into()));
        assert_eq!(print_expr(value), "3 * A0 + 5 * A1 + 7 * A2 + 9 * A3 - A4");
        assert_eq!(sk.loop_spec.trip(), 17);
        assert!(sk.feedbacks.is_empty());
    }

    #[test]
    fn no_array_access() {
        let sk = scalar_replace(&prepare("void k(int a, int* o) { *o = a + 1; }")).unwrap();
        assert!(sk.loads.is_empty() && sk.stores.is_empty());
        assert_eq!(sk.outputs.len(), 1);
    }

    #[test]
    fn accumulator_feedback() {
        let sk = scalar_replace(&prepare(
            "void acc(int A[4], int* out) { int sum = 0; for (int i = 0; i < 4; i++) { sum = sum + A[i]; } *out = sum; }",
        ))
        .unwrap();
        assert_eq!(sk.feedbacks.len(), 1);
        let f = &sk.feedbacks[0];
        assert_eq!((f.var.as_str(), f.prev.as_str(), f.next.as_str(), f.init), ("sum", "sum_prev", "sum_next", 0));
        let text: Vec<String> = sk
            .compute
            .iter()
            .map(|s| print_stmts(std::slice::from_ref(s)).trim().to_string())
            .collect();
        assert_eq!(
            text,
            ["sum_prev = ROCCC_load_prev(sum);", "sum_next = sum_prev + A0;", "ROCCC_store2next(sum, sum_next);"]
        );
        assert_eq!(sk.outputs[0].source, "sum_next");
    }

    #[test]
    fn idempotent_on_corpus_shapes() {
        for src in [
            FIR,
            "void acc(int A[4], int* out) { int sum = 0; for (int i = 0; i < 4; i++) { sum = sum + A[i]; } *out = sum; }",
            "void m(bool nd[8], int12_t A[8], int12_t B[8], int32_t P[8]) { int32_t sum = 0; for (int i = 0; i < 8; i++) { if (nd[i]) { sum = sum + A[i]*B[i]; } P[i] = sum; } }",
            "void c(int a, int b, int* o, int* p) { if (a > b) { *o = a; } *p = b; }",
            "void d(int x[4], int y[2]) { y[0] = x[0] + x[3]; y[1] = x[1] - x[2]; }",
            "void g(int A[8], int* hi) { for (int i = 0; i < 8; i++) { if (A[i] > 3) *hi = A[i]; } }",
        ] {
            let sk = scalar_replace(&prepare(src)).unwrap();
            let again = scalar_replace(&sk.to_ast()).unwrap();
            assert_eq!(again, sk, "{src}");
            let reparsed = check_restrictions(&parse(&print_kernel(&sk.to_ast())).unwrap()).unwrap();
            assert_eq!(scalar_replace(&reparsed).unwrap(), sk, "{}", print_kernel(&sk.to_ast()));
        }
    }

    #[test]
    fn conditional_store_rejected() {
        let ast = prepare("void k(int A[4], int C[4]) { for (int i = 0; i < 4; i++) { if (A[i] > 0) C[i] = A[i]; } }");
        assert!(matches!(scalar_replace(&ast), Err(TransformError::Restriction(_))));
    }

    #[test]
    fn duplicate_store_rejected() {
        let ast = prepare("void k(int A[4], int C[4]) { for (int i = 0; i < 4; i++) { C[i] = A[i]; C[i] = 0; } }");
        assert!(matches!(scalar_replace(&ast), Err(TransformError::Restriction(_))));
    }

    #[test]
    fn out_of_bounds_rejected() {
        let ast = prepare("void k(int A[4], int C[4]) { for (int i = 0; i < 4; i++) { C[i] = A[i+1]; } }");
        let err = scalar_replace(&ast).unwrap_err();
        assert!(err.to_string().contains("outside"), "{err}");
    }

    #[test]
    fn maybe_assigned_feedback_copies_prev() {
        let sk = scalar_replace(&prepare(
            "void g(int A[8], int* hi) { int m = 0; for (int i = 0; i < 8; i++) { if (A[i] > m) m = A[i]; } *hi = m; }",
        ))
        .unwrap();
        assert_eq!(sk.feedbacks.len(), 1);
        assert!(sk.compute.contains(&Stmt::assign(LValue::Var("m_next".into()), Expr::var("m_prev"))));
    }
}
