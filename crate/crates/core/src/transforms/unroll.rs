// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::frontend::*;

use super::fold::fold_body;
use super::TransformError;

pub const DEFAULT_UNROLL_LIMIT: i64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnrollFactor {
    Full,
    By(i64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnrollDirective {
    pub var: String,
    pub factor: UnrollFactor,
}

impl fmt::Display for UnrollDirective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.factor {
            UnrollFactor::Full => write!(f, "{}=full", self.var),
            UnrollFactor::By(k) => write!(f, "{}={k}", self.var),
        }
    }
}

impl std::str::FromStr for UnrollDirective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (var, factor) = s
            .split_once('=')
            .ok_or_else(|| format!("expected <loop>=<factor|full>, got '{s}'"))?;
        let factor = match factor {
            "full" => UnrollFactor::Full,
            k => match k.parse::<i64>() {
                Ok(k) if k >= 1 => UnrollFactor::By(k),
                _ => return Err(format!("invalid unroll factor '{k}'")),
            },
        };
        Ok(UnrollDirective {
            var: var.to_string(),
            factor,
        })
    }
}

/// Iteration count of a loop whose bounds have been folded to literals.
pub fn trip_count(l: &ForLoop) -> Result<i64, TransformError> {
    let (Some(init), Some(bound)) = (l.init.as_int(), l.bound.as_int()) else {
        return Err(TransformError::NotConstantBounds { var: l.var.clone() });
    };
    let span = match l.bound_op {
        BoundOp::Lt => bound - init,
        BoundOp::Le => bound - init + 1,
    };
    Ok(if span <= 0 { 0 } else { (span + l.step - 1) / l.step })
}

fn map_loops(
    body: Vec<Stmt>,
    var: &str,
    found: &mut bool,
    f: &mut dyn FnMut(ForLoop) -> Result<Vec<Stmt>, TransformError>,
) -> Result<Vec<Stmt>, TransformError> {
    let mut out = Vec::new();
    for s in body {
        match s {
            Stmt::For(mut l, span) => {
                l.body = map_loops(l.body, var, found, f)?;
                if l.var == var {
                    *found = true;
                    out.extend(f(l)?);
                } else {
                    out.push(Stmt::For(l, span));
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                span,
            } => out.push(Stmt::If {
                cond,
                then_body: map_loops(then_body, var, found, f)?,
                else_body: map_loops(else_body, var, found, f)?,
                span,
            }),
            s => out.push(s),
        }
    }
    Ok(out)
}

/// Bind the trip count of every loop indexed by `var` to `n`.
pub fn apply_trip(ast: &KernelAst, var: &str, n: i64) -> Result<KernelAst, TransformError> {
    if n < 1 {
        return Err(TransformError::ZeroTrip { var: var.into() });
    }
    let mut found = false;
    let body = map_loops(ast.body.clone(), var, &mut found, &mut |mut l| {
        let init = l
            .init
            .as_int()
            .ok_or_else(|| TransformError::NotConstantBounds { var: l.var.clone() })?;
        l.bound_op = BoundOp::Lt;
        l.bound = Expr::Int(init + n * l.step);
        Ok(vec![Stmt::For(l, Span::default())])
    })?;
    if !found {
        return Err(TransformError::UnknownLoop(var.into()));
    }
    Ok(KernelAst { body, ..ast.clone() })
}

fn substitute_index(body: &[Stmt], var: &str, value: &Expr) -> Vec<Stmt> {
    body.iter()
        .cloned()
        .map(|s| {
            s.map_exprs(&mut |e| match e {
                Expr::Var(v) if v == var => value.clone(),
                e => e,
            })
        })
        .collect()
}

fn replicate(l: &ForLoop, ast: &KernelAst) -> Result<Vec<Stmt>, TransformError> {
    let trip = trip_count(l)?;
    let init = l.init.as_int().unwrap_or(0);
    let mut out = Vec::new();
    for t in 0..trip {
        out.extend(substitute_index(&l.body, &l.var, &Expr::Int(init + t * l.step)));
    }
    let mut out = fold_body(&out, ast)?;
    // An index declared outside the loop keeps its exit value.
    if !l.declares {
        out.push(Stmt::assign(LValue::Var(l.var.clone()), Expr::Int(init + trip * l.step)));
    }
    Ok(out)
}

/// Replace every loop indexed by `var` with straight-line copies of its body.
pub fn unroll_full(ast: &KernelAst, var: &str) -> Result<KernelAst, TransformError> {
    let mut found = false;
    let body = map_loops(ast.body.clone(), var, &mut found, &mut |l| replicate(&l, ast))?;
    if !found {
        return Err(TransformError::UnknownLoop(var.into()));
    }
    Ok(drop_dead_index(KernelAst { body, ..ast.clone() }, var))
}

/// Unroll every loop indexed by `var` by factor `k`; the trip count must be a
/// multiple of `k`.
pub fn unroll_by(ast: &KernelAst, var: &str, k: i64) -> Result<KernelAst, TransformError> {
    let mut found = false;
    let body = map_loops(ast.body.clone(), var, &mut found, &mut |mut l| {
        let trip = trip_count(&l)?;
        if k < 1 || trip % k != 0 {
            return Err(TransformError::UnrollFactor {
                var: l.var.clone(),
                factor: k,
                trip,
            });
        }
        let init = l.init.as_int().unwrap_or(0);
        let mut body = Vec::new();
        for c in 0..k {
            let idx = Expr::bin(BinOp::Add, Expr::var(&l.var), Expr::Int(c * l.step));
            body.extend(substitute_index(&l.body, &l.var, &idx));
        }
        l.body = fold_body(&body, ast)?;
        l.bound_op = BoundOp::Lt;
        l.bound = Expr::Int(init + trip * l.step);
        l.step *= k;
        Ok(vec![Stmt::For(l, Span::default())])
    })?;
    if !found {
        return Err(TransformError::UnknownLoop(var.into()));
    }
    Ok(KernelAst { body, ..ast.clone() })
}

fn reads_var(body: &[Stmt], var: &str) -> bool {
    let mut seen = false;
    walk_stmts(body, &mut |s| {
        s.walk_exprs(&mut |e| seen |= matches!(e, Expr::Var(v) if v == var));
        if let Stmt::For(l, _) = s {
            seen |= l.var == var;
        }
    });
    seen
}

/// Remove the exit-value assignment and declaration of a fully unrolled
/// index that nothing reads any more.
fn drop_dead_index(mut ast: KernelAst, var: &str) -> KernelAst {
    if reads_var(&ast.body, var) {
        return ast;
    }
    fn strip(body: Vec<Stmt>, var: &str) -> Vec<Stmt> {
        body.into_iter()
            .filter(|s| match s {
                Stmt::Decl { name, .. } => name != var,
                Stmt::Assign {
                    target: LValue::Var(v),
                    ..
                } => v != var,
                _ => true,
            })
            .map(|s| match s {
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                    span,
                } => Stmt::If {
                    cond,
                    then_body: strip(then_body, var),
                    else_body: strip(else_body, var),
                    span,
                },
                Stmt::For(mut l, span) => {
                    l.body = strip(l.body, var);
                    Stmt::For(l, span)
                }
                s => s,
            })
            .collect()
    }
    ast.body = strip(ast.body, var);
    ast
}

fn unroll_all(body: Vec<Stmt>, ast: &KernelAst, limit: i64) -> Result<Vec<Stmt>, TransformError> {
    let mut out = Vec::new();
    for s in body {
        match s {
            Stmt::For(mut l, _) => {
                l.body = unroll_all(l.body, ast, limit)?;
                let trip = trip_count(&l)?;
                if trip > limit {
                    return Err(TransformError::UnrollLimit {
                        var: l.var.clone(),
                        trip,
                        limit,
                    });
                }
                out.extend(replicate(&l, ast)?);
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                span,
            } => out.push(Stmt::If {
                cond,
                then_body: unroll_all(then_body, ast, limit)?,
                else_body: unroll_all(else_body, ast, limit)?,
                span,
            }),
            s => out.push(s),
        }
    }
    Ok(out)
}

fn keep_nest(mut l: ForLoop, ast: &KernelAst, limit: i64) -> Result<ForLoop, TransformError> {
    l.body = match <[Stmt; 1]>::try_from(l.body) {
        Ok([Stmt::For(inner, span)]) => vec![Stmt::For(keep_nest(inner, ast, limit)?, span)],
        Ok(one) => unroll_all(one.into(), ast, limit)?,
        Err(body) => unroll_all(body, ast, limit)?,
    };
    Ok(l)
}

/// Apply explicit directives, then the default policy: the single top-level
/// perfect loop nest stays rolled and every other loop is fully unrolled,
/// provided its trip count is at most `limit`.
pub fn unroll(
    ast: &KernelAst,
    directives: &[UnrollDirective],
    limit: i64,
) -> Result<KernelAst, TransformError> {
    let mut cur = ast.clone();
    for d in directives {
        cur = match d.factor {
            UnrollFactor::Full => unroll_full(&cur, &d.var)?,
            UnrollFactor::By(k) => unroll_by(&cur, &d.var, k)?,
        };
    }
    let tops = cur.body.iter().filter(|s| matches!(s, Stmt::For(..))).count();
    let mut body = Vec::new();
    for s in std::mem::take(&mut cur.body) {
        match s {
            Stmt::For(l, span) if tops == 1 => body.push(Stmt::For(keep_nest(l, &cur, limit)?, span)),
            s => body.extend(unroll_all(vec![s], &cur, limit)?),
        }
    }
    let mut vars = Vec::new();
    walk_stmts(&ast.body, &mut |s| {
        if let Stmt::For(l, _) = s {
            vars.push(l.var.clone());
        }
    });
    cur.body = body;
    for v in vars {
        cur = drop_dead_index(cur, &v);
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::fold_constants;

    fn prep(src: &str) -> KernelAst {
        fold_constants(&check_restrictions(&parse(src).unwrap()).unwrap()).unwrap()
    }

    fn loop_count(ast: &KernelAst) -> usize {
        let mut n = 0;
        walk_stmts(&ast.body, &mut |s| n += matches!(s, Stmt::For(..)) as usize);
        n
    }

    #[test]
    fn trip_counts() {
        let ast = prep("void k(int A[10], int C[10]) { for (int i = 1; i <= 9; i += 2) C[i] = A[i]; }");
        let Stmt::For(l, _) = &ast.body[0] else { panic!() };
        assert_eq!(trip_count(l).unwrap(), 5);
    }

    #[test]
    fn two_way_unroll() {
        let ast = prep("void k(int A[2], int* o) { int s = 0; for (int j = 0; j < 2; j++) s = s + A[j]; *o = s; }");
        let u = unroll_full(&ast, "j").unwrap();
        assert_eq!(loop_count(&u), 0);
        let printed = print_kernel(&u);
        assert!(printed.contains("s = s + A[0];") && printed.contains("s = s + A[1];"), "{printed}");
    }

    #[test]
    fn degenerate_trip_one() {
        let ast = prep("void k(int A[1], int C[1]) { for (int i = 0; i < 1; i++) C[i] = A[i] + 1; }");
        let u = unroll_full(&ast, "i").unwrap();
        assert_eq!(u.body.len(), 1);
        assert_eq!(loop_count(&u), 0);
    }

    #[test]
    fn symbolic_bound_needs_trip() {
        let ast = prep("void k(int A[8], int C[8]) { for (int i = 0; i < N; i++) C[i] = A[i]; }");
        assert!(matches!(unroll_full(&ast, "i"), Err(TransformError::NotConstantBounds { .. })));
        let bound = apply_trip(&ast, "i", 8).unwrap();
        let Stmt::For(l, _) = &bound.body[0] else { panic!() };
        assert_eq!(trip_count(l).unwrap(), 8);
    }

    #[test]
    fn partial_unroll() {
        let ast = prep("void k(int A[8], int C[8]) { for (int i = 0; i < 8; i++) C[i] = A[i]; }");
        let u = unroll_by(&ast, "i", 2).unwrap();
        let Stmt::For(l, _) = &u.body[0] else { panic!() };
        assert_eq!((l.step, l.body.len(), trip_count(l).unwrap()), (2, 2, 4));
        assert!(matches!(unroll_by(&ast, "i", 3), Err(TransformError::UnrollFactor { .. })));
    }

    #[test]
    fn policy_keeps_outer_unrolls_inner() {
        let ast = prep(
            "void k(uint8_t A[64], uint8_t C[8]) { for (int i = 0; i < 8; i++) { int s = 0; for (int j = 0; j < 8; j++) s = s + A[8*i + j]; C[i] = s; } }",
        );
        let u = unroll(&ast, &[], DEFAULT_UNROLL_LIMIT).unwrap();
        assert_eq!(loop_count(&u), 1);
        let full = unroll(&ast, &["i=full".parse().unwrap()], DEFAULT_UNROLL_LIMIT).unwrap();
        assert_eq!(loop_count(&full), 0);
    }

    #[test]
    fn perfect_nest_stays_rolled() {
        let ast = prep("void k(int A[4][4], int C[4][4]) { for (int i = 0; i < 4; i++) for (int j = 0; j < 4; j++) C[i][j] = A[i][j]; }");
        let u = unroll(&ast, &[], DEFAULT_UNROLL_LIMIT).unwrap();
        assert_eq!(loop_count(&u), 2);
    }

    #[test]
    fn large_inner_loop_rejected() {
        let ast = prep(
            "void k(int A[1000], int C[10]) { for (int i = 0; i < 10; i++) { int s = 0; for (int j = 0; j < 100; j++) s = s + A[j]; C[i] = s; } }",
        );
        assert!(matches!(unroll(&ast, &[], 16), Err(TransformError::UnrollLimit { .. })));
    }

    #[test]
    fn directive_parsing() {
        let d: UnrollDirective = "k=full".parse().unwrap();
        assert_eq!(d.to_string(), "k=full");
        assert!("k=0".parse::<UnrollDirective>().is_err());
        assert!("k".parse::<UnrollDirective>().is_err());
    }
}
