// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::ast::*;
use super::parser::reject_recursion;
use super::FrontendError;

/// Replace every helper call by the helper's body, evaluated symbolically
/// into a single expression. `lut(...)` and the feedback intrinsics are not
/// calls and stay in place.
pub fn inline_calls(ast: &KernelAst) -> Result<KernelAst, FrontendError> {
    reject_recursion(ast, Span::default())
        .map_err(|_| FrontendError::restriction(Span::default(), "recursive call graph"))?;
    let mut types: HashMap<String, ScalarType> = HashMap::new();
    for p in &ast.params {
        types.insert(p.name.clone(), p.ty);
    }
    walk_stmts(&ast.body, &mut |s| match s {
        Stmt::Decl { name, ty, .. } => {
            types.insert(name.clone(), *ty);
        }
        Stmt::For(l, _) => {
            types.entry(l.var.clone()).or_insert_with(ScalarType::int);
        }
        _ => {}
    });
    let mut err = None;
    let body = ast
        .body
        .iter()
        .cloned()
        .map(|s| {
            let span = s.span();
            s.map_exprs(&mut |e| match e {
                Expr::Call { name, args } => match expand_call(ast, &types, &name, args, 0) {
                    Ok(x) => x,
                    Err(m) => {
                        err.get_or_insert(FrontendError::restriction(span, m));
                        Expr::Int(0)
                    }
                },
                e => e,
            })
        })
        .collect();
    if let Some(e) = err {
        return Err(e);
    }
    Ok(KernelAst {
        body,
        helpers: Vec::new(),
        ..ast.clone()
    })
}

fn static_type(e: &Expr, types: &HashMap<String, ScalarType>) -> Option<ScalarType> {
    match e {
        Expr::Var(v) => types.get(v).copied(),
        Expr::Cast(t, _) => Some(*t),
        _ => None,
    }
}

fn convert(e: Expr, to: ScalarType, types: &HashMap<String, ScalarType>) -> Expr {
    match static_type(&e, types) {
        Some(t) if t == to => e,
        _ => match e {
            Expr::Int(v) if to.contains(v as i128) => e,
            e => Expr::Cast(to, Box::new(e)),
        },
    }
}

fn expand_call(
    ast: &KernelAst,
    types: &HashMap<String, ScalarType>,
    name: &str,
    args: Vec<Expr>,
    depth: usize,
) -> Result<Expr, String> {
    if depth > 64 {
        return Err("call nesting too deep".into());
    }
    let h = ast.helper(name).ok_or_else(|| format!("call to unknown function '{name}'"))?;
    if h.params.len() != args.len() {
        return Err(format!("wrong number of arguments to '{name}'"));
    }
    let mut env: HashMap<String, Expr> = HashMap::new();
    let mut local_types = types.clone();
    for ((pname, pty), arg) in h.params.iter().zip(args) {
        env.insert(pname.clone(), convert(arg, *pty, types));
        local_types.insert(pname.clone(), *pty);
    }
    let subst = |e: &Expr, env: &HashMap<String, Expr>| -> Result<Expr, String> {
        let mut inner_err = None;
        let r = e.clone().map(&mut |x| match x {
            Expr::Var(v) => env.get(&v).cloned().unwrap_or(Expr::Var(v)),
            Expr::Call { name, args } => match expand_call(ast, types, &name, args, depth + 1) {
                Ok(x) => x,
                Err(m) => {
                    inner_err.get_or_insert(m);
                    Expr::Int(0)
                }
            },
            x => x,
        });
        match inner_err {
            Some(m) => Err(m),
            None => Ok(r),
        }
    };
    for s in &h.body {
        match s {
            Stmt::Decl { name, ty, init, .. } => {
                let v = match init {
                    Some(e) => convert(subst(e, &env)?, *ty, &local_types),
                    None => Expr::Int(0),
                };
                local_types.insert(name.clone(), *ty);
                env.insert(name.clone(), v);
            }
            Stmt::Assign {
                target: LValue::Var(v),
                op,
                value,
                ..
            } => {
                let rhs = subst(value, &env)?;
                let rhs = match op {
                    Some(op) => Expr::bin(*op, env.get(v).cloned().unwrap_or(Expr::Int(0)), rhs),
                    None => rhs,
                };
                let ty = local_types.get(v).copied().unwrap_or_else(ScalarType::int);
                env.insert(v.clone(), convert(rhs, ty, &local_types));
            }
            Stmt::Return(Some(e), _) => return Ok(convert(subst(e, &env)?, h.ret, &local_types)),
            _ => return Err(format!("helper '{name}' is not straight-line code")),
        }
    }
    Err(format!("helper '{name}' does not return a value"))
}

#[cfg(test)]
mod tests {
    use super::super::{check_restrictions, parse};
    use super::*;

    fn inlined(src: &str) -> KernelAst {
        inline_calls(&check_restrictions(&parse(src).unwrap()).unwrap()).unwrap()
    }

    fn has_call(ast: &KernelAst) -> bool {
        let mut found = false;
        walk_stmts(&ast.body, &mut |s| {
            s.walk_exprs(&mut |e| found |= matches!(e, Expr::Call { .. }))
        });
        found
    }

    #[test]
    fn square_helper_substituted() {
        let ast = inlined("int sq(int x) { return x*x; }\nvoid k(int a, int* o) { *o = sq(a); }");
        assert!(!has_call(&ast));
        let Stmt::Assign { value, .. } = &ast.body[0] else { panic!() };
        let mut saw_mul = false;
        value.walk(&mut |e| {
            if let Expr::Binary(BinOp::Mul, a, b) = e {
                saw_mul = **a == Expr::var("a") && **b == Expr::var("a");
            }
        });
        assert!(saw_mul, "{value:?}");
    }

    #[test]
    fn lut_is_retained() {
        let ast = inlined("void k(uint10_t i, int* o) { int y; y = lut(\"costab\", i); *o = y; }");
        let mut saw = false;
        walk_stmts(&ast.body, &mut |s| s.walk_exprs(&mut |e| saw |= matches!(e, Expr::Lut { .. })));
        assert!(saw);
    }

    #[test]
    fn nested_helpers_and_locals() {
        let ast = inlined(
            "int twice(int x) { int y = x + x; return y; }\nint quad(int x) { return twice(twice(x)); }\nvoid k(int a, int* o) { *o = quad(a); }",
        );
        assert!(!has_call(&ast));
        assert!(ast.helpers.is_empty());
    }

    #[test]
    fn mutual_recursion_rejected() {
        let mut ast = parse("int f(int x) { return x; }\nint g(int x) { return x; }\nvoid k(int a, int* o) { *o = f(a); }").unwrap();
        // Make f and g call each other after parsing, bypassing the parse-time check.
        ast.helpers[0].body = vec![Stmt::Return(Some(Expr::Call { name: "g".into(), args: vec![Expr::var("x")] }), Span::default())];
        ast.helpers[1].body = vec![Stmt::Return(Some(Expr::Call { name: "f".into(), args: vec![Expr::var("x")] }), Span::default())];
        assert!(matches!(inline_calls(&ast), Err(FrontendError::Restriction(_))));
    }

    #[test]
    fn unknown_callee_rejected() {
        let mut ast = parse("void k(int a, int* o) { *o = a; }").unwrap();
        ast.body[0] = Stmt::assign(LValue::Deref("o".into()), Expr::Call { name: "nope".into(), args: vec![] });
        assert!(matches!(inline_calls(&ast), Err(FrontendError::Restriction(_))));
    }
}
