// SPDX-License-Identifier: Apache-2.0

use crate::frontend::*;

use super::TransformError;

const MIN_LITERAL: i128 = -(1 << 31);
const MAX_LITERAL: i128 = (1 << 32) - 1;

/// Evaluate constant subexpressions, apply algebraic identities, index
/// constant tables and resolve `if` statements with constant conditions.
pub fn fold_constants(ast: &KernelAst) -> Result<KernelAst, TransformError> {
    let mut out = ast.clone();
    out.body = fold_body(&ast.body, ast)?;
    for h in &mut out.helpers {
        h.body = fold_body(&h.body, ast)?;
    }
    Ok(out)
}

pub(crate) fn fold_body(body: &[Stmt], ast: &KernelAst) -> Result<Vec<Stmt>, TransformError> {
    let mut out = Vec::with_capacity(body.len());
    for s in body {
        let mut err = None;
        let s = s.clone().map_exprs(&mut |e| match fold_node(e, ast) {
            Ok(e) => e,
            Err(x) => {
                err.get_or_insert(x);
                Expr::Int(0)
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        match s {
            Stmt::If {
                cond,
                then_body,
                else_body,
                span,
            } => {
                let then_body = fold_body(&then_body, ast)?;
                let else_body = fold_body(&else_body, ast)?;
                match cond.as_int() {
                    Some(0) => out.extend(else_body),
                    Some(_) => out.extend(then_body),
                    None => out.push(Stmt::If {
                        cond,
                        then_body,
                        else_body,
                        span,
                    }),
                }
            }
            Stmt::For(mut l, span) => {
                l.body = fold_body(&l.body, ast)?;
                out.push(Stmt::For(l, span));
            }
            s => out.push(s),
        }
    }
    Ok(out)
}

fn literal(v: i128) -> Result<Expr, TransformError> {
    if (MIN_LITERAL..=MAX_LITERAL).contains(&v) {
        Ok(Expr::Int(v as i64))
    } else {
        Err(TransformError::Overflow { value: v })
    }
}

/// Fold one node whose children are already folded.
pub(crate) fn fold_node(e: Expr, ast: &KernelAst) -> Result<Expr, TransformError> {
    use BinOp::*;
    Ok(match e {
        Expr::Int(v) => literal(v as i128)?,
        Expr::Unary(op, a) => match a.as_int() {
            Some(v) => literal(op.eval(v as i128))?,
            None => Expr::Unary(op, a),
        },
        Expr::Cast(t, a) => match *a {
            Expr::Int(v) => literal(t.wrap(v as i128))?,
            Expr::Cast(t2, inner) if t2 == t => Expr::Cast(t, inner),
            a => Expr::Cast(t, Box::new(a)),
        },
        Expr::Index { array, indices } => {
            let consts: Option<Vec<i64>> = indices.iter().map(Expr::as_int).collect();
            match (ast.const_array(&array), consts) {
                (Some(table), Some(idx)) => match table.get(&idx) {
                    Some(v) => literal(v as i128)?,
                    None => {
                        return Err(TransformError::Restriction(format!(
                            "constant table '{array}' indexed out of bounds at {idx:?}"
                        )))
                    }
                },
                _ => Expr::Index { array, indices },
            }
        }
        Expr::Binary(op, a, b) => match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) => match op.eval(x as i128, y as i128) {
                Some(v) => literal(v)?,
                None => Expr::Binary(op, a, b),
            },
            (_, Some(0)) if matches!(op, Add | Sub | Shl | Shr | Or | Xor) => *a,
            (Some(0), _) if matches!(op, Add | Or | Xor) => *b,
            (_, Some(1)) if matches!(op, Mul | Div) => *a,
            (Some(1), _) if op == Mul => *b,
            (_, Some(0)) | (Some(0), _) if matches!(op, Mul | And) => Expr::Int(0),
            _ => Expr::Binary(op, a, b),
        },
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{check_restrictions, parse, print_expr};

    fn folded_rhs(src_expr: &str) -> String {
        let src = format!("const int T[3] = {{4, 5, 6}};\nvoid k(int x, int* o) {{ *o = {src_expr}; }}");
        let ast = check_restrictions(&parse(&src).unwrap()).unwrap();
        let f = fold_constants(&ast).unwrap();
        match &f.body[0] {
            Stmt::Assign { value, .. } => print_expr(value),
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn constant_subtree() {
        assert_eq!(folded_rhs("3*2+x"), "6 + x");
        assert_eq!(folded_rhs("(1<<4)-1"), "15");
    }

    #[test]
    fn identities() {
        assert_eq!(folded_rhs("x*1"), "x");
        assert_eq!(folded_rhs("x+0"), "x");
        assert_eq!(folded_rhs("0 + x * 1"), "x");
        assert_eq!(folded_rhs("x * 0"), "0");
    }

    #[test]
    fn table_and_cast() {
        assert_eq!(folded_rhs("T[1] + T[2]"), "11");
        assert_eq!(folded_rhs("(uint8_t)300 + x"), "44 + x");
        assert_eq!(folded_rhs("(int8_t)200"), "-56");
    }

    #[test]
    fn overflow_reported() {
        let ast = parse("void k(int x, int* o) { *o = 65536 * 65536 + x; }").unwrap();
        assert!(matches!(fold_constants(&ast), Err(TransformError::Overflow { .. })));
    }

    #[test]
    fn constant_condition_selects_branch() {
        let ast = parse("void k(int x, int* o) { if (2 > 1) { *o = x; } else { *o = 0; } }").unwrap();
        let f = fold_constants(&ast).unwrap();
        assert_eq!(f.body.len(), 1);
        assert!(matches!(&f.body[0], Stmt::Assign { value: Expr::Var(v), .. } if v == "x"));
    }
}
