// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use super::ast::*;

/// Pretty-print a kernel back to dialect source. Parsing the output yields a
/// structurally equal AST.
pub fn print_kernel(ast: &KernelAst) -> String {
    let mut out = String::new();
    for c in &ast.consts {
        let dims: String = c.extents.iter().map(|e| format!("[{e}]")).collect();
        let vals: Vec<String> = c.values.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "const {} {}{} = {{{}}};", c.element.c_name(), c.name, dims, vals.join(", "));
    }
    if !ast.consts.is_empty() {
        out.push('\n');
    }
    for h in &ast.helpers {
        let params: Vec<String> = h.params.iter().map(|(n, t)| format!("{} {n}", t.c_name())).collect();
        let _ = writeln!(out, "{} {}({}) {{", h.ret.c_name(), h.name, params.join(", "));
        print_body(&mut out, &h.body, 1);
        out.push_str("}\n\n");
    }
    let mut params: Vec<String> = Vec::new();
    // Scalars and arrays were separated at parse time; arrays follow scalars.
    for p in &ast.params {
        params.push(format!("{}{} {}", p.ty.c_name(), if p.pointer { "*" } else { "" }, p.name));
    }
    for a in &ast.arrays {
        let dims: String = a.extents.iter().map(|e| format!("[{e}]")).collect();
        params.push(format!("{} {}{}", a.element.c_name(), a.name, dims));
    }
    let _ = writeln!(out, "void {}({}) {{", ast.name, params.join(", "));
    print_body(&mut out, &ast.body, 1);
    out.push_str("}\n");
    out
}

/// Print a statement list at top level.
pub fn print_stmts(body: &[Stmt]) -> String {
    let mut out = String::new();
    print_body(&mut out, body, 0);
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

pub(crate) fn print_body(out: &mut String, body: &[Stmt], level: usize) {
    for s in body {
        print_stmt(out, s, level);
    }
}

fn print_lvalue(t: &LValue) -> String {
    match t {
        LValue::Var(v) => v.clone(),
        LValue::Deref(v) => format!("*{v}"),
        LValue::Index { array, indices } => {
            let mut s = array.clone();
            for i in indices {
                let _ = write!(s, "[{}]", print_expr(i));
            }
            s
        }
    }
}

fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match s {
        Stmt::Decl { name, ty, init, .. } => {
            let _ = match init {
                Some(e) => writeln!(out, "{} {name} = {};", ty.c_name(), print_expr(e)),
                None => writeln!(out, "{} {name};", ty.c_name()),
            };
        }
        Stmt::Assign { target, op, value, .. } => {
            let op = op.map(|o| o.symbol()).unwrap_or("");
            let _ = writeln!(out, "{} {op}= {};", print_lvalue(target), print_expr(value));
        }
        Stmt::If {
            cond,
            then_body,
            else_body,
            ..
        } => {
            let _ = writeln!(out, "if ({}) {{", print_expr(cond));
            print_body(out, then_body, level + 1);
            indent(out, level);
            if else_body.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                print_body(out, else_body, level + 1);
                indent(out, level);
                out.push_str("}\n");
            }
        }
        Stmt::For(l, _) => {
            let decl = if l.declares { "int " } else { "" };
            let cmp = match l.bound_op {
                BoundOp::Lt => "<",
                BoundOp::Le => "<=",
            };
            let _ = writeln!(
                out,
                "for ({decl}{v} = {}; {v} {cmp} {}; {v} = {v} + {}) {{",
                print_expr(&l.init),
                print_expr(&l.bound),
                l.step,
                v = l.var
            );
            print_body(out, &l.body, level + 1);
            indent(out, level);
            out.push_str("}\n");
        }
        Stmt::StoreNext { var, value, .. } => {
            let _ = writeln!(out, "ROCCC_store2next({var}, {});", print_expr(value));
        }
        Stmt::Return(e, _) => {
            let _ = match e {
                Some(e) => writeln!(out, "return {};", print_expr(e)),
                None => writeln!(out, "return;"),
            };
        }
    }
}

const UNARY_PREC: u8 = 12;

pub fn print_expr(e: &Expr) -> String {
    expr_prec(e, 0)
}

fn expr_prec(e: &Expr, ctx: u8) -> String {
    match e {
        Expr::Int(v) => {
            if *v < 0 && ctx > UNARY_PREC {
                format!("({v})")
            } else {
                v.to_string()
            }
        }
        Expr::Var(v) => v.clone(),
        Expr::Deref(v) => format!("*{v}"),
        Expr::LoadPrev(v) => format!("ROCCC_load_prev({v})"),
        Expr::Index { array, indices } => {
            let mut s = array.clone();
            for i in indices {
                let _ = write!(s, "[{}]", print_expr(i));
            }
            s
        }
        Expr::Lut { table, index } => format!("lut(\"{table}\", {})", print_expr(index)),
        Expr::Call { name, args } => {
            let a: Vec<String> = args.iter().map(print_expr).collect();
            format!("{name}({})", a.join(", "))
        }
        Expr::Unary(op, a) => {
            // A bare literal after unary minus would re-lex as a negative literal.
            let inner = match (op, &**a) {
                (UnOp::Neg, Expr::Int(_)) => format!("({})", print_expr(a)),
                _ => expr_prec(a, UNARY_PREC + 1),
            };
            let s = format!("{}{inner}", op.symbol());
            if ctx > UNARY_PREC {
                format!("({s})")
            } else {
                s
            }
        }
        Expr::Cast(t, a) => {
            let s = format!("({}){}", t.c_name(), expr_prec(a, UNARY_PREC + 1));
            if ctx > UNARY_PREC {
                format!("({s})")
            } else {
                s
            }
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            let s = format!("{} {} {}", expr_prec(a, p), op.symbol(), expr_prec(b, p + 1));
            if p < ctx {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn roundtrip_precedence() {
        let src = "void k(int a, int b, int* o) { *o = (a - (b - 1)) * -a + ((a << 2) >> 1) - -3 + (int8_t)(a + b); }";
        let ast = parse(src).unwrap();
        let printed = print_kernel(&ast);
        assert_eq!(parse(&printed).unwrap(), ast, "{printed}");
    }

    #[test]
    fn negated_literal_stays_unary() {
        let e = Expr::Unary(UnOp::Neg, Box::new(Expr::Int(3)));
        assert_eq!(print_expr(&e), "-(3)");
    }
}
