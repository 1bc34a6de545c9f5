// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::ast::*;
use super::parser::const_eval;
use super::{FrontendError, Violation};

/// `constant + Σ coeff·index`, with integer coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Affine {
    pub coeffs: BTreeMap<String, i64>,
    pub constant: i64,
}

impl Affine {
    pub fn constant(c: i64) -> Self {
        Affine {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn index(name: &str) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.to_string(), 1);
        Affine { coeffs, constant: 0 }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.values().all(|&c| c == 0)
    }

    pub fn coeff(&self, index: &str) -> i64 {
        self.coeffs.get(index).copied().unwrap_or(0)
    }

    fn normalized(mut self) -> Self {
        self.coeffs.retain(|_, c| *c != 0);
        self
    }

    pub fn add(&self, other: &Affine, sign: i64) -> Affine {
        let mut r = self.clone();
        for (k, v) in &other.coeffs {
            *r.coeffs.entry(k.clone()).or_insert(0) += sign * v;
        }
        r.constant += sign * other.constant;
        r.normalized()
    }

    pub fn scale(&self, k: i64) -> Affine {
        Affine {
            coeffs: self.coeffs.iter().map(|(n, c)| (n.clone(), c * k)).collect(),
            constant: self.constant * k,
        }
        .normalized()
    }

    /// Value for the given index assignment; missing indices count as 0.
    pub fn eval(&self, env: &dyn Fn(&str) -> i64) -> i64 {
        self.constant + self.coeffs.iter().map(|(n, c)| c * env(n)).sum::<i64>()
    }

    /// Substitute `index := value` and return the result.
    pub fn substitute(&self, index: &str, value: i64) -> Affine {
        let mut r = self.clone();
        if let Some(c) = r.coeffs.remove(index) {
            r.constant += c * value;
        }
        r
    }

    /// Rebuild an expression equivalent to this form.
    pub fn to_expr(&self) -> Expr {
        let mut e: Option<Expr> = None;
        for (n, &c) in &self.coeffs {
            let term = if c == 1 {
                Expr::var(n)
            } else {
                Expr::bin(BinOp::Mul, Expr::Int(c), Expr::var(n))
            };
            e = Some(match e {
                None => term,
                Some(acc) => Expr::bin(BinOp::Add, acc, term),
            });
        }
        match e {
            None => Expr::Int(self.constant),
            Some(acc) if self.constant > 0 => Expr::bin(BinOp::Add, acc, Expr::Int(self.constant)),
            Some(acc) if self.constant < 0 => Expr::bin(BinOp::Sub, acc, Expr::Int(-self.constant)),
            Some(acc) => acc,
        }
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, c) in &self.coeffs {
            if !first {
                f.write_str(if *c < 0 { " - " } else { " + " })?;
            } else if *c < 0 {
                f.write_str("-")?;
            }
            first = false;
            match c.abs() {
                1 => write!(f, "{n}")?,
                a => write!(f, "{a}*{n}")?,
            }
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant != 0 {
            write!(f, " {} {}", if self.constant < 0 { "-" } else { "+" }, self.constant.abs())
        } else {
            Ok(())
        }
    }
}

/// Affine form of `e` over the given loop indices, or `None` when the
/// expression is not affine with constant coefficients.
pub fn affine_of(e: &Expr, indices: &dyn Fn(&str) -> bool) -> Option<Affine> {
    match e {
        Expr::Int(v) => Some(Affine::constant(*v)),
        Expr::Var(v) if indices(v) => Some(Affine::index(v)),
        Expr::Unary(UnOp::Neg, a) => Some(affine_of(a, indices)?.scale(-1)),
        Expr::Binary(op, a, b) => {
            let x = affine_of(a, indices)?;
            let y = affine_of(b, indices)?;
            match op {
                BinOp::Add => Some(x.add(&y, 1)),
                BinOp::Sub => Some(x.add(&y, -1)),
                BinOp::Mul if x.is_constant() => Some(y.scale(x.constant)),
                BinOp::Mul if y.is_constant() => Some(x.scale(y.constant)),
                BinOp::Shl if y.is_constant() && (0..32).contains(&y.constant) => Some(x.scale(1 << y.constant)),
                _ if x.is_constant() && y.is_constant() => {
                    let v = op.eval(x.constant as i128, y.constant as i128)?;
                    Some(Affine::constant(i64::try_from(v).ok()?))
                }
                _ => None,
            }
        }
        _ => None,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sym {
    Local(ScalarType),
    Input,
    Pointer,
    Array(usize),
    Const(usize),
    LoopIndex,
}

struct Checker<'a> {
    ast: &'a KernelAst,
    violations: Vec<Violation>,
    syms: HashMap<String, Sym>,
    loop_stack: Vec<String>,
    reads: BTreeSet<String>,
    writes: BTreeSet<String>,
}

/// Validate a parsed kernel against the dialect restrictions and classify
/// parameter directions. All violations are reported together.
pub fn check_restrictions(ast: &KernelAst) -> Result<KernelAst, FrontendError> {
    let mut c = Checker {
        ast,
        violations: Vec::new(),
        syms: HashMap::new(),
        loop_stack: Vec::new(),
        reads: BTreeSet::new(),
        writes: BTreeSet::new(),
    };
    let top = Span { line: 1, col: 1 };
    for p in &ast.params {
        c.declare(&p.name, if p.pointer { Sym::Pointer } else { Sym::Input }, top);
    }
    for a in &ast.arrays {
        c.declare(&a.name, Sym::Array(a.extents.len()), top);
    }
    for k in &ast.consts {
        c.declare(&k.name, Sym::Const(k.extents.len()), top);
    }
    for h in &ast.helpers {
        c.check_helper(h);
    }
    for (i, s) in ast.body.iter().enumerate() {
        if let Stmt::Return(e, span) = s {
            if e.is_some() {
                c.violate(*span, "kernel returns a value");
            } else if i + 1 != ast.body.len() {
                c.violate(*span, "return before end of kernel");
            }
            continue;
        }
        c.stmt(s);
    }
    let mut out = ast.clone();
    for a in &mut out.arrays {
        let r = c.reads.contains(&a.name);
        let w = c.writes.contains(&a.name);
        if r && w {
            c.violations.push(Violation {
                span: top,
                message: format!("array '{}' is both read and written", a.name),
            });
        }
        a.direction = if w { Direction::Out } else { Direction::In };
    }
    for p in &mut out.params {
        p.direction = if p.pointer { Direction::Out } else { Direction::In };
    }
    out.body.retain(|s| !matches!(s, Stmt::Return(None, _)));
    if c.violations.is_empty() {
        Ok(out)
    } else {
        Err(FrontendError::Restriction(c.violations))
    }
}

impl<'a> Checker<'a> {
    fn violate(&mut self, span: Span, msg: impl Into<String>) {
        self.violations.push(Violation {
            span,
            message: msg.into(),
        });
    }

    fn declare(&mut self, name: &str, sym: Sym, span: Span) {
        match self.syms.get(name) {
            // Re-declaring a local with the same type reuses the variable.
            Some(Sym::Local(t)) if sym == Sym::Local(*t) => {}
            Some(_) => self.violate(span, format!("redeclaration of '{name}'")),
            None => {
                self.syms.insert(name.to_string(), sym);
            }
        }
    }

    fn check_helper(&mut self, h: &Helper) {
        let span = h.body.first().map(|s| s.span()).unwrap_or_default();
        let mut locals: BTreeSet<&str> = h.params.iter().map(|(n, _)| n.as_str()).collect();
        let n = h.body.len();
        for (i, s) in h.body.iter().enumerate() {
            let last = i + 1 == n;
            match s {
                Stmt::Decl { name, init, .. } => {
                    if let Some(e) = init {
                        self.helper_expr(e, &locals, s.span(), &h.name);
                    }
                    locals.insert(name);
                }
                Stmt::Assign {
                    target: LValue::Var(v),
                    value,
                    ..
                } if locals.contains(v.as_str()) => self.helper_expr(value, &locals, s.span(), &h.name),
                Stmt::Return(Some(e), _) if last => self.helper_expr(e, &locals, s.span(), &h.name),
                _ => self.violate(
                    s.span(),
                    format!("helper '{}' must be straight-line code ending in a return", h.name),
                ),
            }
        }
        if !matches!(h.body.last(), Some(Stmt::Return(Some(_), _))) {
            self.violate(span, format!("helper '{}' does not end with a return", h.name));
        }
    }

    fn helper_expr(&mut self, e: &Expr, locals: &BTreeSet<&str>, span: Span, helper: &str) {
        let mut bad = Vec::new();
        e.walk(&mut |x| match x {
            Expr::Var(v) if !locals.contains(v.as_str()) => bad.push(format!("undeclared identifier '{v}' in helper '{helper}'")),
            Expr::Index { array, .. } if self.ast.const_array(array).is_none() => {
                bad.push(format!("helper '{helper}' accesses array '{array}'"))
            }
            Expr::Deref(v) | Expr::LoadPrev(v) => bad.push(format!("helper '{helper}' uses '{v}' outside its scope")),
            Expr::Call { name, args } => match self.ast.helper(name) {
                Some(h) if h.params.len() == args.len() => {}
                Some(_) => bad.push(format!("wrong number of arguments to '{name}'")),
                None => bad.push(format!("call to unknown function '{name}'")),
            },
            _ => {}
        });
        for b in bad {
            self.violate(span, b);
        }
        self.check_divisions(e, span);
    }

    fn is_index(&self, v: &str) -> bool {
        self.loop_stack.iter().any(|l| l == v)
    }

    fn subscripts(&mut self, array: &str, indices: &[Expr], span: Span) {
        let dims = match self.syms.get(array) {
            Some(Sym::Array(d)) | Some(Sym::Const(d)) => *d,
            Some(_) => {
                self.violate(span, format!("'{array}' is not an array"));
                return;
            }
            None => {
                self.violate(span, format!("undeclared array '{array}'"));
                return;
            }
        };
        if dims != indices.len() {
            self.violate(span, format!("'{array}' has {dims} dimension(s), subscripted with {}", indices.len()));
        }
        for ix in indices {
            self.expr(ix, span);
            let stack = self.loop_stack.clone();
            if affine_of(ix, &|v| stack.iter().any(|l| l == v)).is_none() {
                self.violate(span, format!("non-affine subscript '{}' of '{array}'", super::print_expr(ix)));
            }
        }
    }

    fn check_divisions(&mut self, e: &Expr, span: Span) {
        let mut bad = Vec::new();
        e.walk(&mut |x| {
            if let Expr::Binary(op, a, b) = x {
                bad.extend(division_violation(*op, a, b));
            }
        });
        for b in bad {
            self.violate(span, b);
        }
    }

    fn expr(&mut self, e: &Expr, span: Span) {
        match e {
            Expr::Int(_) => {}
            Expr::Var(v) => match self.syms.get(v) {
                None => self.violate(span, format!("undeclared identifier '{v}'")),
                Some(Sym::Pointer) => self.violate(span, format!("pointer '{v}' used as a value (pointer arithmetic or aliasing)")),
                Some(Sym::Array(_)) | Some(Sym::Const(_)) => self.violate(span, format!("array '{v}' used as a scalar")),
                _ => {}
            },
            Expr::Deref(v) => {
                if self.syms.get(v) != Some(&Sym::Pointer) {
                    self.violate(span, format!("dereference of non-pointer '{v}'"));
                }
            }
            Expr::Index { array, indices } => {
                if matches!(self.syms.get(array), Some(Sym::Array(_))) {
                    self.reads.insert(array.clone());
                }
                self.subscripts(array, indices, span);
            }
            Expr::Unary(_, a) | Expr::Cast(_, a) => self.expr(a, span),
            Expr::Lut { index, .. } => self.expr(index, span),
            Expr::Binary(op, a, b) => {
                self.expr(a, span);
                self.expr(b, span);
                if let Some(m) = division_violation(*op, a, b) {
                    self.violate(span, m);
                }
            }
            Expr::Call { name, args } => {
                match self.ast.helper(name) {
                    Some(h) if h.params.len() == args.len() => {}
                    Some(_) => self.violate(span, format!("wrong number of arguments to '{name}'")),
                    None => self.violate(span, format!("call to unknown function '{name}'")),
                }
                for a in args {
                    self.expr(a, span);
                }
            }
            Expr::LoadPrev(v) => {
                if !matches!(self.syms.get(v), Some(Sym::Local(_))) {
                    self.violate(span, format!("ROCCC_load_prev of non-local '{v}'"));
                }
            }
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        let span = s.span();
        match s {
            Stmt::Decl { name, ty, init, .. } => {
                if let Some(e) = init {
                    self.expr(e, span);
                }
                self.declare(name, Sym::Local(*ty), span);
            }
            Stmt::Assign { target, value, .. } => {
                self.expr(value, span);
                match target {
                    LValue::Var(v) => match self.syms.get(v) {
                        Some(Sym::Local(_)) => {}
                        Some(Sym::LoopIndex) => self.violate(span, format!("assignment to loop index '{v}'")),
                        Some(Sym::Input) => self.violate(span, format!("assignment to input parameter '{v}'")),
                        Some(Sym::Pointer) => self.violate(span, format!("pointer '{v}' reassigned (pointer arithmetic or aliasing)")),
                        Some(_) => self.violate(span, format!("assignment to array '{v}' without subscript")),
                        None => self.violate(span, format!("undeclared identifier '{v}'")),
                    },
                    LValue::Deref(v) => {
                        if self.syms.get(v) != Some(&Sym::Pointer) {
                            self.violate(span, format!("dereference of non-pointer '{v}'"));
                        }
                    }
                    LValue::Index { array, indices } => {
                        match self.syms.get(array) {
                            Some(Sym::Const(_)) => self.violate(span, format!("assignment to const table '{array}'")),
                            Some(Sym::Array(_)) => {
                                self.writes.insert(array.clone());
                            }
                            _ => {}
                        }
                        self.subscripts(array, indices, span);
                    }
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                ..
            } => {
                self.expr(cond, span);
                for s in then_body.iter().chain(else_body) {
                    self.stmt(s);
                }
            }
            Stmt::For(l, _) => self.for_loop(l, span),
            Stmt::StoreNext { var, value, .. } => {
                self.expr(value, span);
                if !matches!(self.syms.get(var), Some(Sym::Local(_))) {
                    self.violate(span, format!("ROCCC_store2next of non-local '{var}'"));
                }
            }
            Stmt::Return(..) => self.violate(span, "return inside a nested block"),
        }
    }

    fn for_loop(&mut self, l: &ForLoop, span: Span) {
        if self.is_index(&l.var) {
            self.violate(span, format!("nested loops reuse index '{}'", l.var));
        }
        match self.syms.get(&l.var).copied() {
            Some(Sym::Local(_)) | Some(Sym::LoopIndex) => {}
            None if l.declares => {}
            None => self.violate(span, format!("undeclared loop index '{}'", l.var)),
            Some(_) => self.violate(span, format!("loop index '{}' is not a local variable", l.var)),
        }
        if const_eval(&l.init).is_none() {
            self.violate(span, format!("non-constant lower bound of loop '{}'", l.var));
        }
        match &l.bound {
            // An undeclared symbol is a trip-count parameter supplied at compile time.
            Expr::Var(v) if !self.syms.contains_key(v) => {}
            b if const_eval(b).is_some() => {}
            _ => self.violate(span, format!("non-constant bound of loop '{}'", l.var)),
        }
        let saved = self.syms.insert(l.var.clone(), Sym::LoopIndex);
        self.loop_stack.push(l.var.clone());
        for s in &l.body {
            self.stmt(s);
        }
        self.loop_stack.pop();
        match saved {
            Some(sym) => {
                self.syms.insert(l.var.clone(), sym);
            }
            None => {
                self.syms.insert(l.var.clone(), Sym::Local(ScalarType::int()));
            }
        }
    }
}

fn division_violation(op: BinOp, a: &Expr, b: &Expr) -> Option<String> {
    if !matches!(op, BinOp::Div | BinOp::Rem) {
        return None;
    }
    match const_eval(b) {
        None => Some(format!("{} by non-constant", if op == BinOp::Div { "division" } else { "modulo" })),
        Some(0) => Some("division by zero".to_string()),
        Some(d) if const_eval(a).is_none() && !(d > 0 && (d & (d - 1)) == 0) => {
            Some(format!("division by constant {d}, which is not a power of two"))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn check(src: &str) -> Result<KernelAst, FrontendError> {
        check_restrictions(&parse(src).unwrap())
    }

    fn messages(e: FrontendError) -> Vec<String> {
        match e {
            FrontendError::Restriction(v) => v.into_iter().map(|v| v.message).collect(),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pointer_param_is_output() {
        let ast = check("void main_df(int A0, int A1, int A2, int A3, int A4, int* Tmp0) { *Tmp0 = 3*A0 + 5*A1 + 7*A2 + 9*A3 - A4; return; }").unwrap();
        let p = ast.param("Tmp0").unwrap();
        assert_eq!(p.direction, Direction::Out);
        assert_eq!(ast.param("A0").unwrap().direction, Direction::In);
    }

    #[test]
    fn non_affine_subscript() {
        let m = messages(check("void k(int A[16], int* o) { int i; for (i = 0; i < 4; i++) { *o = A[i*i]; } }").unwrap_err());
        assert!(m.iter().any(|m| m.starts_with("non-affine subscript")), "{m:?}");
    }

    #[test]
    fn affine_subscript_coefficients() {
        let e = parse("void k(int A[16], int* o) { int i; for (i = 0; i < 4; i++) { *o = A[2*i+1]; } }").unwrap();
        check_restrictions(&e).unwrap();
        let mut sub = None;
        walk_stmts(&e.body, &mut |s| {
            s.walk_exprs(&mut |x| {
                if let Expr::Index { indices, .. } = x {
                    sub = Some(indices[0].clone());
                }
            })
        });
        let a = affine_of(&sub.unwrap(), &|v| v == "i").unwrap();
        assert_eq!((a.coeff("i"), a.constant), (2, 1));
    }

    #[test]
    fn pointer_arithmetic_rejected() {
        let m = messages(check("void k(int a, int* o) { *o = a; o = o; }").unwrap_err());
        assert!(m.iter().any(|m| m.contains("pointer arithmetic")), "{m:?}");
    }

    #[test]
    fn violations_are_collected() {
        let m = messages(check("void k(int A[4], int a, int* o) { *o = A[a]; *o = a / a; *o = a / 3; q = 1; }").unwrap_err());
        assert_eq!(m.len(), 4, "{m:?}");
    }

    #[test]
    fn read_write_array_rejected() {
        let m = messages(check("void k(int A[4]) { int i; for (i = 0; i < 3; i++) { A[i+1] = A[i]; } }").unwrap_err());
        assert!(m.iter().any(|m| m.contains("both read and written")));
    }

    #[test]
    fn symbolic_trip_parameter_allowed() {
        check("void k(int A[32], int C[32]) { int i; for (i = 0; i < N; i = i + 1) { C[i] = A[i]; } }").unwrap();
    }

    #[test]
    fn runtime_bound_rejected() {
        let m = messages(check("void k(int A[32], int n, int C[32]) { int i; for (i = 0; i < n; i++) { C[i] = A[i]; } }").unwrap_err());
        assert!(m.iter().any(|m| m.contains("non-constant bound")));
    }

    #[test]
    fn array_directions() {
        let ast = check("void k(int A[4], int C[4]) { int i; for (i = 0; i < 4; i++) { C[i] = A[i]; } }").unwrap();
        assert_eq!(ast.array("A").unwrap().direction, Direction::In);
        assert_eq!(ast.array("C").unwrap().direction, Direction::Out);
    }

    #[test]
    fn affine_display_and_expr() {
        let a = Affine::index("i").scale(2).add(&Affine::constant(-3), 1);
        assert_eq!(a.to_string(), "2*i - 3");
        assert_eq!(affine_of(&a.to_expr(), &|v| v == "i").unwrap(), a);
    }
}
