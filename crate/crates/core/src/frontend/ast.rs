// SPDX-License-Identifier: Apache-2.0

//! Abstract syntax of the restricted C kernel dialect.

use std::fmt;

/// Source position of a statement. Positions never take part in structural
/// equality, so a printed-and-reparsed kernel compares equal to the original.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Integer type of a scalar or array element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScalarType {
    pub signed: bool,
    pub width: u8,
}

impl ScalarType {
    pub const MAX_WIDTH: u8 = 32;

    pub fn new(signed: bool, width: u8) -> Self {
        assert!((1..=Self::MAX_WIDTH).contains(&width), "scalar width {width} out of range");
        ScalarType { signed, width }
    }

    pub fn int() -> Self {
        ScalarType::new(true, 32)
    }

    pub fn min_value(&self) -> i128 {
        if self.signed {
            -(1i128 << (self.width - 1))
        } else {
            0
        }
    }

    pub fn max_value(&self) -> i128 {
        if self.signed {
            (1i128 << (self.width - 1)) - 1
        } else {
            (1i128 << self.width) - 1
        }
    }

    /// Two's-complement wraparound of `v` into this type.
    pub fn wrap(&self, v: i128) -> i128 {
        wrap_to(v, self.width as u32, self.signed)
    }

    pub fn contains(&self, v: i128) -> bool {
        v >= self.min_value() && v <= self.max_value()
    }

    /// Canonical C spelling, e.g. `int8_t` or `uint12_t`.
    pub fn c_name(&self) -> String {
        format!("{}int{}_t", if self.signed { "" } else { "u" }, self.width)
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.signed { "s" } else { "u" }, self.width)
    }
}

impl std::str::FromStr for ScalarType {
    type Err = String;

    /// Parses the `s16` / `u10` spelling used by `Display`.
    fn from_str(s: &str) -> Result<Self, String> {
        let signed = match s.chars().next() {
            Some('s') => true,
            Some('u') => false,
            _ => return Err(format!("type '{s}' must start with 's' or 'u'")),
        };
        match s[1..].parse::<u8>() {
            Ok(w) if (1..=Self::MAX_WIDTH).contains(&w) => Ok(ScalarType::new(signed, w)),
            _ => Err(format!("type '{s}' needs a width from 1 to {}", Self::MAX_WIDTH)),
        }
    }
}

/// Wrap `v` to `width` bits, reinterpreting as signed or unsigned.
pub fn wrap_to(v: i128, width: u32, signed: bool) -> i128 {
    if width >= 128 {
        return v;
    }
    let m = 1i128 << width;
    let r = v.rem_euclid(m);
    if signed && r >= m / 2 {
        r - m
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
        })
    }
}

/// Scalar parameter. Pointer parameters are single-value outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: ScalarType,
    pub pointer: bool,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrayDecl {
    pub name: String,
    pub element: ScalarType,
    pub extents: Vec<usize>,
    pub direction: Direction,
}

impl ArrayDecl {
    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major flat position of a subscript tuple.
    pub fn flatten(&self, idx: &[i64]) -> Option<i64> {
        if idx.len() != self.extents.len() {
            return None;
        }
        let mut flat = 0i64;
        for (i, (&v, &e)) in idx.iter().zip(&self.extents).enumerate() {
            if v < 0 || v >= e as i64 {
                return None;
            }
            flat = if i == 0 { v } else { flat * e as i64 + v };
        }
        Some(flat)
    }
}

/// File-scope `const` table, folded into literals once subscripts are constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstArray {
    pub name: String,
    pub element: ScalarType,
    pub extents: Vec<usize>,
    pub values: Vec<i64>,
}

impl ConstArray {
    pub fn get(&self, idx: &[i64]) -> Option<i64> {
        let decl = ArrayDecl {
            name: self.name.clone(),
            element: self.element,
            extents: self.extents.clone(),
            direction: Direction::In,
        };
        decl.flatten(idx).map(|f| self.values[f as usize])
    }
}

/// Helper function eligible for inlining: scalar parameters, straight-line
/// body ending in `return`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Helper {
    pub name: String,
    pub ret: ScalarType,
    pub params: Vec<(String, ScalarType)>,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelAst {
    pub name: String,
    pub params: Vec<Param>,
    pub arrays: Vec<ArrayDecl>,
    pub consts: Vec<ConstArray>,
    pub helpers: Vec<Helper>,
    pub body: Vec<Stmt>,
}

impl KernelAst {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn array(&self, name: &str) -> Option<&ArrayDecl> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn const_array(&self, name: &str) -> Option<&ConstArray> {
        self.consts.iter().find(|a| a.name == name)
    }

    pub fn helper(&self, name: &str) -> Option<&Helper> {
        self.helpers.iter().find(|h| h.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    And,
    Or,
    Xor,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Xor => "^",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    /// C precedence level; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Mul | BinOp::Div | BinOp::Rem => 10,
            BinOp::Add | BinOp::Sub => 9,
            BinOp::Shl | BinOp::Shr => 8,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 7,
            BinOp::Eq | BinOp::Ne => 6,
            BinOp::And => 5,
            BinOp::Xor => 4,
            BinOp::Or => 3,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    /// Exact evaluation over unbounded integers. `None` on division by zero.
    pub fn eval(self, a: i128, b: i128) -> Option<i128> {
        Some(match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a.checked_mul(b)?,
            BinOp::Div => a.checked_div(b)?,
            BinOp::Rem => a.checked_rem(b)?,
            BinOp::Shl => {
                if !(0..=64).contains(&b) {
                    return None;
                }
                a.checked_mul(1i128 << b)?
            }
            BinOp::Shr => {
                if b < 0 {
                    return None;
                }
                a >> b.min(127)
            }
            BinOp::And => a & b,
            BinOp::Or => a | b,
            BinOp::Xor => a ^ b,
            BinOp::Eq => (a == b) as i128,
            BinOp::Ne => (a != b) as i128,
            BinOp::Lt => (a < b) as i128,
            BinOp::Le => (a <= b) as i128,
            BinOp::Gt => (a > b) as i128,
            BinOp::Ge => (a >= b) as i128,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    /// Logical not `!`.
    Not,
    /// Bitwise complement `~`.
    BitNot,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
            UnOp::BitNot => "~",
        }
    }

    pub fn eval(self, v: i128) -> i128 {
        match self {
            UnOp::Neg => -v,
            UnOp::Not => (v == 0) as i128,
            UnOp::BitNot => !v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Var(String),
    /// `*p` read of a pointer parameter.
    Deref(String),
    Index {
        array: String,
        indices: Vec<Expr>,
    },
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cast(ScalarType, Box<Expr>),
    Call {
        name: String,
        args: Vec<Expr>,
    },
    /// `lut("table", index)`
    Lut {
        table: String,
        index: Box<Expr>,
    },
    /// `ROCCC_load_prev(var)`
    LoadPrev(String),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Expr::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Pre-order visit of every subexpression.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Int(_) | Expr::Var(_) | Expr::Deref(_) | Expr::LoadPrev(_) => {}
            Expr::Index { indices, .. } => indices.iter().for_each(|e| e.walk(f)),
            Expr::Unary(_, e) | Expr::Cast(_, e) => e.walk(f),
            Expr::Lut { index, .. } => index.walk(f),
            Expr::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Call { args, .. } => args.iter().for_each(|e| e.walk(f)),
        }
    }

    /// Bottom-up rewrite: children first, then `f` on the rebuilt node.
    pub fn map(self, f: &mut dyn FnMut(Expr) -> Expr) -> Expr {
        let e = match self {
            Expr::Index { array, indices } => Expr::Index {
                array,
                indices: indices.into_iter().map(|e| e.map(f)).collect(),
            },
            Expr::Unary(op, e) => Expr::Unary(op, Box::new(e.map(f))),
            Expr::Cast(t, e) => Expr::Cast(t, Box::new(e.map(f))),
            Expr::Lut { table, index } => Expr::Lut {
                table,
                index: Box::new(index.map(f)),
            },
            Expr::Binary(op, a, b) => Expr::Binary(op, Box::new(a.map(f)), Box::new(b.map(f))),
            Expr::Call { name, args } => Expr::Call {
                name,
                args: args.into_iter().map(|e| e.map(f)).collect(),
            },
            leaf => leaf,
        };
        f(e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LValue {
    Var(String),
    Deref(String),
    Index { array: String, indices: Vec<Expr> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundOp {
    Lt,
    Le,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForLoop {
    pub var: String,
    /// Whether the index is declared in the `for` header (`for (int i = ...`).
    pub declares: bool,
    pub init: Expr,
    pub bound_op: BoundOp,
    pub bound: Expr,
    pub step: i64,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Decl {
        name: String,
        ty: ScalarType,
        init: Option<Expr>,
        span: Span,
    },
    Assign {
        target: LValue,
        /// Operator of a compound assignment such as `+=`.
        op: Option<BinOp>,
        value: Expr,
        span: Span,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
        span: Span,
    },
    For(ForLoop, Span),
    /// `ROCCC_store2next(var, value);`
    StoreNext {
        var: String,
        value: Expr,
        span: Span,
    },
    Return(Option<Expr>, Span),
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Decl { span, .. }
            | Stmt::Assign { span, .. }
            | Stmt::If { span, .. }
            | Stmt::StoreNext { span, .. }
            | Stmt::For(_, span)
            | Stmt::Return(_, span) => *span,
        }
    }

    pub fn assign(target: LValue, value: Expr) -> Stmt {
        Stmt::Assign {
            target,
            op: None,
            value,
            span: Span::default(),
        }
    }

    /// Visit every expression in this statement tree, including nested bodies.
    pub fn walk_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Stmt::Decl { init, .. } => {
                if let Some(e) = init {
                    e.walk(f)
                }
            }
            Stmt::Assign { target, value, .. } => {
                if let LValue::Index { indices, .. } = target {
                    indices.iter().for_each(|e| e.walk(f));
                }
                value.walk(f);
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                ..
            } => {
                cond.walk(f);
                then_body.iter().chain(else_body).for_each(|s| s.walk_exprs(f));
            }
            Stmt::For(l, _) => {
                l.init.walk(f);
                l.bound.walk(f);
                l.body.iter().for_each(|s| s.walk_exprs(f));
            }
            Stmt::StoreNext { value, .. } => value.walk(f),
            Stmt::Return(e, _) => {
                if let Some(e) = e {
                    e.walk(f)
                }
            }
        }
    }

    /// Rewrite every expression (lvalue subscripts included) bottom-up.
    pub fn map_exprs(self, f: &mut dyn FnMut(Expr) -> Expr) -> Stmt {
        match self {
            Stmt::Decl { name, ty, init, span } => Stmt::Decl {
                name,
                ty,
                init: init.map(|e| e.map(f)),
                span,
            },
            Stmt::Assign {
                target,
                op,
                value,
                span,
            } => {
                let target = match target {
                    LValue::Index { array, indices } => LValue::Index {
                        array,
                        indices: indices.into_iter().map(|e| e.map(f)).collect(),
                    },
                    t => t,
                };
                Stmt::Assign {
                    target,
                    op,
                    value: value.map(f),
                    span,
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                span,
            } => Stmt::If {
                cond: cond.map(f),
                then_body: then_body.into_iter().map(|s| s.map_exprs(f)).collect(),
                else_body: else_body.into_iter().map(|s| s.map_exprs(f)).collect(),
                span,
            },
            Stmt::For(l, span) => Stmt::For(
                ForLoop {
                    init: l.init.map(f),
                    bound: l.bound.map(f),
                    body: l.body.into_iter().map(|s| s.map_exprs(f)).collect(),
                    ..l
                },
                span,
            ),
            Stmt::StoreNext { var, value, span } => Stmt::StoreNext {
                var,
                value: value.map(f),
                span,
            },
            Stmt::Return(e, span) => Stmt::Return(e.map(|e| e.map(f)), span),
        }
    }
}

/// Visit statements recursively in program order.
pub fn walk_stmts<'a>(body: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in body {
        f(s);
        match s {
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                walk_stmts(then_body, f);
                walk_stmts(else_body, f);
            }
            Stmt::For(l, _) => walk_stmts(&l.body, f),
            _ => {}
        }
    }
}
