// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;

type PResult<T> = Result<T, FrontendError>;

/// Parse a kernel source file. The last function in the file is the kernel
/// and must return `void`; earlier functions are helpers.
pub fn parse(source: &str) -> PResult<KernelAst> {
    let toks = tokenize(source)?;
    let mut p = Parser { toks, pos: 0 };
    let mut consts = Vec::new();
    let mut funcs: Vec<(Function, Span)> = Vec::new();
    while !p.at_eof() {
        let span = p.span();
        if p.eat_ident("const") {
            consts.push(p.const_array()?);
        } else {
            funcs.push((p.function()?, span));
        }
    }
    let (kernel, kspan) = funcs.pop().ok_or_else(|| FrontendError::syntax(1, 1, "no kernel function found"))?;
    if kernel.ret.is_some() {
        return Err(FrontendError::unsupported(
            "kernel function must return void",
            kspan.line,
            kspan.col,
        ));
    }
    let mut helpers = Vec::new();
    for (f, span) in funcs {
        let ret = f.ret.ok_or_else(|| FrontendError::unsupported("multiple kernels in one file", span.line, span.col))?;
        let mut params = Vec::new();
        for fp in f.params {
            match fp {
                FuncParam::Scalar { name, ty, pointer: false } => params.push((name, ty)),
                _ => {
                    return Err(FrontendError::unsupported(
                        "helper functions take scalar parameters only",
                        span.line,
                        span.col,
                    ))
                }
            }
        }
        helpers.push(Helper {
            name: f.name,
            ret,
            params,
            body: f.body,
        });
    }
    let mut params = Vec::new();
    let mut arrays = Vec::new();
    for fp in kernel.params {
        match fp {
            FuncParam::Scalar { name, ty, pointer } => params.push(Param {
                name,
                ty,
                pointer,
                direction: if pointer { Direction::Out } else { Direction::In },
            }),
            FuncParam::Array { name, element, extents } => arrays.push(ArrayDecl {
                name,
                element,
                extents,
                direction: Direction::In,
            }),
        }
    }
    let ast = KernelAst {
        name: kernel.name,
        params,
        arrays,
        consts,
        helpers,
        body: kernel.body,
    };
    reject_recursion(&ast, kspan)?;
    Ok(ast)
}

fn calls_in(body: &[Stmt]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in body {
        s.walk_exprs(&mut |e| {
            if let Expr::Call { name, .. } = e {
                out.insert(name.clone());
            }
        });
    }
    out
}

/// Reject any cycle in the call graph, including self-calls of the kernel.
pub(crate) fn reject_recursion(ast: &KernelAst, span: Span) -> PResult<()> {
    let mut graph: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    graph.insert(&ast.name, calls_in(&ast.body));
    for h in &ast.helpers {
        graph.insert(&h.name, calls_in(&h.body));
    }
    // Colors: 0 unvisited, 1 on stack, 2 done.
    fn dfs<'a>(n: &'a str, g: &'a BTreeMap<&'a str, BTreeSet<String>>, color: &mut BTreeMap<&'a str, u8>) -> bool {
        match color.get(n) {
            Some(1) => return true,
            Some(2) => return false,
            _ => {}
        }
        color.insert(n, 1);
        if let Some(succ) = g.get(n) {
            for s in succ {
                if let Some((k, _)) = g.get_key_value(s.as_str()) {
                    if dfs(k, g, color) {
                        return true;
                    }
                }
            }
        }
        color.insert(n, 2);
        false
    }
    let mut color = BTreeMap::new();
    for k in graph.keys() {
        if dfs(k, &graph, &mut color) {
            return Err(FrontendError::Unsupported {
                construct: "recursion".into(),
                span,
            });
        }
    }
    Ok(())
}

enum FuncParam {
    Scalar { name: String, ty: ScalarType, pointer: bool },
    Array { name: String, element: ScalarType, extents: Vec<usize> },
}

struct Function {
    name: String,
    ret: Option<ScalarType>,
    params: Vec<FuncParam>,
    body: Vec<Stmt>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

const UNSUPPORTED_KEYWORDS: &[(&str, &str)] = &[
    ("while", "while loop"),
    ("do", "do-while loop"),
    ("goto", "goto"),
    ("switch", "switch statement"),
    ("break", "break"),
    ("continue", "continue"),
    ("float", "floating point"),
    ("double", "floating point"),
    ("struct", "struct"),
    ("union", "union"),
    ("static", "static storage"),
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        let t = &self.toks[self.pos];
        Span { line: t.line, col: t.col }
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let s = self.span();
        Err(FrontendError::syntax(s.line, s.col, msg))
    }

    fn unsupported<T>(&self, what: &str) -> PResult<T> {
        let s = self.span();
        Err(FrontendError::unsupported(what, s.line, s.col))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected '{p}', found {}", describe(self.peek())))
        }
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(q) if q == s)
    }

    fn eat_ident(&mut self, s: &str) -> bool {
        if self.is_ident(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<String> {
        self.check_unsupported_keyword()?;
        match self.peek().clone() {
            Tok::Ident(s) if type_keyword(&s) => self.err(format!("unexpected type keyword '{s}'")),
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn int_lit(&mut self) -> PResult<i64> {
        let neg = self.eat_punct("-");
        match self.bump() {
            Tok::Int(v) => Ok(if neg { -v } else { v }),
            t => {
                self.pos -= 1;
                self.err(format!("expected integer literal, found {}", describe(&t)))
            }
        }
    }

    fn check_unsupported_keyword(&self) -> PResult<()> {
        if let Tok::Ident(s) = self.peek() {
            if let Some((_, what)) = UNSUPPORTED_KEYWORDS.iter().find(|(k, _)| k == s) {
                return self.unsupported(what);
            }
        }
        Ok(())
    }

    fn starts_type(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if type_keyword(s) || s == "const")
    }

    /// Parse a type, returning `None` for `void`.
    fn ty(&mut self) -> PResult<Option<ScalarType>> {
        self.check_unsupported_keyword()?;
        while self.eat_ident("const") || self.eat_ident("volatile") {}
        let name = match self.peek().clone() {
            Tok::Ident(s) => s,
            t => return self.err(format!("expected type, found {}", describe(&t))),
        };
        if name == "void" {
            self.bump();
            return Ok(None);
        }
        if let Some(t) = fixed_width_type(&name) {
            self.bump();
            return match t {
                Some(t) => Ok(Some(t)),
                None => self.unsupported("integer type wider than 32 bits"),
            };
        }
        let mut signed = true;
        let mut explicit_sign = false;
        if name == "unsigned" || name == "signed" {
            signed = name == "signed";
            explicit_sign = true;
            self.bump();
        }
        let base = match self.peek().clone() {
            Tok::Ident(s) if ["int", "char", "short", "long", "bool", "_Bool"].contains(&s.as_str()) => {
                self.bump();
                s
            }
            _ if explicit_sign => "int".to_string(),
            t => return self.err(format!("expected type, found {}", describe(&t))),
        };
        let width = match base.as_str() {
            "char" => 8,
            "short" => {
                self.eat_ident("int");
                16
            }
            "long" => {
                if self.is_ident("long") {
                    return self.unsupported("integer type wider than 32 bits");
                }
                self.eat_ident("int");
                32
            }
            "bool" | "_Bool" => {
                signed = false;
                1
            }
            _ => 32,
        };
        Ok(Some(ScalarType::new(signed, width)))
    }

    fn const_array(&mut self) -> PResult<ConstArray> {
        let element = match self.ty()? {
            Some(t) => t,
            None => return self.err("const table of void"),
        };
        let name = self.ident()?;
        let mut extents = Vec::new();
        while self.eat_punct("[") {
            extents.push(self.extent()?);
            self.expect_punct("]")?;
        }
        if extents.is_empty() || extents.len() > 2 {
            return self.unsupported("const tables must have one or two dimensions");
        }
        self.expect_punct("=")?;
        let mut values = Vec::new();
        self.init_list(&mut values)?;
        self.expect_punct(";")?;
        let n: usize = extents.iter().product();
        if values.len() != n {
            return self.err(format!("const table '{name}' has {} initializers, expected {n}", values.len()));
        }
        for &v in &values {
            if !element.contains(v as i128) {
                return self.err(format!("initializer {v} does not fit {}", element.c_name()));
            }
        }
        Ok(ConstArray {
            name,
            element,
            extents,
            values,
        })
    }

    fn init_list(&mut self, out: &mut Vec<i64>) -> PResult<()> {
        self.expect_punct("{")?;
        loop {
            if self.is_punct("{") {
                self.init_list(out)?;
            } else {
                out.push(self.int_lit()?);
            }
            if !self.eat_punct(",") || self.is_punct("}") {
                break;
            }
        }
        self.expect_punct("}")
    }

    fn extent(&mut self) -> PResult<usize> {
        let e = self.expr()?;
        match const_eval(&e) {
            Some(v) if v >= 1 => Ok(v as usize),
            _ => self.err("array extent must be a positive integer constant"),
        }
    }

    fn function(&mut self) -> PResult<Function> {
        let ret = self.ty()?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !(self.is_ident("void") && matches!(self.peek_at(1), Tok::Punct(")"))) {
            while !self.is_punct(")") {
                let ty = match self.ty()? {
                    Some(t) => t,
                    None => return self.err("void parameter"),
                };
                let pointer = self.eat_punct("*");
                if pointer && self.is_punct("*") {
                    return self.unsupported("pointer to pointer");
                }
                let pname = self.ident()?;
                let mut extents = Vec::new();
                while self.eat_punct("[") {
                    extents.push(self.extent()?);
                    self.expect_punct("]")?;
                }
                if !extents.is_empty() {
                    if pointer {
                        return self.unsupported("array of pointers");
                    }
                    if extents.len() > 2 {
                        return self.unsupported("arrays with more than two dimensions");
                    }
                    params.push(FuncParam::Array {
                        name: pname,
                        element: ty,
                        extents,
                    });
                } else {
                    params.push(FuncParam::Scalar {
                        name: pname,
                        ty,
                        pointer,
                    });
                }
                if !self.eat_punct(",") {
                    break;
                }
            }
        } else {
            self.bump();
        }
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let body = self.block_rest()?;
        Ok(Function {
            name,
            ret,
            params,
            body,
        })
    }

    /// Statements up to and including the closing brace.
    fn block_rest(&mut self) -> PResult<Vec<Stmt>> {
        let mut body = Vec::new();
        while !self.eat_punct("}") {
            if self.at_eof() {
                return self.err("unexpected end of file, expected '}'");
            }
            self.stmt(&mut body)?;
        }
        Ok(body)
    }

    fn body(&mut self) -> PResult<Vec<Stmt>> {
        if self.eat_punct("{") {
            self.block_rest()
        } else {
            let mut v = Vec::new();
            self.stmt(&mut v)?;
            Ok(v)
        }
    }

    fn stmt(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        self.check_unsupported_keyword()?;
        let span = self.span();
        if self.eat_punct("{") {
            out.extend(self.block_rest()?);
            return Ok(());
        }
        if self.eat_punct(";") {
            return Ok(());
        }
        if self.starts_type() {
            let ty = match self.ty()? {
                Some(t) => t,
                None => return self.err("void local variable"),
            };
            loop {
                let span = self.span();
                let name = self.ident()?;
                if self.is_punct("[") {
                    return self.unsupported("local arrays");
                }
                let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
                out.push(Stmt::Decl { name, ty, init, span });
                if !self.eat_punct(",") {
                    break;
                }
            }
            return self.expect_punct(";");
        }
        if self.eat_ident("if") {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then_body = self.body()?;
            let else_body = if self.eat_ident("else") { self.body()? } else { Vec::new() };
            out.push(Stmt::If {
                cond,
                then_body,
                else_body,
                span,
            });
            return Ok(());
        }
        if self.eat_ident("for") {
            out.push(Stmt::For(self.for_loop()?, span));
            return Ok(());
        }
        if self.eat_ident("return") {
            let e = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            out.push(Stmt::Return(e, span));
            return Ok(());
        }
        if self.eat_ident("ROCCC_store2next") {
            self.expect_punct("(")?;
            let var = self.ident()?;
            self.expect_punct(",")?;
            let value = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            out.push(Stmt::StoreNext { var, value, span });
            return Ok(());
        }
        let (target, op, value) = self.simple_assign()?;
        self.expect_punct(";")?;
        out.push(Stmt::Assign {
            target,
            op,
            value,
            span,
        });
        Ok(())
    }

    /// Assignment without trailing `;`: `x = e`, `x op= e`, `x++`, `++x`.
    fn simple_assign(&mut self) -> PResult<(LValue, Option<BinOp>, Expr)> {
        if self.eat_punct("++") {
            return Ok((self.lvalue()?, Some(BinOp::Add), Expr::Int(1)));
        }
        if self.eat_punct("--") {
            return Ok((self.lvalue()?, Some(BinOp::Sub), Expr::Int(1)));
        }
        if let Tok::Ident(name) = self.peek().clone() {
            if matches!(self.peek_at(1), Tok::Punct("(")) {
                return self.unsupported(&format!("call statement '{name}(...)'"));
            }
        }
        let target = self.lvalue()?;
        if self.eat_punct("++") {
            return Ok((target, Some(BinOp::Add), Expr::Int(1)));
        }
        if self.eat_punct("--") {
            return Ok((target, Some(BinOp::Sub), Expr::Int(1)));
        }
        let op = match self.bump() {
            Tok::Punct("=") => None,
            Tok::Punct("+=") => Some(BinOp::Add),
            Tok::Punct("-=") => Some(BinOp::Sub),
            Tok::Punct("*=") => Some(BinOp::Mul),
            Tok::Punct("/=") => Some(BinOp::Div),
            Tok::Punct("%=") => Some(BinOp::Rem),
            Tok::Punct("<<=") => Some(BinOp::Shl),
            Tok::Punct(">>=") => Some(BinOp::Shr),
            Tok::Punct("&=") => Some(BinOp::And),
            Tok::Punct("|=") => Some(BinOp::Or),
            Tok::Punct("^=") => Some(BinOp::Xor),
            t => {
                self.pos -= 1;
                return self.err(format!("expected assignment, found {}", describe(&t)));
            }
        };
        let value = self.expr()?;
        Ok((target, op, value))
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        if self.eat_punct("*") {
            return Ok(LValue::Deref(self.ident()?));
        }
        let name = self.ident()?;
        if self.is_punct("[") {
            let mut indices = Vec::new();
            while self.eat_punct("[") {
                indices.push(self.expr()?);
                self.expect_punct("]")?;
            }
            return Ok(LValue::Index { array: name, indices });
        }
        Ok(LValue::Var(name))
    }

    fn for_loop(&mut self) -> PResult<ForLoop> {
        self.expect_punct("(")?;
        let declares = if self.starts_type() {
            self.ty()?;
            true
        } else {
            false
        };
        let var = self.ident()?;
        self.expect_punct("=")?;
        let init = self.expr()?;
        self.expect_punct(";")?;
        let cv = self.ident()?;
        if cv != var {
            return self.unsupported("loop condition must test the loop index");
        }
        let bound_op = if self.eat_punct("<") {
            BoundOp::Lt
        } else if self.eat_punct("<=") {
            BoundOp::Le
        } else {
            return self.unsupported("loop condition other than '<' or '<='");
        };
        let bound = self.expr()?;
        self.expect_punct(";")?;
        let step_span = self.span();
        let (target, op, value) = self.simple_assign()?;
        let step = match (target, op, value) {
            (LValue::Var(v), Some(BinOp::Add), Expr::Int(c)) if v == var => c,
            (LValue::Var(v), None, Expr::Binary(BinOp::Add, a, b)) if v == var => match (*a, *b) {
                (Expr::Var(x), Expr::Int(c)) | (Expr::Int(c), Expr::Var(x)) if x == var => c,
                _ => return Err(FrontendError::unsupported("loop step must be i = i + constant", step_span.line, step_span.col)),
            },
            _ => return Err(FrontendError::unsupported("loop step must be i = i + constant", step_span.line, step_span.col)),
        };
        if step < 1 {
            return Err(FrontendError::unsupported("non-positive loop step", step_span.line, step_span.col));
        }
        self.expect_punct(")")?;
        let body = self.body()?;
        Ok(ForLoop {
            var,
            declares,
            init,
            bound_op,
            bound,
            step,
            body,
        })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binop(&self) -> PResult<Option<BinOp>> {
        Ok(match self.peek() {
            Tok::Punct(p) => match *p {
                "+" => Some(BinOp::Add),
                "-" => Some(BinOp::Sub),
                "*" => Some(BinOp::Mul),
                "/" => Some(BinOp::Div),
                "%" => Some(BinOp::Rem),
                "<<" => Some(BinOp::Shl),
                ">>" => Some(BinOp::Shr),
                "&" => Some(BinOp::And),
                "|" => Some(BinOp::Or),
                "^" => Some(BinOp::Xor),
                "==" => Some(BinOp::Eq),
                "!=" => Some(BinOp::Ne),
                "<" => Some(BinOp::Lt),
                "<=" => Some(BinOp::Le),
                ">" => Some(BinOp::Gt),
                ">=" => Some(BinOp::Ge),
                "&&" => return self.unsupported("logical '&&'"),
                "||" => return self.unsupported("logical '||'"),
                "?" => return self.unsupported("conditional operator"),
                "." => return self.unsupported("floating point"),
                _ => None,
            },
            _ => None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop()? {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("-") {
            if let Tok::Int(v) = *self.peek() {
                // Keep `-5` a single literal but leave `-5 * x` grouped as (-5) * x.
                self.bump();
                return Ok(Expr::Int(-v));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat_punct("+") {
            return self.unary();
        }
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat_punct("~") {
            return Ok(Expr::Unary(UnOp::BitNot, Box::new(self.unary()?)));
        }
        if self.eat_punct("*") {
            return Ok(Expr::Deref(self.ident()?));
        }
        if self.is_punct("&") {
            return self.unsupported("address-of operator");
        }
        if self.is_punct("++") || self.is_punct("--") {
            return self.unsupported("increment inside expression");
        }
        if self.is_punct("(") {
            if let Tok::Ident(s) = self.peek_at(1) {
                if type_keyword(s) || s == "const" {
                    self.bump();
                    let t = match self.ty()? {
                        Some(t) => t,
                        None => return self.err("cast to void"),
                    };
                    if self.is_punct("*") {
                        return self.unsupported("pointer cast");
                    }
                    self.expect_punct(")")?;
                    return Ok(Expr::Cast(t, Box::new(self.unary()?)));
                }
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        self.check_unsupported_keyword()?;
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                if self.is_punct(".") {
                    return self.unsupported("floating point");
                }
                Ok(Expr::Int(v))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let name = self.ident().map(|_| name)?;
                if self.eat_punct("(") {
                    return self.call(name);
                }
                if self.is_punct("[") {
                    let mut indices = Vec::new();
                    while self.eat_punct("[") {
                        indices.push(self.expr()?);
                        self.expect_punct("]")?;
                    }
                    return Ok(Expr::Index { array: name, indices });
                }
                if self.is_punct("++") || self.is_punct("--") {
                    return self.unsupported("increment inside expression");
                }
                Ok(Expr::Var(name))
            }
            Tok::Str(_) => self.err("string literal outside lut()"),
            t => self.err(format!("expected expression, found {}", describe(&t))),
        }
    }

    fn call(&mut self, name: String) -> PResult<Expr> {
        match name.as_str() {
            "lut" => {
                let table = match self.bump() {
                    Tok::Str(s) => s,
                    _ => return self.err("lut() expects a table name string as first argument"),
                };
                self.expect_punct(",")?;
                let index = self.expr()?;
                self.expect_punct(")")?;
                Ok(Expr::Lut {
                    table,
                    index: Box::new(index),
                })
            }
            "ROCCC_load_prev" => {
                let v = self.ident()?;
                self.expect_punct(")")?;
                Ok(Expr::LoadPrev(v))
            }
            "ROCCC_store2next" => self.unsupported("ROCCC_store2next inside an expression"),
            _ => {
                let mut args = Vec::new();
                while !self.is_punct(")") {
                    args.push(self.expr()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(")")?;
                Ok(Expr::Call { name, args })
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(v) => format!("'{v}'"),
        Tok::Str(s) => format!("\"{s}\""),
        Tok::Punct(p) => format!("'{p}'"),
        Tok::Eof => "end of file".into(),
    }
}

fn type_keyword(s: &str) -> bool {
    matches!(
        s,
        "void" | "int" | "unsigned" | "signed" | "char" | "short" | "long" | "bool" | "_Bool"
    ) || fixed_width_type(s).is_some()
}

/// `intN_t` / `uintN_t`. Outer `None`: not such a name; inner `None`: too wide.
fn fixed_width_type(s: &str) -> Option<Option<ScalarType>> {
    let (signed, rest) = if let Some(r) = s.strip_prefix("uint") {
        (false, r)
    } else if let Some(r) = s.strip_prefix("int") {
        (true, r)
    } else {
        return None;
    };
    let digits = rest.strip_suffix("_t")?;
    let w: u32 = digits.parse().ok()?;
    if w == 0 {
        return None;
    }
    if w > 32 {
        return Some(None);
    }
    Some(Some(ScalarType::new(signed, w as u8)))
}

/// Evaluate an expression made only of integer literals.
pub(crate) fn const_eval(e: &Expr) -> Option<i64> {
    let v = match e {
        Expr::Int(v) => *v as i128,
        Expr::Unary(op, a) => op.eval(const_eval(a)? as i128),
        Expr::Binary(op, a, b) => op.eval(const_eval(a)? as i128, const_eval(b)? as i128)?,
        Expr::Cast(t, a) => t.wrap(const_eval(a)? as i128),
        _ => return None,
    };
    i64::try_from(v).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIR: &str = "void fir(int A[21], int C[17]) {
        int i;
        for (i=0; i<17; i=i+1) {
            C[i] = 3*A[i] + 5*A[i+1] + 7*A[i+2] + 9*A[i+3] - A[i+4];
        }
    }";

    fn count_loads(body: &[Stmt]) -> usize {
        let mut n = 0;
        for s in body {
            s.walk_exprs(&mut |e| {
                if matches!(e, Expr::Index { .. }) {
                    n += 1
                }
            });
        }
        n
    }

    #[test]
    fn fir_shape() {
        let ast = parse(FIR).unwrap();
        assert_eq!(ast.arrays.len(), 2);
        let loops: Vec<_> = ast.body.iter().filter(|s| matches!(s, Stmt::For(..))).collect();
        assert_eq!(loops.len(), 1);
        let Stmt::For(l, _) = loops[0] else { unreachable!() };
        assert_eq!(l.body.len(), 1);
        assert!(matches!(&l.body[0], Stmt::Assign { target: LValue::Index { array, .. }, .. } if array == "C"));
        assert_eq!(count_loads(&l.body), 5);
    }

    #[test]
    fn identity_kernel() {
        let ast = parse("void k(int a, int* out){ *out = a; }").unwrap();
        assert_eq!(ast.body.len(), 1);
        assert!(matches!(&ast.body[0], Stmt::Assign { target: LValue::Deref(o), .. } if o == "out"));
        assert!(ast.params[1].pointer);
    }

    #[test]
    fn recursion_rejected() {
        let src = "int f(int x) { return f(x); }\nvoid k(int a, int* o) { *o = f(a); }";
        match parse(src) {
            Err(FrontendError::Unsupported { construct, .. }) => assert_eq!(construct, "recursion"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kernel_self_call_rejected() {
        let src = "void k(int a, int* o) { *o = k(a); }";
        assert!(matches!(parse(src), Err(FrontendError::Unsupported { construct, .. }) if construct == "recursion"));
    }

    #[test]
    fn while_rejected() {
        let e = parse("void k(int a, int* o) { while (a) { *o = a; } }").unwrap_err();
        assert!(matches!(e, FrontendError::Unsupported { construct, .. } if construct == "while loop"));
    }

    #[test]
    fn syntax_error_position() {
        match parse("void k(int a, int* o) {\n  *o = a +;\n}") {
            Err(FrontendError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 11)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fixed_width_types() {
        let ast = parse("void k(uint12_t a, int19_t* o) { *o = a; }").unwrap();
        assert_eq!(ast.params[0].ty, ScalarType::new(false, 12));
        assert_eq!(ast.params[1].ty, ScalarType::new(true, 19));
        assert!(parse("void k(uint33_t a, int* o) { *o = a; }").is_err());
    }

    #[test]
    fn const_table_nested_init() {
        let ast = parse("const int T[2][2] = {{1, -2}, {3, 4}};\nvoid k(int a, int* o) { *o = T[1][0]; }").unwrap();
        assert_eq!(ast.consts[0].values, vec![1, -2, 3, 4]);
        assert_eq!(ast.consts[0].get(&[1, 0]), Some(3));
    }

    #[test]
    fn intrinsics() {
        let src = "void k(uint10_t A[4], int* o) { int s = 0; int i; for (i = 0; i < 4; i++) { s = ROCCC_load_prev(s); ROCCC_store2next(s, s + lut(\"cos\", A[i])); } *o = s; }";
        let ast = parse(src).unwrap();
        let mut saw = (false, false, false);
        walk_stmts(&ast.body, &mut |s| {
            if matches!(s, Stmt::StoreNext { .. }) {
                saw.0 = true
            }
            s.walk_exprs(&mut |e| match e {
                Expr::Lut { .. } => saw.1 = true,
                Expr::LoadPrev(_) => saw.2 = true,
                _ => {}
            });
        });
        assert_eq!(saw, (true, true, true));
    }

    #[test]
    fn step_forms() {
        for step in ["i++", "i += 2", "i = i + 3", "++i", "i = 1 + i"] {
            let src = format!("void k(int A[8], int* o) {{ int i; for (i = 0; i < 8; {step}) {{ *o = A[i]; }} }}");
            parse(&src).unwrap();
        }
        assert!(parse("void k(int A[8], int* o) { int i; for (i = 0; i < 8; i = i * 2) { *o = A[i]; } }").is_err());
    }
}
