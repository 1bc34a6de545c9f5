// SPDX-License-Identifier: Apache-2.0

//! Parsing and validation of the restricted C kernel dialect.
//!
//! The dialect covers `for` loops with `<`/`<=` bounds and constant positive
//! steps, `if`/`else`, plain and compound assignment, integer literals, the
//! binary operators `+ - * / % << >> & | ^` and comparisons, unary `- ! ~`,
//! casts to integer types up to 32 bits, file-scope `const` tables, and
//! scalar helper functions that are inlined at their call sites. The
//! intrinsics `lut("table", index)`, `ROCCC_load_prev(var)` and
//! `ROCCC_store2next(var, value)` are kept as dedicated nodes.

pub mod ast;
mod inline;
mod lexer;
mod parser;
mod printer;
mod restrict;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use inline::inline_calls;
pub use parser::parse;
pub use printer::{print_expr, print_kernel, print_stmts};
pub use restrict::{affine_of, check_restrictions, Affine};

/// One finding of the restriction checker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("{}: unsupported construct: {construct}", span)]
    Unsupported { construct: String, span: Span },
    #[error("{} restriction violation(s): {}", .0.len(), join(.0))]
    Restriction(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl FrontendError {
    pub(crate) fn syntax(line: u32, col: u32, message: impl Into<String>) -> Self {
        FrontendError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    pub(crate) fn unsupported(construct: impl Into<String>, line: u32, col: u32) -> Self {
        FrontendError::Unsupported {
            construct: construct.into(),
            span: Span { line, col },
        }
    }

    pub(crate) fn restriction(span: Span, message: impl Into<String>) -> Self {
        FrontendError::Restriction(vec![Violation {
            span,
            message: message.into(),
        }])
    }

    /// Diagnostics in `file:line:col: severity: message` form, one per line.
    pub fn diagnostics(&self, file: &str) -> Vec<String> {
        match self {
            FrontendError::Syntax { line, col, message } => {
                vec![format!("{file}:{line}:{col}: error: {message}")]
            }
            FrontendError::Unsupported { construct, span } => {
                vec![format!("{file}:{}:{}: error: unsupported construct: {construct}", span.line, span.col)]
            }
            FrontendError::Restriction(vs) => vs
                .iter()
                .map(|v| format!("{file}:{}:{}: error: {}", v.span.line, v.span.col, v.message))
                .collect(),
        }
    }
}
