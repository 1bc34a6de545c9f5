// SPDX-License-Identifier: Apache-2.0

//! Compiler from a restricted C dialect to pipelined RTL, with a
//! cycle-accurate simulator and a reference interpreter.

pub mod batch;
pub mod corpus;
pub mod dataflow;
pub mod frontend;
pub mod memif;
pub mod netlist;
pub mod pipeline;
pub mod report;
pub mod sim;
pub mod transforms;
pub mod vhdl;

#[cfg(test)]
pub(crate) mod test_util {
    use crate::frontend::{check_restrictions, inline_calls, parse, KernelAst};
    use crate::transforms::{fold_constants, scalar_replace, unroll, ScalarizedKernel, DEFAULT_UNROLL_LIMIT};

    pub(crate) fn prepare(src: &str) -> KernelAst {
        let ast = check_restrictions(&parse(src).unwrap()).unwrap();
        let ast = inline_calls(&ast).unwrap();
        let ast = fold_constants(&ast).unwrap();
        unroll(&ast, &[], DEFAULT_UNROLL_LIMIT).unwrap()
    }

    pub(crate) fn scalarized(src: &str) -> ScalarizedKernel {
        scalar_replace(&prepare(src)).unwrap()
    }
}
