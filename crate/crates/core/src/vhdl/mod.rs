// SPDX-License-Identifier: Apache-2.0

//! VHDL-93 text generation from a linked netlist, a matching testbench,
//! and a small structural checker for the generated text.

mod emit;
mod lint;
mod names;
mod testbench;

use thiserror::Error;

pub use emit::emit;
pub use lint::{lint_vhdl, structural_counts, StructuralCounts};
pub use names::{sanitize, NameMap};
pub use testbench::{emit_testbench, TestbenchData};

/// How lookup tables appear in the generated code.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LutStyle {
    /// A constant array indexed in place.
    #[default]
    ConstantArray,
    /// A separate asynchronous-read ROM entity instantiated as a component.
    RomComponent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmitConfig {
    /// Entity name; the netlist name when `None`.
    pub entity: Option<String>,
    pub clock: String,
    pub reset: String,
    pub lut_style: LutStyle,
}

impl Default for EmitConfig {
    fn default() -> Self {
        EmitConfig {
            entity: None,
            clock: "clk".into(),
            reset: "rst".into(),
            lut_style: LutStyle::ConstantArray,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("'{0}' and '{1}' map to the same VHDL identifier '{2}'")]
    Collision(String, String, String),
    #[error("'{0}' is not a legal VHDL identifier")]
    Identifier(String),
    #[error("netlist is not emittable: {0}")]
    Netlist(String),
    #[error("vector shape: {0}")]
    VectorShape(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CORPUS;
    use crate::pipeline::compile;

    #[test]
    fn corpus_emits_lint_clean() {
        for k in &CORPUS {
            let c = compile(k.source, &k.options()).unwrap();
            for style in [LutStyle::ConstantArray, LutStyle::RomComponent] {
                let cfg = EmitConfig {
                    lut_style: style,
                    ..EmitConfig::default()
                };
                let text = emit(&c.netlist, &cfg).unwrap();
                let problems = lint_vhdl(&text);
                assert!(problems.is_empty(), "{}: {problems:?}", k.name);
                let counts = structural_counts(&text);
                assert_eq!(counts.registers, c.netlist.regs.len(), "{}", k.name);
                assert_eq!(counts.state_registers, c.netlist.fsms.len(), "{}", k.name);
                assert_eq!(counts.clocked_processes, 1, "{}", k.name);
            }
        }
    }

    #[test]
    fn corpus_testbenches_lint_clean() {
        use crate::sim::{interpret_oracle, oracle_tables, random_vectors, DEFAULT_MAX_CYCLES, DEFAULT_SEED};
        for k in &CORPUS {
            let c = compile(k.source, &k.options()).unwrap();
            let tables = oracle_tables(&c.source, &k.options().luts).unwrap();
            let v = random_vectors(&c.source, DEFAULT_SEED, 1).remove(0);
            let o = interpret_oracle(&c.source, &v, &tables).unwrap();
            let data = TestbenchData {
                vectors: v,
                expected_arrays: o.arrays,
                expected_scalars: o.scalars,
                max_cycles: DEFAULT_MAX_CYCLES,
            };
            let cfg = EmitConfig::default();
            let tb = emit_testbench(&c.netlist, &data, &cfg).unwrap();
            let text = emit(&c.netlist, &cfg).unwrap() + &tb;
            let problems = lint_vhdl(&text);
            assert!(problems.is_empty(), "{}: {problems:?}", k.name);
        }
    }

    #[test]
    fn testbench_rejects_short_vectors() {
        let k = crate::corpus::kernel("fir").unwrap();
        let c = compile(k.source, &k.options()).unwrap();
        let mut data = TestbenchData::default();
        data.vectors.memories.insert("A".into(), vec![0; 20]);
        let e = emit_testbench(&c.netlist, &data, &EmitConfig::default()).unwrap_err();
        assert!(matches!(e, EmitError::VectorShape(_)), "{e}");
    }
}
