// SPDX-License-Identifier: Apache-2.0

//! The benchmark kernels shipped with the compiler, with the options each
//! is compiled under.

use std::path::PathBuf;

use crate::dataflow::LutBinding;
use crate::frontend::ScalarType;
use crate::pipeline::CompileOptions;
use crate::transforms::{UnrollDirective, UnrollFactor};

pub struct CorpusKernel {
    pub name: &'static str,
    pub source: &'static str,
    /// Loops unrolled completely on top of the default policy.
    pub unroll_full: &'static [&'static str],
    /// Whether the kernel reads through a sliding window (stride > 0).
    pub windowed: bool,
}

pub const CORPUS: [CorpusKernel; 7] = [
    CorpusKernel {
        name: "fir",
        source: include_str!("../corpus/fir.c"),
        unroll_full: &[],
        windowed: true,
    },
    CorpusKernel {
        name: "accumulator",
        source: include_str!("../corpus/accumulator.c"),
        unroll_full: &[],
        windowed: true,
    },
    CorpusKernel {
        name: "bit_correlator",
        source: include_str!("../corpus/bit_correlator.c"),
        unroll_full: &[],
        windowed: true,
    },
    CorpusKernel {
        name: "mul_acc",
        source: include_str!("../corpus/mul_acc.c"),
        unroll_full: &[],
        windowed: true,
    },
    CorpusKernel {
        name: "dct8",
        source: include_str!("../corpus/dct8.c"),
        unroll_full: &["k"],
        windowed: false,
    },
    CorpusKernel {
        name: "lut_pdf",
        source: include_str!("../corpus/lut_pdf.c"),
        unroll_full: &[],
        windowed: true,
    },
    CorpusKernel {
        name: "lut_cos",
        source: include_str!("../corpus/lut_cos.c"),
        unroll_full: &[],
        windowed: true,
    },
];

/// Directory holding the corpus sources, tables and golden files.
pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn kernel(name: &str) -> Option<&'static CorpusKernel> {
    CORPUS.iter().find(|k| k.name == name)
}

/// Table bindings used by the corpus.
pub fn corpus_luts() -> Vec<LutBinding> {
    vec![LutBinding::file(
        "pdf",
        corpus_dir().join("pdf.txt"),
        ScalarType::new(true, 16),
    )]
}

impl CorpusKernel {
    pub fn options(&self) -> CompileOptions {
        CompileOptions {
            unroll: self
                .unroll_full
                .iter()
                .map(|v| UnrollDirective {
                    var: v.to_string(),
                    factor: UnrollFactor::Full,
                })
                .collect(),
            luts: corpus_luts(),
            ..CompileOptions::default()
        }
    }
}
