// SPDX-License-Identifier: Apache-2.0

//! Cycle-accurate netlist simulation, the reference interpreter, and test
//! vector handling.

mod engine;
mod oracle;
mod vectors;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::wrap_to;
use crate::netlist::{MemKind, Memory, Netlist};

pub use engine::simulate;
pub use oracle::{interpret_oracle, oracle_tables, OracleError, OracleOutputs};
pub use vectors::{random_vectors, seed_from_env, TestVectors, DEFAULT_SEED};

pub const DEFAULT_MAX_CYCLES: u64 = 100_000;

/// Contents of one memory, one entry per word. `None` marks a cell never
/// written.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryImage {
    pub name: String,
    pub word_width: u32,
    pub contents: Vec<Option<i64>>,
}

impl MemoryImage {
    /// Pack elements into bus words, element `j` of a word in bits
    /// `j*w .. (j+1)*w`.
    pub fn pack(mem: &Memory, elements: &[i64]) -> Result<Self, SimError> {
        if elements.len() != mem.elements {
            return Err(SimError::Input(format!(
                "memory '{}' holds {} elements, {} given",
                mem.name,
                mem.elements,
                elements.len()
            )));
        }
        let w = mem.element_width;
        let e = mem.elements_per_word();
        let mut contents = vec![Some(0i64); mem.depth];
        for (k, &v) in elements.iter().enumerate() {
            let ty_min = if mem.element_signed { -(1i128 << (w - 1)) } else { 0 };
            let ty_max = if mem.element_signed { (1i128 << (w - 1)) - 1 } else { (1i128 << w) - 1 };
            if (v as i128) < ty_min || (v as i128) > ty_max {
                return Err(SimError::Input(format!(
                    "value {v} at {}[{k}] does not fit {w} bits",
                    mem.name
                )));
            }
            let bits = wrap_to(v as i128, w, false);
            let word = contents[k / e].as_mut().unwrap();
            *word = (*word as i128 | (bits << ((k % e) as u32 * w))) as i64;
        }
        Ok(MemoryImage {
            name: mem.name.clone(),
            word_width: mem.word_width,
            contents,
        })
    }

    /// Element view of a memory; unwritten words give unwritten elements.
    pub fn unpack(&self, mem: &Memory) -> Vec<Option<i64>> {
        let w = mem.element_width;
        let e = mem.elements_per_word();
        (0..mem.elements)
            .map(|k| {
                self.contents[k / e].map(|word| {
                    let bits = (word as u64 as i128) >> ((k % e) as u32 * w);
                    wrap_to(bits, w, mem.element_signed) as i64
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub max_cycles: u64,
    pub record_trace: bool,
    pub inputs: Vec<MemoryImage>,
    pub scalars: BTreeMap<String, i64>,
}

impl SimConfig {
    /// Configuration for a netlist from element-level test vectors.
    pub fn from_vectors(nl: &Netlist, v: &TestVectors) -> Result<Self, SimError> {
        let mut inputs = Vec::new();
        for m in nl.mems.iter().filter(|m| m.kind == MemKind::Read) {
            let elements = v
                .memories
                .get(&m.name)
                .ok_or_else(|| SimError::Input(format!("no contents for input array '{}'", m.name)))?;
            inputs.push(MemoryImage::pack(m, elements)?);
        }
        Ok(SimConfig {
            max_cycles: DEFAULT_MAX_CYCLES,
            record_trace: true,
            inputs,
            scalars: v.scalars.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("netlist is not simulable: {0}")]
    Netlist(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("done not asserted within {0} cycles")]
    Timeout(u64),
    #[error("address {addr} out of range for memory '{mem}'")]
    Address { mem: String, addr: i64 },
    #[error("read of unwritten cell {mem}[{index}]")]
    XValue { mem: String, index: usize },
}

/// A window handed to the datapath: lane values of one array at one firing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowExport {
    pub array: String,
    pub lanes: Vec<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: u64,
    /// Read requests issued this cycle: memory and word address.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub reads: Vec<(String, i64)>,
    /// Writes committed at the end of this cycle: memory, address, value.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub writes: Vec<(String, i64, i64)>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub windows: Vec<WindowExport>,
    pub fire: bool,
    pub result_valid: bool,
    pub done: bool,
}

/// Per-cycle record of a simulation. Holds one record per simulated cycle
/// when recording is enabled.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimTrace {
    pub cycles: u64,
    pub records: Vec<CycleRecord>,
    /// Elements per word and element count of each input memory.
    pub inputs: BTreeMap<String, (usize, usize)>,
}

impl SimTrace {
    /// One JSON object per cycle.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Result of a completed simulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    pub trace: SimTrace,
    pub memories: Vec<MemoryImage>,
    pub scalars: BTreeMap<String, i64>,
}

impl SimResult {
    pub fn memory(&self, name: &str) -> Option<&MemoryImage> {
        self.memories.iter().find(|m| m.name == name)
    }

    /// Element contents of every output array, failing on any unwritten cell.
    pub fn output_elements(&self, nl: &Netlist) -> Result<BTreeMap<String, Vec<i64>>, SimError> {
        let mut out = BTreeMap::new();
        for m in nl.mems.iter().filter(|m| m.kind == MemKind::Write) {
            let img = self.memory(&m.name).expect("every output memory has an image");
            let vals = img
                .unpack(m)
                .into_iter()
                .enumerate()
                .map(|(index, v)| {
                    v.ok_or_else(|| SimError::XValue {
                        mem: m.name.clone(),
                        index,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.insert(m.name.clone(), vals);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub element_reads: BTreeMap<String, usize>,
    pub bus_words: BTreeMap<String, usize>,
    /// Addresses requested more than once, per array.
    pub repeated_words: BTreeMap<String, usize>,
    pub first_result_cycle: Option<u64>,
    pub total_cycles: u64,
    pub firings: usize,
    pub results: usize,
    pub stores: usize,
    /// Results per cycle between the first and the last result.
    pub results_per_cycle: f64,
    pub outputs_per_firing: f64,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, n) in &self.element_reads {
            writeln!(f, "reads[{a}]={n} words={}", self.bus_words[a])?;
        }
        writeln!(f, "cycles={}", self.total_cycles)?;
        match self.first_result_cycle {
            Some(c) => writeln!(f, "first_result={c}")?,
            None => writeln!(f, "first_result=none")?,
        }
        writeln!(f, "firings={} results={} stores={}", self.firings, self.results, self.stores)?;
        writeln!(f, "results/cycle={}", fmt_ratio(self.results_per_cycle))?;
        write!(f, "outputs/firing={}", fmt_ratio(self.outputs_per_firing))
    }
}

fn fmt_ratio(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.3}")
    }
}

/// Summarize a recorded trace.
pub fn measure(trace: &SimTrace) -> Metrics {
    let mut m = Metrics {
        total_cycles: trace.cycles,
        ..Metrics::default()
    };
    let mut seen: BTreeMap<&str, Vec<i64>> = BTreeMap::new();
    for (a, _) in &trace.inputs {
        m.element_reads.insert(a.clone(), 0);
        m.bus_words.insert(a.clone(), 0);
        m.repeated_words.insert(a.clone(), 0);
    }
    let mut results = Vec::new();
    for r in &trace.records {
        for (a, addr) in &r.reads {
            let Some(&(e, n)) = trace.inputs.get(a) else { continue };
            *m.bus_words.get_mut(a).unwrap() += 1;
            let lo = *addr as usize * e;
            *m.element_reads.get_mut(a).unwrap() += (lo..lo + e).filter(|&k| k < n).count();
            seen.entry(a).or_default().push(*addr);
        }
        m.firings += r.fire as usize;
        m.stores += r.writes.len();
        if r.result_valid {
            results.push(r.cycle);
        }
    }
    for (a, mut addrs) in seen {
        let total = addrs.len();
        addrs.sort_unstable();
        addrs.dedup();
        m.repeated_words.insert(a.to_string(), total - addrs.len());
    }
    m.results = results.len();
    m.first_result_cycle = results.first().copied();
    if results.len() > 1 {
        let span = results[results.len() - 1] - results[0];
        m.results_per_cycle = (results.len() - 1) as f64 / span as f64;
    } else {
        m.results_per_cycle = results.len() as f64;
    }
    if m.firings > 0 {
        m.outputs_per_firing = m.stores as f64 / m.firings as f64;
    }
    m
}
