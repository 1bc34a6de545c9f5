// SPDX-License-Identifier: Apache-2.0

//! Address generators, smart buffers, the iteration controller and the
//! output writers that surround a scheduled data path.

mod buffer;
mod controller;
mod datapath;
mod writer;

pub use buffer::build_smart_buffer;
pub use controller::build_controller;
pub use datapath::build_datapath;
pub use writer::{build_scalar_outputs, build_writer};

use thiserror::Error;

use crate::dataflow::{DataflowGraph, PortRole};
use crate::frontend::Affine;
use crate::netlist::{bits_for, link, FragmentBuilder, LinkError, Netlist, RegKind, Sig};
use crate::transforms::{LoopSpec, ScalarizedKernel, WindowSpec};

/// Widest window export the buffer generator accepts by default.
pub const DEFAULT_MAX_EXPORT_WIDTH: u32 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemifConfig {
    pub bus_width: u32,
    pub max_export_width: u32,
}

impl Default for MemifConfig {
    fn default() -> Self {
        MemifConfig {
            bus_width: 32,
            max_export_width: DEFAULT_MAX_EXPORT_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemifError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// Emits the bus-word addresses covering `count` elements from `base`,
/// ascending, each once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddressGenerator {
    pub base: u64,
    pub elements: u64,
    pub elements_per_word: u64,
    pub words: u64,
    pub position: u64,
}

impl AddressGenerator {
    /// Generator for elements `base..base+count` of `data_width` bits on a
    /// `bus_width`-bit bus.
    pub fn new(base: u64, count: u64, data_width: u32, bus_width: u32) -> Self {
        let e = (bus_width / data_width).max(1) as u64;
        let (first, last) = (base / e, (base + count.max(1) - 1) / e);
        AddressGenerator {
            base,
            elements: count,
            elements_per_word: e,
            words: if count == 0 { 0 } else { last - first + 1 },
            position: 0,
        }
    }
}

impl Iterator for AddressGenerator {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.position >= self.words {
            return None;
        }
        let a = self.base / self.elements_per_word + self.position;
        self.position += 1;
        Some(a)
    }
}

fn flatten(anchor: &[Affine], extents: &[usize]) -> Affine {
    let mut flat = Affine::constant(0);
    for (d, a) in anchor.iter().enumerate() {
        flat = flat.scale(extents[d] as i64).add(a, 1);
    }
    flat
}

/// Change of `a` when loop level `L` advances and every inner level wraps.
pub(crate) fn level_deltas(spec: &LoopSpec, a: &Affine) -> Vec<i64> {
    let n = spec.indices.len();
    (0..n)
        .map(|l| {
            let own = a.coeff(&spec.indices[l].name) * spec.indices[l].step;
            let inner: i64 = spec.indices[l + 1..]
                .iter()
                .map(|i| a.coeff(&i.name) * i.step * (i.count - 1))
                .sum();
            own - inner
        })
        .collect()
}

/// Geometry of one input array's buffer and address stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BufferPlan {
    pub array: String,
    pub data_width: u32,
    pub signed: bool,
    pub elements_per_word: u32,
    /// Element slots in the ring; a whole number of bus words.
    pub capacity: usize,
    /// Elements from the window corner to its last tap, inclusive.
    pub span: i64,
    /// Flattened offset of each tap from the corner, in load order.
    pub taps: Vec<(String, i64)>,
    pub first_word: i64,
    pub words: i64,
    /// Corner of the first window relative to the first fetched element.
    pub anchor_init: i64,
    pub anchor_last: i64,
    pub anchor_deltas: Vec<i64>,
    /// Array length in elements and in bus words.
    pub elements: usize,
    pub depth: usize,
}

impl BufferPlan {
    pub fn new(ws: &WindowSpec, sk: &ScalarizedKernel, cfg: &MemifConfig) -> Result<Self, MemifError> {
        let decl = sk
            .arrays
            .iter()
            .find(|a| a.name == ws.array)
            .ok_or_else(|| MemifError::Config(format!("no array named '{}'", ws.array)))?;
        let d = ws.data_width;
        if ws.size() as u64 * d as u64 > cfg.max_export_width as u64 {
            return Err(MemifError::Config(format!(
                "window of '{}' exports {} x {d} bits, above the {}-bit limit",
                ws.array,
                ws.size(),
                cfg.max_export_width
            )));
        }
        let e = ws.elements_per_word() as i64;
        let flat = flatten(&ws.anchor, &ws.extents);
        let deltas = level_deltas(&sk.loop_spec, &flat);
        if deltas.iter().any(|&x| x < 0) {
            return Err(MemifError::Config(format!(
                "window of '{}' moves towards lower addresses",
                ws.array
            )));
        }
        let taps: Vec<(String, i64)> = ws
            .taps
            .iter()
            .map(|(s, off)| {
                let mut f = 0;
                for (k, o) in off.iter().enumerate() {
                    f = f * ws.extents[k] as i64 + o;
                }
                (s.clone(), f)
            })
            .collect();
        let span = taps.iter().map(|t| t.1).max().unwrap_or(0) + 1;
        let iters = sk.loop_spec.iterations();
        let first = sk.loop_spec.eval(&flat, &iters[0]);
        let last = sk.loop_spec.eval(&flat, iters.last().unwrap());
        let first_word = first / e;
        let last_word = (last + span - 1) / e;
        let capacity = ((span + e + e - 1) / e * e) as usize;
        let elements = decl.len();
        Ok(BufferPlan {
            array: ws.array.clone(),
            data_width: d,
            signed: decl.element.signed,
            elements_per_word: e as u32,
            capacity,
            span,
            taps,
            first_word,
            words: last_word - first_word + 1,
            anchor_init: first - first_word * e,
            anchor_last: last - first_word * e,
            anchor_deltas: deltas,
            elements,
            depth: elements.div_ceil(e as usize),
        })
    }

    /// Word addresses fetched, in issue order.
    pub fn addresses(&self) -> impl Iterator<Item = u64> {
        let e = self.elements_per_word as u64;
        let base = self.first_word as u64 * e;
        AddressGenerator::new(base, self.words as u64 * e, self.data_width, self.data_width * e as u32)
    }
}

/// Bus-word addresses read for `ws` over the whole iteration space.
pub fn gen_address_stream(ws: &WindowSpec, sk: &ScalarizedKernel) -> Result<Vec<u64>, MemifError> {
    let plan = BufferPlan::new(
        ws,
        sk,
        &MemifConfig {
            bus_width: ws.bus_width,
            max_export_width: u32::MAX,
        },
    )?;
    Ok(plan.addresses().collect())
}

/// Names of the memory ports for one array; plain when it is the only
/// array in that direction.
pub(crate) fn mem_ports(dir: &str, array: &str, alone: bool) -> (String, String, String) {
    let stem = if alone {
        format!("mem_{dir}")
    } else {
        format!("mem_{dir}_{array}")
    };
    let en = if dir == "in" { "en" } else { "we" };
    (format!("{stem}_addr"), format!("{stem}_{en}"), format!("{stem}_data"))
}

/// Loop counters advancing on `adv`, outermost level first.
pub(crate) struct Counters {
    /// Level `L` steps forward while every inner level wraps.
    pub inc: Vec<Sig>,
    /// Every level sits at its final value.
    pub last: Sig,
}

pub(crate) fn loop_counters(b: &mut FragmentBuilder, spec: &LoopSpec, adv: &Sig, tag: &str) -> Counters {
    let mut values = Vec::new();
    let mut at_max = Vec::new();
    for idx in &spec.indices {
        let t = idx.ty();
        let r = b.reg(&format!("{tag}_{}", idx.name), t.width as u32, t.signed, idx.lower, RegKind::Control);
        at_max.push(b.eq_const(&r, idx.upper()));
        values.push(r);
    }
    let mut inc = Vec::new();
    for (l, idx) in spec.indices.iter().enumerate() {
        let inner = b.all(&at_max[l + 1..]);
        let moves = b.and(adv, &inner);
        let not_max = b.not(&at_max[l]);
        let up = b.and(&moves, &not_max);
        let wraps = b.and(&moves, &at_max[l]);
        let r = values[l].clone();
        let stepped = b.add_const(&r, idx.step, r.width);
        let low = b.konst(idx.lower, r.width, r.signed);
        let hold = b.select(&wraps, &low, &r);
        let next = b.select(&up, &stepped, &hold);
        b.drive(&r, &next, None);
        inc.push(up);
    }
    let last = b.all(&at_max);
    Counters { inc, last }
}

/// Register following an affine function of the iteration: starts at
/// `init` and moves by `deltas[L]` when level `L` increments. Returns the
/// register and its next value.
pub(crate) fn affine_reg(
    b: &mut FragmentBuilder,
    local: &str,
    init: i64,
    deltas: &[i64],
    inc: &[Sig],
    width: u32,
) -> (Sig, Sig) {
    let r = b.reg(local, width, false, init, RegKind::Control);
    let mut next = r.clone();
    for (l, &dl) in deltas.iter().enumerate() {
        if dl != 0 {
            let moved = b.add_const(&r, dl, width);
            next = b.select(&inc[l], &moved, &next);
        }
    }
    b.drive(&r, &next, None);
    (r, next)
}

/// Like [`affine_reg`], modulo `m`.
pub(crate) fn modular_reg(
    b: &mut FragmentBuilder,
    local: &str,
    init: i64,
    deltas: &[i64],
    inc: &[Sig],
    m: i64,
) -> Sig {
    let width = bits_for((m - 1).max(0) as u64);
    let wide = bits_for((2 * m) as u64);
    let r = b.reg(local, width, false, init.rem_euclid(m), RegKind::Control);
    let limit = b.konst(m, wide, false);
    let mut next = r.clone();
    for (l, &dl) in deltas.iter().enumerate() {
        let dm = dl.rem_euclid(m);
        if dm != 0 {
            let sum = b.add_const(&r, dm, wide);
            let over = b.cmp(crate::netlist::NetOp::Ge, &sum, &limit);
            let less = b.add_const(&sum, -m, wide);
            let moved = b.select(&over, &less, &sum);
            let moved = b.fit(&moved, width, false);
            next = b.select(&inc[l], &moved, &next);
        }
    }
    b.drive(&r, &next, None);
    r
}

/// Everything needed to wrap a scheduled graph in its memory interface.
pub struct InterfacePlan {
    pub buffers: Vec<BufferPlan>,
    pub rolled: bool,
    /// Stores per iteration for the busiest output array.
    pub throttle: u32,
}

/// Generate every fragment and link them into one netlist.
pub fn generate(
    sk: &ScalarizedKernel,
    g: &DataflowGraph,
    windows: &[WindowSpec],
    cfg: &MemifConfig,
) -> Result<Netlist, MemifError> {
    let buffers = windows
        .iter()
        .map(|ws| BufferPlan::new(ws, sk, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let outputs = sk.output_arrays();
    let throttle = outputs
        .iter()
        .map(|a| sk.stores.iter().filter(|s| s.array == a.name).count() as u32)
        .max()
        .unwrap_or(1)
        .max(1);
    let plan = InterfacePlan {
        buffers,
        rolled: sk.loop_spec.is_rolled(),
        throttle,
    };
    let mut frags = vec![build_controller(sk, g, &plan)];
    let alone = plan.buffers.len() == 1;
    for bp in &plan.buffers {
        let [ag, sb] = build_smart_buffer(sk, bp, alone, cfg.bus_width);
        frags.push(ag);
        frags.push(sb);
    }
    let (dp, signals) = build_datapath(sk, g, &plan)?;
    frags.push(dp);
    let alone = outputs.len() == 1;
    for a in &outputs {
        frags.push(build_writer(sk, g, a, &signals, alone));
    }
    if g.outputs.iter().any(|p| p.role == PortRole::Scalar) {
        frags.push(build_scalar_outputs(g, &signals));
    }
    Ok(link(&sk.name, frags)?)
}
