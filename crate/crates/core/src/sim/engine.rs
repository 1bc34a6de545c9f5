// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};

use crate::frontend::wrap_to;
use crate::netlist::comb_order;
use crate::netlist::{check, Direction, MemKind, NetOp, Netlist};

use super::{CycleRecord, MemoryImage, SimConfig, SimError, SimResult, SimTrace, WindowExport};

const CONTROL_PORTS: [&str; 3] = ["clk", "rst", "start"];

struct Node {
    op: NetOp,
    ops: Vec<usize>,
    out: usize,
    width: u32,
    signed: bool,
    table: Vec<i64>,
}

struct Reg {
    q: usize,
    d: usize,
    en: Option<usize>,
    reset: i128,
}

struct Fsm {
    state: usize,
    reset: usize,
    /// (from, condition, to) in priority order.
    trans: Vec<(usize, Option<usize>, usize)>,
    outputs: Vec<(usize, Vec<usize>)>,
}

struct ReadMem {
    name: String,
    addr: usize,
    en: usize,
    data: usize,
    words: Vec<i64>,
    latch: i128,
}

struct WriteMem {
    name: String,
    addr: usize,
    en: usize,
    data: usize,
    words: Vec<Option<i64>>,
}

/// A netlist compiled to index form for repeated evaluation.
struct Machine {
    types: Vec<(u32, bool)>,
    values: Vec<i128>,
    nodes: Vec<Node>,
    regs: Vec<Reg>,
    fsms: Vec<Fsm>,
    reads: Vec<ReadMem>,
    writes: Vec<WriteMem>,
    start: Option<usize>,
    done: usize,
    fire: Option<usize>,
    result_valid: Option<usize>,
    lanes: Vec<(String, Vec<usize>)>,
    scalar_outs: Vec<(String, usize)>,
}

impl Machine {
    fn new(nl: &Netlist, cfg: &SimConfig) -> Result<Self, SimError> {
        let problems = check(nl);
        if !problems.is_empty() {
            return Err(SimError::Netlist(problems.join("; ")));
        }
        let sigs = nl.signal_types();
        let index: HashMap<&str, usize> = sigs.keys().enumerate().map(|(k, n)| (n.as_str(), k)).collect();
        let types: Vec<(u32, bool)> = sigs.values().copied().collect();
        if let Some((n, _)) = sigs.iter().find(|(_, (w, _))| *w > 126) {
            return Err(SimError::Netlist(format!("signal '{n}' is wider than 126 bits")));
        }
        let at = |n: &str| index[n];
        let mut values = vec![0i128; types.len()];

        let order = comb_order(nl).map_err(|c| SimError::Netlist(format!("combinational cycle {c:?}")))?;
        let mut nodes = Vec::with_capacity(order.len());
        for k in order {
            let n = &nl.nodes[k];
            let table = match &n.op {
                NetOp::Lut(t) => nl
                    .luts
                    .iter()
                    .find(|l| l.name == *t)
                    .map(|l| l.contents.clone())
                    .ok_or_else(|| SimError::Netlist(format!("unbound table '{t}'")))?,
                _ => Vec::new(),
            };
            nodes.push(Node {
                op: n.op.clone(),
                ops: n.operands.iter().map(|o| at(o)).collect(),
                out: at(&n.name),
                width: n.width,
                signed: n.signed,
                table,
            });
        }
        let regs = nl
            .regs
            .iter()
            .map(|r| {
                let q = at(&r.name);
                values[q] = r.reset as i128;
                Reg {
                    q,
                    d: at(&r.d),
                    en: r.en.as_deref().map(at),
                    reset: r.reset as i128,
                }
            })
            .collect();
        let fsms = nl
            .fsms
            .iter()
            .map(|f| {
                values[at(&f.state)] = f.reset as i128;
                Fsm {
                    state: at(&f.state),
                    reset: f.reset,
                    trans: f
                        .transitions
                        .iter()
                        .map(|t| (t.from, t.cond.as_deref().map(at), t.to))
                        .collect(),
                    outputs: f.outputs.iter().map(|o| (at(&o.signal), o.states.clone())).collect(),
                }
            })
            .collect();

        let mut reads = Vec::new();
        let mut writes = Vec::new();
        let mut given: BTreeMap<&str, &MemoryImage> = cfg.inputs.iter().map(|m| (m.name.as_str(), m)).collect();
        for m in &nl.mems {
            match m.kind {
                MemKind::Read => {
                    let img = given
                        .remove(m.name.as_str())
                        .ok_or_else(|| SimError::Input(format!("no contents for input array '{}'", m.name)))?;
                    if img.word_width != m.word_width || img.contents.len() != m.depth {
                        return Err(SimError::Input(format!(
                            "image of '{}' is {} words of {} bits, memory has {} of {}",
                            m.name,
                            img.contents.len(),
                            img.word_width,
                            m.depth,
                            m.word_width
                        )));
                    }
                    let words = img
                        .contents
                        .iter()
                        .enumerate()
                        .map(|(k, w)| {
                            w.ok_or_else(|| SimError::Input(format!("word {k} of '{}' is undefined", m.name)))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    reads.push(ReadMem {
                        name: m.name.clone(),
                        addr: at(&m.addr),
                        en: at(&m.en),
                        data: at(&m.data),
                        words,
                        latch: 0,
                    });
                }
                MemKind::Write => writes.push(WriteMem {
                    name: m.name.clone(),
                    addr: at(&m.addr),
                    en: at(&m.en),
                    data: at(&m.data),
                    words: vec![None; m.depth],
                }),
            }
        }
        if let Some(extra) = given.keys().next() {
            return Err(SimError::Input(format!("no input array named '{extra}'")));
        }

        let mem_ports: Vec<&str> = nl
            .mems
            .iter()
            .flat_map(|m| [m.addr.as_str(), m.en.as_str(), m.data.as_str()])
            .collect();
        for p in &nl.ports {
            if p.dir != Direction::In || CONTROL_PORTS.contains(&p.name.as_str()) || mem_ports.contains(&p.name.as_str())
            {
                continue;
            }
            let v = *cfg
                .scalars
                .get(&p.name)
                .ok_or_else(|| SimError::Input(format!("no value for scalar input '{}'", p.name)))?;
            if wrap_to(v as i128, p.width, p.signed) != v as i128 {
                return Err(SimError::Input(format!(
                    "scalar '{}' = {v} does not fit {} bits",
                    p.name, p.width
                )));
            }
            values[at(&p.name)] = v as i128;
        }
        for name in cfg.scalars.keys() {
            if !nl.ports.iter().any(|p| p.dir == Direction::In && p.name == *name) {
                return Err(SimError::Input(format!("no scalar input named '{name}'")));
            }
        }

        let done = *index
            .get("done")
            .ok_or_else(|| SimError::Netlist("no 'done' signal".into()))?;
        let mut lanes: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
        for n in &nl.nodes {
            let Some(rest) = n.name.strip_prefix("sb_") else { continue };
            let Some((array, k)) = rest.split_once(".window_data_") else { continue };
            let Ok(k) = k.parse::<usize>() else { continue };
            lanes.entry(array.to_string()).or_default().push((k, at(&n.name)));
        }
        let lanes = lanes
            .into_iter()
            .map(|(a, mut v)| {
                v.sort_unstable();
                (a, v.into_iter().map(|(_, s)| s).collect())
            })
            .collect();
        let scalar_outs = nl
            .ports
            .iter()
            .filter(|p| p.dir == Direction::Out && p.name != "done" && !mem_ports.contains(&p.name.as_str()))
            .map(|p| (p.name.clone(), at(&p.name)))
            .collect();
        Ok(Machine {
            types,
            values,
            nodes,
            regs,
            fsms,
            reads,
            writes,
            start: index.get("start").copied(),
            done,
            fire: index.get("ctl.fire").copied(),
            result_valid: index.get("result_valid").copied(),
            lanes,
            scalar_outs,
        })
    }

    fn settle(&mut self) {
        for f in &self.fsms {
            let s = self.values[f.state] as usize;
            for (sig, states) in &f.outputs {
                self.values[*sig] = states.contains(&s) as i128;
            }
        }
        for n in &self.nodes {
            let a = |k: usize| self.values[n.ops[k]];
            let r = match &n.op {
                NetOp::Const(v) => *v as i128,
                NetOp::Copy => a(0),
                NetOp::Add => a(0) + a(1),
                NetOp::Sub => a(0) - a(1),
                NetOp::Mul => a(0).wrapping_mul(a(1)),
                NetOp::And => a(0) & a(1),
                NetOp::Or => a(0) | a(1),
                NetOp::Xor => a(0) ^ a(1),
                NetOp::Not => !a(0),
                NetOp::Shl => a(0).wrapping_shl(a(1).clamp(0, 127) as u32),
                NetOp::Shr => a(0) >> a(1).clamp(0, 127),
                NetOp::Eq => (a(0) == a(1)) as i128,
                NetOp::Ne => (a(0) != a(1)) as i128,
                NetOp::Lt => (a(0) < a(1)) as i128,
                NetOp::Le => (a(0) <= a(1)) as i128,
                NetOp::Gt => (a(0) > a(1)) as i128,
                NetOp::Ge => (a(0) >= a(1)) as i128,
                NetOp::Select => {
                    if a(0) != 0 {
                        a(1)
                    } else {
                        a(2)
                    }
                }
                NetOp::Mux => {
                    let sel = a(0);
                    if sel >= 0 && (sel as usize) < n.ops.len() - 1 {
                        a(sel as usize + 1)
                    } else {
                        0
                    }
                }
                NetOp::Slice(lo) => a(0) >> *lo,
                NetOp::Lut(_) => {
                    let addr = a(0);
                    assert!(
                        addr >= 0 && (addr as usize) < n.table.len(),
                        "table address {addr} out of range"
                    );
                    n.table[addr as usize] as i128
                }
            };
            self.values[n.out] = wrap_to(r, n.width, n.signed);
        }
    }

    fn bit(&self, k: Option<usize>) -> bool {
        k.is_some_and(|k| self.values[k] != 0)
    }

    fn record(&self, cycle: u64) -> CycleRecord {
        let fire = self.bit(self.fire);
        CycleRecord {
            cycle,
            reads: self
                .reads
                .iter()
                .filter(|m| self.values[m.en] != 0)
                .map(|m| (m.name.clone(), self.values[m.addr] as i64))
                .collect(),
            writes: self
                .writes
                .iter()
                .filter(|m| self.values[m.en] != 0)
                .map(|m| (m.name.clone(), self.values[m.addr] as i64, self.values[m.data] as i64))
                .collect(),
            windows: if fire {
                self.lanes
                    .iter()
                    .map(|(a, l)| WindowExport {
                        array: a.clone(),
                        lanes: l.iter().map(|&s| self.values[s] as i64).collect(),
                    })
                    .collect()
            } else {
                Vec::new()
            },
            fire,
            result_valid: self.bit(self.result_valid),
            done: self.values[self.done] != 0,
        }
    }

    fn tick(&mut self) -> Result<(), SimError> {
        let next: Vec<i128> = self
            .regs
            .iter()
            .map(|r| {
                if r.en.is_none_or(|e| self.values[e] != 0) {
                    let (w, s) = self.types[r.q];
                    wrap_to(self.values[r.d], w, s)
                } else {
                    self.values[r.q]
                }
            })
            .collect();
        let states: Vec<usize> = self
            .fsms
            .iter()
            .map(|f| {
                let cur = self.values[f.state] as usize;
                f.trans
                    .iter()
                    .find(|(from, cond, _)| *from == cur && cond.is_none_or(|c| self.values[c] != 0))
                    .map_or(cur, |t| t.2)
            })
            .collect();
        for m in &mut self.reads {
            if self.values[m.en] != 0 {
                let addr = self.values[m.addr];
                if addr < 0 || addr as usize >= m.words.len() {
                    return Err(SimError::Address {
                        mem: m.name.clone(),
                        addr: addr as i64,
                    });
                }
                m.latch = m.words[addr as usize] as u64 as i128;
            }
        }
        for m in &mut self.writes {
            if self.values[m.en] != 0 {
                let addr = self.values[m.addr];
                if addr < 0 || addr as usize >= m.words.len() {
                    return Err(SimError::Address {
                        mem: m.name.clone(),
                        addr: addr as i64,
                    });
                }
                m.words[addr as usize] = Some(self.values[m.data] as i64);
            }
        }
        for (r, v) in self.regs.iter().zip(next) {
            self.values[r.q] = v;
        }
        for (f, s) in self.fsms.iter().zip(states) {
            self.values[f.state] = s as i128;
        }
        for m in &self.reads {
            let (w, s) = self.types[m.data];
            self.values[m.data] = wrap_to(m.latch, w, s);
        }
        Ok(())
    }

    fn reset(&mut self) {
        for r in &self.regs {
            self.values[r.q] = r.reset;
        }
        for f in &self.fsms {
            self.values[f.state] = f.reset as i128;
        }
    }
}

/// Run a linked netlist from reset until `done`, two-phase per cycle:
/// settle the combinational logic, then update registers, state machines
/// and memories together. `start` is pulsed in the first cycle.
pub fn simulate(nl: &Netlist, cfg: &SimConfig) -> Result<SimResult, SimError> {
    if cfg.max_cycles == 0 {
        return Err(SimError::Input("max cycles must be at least 1".into()));
    }
    let mut m = Machine::new(nl, cfg)?;
    m.reset();
    let mut trace = SimTrace {
        inputs: nl
            .mems
            .iter()
            .filter(|x| x.kind == MemKind::Read)
            .map(|x| (x.name.clone(), (x.elements_per_word(), x.elements)))
            .collect(),
        ..SimTrace::default()
    };
    let mut cycle = 0u64;
    loop {
        if cycle == cfg.max_cycles {
            return Err(SimError::Timeout(cfg.max_cycles));
        }
        if let Some(s) = m.start {
            m.values[s] = (cycle == 0) as i128;
        }
        m.settle();
        if cfg.record_trace {
            trace.records.push(m.record(cycle));
        }
        if m.values[m.done] != 0 {
            break;
        }
        m.tick()?;
        cycle += 1;
    }
    trace.cycles = cycle + 1;
    let memories = m
        .writes
        .iter()
        .zip(nl.mems.iter().filter(|x| x.kind == MemKind::Write))
        .map(|(w, decl)| MemoryImage {
            name: w.name.clone(),
            word_width: decl.word_width,
            contents: w.words.clone(),
        })
        .collect();
    let scalars = m
        .scalar_outs
        .iter()
        .map(|(n, s)| (n.clone(), m.values[*s] as i64))
        .collect();
    Ok(SimResult {
        trace,
        memories,
        scalars,
    })
}
