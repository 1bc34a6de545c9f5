// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use minihls::batch::{verify, BatchJob};
use minihls::corpus::{corpus_dir, kernel, CORPUS};
use common::width;
use minihls::dataflow::{check_ssa, check_width_safety, parse_init_file, DataflowGraph, Evaluator, Opcode};
use minihls::frontend::ScalarType;
use minihls::netlist::{check, dump_netlist, CombNode, NetOp};
use minihls::pipeline::{compile, CompileOptions};
use minihls::report::{report, stored_width, REFERENCE_DCT_OUTPUT_WIDTH};
use minihls::sim::{measure, random_vectors, simulate, SimConfig, TestVectors, DEFAULT_SEED};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const VECTORS_PER_KERNEL: usize = 25;
const EQUIVALENCE_BUDGET: Duration = Duration::from_secs(10);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_equivalence() -> Outcome {
    let start = Instant::now();
    let jobs: Vec<BatchJob> = CORPUS
        .iter()
        .map(|k| BatchJob::corpus(k, DEFAULT_SEED, VECTORS_PER_KERNEL))
        .collect();
    let outcomes = verify(&jobs);
    let elapsed = start.elapsed();
    let mut cases = 0;
    for o in &outcomes {
        ensure(o.passed(), || {
            let first = o.cases.iter().find_map(|c| c.mismatch.clone());
            format!("{}: {:?} {:?}", o.name, o.error, first)
        })?;
        ensure(o.cases.len() == VECTORS_PER_KERNEL, || format!("{}: {} cases", o.name, o.cases.len()))?;
        cases += o.cases.len();
    }
    ensure(outcomes.len() == 7, || format!("{} kernels", outcomes.len()))?;
    ensure(elapsed < EQUIVALENCE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{} kernels x {VECTORS_PER_KERNEL} vectors ({cases} cases) in {:.2?}", outcomes.len(), elapsed))
}

/// The FIR tap formula written out directly.
fn fir_formula(a: &[i64], trip: usize) -> Vec<i64> {
    (0..trip)
        .map(|i| 3 * a[i] + 5 * a[i + 1] + 7 * a[i + 2] + 9 * a[i + 3] - a[i + 4])
        .collect()
}

fn fir_worked_example() -> Outcome {
    let k = kernel("fir").unwrap();
    let c = compile(k.source, &k.options()).map_err(|e| e.to_string())?;
    ensure(c.scalarized.loop_spec.trip() == 17, || "trip is not 17".into())?;
    let a: Vec<i64> = (0..=20).collect();
    let v = TestVectors {
        memories: BTreeMap::from([("A".to_string(), a.clone())]),
        scalars: BTreeMap::new(),
    };
    let want = fir_formula(&a, 17);
    let r = common::run(&c, &v);
    let got: Vec<i64> = common::sim_arrays(&c, &r)["C"].iter().map(|x| x.unwrap()).collect();
    ensure(got == want, || format!("simulated {got:?}, formula {want:?}"))?;
    let path = corpus_dir().join("golden/fir_worked.json");
    let text = serde_json::to_string(&BTreeMap::from([("A", &a), ("C", &want)])).unwrap() + "\n";
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &text).map_err(|e| e.to_string())?;
    }
    let frozen = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    ensure(frozen == text, || "golden fir_worked.json differs".into())?;
    Ok(format!("C[0]={}, C[1]={} (golden file matches)", got[0], got[1]))
}

/// Element indices covered by each read, counted from the raw trace.
fn fetched_elements(c: &minihls::pipeline::Compiled, v: &TestVectors) -> Result<(usize, usize), String> {
    let r = common::run(c, v);
    let mut fetched: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for rec in &r.trace.records {
        for (a, addr) in &rec.reads {
            let (epw, n) = r.trace.inputs[a];
            let lo = *addr as usize * epw;
            fetched.entry(a).or_default().extend((lo..lo + epw).filter(|&e| e < n));
        }
    }
    let mut total = 0;
    for m in c.netlist.mems.iter().filter(|m| m.kind == minihls::netlist::MemKind::Read) {
        let got = fetched.remove(m.name.as_str()).unwrap_or_default();
        let once: BTreeSet<usize> = got.iter().copied().collect();
        ensure(got.len() == once.len(), || format!("{}: an element is fetched twice", m.name))?;
        ensure(once == (0..m.elements).collect(), || {
            format!("{}: fetched {} of {} elements", m.name, once.len(), m.elements)
        })?;
        total += got.len();
    }
    let windows = r.trace.records.iter().filter(|x| x.fire).count();
    Ok((total, windows))
}

fn single_fetch_reuse() -> Outcome {
    let mut fir = (0, 0);
    for k in CORPUS.iter().filter(|k| k.windowed) {
        let c = compile(k.source, &k.options()).map_err(|e| e.to_string())?;
        for v in random_vectors(&c.source, DEFAULT_SEED, 3) {
            let counts = fetched_elements(&c, &v).map_err(|e| format!("{}: {e}", k.name))?;
            if k.name == "fir" {
                fir = counts;
            }
        }
    }
    ensure(fir == (21, 17), || format!("FIR read {} elements for {} windows", fir.0, fir.1))?;
    Ok("FIR: 21 element reads for 17 windows; every windowed kernel fetches each element once".into())
}

fn throughput() -> Outcome {
    let fir = kernel("fir").unwrap();
    let c = compile(fir.source, &fir.options()).map_err(|e| e.to_string())?;
    let v = random_vectors(&c.source, DEFAULT_SEED, 1).remove(0);
    let m = measure(&common::run(&c, &v).trace);
    ensure(m.results == 17 && m.results_per_cycle == 1.0, || {
        format!("FIR {} results at {} per cycle", m.results, m.results_per_cycle)
    })?;
    let dct = kernel("dct8").unwrap();
    let c = compile(dct.source, &dct.options()).map_err(|e| e.to_string())?;
    let v = random_vectors(&c.source, DEFAULT_SEED, 1).remove(0);
    let m = measure(&common::run(&c, &v).trace);
    ensure(m.firings == 1 && m.outputs_per_firing == 8.0, || {
        format!("DCT {} firings, {} outputs/firing", m.firings, m.outputs_per_firing)
    })?;
    Ok("FIR 1 result/cycle; DCT 8 outputs/firing".into())
}

/// Every register count along every path from a source to `n`.
fn path_latencies(g: &DataflowGraph) -> Vec<BTreeSet<u32>> {
    let mut lat: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); g.nodes.len()];
    for n in &g.nodes {
        let own = n.latched as u32;
        let set: BTreeSet<u32> = match n.op {
            Opcode::Input | Opcode::Lpr => BTreeSet::from([own]),
            Opcode::Const => BTreeSet::new(),
            _ => n
                .operands
                .iter()
                .flat_map(|o| lat[o.0].iter().map(|d| d + own))
                .collect(),
        };
        lat[n.id.0] = set;
    }
    lat
}

fn pipeline_balance() -> Outcome {
    let mut checked = 0;
    for k in &CORPUS {
        let c = common::compile_corpus(k);
        // Paths from feedback registers start at their own stage; only
        // the paths from the inputs must agree.
        let mut from_inputs = c.graph.clone();
        for m in &mut from_inputs.nodes {
            if m.op == Opcode::Lpr {
                m.op = Opcode::Const;
            }
        }
        let lat = path_latencies(&from_inputs);
        for n in &c.graph.nodes {
            if n.op == Opcode::Lpr || n.op == Opcode::Const {
                continue;
            }
            let l = &lat[n.id.0];
            ensure(l.len() <= 1, || format!("{}: node {} sees input paths with {l:?} registers", k.name, n.id))?;
            checked += 1;
        }
    }
    let acc = common::compile_corpus(kernel("accumulator").unwrap());
    let g = &acc.graph;
    let f = &g.feedbacks[0];
    let mut only_feedback = g.clone();
    for m in &mut only_feedback.nodes {
        if m.op == Opcode::Input {
            m.op = Opcode::Const;
        }
    }
    let loop_regs = &path_latencies(&only_feedback)[f.snx.0];
    ensure(*loop_regs == BTreeSet::from([1]), || format!("feedback loop holds {loop_regs:?} registers"))?;
    let v = random_vectors(&acc.source, DEFAULT_SEED, 1).remove(0);
    let m = measure(&common::run(&acc, &v).trace);
    ensure(m.results_per_cycle == 1.0, || format!("accumulator {} results/cycle", m.results_per_cycle))?;
    Ok(format!("{checked} nodes balanced; accumulator loop closes through 1 register at II=1"))
}

/// Each FIR tap swept over all 256 values while the other taps sit at
/// every combination of minimum, zero and maximum.
fn fir_tap_sweeps(taps: usize) -> Vec<Vec<i128>> {
    let corners = [-128i128, 0, 127];
    let mut out = Vec::new();
    for swept in 0..taps {
        for combo in 0..3usize.pow(taps as u32 - 1) {
            let mut rest = combo;
            let mut base = vec![0i128; taps];
            for (_, b) in base.iter_mut().enumerate().filter(|(t, _)| *t != swept) {
                *b = corners[rest % 3];
                rest /= 3;
            }
            for x in -128i128..=127 {
                let mut it = base.clone();
                it[swept] = x;
                out.push(it);
            }
        }
    }
    out
}

/// Every evaluated value lies inside the propagated range, and every
/// propagated range fits the inferred width.
fn width_check(name: &str, g: &DataflowGraph, iterations: &[Vec<i128>]) -> Result<(), String> {
    let bounds = width::ranges(g);
    for (n, r) in g.nodes.iter().zip(&bounds) {
        if matches!(n.op, Opcode::Lpr | Opcode::Snx) {
            continue;
        }
        let d = width::declared(n.width, n.signed);
        ensure(r.0 >= d.0 && r.1 <= d.1, || format!("{name}: node {} range {r:?} exceeds width {}", n.id, n.width))?;
    }
    let mut ev = Evaluator::new(g);
    for it in iterations {
        let v = ev.step(it).map_err(|e| format!("{name}: {e}"))?;
        for (n, r) in g.nodes.iter().zip(&bounds) {
            if matches!(n.op, Opcode::Lpr | Opcode::Snx) {
                continue;
            }
            let x = v[n.id.0];
            ensure(x >= r.0 && x <= r.1, || format!("{name}: node {} value {x} outside {r:?}", n.id))?;
        }
    }
    check_width_safety(g, iterations).map_err(|e| format!("{name}: {e}"))
}

fn width_safety() -> Outcome {
    let fir = common::compile_corpus(kernel("fir").unwrap());
    let sweeps = fir_tap_sweeps(fir.graph.inputs.len());
    width_check("fir", &fir.graph, &sweeps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    for k in &CORPUS {
        let c = common::compile_corpus(k);
        let g = &c.graph;
        let random: Vec<Vec<i128>> = (0..1000)
            .map(|_| {
                g.inputs
                    .iter()
                    .map(|p| rng.gen_range(p.ty.min_value()..=p.ty.max_value()))
                    .collect()
            })
            .collect();
        width_check(k.name, g, &random)?;
    }
    let d = common::compile_corpus(kernel("dct8").unwrap());
    let w = stored_width(&d).ok_or("DCT has no stores")?;
    let text = report(&d);
    ensure(text.contains(&format!("inferred {w} bits, published {REFERENCE_DCT_OUTPUT_WIDTH} bits")), || {
        "report lacks the DCT width line".into()
    })?;
    Ok(format!(
        "FIR {} sweep iterations, 1000 random per kernel, within propagated bounds; DCT output {w} bits (published {REFERENCE_DCT_OUTPUT_WIDTH}, informational)",
        sweeps.len()
    ))
}

fn controller_elimination() -> Outcome {
    let k = kernel("accumulator").unwrap();
    let rolled = compile(k.source, &k.options()).map_err(|e| e.to_string())?;
    let opts = CompileOptions {
        unroll_all: true,
        ..k.options()
    };
    let unrolled = compile(k.source, &opts).map_err(|e| e.to_string())?;
    let fsms = |nl: &minihls::netlist::Netlist| {
        let dump = dump_netlist(nl);
        let section = dump.split("FSMS\n").nth(1).unwrap_or("").split("MEMS\n").next().unwrap_or("");
        section.lines().filter(|l| l.starts_with("fsm ")).count()
    };
    ensure(fsms(&rolled.netlist) == 1, || "rolled loop has no controller".into())?;
    ensure(fsms(&unrolled.netlist) == 0 && unrolled.netlist.census().fsm_states == 0, || {
        "fully unrolled loop kept its controller".into()
    })?;
    let v = random_vectors(&unrolled.source, DEFAULT_SEED, 1).remove(0);
    let r = simulate(&unrolled.netlist, &SimConfig::from_vectors(&unrolled.netlist, &v).unwrap())
        .map_err(|e| e.to_string())?;
    let sum: i64 = v.memories["A"].iter().sum();
    ensure(r.scalars.get("sum") == Some(&sum), || format!("sum {:?} != {sum}", r.scalars.get("sum")))?;
    Ok("accumulator: 1 FSM rolled, 0 FSMs with --unroll full".into())
}

fn determinism_and_golden() -> Outcome {
    let dir = corpus_dir().join("golden");
    let mut files = 0;
    for k in &CORPUS {
        let a = common::artifacts(k);
        ensure(a == common::artifacts(k), || format!("{}: two runs differ", k.name))?;
        for (suffix, text) in &a {
            let path = dir.join(format!("{}{suffix}", k.name));
            let g = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            ensure(&g == text, || format!("{} differs from golden", path.display()))?;
            files += 1;
        }
    }
    Ok(format!("{files} golden files match; runs byte-identical"))
}

fn invariant_suites() -> Outcome {
    let c = common::compile_corpus(kernel("fir").unwrap());
    // SSA.
    check_ssa(&c.graph).map_err(|e| e.to_string())?;
    let mut g = c.graph.clone();
    g.nodes.push(g.nodes[3].clone());
    ensure(check_ssa(&g).is_err(), || "duplicate definition not caught".into())?;
    // Single driver and no combinational cycle.
    ensure(check(&c.netlist).is_empty(), || "clean netlist reported".into())?;
    let mut nl = c.netlist.clone();
    let victim = nl.nodes[0].clone();
    nl.nodes.push(CombNode {
        op: NetOp::Const(0),
        operands: vec![],
        ..victim
    });
    ensure(check(&nl).iter().any(|m| m.starts_with("multiple drivers")), || "second driver not caught".into())?;
    let mut nl = c.netlist.clone();
    let i = nl.nodes.iter().position(|n| n.op == NetOp::Add).unwrap();
    nl.nodes[i].operands[0] = nl.nodes[i].name.clone();
    ensure(check(&nl).iter().any(|m| m.starts_with("combinational cycle")), || "cycle not caught".into())?;
    // Buffer liveness.
    let v = random_vectors(&c.source, DEFAULT_SEED, 1).remove(0);
    common::check_liveness(&c, &common::run(&c, &v).trace, &v)?;
    let mut nl = c.netlist.clone();
    let room = nl.nodes.iter_mut().find(|n| n.name == "sb_A.room").unwrap();
    room.op = NetOp::Const(1);
    room.operands.clear();
    let r = simulate(&nl, &SimConfig::from_vectors(&nl, &v).unwrap()).map_err(|e| e.to_string())?;
    ensure(common::check_liveness(&c, &r.trace, &v).is_err(), || "overwrite not caught".into())?;
    // Table initialization files.
    let ty = ScalarType::new(true, 16);
    let good: String = (0..16).map(|k| format!("{}\n", k * 100 - 800)).collect();
    ensure(parse_init_file(&good, 4, ty).is_ok(), || "valid table rejected".into())?;
    let short: String = good.lines().skip(1).map(|l| format!("{l}\n")).collect();
    let wide = good.replacen("-800", "40000", 1);
    ensure(parse_init_file(&short, 4, ty).is_err(), || "short table accepted".into())?;
    ensure(parse_init_file(&wide, 4, ty).is_err(), || "out-of-range entry accepted".into())?;
    Ok("SSA, single-driver/acyclic, buffer liveness, init-file checks each catch their seeded defect".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("corpus equivalence", corpus_equivalence),
        ("FIR worked example", fir_worked_example),
        ("single-fetch reuse", single_fetch_reuse),
        ("throughput", throughput),
        ("pipeline balance", pipeline_balance),
        ("width safety", width_safety),
        ("controller elimination", controller_elimination),
        ("determinism and golden files", determinism_and_golden),
        ("invariant suites", invariant_suites),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", k + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {}. {name}: {e}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
