// SPDX-License-Identifier: Apache-2.0

//! The end-to-end compile flow, from source text to a checked netlist.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dataflow::{self, check_acyclic, check_balance, check_ssa, dump_graph, DataflowGraph, LutBinding, LutSource};
use crate::frontend::{check_restrictions, inline_calls, parse, print_kernel, print_stmts, walk_stmts, KernelAst, Stmt};
use crate::memif::{self, MemifConfig, DEFAULT_MAX_EXPORT_WIDTH};
use crate::netlist::{self, Netlist};
use crate::transforms::{
    apply_trip, detect_window, fold_constants, scalar_replace, unroll, ScalarizedKernel, UnrollDirective, UnrollFactor,
    WindowSpec, DEFAULT_UNROLL_LIMIT,
};

pub const BUS_WIDTHS: [u32; 4] = [8, 16, 32, 64];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompileOptions {
    pub unroll: Vec<UnrollDirective>,
    pub unroll_limit: i64,
    /// Unroll every loop completely.
    pub unroll_all: bool,
    pub trips: Vec<(String, i64)>,
    pub bus_width: u32,
    pub max_export_width: u32,
    pub luts: Vec<LutBinding>,
    /// Keep a dump of the data path after every graph pass.
    pub keep_ir: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            unroll: Vec::new(),
            unroll_limit: DEFAULT_UNROLL_LIMIT,
            unroll_all: false,
            trips: Vec::new(),
            bus_width: 32,
            max_export_width: DEFAULT_MAX_EXPORT_WIDTH,
            luts: Vec::new(),
            keep_ir: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    /// The kernel or the options are at fault.
    #[error("{pass}: {message}")]
    Input { pass: &'static str, message: String },
    /// A pass produced output that violates its own contract.
    #[error("{pass}: internal invariant violated: {message}")]
    Internal { pass: &'static str, message: String },
}

impl CompileError {
    pub fn pass(&self) -> &'static str {
        match self {
            CompileError::Input { pass, .. } | CompileError::Internal { pass, .. } => pass,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CompileError::Input { .. } => 1,
            CompileError::Internal { .. } => 2,
        }
    }
}

fn input<E: ToString>(pass: &'static str) -> impl Fn(E) -> CompileError {
    move |e| CompileError::Input {
        pass,
        message: e.to_string(),
    }
}

fn internal<E: ToString>(pass: &'static str) -> impl Fn(E) -> CompileError {
    move |e| CompileError::Internal {
        pass,
        message: e.to_string(),
    }
}

/// Every intermediate product of a compile.
#[derive(Clone, Debug)]
pub struct Compiled {
    /// The checked source kernel, before any rewriting.
    pub source: KernelAst,
    /// After inlining, folding, trip overrides and unrolling.
    pub unrolled: KernelAst,
    pub scalarized: ScalarizedKernel,
    pub windows: Vec<WindowSpec>,
    pub graph: DataflowGraph,
    pub netlist: Netlist,
    /// One line per pass, in execution order.
    pub log: Vec<String>,
    /// Graph dump after each data path pass, when requested.
    pub ir: Vec<(String, String)>,
}

impl Compiled {
    pub fn log_text(&self) -> String {
        self.log.iter().fold(String::new(), |mut s, l| {
            let _ = writeln!(s, "{l}");
            s
        })
    }

    /// The kernel after each source-level pass, one `== pass` section each.
    pub fn passes_text(&self) -> String {
        let subs = |o: &[crate::frontend::Affine]| o.iter().map(|a| format!("[{a}]")).collect::<String>();
        let mut s = String::new();
        let _ = writeln!(s, "== check");
        s.push_str(&print_kernel(&self.source));
        let _ = writeln!(s, "== unroll");
        s.push_str(&print_kernel(&self.unrolled));
        let sk = &self.scalarized;
        let _ = writeln!(s, "== scalar_replace");
        for idx in &sk.loop_spec.indices {
            let _ = writeln!(s, "loop {} from {} step {} count {}", idx.name, idx.lower, idx.step, idx.count);
        }
        for l in &sk.loads {
            let _ = writeln!(s, "load {} = {}{}", l.scalar, l.array, subs(&l.offset));
        }
        for f in &sk.feedbacks {
            let _ = writeln!(s, "feedback {}: {} prev {} next {} init {}", f.var, f.ty, f.prev, f.next, f.init);
        }
        s.push_str(&print_stmts(&sk.compute));
        for st in &sk.stores {
            let _ = writeln!(s, "store {}{} = {}", st.array, subs(&st.offset), st.scalar);
        }
        for o in &sk.outputs {
            let _ = writeln!(s, "output *{} = {}", o.name, o.source);
        }
        let _ = writeln!(s, "== detect_window");
        for w in &self.windows {
            let _ = writeln!(
                s,
                "{} shape {:?} stride {:?} extents {:?} bus {} data {}",
                w.array, w.shape, w.stride, w.extents, w.bus_width, w.data_width
            );
        }
        s
    }

    /// All graph dumps concatenated, each under a `== pass` header.
    pub fn ir_text(&self) -> String {
        let mut s = String::new();
        for (pass, text) in &self.ir {
            let _ = writeln!(s, "== {pass}");
            s.push_str(text);
        }
        s
    }
}

fn options_line(opts: &CompileOptions) -> String {
    let unroll: Vec<String> = opts.unroll.iter().map(|d| d.to_string()).collect();
    let trips: Vec<String> = opts.trips.iter().map(|(v, n)| format!("{v}={n}")).collect();
    let luts: Vec<String> = opts
        .luts
        .iter()
        .map(|l| match &l.source {
            LutSource::Builtin(b) => format!("{}=builtin:{b}", l.name),
            LutSource::InitFile(p) => format!(
                "{}={}:{}",
                l.name,
                p.file_name().map(|f| f.to_string_lossy()).unwrap_or_default(),
                l.data
            ),
        })
        .collect();
    format!(
        "options: bus {} unroll [{}{}] unroll_limit {} trips [{}] max_export_width {} luts [{}]",
        opts.bus_width,
        unroll.join(", "),
        if opts.unroll_all { " all=full" } else { "" },
        opts.unroll_limit,
        trips.join(", "),
        opts.max_export_width,
        luts.join(", ")
    )
}

/// Run every pass on `source`.
pub fn compile(source: &str, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    if !BUS_WIDTHS.contains(&opts.bus_width) {
        return Err(CompileError::Input {
            pass: "options",
            message: format!("bus width {} is not one of {:?}", opts.bus_width, BUS_WIDTHS),
        });
    }
    let mut log = vec![options_line(opts)];
    let ast = parse(source).map_err(input("parse"))?;
    log.push(format!("parse: kernel '{}', {} arrays, {} params", ast.name, ast.arrays.len(), ast.params.len()));
    let checked = check_restrictions(&ast).map_err(input("check"))?;
    log.push("check: ok".to_string());
    let inlined = inline_calls(&checked).map_err(input("inline"))?;
    log.push(format!("inline: {} helpers", checked.helpers.len()));
    let mut cur = fold_constants(&inlined).map_err(input("fold"))?;
    log.push("fold: ok".to_string());
    for (var, n) in &opts.trips {
        cur = apply_trip(&cur, var, *n).map_err(input("trip"))?;
        log.push(format!("trip: {var}={n}"));
    }
    let mut directives = opts.unroll.clone();
    if opts.unroll_all {
        walk_stmts(&cur.body, &mut |s| {
            if let Stmt::For(l, _) = s {
                if !directives.iter().any(|d| d.var == l.var) {
                    directives.push(UnrollDirective {
                        var: l.var.clone(),
                        factor: UnrollFactor::Full,
                    });
                }
            }
        });
    }
    let unrolled = unroll(&cur, &directives, opts.unroll_limit).map_err(input("unroll"))?;
    let directives: Vec<String> = directives.iter().map(|d| d.to_string()).collect();
    log.push(format!("unroll: [{}]", directives.join(", ")));
    let sk = scalar_replace(&unrolled).map_err(input("scalar_replace"))?;
    log.push(format!(
        "scalar_replace: {} loads, {} stores, {} feedbacks, trip {}",
        sk.loads.len(),
        sk.stores.len(),
        sk.feedbacks.len(),
        sk.loop_spec.trip()
    ));
    let mut windows = Vec::new();
    for a in sk.input_arrays() {
        let ws = detect_window(&sk, &a.name, opts.bus_width).map_err(input("detect_window"))?;
        log.push(format!(
            "detect_window: {} shape {:?} stride {:?}",
            ws.array, ws.shape, ws.stride
        ));
        windows.push(ws);
    }
    let mut ir = Vec::new();
    let graph = dataflow::build_traced(&sk, &opts.luts, &mut |pass, g| {
        if opts.keep_ir {
            ir.push((pass.to_string(), dump_graph(g)));
        }
    })
    .map_err(input("dataflow"))?;
    log.push(format!(
        "dataflow: {} nodes, depth {}, {} registers",
        graph.nodes.len(),
        graph.depth,
        graph.register_count()
    ));
    check_ssa(&graph).map_err(internal("dataflow"))?;
    check_acyclic(&graph).map_err(internal("dataflow"))?;
    check_balance(&graph).map_err(internal("dataflow"))?;
    let cfg = MemifConfig {
        bus_width: opts.bus_width,
        max_export_width: opts.max_export_width,
    };
    let nl = memif::generate(&sk, &graph, &windows, &cfg).map_err(|e| match e {
        memif::MemifError::Link(l) => internal("link")(l),
        e => input("memif")(e),
    })?;
    log.push(format!(
        "link: {} ports, {} registers, {} nodes, {} state machines",
        nl.ports.len(),
        nl.regs.len(),
        nl.nodes.len(),
        nl.fsms.len()
    ));
    let problems = netlist::check(&nl);
    if !problems.is_empty() {
        return Err(CompileError::Internal {
            pass: "netlist_check",
            message: problems.join("; "),
        });
    }
    log.push("netlist_check: ok".to_string());
    Ok(Compiled {
        source: checked,
        unrolled,
        scalarized: sk,
        windows,
        graph,
        netlist: nl,
        log,
        ir,
    })
}
