// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use minihls::batch::simulated_outputs;
use minihls::dataflow::LutBinding;
use minihls::frontend::ScalarType;
use minihls::netlist::{dump_netlist, parse_netlist, Netlist};
use minihls::pipeline::{compile, CompileError, CompileOptions, Compiled};
use minihls::report::report;
use minihls::sim::{
    interpret_oracle, measure, oracle_tables, random_vectors, seed_from_env, simulate, SimConfig, TestVectors,
    DEFAULT_MAX_CYCLES,
};
use minihls::transforms::UnrollDirective;
use minihls::vhdl::{emit, emit_testbench, EmitConfig, LutStyle, TestbenchData};

const EXIT_INPUT: u8 = 1;
const EXIT_INTERNAL: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "minihls", version, about = "Compile C loop kernels into pipelined VHDL")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit VHDL, a testbench and the pass log.
    Compile(CompileCmd),
    /// Run the cycle-accurate simulator on a kernel or netlist dump.
    Sim(SimCmd),
    /// Print widths, depth, registers, windows and throughput.
    Report(ReportCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Style {
    Array,
    Rom,
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel source file.
    input: PathBuf,
    /// Unroll directive `<loop>=<factor|full>`, or `full` for every loop.
    #[arg(long = "unroll", value_name = "SPEC")]
    unroll: Vec<String>,
    /// Memory bus width in bits.
    #[arg(long = "bus", default_value_t = 32)]
    bus: u32,
    /// Trip count override `<loop>=<n>`.
    #[arg(long = "trip", value_name = "LOOP=N")]
    trip: Vec<String>,
    /// Lookup table binding `<name>=<path>[@<type>]`, type defaulting to s16.
    #[arg(long = "lut", value_name = "NAME=PATH")]
    lut: Vec<String>,
}

#[derive(Args)]
struct CompileCmd {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Output VHDL file; other outputs are written next to it.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    /// Also write the dataflow graph as `.ir`
    #[arg(long = "dump-ir")]
    dump_ir: bool,
    /// Also write the netlist dump as `.netlist`
    #[arg(long = "dump-netlist")]
    dump_netlist: bool,
    /// Also write per-pass IR snapshots as `.passes`
    #[arg(long = "dump-passes")]
    dump_passes: bool,
    /// Emit tables as constant arrays or as ROM entities
    #[arg(long = "lut-style", value_enum, default_value = "array")]
    lut_style: Style,
    /// Testbench stimulus; random vectors from the recorded seed otherwise.
    #[arg(long = "vectors")]
    vectors: Option<PathBuf>,
}

#[derive(Args)]
struct SimCmd {
    #[command(flatten)]
    kernel: KernelArgs,
    /// JSON memory images and scalar inputs.
    #[arg(long = "vectors")]
    vectors: Option<PathBuf>,
    /// Generate this many random vectors instead of reading `--vectors`.
    #[arg(long = "random", value_name = "N")]
    random: Option<usize>,
    /// Seed for `--random`; `MINIHLS_SEED` or the recorded default otherwise.
    #[arg(long = "seed")]
    seed: Option<u64>,
    /// Compare against the reference interpreter.
    #[arg(long = "check-oracle")]
    check_oracle: bool,
    /// Write the per-cycle trace as JSON lines.
    #[arg(long = "trace")]
    trace: Option<PathBuf>,
    /// Stop with a timeout after this many cycles
    #[arg(long = "max-cycles", default_value_t = DEFAULT_MAX_CYCLES)]
    max_cycles: u64,
}

#[derive(Args)]
struct ReportCmd {
    #[command(flatten)]
    kernel: KernelArgs,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8) -> impl Fn(String) -> Failure {
    move |message| Failure { code, message }
}

impl From<CompileError> for Failure {
    fn from(e: CompileError) -> Self {
        let code = if e.exit_code() == 1 { EXIT_INPUT } else { EXIT_INTERNAL };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn parse_lut(s: &str) -> Result<LutBinding, String> {
    let (name, rest) = s
        .split_once('=')
        .ok_or_else(|| format!("expected <name>=<path>, got '{s}'"))?;
    let (path, ty) = match rest.rsplit_once('@') {
        Some((p, t)) => (p, t.parse::<ScalarType>().map_err(|e| format!("{e}"))?),
        None => (rest, ScalarType::new(true, 16)),
    };
    if path == "builtin" {
        return Ok(LutBinding::builtin(name));
    }
    Ok(LutBinding::file(name, path, ty))
}

fn options(k: &KernelArgs) -> Result<CompileOptions, Failure> {
    let bad = fail(EXIT_INPUT);
    let mut opts = CompileOptions {
        bus_width: k.bus,
        ..CompileOptions::default()
    };
    for u in &k.unroll {
        if u == "full" {
            opts.unroll_all = true;
        } else {
            opts.unroll.push(u.parse::<UnrollDirective>().map_err(&bad)?);
        }
    }
    for t in &k.trip {
        let (v, n) = t
            .split_once('=')
            .ok_or_else(|| bad(format!("expected <loop>=<n>, got '{t}'")))?;
        let n = n.parse::<i64>().map_err(|e| bad(format!("trip '{t}': {e}")))?;
        opts.trips.push((v.to_string(), n));
    }
    for l in &k.lut {
        opts.luts.push(parse_lut(l).map_err(&bad)?);
    }
    Ok(opts)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_INPUT)(format!("{}: {e}", path.display())))
}

fn compile_kernel(k: &KernelArgs, keep_ir: bool) -> Result<(Compiled, CompileOptions), Failure> {
    let mut opts = options(k)?;
    opts.keep_ir = keep_ir;
    let src = read(&k.input)?;
    Ok((compile(&src, &opts)?, opts))
}

fn load_vectors(path: &Path) -> Result<TestVectors, Failure> {
    TestVectors::from_json(&read(path)?).map_err(|e| fail(EXIT_INPUT)(format!("{}: {e}", path.display())))
}

/// Write every file to a temporary name first and rename them all once
/// each write has succeeded.
fn write_all(files: &[(PathBuf, String)]) -> Result<(), Failure> {
    let io = fail(EXIT_INPUT);
    let mut staged = Vec::new();
    for (path, text) in files {
        let tmp = path.with_extension(format!(
            "{}.tmp",
            path.extension().map(|e| e.to_string_lossy()).unwrap_or_default()
        ));
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
        if let Err(e) = dir.map_or(Ok(()), fs::create_dir_all).and_then(|_| fs::write(&tmp, text)) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(io(format!("{}: {e}", tmp.display())));
        }
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        fs::rename(&tmp, path).map_err(|e| io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_compile(c: &CompileCmd) -> Result<(), Failure> {
    let (compiled, opts) = compile_kernel(&c.kernel, c.dump_ir)?;
    let nl = &compiled.netlist;
    let out = c
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.vhd", nl.name)));
    let stem = out.with_extension("");
    let sibling = |suffix: &str| PathBuf::from(format!("{}{suffix}", stem.display()));
    let cfg = EmitConfig {
        lut_style: match c.lut_style {
            Style::Array => LutStyle::ConstantArray,
            Style::Rom => LutStyle::RomComponent,
        },
        ..EmitConfig::default()
    };
    let internal = fail(EXIT_INTERNAL);
    let vhdl = emit(nl, &cfg).map_err(|e| internal(format!("emit: {e}")))?;
    let (vectors, stimulus) = match &c.vectors {
        Some(p) => (load_vectors(p)?, format!("testbench vectors: {}", p.display())),
        None => {
            let seed = seed_from_env();
            let v = random_vectors(&compiled.source, seed, 1).remove(0);
            (v, format!("testbench vectors: random, seed {seed:#x}"))
        }
    };
    let tables = oracle_tables(&compiled.source, &opts.luts).map_err(|e| fail(EXIT_INPUT)(format!("oracle: {e}")))?;
    let gold = interpret_oracle(&compiled.source, &vectors, &tables)
        .map_err(|e| fail(EXIT_INPUT)(format!("oracle: {e}")))?;
    let data = TestbenchData {
        vectors,
        expected_arrays: gold.arrays,
        expected_scalars: gold.scalars,
        max_cycles: DEFAULT_MAX_CYCLES,
    };
    let tb = emit_testbench(nl, &data, &cfg).map_err(|e| fail(EXIT_INPUT)(format!("testbench: {e}")))?;
    let mut log = compiled.log_text();
    log.push_str(&format!("emit: {} ({} bytes)\n", out.display(), vhdl.len()));
    log.push_str(&format!("{stimulus}\n"));
    let mut files = vec![(out.clone(), vhdl), (sibling("_tb.vhd"), tb)];
    if c.dump_ir {
        files.push((sibling(".ir"), compiled.ir_text()));
    }
    if c.dump_netlist {
        files.push((sibling(".netlist"), dump_netlist(nl)));
    }
    if c.dump_passes {
        files.push((sibling(".passes"), compiled.passes_text()));
    }
    files.push((sibling(".log"), log.clone()));
    write_all(&files)?;
    print!("{log}");
    Ok(())
}

fn print_outputs(nl: &Netlist, cfg: &SimConfig) -> Result<minihls::sim::SimResult, Failure> {
    let r = simulate(nl, cfg).map_err(|e| fail(EXIT_CHECK)(format!("simulation: {e}")))?;
    for m in nl.mems.iter().filter(|m| m.kind == minihls::netlist::MemKind::Write) {
        let cells = r.memory(&m.name).map(|img| img.unpack(m)).unwrap_or_default();
        let text: Vec<String> = cells
            .iter()
            .map(|c| c.map_or_else(|| "_".to_string(), |x| x.to_string()))
            .collect();
        println!("{} = [{}]", m.name, text.join(", "));
    }
    for (k, x) in &r.scalars {
        println!("{k} = {x}");
    }
    Ok(r)
}

fn cmd_sim(s: &SimCmd) -> Result<(), Failure> {
    let bad = fail(EXIT_INPUT);
    let text = read(&s.kernel.input)?;
    let from_dump = s.kernel.input.extension().is_some_and(|e| e == "netlist");
    let (nl, compiled, opts) = if from_dump {
        let nl = parse_netlist(&text).map_err(|e| bad(format!("netlist: {e}")))?;
        (nl, None, options(&s.kernel)?)
    } else {
        let (c, o) = compile_kernel(&s.kernel, false)?;
        (c.netlist.clone(), Some(c), o)
    };
    let vectors = match (&s.vectors, s.random) {
        (Some(p), None) => vec![load_vectors(p)?],
        (None, Some(n)) => {
            let c = compiled
                .as_ref()
                .ok_or_else(|| bad("--random needs a kernel source".into()))?;
            let seed = s.seed.unwrap_or_else(seed_from_env);
            println!("seed: {seed:#x}");
            random_vectors(&c.source, seed, n)
        }
        (Some(_), Some(_)) => return Err(bad("--vectors and --random are exclusive".into())),
        (None, None) => return Err(bad("give --vectors <file> or --random <n>".into())),
    };
    let mut failed = false;
    for (k, v) in vectors.iter().enumerate() {
        if vectors.len() > 1 {
            println!("-- vector {k}");
        }
        let mut cfg = SimConfig::from_vectors(&nl, v).map_err(|e| bad(e.to_string()))?;
        cfg.max_cycles = s.max_cycles;
        cfg.record_trace = true;
        let r = print_outputs(&nl, &cfg)?;
        println!("{}", measure(&r.trace));
        if let Some(p) = &s.trace {
            let p = if vectors.len() > 1 {
                PathBuf::from(format!("{}.{k}", p.display()))
            } else {
                p.clone()
            };
            write_all(&[(p, r.trace.to_json_lines())])?;
        }
        if s.check_oracle {
            let c = compiled
                .as_ref()
                .ok_or_else(|| bad("--check-oracle needs a kernel source".into()))?;
            let tables = oracle_tables(&c.source, &opts.luts).map_err(|e| bad(format!("oracle: {e}")))?;
            let gold = interpret_oracle(&c.source, v, &tables).map_err(|e| bad(format!("oracle: {e}")))?;
            let (got, _) = simulated_outputs(&nl, v).map_err(fail(EXIT_CHECK))?;
            if got == gold {
                println!("PASS");
            } else {
                println!("FAIL");
                failed = true;
            }
        }
    }
    if failed {
        return Err(fail(EXIT_CHECK)("simulation differs from the reference interpreter".into()));
    }
    Ok(())
}

fn cmd_report(r: &ReportCmd) -> Result<(), Failure> {
    let (c, _) = compile_kernel(&r.kernel, false)?;
    print!("{}", report(&c));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Command::Compile(c) => cmd_compile(c),
        Command::Sim(s) => cmd_sim(s),
        Command::Report(r) => cmd_report(r),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
