// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use minihls::corpus::corpus_dir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minihls"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("minihls-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn src(name: &str) -> PathBuf {
    corpus_dir().join(format!("{name}.c"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fir_vectors(dir: &Path) -> PathBuf {
    let p = dir.join("fir.json");
    let a: Vec<String> = (0..21).map(|k| k.to_string()).collect();
    fs::write(&p, format!("{{\"memories\": {{\"A\": [{}]}}}}", a.join(", "))).unwrap();
    p
}

#[test]
fn compile_writes_design_testbench_and_log() {
    let d = scratch("compile");
    let out = d.join("fir.vhd");
    let o = bin()
        .args(["compile", src("fir").to_str().unwrap(), "-o", out.to_str().unwrap()])
        .args(["--dump-ir", "--dump-netlist", "--dump-passes"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["fir.vhd", "fir_tb.vhd", "fir.log", "fir.ir", "fir.netlist", "fir.passes"] {
        assert!(d.join(f).exists(), "{f} missing");
    }
    let log = fs::read_to_string(d.join("fir.log")).unwrap();
    assert!(log.starts_with("options: bus 32"), "{log}");
    assert!(log.contains("netlist_check: ok"));
    let golden = fs::read_to_string(corpus_dir().join("golden/fir.netlist")).unwrap();
    assert_eq!(fs::read_to_string(d.join("fir.netlist")).unwrap(), golden);
}

#[test]
fn missing_lut_binding_is_an_input_error() {
    let d = scratch("lut");
    let o = bin()
        .args(["compile", src("lut_pdf").to_str().unwrap(), "-o"])
        .arg(d.join("x.vhd"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unbound lookup table 'pdf'"), "{}", stderr(&o));
    assert!(fs::read_dir(&d).unwrap().next().is_none(), "partial output written");

    let table = format!("pdf={}", corpus_dir().join("pdf.txt").display());
    let o = bin()
        .args(["compile", src("lut_pdf").to_str().unwrap(), "--lut", &table, "--lut-style", "rom", "-o"])
        .arg(d.join("x.vhd"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(d.join("x.vhd")).unwrap().contains("entity rom_pdf is"));
}

#[test]
fn sim_checks_against_the_interpreter() {
    let d = scratch("sim");
    let v = fir_vectors(&d);
    let trace = d.join("trace.jsonl");
    let o = bin()
        .args(["sim", src("fir").to_str().unwrap(), "--check-oracle", "--vectors"])
        .arg(&v)
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    let s = stdout(&o);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(s.contains("PASS"), "{s}");
    assert!(s.contains("reads[A]=21"), "{s}");
    assert!(s.contains("results/cycle=1"), "{s}");
    let lines = fs::read_to_string(&trace).unwrap();
    assert_eq!(lines.lines().count(), 28);
}

#[test]
fn sim_prints_the_final_sum() {
    let d = scratch("acc");
    let p = d.join("acc.json");
    fs::write(&p, r#"{"memories": {"A": [1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,-16]}}"#).unwrap();
    let o = bin().args(["sim", src("accumulator").to_str().unwrap(), "--vectors"]).arg(&p).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("sum = 104"), "{}", stdout(&o));
}

#[test]
fn sim_reports_the_missing_array() {
    let d = scratch("missing");
    let p = d.join("empty.json");
    fs::write(&p, "{}").unwrap();
    let o = bin().args(["sim", src("fir").to_str().unwrap(), "--vectors"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("'A'"), "{}", stderr(&o));
}

#[test]
fn sim_runs_a_netlist_dump() {
    let d = scratch("dump");
    let v = fir_vectors(&d);
    let o = bin()
        .arg("sim")
        .arg(corpus_dir().join("golden/fir.netlist"))
        .arg("--vectors")
        .arg(&v)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("C = [42, 65,"), "{}", stdout(&o));
}

#[test]
fn report_lists_depth_window_and_throughput() {
    let o = bin().args(["report", src("fir").to_str().unwrap()]).output().unwrap();
    let s = stdout(&o);
    assert!(o.status.success());
    assert!(s.contains("pipeline depth: 4"), "{s}");
    assert!(s.contains("window A: shape [5] stride [1]"), "{s}");
    assert!(s.contains("throughput: 1 firings/cycle"), "{s}");

    let o = bin()
        .args(["report", src("dct8").to_str().unwrap(), "--unroll", "k=full"])
        .output()
        .unwrap();
    let s = stdout(&o);
    assert!(s.contains("8 outputs/firing"), "{s}");
    assert!(s.contains("published 19 bits"), "{s}");
}

#[test]
fn identity_kernel_is_one_stage() {
    let d = scratch("identity");
    let p = d.join("id.c");
    fs::write(&p, "void id(int8_t A[4], int8_t B[4]) { for (int i = 0; i < 4; i = i + 1) { B[i] = A[i]; } }").unwrap();
    let o = bin().arg("report").arg(&p).output().unwrap();
    let s = stdout(&o);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(s.contains("pipeline depth: 1"), "{s}");
    assert!(s.contains("data path registers: 1"), "{s}");
}

#[test]
fn bad_bus_width_is_rejected() {
    let o = bin().args(["report", src("fir").to_str().unwrap(), "--bus", "12"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
