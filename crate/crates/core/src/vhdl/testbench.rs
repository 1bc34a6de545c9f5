// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::netlist::{Direction, MemKind, Netlist};
use crate::sim::{MemoryImage, TestVectors};

use super::emit::{lit, vec_type, HEADER};
use super::names::sanitize;
use super::{EmitConfig, EmitError};

/// Stimulus and expected results for one testbench run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TestbenchData {
    pub vectors: TestVectors,
    /// Expected output array contents; `None` cells are not checked.
    pub expected_arrays: BTreeMap<String, Vec<Option<i64>>>,
    pub expected_scalars: BTreeMap<String, i64>,
    pub max_cycles: u64,
}

fn port_ident(name: &str, cfg: &EmitConfig) -> String {
    match name {
        "clk" => cfg.clock.clone(),
        "rst" => cfg.reset.clone(),
        n => sanitize(n),
    }
}

/// A self-checking testbench for the entity produced by [`super::emit`]:
/// behavioural memories behind every memory port, a reset and start
/// sequence, and assertions on every expected value once `done` is seen.
pub fn emit_testbench(nl: &Netlist, data: &TestbenchData, cfg: &EmitConfig) -> Result<String, EmitError> {
    let entity = sanitize(cfg.entity.as_deref().unwrap_or(&nl.name));
    let tb = format!("{entity}_tb");
    let clk = port_ident("clk", cfg);
    let rst = port_ident("rst", cfg);
    let shape = |m: String| EmitError::VectorShape(m);
    let mut mem_ports = Vec::new();
    for m in &nl.mems {
        mem_ports.extend([m.addr.as_str(), m.en.as_str(), m.data.as_str()]);
    }

    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "entity {tb} is");
    let _ = writeln!(out, "end entity {tb};\n");
    let _ = writeln!(out, "architecture sim of {tb} is");
    let _ = writeln!(out, "  signal {clk} : std_logic := '0';");
    let _ = writeln!(out, "  signal {rst} : std_logic := '1';");
    let _ = writeln!(out, "  signal finished : boolean := false;");
    for p in nl.ports.iter().filter(|p| p.name != "clk" && p.name != "rst") {
        let id = port_ident(&p.name, cfg);
        let ty = vec_type(p.width, p.signed);
        if p.dir == Direction::In && !mem_ports.contains(&p.name.as_str()) && p.name != "start" {
            let v = data
                .vectors
                .scalars
                .get(&p.name)
                .ok_or_else(|| shape(format!("no value for scalar input '{}'", p.name)))?;
            let _ = writeln!(out, "  signal {id} : {ty} := {};", lit(*v as i128, p.width));
        } else if p.dir == Direction::In {
            let _ = writeln!(out, "  signal {id} : {ty} := (others => '0');");
        } else {
            let _ = writeln!(out, "  signal {id} : {ty};");
        }
    }
    for m in &nl.mems {
        let dp = nl.port(&m.data).ok_or_else(|| EmitError::Netlist(format!("no port '{}'", m.data)))?;
        let ty = vec_type(dp.width, dp.signed);
        let t = sanitize(&format!("{}_mem_t", m.name));
        let s = sanitize(&format!("{}_mem", m.name));
        let _ = writeln!(out, "  type {t} is array (0 to {}) of {ty};", m.depth - 1);
        match m.kind {
            MemKind::Read => {
                let elems = data
                    .vectors
                    .memories
                    .get(&m.name)
                    .ok_or_else(|| shape(format!("no contents for input array '{}'", m.name)))?;
                let img = MemoryImage::pack(m, elems).map_err(|e| shape(e.to_string()))?;
                let words: Vec<String> = img
                    .contents
                    .iter()
                    .map(|w| lit(w.unwrap_or(0) as u64 as i128, dp.width))
                    .collect();
                let _ = writeln!(out, "  constant {s} : {t} := (");
                for (k, w) in words.iter().enumerate() {
                    let sep = if k + 1 == words.len() { "" } else { "," };
                    let _ = writeln!(out, "    {k} => {w}{sep}");
                }
                let _ = writeln!(out, "  );");
            }
            MemKind::Write => {
                let _ = writeln!(out, "  signal {s} : {t} := (others => (others => '0'));");
            }
        }
    }
    let _ = writeln!(out, "begin");
    let maps: Vec<String> = nl
        .ports
        .iter()
        .map(|p| {
            let id = port_ident(&p.name, cfg);
            format!("{id} => {id}")
        })
        .collect();
    let _ = writeln!(out, "  uut : entity work.{entity} port map (");
    let _ = writeln!(out, "    {}", maps.join(",\n    "));
    let _ = writeln!(out, "  );");
    let _ = writeln!(out, "  {clk} <= not {clk} after 5 ns when not finished else '0';");

    for m in &nl.mems {
        let s = sanitize(&format!("{}_mem", m.name));
        let (addr, en, d) = (port_ident(&m.addr, cfg), port_ident(&m.en, cfg), port_ident(&m.data, cfg));
        let idx = if nl.port(&m.addr).is_some_and(|p| p.signed) {
            format!("to_integer(unsigned({addr}))")
        } else {
            format!("to_integer({addr})")
        };
        let label = sanitize(&format!("{}_model", m.name));
        let _ = writeln!(out, "  {label} : process ({clk})");
        let _ = writeln!(out, "  begin");
        let _ = writeln!(out, "    if rising_edge({clk}) then");
        let _ = writeln!(out, "      if {en} = \"1\" then");
        let _ = writeln!(out, "        assert {idx} < {} report \"{} address out of range\" severity failure;", m.depth, m.name);
        match m.kind {
            MemKind::Read => {
                let _ = writeln!(out, "        {d} <= {s}({idx});");
            }
            MemKind::Write => {
                let _ = writeln!(out, "        {s}({idx}) <= {d};");
            }
        }
        let _ = writeln!(out, "      end if;");
        let _ = writeln!(out, "    end if;");
        let _ = writeln!(out, "  end process {label};");
    }

    let done = port_ident("done", cfg);
    let start = port_ident("start", cfg);
    let _ = writeln!(out, "  stim : process");
    let _ = writeln!(out, "    variable cycles : integer := 0;");
    let _ = writeln!(out, "  begin");
    let _ = writeln!(out, "    wait until rising_edge({clk});");
    let _ = writeln!(out, "    wait until rising_edge({clk});");
    let _ = writeln!(out, "    {rst} <= '0';");
    let _ = writeln!(out, "    {start} <= \"1\";");
    let _ = writeln!(out, "    wait until rising_edge({clk});");
    let _ = writeln!(out, "    {start} <= \"0\";");
    let _ = writeln!(out, "    wait until falling_edge({clk});");
    let _ = writeln!(out, "    while {done} = \"0\" and cycles < {} loop", data.max_cycles);
    let _ = writeln!(out, "      wait until falling_edge({clk});");
    let _ = writeln!(out, "      cycles := cycles + 1;");
    let _ = writeln!(out, "    end loop;");
    let _ = writeln!(out, "    assert {done} = \"1\" report \"timeout\" severity failure;");
    for m in nl.mems.iter().filter(|m| m.kind == MemKind::Write) {
        let Some(exp) = data.expected_arrays.get(&m.name) else {
            continue;
        };
        if exp.len() != m.elements {
            return Err(shape(format!(
                "output array '{}' holds {} elements, {} expected values given",
                m.name,
                m.elements,
                exp.len()
            )));
        }
        let s = sanitize(&format!("{}_mem", m.name));
        let epw = m.elements_per_word();
        let w = m.element_width;
        for (k, v) in exp.iter().enumerate() {
            let Some(v) = v else { continue };
            let lo = (k % epw) as u32 * w;
            let _ = writeln!(
                out,
                "    assert {s}({})({} downto {lo}) = {} report \"{}[{k}] mismatch\" severity error;",
                k / epw,
                lo + w - 1,
                lit(*v as i128, w),
                m.name
            );
        }
    }
    for (name, v) in &data.expected_scalars {
        let p = nl
            .port(name)
            .filter(|p| p.dir == Direction::Out)
            .ok_or_else(|| shape(format!("no output port '{name}'")))?;
        let _ = writeln!(
            out,
            "    assert {} = {} report \"{name} mismatch\" severity error;",
            port_ident(name, cfg),
            lit(*v as i128, p.width)
        );
    }
    let _ = writeln!(out, "    report \"{tb} finished after \" & integer'image(cycles) & \" cycles\" severity note;");
    let _ = writeln!(out, "    finished <= true;");
    let _ = writeln!(out, "    wait;");
    let _ = writeln!(out, "  end process stim;");
    let _ = writeln!(out, "end architecture sim;");
    Ok(out)
}
