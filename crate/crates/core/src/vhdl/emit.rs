// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::dataflow::LutSpec;
use crate::frontend::wrap_to;
use crate::netlist::{check, CombNode, Direction, Fsm, NetOp, Netlist};

use super::names::{sanitize, NameMap};
use super::{EmitConfig, EmitError, LutStyle};

pub(crate) const HEADER: &str = "library ieee;\nuse ieee.std_logic_1164.all;\nuse ieee.numeric_std.all;\n";

pub(crate) fn vec_type(w: u32, s: bool) -> String {
    format!("{}({} downto 0)", if s { "signed" } else { "unsigned" }, w - 1)
}

/// Bit-string literal of `v` wrapped to `w` bits.
pub(crate) fn lit(v: i128, w: u32) -> String {
    let bits = wrap_to(v, w, false) as u128;
    let s: String = (0..w).rev().map(|k| if bits >> k & 1 == 1 { '1' } else { '0' }).collect();
    format!("\"{s}\"")
}

/// Width a value needs as a signed vector.
fn ew(w: u32, s: bool) -> u32 {
    w + !s as u32
}

/// `e` of type `(w, s)` as a signed vector of `width >= ew(w, s)` bits.
fn widen(e: &str, w: u32, s: bool, width: u32) -> String {
    match (s, width == w) {
        (true, true) => e.to_string(),
        (true, false) => format!("resize({e}, {width})"),
        (false, _) => format!("signed(resize({e}, {width}))"),
    }
}

/// A signed expression of `width` bits wrapped into type `(w, s)`.
fn fit(e: &str, width: u32, w: u32, s: bool) -> String {
    if s && w == width {
        return e.to_string();
    }
    let u = if w < width {
        format!("resize(unsigned({e}), {w})")
    } else if w > width {
        format!("unsigned(resize({e}, {w}))")
    } else {
        format!("unsigned({e})")
    };
    if s {
        format!("signed({u})")
    } else {
        u
    }
}

/// Expression `e` of type `from` converted by value to type `to`.
fn convert(e: &str, from: (u32, bool), to: (u32, bool)) -> String {
    if from == to {
        e.to_string()
    } else if from.0 == to.0 {
        format!("{}({e})", if to.1 { "signed" } else { "unsigned" })
    } else {
        let w = ew(from.0, from.1);
        fit(&widen(e, from.0, from.1, w), w, to.0, to.1)
    }
}

fn index_of(e: &str, signed: bool) -> String {
    if signed {
        format!("to_integer(unsigned({e}))")
    } else {
        format!("to_integer({e})")
    }
}

fn table_literal(out: &mut String, l: &LutSpec, indent: &str) {
    let w = l.data.width as u32;
    let n = l.contents.len();
    for (k, chunk) in l.contents.chunks(8).enumerate() {
        let items: Vec<String> = chunk.iter().map(|&v| lit(v as i128, w)).collect();
        let last = (k + 1) * 8 >= n;
        let _ = writeln!(out, "{indent}{}{}", items.join(", "), if last { "" } else { "," });
    }
}

struct Ctx<'a> {
    nl: &'a Netlist,
    names: NameMap,
    types: BTreeMap<String, (u32, bool)>,
    consts: HashMap<&'a str, i64>,
    style: LutStyle,
}

impl Ctx<'_> {
    fn id(&self, n: &str) -> &str {
        self.names.get(n)
    }

    fn ty(&self, n: &str) -> (u32, bool) {
        self.types[n]
    }

    fn wide(&self, n: &str, width: u32) -> String {
        let (w, s) = self.ty(n);
        widen(self.id(n), w, s, width)
    }

    fn ew(&self, n: &str) -> u32 {
        let (w, s) = self.ty(n);
        ew(w, s)
    }

    fn conv(&self, n: &str, to: (u32, bool)) -> String {
        convert(self.id(n), self.ty(n), to)
    }

    fn amount(&self, n: &str) -> String {
        match self.consts.get(n) {
            Some(v) => v.to_string(),
            None => index_of(self.id(n), self.ty(n).1),
        }
    }

    fn node(&self, n: &CombNode, out: &mut String) -> Result<(), EmitError> {
        let r = self.id(&n.name);
        let t = (n.width, n.signed);
        let o = |k: usize| n.operands[k].as_str();
        let rhs = match &n.op {
            NetOp::Const(v) => lit(*v as i128, n.width),
            NetOp::Copy => self.conv(o(0), t),
            NetOp::Add | NetOp::Sub | NetOp::And | NetOp::Or | NetOp::Xor => {
                let arith = matches!(n.op, NetOp::Add | NetOp::Sub);
                let w = self.ew(o(0)).max(self.ew(o(1))) + arith as u32;
                let sym = match n.op {
                    NetOp::Add => "+",
                    NetOp::Sub => "-",
                    NetOp::And => "and",
                    NetOp::Or => "or",
                    _ => "xor",
                };
                let e = format!("{} {sym} {}", self.wide(o(0), w), self.wide(o(1), w));
                fit(&format!("({e})"), w, n.width, n.signed)
            }
            NetOp::Mul => {
                let (wa, wb) = (self.ew(o(0)), self.ew(o(1)));
                let e = format!("({} * {})", self.wide(o(0), wa), self.wide(o(1), wb));
                fit(&e, wa + wb, n.width, n.signed)
            }
            NetOp::Not => {
                let w = self.ew(o(0));
                fit(&format!("(not {})", self.wide(o(0), w)), w, n.width, n.signed)
            }
            NetOp::Shl => {
                let w = self.ew(o(0)).max(n.width);
                let e = format!("shift_left({}, {})", self.wide(o(0), w), self.amount(o(1)));
                fit(&e, w, n.width, n.signed)
            }
            NetOp::Shr => {
                let w = self.ew(o(0));
                let e = format!("shift_right({}, {})", self.wide(o(0), w), self.amount(o(1)));
                fit(&e, w, n.width, n.signed)
            }
            NetOp::Eq | NetOp::Ne | NetOp::Lt | NetOp::Le | NetOp::Gt | NetOp::Ge => {
                let w = self.ew(o(0)).max(self.ew(o(1)));
                let sym = match n.op {
                    NetOp::Eq => "=",
                    NetOp::Ne => "/=",
                    NetOp::Lt => "<",
                    NetOp::Le => "<=",
                    NetOp::Gt => ">",
                    _ => ">=",
                };
                format!(
                    "{} when {} {sym} {} else {}",
                    lit(1, n.width),
                    self.wide(o(0), w),
                    self.wide(o(1), w),
                    lit(0, n.width)
                )
            }
            NetOp::Select => format!(
                "{} when {} = \"1\" else {}",
                self.conv(o(1), t),
                self.id(o(0)),
                self.conv(o(2), t)
            ),
            NetOp::Mux => {
                let sel = index_of(self.id(o(0)), self.ty(o(0)).1);
                let _ = writeln!(out, "  with {sel} select {r} <=");
                for (k, x) in n.operands[1..].iter().enumerate() {
                    let _ = writeln!(out, "    {} when {k},", self.conv(x, t));
                }
                let _ = writeln!(out, "    (others => '0') when others;");
                return Ok(());
            }
            NetOp::Slice(lo) => {
                let (aw, asg) = self.ty(o(0));
                if lo + n.width > aw {
                    return Err(EmitError::Netlist(format!("slice '{}' exceeds its operand", n.name)));
                }
                let e = format!("{}({} downto {lo})", self.id(o(0)), lo + n.width - 1);
                convert(&e, (n.width, asg), t)
            }
            NetOp::Lut(table) => {
                let l = self
                    .nl
                    .luts
                    .iter()
                    .find(|l| l.name == *table)
                    .ok_or_else(|| EmitError::Netlist(format!("no table '{table}'")))?;
                let data = (l.data.width as u32, l.data.signed);
                match self.style {
                    LutStyle::ConstantArray => {
                        let e = format!(
                            "{}({})",
                            self.id(&format!("\0lut:{table}")),
                            index_of(self.id(o(0)), self.ty(o(0)).1)
                        );
                        convert(&e, data, t)
                    }
                    LutStyle::RomComponent => {
                        let base = &n.name;
                        let addr = self.id(&format!("\0rom_addr:{base}"));
                        let _ = writeln!(
                            out,
                            "  {addr} <= {};",
                            self.conv(o(0), (l.addr_width, false))
                        );
                        let _ = writeln!(
                            out,
                            "  {} : {} port map (addr => {addr}, data => {});",
                            self.id(&format!("\0rom_inst:{base}")),
                            self.id(&format!("\0rom:{table}")),
                            self.id(&format!("\0rom_data:{base}"))
                        );
                        convert(self.id(&format!("\0rom_data:{base}")), data, t)
                    }
                }
            }
        };
        let _ = writeln!(out, "  {r} <= {rhs};");
        Ok(())
    }

    fn fsm_state_name(&self, f: &Fsm, k: usize) -> &str {
        self.id(&format!("\0state:{}:{}", f.name, f.states[k]))
    }

    fn fsm(&self, f: &Fsm, out: &mut String) {
        let st = self.id(&f.state);
        let next = self.id(&format!("\0next:{}", f.name));
        let mut sens: Vec<&str> = vec![st];
        for t in &f.transitions {
            if let Some(c) = &t.cond {
                let c = self.id(c);
                if !sens.contains(&c) {
                    sens.push(c);
                }
            }
        }
        let label = self.id(&format!("\0proc:{}", f.name));
        let _ = writeln!(out, "  {label} : process ({})", sens.join(", "));
        let _ = writeln!(out, "  begin");
        let _ = writeln!(out, "    {next} <= {st};");
        let _ = writeln!(out, "    case {st} is");
        for k in 0..f.states.len() {
            let _ = writeln!(out, "      when {} =>", self.fsm_state_name(f, k));
            let mut arms = 0;
            for t in f.transitions.iter().filter(|t| t.from == k) {
                let to = self.fsm_state_name(f, t.to);
                match &t.cond {
                    Some(c) => {
                        let kw = if arms == 0 { "if" } else { "elsif" };
                        let _ = writeln!(out, "        {kw} {} = \"1\" then", self.id(c));
                        let _ = writeln!(out, "          {next} <= {to};");
                        arms += 1;
                    }
                    None if arms == 0 => {
                        let _ = writeln!(out, "        {next} <= {to};");
                        arms = -1;
                        break;
                    }
                    None => {
                        let _ = writeln!(out, "        else");
                        let _ = writeln!(out, "          {next} <= {to};");
                        break;
                    }
                }
            }
            if arms > 0 {
                let _ = writeln!(out, "        end if;");
            } else if arms == 0 {
                let _ = writeln!(out, "        null;");
            }
        }
        let _ = writeln!(out, "    end case;");
        let _ = writeln!(out, "  end process {label};");
        for o in &f.outputs {
            let conds: Vec<String> = o
                .states
                .iter()
                .map(|&s| format!("{st} = {}", self.fsm_state_name(f, s)))
                .collect();
            let sig = self.id(&o.signal);
            if conds.is_empty() {
                let _ = writeln!(out, "  {sig} <= \"0\";");
            } else {
                let _ = writeln!(out, "  {sig} <= \"1\" when {} else \"0\";", conds.join(" or "));
            }
        }
    }
}

fn build_names(nl: &Netlist, cfg: &EmitConfig, entity: &str) -> Result<NameMap, EmitError> {
    let mut names = NameMap::default();
    names.reserve(entity)?;
    names.reserve("regs")?;
    let out_ports: BTreeSet<&str> = nl
        .ports
        .iter()
        .filter(|p| p.dir == Direction::Out)
        .map(|p| p.name.as_str())
        .collect();
    for p in &nl.ports {
        let ident = match p.name.as_str() {
            "clk" => cfg.clock.clone(),
            "rst" => cfg.reset.clone(),
            n => sanitize(n),
        };
        let key = format!("\0port:{}", p.name);
        names.insert(&key, ident)?;
        if p.dir == Direction::In {
            names.alias(&p.name, &key);
        }
    }
    let internal = |n: &str| {
        if out_ports.contains(n) {
            sanitize(&format!("{n}_int"))
        } else {
            sanitize(n)
        }
    };
    for r in &nl.regs {
        names.insert(&r.name, internal(&r.name))?;
    }
    for n in &nl.nodes {
        names.insert(&n.name, internal(&n.name))?;
    }
    for f in &nl.fsms {
        names.insert(&f.state, internal(&f.state))?;
        names.insert(&format!("\0next:{}", f.name), sanitize(&format!("{}_next", f.state)))?;
        names.insert(&format!("\0type:{}", f.name), sanitize(&format!("{}_state_t", f.name)))?;
        names.insert(&format!("\0proc:{}", f.name), sanitize(&format!("{}_next_p", f.name)))?;
        for s in &f.states {
            let ident = sanitize(&format!("{}_S_{s}", f.name.to_ascii_uppercase()));
            names.insert(&format!("\0state:{}:{s}", f.name), ident)?;
        }
        for o in &f.outputs {
            names.insert(&o.signal, internal(&o.signal))?;
        }
    }
    for l in &nl.luts {
        match cfg.lut_style {
            LutStyle::ConstantArray => {
                names.insert(&format!("\0lut:{}", l.name), sanitize(&format!("TBL_{}", l.name)))?;
                names.insert(&format!("\0luttype:{}", l.name), sanitize(&format!("TBL_{}_t", l.name)))?;
            }
            LutStyle::RomComponent => {
                names.insert(&format!("\0rom:{}", l.name), sanitize(&format!("rom_{}", l.name)))?;
            }
        }
    }
    if cfg.lut_style == LutStyle::RomComponent {
        for n in nl.nodes.iter().filter(|n| matches!(n.op, NetOp::Lut(_))) {
            names.insert(&format!("\0rom_addr:{}", n.name), sanitize(&format!("{}_addr", n.name)))?;
            names.insert(&format!("\0rom_data:{}", n.name), sanitize(&format!("{}_rom", n.name)))?;
            names.insert(&format!("\0rom_inst:{}", n.name), sanitize(&format!("u_{}", n.name)))?;
        }
    }
    Ok(names)
}

fn rom_entity(out: &mut String, l: &LutSpec, name: &str) {
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "entity {name} is");
    let _ = writeln!(out, "  port (");
    let _ = writeln!(out, "    addr : in {};", vec_type(l.addr_width, false));
    let _ = writeln!(out, "    data : out {}", vec_type(l.data.width as u32, l.data.signed));
    let _ = writeln!(out, "  );");
    let _ = writeln!(out, "end entity {name};\n");
    let _ = writeln!(out, "architecture rtl of {name} is");
    let _ = writeln!(
        out,
        "  type rom_t is array (0 to {}) of {};",
        l.contents.len() - 1,
        vec_type(l.data.width as u32, l.data.signed)
    );
    let _ = writeln!(out, "  constant contents : rom_t := (");
    table_literal(out, l, "    ");
    let _ = writeln!(out, "  );");
    let _ = writeln!(out, "begin");
    let _ = writeln!(out, "  data <= contents(to_integer(addr));");
    let _ = writeln!(out, "end architecture rtl;\n");
}

/// Emit `nl` as one VHDL-93 design: an entity with the netlist's ports,
/// concurrent assignments for combinational nodes, one combinational
/// process per state machine and a single clocked process holding every
/// register and state register.
pub fn emit(nl: &Netlist, cfg: &EmitConfig) -> Result<String, EmitError> {
    let problems = check(nl);
    if !problems.is_empty() {
        return Err(EmitError::Netlist(problems.join("; ")));
    }
    let entity = sanitize(cfg.entity.as_deref().unwrap_or(&nl.name));
    let states: BTreeSet<&str> = nl.fsms.iter().map(|f| f.state.as_str()).collect();
    let reads_state = nl.nodes.iter().flat_map(|n| &n.operands).any(|o| states.contains(o.as_str()))
        || nl.regs.iter().any(|r| states.contains(r.d.as_str()));
    if reads_state {
        return Err(EmitError::Netlist("a state register is read as data".into()));
    }
    let names = build_names(nl, cfg, &entity)?;
    let ctx = Ctx {
        nl,
        names,
        types: nl.signal_types(),
        consts: nl
            .nodes
            .iter()
            .filter_map(|n| match n.op {
                NetOp::Const(v) => Some((n.name.as_str(), v)),
                _ => None,
            })
            .collect(),
        style: cfg.lut_style,
    };
    let id = |n: &str| ctx.id(n).to_string();

    let mut out = String::new();
    let _ = writeln!(out, "-- Kernel '{}': generated RTL.", nl.name);
    for m in &nl.mems {
        let _ = writeln!(
            out,
            "-- memory {} ({}): {} words of {} bits, {} elements of {}{}, addr {} en {} data {}",
            m.name,
            match m.kind {
                crate::netlist::MemKind::Read => "read",
                crate::netlist::MemKind::Write => "write",
            },
            m.depth,
            m.word_width,
            m.elements,
            if m.element_signed { "s" } else { "u" },
            m.element_width,
            m.addr,
            m.en,
            m.data
        );
    }
    let _ = writeln!(out);
    if cfg.lut_style == LutStyle::RomComponent {
        for l in &nl.luts {
            rom_entity(&mut out, l, &id(&format!("\0rom:{}", l.name)));
        }
    }

    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "entity {entity} is");
    let _ = writeln!(out, "  port (");
    let ports: Vec<String> = nl
        .ports
        .iter()
        .map(|p| {
            let dir = if p.dir == Direction::In { "in" } else { "out" };
            let ty = if p.name == "clk" || p.name == "rst" {
                "std_logic".to_string()
            } else {
                vec_type(p.width, p.signed)
            };
            format!("    {} : {dir} {ty}", id(&format!("\0port:{}", p.name)))
        })
        .collect();
    let _ = writeln!(out, "{}", ports.join(";\n"));
    let _ = writeln!(out, "  );");
    let _ = writeln!(out, "end entity {entity};\n");

    let _ = writeln!(out, "architecture rtl of {entity} is");
    for l in &nl.luts {
        let ty = vec_type(l.data.width as u32, l.data.signed);
        match cfg.lut_style {
            LutStyle::ConstantArray => {
                let t = id(&format!("\0luttype:{}", l.name));
                let _ = writeln!(out, "  type {t} is array (0 to {}) of {ty};", l.contents.len() - 1);
                let _ = writeln!(out, "  constant {} : {t} := (", id(&format!("\0lut:{}", l.name)));
                table_literal(&mut out, l, "    ");
                let _ = writeln!(out, "  );");
            }
            LutStyle::RomComponent => {
                let _ = writeln!(out, "  component {}", id(&format!("\0rom:{}", l.name)));
                let _ = writeln!(out, "    port (");
                let _ = writeln!(out, "      addr : in {};", vec_type(l.addr_width, false));
                let _ = writeln!(out, "      data : out {ty}");
                let _ = writeln!(out, "    );");
                let _ = writeln!(out, "  end component;");
            }
        }
    }
    for f in &nl.fsms {
        let lits: Vec<String> = (0..f.states.len()).map(|k| ctx.fsm_state_name(f, k).to_string()).collect();
        let _ = writeln!(out, "  type {} is ({});", id(&format!("\0type:{}", f.name)), lits.join(", "));
    }
    for r in &nl.regs {
        let _ = writeln!(out, "  signal {} : {};", id(&r.name), vec_type(r.width, r.signed));
    }
    for n in &nl.nodes {
        let _ = writeln!(out, "  signal {} : {};", id(&n.name), vec_type(n.width, n.signed));
    }
    for f in &nl.fsms {
        let t = id(&format!("\0type:{}", f.name));
        let _ = writeln!(out, "  signal {} : {t};", id(&f.state));
        let _ = writeln!(out, "  signal {} : {t};", id(&format!("\0next:{}", f.name)));
        for o in &f.outputs {
            let _ = writeln!(out, "  signal {} : {};", id(&o.signal), vec_type(1, false));
        }
    }
    if cfg.lut_style == LutStyle::RomComponent {
        for n in &nl.nodes {
            if let NetOp::Lut(t) = &n.op {
                let l = nl.luts.iter().find(|l| l.name == *t).expect("checked table");
                let _ = writeln!(
                    out,
                    "  signal {} : {};",
                    id(&format!("\0rom_addr:{}", n.name)),
                    vec_type(l.addr_width, false)
                );
                let _ = writeln!(
                    out,
                    "  signal {} : {};",
                    id(&format!("\0rom_data:{}", n.name)),
                    vec_type(l.data.width as u32, l.data.signed)
                );
            }
        }
    }
    let _ = writeln!(out, "begin");

    let const_mul = nl
        .nodes
        .iter()
        .any(|n| n.op == NetOp::Mul && n.operands.iter().any(|o| ctx.consts.contains_key(o.as_str())));
    if const_mul {
        let _ = writeln!(
            out,
            "  -- Constant multiplies are written as '*'; a LUT-based multiplier style is a synthesis option."
        );
    }
    for n in &nl.nodes {
        ctx.node(n, &mut out)?;
    }
    for f in &nl.fsms {
        ctx.fsm(f, &mut out);
    }

    let clk = id("\0port:clk");
    let rst = id("\0port:rst");
    let _ = writeln!(out, "  regs : process ({clk})");
    let _ = writeln!(out, "  begin");
    let _ = writeln!(out, "    if rising_edge({clk}) then");
    let _ = writeln!(out, "      if {rst} = '1' then");
    for r in &nl.regs {
        let _ = writeln!(out, "        {} <= {};", id(&r.name), lit(r.reset as i128, r.width));
    }
    for f in &nl.fsms {
        let _ = writeln!(out, "        {} <= {};", id(&f.state), ctx.fsm_state_name(f, f.reset));
    }
    let _ = writeln!(out, "      else");
    for r in &nl.regs {
        let d = ctx.conv(&r.d, (r.width, r.signed));
        match &r.en {
            Some(en) => {
                let _ = writeln!(out, "        if {} = \"1\" then", id(en));
                let _ = writeln!(out, "          {} <= {d};", id(&r.name));
                let _ = writeln!(out, "        end if;");
            }
            None => {
                let _ = writeln!(out, "        {} <= {d};", id(&r.name));
            }
        }
    }
    for f in &nl.fsms {
        let _ = writeln!(out, "        {} <= {};", id(&f.state), id(&format!("\0next:{}", f.name)));
    }
    let _ = writeln!(out, "      end if;");
    let _ = writeln!(out, "    end if;");
    let _ = writeln!(out, "  end process regs;");

    for p in nl.ports.iter().filter(|p| p.dir == Direction::Out) {
        let _ = writeln!(
            out,
            "  {} <= {};",
            id(&format!("\0port:{}", p.name)),
            ctx.conv(&p.name, (p.width, p.signed))
        );
    }
    let _ = writeln!(out, "end architecture rtl;");
    Ok(out)
}
