//! Generator for the desk-scale SoC models and their bundles.
//!
//! Every variant shares a core stub, a public crossbar with a registered
//! grant, and a zero-initialised memory. The core stub shifts out a request
//! pattern loaded from its inputs; the pattern and the request address are
//! core-internal, so they are free in the proofs. Arbitration gives the core
//! priority: each cycle with a core request on the public crossbar denies
//! the spy engine its grant in the next cycle.
//!
//! * `vulnerable`: a DMA engine on the public crossbar starts the timer with
//!   its completion pulse.
//! * `hwpe`: a sequential accelerator increments memory cells, one per
//!   granted cycle.
//! * `fixed`: the vulnerable SoC with a second crossbar and a private memory;
//!   core requests to the private region never reach the public crossbar.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{ProofConfig, SolverConfig, DEFAULT_MAX_K};
use crate::demo::{InputValue, Observation, Scenario, ScenarioStep};
use crate::error::{Error, Result};
use crate::miter::{Cmp, Cycles, SignalConstraint};
use crate::netlist::Netlist;

pub const MAX_MEMORY_WORDS: u32 = 64;
pub const MAX_COUNTER_BITS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Vulnerable,
    Hwpe,
    Fixed,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Vulnerable, Variant::Hwpe, Variant::Fixed];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Vulnerable => "vulnerable",
            Variant::Hwpe => "hwpe",
            Variant::Fixed => "fixed",
        }
    }

    fn has_dma(self) -> bool {
        self != Variant::Hwpe
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}` (expected vulnerable, hwpe or fixed)")))
    }
}

/// Widths of the generated SoC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocParams {
    /// Memory address width; the memory has `2^addr_bits` words.
    pub addr_bits: u32,
    pub data_bits: u32,
    /// Length of the core request pattern (maximum victim access count).
    pub pattern_bits: u32,
    /// Width of DMA and HWPE transfer lengths.
    pub len_bits: u32,
    pub timer_bits: u32,
}

impl Default for SocParams {
    fn default() -> Self {
        SocParams {
            addr_bits: 4,
            data_bits: 4,
            pattern_bits: 8,
            len_bits: 4,
            timer_bits: 8,
        }
    }
}

impl SocParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.addr_bits == 0 || 1u32 << self.addr_bits.min(31) > MAX_MEMORY_WORDS {
            return bad(format!("memory depth 2^{} outside 2..={MAX_MEMORY_WORDS} words", self.addr_bits));
        }
        for (what, w) in [
            ("timer", self.timer_bits),
            ("transfer length", self.len_bits),
            ("request pattern", self.pattern_bits),
        ] {
            if w == 0 || w > MAX_COUNTER_BITS {
                return bad(format!("{what} width {w} outside 1..={MAX_COUNTER_BITS}"));
            }
        }
        if self.data_bits == 0 || self.data_bits > MAX_COUNTER_BITS {
            return bad(format!("data width {} outside 1..={MAX_COUNTER_BITS}", self.data_bits));
        }
        Ok(())
    }

    /// Request address with the private-region bit set.
    pub fn private_addr(&self, offset: u64) -> u64 {
        (1 << self.addr_bits) | offset
    }
}

/// A word-level signal under construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sig {
    pub id: u32,
    pub width: u32,
}

/// Emits netlist text with sorts declared on demand and ids allocated in
/// order.
#[derive(Debug, Default)]
pub struct NetlistBuilder {
    text: String,
    next_id: u32,
    bv_sorts: HashMap<u32, u32>,
    array_sorts: HashMap<(u32, u32), u32>,
    consts: HashMap<(u32, u64), Sig>,
}

impl NetlistBuilder {
    pub fn new() -> Self {
        NetlistBuilder {
            next_id: 1,
            ..Default::default()
        }
    }

    fn alloc(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn comment(&mut self, text: &str) {
        for line in text.lines() {
            writeln!(self.text, "; {line}").unwrap();
        }
    }

    pub fn bv(&mut self, width: u32) -> u32 {
        if let Some(&id) = self.bv_sorts.get(&width) {
            return id;
        }
        let id = self.alloc();
        writeln!(self.text, "{id} sort bitvec {width}").unwrap();
        self.bv_sorts.insert(width, id);
        id
    }

    fn array_sort(&mut self, index: u32, elem: u32) -> u32 {
        if let Some(&id) = self.array_sorts.get(&(index, elem)) {
            return id;
        }
        let (i, e) = (self.bv(index), self.bv(elem));
        let id = self.alloc();
        writeln!(self.text, "{id} sort array {i} {e}").unwrap();
        self.array_sorts.insert((index, elem), id);
        id
    }

    pub fn input(&mut self, width: u32, name: &str) -> Sig {
        let s = self.bv(width);
        let id = self.alloc();
        writeln!(self.text, "{id} input {s} {name}").unwrap();
        Sig { id, width }
    }

    pub fn state(&mut self, width: u32, name: &str) -> Sig {
        let s = self.bv(width);
        let id = self.alloc();
        writeln!(self.text, "{id} state {s} {name}").unwrap();
        Sig { id, width }
    }

    /// Array state; the returned width is the element width.
    pub fn array_state(&mut self, index: u32, elem: u32, name: &str) -> Sig {
        let s = self.array_sort(index, elem);
        let id = self.alloc();
        writeln!(self.text, "{id} state {s} {name}").unwrap();
        Sig { id, width: elem }
    }

    /// Array constant with every element equal to `value`.
    pub fn array_const(&mut self, index: u32, elem: u32, value: u64) -> Sig {
        let s = self.array_sort(index, elem);
        let id = self.alloc();
        writeln!(self.text, "{id} const {s} {value:x}").unwrap();
        Sig { id, width: elem }
    }

    pub fn konst(&mut self, width: u32, value: u64) -> Sig {
        if let Some(&s) = self.consts.get(&(width, value)) {
            return s;
        }
        let s = self.bv(width);
        let id = self.alloc();
        writeln!(self.text, "{id} const {s} {value:x}").unwrap();
        let sig = Sig { id, width };
        self.consts.insert((width, value), sig);
        sig
    }

    fn emit(&mut self, op: &str, sort: u32, args: &[u32], name: Option<&str>) -> u32 {
        let id = self.alloc();
        write!(self.text, "{id} {op} {sort}").unwrap();
        for a in args {
            write!(self.text, " {a}").unwrap();
        }
        if let Some(name) = name {
            write!(self.text, " {name}").unwrap();
        }
        self.text.push('\n');
        id
    }

    fn binary(&mut self, op: &str, width: u32, a: Sig, b: Sig, name: Option<&str>) -> Sig {
        let s = self.bv(width);
        Sig {
            id: self.emit(op, s, &[a.id, b.id], name),
            width,
        }
    }

    pub fn not(&mut self, a: Sig) -> Sig {
        let s = self.bv(a.width);
        Sig {
            id: self.emit("not", s, &[a.id], None),
            width: a.width,
        }
    }

    pub fn and(&mut self, a: Sig, b: Sig) -> Sig {
        self.binary("and", a.width, a, b, None)
    }

    pub fn or(&mut self, a: Sig, b: Sig) -> Sig {
        self.binary("or", a.width, a, b, None)
    }

    pub fn add(&mut self, a: Sig, b: Sig) -> Sig {
        self.binary("add", a.width, a, b, None)
    }

    pub fn sub(&mut self, a: Sig, b: Sig) -> Sig {
        self.binary("sub", a.width, a, b, None)
    }

    pub fn eq(&mut self, a: Sig, b: Sig) -> Sig {
        self.binary("eq", 1, a, b, None)
    }

    pub fn ult(&mut self, a: Sig, b: Sig) -> Sig {
        self.binary("ult", 1, a, b, None)
    }

    pub fn concat(&mut self, hi: Sig, lo: Sig) -> Sig {
        self.binary("concat", hi.width + lo.width, hi, lo, None)
    }

    pub fn ite(&mut self, c: Sig, t: Sig, e: Sig) -> Sig {
        let s = self.bv(t.width);
        Sig {
            id: self.emit("ite", s, &[c.id, t.id, e.id], None),
            width: t.width,
        }
    }

    /// Array-valued `ite`.
    pub fn ite_array(&mut self, index: u32, c: Sig, t: Sig, e: Sig) -> Sig {
        let s = self.array_sort(index, t.width);
        Sig {
            id: self.emit("ite", s, &[c.id, t.id, e.id], None),
            width: t.width,
        }
    }

    pub fn slice(&mut self, a: Sig, hi: u32, lo: u32) -> Sig {
        let width = hi - lo + 1;
        let s = self.bv(width);
        let id = self.alloc();
        writeln!(self.text, "{id} slice {s} {} {hi} {lo}", a.id).unwrap();
        Sig { id, width }
    }

    pub fn read(&mut self, mem: Sig, addr: Sig) -> Sig {
        self.binary("read", mem.width, mem, addr, None)
    }

    pub fn write(&mut self, mem: Sig, addr: Sig, data: Sig) -> Sig {
        let s = self.array_sort(addr.width, mem.width);
        Sig {
            id: self.emit("write", s, &[mem.id, addr.id, data.id], None),
            width: mem.width,
        }
    }

    /// Re-emits `a` under a symbol name (as `or a a`).
    pub fn name(&mut self, a: Sig, name: &str) -> Sig {
        self.binary("or", a.width, a, a, Some(name))
    }

    pub fn next(&mut self, state: Sig, expr: Sig) {
        let id = self.alloc();
        writeln!(self.text, "{id} next {} {}", state.id, expr.id).unwrap();
    }

    pub fn init(&mut self, state: Sig, expr: Sig) {
        let id = self.alloc();
        writeln!(self.text, "{id} init {} {}", state.id, expr.id).unwrap();
    }

    pub fn output(&mut self, expr: Sig, name: &str) {
        let id = self.alloc();
        writeln!(self.text, "{id} output {} {name}", expr.id).unwrap();
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Netlist, proof configuration, attack scripts and documentation for one
/// variant.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub variant: Variant,
    pub params: SocParams,
    pub netlist_text: String,
    pub config: ProofConfig,
    pub scenarios: Vec<Scenario>,
    pub readme: String,
}

impl ModelBundle {
    pub fn netlist_file(&self) -> String {
        format!("soc_{}.nl", self.variant)
    }

    pub fn netlist(&self) -> Result<Netlist> {
        Ok(Netlist::parse(&self.netlist_text)?)
    }

    /// Files of the bundle relative to its directory, in a fixed order.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut files = vec![
            (self.netlist_file(), self.netlist_text.clone()),
            ("config.json".to_string(), self.config.to_json() + "\n"),
            ("README.md".to_string(), self.readme.clone()),
        ];
        for s in &self.scenarios {
            files.push((format!("scenarios/{}.json", s.name), s.to_json() + "\n"));
        }
        files
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (rel, content) in self.files() {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, content)?;
        }
        Ok(())
    }
}

struct Core {
    pub_req: Sig,
    priv_req: Option<Sig>,
    addr_lo: Sig,
}

fn core(b: &mut NetlistBuilder, v: Variant, p: &SocParams) -> Core {
    let load = b.input(1, "soc.in.core_load");
    let pattern_in = b.input(p.pattern_bits, "soc.in.core_pattern");
    let addr_in = b.input(p.addr_bits + 1, "soc.in.core_addr");
    let pattern = b.state(p.pattern_bits, "soc.core.pattern");
    let addr = b.state(p.addr_bits + 1, "soc.core.addr");

    let req = b.slice(pattern, 0, 0);
    let req = b.name(req, "soc.core.req_valid");
    let shifted = if p.pattern_bits > 1 {
        let zero = b.konst(1, 0);
        let upper = b.slice(pattern, p.pattern_bits - 1, 1);
        b.concat(zero, upper)
    } else {
        b.konst(1, 0)
    };
    let pattern_next = b.ite(load, pattern_in, shifted);
    let addr_next = b.ite(load, addr_in, addr);
    b.next(pattern, pattern_next);
    b.next(addr, addr_next);
    let zp = b.konst(p.pattern_bits, 0);
    b.init(pattern, zp);
    let za = b.konst(p.addr_bits + 1, 0);
    b.init(addr, za);

    let region = b.slice(addr, p.addr_bits, p.addr_bits);
    let region = b.name(region, "soc.core.region");
    let addr_lo = b.slice(addr, p.addr_bits - 1, 0);
    if v == Variant::Fixed {
        let public = b.not(region);
        let pub_req = b.and(req, public);
        let pub_req = b.name(pub_req, "soc.core.pub_req");
        let priv_req = b.and(req, region);
        let priv_req = b.name(priv_req, "soc.core.priv_req");
        Core {
            pub_req,
            priv_req: Some(priv_req),
            addr_lo,
        }
    } else {
        Core {
            pub_req: req,
            priv_req: None,
            addr_lo,
        }
    }
}

/// Registered request buffer and grant of one crossbar. Returns
/// `(req_valid, req_addr, grant)`.
fn crossbar_regs(b: &mut NetlistBuilder, prefix: &str, grant_bits: u32, p: &SocParams) -> (Sig, Sig, Sig) {
    let valid = b.state(1, &format!("{prefix}.req_valid"));
    let addr = b.state(p.addr_bits, &format!("{prefix}.req_addr"));
    let grant = b.state(grant_bits, &format!("{prefix}.grant"));
    (valid, addr, grant)
}

fn zero_init(b: &mut NetlistBuilder, s: Sig) {
    let z = b.konst(s.width, 0);
    b.init(s, z);
}

pub fn generate_netlist(v: Variant, p: &SocParams) -> Result<String> {
    p.validate()?;
    let mut b = NetlistBuilder::new();
    b.comment(&format!(
        "toy SoC, variant {v}\nparameters: addr_bits={} data_bits={} pattern_bits={} len_bits={} timer_bits={}",
        p.addr_bits, p.data_bits, p.pattern_bits, p.len_bits, p.timer_bits
    ));
    let one1 = b.konst(1, 1);
    let zero1 = b.konst(1, 0);

    b.comment("core stub");
    let c = core(&mut b, v, p);

    b.comment("public crossbar");
    let (xv, xa, xg) = crossbar_regs(&mut b, "soc.xbar", 2, p);
    let g_core = b.konst(2, 1);
    let g_spy = b.konst(2, 2);
    let gnt_core = b.eq(xg, g_core);
    let gnt_core = b.name(gnt_core, "soc.xbar.gnt_core");
    let gnt_spy = b.eq(xg, g_spy);
    let gnt_spy = b.name(gnt_spy, "soc.xbar.gnt_spy");
    let three = b.konst(2, 3);
    let enc = b.ult(xg, three);
    b.name(enc, "soc.xbar.inv_grant_encoding");
    let no_req = b.not(xv);
    let hs = b.or(no_req, gnt_core);
    b.name(hs, "soc.xbar.inv_handshake");

    let mem = b.array_state(p.addr_bits, p.data_bits, "soc.mem.data");

    let spy_active;
    if v.has_dma() {
        b.comment("DMA engine and timer");
        let start = b.input(1, "soc.in.dma_start");
        let len = b.input(p.len_bits, "soc.in.dma_len");
        let active = b.state(1, "soc.dma.active");
        let remaining = b.state(p.len_bits, "soc.dma.remaining");
        let enable = b.state(1, "soc.timer.enable");
        let counter = b.state(p.timer_bits, "soc.timer.counter");
        spy_active = active;

        let adv = b.and(active, gnt_spy);
        let one = b.konst(p.len_bits, 1);
        let last = b.eq(remaining, one);
        let done = b.and(adv, last);
        let done = b.name(done, "soc.dma.done");
        let keep = b.ite(done, zero1, active);
        let active_next = b.ite(start, one1, keep);
        let dec = b.sub(remaining, one);
        let stepped = b.ite(adv, dec, remaining);
        let remaining_next = b.ite(start, len, stepped);
        b.next(active, active_next);
        b.next(remaining, remaining_next);

        let enable_next = b.or(enable, done);
        let enable_next = b.name(enable_next, "soc.timer.counting");
        let tone = b.konst(p.timer_bits, 1);
        let inc = b.add(counter, tone);
        let counter_next = b.ite(enable_next, inc, counter);
        b.next(enable, enable_next);
        b.next(counter, counter_next);
        let max = b.konst(p.timer_bits, (1u64 << p.timer_bits) - 1);
        let at_max = b.eq(counter, max);
        let irq = b.and(enable, at_max);
        b.output(irq, "soc.timer.irq");
        for s in [active, remaining, enable, counter] {
            zero_init(&mut b, s);
        }
        b.next(mem, mem);
    } else {
        b.comment("HWPE sequential writer");
        let start = b.input(1, "soc.in.hwpe_start");
        let base = b.input(p.addr_bits, "soc.in.hwpe_base");
        let len = b.input(p.len_bits, "soc.in.hwpe_len");
        let active = b.state(1, "soc.hwpe.active");
        let ptr = b.state(p.addr_bits, "soc.hwpe.ptr");
        let remaining = b.state(p.len_bits, "soc.hwpe.remaining");
        spy_active = active;

        let adv = b.and(active, gnt_spy);
        let adv = b.name(adv, "soc.hwpe.write_en");
        let one = b.konst(p.len_bits, 1);
        let last = b.eq(remaining, one);
        let fin = b.and(adv, last);
        let keep = b.ite(fin, zero1, active);
        let active_next = b.ite(start, one1, keep);
        let pone = b.konst(p.addr_bits, 1);
        let inc = b.add(ptr, pone);
        let stepped = b.ite(adv, inc, ptr);
        let ptr_next = b.ite(start, base, stepped);
        let dec = b.sub(remaining, one);
        let rstep = b.ite(adv, dec, remaining);
        let remaining_next = b.ite(start, len, rstep);
        b.next(active, active_next);
        b.next(ptr, ptr_next);
        b.next(remaining, remaining_next);
        for s in [active, ptr, remaining] {
            zero_init(&mut b, s);
        }
        let old = b.read(mem, ptr);
        let done = b.konst(p.data_bits, 1);
        let new = b.add(old, done);
        let written = b.write(mem, ptr, new);
        let mem_next = b.ite_array(p.addr_bits, adv, written, mem);
        b.next(mem, mem_next);
    }
    let zmem = b.array_const(p.addr_bits, p.data_bits, 0);
    b.init(mem, zmem);

    b.comment("public crossbar registers; the core wins arbitration");
    let idle = b.konst(2, 0);
    let spy_grant = b.ite(spy_active, g_spy, idle);
    let grant_next = b.ite(c.pub_req, g_core, spy_grant);
    let addr_next = b.ite(c.pub_req, c.addr_lo, xa);
    b.next(xv, c.pub_req);
    b.next(xa, addr_next);
    b.next(xg, grant_next);
    for s in [xv, xa, xg] {
        zero_init(&mut b, s);
    }

    if let Some(priv_req) = c.priv_req {
        b.comment("private crossbar and memory, reachable only by the core");
        let (pv, pa, pg) = crossbar_regs(&mut b, "soc.pxbar", 1, p);
        let pmem = b.array_state(p.addr_bits, p.data_bits, "soc.priv_mem.data");
        let paddr_next = b.ite(priv_req, c.addr_lo, pa);
        b.next(pv, priv_req);
        b.next(pa, paddr_next);
        b.next(pg, priv_req);
        b.next(pmem, pmem);
        for s in [pv, pa, pg] {
            zero_init(&mut b, s);
        }
        let zp = b.array_const(p.addr_bits, p.data_bits, 0);
        b.init(pmem, zp);
    }
    Ok(b.finish())
}

pub fn proof_config(v: Variant) -> ProofConfig {
    let mut s_sys = vec!["soc.xbar.*"];
    let mut persistent = vec!["soc.mem.*"];
    let mut transient = vec!["soc.xbar.*"];
    if v == Variant::Fixed {
        s_sys.push("soc.pxbar.*");
        transient.push("soc.pxbar.*");
    }
    if v.has_dma() {
        s_sys.extend(["soc.dma.*", "soc.timer.*"]);
        transient.push("soc.dma.*");
        persistent.push("soc.timer.*");
    } else {
        s_sys.push("soc.hwpe.*");
        persistent.push("soc.hwpe.*");
    }
    s_sys.push("soc.mem.*");
    if v == Variant::Fixed {
        s_sys.push("soc.priv_mem.*");
        persistent.push("soc.priv_mem.*");
    }
    let strings = |v: Vec<&str>| v.into_iter().map(String::from).collect::<Vec<_>>();
    ProofConfig {
        s_sys_patterns: strings(s_sys),
        include_outputs: true,
        persistent_patterns: strings(persistent),
        transient_patterns: strings(transient),
        victim_constraints: vec![SignalConstraint::new("soc.core.region", Cmp::Eq, 1).at(Cycles::Range([0, 1]))],
        invariants: vec![
            SignalConstraint::new("soc.xbar.inv_grant_encoding", Cmp::Eq, 1),
            SignalConstraint::new("soc.xbar.inv_handshake", Cmp::Eq, 1),
        ],
        input_equality_window: None,
        victim_full_window: false,
        solver: SolverConfig::default(),
        max_k: DEFAULT_MAX_K,
    }
}

/// Cycle at which the DMA scenario reads the timer.
pub const DMA_SCENARIO_CYCLES: u32 = 30;
/// Cells primed and overwritten by the HWPE scenario.
pub const HWPE_SCENARIO_CELLS: u64 = 8;

pub fn scenarios(v: Variant, p: &SocParams) -> Vec<Scenario> {
    let step0 = |pairs: &[(&str, InputValue)]| ScenarioStep {
        cycle: 0,
        inputs: pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<BTreeMap<_, _>>(),
    };
    let victim = [
        ("soc.in.core_load", InputValue::Number(1)),
        ("soc.in.core_pattern", InputValue::Symbol("$victim_mask".into())),
        ("soc.in.core_addr", InputValue::Number(p.private_addr(0))),
    ];
    if v.has_dma() {
        let len = 8u64.min((1 << p.len_bits) - 1);
        let mut inputs = vec![
            ("soc.in.dma_start", InputValue::Number(1)),
            ("soc.in.dma_len", InputValue::Number(len)),
        ];
        inputs.extend(victim.iter().cloned());
        vec![Scenario {
            name: "dma_timer".into(),
            description: format!(
                "The spy starts a DMA transfer of {len} words whose completion starts the timer. The victim issues \
                 v back-to-back accesses to its private region while the transfer runs. The spy reads the \
                 timer at cycle {DMA_SCENARIO_CYCLES}."
            ),
            cycles: DMA_SCENARIO_CYCLES,
            steps: vec![step0(&inputs)],
            observe: Observation::Signal {
                name: "soc.timer.counter".into(),
            },
        }]
    } else {
        let cells = HWPE_SCENARIO_CELLS.min(1 << p.addr_bits);
        let mut inputs = vec![
            ("soc.in.hwpe_start", InputValue::Number(1)),
            ("soc.in.hwpe_base", InputValue::Number(0)),
            ("soc.in.hwpe_len", InputValue::Number(cells)),
        ];
        inputs.extend(victim.iter().cloned());
        vec![Scenario {
            name: "hwpe_prime".into(),
            description: format!(
                "Memory cells 0..{cells} start primed with zero. The spy starts the HWPE to overwrite them one per \
                 granted cycle. The victim issues v accesses meanwhile. The spy counts overwritten cells after \
                 the window in which an uncontended run finishes."
            ),
            cycles: cells as u32 + 2,
            steps: vec![step0(&inputs)],
            observe: Observation::NonzeroCells {
                name: "soc.mem.data".into(),
                first: 0,
                last: cells - 1,
            },
        }]
    }
}

fn readme(v: Variant, p: &SocParams) -> String {
    let mut s = format!("# Toy SoC: `{v}` variant\n\n");
    s += match v {
        Variant::Vulnerable => {
            "A core stub, a DMA engine, a timer and a memory share one crossbar. The DMA completion pulse \
             starts the timer. Core requests take priority, so every victim access delays the DMA by one \
             cycle and the timer starts one cycle later.\n\n\
             Expected verdict: `vulnerable`, with `soc.timer.counter` in the diff set.\n"
        }
        Variant::Hwpe => {
            "A core stub and an accelerator (HWPE) share one crossbar. The HWPE increments memory cells \
             sequentially, one per granted cycle. Victim accesses delay it, so fewer primed cells are \
             overwritten within a fixed window.\n\n\
             Expected verdict: `vulnerable`. The unrolled procedure reports a memory element that diverges \
             two cycles after the victim's access.\n"
        }
        Variant::Fixed => {
            "The vulnerable SoC with a second crossbar. Requests to the private region (address bit \
             `addr_bits` set) go to the private crossbar and the private memory. Nothing else connects to \
             either. The victim runs only in the private region, so the DMA never sees contention.\n\n\
             Expected verdict: `secure`.\n"
        }
    };
    s += &format!(
        "\n## Files\n\n\
         - `soc_{v}.nl`: the netlist.\n\
         - `config.json`: proof configuration. The system state is everything outside `soc.core.*`. \
         Crossbar and DMA registers are transient. Timer, memory and HWPE registers are persistent.\n\
         - `scenarios/*.json`: attack scripts for `upec-ssc demo`.\n\n\
         ## Arbitration\n\n\
         The public crossbar registers its grant. A core request in cycle `c` grants the core in cycle \
         `c + 1`. Otherwise an active spy engine is granted. The grant encoding is 0 (idle), 1 (core) and \
         2 (spy engine).\n\n\
         ## Parameters\n\n\
         | parameter | value |\n|---|---|\n\
         | addr_bits | {} |\n| data_bits | {} |\n| pattern_bits | {} |\n| len_bits | {} |\n| timer_bits | {} |\n\n\
         Regenerate with `upec-ssc generate {v} models/{v}`.\n",
        p.addr_bits, p.data_bits, p.pattern_bits, p.len_bits, p.timer_bits
    );
    s
}

pub fn generate_soc(v: Variant, p: &SocParams) -> Result<ModelBundle> {
    let netlist_text = generate_netlist(v, p)?;
    Netlist::parse(&netlist_text)?;
    Ok(ModelBundle {
        variant: v,
        params: *p,
        netlist_text,
        config: proof_config(v),
        scenarios: scenarios(v, p),
        readme: readme(v, p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate_step, reset_state, zero_inputs};
    use crate::stateset::NamePatterns;

    #[test]
    fn all_variants_parse_and_validate() {
        for v in Variant::ALL {
            let b = generate_soc(v, &SocParams::default()).unwrap();
            let n = b.netlist().unwrap();
            let warnings = b.config.validate(&n).unwrap();
            assert!(warnings.is_empty(), "{v}: {warnings:?}");
            assert_eq!(Netlist::parse(&n.print()).unwrap().print(), n.print());
        }
    }

    #[test]
    fn persistent_patterns_cover_timer_and_memory() {
        let b = generate_soc(Variant::Vulnerable, &SocParams::default()).unwrap();
        let pers = NamePatterns::new(&b.config.persistent_patterns).unwrap();
        assert!(pers.matches("soc.timer.counter"));
        assert!(pers.matches("soc.mem.data"));
    }

    #[test]
    fn caps_are_enforced() {
        let with = |addr_bits, timer_bits| SocParams {
            addr_bits,
            timer_bits,
            ..SocParams::default()
        };
        assert!(generate_soc(Variant::Hwpe, &with(7, 8)).is_err());
        assert!(generate_soc(Variant::Vulnerable, &with(4, 17)).is_err());
        assert!(generate_soc(Variant::Vulnerable, &with(6, 16)).is_ok());
    }

    #[test]
    fn hwpe_pointer_advances_per_uncontended_cycle() {
        let p = SocParams::default();
        let n = generate_soc(Variant::Hwpe, &p).unwrap().netlist().unwrap();
        let ptr = n.lookup("soc.hwpe.ptr").unwrap();
        let mut st = reset_state(&n);
        let mut inp = zero_inputs(&n);
        inp.insert(n.lookup("soc.in.hwpe_start").unwrap(), crate::eval::Value::Bv(1));
        inp.insert(n.lookup("soc.in.hwpe_len").unwrap(), crate::eval::Value::Bv(15));
        let mut seen = Vec::new();
        for _ in 0..8 {
            st = evaluate_step(&n, &st, &inp).unwrap().0;
            inp = zero_inputs(&n);
            seen.push(st[&ptr].as_bv().unwrap());
        }
        // start, first grant, then one cell per cycle
        assert_eq!(seen, vec![0, 0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("pulp".parse::<Variant>().is_err());
    }
}
