//! Independent oracles: random small netlists, exhaustive enumeration of the
//! two-instance one-step obligation, and truth-table CNF evaluation.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::rngs::StdRng;
use rand::Rng;

use upec_ssc::eval::{evaluate_frame, evaluate_step, ArrayValue, Valuation, Value};
use upec_ssc::miter::{Cmp, Cycles, SignalConstraint};
use upec_ssc::netlist::{Netlist, NodeId, Sort};

/// Random netlist text with at most `max_state_bits` state bits and at most
/// two input bits.
pub fn random_netlist(rng: &mut StdRng, max_state_bits: u32) -> String {
    let mut lines: Vec<String> = Vec::new();
    let mut id = 0u32;
    let mut fresh = || {
        id += 1;
        id
    };
    let mut sorts: HashMap<u32, u32> = HashMap::new();
    for w in 1..=3 {
        let s = fresh();
        lines.push(format!("{s} sort bitvec {w}"));
        sorts.insert(w, s);
    }
    // pool of (node id, width)
    let mut pool: Vec<(u32, u32)> = Vec::new();
    let mut states: Vec<(u32, u32)> = Vec::new();
    let mut budget = max_state_bits;

    let mut array: Option<(u32, u32)> = None;
    if budget >= 2 && rng.gen_bool(0.3) {
        let elem = rng.gen_range(1..=(budget / 2).min(2));
        let s = fresh();
        lines.push(format!("{s} sort array {} {}", sorts[&1], sorts[&elem]));
        let a = fresh();
        lines.push(format!("{a} state {s} arr"));
        array = Some((a, elem));
        budget -= 2 * elem;
    }
    let n_states = rng.gen_range(1..=max_state_bits.div_ceil(3).max(1));
    for k in 0..n_states {
        if budget == 0 {
            break;
        }
        let w = rng.gen_range(1..=budget.min(3));
        budget -= w;
        let s = fresh();
        lines.push(format!("{s} state {} s{k}", sorts[&w]));
        states.push((s, w));
        pool.push((s, w));
    }
    let mut in_bits = 2u32;
    for k in 0..rng.gen_range(0..=2) {
        if in_bits == 0 {
            break;
        }
        let w = rng.gen_range(1..=in_bits);
        in_bits -= w;
        let i = fresh();
        lines.push(format!("{i} input {} i{k}", sorts[&w]));
        pool.push((i, w));
    }
    let pick = |rng: &mut StdRng, pool: &Vec<(u32, u32)>, w: u32| -> Option<u32> {
        let c: Vec<u32> = pool.iter().filter(|p| p.1 == w).map(|p| p.0).collect();
        if c.is_empty() {
            None
        } else {
            Some(c[rng.gen_range(0..c.len())])
        }
    };
    let need = |rng: &mut StdRng, lines: &mut Vec<String>, pool: &mut Vec<(u32, u32)>, fresh: &mut dyn FnMut() -> u32, w: u32| -> u32 {
        if let Some(x) = pick(rng, pool, w) {
            if rng.gen_bool(0.85) {
                return x;
            }
        }
        let c = fresh();
        lines.push(format!("{c} const {} {:x}", sorts[&w], rng.gen_range(0..1u64 << w)));
        pool.push((c, w));
        c
    };
    if let Some((a, elem)) = array {
        let idx = need(rng, &mut lines, &mut pool, &mut fresh, 1);
        let r = fresh();
        lines.push(format!("{r} read {} {a} {idx}", sorts[&elem]));
        pool.push((r, elem));
    }
    let ops = rng.gen_range(3..=12);
    for _ in 0..ops {
        let w = rng.gen_range(1..=3u32);
        let op = rng.gen_range(0..11);
        let line_id;
        match op {
            0 => {
                let a = need(rng, &mut lines, &mut pool, &mut fresh, w);
                line_id = fresh();
                lines.push(format!("{line_id} not {} {a}", sorts[&w]));
                pool.push((line_id, w));
            }
            1..=6 => {
                let name = ["and", "or", "xor", "add", "sub", "mul"][op - 1];
                let a = need(rng, &mut lines, &mut pool, &mut fresh, w);
                let b = need(rng, &mut lines, &mut pool, &mut fresh, w);
                line_id = fresh();
                lines.push(format!("{line_id} {name} {} {a} {b}", sorts[&w]));
                pool.push((line_id, w));
            }
            7 | 8 => {
                let name = if op == 7 { "eq" } else { "ult" };
                let a = need(rng, &mut lines, &mut pool, &mut fresh, w);
                let b = need(rng, &mut lines, &mut pool, &mut fresh, w);
                line_id = fresh();
                lines.push(format!("{line_id} {name} {} {a} {b}", sorts[&1]));
                pool.push((line_id, 1));
            }
            9 => {
                let c = need(rng, &mut lines, &mut pool, &mut fresh, 1);
                let a = need(rng, &mut lines, &mut pool, &mut fresh, w);
                let b = need(rng, &mut lines, &mut pool, &mut fresh, w);
                line_id = fresh();
                lines.push(format!("{line_id} ite {} {c} {a} {b}", sorts[&w]));
                pool.push((line_id, w));
            }
            _ => {
                if w == 1 {
                    let a = need(rng, &mut lines, &mut pool, &mut fresh, 2);
                    let b = rng.gen_range(0..2);
                    line_id = fresh();
                    lines.push(format!("{line_id} slice {} {a} {b} {b}", sorts[&1]));
                    pool.push((line_id, 1));
                } else {
                    let a = need(rng, &mut lines, &mut pool, &mut fresh, 1);
                    let b = need(rng, &mut lines, &mut pool, &mut fresh, w - 1);
                    line_id = fresh();
                    lines.push(format!("{line_id} concat {} {a} {b}", sorts[&w]));
                    pool.push((line_id, w));
                }
            }
        }
    }
    let mut nexts = Vec::new();
    for &(s, w) in &states {
        let e = need(rng, &mut lines, &mut pool, &mut fresh, w);
        nexts.push((s, e));
    }
    if let Some((a, elem)) = array {
        let en = need(rng, &mut lines, &mut pool, &mut fresh, 1);
        let idx = need(rng, &mut lines, &mut pool, &mut fresh, 1);
        let data = need(rng, &mut lines, &mut pool, &mut fresh, elem);
        let arr_sort = lines
            .iter()
            .find_map(|l| l.strip_suffix(" arr").and_then(|x| x.split(' ').nth(2)).map(String::from))
            .unwrap();
        let w = fresh();
        lines.push(format!("{w} write {arr_sort} {a} {idx} {data}"));
        let m = fresh();
        lines.push(format!("{m} ite {arr_sort} {en} {w} {a}"));
        nexts.push((a, m));
    }
    for (s, e) in nexts {
        let l = fresh();
        lines.push(format!("{l} next {s} {e}"));
    }
    if rng.gen_bool(0.4) {
        let (e, _) = pool[rng.gen_range(0..pool.len())];
        let l = fresh();
        lines.push(format!("{l} output {e} out"));
    }
    lines.join("\n") + "\n"
}

/// States and outputs of a netlist (the candidate members of state sets).
pub fn signals(n: &Netlist) -> Vec<NodeId> {
    n.states()
        .iter()
        .map(|s| s.node)
        .chain(n.outputs().iter().map(|o| o.id))
        .collect()
}

pub fn random_subset(rng: &mut StdRng, items: &[NodeId]) -> BTreeSet<NodeId> {
    items.iter().copied().filter(|_| rng.gen_bool(0.6)).collect()
}

/// A constraint on a bit-vector state, as used by the oracle.
#[derive(Debug, Clone, Copy)]
pub struct StateRel {
    pub state: NodeId,
    /// `true`: value <= bound; `false`: value == bound.
    pub le: bool,
    pub bound: u64,
}

impl StateRel {
    pub fn holds(&self, v: u64) -> bool {
        if self.le {
            v <= self.bound
        } else {
            v == self.bound
        }
    }

    pub fn to_constraint(self, n: &Netlist, victim: bool) -> SignalConstraint {
        let name = n.name_of(self.state).unwrap().to_string();
        let c = SignalConstraint::new(name, if self.le { Cmp::Ule } else { Cmp::Eq }, self.bound);
        if victim {
            c.at(Cycles::Range([0, 1]))
        } else {
            c
        }
    }
}

pub fn random_rel(rng: &mut StdRng, n: &Netlist) -> Option<StateRel> {
    let bvs: Vec<(NodeId, u32)> = n
        .states()
        .iter()
        .filter_map(|s| match n.sort_of(s.node)? {
            Sort::BitVec(w) => Some((s.node, w)),
            _ => None,
        })
        .collect();
    if bvs.is_empty() {
        return None;
    }
    let (state, w) = bvs[rng.gen_range(0..bvs.len())];
    Some(StateRel {
        state,
        le: rng.gen_bool(0.5),
        bound: rng.gen_range(0..1u64 << w),
    })
}

/// Exhaustive model of the one-step two-instance obligation.
pub struct Enumerator<'a> {
    n: &'a Netlist,
    states: Vec<(NodeId, Sort)>,
    inputs: Vec<(NodeId, u32)>,
    state_bits: u32,
    input_bits: u32,
    /// `packed[x][j]`: packed value of state `j` in assignment `x`.
    packed: Vec<Vec<u64>>,
    /// `next[x * inputs + i]`: successor assignment.
    next: Vec<u32>,
    /// `outs[(x * inputs + i) * outputs + k]`: value of output `k`.
    outs: Vec<u64>,
}

fn sort_bits(s: Sort) -> u32 {
    match s {
        Sort::BitVec(w) => w,
        Sort::Array { index, elem } => (1 << index) * elem,
    }
}

impl<'a> Enumerator<'a> {
    pub fn new(n: &'a Netlist) -> Self {
        let states: Vec<(NodeId, Sort)> = n
            .states()
            .iter()
            .map(|s| (s.node, n.sort_of(s.node).unwrap()))
            .collect();
        let inputs: Vec<(NodeId, u32)> = n
            .inputs()
            .iter()
            .map(|&i| (i, n.sort_of(i).unwrap().width().unwrap()))
            .collect();
        let state_bits = states.iter().map(|s| sort_bits(s.1)).sum();
        let input_bits = inputs.iter().map(|i| i.1).sum();
        let mut e = Enumerator {
            n,
            states,
            inputs,
            state_bits,
            input_bits,
            packed: Vec::new(),
            next: Vec::new(),
            outs: Vec::new(),
        };
        e.tabulate();
        e
    }

    fn unpack_states(&self, x: u64) -> (Valuation, Vec<u64>) {
        let mut val = Valuation::new();
        let mut packed = Vec::new();
        let mut shift = 0;
        for &(id, sort) in &self.states {
            let bits = sort_bits(sort);
            let raw = (x >> shift) & ((1u64 << bits) - 1);
            shift += bits;
            packed.push(raw);
            let v = match sort {
                Sort::BitVec(_) => Value::Bv(raw),
                Sort::Array { index, elem } => {
                    let els: Vec<u64> = (0..1u64 << index).map(|k| (raw >> (k as u32 * elem)) & ((1 << elem) - 1)).collect();
                    Value::Array(ArrayValue::from_elements(&els))
                }
            };
            val.insert(id, v);
        }
        (val, packed)
    }

    fn pack_states(&self, v: &Valuation) -> u32 {
        let mut x = 0u64;
        let mut shift = 0;
        for &(id, sort) in &self.states {
            let raw = match (sort, &v[&id]) {
                (Sort::BitVec(_), Value::Bv(b)) => *b,
                (Sort::Array { index, elem }, Value::Array(a)) => {
                    (0..1u64 << index).fold(0, |acc, k| acc | a.get(k) << (k as u32 * elem))
                }
                _ => unreachable!(),
            };
            x |= raw << shift;
            shift += sort_bits(sort);
        }
        x as u32
    }

    fn unpack_inputs(&self, i: u64) -> Valuation {
        let mut val = Valuation::new();
        let mut shift = 0;
        for &(id, w) in &self.inputs {
            val.insert(id, Value::Bv((i >> shift) & ((1 << w) - 1)));
            shift += w;
        }
        val
    }

    fn tabulate(&mut self) {
        let ni = 1u64 << self.input_bits;
        for x in 0..1u64 << self.state_bits {
            let (sv, packed) = self.unpack_states(x);
            self.packed.push(packed);
            for i in 0..ni {
                let iv = self.unpack_inputs(i);
                let (next, outs) = evaluate_step(self.n, &sv, &iv).unwrap();
                self.next.push(self.pack_states(&next));
                self.outs.extend(self.n.outputs().iter().map(|o| outs[&o.id].as_bv().unwrap()));
            }
        }
    }

    fn state_index(&self, id: NodeId) -> usize {
        self.states.iter().position(|s| s.0 == id).unwrap()
    }

    fn output_index(&self, id: NodeId) -> usize {
        self.n.outputs().iter().position(|o| o.id == id).unwrap()
    }

    /// Members of `set` that differ at cycle 1 in some pair of runs with
    /// `set` equal at cycle 0, shared inputs, victim constraints at cycles 0
    /// and 1 in both instances and invariants at cycle 0 in both instances.
    /// Runs are grouped by everything the pair must share at cycle 0; a
    /// member diverges iff some group reaches two distinct values of it.
    pub fn diverging(&self, set: &BTreeSet<NodeId>, victim: &[StateRel], inv: &[StateRel]) -> BTreeSet<NodeId> {
        let ni = 1usize << self.input_bits;
        let no = self.n.outputs().len();
        let st: Vec<(NodeId, usize)> = set
            .iter()
            .filter(|id| self.n.output(**id).is_none())
            .map(|&id| (id, self.state_index(id)))
            .collect();
        let ou: Vec<(NodeId, usize)> = set
            .iter()
            .filter(|id| self.n.output(**id).is_some())
            .map(|&id| (id, self.output_index(id)))
            .collect();
        let i1_range = if ou.is_empty() { 1 } else { ni };
        let rel_ok = |x: usize, rels: &[StateRel]| rels.iter().all(|r| r.holds(self.packed[x][self.state_index(r.state)]));
        // group key -> successor of the first run in the group
        let mut groups: HashMap<(Vec<u64>, usize, Vec<u64>), usize> = HashMap::new();
        let mut found = BTreeSet::new();
        for x in 0..self.packed.len() {
            if !rel_ok(x, victim) || !rel_ok(x, inv) {
                continue;
            }
            for i0 in 0..ni {
                let a = x * ni + i0;
                let y = self.next[a] as usize;
                if !rel_ok(y, victim) {
                    continue;
                }
                let key = (
                    st.iter().map(|&(_, j)| self.packed[x][j]).collect(),
                    i0,
                    ou.iter().map(|&(_, k)| self.outs[a * no + k]).collect(),
                );
                let rep = *groups.entry(key).or_insert(y);
                if rep == y {
                    continue;
                }
                for &(id, j) in &st {
                    if self.packed[y][j] != self.packed[rep][j] {
                        found.insert(id);
                    }
                }
                for i1 in 0..i1_range {
                    for &(id, k) in &ou {
                        if self.outs[(y * ni + i1) * no + k] != self.outs[(rep * ni + i1) * no + k] {
                            found.insert(id);
                        }
                    }
                }
            }
        }
        found
    }

    /// Greatest subset of `s_sys` that stays equal for one step when equal,
    /// computed by repeatedly removing every member that can diverge.
    pub fn greatest_closed(&self, s_sys: &BTreeSet<NodeId>, victim: &[StateRel], inv: &[StateRel]) -> BTreeSet<NodeId> {
        let mut s = s_sys.clone();
        loop {
            let d = self.diverging(&s, victim, inv);
            if d.is_empty() {
                return s;
            }
            s = s.difference(&d).copied().collect();
        }
    }
}

/// Independent concrete check that a frame evaluates without error.
pub fn simulate_ok(n: &Netlist, states: &Valuation, inputs: &Valuation) -> bool {
    evaluate_frame(n, states, inputs).is_ok()
}

/// Random 3-CNF over `vars` variables (DIMACS literals).
pub fn random_3cnf(rng: &mut StdRng, vars: u32, clauses: usize) -> Vec<Vec<i64>> {
    (0..clauses)
        .map(|_| {
            (0..3)
                .map(|_| {
                    let v = rng.gen_range(1..=vars) as i64;
                    if rng.gen_bool(0.5) {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect()
}

/// Truth-table satisfiability.
pub fn truth_table_sat(vars: u32, clauses: &[Vec<i64>]) -> bool {
    let masks: Vec<(u32, u32)> = clauses
        .iter()
        .map(|c| {
            let mut pos = 0u32;
            let mut neg = 0u32;
            for &l in c {
                let bit = 1u32 << (l.unsigned_abs() - 1);
                if l > 0 {
                    pos |= bit;
                } else {
                    neg |= bit;
                }
            }
            (pos, neg)
        })
        .collect();
    (0..1u32 << vars).any(|a| masks.iter().all(|&(p, n)| a & p != 0 || !a & n != 0))
}
