//! Bit-blasting of netlist frames into clauses.
//!
//! Every word operator is lowered to Tseitin gates over a shared
//! [`ClauseSet`]. Gates fold constants and are structurally hashed, so
//! trivially equal subterms (for example both sides of `eq(x, x)`) collapse
//! before the solver sees them. Arrays are expanded element by element.

use std::collections::HashMap;

use thiserror::Error;

use crate::cnf::{ClauseSet, Lit, VarKey};
use crate::netlist::{Netlist, NodeId, Op, Sort};

/// Largest array (in elements) that is expanded into propositional form.
pub const MAX_EXPANDED_ENTRIES: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("array `{name}` has {entries} elements; at most {MAX_EXPANDED_ENTRIES} can be expanded")]
    ArrayTooLarge { name: String, entries: u64 },
    #[error("no literals supplied for {kind} {id}")]
    MissingWord { kind: &'static str, id: NodeId },
}

/// Propositional image of a value: bits LSB first, arrays as element lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Word {
    Bv(Vec<Lit>),
    Array(Vec<Vec<Lit>>),
}

impl Word {
    pub fn bits(&self) -> &[Lit] {
        match self {
            Word::Bv(b) => b,
            Word::Array(_) => panic!("array word used as bit-vector"),
        }
    }

    /// All literals in key order (`element * width + bit` for arrays).
    pub fn flat(&self) -> Vec<Lit> {
        match self {
            Word::Bv(b) => b.clone(),
            Word::Array(elems) => elems.iter().flatten().copied().collect(),
        }
    }
}

/// Which design copy and which cycle a frame belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameCtx {
    pub instance: u8,
    pub cycle: u32,
}

impl FrameCtx {
    pub fn key(self, node: NodeId, bit: u32) -> VarKey {
        VarKey {
            instance: self.instance,
            cycle: self.cycle,
            node,
            bit,
        }
    }
}

/// Literal images of every node of one frame, indexed like
/// [`Netlist::nodes`].
#[derive(Debug, Clone)]
pub struct FrameWords {
    pub ctx: FrameCtx,
    words: Vec<Word>,
}

impl FrameWords {
    pub fn get(&self, n: &Netlist, id: NodeId) -> &Word {
        &self.words[n.slot(id).expect("node of this netlist")]
    }

    /// Literals of a signal: a state's current value or an output's value.
    pub fn signal(&self, n: &Netlist, id: NodeId) -> &Word {
        match n.output(id) {
            Some(o) => self.get(n, o.expr),
            None => self.get(n, id),
        }
    }
}

pub struct Encoder {
    cs: ClauseSet,
    tru: Lit,
    ands: HashMap<(Lit, Lit), Lit>,
    xors: HashMap<(Lit, Lit), Lit>,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        let mut cs = ClauseSet::new();
        let tru = cs.new_var();
        cs.add_clause([tru]);
        // Reserve the constant so that no node claims its variable.
        cs.set_label(0, "true");
        cs.bind(
            VarKey {
                instance: 0,
                cycle: 0,
                node: 0,
                bit: 0,
            },
            tru,
        );
        Encoder {
            cs,
            tru,
            ands: HashMap::new(),
            xors: HashMap::new(),
        }
    }

    pub fn clauses(&self) -> &ClauseSet {
        &self.cs
    }

    pub fn clauses_mut(&mut self) -> &mut ClauseSet {
        &mut self.cs
    }

    pub fn into_clauses(self) -> ClauseSet {
        self.cs
    }

    pub fn tru(&self) -> Lit {
        self.tru
    }

    pub fn fls(&self) -> Lit {
        !self.tru
    }

    pub fn constant(&self, b: bool) -> Lit {
        if b {
            self.tru
        } else {
            !self.tru
        }
    }

    pub fn fresh(&mut self) -> Lit {
        self.cs.new_var()
    }

    pub fn assert(&mut self, l: Lit) {
        self.cs.add_clause([l]);
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let (t, f) = (self.tru, !self.tru);
        if a == f || b == f || a == !b {
            return f;
        }
        if a == t || a == b {
            return b;
        }
        if b == t {
            return a;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&g) = self.ands.get(&key) {
            return g;
        }
        let g = self.cs.new_var();
        self.cs.add_clause([!g, a]);
        self.cs.add_clause([!g, b]);
        self.cs.add_clause([g, !a, !b]);
        self.ands.insert(key, g);
        g
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let (t, f) = (self.tru, !self.tru);
        if a == f {
            return b;
        }
        if b == f {
            return a;
        }
        if a == t {
            return !b;
        }
        if b == t {
            return !a;
        }
        if a == b {
            return f;
        }
        if a == !b {
            return t;
        }
        // Normalize polarity so that xor(a, b), xor(!a, b), ... share a gate.
        let flip = a.is_positive() != b.is_positive();
        let (pa, pb) = (
            if a.is_positive() { a } else { !a },
            if b.is_positive() { b } else { !b },
        );
        let key = if pa < pb { (pa, pb) } else { (pb, pa) };
        let g = match self.xors.get(&key) {
            Some(&g) => g,
            None => {
                let g = self.cs.new_var();
                let (x, y) = key;
                self.cs.add_clause([!g, x, y]);
                self.cs.add_clause([!g, !x, !y]);
                self.cs.add_clause([g, !x, y]);
                self.cs.add_clause([g, x, !y]);
                self.xors.insert(key, g);
                g
            }
        };
        if flip {
            !g
        } else {
            g
        }
    }

    pub fn xnor(&mut self, a: Lit, b: Lit) -> Lit {
        !self.xor(a, b)
    }

    pub fn mux(&mut self, s: Lit, t: Lit, e: Lit) -> Lit {
        if s == self.tru || t == e {
            return t;
        }
        if s == !self.tru {
            return e;
        }
        let a = self.and(s, t);
        let b = self.and(!s, e);
        self.or(a, b)
    }

    pub fn and_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        lits.into_iter().fold(self.tru, |acc, l| self.and(acc, l))
    }

    pub fn or_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        lits.into_iter().fold(!self.tru, |acc, l| self.or(acc, l))
    }

    pub fn const_bits(&self, value: u64, width: u32) -> Vec<Lit> {
        (0..width)
            .map(|i| self.constant(i < 64 && (value >> i) & 1 == 1))
            .collect()
    }

    pub fn eq_bits(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        debug_assert_eq!(a.len(), b.len());
        let x: Vec<Lit> = a.iter().zip(b).map(|(&x, &y)| self.xnor(x, y)).collect();
        self.and_all(x)
    }

    pub fn eq_words(&mut self, a: &Word, b: &Word) -> Lit {
        let (fa, fb) = (a.flat(), b.flat());
        self.eq_bits(&fa, &fb)
    }

    /// Unsigned `a < b`.
    pub fn ult(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let mut lt = self.fls();
        for (&x, &y) in a.iter().zip(b) {
            let here = self.and(!x, y);
            let same = self.xnor(x, y);
            let keep = self.and(same, lt);
            lt = self.or(here, keep);
        }
        lt
    }

    pub fn add(&mut self, a: &[Lit], b: &[Lit], carry_in: Lit) -> Vec<Lit> {
        let mut carry = carry_in;
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let t = self.xor(x, y);
            out.push(self.xor(t, carry));
            let g = self.and(x, y);
            let p = self.and(t, carry);
            carry = self.or(g, p);
        }
        out
    }

    pub fn sub(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let nb: Vec<Lit> = b.iter().map(|&l| !l).collect();
        let t = self.tru;
        self.add(a, &nb, t)
    }

    pub fn mul(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let w = a.len();
        let mut acc = self.const_bits(0, w as u32);
        for (i, &bi) in b.iter().enumerate() {
            let mut row = vec![self.fls(); w];
            for j in 0..w - i {
                row[i + j] = self.and(a[j], bi);
            }
            let f = self.fls();
            acc = self.add(&acc, &row, f);
        }
        acc
    }

    /// One-hot decoder: `sel[e]` is true iff `idx == e`.
    fn decode(&mut self, idx: &[Lit], entries: usize) -> Vec<Lit> {
        (0..entries)
            .map(|e| {
                let bits = self.const_bits(e as u64, idx.len() as u32);
                self.eq_bits(idx, &bits)
            })
            .collect()
    }

    fn read(&mut self, elems: &[Vec<Lit>], idx: &[Lit]) -> Vec<Lit> {
        let mut layer: Vec<Vec<Lit>> = elems.to_vec();
        for &s in idx {
            layer = layer
                .chunks(2)
                .map(|pair| {
                    pair[0]
                        .iter()
                        .zip(&pair[1])
                        .map(|(&lo, &hi)| self.mux(s, hi, lo))
                        .collect()
                })
                .collect();
        }
        layer.pop().expect("at least one element")
    }

    pub fn fresh_word(&mut self, sort: Sort, name: &str) -> Result<Word, EncodeError> {
        Ok(match sort {
            Sort::BitVec(w) => Word::Bv((0..w).map(|_| self.fresh()).collect()),
            Sort::Array { index, elem } => {
                let entries = array_entries(index, name)?;
                Word::Array(
                    (0..entries)
                        .map(|_| (0..elem).map(|_| self.fresh()).collect())
                        .collect(),
                )
            }
        })
    }

    /// Binds every literal of `word` to `(ctx, node, bit)` keys and returns
    /// the bound word.
    pub fn bind(&mut self, ctx: FrameCtx, node: NodeId, word: &Word) -> Word {
        match word {
            Word::Bv(bits) => Word::Bv(
                bits.iter()
                    .enumerate()
                    .map(|(i, &l)| self.cs.bind(ctx.key(node, i as u32), l))
                    .collect(),
            ),
            Word::Array(elems) => {
                let width = elems.first().map_or(0, Vec::len);
                Word::Array(
                    elems
                        .iter()
                        .enumerate()
                        .map(|(e, bits)| {
                            bits.iter()
                                .enumerate()
                                .map(|(i, &l)| self.cs.bind(ctx.key(node, (e * width + i) as u32), l))
                                .collect()
                        })
                        .collect(),
                )
            }
        }
    }

    /// Encodes one combinational evaluation of `n`. States and inputs take
    /// the supplied words (missing inputs get fresh variables); every node's
    /// bits are bound in the variable map under `ctx`.
    pub fn encode_frame(
        &mut self,
        n: &Netlist,
        ctx: FrameCtx,
        states: &HashMap<NodeId, Word>,
        inputs: &HashMap<NodeId, Word>,
    ) -> Result<FrameWords, EncodeError> {
        let mut words: Vec<Word> = Vec::with_capacity(n.nodes().len());
        for node in n.nodes() {
            if let Some(name) = &node.name {
                self.cs.set_label(node.id, name.clone());
            }
            let arg = |i: usize| &words[n.slot(node.args[i]).expect("validated")];
            let w = match node.op {
                Op::Const(c) => match node.sort {
                    Sort::BitVec(width) => Word::Bv(self.const_bits(c, width)),
                    Sort::Array { index, elem } => {
                        let entries = array_entries(index, node.name.as_deref().unwrap_or("const"))?;
                        Word::Array(vec![self.const_bits(c, elem); entries])
                    }
                },
                Op::Input => match inputs.get(&node.id) {
                    Some(w) => w.clone(),
                    None => self.fresh_word(node.sort, node.name.as_deref().unwrap_or(""))?,
                },
                Op::State => states
                    .get(&node.id)
                    .cloned()
                    .ok_or(EncodeError::MissingWord { kind: "state", id: node.id })?,
                Op::Not => Word::Bv(arg(0).bits().iter().map(|&l| !l).collect()),
                Op::And | Op::Or | Op::Xor => {
                    let (a, b) = (arg(0).bits().to_vec(), arg(1).bits().to_vec());
                    Word::Bv(
                        a.iter()
                            .zip(&b)
                            .map(|(&x, &y)| match node.op {
                                Op::And => self.and(x, y),
                                Op::Or => self.or(x, y),
                                _ => self.xor(x, y),
                            })
                            .collect(),
                    )
                }
                Op::Add => {
                    let (a, b) = (arg(0).bits().to_vec(), arg(1).bits().to_vec());
                    let f = self.fls();
                    Word::Bv(self.add(&a, &b, f))
                }
                Op::Sub => {
                    let (a, b) = (arg(0).bits().to_vec(), arg(1).bits().to_vec());
                    Word::Bv(self.sub(&a, &b))
                }
                Op::Mul => {
                    let (a, b) = (arg(0).bits().to_vec(), arg(1).bits().to_vec());
                    Word::Bv(self.mul(&a, &b))
                }
                Op::Eq => {
                    let (a, b) = (arg(0).bits().to_vec(), arg(1).bits().to_vec());
                    Word::Bv(vec![self.eq_bits(&a, &b)])
                }
                Op::Ult => {
                    let (a, b) = (arg(0).bits().to_vec(), arg(1).bits().to_vec());
                    Word::Bv(vec![self.ult(&a, &b)])
                }
                Op::Ite => {
                    let s = arg(0).bits()[0];
                    match (arg(1).clone(), arg(2).clone()) {
                        (Word::Bv(t), Word::Bv(e)) => {
                            Word::Bv(t.iter().zip(&e).map(|(&x, &y)| self.mux(s, x, y)).collect())
                        }
                        (Word::Array(t), Word::Array(e)) => Word::Array(
                            t.iter()
                                .zip(&e)
                                .map(|(te, ee)| te.iter().zip(ee).map(|(&x, &y)| self.mux(s, x, y)).collect())
                                .collect(),
                        ),
                        _ => unreachable!("validated sorts"),
                    }
                }
                Op::Concat => {
                    let mut bits = arg(1).bits().to_vec();
                    bits.extend_from_slice(arg(0).bits());
                    Word::Bv(bits)
                }
                Op::Slice { hi, lo } => Word::Bv(arg(0).bits()[lo as usize..=hi as usize].to_vec()),
                Op::Read => {
                    let Word::Array(elems) = arg(0).clone() else {
                        unreachable!("validated sorts")
                    };
                    let idx = arg(1).bits().to_vec();
                    Word::Bv(self.read(&elems, &idx))
                }
                Op::Write => {
                    let Word::Array(elems) = arg(0).clone() else {
                        unreachable!("validated sorts")
                    };
                    let idx = arg(1).bits().to_vec();
                    let val = arg(2).bits().to_vec();
                    let sel = self.decode(&idx, elems.len());
                    Word::Array(
                        elems
                            .iter()
                            .zip(sel)
                            .map(|(old, s)| old.iter().zip(&val).map(|(&o, &v)| self.mux(s, v, o)).collect())
                            .collect(),
                    )
                }
            };
            let bound = self.bind(ctx, node.id, &w);
            words.push(bound);
        }
        for out in n.outputs() {
            self.cs.set_label(out.id, out.name.clone());
        }
        Ok(FrameWords { ctx, words })
    }
}

fn array_entries(index_width: u32, name: &str) -> Result<usize, EncodeError> {
    let entries = 1u64 << index_width;
    if entries > MAX_EXPANDED_ENTRIES {
        return Err(EncodeError::ArrayTooLarge {
            name: name.to_string(),
            entries,
        });
    }
    Ok(entries as usize)
}

/// Decodes a word from a model.
pub fn decode_word(word: &Word, model: &[bool]) -> crate::eval::Value {
    use crate::eval::{ArrayValue, Value};
    let bits = |b: &[Lit]| {
        b.iter().enumerate().fold(0u64, |acc, (i, l)| {
            let v = model[l.var() as usize] == l.is_positive();
            acc | (u64::from(v) << i)
        })
    };
    match word {
        Word::Bv(b) => Value::Bv(bits(b)),
        Word::Array(elems) => {
            let dense: Vec<u64> = elems.iter().map(|e| bits(e)).collect();
            Value::Array(ArrayValue::from_elements(&dense))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{solve, Status, DEFAULT_CONFLICT_BUDGET};

    fn frame(n: &Netlist, enc: &mut Encoder) -> FrameWords {
        let ctx = FrameCtx { instance: 1, cycle: 0 };
        let mut states = HashMap::new();
        for s in n.states() {
            let sort = n.node(s.node).unwrap().sort;
            states.insert(s.node, enc.fresh_word(sort, &s.name).unwrap());
        }
        enc.encode_frame(n, ctx, &states, &HashMap::new()).unwrap()
    }

    #[test]
    fn eq_of_same_word_is_constant_true() {
        let n = Netlist::parse("1 sort bitvec 8\n2 sort bitvec 1\n3 input 1 x\n4 eq 2 3 3\n").unwrap();
        let mut enc = Encoder::new();
        let f = frame(&n, &mut enc);
        let bit = f.get(&n, 4).bits()[0];
        let r = solve(enc.clauses(), &[!bit], DEFAULT_CONFLICT_BUDGET).unwrap();
        assert_eq!(r.status, Status::Unsat);
    }

    #[test]
    fn two_bit_add_of_ones_is_two() {
        let n = Netlist::parse("1 sort bitvec 2\n2 input 1 a\n3 input 1 b\n4 add 1 2 3\n").unwrap();
        let mut enc = Encoder::new();
        let f = frame(&n, &mut enc);
        let (a, b) = (f.get(&n, 2).bits().to_vec(), f.get(&n, 3).bits().to_vec());
        let assume = vec![a[0], !a[1], b[0], !b[1]];
        let r = solve(enc.clauses(), &assume, DEFAULT_CONFLICT_BUDGET).unwrap();
        let v = decode_word(f.get(&n, 4), r.model.as_ref().unwrap());
        assert_eq!(v, crate::eval::Value::Bv(2));
    }

    #[test]
    fn oversized_array_is_rejected() {
        let n = Netlist::parse("1 sort bitvec 7\n2 sort bitvec 1\n3 sort array 1 2\n4 state 3 big\n5 next 4 4\n").unwrap();
        let mut enc = Encoder::new();
        let err = enc.fresh_word(n.node(4).unwrap().sort, "big").unwrap_err();
        assert_eq!(
            err,
            EncodeError::ArrayTooLarge {
                name: "big".into(),
                entries: 128
            }
        );
    }
}
