//! Two-instance unrolling with a shared symbolic start state.
//!
//! Both copies of the design start from unconstrained state variables at
//! cycle 0. The query then assumes equal primary inputs inside the input
//! window, the victim constraints, the invariants at cycle 0 and equality of
//! every signal in `equality_at_t` at cycle 0. The target asks for some
//! scheduled signal to differ between the instances at its scheduled cycle.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::cnf::{ClauseSet, Lit};
use crate::encode::{decode_word, Encoder, FrameCtx, FrameWords, Word};
use crate::error::{Error, Result};
use crate::eval::{evaluate_step, Valuation, Value};
use crate::netlist::{Netlist, NodeId, Sort};
use crate::stateset::StateSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Instance1,
    Instance2,
    Both,
}

impl Target {
    fn instances(self) -> &'static [usize] {
        match self {
            Target::Instance1 => &[0],
            Target::Instance2 => &[1],
            Target::Both => &[0, 1],
        }
    }
}

/// A single cycle offset or an inclusive `[first, last]` range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cycles {
    At(u32),
    Range([u32; 2]),
}

impl Cycles {
    pub fn bounds(self) -> (u32, u32) {
        match self {
            Cycles::At(c) => (c, c),
            Cycles::Range([a, b]) => (a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    Eq,
    Ne,
    Ult,
    Ule,
    Ugt,
    Uge,
    /// The two instances' copies of the signal are equal.
    InstancesEqual,
}

/// Per-cycle assumption over one named signal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalConstraint {
    pub signal: String,
    pub cmp: Cmp,
    #[serde(default)]
    pub value: u64,
    #[serde(default = "default_target")]
    pub instance: Target,
    /// Defaults depend on the use: victim constraints apply during cycles
    /// 0..=1, invariants at cycle 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<Cycles>,
}

fn default_target() -> Target {
    Target::Both
}

impl SignalConstraint {
    pub fn new(signal: impl Into<String>, cmp: Cmp, value: u64) -> Self {
        SignalConstraint {
            signal: signal.into(),
            cmp,
            value,
            instance: Target::Both,
            cycles: None,
        }
    }

    pub fn at(mut self, cycles: Cycles) -> Self {
        self.cycles = Some(cycles);
        self
    }

    pub fn on(mut self, instance: Target) -> Self {
        self.instance = instance;
        self
    }

    /// Checks the constraint against a concrete value.
    pub fn holds_for(&self, v: u64) -> bool {
        match self.cmp {
            Cmp::Eq => v == self.value,
            Cmp::Ne => v != self.value,
            Cmp::Ult => v < self.value,
            Cmp::Ule => v <= self.value,
            Cmp::Ugt => v > self.value,
            Cmp::Uge => v >= self.value,
            Cmp::InstancesEqual => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UpecQuery<'a> {
    pub netlist: &'a Netlist,
    pub horizon: u32,
    pub equality_at_t: StateSet,
    /// `prove_schedule[j - 1]` must stay equal at cycle `j`.
    pub prove_schedule: Vec<StateSet>,
    /// Inclusive cycle window of primary-input equality.
    pub input_window: (u32, u32),
    pub victim_constraints: Vec<SignalConstraint>,
    pub invariants: Vec<SignalConstraint>,
}

impl<'a> UpecQuery<'a> {
    /// The two-cycle query: equal `set` at cycle 0, prove `set` at cycle 1.
    pub fn two_cycle(netlist: &'a Netlist, set: StateSet) -> Self {
        UpecQuery {
            netlist,
            horizon: 1,
            equality_at_t: set.clone(),
            prove_schedule: vec![set],
            input_window: (0, 1),
            victim_constraints: Vec::new(),
            invariants: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.netlist;
        if self.horizon == 0 {
            return Err(Error::Query("horizon must be at least 1".into()));
        }
        if self.prove_schedule.len() != self.horizon as usize {
            return Err(Error::Query(format!(
                "prove schedule covers {} cycles, horizon is {}",
                self.prove_schedule.len(),
                self.horizon
            )));
        }
        for set in std::iter::once(&self.equality_at_t).chain(&self.prove_schedule) {
            if let Some(id) = set.iter().find(|&id| n.signal(id).is_none()) {
                return Err(Error::Query(format!("{id} is neither a state nor an output")));
            }
        }
        Ok(())
    }
}

/// Encoded query ready for the solver.
pub struct BuiltQuery<'q, 'a> {
    pub query: &'q UpecQuery<'a>,
    pub clauses: ClauseSet,
    /// `(cycle, signal, literal true iff the signal differs)`.
    pub targets: Vec<(u32, NodeId, Lit)>,
    frames: [Vec<FrameWords>; 2],
}

/// Encodes `instances` copies of the design over cycles `0..=horizon` from
/// fresh symbolic states. Inputs of the second copy reuse the first copy's
/// literals inside `shared_inputs`.
pub(crate) fn unroll(
    enc: &mut Encoder,
    n: &Netlist,
    instances: u8,
    horizon: u32,
    shared_inputs: Option<(u32, u32)>,
) -> Result<Vec<Vec<FrameWords>>> {
    let mut all: Vec<Vec<FrameWords>> = Vec::new();
    for inst in 0..instances {
        let mut states: HashMap<NodeId, Word> = HashMap::new();
        for st in n.states() {
            let sort = n.node(st.node).expect("validated").sort;
            states.insert(st.node, enc.fresh_word(sort, &st.name)?);
        }
        let mut frames = Vec::with_capacity(horizon as usize + 1);
        for cycle in 0..=horizon {
            let ctx = FrameCtx {
                instance: inst + 1,
                cycle,
            };
            let mut inputs = HashMap::new();
            if inst > 0 {
                if let Some((lo, hi)) = shared_inputs {
                    if (lo..=hi).contains(&cycle) {
                        let first: &FrameWords = &all[0][cycle as usize];
                        for &id in n.inputs() {
                            inputs.insert(id, first.get(n, id).clone());
                        }
                    }
                }
            }
            let frame = enc.encode_frame(n, ctx, &states, &inputs)?;
            states = n
                .states()
                .iter()
                .map(|st| (st.node, frame.get(n, st.next).clone()))
                .collect();
            frames.push(frame);
        }
        all.push(frames);
    }
    Ok(all)
}

/// Literal for `constraint` holding in one instance (or across both, for
/// `InstancesEqual`) at one cycle.
pub(crate) fn constraint_lit(
    enc: &mut Encoder,
    n: &Netlist,
    frames: &[Vec<FrameWords>],
    c: &SignalConstraint,
    inst: usize,
    cycle: u32,
) -> Result<Lit> {
    let node = n
        .value_node(&c.signal)
        .ok_or_else(|| Error::UnknownSignal(c.signal.clone()))?;
    let word = frames[inst][cycle as usize].get(n, node).clone();
    if c.cmp == Cmp::InstancesEqual {
        if frames.len() < 2 {
            return Err(Error::Query(format!(
                "`{}`: instances_equal needs two design instances",
                c.signal
            )));
        }
        let other = frames[1][cycle as usize].get(n, node).clone();
        return Ok(enc.eq_words(&word, &other));
    }
    let Word::Bv(bits) = word else {
        return Err(Error::Query(format!("`{}` is an array; only instances_equal applies", c.signal)));
    };
    let width = bits.len() as u32;
    if width < 64 && c.value >> width != 0 {
        return Err(Error::Query(format!(
            "constant {} does not fit the {width}-bit signal `{}`",
            c.value, c.signal
        )));
    }
    let k = enc.const_bits(c.value, width);
    Ok(match c.cmp {
        Cmp::Eq => enc.eq_bits(&bits, &k),
        Cmp::Ne => !enc.eq_bits(&bits, &k),
        Cmp::Ult => enc.ult(&bits, &k),
        Cmp::Uge => !enc.ult(&bits, &k),
        Cmp::Ugt => enc.ult(&k, &bits),
        Cmp::Ule => !enc.ult(&k, &bits),
        Cmp::InstancesEqual => unreachable!(),
    })
}

/// Asserts `c` over its cycle range (clipped to the horizon).
pub(crate) fn assert_constraint(
    enc: &mut Encoder,
    n: &Netlist,
    frames: &[Vec<FrameWords>],
    c: &SignalConstraint,
    default: Cycles,
    horizon: u32,
) -> Result<()> {
    let (lo, hi) = c.cycles.unwrap_or(default).bounds();
    if lo > hi || lo > horizon {
        return Err(Error::Query(format!(
            "constraint on `{}` covers cycles {lo}..={hi}, outside 0..={horizon}",
            c.signal
        )));
    }
    for cycle in lo..=hi.min(horizon) {
        if c.cmp == Cmp::InstancesEqual {
            let l = constraint_lit(enc, n, frames, c, 0, cycle)?;
            enc.assert(l);
            continue;
        }
        for &inst in c.instance.instances() {
            if inst >= frames.len() {
                continue;
            }
            let l = constraint_lit(enc, n, frames, c, inst, cycle)?;
            enc.assert(l);
        }
    }
    Ok(())
}

fn assert_equal(enc: &mut Encoder, a: &Word, b: &Word) {
    for (x, y) in a.flat().into_iter().zip(b.flat()) {
        if x != y {
            enc.clauses_mut().add_clause([!x, y]);
            enc.clauses_mut().add_clause([x, !y]);
        }
    }
}

pub fn build_query<'q, 'a>(q: &'q UpecQuery<'a>) -> Result<BuiltQuery<'q, 'a>> {
    q.validate()?;
    let n = q.netlist;
    let mut enc = Encoder::new();
    let frames = unroll(&mut enc, n, 2, q.horizon, Some(q.input_window))?;

    for id in q.equality_at_t.iter() {
        let a = frames[0][0].signal(n, id).clone();
        let b = frames[1][0].signal(n, id).clone();
        assert_equal(&mut enc, &a, &b);
    }
    for c in &q.victim_constraints {
        assert_constraint(&mut enc, n, &frames, c, Cycles::Range([0, 1]), q.horizon)?;
    }
    for inv in &q.invariants {
        if inv.cmp == Cmp::InstancesEqual {
            return Err(Error::Query(format!("invariant on `{}` must refer to one instance", inv.signal)));
        }
        let inv = inv.clone().on(Target::Both);
        assert_constraint(&mut enc, n, &frames, &inv, Cycles::At(0), q.horizon)?;
    }

    let mut targets = Vec::new();
    for (j, set) in q.prove_schedule.iter().enumerate() {
        let cycle = j as u32 + 1;
        for id in set.iter() {
            let a = frames[0][cycle as usize].signal(n, id).clone();
            let b = frames[1][cycle as usize].signal(n, id).clone();
            let same = enc.eq_words(&a, &b);
            targets.push((cycle, id, !same));
        }
    }
    let goal: Vec<Lit> = targets.iter().map(|t| t.2).collect();
    enc.clauses_mut().add_clause(goal);

    let mut frames = frames.into_iter();
    let f1 = frames.next().expect("two instances");
    let f2 = frames.next().expect("two instances");
    Ok(BuiltQuery {
        query: q,
        clauses: enc.into_clauses(),
        targets,
        frames: [f1, f2],
    })
}

/// Concrete values of one instance at one cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleValues {
    pub states: Valuation,
    pub inputs: Valuation,
    pub outputs: Valuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Per-instance traces over cycles `0..=horizon`.
    pub traces: [Vec<CycleValues>; 2],
    pub failing_cycle: u32,
    pub diff_set: StateSet,
    /// Differing element indices of array-valued members of `diff_set`.
    pub array_diffs: BTreeMap<NodeId, Vec<u64>>,
}

impl Counterexample {
    pub fn horizon(&self) -> u32 {
        self.traces[0].len() as u32 - 1
    }

    /// Value of a state or output in one instance (0 or 1) at one cycle.
    pub fn signal_value(&self, n: &Netlist, inst: usize, cycle: u32, id: NodeId) -> Option<&Value> {
        let cv = self.traces.get(inst)?.get(cycle as usize)?;
        if n.output(id).is_some() {
            cv.outputs.get(&id)
        } else {
            cv.states.get(&id)
        }
    }

    /// Replays both traces through the concrete evaluator and checks that
    /// every recorded successor state and output matches.
    pub fn replay(&self, n: &Netlist) -> Result<()> {
        for (inst, trace) in self.traces.iter().enumerate() {
            for (cycle, cv) in trace.iter().enumerate() {
                let (next, outputs) = evaluate_step(n, &cv.states, &cv.inputs)?;
                if outputs != cv.outputs {
                    return Err(Error::Soundness(format!(
                        "instance {} cycle {cycle}: outputs do not replay",
                        inst + 1
                    )));
                }
                if let Some(succ) = trace.get(cycle + 1) {
                    if next != succ.states {
                        let bad: Vec<&str> = n
                            .states()
                            .iter()
                            .filter(|s| next.get(&s.node) != succ.states.get(&s.node))
                            .map(|s| s.name.as_str())
                            .collect();
                        return Err(Error::Soundness(format!(
                            "instance {} cycle {}: states {bad:?} do not replay",
                            inst + 1,
                            cycle + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn differing_elements(a: &Value, b: &Value, sort: Sort) -> Vec<u64> {
    match (a, b, sort) {
        (Value::Array(x), Value::Array(y), Sort::Array { index, .. }) => (0..1u64 << index)
            .filter(|&i| x.get(i) != y.get(i))
            .collect(),
        _ => Vec::new(),
    }
}

/// Decodes a satisfying model into a replay-checked counterexample.
pub fn extract_counterexample(built: &BuiltQuery<'_, '_>, model: &[bool]) -> Result<Counterexample> {
    let q = built.query;
    let n = q.netlist;
    let decode = |frames: &Vec<FrameWords>| -> Vec<CycleValues> {
        frames
            .iter()
            .map(|f| CycleValues {
                states: n
                    .states()
                    .iter()
                    .map(|s| (s.node, decode_word(f.get(n, s.node), model)))
                    .collect(),
                inputs: n
                    .inputs()
                    .iter()
                    .map(|&i| (i, decode_word(f.get(n, i), model)))
                    .collect(),
                outputs: n
                    .outputs()
                    .iter()
                    .map(|o| (o.id, decode_word(f.get(n, o.expr), model)))
                    .collect(),
            })
            .collect()
    };
    let traces = [decode(&built.frames[0]), decode(&built.frames[1])];
    let mut cex = Counterexample {
        traces,
        failing_cycle: 0,
        diff_set: StateSet::new(),
        array_diffs: BTreeMap::new(),
    };
    for (j, set) in q.prove_schedule.iter().enumerate() {
        let cycle = j as u32 + 1;
        let diff: StateSet = set
            .iter()
            .filter(|&id| cex.signal_value(n, 0, cycle, id) != cex.signal_value(n, 1, cycle, id))
            .collect();
        if !diff.is_empty() {
            cex.failing_cycle = cycle;
            cex.diff_set = diff;
            break;
        }
    }
    if cex.diff_set.is_empty() {
        return Err(Error::Soundness("model satisfies the target but no scheduled signal differs".into()));
    }
    for id in cex.diff_set.iter() {
        let sort = n.sort_of(id).expect("validated");
        if sort.is_array() {
            let a = cex.signal_value(n, 0, cex.failing_cycle, id).expect("decoded");
            let b = cex.signal_value(n, 1, cex.failing_cycle, id).expect("decoded");
            cex.array_diffs.insert(id, differing_elements(a, b, sort));
        }
    }
    cex.replay(n)?;
    Ok(cex)
}
