//! Proof obligations: the two-cycle property, its unrolled form, and
//! invariant consecution.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cnf::ClauseSet;
use crate::config::ProofConfig;
use crate::encode::{decode_word, Encoder};
use crate::error::{Error, Result};
use crate::miter::{
    assert_constraint, build_query, constraint_lit, extract_counterexample, unroll, Counterexample, CycleValues,
    Cycles, SignalConstraint, Target, UpecQuery,
};
use crate::netlist::Netlist;
use crate::sat::{solve, SolveError, Status};
use crate::stateset::StateSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Holds,
    Fails,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CheckStats {
    pub conflicts: u64,
    pub variables: u32,
    pub clauses: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evidence {
    /// Two-instance divergence.
    Miter(Counterexample),
    /// Single-instance trace violating an invariant at its last cycle.
    Trace(Vec<CycleValues>),
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub status: CheckStatus,
    pub evidence: Option<Evidence>,
    pub stats: CheckStats,
}

impl CheckOutcome {
    pub fn holds(&self) -> bool {
        self.status == CheckStatus::Holds
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match &self.evidence {
            Some(Evidence::Miter(c)) => Some(c),
            _ => None,
        }
    }

    pub fn trace(&self) -> Option<&[CycleValues]> {
        match &self.evidence {
            Some(Evidence::Trace(t)) => Some(t),
            _ => None,
        }
    }
}

/// Receives every clause set before it is solved and every outcome after.
pub trait QueryHook {
    fn on_query(&mut self, label: &str, clauses: &ClauseSet);

    fn on_outcome(&mut self, _label: &str, _outcome: &CheckOutcome) {}
}

/// Runs obligations for one netlist under one configuration.
pub struct Checker<'a> {
    netlist: &'a Netlist,
    config: &'a ProofConfig,
    s_sys: StateSet,
    hook: Option<&'a mut dyn QueryHook>,
    queries: usize,
}

impl<'a> Checker<'a> {
    pub fn new(netlist: &'a Netlist, config: &'a ProofConfig) -> Result<Self> {
        let s_sys = config.s_sys(netlist)?;
        Ok(Checker {
            netlist,
            config,
            s_sys,
            hook: None,
            queries: 0,
        })
    }

    pub fn with_hook(mut self, hook: &'a mut dyn QueryHook) -> Self {
        self.hook = Some(hook);
        self
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.netlist
    }

    pub fn config(&self) -> &'a ProofConfig {
        self.config
    }

    pub fn s_sys(&self) -> &StateSet {
        &self.s_sys
    }

    fn victim_constraints(&self, horizon: u32) -> Vec<SignalConstraint> {
        if !self.config.victim_full_window {
            return self.config.victim_constraints.clone();
        }
        self.config
            .victim_constraints
            .iter()
            .map(|c| {
                let lo = c.cycles.map_or(0, |cy| cy.bounds().0);
                c.clone().at(Cycles::Range([lo, horizon]))
            })
            .collect()
    }

    fn query(&self, horizon: u32, sets: &[StateSet]) -> UpecQuery<'a> {
        let window = self
            .config
            .input_equality_window
            .map_or((0, horizon), |[lo, hi]| (lo, hi.min(horizon)));
        UpecQuery {
            netlist: self.netlist,
            horizon,
            equality_at_t: sets[0].clone(),
            prove_schedule: sets[1..].to_vec(),
            input_window: window,
            victim_constraints: self.victim_constraints(horizon),
            invariants: self.config.invariants.clone(),
        }
    }

    fn solve_miter(&mut self, q: &UpecQuery<'_>, label: &str) -> Result<CheckOutcome> {
        let start = Instant::now();
        let built = build_query(q)?;
        let label = self.next_label(label);
        if let Some(hook) = self.hook.as_deref_mut() {
            hook.on_query(&label, &built.clauses);
        }
        let r = solve(&built.clauses, &[], self.config.solver.conflict_budget).map_err(budget)?;
        let evidence = match r.status {
            Status::Unsat => None,
            Status::Sat => Some(Evidence::Miter(extract_counterexample(
                &built,
                r.model.as_ref().expect("sat result has a model"),
            )?)),
        };
        let outcome = CheckOutcome {
            status: if evidence.is_some() { CheckStatus::Fails } else { CheckStatus::Holds },
            evidence,
            stats: CheckStats {
                conflicts: r.conflicts,
                variables: built.clauses.var_count(),
                clauses: built.clauses.clauses().len(),
                wall_time: start.elapsed(),
            },
        };
        self.report(&label, outcome)
    }

    fn next_label(&mut self, label: &str) -> String {
        self.queries += 1;
        format!("q{:03}_{label}", self.queries)
    }

    fn report(&mut self, label: &str, outcome: CheckOutcome) -> Result<CheckOutcome> {
        if let Some(hook) = self.hook.as_deref_mut() {
            hook.on_outcome(label, &outcome);
        }
        Ok(outcome)
    }

    /// Two-cycle property: `set` equal at cycle 0 implies `set` equal at
    /// cycle 1.
    pub fn check_upec_ssc(&mut self, set: &StateSet) -> Result<CheckOutcome> {
        if !set.is_subset(&self.s_sys) {
            let extra = set.difference(&self.s_sys).names(self.netlist);
            return Err(Error::Query(format!("signals outside S_sys: {extra:?}")));
        }
        let q = self.query(1, &[set.clone(), set.clone()]);
        self.solve_miter(&q, "upec_ssc")
    }

    /// Unrolled property: `sets[0]` equal at cycle 0 implies `sets[j]` equal
    /// at cycle `j` for `j = 1..=k`.
    pub fn check_upec_ssc_unrolled(&mut self, k: u32, sets: &[StateSet]) -> Result<CheckOutcome> {
        if k == 0 || sets.len() != k as usize + 1 {
            return Err(Error::Query(format!(
                "unrolled check needs k >= 1 and k + 1 state sets (k = {k}, {} sets)",
                sets.len()
            )));
        }
        if let Some(j) = (0..k as usize).find(|&j| !sets[j + 1].is_subset(&sets[j])) {
            return Err(Error::Query(format!("state set schedule grows from cycle {j} to {}", j + 1)));
        }
        if !sets[0].is_subset(&self.s_sys) {
            return Err(Error::Query("S[0] is not contained in S_sys".into()));
        }
        let q = self.query(k, sets);
        self.solve_miter(&q, &format!("unrolled_k{k}"))
    }

    /// Consecution of a single-instance invariant: assuming all configured
    /// invariants and `inv` at cycle 0, `inv` holds at cycle 1.
    pub fn check_invariant(&mut self, inv: &SignalConstraint) -> Result<CheckOutcome> {
        let n = self.netlist;
        let start = Instant::now();
        let mut enc = Encoder::new();
        let frames = unroll(&mut enc, n, 1, 1, None)?;
        let inv = inv.clone().on(Target::Instance1);
        for assumed in self.config.invariants.iter().chain(std::iter::once(&inv)) {
            let mut a = assumed.clone().on(Target::Instance1);
            a.cycles = None;
            assert_constraint(&mut enc, n, &frames, &a, Cycles::At(0), 1)?;
        }
        let goal = constraint_lit(&mut enc, n, &frames, &inv, 0, 1)?;
        enc.assert(!goal);
        let cs = enc.into_clauses();
        let label = self.next_label("invariant");
        if let Some(hook) = self.hook.as_deref_mut() {
            hook.on_query(&label, &cs);
        }
        let r = solve(&cs, &[], self.config.solver.conflict_budget).map_err(budget)?;
        let evidence = r.model.as_ref().map(|m| {
            let trace: Vec<CycleValues> = frames[0]
                .iter()
                .map(|f| CycleValues {
                    states: n.states().iter().map(|s| (s.node, decode_word(f.get(n, s.node), m))).collect(),
                    inputs: n.inputs().iter().map(|&i| (i, decode_word(f.get(n, i), m))).collect(),
                    outputs: n.outputs().iter().map(|o| (o.id, decode_word(f.get(n, o.expr), m))).collect(),
                })
                .collect();
            Evidence::Trace(trace)
        });
        let outcome = CheckOutcome {
            status: if r.status == Status::Sat { CheckStatus::Fails } else { CheckStatus::Holds },
            evidence,
            stats: CheckStats {
                conflicts: r.conflicts,
                variables: cs.var_count(),
                clauses: cs.clauses().len(),
                wall_time: start.elapsed(),
            },
        };
        self.report(&label, outcome)
    }
}

fn budget(e: SolveError) -> Error {
    match e {
        SolveError::Budget(b) => Error::Budget(b),
    }
}

pub fn check_upec_ssc(n: &Netlist, set: &StateSet, cfg: &ProofConfig) -> Result<CheckOutcome> {
    Checker::new(n, cfg)?.check_upec_ssc(set)
}

pub fn check_upec_ssc_unrolled(n: &Netlist, k: u32, sets: &[StateSet], cfg: &ProofConfig) -> Result<CheckOutcome> {
    Checker::new(n, cfg)?.check_upec_ssc_unrolled(k, sets)
}

pub fn check_invariant(n: &Netlist, inv: &SignalConstraint, cfg: &ProofConfig) -> Result<CheckOutcome> {
    Checker::new(n, cfg)?.check_invariant(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Value;
    use crate::miter::Cmp;

    const COUNTER: &str = "\
1 sort bitvec 4
2 state 1 top.counter
3 const 1 1
4 add 1 2 3
5 next 2 4
";

    #[test]
    fn false_invariant_fails_with_step() {
        let n = Netlist::parse(COUNTER).unwrap();
        let cfg = ProofConfig::everything();
        let out = check_invariant(&n, &SignalConstraint::new("top.counter", Cmp::Eq, 0), &cfg).unwrap();
        assert_eq!(out.status, CheckStatus::Fails);
        let trace = out.trace().unwrap();
        assert_eq!(trace[0].states[&2], Value::Bv(0));
        assert_eq!(trace[1].states[&2], Value::Bv(1));
    }

    #[test]
    fn tautology_holds() {
        let n = Netlist::parse(COUNTER).unwrap();
        let cfg = ProofConfig::everything();
        let out = check_invariant(&n, &SignalConstraint::new("top.counter", Cmp::Ule, 15), &cfg).unwrap();
        assert!(out.holds());
        assert!(out.evidence.is_none());
    }

    #[test]
    fn empty_set_holds_vacuously() {
        let n = Netlist::parse(COUNTER).unwrap();
        let cfg = ProofConfig::everything();
        assert!(check_upec_ssc(&n, &StateSet::new(), &cfg).unwrap().holds());
    }

    #[test]
    fn rejects_growing_schedule_and_foreign_sets() {
        let n = Netlist::parse(COUNTER).unwrap();
        let mut cfg = ProofConfig::everything();
        let all = StateSet::all(&n, true);
        let err = check_upec_ssc_unrolled(&n, 1, &[StateSet::new(), all.clone()], &cfg).unwrap_err();
        assert!(matches!(err, Error::Query(_)));
        cfg.s_sys_patterns = vec!["nothing".into()];
        assert!(check_upec_ssc(&n, &all, &cfg).is_err());
    }

    #[test]
    fn budget_is_reported_not_hidden() {
        // 8 x 8 bit factorisation with both factors > 1 forces real search
        let text = "\
1 sort bitvec 8
2 sort bitvec 16
3 sort bitvec 1
4 state 1 top.a
5 state 1 top.b
6 const 1 0
7 concat 2 6 4
8 concat 2 6 5
9 mul 2 7 8
10 const 2 fd8d
11 eq 3 9 10
12 const 1 1
13 ult 3 12 4
14 ult 3 12 5
15 and 3 11 13
16 and 3 15 14
17 state 3 top.flag
18 next 4 4
19 next 5 5
20 next 17 16
";
        let n = Netlist::parse(text).unwrap();
        let mut cfg = ProofConfig::everything();
        cfg.solver.conflict_budget = 1;
        let inv = SignalConstraint::new("top.flag", Cmp::Eq, 0);
        let err = check_invariant(&n, &inv, &cfg).unwrap_err();
        assert!(matches!(err, Error::Budget(1)));
    }
}
