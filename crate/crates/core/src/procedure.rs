//! The iterative procedures: the two-cycle fixpoint over `S` and the
//! cycle-by-cycle unrolled variant with its closing induction.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::check::{CheckOutcome, Checker};
use crate::classify::{Classification, Partition};
use crate::config::ProofConfig;
use crate::error::{Error, Result};
use crate::miter::Counterexample;
use crate::netlist::Netlist;
use crate::stateset::StateSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Secure,
    Vulnerable,
    NeedsClassification,
    Inconclusive,
}

impl VerdictStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            VerdictStatus::Secure => 0,
            VerdictStatus::Vulnerable => 2,
            VerdictStatus::NeedsClassification => 3,
            VerdictStatus::Inconclusive => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictStatus::Secure => "secure",
            VerdictStatus::Vulnerable => "vulnerable",
            VerdictStatus::NeedsClassification => "needs_classification",
            VerdictStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Two-cycle fixpoint iteration.
    Fixpoint,
    /// Unrolled check at depth `k`.
    Unrolled,
    /// Two-cycle check of `S[k]` after the unrolled loop stabilised.
    Induction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    /// Property held; the procedure stops with a secure verdict.
    Proven,
    /// Transient divergence removed from the working set.
    RemovedTransient,
    /// Property held at depth `k` with a shrunk `S[k]`; unroll one more cycle.
    Unroll,
    /// Unrolled loop stabilised or hit the depth cap; hand `S[k]` to the
    /// fixpoint loop.
    SwitchToFixpoint,
    ReportVulnerable,
    ReportUnclassified,
    BudgetExhausted,
}

/// One solver call and the decision taken on its result. Serialises to one
/// JSON line; wall time is kept out of the serialised form.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    pub k: u32,
    /// Size of each set in the schedule `S[0..=k]` (a single entry for the
    /// fixpoint loop).
    pub set_sizes: Vec<usize>,
    pub holds: Option<bool>,
    pub failing_cycle: Option<u32>,
    pub diff_set: Vec<String>,
    pub persistent: Vec<String>,
    pub transient: Vec<String>,
    pub unknown: Vec<String>,
    pub action: Action,
    pub conflicts: u64,
    #[serde(skip)]
    pub schedule: Vec<StateSet>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl IterationRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialises")
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub iterations: Vec<IterationRecord>,
    /// Counterexample with a persistent member in its diff set.
    pub evidence: Option<Counterexample>,
    /// Diff-set members matching neither classification list.
    pub unclassified: Vec<String>,
    /// Inductive state set (secure only).
    pub final_set: Option<StateSet>,
    /// Largest unrolling depth reached (1 for the fixpoint loop).
    pub final_k: u32,
    /// Conflict budget that ran out (inconclusive only).
    pub exhausted_budget: Option<u64>,
    pub wall_time: Duration,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            status: VerdictStatus::Inconclusive,
            iterations: Vec::new(),
            evidence: None,
            unclassified: Vec::new(),
            final_set: None,
            final_k: 1,
            exhausted_budget: None,
            wall_time: Duration::ZERO,
        }
    }

    /// Iteration log as newline-terminated JSON lines.
    pub fn log_lines(&self) -> String {
        self.iterations.iter().map(|r| r.to_json_line() + "\n").collect()
    }
}

struct Run<'c, 'a> {
    checker: &'c mut Checker<'a>,
    classes: Classification,
    verdict: Verdict,
}

enum Step {
    Holds,
    Transient(StateSet),
    Done,
}

impl<'c, 'a> Run<'c, 'a> {
    fn new(checker: &'c mut Checker<'a>) -> Result<Self> {
        let cfg = checker.config();
        let classes = Classification::new(&cfg.persistent_patterns, &cfg.transient_patterns)?;
        if checker.s_sys().is_empty() {
            return Err(Error::Config("S_sys is empty".into()));
        }
        Ok(Run {
            checker,
            classes,
            verdict: Verdict::new(),
        })
    }

    fn record(&mut self, phase: Phase, k: u32, schedule: &[StateSet], out: Option<&CheckOutcome>, part: &Partition, action: Action) {
        let n = self.checker.netlist();
        let cex = out.and_then(|o| o.counterexample());
        self.verdict.iterations.push(IterationRecord {
            iteration: self.verdict.iterations.len() + 1,
            phase,
            k,
            set_sizes: schedule.iter().map(StateSet::len).collect(),
            holds: out.map(|o| o.holds()),
            failing_cycle: cex.map(|c| c.failing_cycle),
            diff_set: cex.map(|c| c.diff_set.names(n)).unwrap_or_default(),
            persistent: part.persistent.names(n),
            transient: part.transient.names(n),
            unknown: part.unknown.names(n),
            action,
            conflicts: out.map_or(0, |o| o.stats.conflicts),
            schedule: schedule.to_vec(),
            wall_time: out.map_or(Duration::ZERO, |o| o.stats.wall_time),
        });
    }

    /// Interprets one check: records it and decides between stopping and
    /// removing a transient diff set.
    fn step(
        &mut self,
        phase: Phase,
        k: u32,
        schedule: &[StateSet],
        result: Result<CheckOutcome>,
        on_hold: Action,
    ) -> Result<Step> {
        let out = match result {
            Ok(o) => o,
            Err(Error::Budget(b)) => {
                self.record(phase, k, schedule, None, &Partition::default(), Action::BudgetExhausted);
                self.verdict.status = VerdictStatus::Inconclusive;
                self.verdict.exhausted_budget = Some(b);
                return Ok(Step::Done);
            }
            Err(e) => return Err(e),
        };
        let Some(cex) = out.counterexample() else {
            self.record(phase, k, schedule, Some(&out), &Partition::default(), on_hold);
            return Ok(Step::Holds);
        };
        let n = self.checker.netlist();
        let part = self.classes.classify(n, &cex.diff_set)?;
        if !part.persistent.is_empty() {
            self.record(phase, k, schedule, Some(&out), &part, Action::ReportVulnerable);
            self.verdict.status = VerdictStatus::Vulnerable;
            self.verdict.evidence = out.counterexample().cloned();
            return Ok(Step::Done);
        }
        if !part.unknown.is_empty() {
            self.record(phase, k, schedule, Some(&out), &part, Action::ReportUnclassified);
            self.verdict.status = VerdictStatus::NeedsClassification;
            self.verdict.unclassified = part.unknown.names(n);
            self.verdict.evidence = out.counterexample().cloned();
            return Ok(Step::Done);
        }
        let removed = part.transient.clone();
        self.record(phase, k, schedule, Some(&out), &part, Action::RemovedTransient);
        Ok(Step::Transient(removed))
    }

    fn fixpoint(&mut self, mut s: StateSet) -> Result<()> {
        loop {
            let result = self.checker.check_upec_ssc(&s);
            match self.step(Phase::Fixpoint, 1, std::slice::from_ref(&s), result, Action::Proven)? {
                Step::Holds => {
                    self.verdict.status = VerdictStatus::Secure;
                    self.verdict.final_set = Some(s);
                    return Ok(());
                }
                Step::Transient(cex) => {
                    let before = s.len();
                    s = s.difference(&cex);
                    debug_assert!(s.len() < before, "diff set lies inside S");
                }
                Step::Done => return Ok(()),
            }
        }
    }

    fn unrolled(&mut self) -> Result<()> {
        let max_k = self.checker.config().max_k.max(1);
        let s_sys = self.checker.s_sys().clone();
        let mut sets = vec![s_sys.clone(), s_sys];
        let mut k = 1u32;
        loop {
            let result = self.checker.check_upec_ssc_unrolled(k, &sets);
            let ku = k as usize;
            let stable = sets[ku] == sets[ku - 1];
            let on_hold = if stable || k == max_k { Action::SwitchToFixpoint } else { Action::Unroll };
            match self.step(Phase::Unrolled, k, &sets, result, on_hold)? {
                Step::Holds if on_hold == Action::SwitchToFixpoint => {
                    self.verdict.final_k = k;
                    let last = sets[ku].clone();
                    return self.induction(last);
                }
                Step::Holds => {
                    k += 1;
                    sets.push(sets[ku].clone());
                }
                Step::Transient(cex) => sets[ku] = sets[ku].difference(&cex),
                Step::Done => {
                    self.verdict.final_k = k;
                    return Ok(());
                }
            }
        }
    }

    /// Two-cycle check of `S[k]`; if it fails with transient divergence the
    /// fixpoint loop continues from the reduced set.
    fn induction(&mut self, s: StateSet) -> Result<()> {
        let result = self.checker.check_upec_ssc(&s);
        match self.step(Phase::Induction, 1, std::slice::from_ref(&s), result, Action::Proven)? {
            Step::Holds => {
                self.verdict.status = VerdictStatus::Secure;
                self.verdict.final_set = Some(s);
                Ok(())
            }
            Step::Transient(cex) => self.fixpoint(s.difference(&cex)),
            Step::Done => Ok(()),
        }
    }
}

/// Two-cycle fixpoint: starting from `S_sys`, remove transient diff sets
/// until the property holds or a persistent or unclassified signal diverges.
pub fn run_ssc_with(checker: &mut Checker<'_>) -> Result<Verdict> {
    let start = Instant::now();
    let mut run = Run::new(checker)?;
    let s_sys = run.checker.s_sys().clone();
    run.fixpoint(s_sys)?;
    run.verdict.wall_time = start.elapsed();
    Ok(run.verdict)
}

/// Unrolled procedure: shrink `S[k]` until the depth-`k` property holds,
/// unroll while `S[k]` still shrinks, then close with a two-cycle check of
/// `S[k]`.
pub fn run_ssc_unrolled_with(checker: &mut Checker<'_>) -> Result<Verdict> {
    let start = Instant::now();
    let mut run = Run::new(checker)?;
    run.unrolled()?;
    run.verdict.wall_time = start.elapsed();
    Ok(run.verdict)
}

pub fn run_ssc(n: &Netlist, cfg: &ProofConfig) -> Result<Verdict> {
    run_ssc_with(&mut Checker::new(n, cfg)?)
}

pub fn run_ssc_unrolled(n: &Netlist, cfg: &ProofConfig) -> Result<Verdict> {
    run_ssc_unrolled_with(&mut Checker::new(n, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    // `buf` samples the core; `sink` accumulates `buf` only when `gate` is set.
    const PIPE: &str = "\
1 sort bitvec 4
2 sort bitvec 1
3 state 1 core.secret
4 state 1 sys.buf
5 state 1 sys.sink
6 state 2 sys.gate
7 add 1 5 4
8 ite 1 6 7 5
9 next 3 3
10 next 4 3
11 next 5 8
12 next 6 6
";

    fn cfg() -> ProofConfig {
        let mut cfg = ProofConfig::everything();
        cfg.s_sys_patterns = vec!["sys.*".into()];
        cfg.transient_patterns = vec!["sys.buf".into()];
        cfg.persistent_patterns = vec!["sys.sink".into(), "sys.gate".into()];
        cfg
    }

    #[test]
    fn leak_through_buffer_is_found() {
        let n = Netlist::parse(PIPE).unwrap();
        let v = run_ssc(&n, &cfg()).unwrap();
        assert_eq!(v.status, VerdictStatus::Vulnerable);
        assert_eq!(v.iterations.len(), 2);
        assert_eq!(v.iterations[0].diff_set, vec!["sys.buf"]);
        assert_eq!(v.iterations[1].diff_set, vec!["sys.sink"]);
        assert_eq!(v.iterations[1].set_sizes, vec![2]);
    }

    #[test]
    fn closed_gate_is_secure() {
        let n = Netlist::parse(PIPE).unwrap();
        let mut c = cfg();
        c.invariants = vec![crate::miter::SignalConstraint::new("sys.gate", crate::miter::Cmp::Eq, 0)];
        let v = run_ssc(&n, &c).unwrap();
        assert_eq!(v.status, VerdictStatus::Secure);
        assert_eq!(v.final_set.unwrap().names(&n), vec!["sys.sink", "sys.gate"]);
        let u = run_ssc_unrolled(&n, &c).unwrap();
        assert_eq!(u.status, VerdictStatus::Secure);
        assert_eq!(u.iterations.last().unwrap().phase, Phase::Induction);
    }

    #[test]
    fn unclassified_divergence_halts() {
        let n = Netlist::parse(PIPE).unwrap();
        let mut c = cfg();
        c.transient_patterns.clear();
        let v = run_ssc(&n, &c).unwrap();
        assert_eq!(v.status, VerdictStatus::NeedsClassification);
        assert_eq!(v.unclassified, vec!["sys.buf"]);
    }

    #[test]
    fn unrolled_finds_leak_at_depth_two() {
        let n = Netlist::parse(PIPE).unwrap();
        let v = run_ssc_unrolled(&n, &cfg()).unwrap();
        assert_eq!(v.status, VerdictStatus::Vulnerable);
        assert_eq!(v.final_k, 2);
        let cex = v.evidence.unwrap();
        assert_eq!(cex.failing_cycle, 2);
        assert_eq!(cex.diff_set.names(&n), vec!["sys.sink"]);
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        // refuting an 8 x 8 bit factorisation needs real search
        let text = "\
1 sort bitvec 8
2 sort bitvec 16
3 sort bitvec 1
4 state 1 core.a
5 state 1 core.b
6 const 1 0
7 concat 2 6 4
8 concat 2 6 5
9 mul 2 7 8
10 const 2 fd8d
11 eq 3 9 10
12 state 3 sys.flag
13 next 4 4
14 next 5 5
15 next 12 11
";
        let n = Netlist::parse(text).unwrap();
        let mut c = ProofConfig::everything();
        c.s_sys_patterns = vec!["sys.*".into()];
        c.persistent_patterns = vec!["sys.*".into()];
        c.solver.conflict_budget = 1;
        let v = run_ssc(&n, &c).unwrap();
        assert_eq!(v.status, VerdictStatus::Inconclusive);
        assert_eq!(v.exhausted_budget, Some(1));
        assert_eq!(v.iterations.last().unwrap().action, Action::BudgetExhausted);
    }
}
