//! Conflict-driven clause-learning SAT solver.
//!
//! Two watched literals, first-UIP learning with local minimization, VSIDS
//! with ties broken towards the lowest variable index, phase saving, Luby
//! restarts and LBD-based learnt clause reduction. Nothing is randomized, so
//! a given clause set and assumption list always yields the same model.

use thiserror::Error;

use crate::cnf::{ClauseSet, Lit};

/// Default conflict budget for one query.
pub const DEFAULT_CONFLICT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatResult {
    pub status: Status,
    /// Indexed by variable; entry 0 is unused. Present iff `status` is `Sat`.
    pub model: Option<Vec<bool>>,
    pub conflicts: u64,
}

impl SatResult {
    pub fn value(&self, lit: Lit) -> Option<bool> {
        let model = self.model.as_ref()?;
        Some(model[lit.var() as usize] == lit.is_positive())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("solver gave up after exhausting its budget of {0} conflicts")]
    Budget(u64),
}

pub fn solve(cs: &ClauseSet, assumptions: &[Lit], budget: u64) -> Result<SatResult, SolveError> {
    let mut solver = Solver::new(cs.var_count());
    for clause in cs.clauses() {
        if !solver.add_clause(clause) {
            return Ok(SatResult {
                status: Status::Unsat,
                model: None,
                conflicts: 0,
            });
        }
    }
    let status = solver.search(assumptions, budget)?;
    let model = (status == Status::Sat).then(|| solver.model());
    if let Some(m) = &model {
        debug_assert!(cs
            .clauses()
            .iter()
            .all(|c| c.iter().any(|l| m[l.var() as usize] == l.is_positive())));
    }
    Ok(SatResult {
        status,
        model,
        conflicts: solver.conflicts,
    })
}

const UNDEF: i8 = 0;

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    lbd: u32,
    deleted: bool,
}

struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<usize>>,
    assign: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    conflicts: u64,
    learnts: usize,
    max_learnts: f64,
}

impl Solver {
    fn new(vars: u32) -> Self {
        let n = vars as usize + 1;
        let mut heap = VarHeap::new(n);
        let activity = vec![0.0; n];
        for v in 1..n as u32 {
            heap.insert(v, &activity);
        }
        Solver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assign: vec![UNDEF; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity,
            var_inc: 1.0,
            heap,
            phase: vec![false; n],
            seen: vec![false; n],
            conflicts: 0,
            learnts: 0,
            max_learnts: 0.0,
        }
    }

    #[inline]
    fn value(&self, l: Lit) -> i8 {
        let a = self.assign[l.var() as usize];
        if l.is_positive() {
            a
        } else {
            -a
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds an original clause at level 0. Returns false on a trivial
    /// conflict.
    fn add_clause(&mut self, lits: &[Lit]) -> bool {
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        c.retain(|&l| self.value(l) != -1);
        if c.iter().any(|&l| self.value(l) == 1) {
            return true;
        }
        match c.len() {
            0 => false,
            1 => {
                self.enqueue(c[0], None);
                self.propagate().is_none()
            }
            _ => {
                self.attach(c, false, 0);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool, lbd: u32) -> usize {
        let idx = self.clauses.len();
        self.watches[lits[0].code()].push(idx);
        self.watches[lits[1].code()].push(idx);
        self.clauses.push(Clause {
            lits,
            learnt,
            lbd,
            deleted: false,
        });
        if learnt {
            self.learnts += 1;
        }
        idx
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var() as usize;
        debug_assert_eq!(self.assign[v], UNDEF);
        self.assign[v] = if l.is_positive() { 1 } else { -1 };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Unit propagation; returns a conflicting clause index.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                if self.clauses[ci].deleted {
                    continue;
                }
                let lits = &mut self.clauses[ci].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                if self.value(first) == 1 {
                    ws[j] = ci;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..self.clauses[ci].lits.len() {
                    let l = self.clauses[ci].lits[k];
                    if self.value(l) != -1 {
                        self.clauses[ci].lits.swap(1, k);
                        self.watches[l.code()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = ci;
                j += 1;
                if self.value(first) == -1 {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(ci));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: u32) {
        let vi = v as usize;
        self.activity[vi] += self.var_inc;
        if self.activity[vi] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increase(v, &self.activity);
    }

    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit::new(1, true)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let current = self.decision_level();
        loop {
            let start = usize::from(p.is_some());
            let lits = self.clauses[confl].lits.clone();
            for &q in &lits[start..] {
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(q.var());
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let pl = self.trail[idx];
            p = Some(pl);
            self.seen[pl.var() as usize] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[pl.var() as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict at positive level");

        // Local minimization: drop literals implied by other learnt literals.
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if i == 0 {
                    return true;
                }
                match self.reason[l.var() as usize] {
                    None => true,
                    Some(r) => self.clauses[r].lits.iter().any(|&q| {
                        q.var() != l.var() && !self.seen[q.var() as usize] && self.level[q.var() as usize] > 0
                    }),
                }
            })
            .collect();
        for &l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut learnt: Vec<Lit> = learnt
            .into_iter()
            .zip(keep)
            .filter_map(|(l, k)| k.then_some(l))
            .collect();

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[max_i].var() as usize] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var() as usize]
        };
        (learnt, bt)
    }

    fn lbd(&self, lits: &[Lit]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var() as usize]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            self.assign[v] = UNDEF;
            self.reason[v] = None;
            self.phase[v] = l.is_positive();
            if !self.heap.contains(l.var()) {
                self.heap.insert(l.var(), &self.activity);
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn locked(&self, ci: usize) -> bool {
        let l = self.clauses[ci].lits[0];
        self.value(l) == 1 && self.reason[l.var() as usize] == Some(ci)
    }

    fn reduce(&mut self) {
        let mut cands: Vec<usize> = (0..self.clauses.len())
            .filter(|&ci| {
                let c = &self.clauses[ci];
                c.learnt && !c.deleted && c.lits.len() > 2 && c.lbd > 2
            })
            .filter(|&ci| !self.locked(ci))
            .collect();
        cands.sort_by_key(|&ci| (std::cmp::Reverse(self.clauses[ci].lbd), ci));
        for &ci in &cands[..cands.len() / 2] {
            self.clauses[ci].deleted = true;
            self.clauses[ci].lits.shrink_to_fit();
            self.learnts -= 1;
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assign[v as usize] == UNDEF {
                return Some(Lit::new(v, self.phase[v as usize]));
            }
        }
        None
    }

    fn search(&mut self, assumptions: &[Lit], budget: u64) -> Result<Status, SolveError> {
        if self.propagate().is_some() {
            return Ok(Status::Unsat);
        }
        self.max_learnts = (self.clauses.len() as f64 / 3.0).max(2000.0);
        let mut restart_idx = 0u32;
        let mut restart_left = 100 * luby(restart_idx);
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                if self.decision_level() == 0 {
                    return Ok(Status::Unsat);
                }
                if self.conflicts > budget {
                    return Err(SolveError::Budget(budget));
                }
                let (learnt, bt) = self.analyze(confl);
                self.backtrack(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let lbd = self.lbd(&learnt);
                    let first = learnt[0];
                    let ci = self.attach(learnt, true, lbd);
                    self.enqueue(first, Some(ci));
                }
                self.var_inc /= 0.95;
                restart_left = restart_left.saturating_sub(1);
                continue;
            }
            if restart_left == 0 {
                restart_idx += 1;
                restart_left = 100 * luby(restart_idx);
                self.backtrack(0);
            }
            if self.learnts as f64 >= self.max_learnts {
                self.reduce();
                self.max_learnts *= 1.1;
            }
            let mut next = None;
            while (self.decision_level() as usize) < assumptions.len() {
                let p = assumptions[self.decision_level() as usize];
                match self.value(p) {
                    1 => self.trail_lim.push(self.trail.len()),
                    -1 => return Ok(Status::Unsat),
                    _ => {
                        next = Some(p);
                        break;
                    }
                }
            }
            let next = match next {
                Some(p) => p,
                None => match self.pick_branch() {
                    Some(l) => l,
                    None => return Ok(Status::Sat),
                },
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(next, None);
        }
    }

    fn model(&self) -> Vec<bool> {
        self.assign.iter().map(|&a| a == 1).collect()
    }
}

fn luby(mut x: u32) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < u64::from(x) + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != u64::from(x) {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size as u32;
    }
    1u64 << seq
}

/// Binary max-heap of variables ordered by activity, lower index first on
/// ties.
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn new(n: usize) -> Self {
        VarHeap {
            heap: Vec::with_capacity(n),
            pos: vec![None; n],
        }
    }

    fn before(a: u32, b: u32, act: &[f64]) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        self.pos[v as usize] = Some(self.heap.len());
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn increase(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.sift_up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("nonempty");
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !Self::before(v, p, act) {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let child = if r < self.heap.len() && Self::before(self.heap[r], self.heap[l], act) {
                r
            } else {
                l
            };
            if !Self::before(self.heap[child], v, act) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i] as usize] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cnf(vars: u32, clauses: &[&[i64]]) -> ClauseSet {
        let mut cs = ClauseSet::new();
        for _ in 0..vars {
            cs.new_var();
        }
        for c in clauses {
            cs.add_clause(c.iter().map(|&x| Lit::from_dimacs(x)).collect::<Vec<_>>());
        }
        cs
    }

    #[test]
    fn contradiction_is_unsat() {
        let r = solve(&cnf(1, &[&[1], &[-1]]), &[], DEFAULT_CONFLICT_BUDGET).unwrap();
        assert_eq!(r.status, Status::Unsat);
        assert!(r.model.is_none());
    }

    #[test]
    fn single_clause_is_sat() {
        let cs = cnf(2, &[&[1, 2]]);
        let r = solve(&cs, &[], DEFAULT_CONFLICT_BUDGET).unwrap();
        assert_eq!(r.status, Status::Sat);
        let m = r.model.unwrap();
        assert!(m[1] || m[2]);
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn empty_clause_is_unsat() {
        let mut cs = cnf(1, &[]);
        cs.add_clause(Vec::new());
        assert_eq!(solve(&cs, &[], 10).unwrap().status, Status::Unsat);
    }

    #[test]
    fn assumptions_restrict_models() {
        let cs = cnf(2, &[&[1, 2]]);
        let r = solve(&cs, &[Lit::from_dimacs(-1)], 100).unwrap();
        assert_eq!(r.value(Lit::from_dimacs(2)), Some(true));
        let r = solve(&cs, &[Lit::from_dimacs(-1), Lit::from_dimacs(-2)], 100).unwrap();
        assert_eq!(r.status, Status::Unsat);
    }

    fn pigeonhole(holes: u32) -> ClauseSet {
        let pigeons = holes + 1;
        let var = |p: u32, h: u32| i64::from(p * holes + h + 1);
        let mut clauses: Vec<Vec<i64>> = Vec::new();
        for p in 0..pigeons {
            clauses.push((0..holes).map(|h| var(p, h)).collect());
        }
        for h in 0..holes {
            for p in 0..pigeons {
                for q in p + 1..pigeons {
                    clauses.push(vec![-var(p, h), -var(q, h)]);
                }
            }
        }
        let refs: Vec<&[i64]> = clauses.iter().map(Vec::as_slice).collect();
        cnf(pigeons * holes, &refs)
    }

    #[test]
    fn pigeonhole_is_unsat() {
        let r = solve(&pigeonhole(6), &[], DEFAULT_CONFLICT_BUDGET).unwrap();
        assert_eq!(r.status, Status::Unsat);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        assert_eq!(solve(&pigeonhole(7), &[], 5), Err(SolveError::Budget(5)));
    }

    #[test]
    fn luby_sequence() {
        let seq: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }
}
