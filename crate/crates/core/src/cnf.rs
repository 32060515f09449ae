//! Propositional clause sets and DIMACS export.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Not;

use crate::netlist::NodeId;

/// A literal over variables numbered densely from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Lit {
        debug_assert!(var > 0);
        Lit(var << 1 | u32::from(!positive))
    }

    #[inline]
    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }

    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.var());
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn from_dimacs(x: i64) -> Lit {
        assert!(x != 0, "0 is the DIMACS clause terminator, not a literal");
        Lit::new(x.unsigned_abs() as u32, x > 0)
    }
}

impl Not for Lit {
    type Output = Lit;
    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

/// Identifies one bit of one node of one design instance at one cycle. For
/// arrays, `bit` is `element * element_width + bit_in_element`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarKey {
    pub instance: u8,
    pub cycle: u32,
    pub node: NodeId,
    pub bit: u32,
}

#[derive(Debug, Clone, Default)]
pub struct ClauseSet {
    clauses: Vec<Vec<Lit>>,
    var_count: u32,
    var_map: BTreeMap<VarKey, u32>,
    owner: Vec<Option<VarKey>>,
    labels: BTreeMap<NodeId, String>,
}

impl ClauseSet {
    pub fn new() -> Self {
        ClauseSet {
            owner: vec![None],
            ..Default::default()
        }
    }

    pub fn new_var(&mut self) -> Lit {
        self.var_count += 1;
        self.owner.push(None);
        Lit::new(self.var_count, true)
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn add_clause(&mut self, lits: impl Into<Vec<Lit>>) {
        let lits = lits.into();
        debug_assert!(lits.iter().all(|l| l.var() >= 1 && l.var() <= self.var_count));
        self.clauses.push(lits);
    }

    pub fn var_map(&self) -> &BTreeMap<VarKey, u32> {
        &self.var_map
    }

    pub fn key_var(&self, key: &VarKey) -> Option<u32> {
        self.var_map.get(key).copied()
    }

    pub fn owner(&self, var: u32) -> Option<VarKey> {
        self.owner.get(var as usize).copied().flatten()
    }

    /// Binds `key` to a variable equivalent to `lit`. Reuses the literal's
    /// variable when it is a positive, still unowned variable; otherwise a
    /// fresh variable is tied to it, keeping the map injective.
    pub fn bind(&mut self, key: VarKey, lit: Lit) -> Lit {
        if let Some(&v) = self.var_map.get(&key) {
            let bound = Lit::new(v, true);
            if bound != lit {
                self.add_clause([!bound, lit]);
                self.add_clause([bound, !lit]);
            }
            return bound;
        }
        let var = if lit.is_positive() && self.owner[lit.var() as usize].is_none() {
            lit.var()
        } else {
            let fresh = self.new_var();
            self.add_clause([!fresh, lit]);
            self.add_clause([fresh, !lit]);
            fresh.var()
        };
        self.owner[var as usize] = Some(key);
        self.var_map.insert(key, var);
        Lit::new(var, true)
    }

    /// Human-readable names used in DIMACS comments.
    pub fn set_label(&mut self, node: NodeId, label: impl Into<String>) {
        self.labels.insert(node, label.into());
    }

    /// Standard DIMACS CNF. Assumptions are appended as unit clauses. The
    /// comment header maps each bound variable to instance, cycle, name and
    /// bit.
    pub fn export_dimacs(&self, assumptions: &[Lit]) -> String {
        let mut out = String::new();
        let mut by_var: Vec<(u32, &VarKey)> = self.var_map.iter().map(|(k, &v)| (v, k)).collect();
        by_var.sort();
        for (var, key) in by_var {
            let label = self
                .labels
                .get(&key.node)
                .cloned()
                .unwrap_or_else(|| format!("n{}", key.node));
            let _ = writeln!(
                out,
                "c {var} inst{} cycle{} {label}[{}]",
                key.instance, key.cycle, key.bit
            );
        }
        let _ = writeln!(
            out,
            "p cnf {} {}",
            self.var_count,
            self.clauses.len() + assumptions.len()
        );
        let units = assumptions.iter().map(std::slice::from_ref);
        for clause in self.clauses.iter().map(Vec::as_slice).chain(units) {
            for l in clause {
                let _ = write!(out, "{} ", l.to_dimacs());
            }
            out.push_str("0\n");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_encoding() {
        let l = Lit::new(5, false);
        assert_eq!(l.var(), 5);
        assert!(!l.is_positive());
        assert_eq!(l.to_dimacs(), -5);
        assert_eq!(Lit::from_dimacs(-5), l);
        assert_eq!(!l, Lit::new(5, true));
    }

    #[test]
    fn dimacs_single_clause() {
        let mut cs = ClauseSet::new();
        let a = cs.new_var();
        cs.add_clause([a]);
        assert_eq!(cs.export_dimacs(&[]), "p cnf 1 1\n1 0\n");
    }

    #[test]
    fn dimacs_empty() {
        assert_eq!(ClauseSet::new().export_dimacs(&[]), "p cnf 0 0\n");
    }

    #[test]
    fn dimacs_comments_and_assumptions() {
        let mut cs = ClauseSet::new();
        let a = cs.new_var();
        let b = cs.new_var();
        cs.add_clause([a, b]);
        let key = VarKey {
            instance: 2,
            cycle: 1,
            node: 7,
            bit: 3,
        };
        cs.set_label(7, "soc.timer.counter");
        cs.bind(key, b);
        let text = cs.export_dimacs(&[!a]);
        assert_eq!(text, "c 2 inst2 cycle1 soc.timer.counter[3]\np cnf 2 2\n1 2 0\n-1 0\n");
    }

    #[test]
    fn bind_keeps_map_injective() {
        let mut cs = ClauseSet::new();
        let a = cs.new_var();
        let k1 = VarKey { instance: 1, cycle: 0, node: 1, bit: 0 };
        let k2 = VarKey { instance: 1, cycle: 0, node: 2, bit: 0 };
        assert_eq!(cs.bind(k1, a), a);
        let b = cs.bind(k2, a);
        assert_ne!(a, b);
        assert_eq!(cs.clauses().len(), 2);
        let c = cs.bind(k2, !a);
        assert_eq!(c, b);
    }
}
