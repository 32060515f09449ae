//! Proof configuration: which signals form the system state, how they are
//! classified, and which environment assumptions hold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::miter::{Cmp, SignalConstraint};
use crate::netlist::Netlist;
use crate::sat::DEFAULT_CONFLICT_BUDGET;
use crate::stateset::{select_states, NamePatterns, StateSet};

pub const DEFAULT_MAX_K: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_budget")]
    pub conflict_budget: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            conflict_budget: DEFAULT_CONFLICT_BUDGET,
        }
    }
}

fn default_budget() -> u64 {
    DEFAULT_CONFLICT_BUDGET
}

fn default_true() -> bool {
    true
}

fn default_max_k() -> u32 {
    DEFAULT_MAX_K
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofConfig {
    /// Patterns selecting the system state (everything outside the core).
    pub s_sys_patterns: Vec<String>,
    /// Treat primary outputs matched by `s_sys_patterns` as pseudo-state.
    #[serde(default = "default_true")]
    pub include_outputs: bool,
    #[serde(default)]
    pub persistent_patterns: Vec<String>,
    #[serde(default)]
    pub transient_patterns: Vec<String>,
    /// Per-cycle assumptions describing the victim task running on the core.
    /// Without explicit cycles they apply during cycles 0..=1.
    #[serde(default)]
    pub victim_constraints: Vec<SignalConstraint>,
    /// Single-instance invariants assumed at cycle 0 in both instances.
    #[serde(default)]
    pub invariants: Vec<SignalConstraint>,
    /// Inclusive cycle window of primary-input equality; the whole unrolled
    /// window when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_equality_window: Option<[u32; 2]>,
    /// Apply victim constraints over the whole unrolled window instead of
    /// only cycles 0..=1.
    #[serde(default)]
    pub victim_full_window: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Upper bound on the unrolling depth.
    #[serde(default = "default_max_k")]
    pub max_k: u32,
}

impl ProofConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Configuration with every state and output in the system set and no
    /// assumptions.
    pub fn everything() -> Self {
        ProofConfig {
            s_sys_patterns: vec!["*".into()],
            include_outputs: true,
            persistent_patterns: Vec::new(),
            transient_patterns: Vec::new(),
            victim_constraints: Vec::new(),
            invariants: Vec::new(),
            input_equality_window: None,
            victim_full_window: false,
            solver: SolverConfig::default(),
            max_k: DEFAULT_MAX_K,
        }
    }

    pub fn s_sys(&self, n: &Netlist) -> Result<StateSet> {
        let sel = select_states(n, &self.s_sys_patterns, self.include_outputs)
            .map_err(|e| Error::Config(format!("bad S_sys pattern: {e}")))?;
        Ok(sel.set)
    }

    /// Checks names and patterns against a netlist. Returns warnings for
    /// patterns that select nothing.
    pub fn validate(&self, n: &Netlist) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let sel = select_states(n, &self.s_sys_patterns, self.include_outputs)
            .map_err(|e| Error::Config(format!("bad S_sys pattern: {e}")))?;
        if sel.set.is_empty() {
            return Err(Error::Config("S_sys is empty".into()));
        }
        for p in sel.unmatched {
            warnings.push(format!("S_sys pattern `{p}` matches no signal"));
        }
        let names: Vec<&str> = n
            .states()
            .iter()
            .map(|s| s.name.as_str())
            .chain(n.outputs().iter().map(|o| o.name.as_str()))
            .collect();
        for (kind, pats) in [
            ("persistent", &self.persistent_patterns),
            ("transient", &self.transient_patterns),
        ] {
            let compiled = NamePatterns::new(pats)
                .map_err(|e| Error::Config(format!("bad {kind} pattern: {e}")))?;
            for p in compiled.unmatched(&names) {
                warnings.push(format!("{kind} pattern `{p}` matches no signal"));
            }
        }
        let classes = crate::classify::Classification::new(&self.persistent_patterns, &self.transient_patterns)?;
        classes.classify(n, &sel.set)?;
        for c in self.victim_constraints.iter().chain(&self.invariants) {
            if n.value_node(&c.signal).is_none() {
                return Err(Error::UnknownSignal(c.signal.clone()));
            }
        }
        if let Some(inv) = self.invariants.iter().find(|c| c.cmp == Cmp::InstancesEqual) {
            return Err(Error::Config(format!(
                "invariant on `{}` must refer to a single instance",
                inv.signal
            )));
        }
        if self.max_k == 0 {
            return Err(Error::Config("max_k must be at least 1".into()));
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_uses_defaults() {
        let cfg = ProofConfig::from_json(r#"{"s_sys_patterns": ["soc.*"]}"#).unwrap();
        assert!(cfg.include_outputs);
        assert_eq!(cfg.solver.conflict_budget, DEFAULT_CONFLICT_BUDGET);
        assert_eq!(cfg.max_k, DEFAULT_MAX_K);
        assert!(cfg.invariants.is_empty());
    }

    #[test]
    fn constraint_syntax() {
        let cfg = ProofConfig::from_json(
            r#"{
                "s_sys_patterns": ["soc.*"],
                "victim_constraints": [
                    {"signal": "soc.core.region", "cmp": "eq", "value": 1, "cycles": [0, 1]},
                    {"signal": "soc.core.x", "cmp": "instances_equal", "cycles": 0}
                ],
                "solver": {"conflict_budget": 5}
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.victim_constraints.len(), 2);
        assert_eq!(cfg.victim_constraints[1].cmp, Cmp::InstancesEqual);
        assert_eq!(cfg.solver.conflict_budget, 5);
        let back = ProofConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ProofConfig::from_json(r#"{"s_sys_patterns": [], "bogus": 1}"#).is_err());
    }
}
