//! Sets of state variables (and output pseudo-states) keyed by declaration id.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use glob::{MatchOptions, Pattern, PatternError};

use crate::netlist::{Netlist, NodeId};

/// Deduplicated set of signal ids. Iteration order is ascending id, which is
/// the declaration order in the netlist file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSet(BTreeSet<NodeId>);

impl StateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0.contains(&id)
    }

    pub fn insert(&mut self, id: NodeId) -> bool {
        self.0.insert(id)
    }

    pub fn remove(&mut self, id: NodeId) -> bool {
        self.0.remove(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        StateSet(self.0.union(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        StateSet(self.0.intersection(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &StateSet) -> StateSet {
        StateSet(self.0.difference(&other.0).copied().collect())
    }

    /// Member names in id order.
    pub fn names(&self, n: &Netlist) -> Vec<String> {
        self.iter()
            .map(|id| n.name_of(id).unwrap_or("?").to_string())
            .collect()
    }

    /// All states, plus all outputs when `with_outputs` is set.
    pub fn all(n: &Netlist, with_outputs: bool) -> StateSet {
        let mut set: StateSet = n.states().iter().map(|s| s.node).collect();
        if with_outputs {
            set.0.extend(n.outputs().iter().map(|o| o.id));
        }
        set
    }

    /// Resolves exact signal names.
    pub fn from_names<'a>(n: &Netlist, names: impl IntoIterator<Item = &'a str>) -> Option<StateSet> {
        names
            .into_iter()
            .map(|name| n.lookup(name).filter(|&id| n.signal(id).is_some()))
            .collect()
    }
}

impl FromIterator<NodeId> for StateSet {
    fn from_iter<T: IntoIterator<Item = NodeId>>(iter: T) -> Self {
        StateSet(iter.into_iter().collect())
    }
}

/// Glob patterns over hierarchical names. Only `*` (any run of characters,
/// dots included) and `?` are meaningful.
#[derive(Debug, Clone, Default)]
pub struct NamePatterns {
    patterns: Vec<(String, Pattern)>,
}

const MATCH: MatchOptions = MatchOptions {
    case_sensitive: true,
    require_literal_separator: false,
    require_literal_leading_dot: false,
};

impl NamePatterns {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self, PatternError> {
        let patterns = patterns
            .iter()
            .map(|p| Pattern::new(p.as_ref()).map(|c| (p.as_ref().to_string(), c)))
            .collect::<Result<_, _>>()?;
        Ok(NamePatterns { patterns })
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn matches(&self, name: &str) -> bool {
        self.patterns.iter().any(|(_, p)| p.matches_with(name, MATCH))
    }

    /// Patterns that match none of the given names.
    pub fn unmatched<'a>(&'a self, names: &[&str]) -> Vec<&'a str> {
        self.patterns
            .iter()
            .filter(|(_, p)| !names.iter().any(|n| p.matches_with(n, MATCH)))
            .map(|(s, _)| s.as_str())
            .collect()
    }
}

/// Result of [`select_states`]: the matched set plus patterns that matched
/// nothing (reported as warnings).
#[derive(Debug, Clone)]
pub struct Selection {
    pub set: StateSet,
    pub unmatched: Vec<String>,
}

/// Collects every state (and, with `with_outputs`, every output) whose name
/// matches one of the patterns.
pub fn select_states<S: AsRef<str>>(
    n: &Netlist,
    patterns: &[S],
    with_outputs: bool,
) -> Result<Selection, PatternError> {
    let pats = NamePatterns::new(patterns)?;
    let mut candidates: Vec<(NodeId, &str)> = n.states().iter().map(|s| (s.node, s.name.as_str())).collect();
    if with_outputs {
        candidates.extend(n.outputs().iter().map(|o| (o.id, o.name.as_str())));
    }
    let set = candidates
        .iter()
        .filter(|(_, name)| pats.matches(name))
        .map(|(id, _)| *id)
        .collect();
    let names: Vec<&str> = candidates.iter().map(|(_, n)| *n).collect();
    let unmatched = pats.unmatched(&names).into_iter().map(String::from).collect();
    Ok(Selection { set, unmatched })
}
