//! Persistent / transient classification of diverging signals.

use crate::error::{Error, Result};
use crate::netlist::Netlist;
use crate::stateset::{NamePatterns, StateSet};

#[derive(Debug, Clone, Default)]
pub struct Classification {
    persistent: NamePatterns,
    transient: NamePatterns,
}

/// Partition produced by [`Classification::classify`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub persistent: StateSet,
    pub transient: StateSet,
    pub unknown: StateSet,
}

impl Classification {
    pub fn new<S: AsRef<str>>(persistent: &[S], transient: &[S]) -> Result<Self> {
        let compile = |kind: &str, pats: &[S]| {
            NamePatterns::new(pats).map_err(|e| Error::Config(format!("bad {kind} pattern: {e}")))
        };
        Ok(Classification {
            persistent: compile("persistent", persistent)?,
            transient: compile("transient", transient)?,
        })
    }

    /// Splits `vars` by pattern match. A name matched by both lists is a
    /// configuration error.
    pub fn classify(&self, n: &Netlist, vars: &StateSet) -> Result<Partition> {
        let mut part = Partition::default();
        for id in vars.iter() {
            let name = n.name_of(id).unwrap_or_default();
            match (self.persistent.matches(name), self.transient.matches(name)) {
                (true, true) => {
                    return Err(Error::Config(format!(
                        "`{name}` matches both persistent and transient patterns"
                    )))
                }
                (true, false) => part.persistent.insert(id),
                (false, true) => part.transient.insert(id),
                (false, false) => part.unknown.insert(id),
            };
        }
        Ok(part)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "\
1 sort bitvec 2
2 state 1 soc.xbar.req_buf
3 state 1 soc.timer.counter
4 state 1 soc.gpio.out
5 next 2 2
6 next 3 3
7 next 4 4
";

    #[test]
    fn partitions_by_pattern() {
        let n = Netlist::parse(TEXT).unwrap();
        let c = Classification::new(&["soc.timer.*"], &["soc.xbar.*"]).unwrap();
        let part = c.classify(&n, &StateSet::all(&n, false)).unwrap();
        assert_eq!(part.transient.names(&n), vec!["soc.xbar.req_buf"]);
        assert_eq!(part.persistent.names(&n), vec!["soc.timer.counter"]);
        assert_eq!(part.unknown.names(&n), vec!["soc.gpio.out"]);
    }

    #[test]
    fn overlapping_patterns_are_an_error() {
        let n = Netlist::parse(TEXT).unwrap();
        let c = Classification::new(&["soc.*"], &["soc.xbar.*"]).unwrap();
        assert!(matches!(c.classify(&n, &StateSet::all(&n, false)), Err(Error::Config(_))));
    }
}
