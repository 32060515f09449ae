//! VCD export of counterexample traces. Each design instance becomes a top
//! scope; dotted signal names become nested scopes; array elements become
//! separate variables named `<array>_<index>`.

use std::collections::BTreeMap;
use std::io::Write;

use vcd::{IdCode, TimescaleUnit, Value as Bit, Writer};

use crate::error::Result;
use crate::eval::Value;
use crate::miter::{Counterexample, CycleValues};
use crate::netlist::{Netlist, NodeId, Sort};

#[derive(Default)]
struct Scope {
    vars: Vec<(String, NodeId, Option<u64>, u32)>,
    children: BTreeMap<String, Scope>,
}

impl Scope {
    fn insert(&mut self, path: &[&str], leaf: (String, NodeId, Option<u64>, u32)) {
        match path.split_first() {
            None => self.vars.push(leaf),
            Some((head, rest)) => self.children.entry(head.to_string()).or_default().insert(rest, leaf),
        }
    }
}

type VarRef = (NodeId, Option<u64>);

fn declare<W: Write>(w: &mut Writer<W>, scope: &Scope, ids: &mut Vec<(VarRef, u32, IdCode)>) -> std::io::Result<()> {
    for (name, node, elem, width) in &scope.vars {
        let id = w.add_wire(*width, name)?;
        ids.push(((*node, *elem), *width, id));
    }
    for (name, child) in &scope.children {
        w.add_module(name)?;
        declare(w, child, ids)?;
        w.upscope()?;
    }
    Ok(())
}

fn scope_for(n: &Netlist) -> Scope {
    let mut root = Scope::default();
    let mut add = |name: &str, node: NodeId, sort: Sort| {
        let parts: Vec<&str> = name.split('.').collect();
        let (leaf, path) = parts.split_last().expect("split yields one part");
        match sort {
            Sort::BitVec(w) => root.insert(path, (leaf.to_string(), node, None, w)),
            Sort::Array { index, elem } => {
                for i in 0..1u64 << index {
                    root.insert(path, (format!("{leaf}_{i}"), node, Some(i), elem));
                }
            }
        }
    };
    for &i in n.inputs() {
        add(n.name_of(i).unwrap_or_default(), i, n.sort_of(i).expect("input"));
    }
    for s in n.states() {
        add(&s.name, s.node, n.sort_of(s.node).expect("state"));
    }
    for o in n.outputs() {
        add(&o.name, o.id, n.sort_of(o.id).expect("output"));
    }
    root
}

fn lookup(cv: &CycleValues, node: NodeId) -> Option<&Value> {
    cv.states
        .get(&node)
        .or_else(|| cv.inputs.get(&node))
        .or_else(|| cv.outputs.get(&node))
}

fn bits(v: u64, width: u32) -> Vec<Bit> {
    (0..width)
        .rev()
        .map(|i| if v >> i & 1 == 1 { Bit::V1 } else { Bit::V0 })
        .collect()
}

/// Writes traces of one or more instances; `traces[i].0` names the scope.
pub fn write_traces<W: Write>(n: &Netlist, traces: &[(&str, &[CycleValues])], out: W) -> Result<()> {
    let mut w = Writer::new(out);
    w.timescale(1, TimescaleUnit::NS)?;
    let tree = scope_for(n);
    let mut ids: Vec<Vec<(VarRef, u32, IdCode)>> = Vec::new();
    for (label, _) in traces {
        w.add_module(label)?;
        let mut inst = Vec::new();
        declare(&mut w, &tree, &mut inst)?;
        ids.push(inst);
        w.upscope()?;
    }
    w.enddefinitions()?;
    let cycles = traces.iter().map(|(_, t)| t.len()).max().unwrap_or(0);
    let mut last: BTreeMap<IdCode, u64> = BTreeMap::new();
    for cycle in 0..cycles {
        w.timestamp(cycle as u64)?;
        for ((_, trace), vars) in traces.iter().zip(&ids) {
            let Some(cv) = trace.get(cycle) else { continue };
            for &((node, elem), width, id) in vars {
                let value = match (lookup(cv, node), elem) {
                    (Some(Value::Bv(v)), None) => *v,
                    (Some(Value::Array(a)), Some(i)) => a.get(i),
                    _ => continue,
                };
                if last.get(&id) == Some(&value) {
                    continue;
                }
                last.insert(id, value);
                if width == 1 {
                    w.change_scalar(id, if value & 1 == 1 { Bit::V1 } else { Bit::V0 })?;
                } else {
                    w.change_vector(id, bits(value, width))?;
                }
            }
        }
    }
    w.timestamp(cycles as u64)?;
    w.flush()?;
    Ok(())
}

/// Two-instance counterexample with scopes `inst1` and `inst2`.
pub fn write_counterexample<W: Write>(n: &Netlist, cex: &Counterexample, out: W) -> Result<()> {
    write_traces(n, &[("inst1", &cex.traces[0]), ("inst2", &cex.traces[1])], out)
}

pub fn counterexample_vcd(n: &Netlist, cex: &Counterexample) -> Result<String> {
    let mut buf = Vec::new();
    write_counterexample(n, cex, &mut buf)?;
    Ok(String::from_utf8(buf).expect("vcd is ascii"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ArrayValue;

    #[test]
    fn nested_scopes_and_elements() {
        let n = Netlist::parse(
            "1 sort bitvec 2\n2 sort bitvec 1\n3 sort array 1 2\n4 state 3 top.mem.data\n\
             5 state 1 top.r\n6 next 4 4\n7 next 5 5\n",
        )
        .unwrap();
        let cv = |r: u64, e: &[u64]| CycleValues {
            states: [(4, Value::Array(ArrayValue::from_elements(e))), (5, Value::Bv(r))].into(),
            inputs: Default::default(),
            outputs: Default::default(),
        };
        let t1 = vec![cv(1, &[1, 0, 0, 0]), cv(2, &[1, 0, 0, 0])];
        let t2 = vec![cv(1, &[1, 0, 0, 0]), cv(3, &[1, 1, 0, 0])];
        let mut buf = Vec::new();
        write_traces(&n, &[("inst1", &t1), ("inst2", &t2)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.matches("$scope module inst").count(), 2);
        assert_eq!(text.matches("$scope module mem").count(), 2);
        assert!(text.contains(" data_3 $end"), "{text}");
        assert!(text.contains("#1"));

        let mut parser = vcd::Parser::new(text.as_bytes());
        let header = parser.parse_header().unwrap();
        let d1 = header.find_var(&["inst2", "top", "mem", "data_1"]).unwrap().code;
        let changes: Vec<_> = parser
            .filter_map(|c| match c.unwrap() {
                vcd::Command::ChangeScalar(id, v) if id == d1 => Some(v),
                _ => None,
            })
            .collect();
        assert_eq!(changes, vec![Bit::V0, Bit::V1]);
    }
}
