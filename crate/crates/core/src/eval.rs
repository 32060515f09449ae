//! Concrete cycle-accurate evaluation of a [`Netlist`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{Netlist, NodeId, Op, Sort};

/// Functional array: a default element plus the entries that differ from it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrayValue {
    pub default: u64,
    pub entries: BTreeMap<u64, u64>,
}

impl ArrayValue {
    pub fn filled(default: u64) -> Self {
        ArrayValue {
            default,
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, index: u64) -> u64 {
        self.entries.get(&index).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, index: u64, value: u64) {
        if value == self.default {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
    }

    /// Builds a normalized array from a dense element list.
    pub fn from_elements(elements: &[u64]) -> Self {
        let mut arr = ArrayValue::filled(0);
        for (i, &v) in elements.iter().enumerate() {
            arr.set(i as u64, v);
        }
        arr
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bv(u64),
    Array(ArrayValue),
}

impl Value {
    pub fn as_bv(&self) -> Option<u64> {
        match self {
            Value::Bv(v) => Some(*v),
            Value::Array(_) => None,
        }
    }

    pub fn as_array(&self) -> Option<&ArrayValue> {
        match self {
            Value::Array(a) => Some(a),
            Value::Bv(_) => None,
        }
    }

    pub fn fits(&self, sort: Sort) -> bool {
        let fits_width = |v: u64, w: u32| w >= 64 || v >> w == 0;
        match (self, sort) {
            (Value::Bv(v), Sort::BitVec(w)) => fits_width(*v, w),
            (Value::Array(a), Sort::Array { index, elem }) => {
                fits_width(a.default, elem)
                    && a.entries
                        .iter()
                        .all(|(&i, &v)| fits_width(i, index) && fits_width(v, elem))
            }
            _ => false,
        }
    }

    /// Zero value of a sort.
    pub fn zero(sort: Sort) -> Value {
        match sort {
            Sort::BitVec(_) => Value::Bv(0),
            Sort::Array { .. } => Value::Array(ArrayValue::filled(0)),
        }
    }
}

/// Map from node (or output line) id to a concrete value.
pub type Valuation = BTreeMap<NodeId, Value>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no value supplied for {kind} `{name}` (id {id})")]
    Missing {
        kind: &'static str,
        id: NodeId,
        name: String,
    },
    #[error("value for `{name}` does not fit its sort {sort}")]
    Ill { name: String, sort: Sort },
}

pub(crate) fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Result of evaluating every node once.
#[derive(Debug, Clone)]
pub struct Frame {
    values: Vec<Value>,
}

impl Frame {
    pub fn get(&self, n: &Netlist, id: NodeId) -> Option<&Value> {
        n.slot(id).map(|s| &self.values[s])
    }
}

/// Evaluates all combinational nodes for one cycle.
pub fn evaluate_frame(n: &Netlist, states: &Valuation, inputs: &Valuation) -> Result<Frame, EvalError> {
    let mut values: Vec<Value> = Vec::with_capacity(n.nodes().len());
    let arg = |values: &Vec<Value>, id: NodeId| -> Value {
        values[n.slot(id).expect("validated netlist")].clone()
    };
    let bv = |values: &Vec<Value>, id: NodeId| -> u64 {
        values[n.slot(id).expect("validated netlist")]
            .as_bv()
            .expect("validated sort")
    };
    for node in n.nodes() {
        let width = node.sort.width().unwrap_or(0);
        let m = mask(width);
        let a = &node.args;
        let v = match node.op {
            Op::Const(c) => match node.sort {
                Sort::BitVec(_) => Value::Bv(c),
                Sort::Array { .. } => Value::Array(ArrayValue::filled(c)),
            },
            Op::Input | Op::State => {
                let (kind, src) = if node.op == Op::Input {
                    ("input", inputs)
                } else {
                    ("state", states)
                };
                let name = || node.name.clone().unwrap_or_default();
                let val = src.get(&node.id).ok_or_else(|| EvalError::Missing {
                    kind,
                    id: node.id,
                    name: name(),
                })?;
                if !val.fits(node.sort) {
                    return Err(EvalError::Ill {
                        name: name(),
                        sort: node.sort,
                    });
                }
                val.clone()
            }
            Op::Not => Value::Bv(!bv(&values, a[0]) & m),
            Op::And => Value::Bv(bv(&values, a[0]) & bv(&values, a[1])),
            Op::Or => Value::Bv(bv(&values, a[0]) | bv(&values, a[1])),
            Op::Xor => Value::Bv(bv(&values, a[0]) ^ bv(&values, a[1])),
            Op::Add => Value::Bv(bv(&values, a[0]).wrapping_add(bv(&values, a[1])) & m),
            Op::Sub => Value::Bv(bv(&values, a[0]).wrapping_sub(bv(&values, a[1])) & m),
            Op::Mul => Value::Bv(bv(&values, a[0]).wrapping_mul(bv(&values, a[1])) & m),
            Op::Eq => Value::Bv(u64::from(bv(&values, a[0]) == bv(&values, a[1]))),
            Op::Ult => Value::Bv(u64::from(bv(&values, a[0]) < bv(&values, a[1]))),
            Op::Ite => {
                if bv(&values, a[0]) == 1 {
                    arg(&values, a[1])
                } else {
                    arg(&values, a[2])
                }
            }
            Op::Concat => {
                let lo_width = n.node(a[1]).and_then(|x| x.sort.width()).expect("validated");
                let hi = bv(&values, a[0]);
                let lo = bv(&values, a[1]);
                Value::Bv(if lo_width >= 64 { lo } else { (hi << lo_width) | lo } & m)
            }
            Op::Slice { lo, .. } => Value::Bv((bv(&values, a[0]) >> lo) & m),
            Op::Read => {
                let arr = &values[n.slot(a[0]).expect("validated")];
                let idx = bv(&values, a[1]);
                Value::Bv(arr.as_array().expect("validated sort").get(idx))
            }
            Op::Write => {
                let mut arr = arg(&values, a[0]);
                if let Value::Array(inner) = &mut arr {
                    inner.set(bv(&values, a[1]), bv(&values, a[2]));
                }
                arr
            }
        };
        values.push(v);
    }
    Ok(Frame { values })
}

/// One clock step: returns the successor state valuation and the outputs of
/// the current cycle (keyed by output line id).
pub fn evaluate_step(
    n: &Netlist,
    states: &Valuation,
    inputs: &Valuation,
) -> Result<(Valuation, Valuation), EvalError> {
    let frame = evaluate_frame(n, states, inputs)?;
    let next = n
        .states()
        .iter()
        .map(|s| (s.node, frame.get(n, s.next).expect("validated").clone()))
        .collect();
    let outputs = n
        .outputs()
        .iter()
        .map(|o| (o.id, frame.get(n, o.expr).expect("validated").clone()))
        .collect();
    Ok((next, outputs))
}

/// Reset state for simulation: `init` expressions where present (evaluated
/// over constants only), zero otherwise.
pub fn reset_state(n: &Netlist) -> Valuation {
    let mut out = Valuation::new();
    for st in n.states() {
        let sort = n.node(st.node).expect("validated").sort;
        let v = st
            .init
            .and_then(|(_, expr)| const_value(n, expr))
            .unwrap_or_else(|| Value::zero(sort));
        out.insert(st.node, v);
    }
    out
}

fn const_value(n: &Netlist, id: NodeId) -> Option<Value> {
    let node = n.node(id)?;
    match node.op {
        Op::Const(c) => Some(match node.sort {
            Sort::BitVec(_) => Value::Bv(c),
            Sort::Array { .. } => Value::Array(ArrayValue::filled(c)),
        }),
        _ => None,
    }
}

/// All-zero input valuation.
pub fn zero_inputs(n: &Netlist) -> Valuation {
    n.inputs()
        .iter()
        .map(|&id| (id, Value::zero(n.node(id).expect("validated").sort)))
        .collect()
}
