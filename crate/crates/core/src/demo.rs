//! Concrete replay of scripted attacks with a parameterised victim.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_frame, evaluate_step, reset_state, zero_inputs, Value};
use crate::netlist::{Netlist, Sort};

/// A literal input value or a placeholder resolved from the victim access
/// count `v`: `$victim_mask` is `2^v - 1`, `$victim_count` is `v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputValue {
    Number(u64),
    Symbol(String),
}

impl InputValue {
    fn resolve(&self, victim: u32) -> Result<u64> {
        match self {
            InputValue::Number(n) => Ok(*n),
            InputValue::Symbol(s) if s == "$victim_count" => Ok(victim as u64),
            InputValue::Symbol(s) if s == "$victim_mask" => Ok(if victim >= 64 {
                u64::MAX
            } else {
                (1u64 << victim) - 1
            }),
            InputValue::Symbol(s) => Err(Error::Scenario(format!("unknown placeholder `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioStep {
    pub cycle: u32,
    /// Inputs not listed are zero.
    pub inputs: BTreeMap<String, InputValue>,
}

/// What the spy reads after the last cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observation {
    /// Value of a state, output or named node.
    Signal { name: String },
    /// Number of nonzero elements `first..=last` of an array state.
    NonzeroCells { name: String, first: u64, last: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Number of simulated clock steps; the observation reads cycle `cycles`.
    pub cycles: u32,
    pub steps: Vec<ScenarioStep>,
    pub observe: Observation,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    /// Checks names, cycles and placeholders against a netlist.
    pub fn validate(&self, n: &Netlist) -> Result<()> {
        for step in &self.steps {
            if step.cycle >= self.cycles {
                return Err(Error::Scenario(format!(
                    "step at cycle {} lies outside 0..{}",
                    step.cycle, self.cycles
                )));
            }
            for (name, value) in &step.inputs {
                let id = n.lookup(name).ok_or_else(|| Error::UnknownSignal(name.clone()))?;
                if !n.inputs().contains(&id) {
                    return Err(Error::Scenario(format!("`{name}` is not a primary input")));
                }
                value.resolve(0)?;
            }
        }
        let (Observation::Signal { name } | Observation::NonzeroCells { name, .. }) = &self.observe;
        let id = n.value_node(name).ok_or_else(|| Error::UnknownSignal(name.clone()))?;
        if let Observation::NonzeroCells { first, last, .. } = &self.observe {
            let Some(Sort::Array { index, .. }) = n.sort_of(id) else {
                return Err(Error::Scenario(format!("`{name}` is not an array")));
            };
            if first > last || *last >= 1u64 << index {
                return Err(Error::Scenario(format!("cells {first}..={last} outside `{name}`")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DemoReport {
    pub scenario: String,
    pub victim_accesses: u32,
    pub observed_at: u32,
    pub observation: u64,
}

/// Simulates the scenario from reset with `victim` substituted for the
/// placeholders and returns the spy's observation.
pub fn replay_attack_demo(n: &Netlist, scenario: &Scenario, victim: u32) -> Result<DemoReport> {
    scenario.validate(n)?;
    let mut by_cycle: BTreeMap<u32, Vec<(&String, &InputValue)>> = BTreeMap::new();
    for step in &scenario.steps {
        by_cycle.entry(step.cycle).or_default().extend(step.inputs.iter());
    }
    let mut state = reset_state(n);
    for cycle in 0..scenario.cycles {
        let mut inputs = zero_inputs(n);
        for (name, value) in by_cycle.get(&cycle).into_iter().flatten() {
            let id = n.lookup(name).expect("validated");
            let v = Value::Bv(value.resolve(victim)?);
            let sort = n.sort_of(id).expect("validated");
            if !v.fits(sort) {
                return Err(Error::Scenario(format!(
                    "value {v:?} for `{name}` does not fit {sort} (victim accesses {victim})"
                )));
            }
            inputs.insert(id, v);
        }
        state = evaluate_step(n, &state, &inputs)?.0;
    }
    let frame = evaluate_frame(n, &state, &zero_inputs(n))?;
    let observation = match &scenario.observe {
        Observation::Signal { name } => {
            let id = n.value_node(name).expect("validated");
            frame
                .get(n, id)
                .and_then(Value::as_bv)
                .ok_or_else(|| Error::Scenario(format!("`{name}` is not a bit-vector")))?
        }
        Observation::NonzeroCells { name, first, last } => {
            let id = n.value_node(name).expect("validated");
            let arr = frame.get(n, id).and_then(Value::as_array).expect("validated");
            (*first..=*last).filter(|&i| arr.get(i) != 0).count() as u64
        }
    };
    Ok(DemoReport {
        scenario: scenario.name.clone(),
        victim_accesses: victim,
        observed_at: scenario.cycles,
        observation,
    })
}

/// Runs the scenario for each victim access count.
pub fn sweep(n: &Netlist, scenario: &Scenario, victims: impl IntoIterator<Item = u32>) -> Result<Vec<DemoReport>> {
    victims.into_iter().map(|v| replay_attack_demo(n, scenario, v)).collect()
}
