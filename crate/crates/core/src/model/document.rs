//! JSON network and evidence documents.
//!
//! ```json
//! { "variables": [ {"name": "A", "states": ["1", "2"]} ],
//!   "cpts": [ {"child": "A", "parents": [], "kind": "table", "table": [0.4, 0.6]} ] }
//! ```
//!
//! Evidence is a flat object from variable name to state label.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Cpt, Evidence, ModelError, Network, NoisyOrCpt, TabularCpt, VarId, Variable};

#[derive(Debug, Serialize, Deserialize)]
struct NetworkDoc {
    variables: Vec<VariableDoc>,
    cpts: Vec<CptDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VariableDoc {
    name: String,
    states: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum CptDoc {
    Table {
        child: String,
        #[serde(default)]
        parents: Vec<String>,
        table: Vec<f64>,
    },
    NoisyOr {
        child: String,
        #[serde(default)]
        parents: Vec<String>,
        trigger: Vec<String>,
        inhibitor: Vec<f64>,
        #[serde(default)]
        leak: f64,
    },
}

/// Parses and validates a network document.
pub fn parse_network(text: &str) -> Result<Network, ModelError> {
    let doc: NetworkDoc =
        serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;

    let variables: Vec<Variable> = doc
        .variables
        .into_iter()
        .enumerate()
        .map(|(id, v)| Variable {
            id,
            name: v.name,
            states: v.states,
        })
        .collect();
    let mut ids: BTreeMap<&str, VarId> = BTreeMap::new();
    for v in &variables {
        if ids.insert(v.name.as_str(), v.id).is_some() {
            return Err(ModelError::DuplicateVariable(v.name.clone()));
        }
    }
    let lookup = |name: &str| {
        ids.get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))
    };
    let cards: Vec<usize> = variables.iter().map(Variable::cardinality).collect();

    let mut cpts = Vec::with_capacity(doc.cpts.len());
    for c in doc.cpts {
        let cpt = match c {
            CptDoc::Table {
                child,
                parents,
                table,
            } => {
                let child = lookup(&child)?;
                let parents = parents
                    .iter()
                    .map(|p| lookup(p))
                    .collect::<Result<Vec<_>, _>>()?;
                Cpt::Table(TabularCpt::new(child, parents, table, &cards))
            }
            CptDoc::NoisyOr {
                child,
                parents,
                trigger,
                inhibitor,
                leak,
            } => {
                let child_name = child;
                let child = lookup(&child_name)?;
                let parents = parents
                    .iter()
                    .map(|p| lookup(p))
                    .collect::<Result<Vec<_>, _>>()?;
                if trigger.len() != parents.len() {
                    return Err(ModelError::NoisyOrShape(child_name));
                }
                let trigger = parents
                    .iter()
                    .zip(&trigger)
                    .map(|(&p, label)| {
                        variables[p]
                            .state_index(label)
                            .ok_or_else(|| ModelError::UnknownState {
                                var: variables[p].name.clone(),
                                state: label.clone(),
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Cpt::NoisyOr(NoisyOrCpt {
                    child,
                    parents,
                    trigger,
                    inhibitor,
                    leak,
                })
            }
        };
        cpts.push(cpt);
    }
    Network::new(variables, cpts)
}

/// Writes a network in the document format, CPTs in variable order.
pub fn serialize_network(net: &Network) -> String {
    let name = |id: VarId| net.variable(id).name.clone();
    let doc = NetworkDoc {
        variables: net
            .variables()
            .iter()
            .map(|v| VariableDoc {
                name: v.name.clone(),
                states: v.states.clone(),
            })
            .collect(),
        cpts: net
            .cpts()
            .iter()
            .map(|c| match c {
                Cpt::Table(t) => CptDoc::Table {
                    child: name(t.child),
                    parents: t.parents.iter().map(|&p| name(p)).collect(),
                    table: t.entries.clone(),
                },
                Cpt::NoisyOr(n) => CptDoc::NoisyOr {
                    child: name(n.child),
                    parents: n.parents.iter().map(|&p| name(p)).collect(),
                    trigger: n
                        .parents
                        .iter()
                        .zip(&n.trigger)
                        .map(|(&p, &t)| net.variable(p).states[t].clone())
                        .collect(),
                    inhibitor: n.inhibitor.clone(),
                    leak: n.leak,
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("network document serializes")
}

/// Parses `{"C": "3", "A": "1"}` against the network's names and labels.
pub fn parse_evidence(net: &Network, text: &str) -> Result<Evidence, ModelError> {
    let doc: BTreeMap<String, String> =
        serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
    let mut ev = Evidence::new();
    for (var, state) in doc {
        let id = net
            .id_of(&var)
            .ok_or_else(|| ModelError::UnknownVariable(var.clone()))?;
        let s = net
            .variable(id)
            .state_index(&state)
            .ok_or(ModelError::UnknownState { var, state })?;
        ev.set(id, s);
    }
    Ok(ev)
}

pub fn serialize_evidence(net: &Network, evidence: &Evidence) -> String {
    let doc: BTreeMap<&str, &str> = evidence
        .iter()
        .map(|(v, s)| {
            let var = net.variable(v);
            (var.name.as_str(), var.states[s].as_str())
        })
        .collect();
    serde_json::to_string(&doc).expect("evidence serializes")
}
