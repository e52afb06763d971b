//! Bayesian networks over multi-valued variables.
//!
//! A [`Network`] owns its variables and exactly one [`Cpt`] per variable.
//! Conditional probabilities are only ever read through [`Cpt::prob`], so the
//! inference engine never needs to know whether a CPT is a dense table or a
//! noisy-or model.
//!
//! Mixed-radix indexing follows a single convention throughout the crate:
//! variables are taken in the listed order and the *last* one varies fastest.

mod document;

pub use document::{parse_evidence, parse_network, serialize_evidence, serialize_network};

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

/// Dense variable index, `0..network.len()`.
pub type VarId = usize;

/// Tolerance applied when checking that CPT rows sum to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("malformed network document: {0}")]
    Malformed(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{0}` has no states")]
    NoStates(String),
    #[error("variable `{var}` has duplicate state label `{state}`")]
    DuplicateState { var: String, state: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{var}` has no state `{state}`")]
    UnknownState { var: String, state: String },
    #[error("variable `{0}` has more than one CPT")]
    DuplicateCpt(String),
    #[error("variable `{0}` has no CPT")]
    MissingCpt(String),
    #[error("CPT for `{0}` lists a parent twice or lists the child as its own parent")]
    BadParents(String),
    #[error("cycle detected through variable `{0}`")]
    Cycle(String),
    #[error("CPT for `{child}` has {actual} entries, expected {expected}")]
    TableLength {
        child: String,
        expected: usize,
        actual: usize,
    },
    #[error("CPT for `{child}` has entry {value} outside [0, 1]")]
    BadProbability { child: String, value: f64 },
    #[error("CPT row {row} for `{child}` sums to {sum}, not 1")]
    RowSum { child: String, row: usize, sum: f64 },
    #[error("noisy-or child `{0}` must be binary")]
    NoisyOrNotBinary(String),
    #[error("noisy-or CPT for `{0}` has mismatched trigger/inhibitor lengths")]
    NoisyOrShape(String),
    #[error("parent {0} of the queried variable is not assigned")]
    MissingParent(VarId),
    #[error("state index {state} out of range for variable {var}")]
    StateOutOfRange { var: VarId, state: usize },
    #[error("expanded table would need {needed} cells, budget is {budget}")]
    TooLarge { needed: u64, budget: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// A dense conditional probability table.
///
/// Rows are parent instantiations in mixed-radix order (last parent fastest);
/// within a row the child states are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularCpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub entries: Vec<f64>,
    child_card: usize,
    parent_strides: Vec<usize>,
}

impl TabularCpt {
    /// Builds a table without validating row sums. `cards` maps every
    /// variable id to its cardinality.
    pub fn new(child: VarId, parents: Vec<VarId>, entries: Vec<f64>, cards: &[usize]) -> Self {
        let child_card = cards[child];
        let parent_strides = strides(parents.iter().map(|&p| cards[p]));
        TabularCpt {
            child,
            parents,
            entries,
            child_card,
            parent_strides,
        }
    }

    pub fn child_cardinality(&self) -> usize {
        self.child_card
    }

    /// Number of parent instantiations.
    pub fn rows(&self) -> usize {
        self.entries.len() / self.child_card.max(1)
    }

    /// Probabilities over child states for the `row`-th parent instantiation.
    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.child_card..(row + 1) * self.child_card]
    }

    /// Row index of a parent instantiation given as states in parent order.
    pub fn row_index(&self, parent_states: &[usize]) -> usize {
        parent_states
            .iter()
            .zip(&self.parent_strides)
            .map(|(s, stride)| s * stride)
            .sum()
    }

    pub fn prob(&self, child_state: usize, parent_states: &[usize]) -> f64 {
        self.entries[self.row_index(parent_states) * self.child_card + child_state]
    }
}

/// Noisy-or model for a binary child (state 0 = false, state 1 = true).
///
/// `Pr(child = false | u) = (1 - leak) * prod { inhibitor[i] : u[i] == trigger[i] }`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyOrCpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub trigger: Vec<usize>,
    pub inhibitor: Vec<f64>,
    pub leak: f64,
}

impl NoisyOrCpt {
    pub fn prob_false(&self, parent_states: &[usize]) -> f64 {
        let mut p = 1.0 - self.leak;
        for ((&s, &t), &q) in parent_states.iter().zip(&self.trigger).zip(&self.inhibitor) {
            if s == t {
                p *= q;
            }
        }
        p
    }

    pub fn prob(&self, child_state: usize, parent_states: &[usize]) -> f64 {
        let f = self.prob_false(parent_states);
        if child_state == 0 {
            f
        } else {
            1.0 - f
        }
    }

    /// Number of stored parameters.
    pub fn parameter_count(&self) -> usize {
        self.trigger.len() + self.inhibitor.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cpt {
    Table(TabularCpt),
    NoisyOr(NoisyOrCpt),
}

impl Cpt {
    pub fn child(&self) -> VarId {
        match self {
            Cpt::Table(t) => t.child,
            Cpt::NoisyOr(n) => n.child,
        }
    }

    pub fn parents(&self) -> &[VarId] {
        match self {
            Cpt::Table(t) => &t.parents,
            Cpt::NoisyOr(n) => &n.parents,
        }
    }

    /// `Pr(child_state | parent_states)` with parent states in parent order.
    pub fn prob(&self, child_state: usize, parent_states: &[usize]) -> f64 {
        match self {
            Cpt::Table(t) => t.prob(child_state, parent_states),
            Cpt::NoisyOr(n) => n.prob(child_state, parent_states),
        }
    }

    /// Reads the parent instantiation out of a per-variable assignment and
    /// returns the conditional probability. `None` if a parent is unassigned.
    #[inline]
    pub fn prob_in(&self, child_state: usize, assignment: &[Option<usize>]) -> Option<f64> {
        match self {
            Cpt::Table(t) => {
                let mut row = 0;
                for (&p, &stride) in t.parents.iter().zip(&t.parent_strides) {
                    row += assignment[p]? * stride;
                }
                Some(t.entries[row * t.child_card + child_state])
            }
            Cpt::NoisyOr(n) => {
                let mut f = 1.0 - n.leak;
                for ((&p, &t), &q) in n.parents.iter().zip(&n.trigger).zip(&n.inhibitor) {
                    if assignment[p]? == t {
                        f *= q;
                    }
                }
                Some(if child_state == 0 { f } else { 1.0 - f })
            }
        }
    }

    /// As [`prob_in`](Self::prob_in), over a dense assignment where
    /// unassigned variables hold [`UNASSIGNED`].
    #[inline]
    pub fn prob_dense(&self, child_state: usize, states: &[usize]) -> Option<f64> {
        match self {
            Cpt::Table(t) => {
                let mut row = 0;
                for (&p, &stride) in t.parents.iter().zip(&t.parent_strides) {
                    let s = states[p];
                    if s == UNASSIGNED {
                        return None;
                    }
                    row += s * stride;
                }
                Some(t.entries[row * t.child_card + child_state])
            }
            Cpt::NoisyOr(n) => {
                let k = n.parents.len();
                let (parents, trigger, inhibitor) = (&n.parents[..k], &n.trigger[..k], &n.inhibitor[..k]);
                // Four independent partial products; a single running product
                // is bound by multiply latency on wide families.
                let factor = |i: usize| {
                    let s = states[parents[i]];
                    (s == UNASSIGNED, select(s == trigger[i], inhibitor[i], 1.0))
                };
                let (mut a, mut b, mut c, mut d) = (1.0, 1.0, 1.0, 1.0);
                let mut missing = false;
                let mut i = 0;
                while i + 4 <= k {
                    let (m0, f0) = factor(i);
                    let (m1, f1) = factor(i + 1);
                    let (m2, f2) = factor(i + 2);
                    let (m3, f3) = factor(i + 3);
                    missing |= m0 | m1 | m2 | m3;
                    a *= f0;
                    b *= f1;
                    c *= f2;
                    d *= f3;
                    i += 4;
                }
                for j in i..k {
                    let (m, f) = factor(j);
                    missing |= m;
                    a *= f;
                }
                let f = (1.0 - n.leak) * ((a * b) * (c * d));
                (!missing).then_some(if child_state == 0 { f } else { 1.0 - f })
            }
        }
    }

    /// Number of stored probability cells.
    pub fn storage_cells(&self) -> usize {
        match self {
            Cpt::Table(t) => t.entries.len(),
            Cpt::NoisyOr(n) => n.parameter_count(),
        }
    }
}

/// `if cond { a } else { b }` without a branch; parent states flip too
/// irregularly for prediction on wide noisy-or families.
#[inline(always)]
fn select(cond: bool, a: f64, b: f64) -> f64 {
    let mask = (cond as u64).wrapping_neg();
    f64::from_bits((a.to_bits() & mask) | (b.to_bits() & !mask))
}

/// Marks an unassigned variable in [`Cpt::prob_dense`].
pub const UNASSIGNED: usize = usize::MAX;

/// Mixed-radix strides for the given cardinalities, last position fastest.
pub fn strides(cards: impl DoubleEndedIterator<Item = usize> + ExactSizeIterator) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    let mut acc = 1usize;
    for (i, c) in cards.enumerate().rev() {
        out[i] = acc;
        acc = acc.saturating_mul(c);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    cards: Vec<usize>,
    by_name: HashMap<String, VarId>,
}

impl Network {
    /// Validates and assembles a network. `cpts` may be in any order; each
    /// variable must be the child of exactly one of them.
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self, ModelError> {
        let mut by_name = HashMap::with_capacity(variables.len());
        for (i, v) in variables.iter().enumerate() {
            if v.id != i {
                return Err(ModelError::Malformed(format!(
                    "variable `{}` has id {} at position {i}",
                    v.name, v.id
                )));
            }
            if v.states.is_empty() {
                return Err(ModelError::NoStates(v.name.clone()));
            }
            for (j, s) in v.states.iter().enumerate() {
                if v.states[..j].contains(s) {
                    return Err(ModelError::DuplicateState {
                        var: v.name.clone(),
                        state: s.clone(),
                    });
                }
            }
            if by_name.insert(v.name.clone(), i).is_some() {
                return Err(ModelError::DuplicateVariable(v.name.clone()));
            }
        }
        let cards: Vec<usize> = variables.iter().map(Variable::cardinality).collect();
        let name = |id: VarId| variables[id].name.clone();

        let mut slots: Vec<Option<Cpt>> = vec![None; variables.len()];
        for cpt in cpts {
            let child = cpt.child();
            if child >= variables.len() || cpt.parents().iter().any(|&p| p >= variables.len()) {
                return Err(ModelError::Malformed("CPT references an unknown variable id".into()));
            }
            let parents = cpt.parents();
            for (j, p) in parents.iter().enumerate() {
                if *p == child || parents[..j].contains(p) {
                    return Err(ModelError::BadParents(name(child)));
                }
            }
            validate_cpt(&cpt, &cards, &name(child))?;
            if slots[child].is_some() {
                return Err(ModelError::DuplicateCpt(name(child)));
            }
            slots[child] = Some(cpt);
        }
        let mut out = Vec::with_capacity(slots.len());
        for (id, slot) in slots.into_iter().enumerate() {
            out.push(slot.ok_or_else(|| ModelError::MissingCpt(name(id)))?);
        }

        let net = Network {
            variables,
            cpts: out,
            cards,
            by_name,
        };
        net.check_acyclic()?;
        Ok(net)
    }

    fn check_acyclic(&self) -> Result<(), ModelError> {
        let n = self.len();
        let mut indegree: Vec<usize> = (0..n).map(|v| self.parents(v).len()).collect();
        let mut children = vec![Vec::new(); n];
        for v in 0..n {
            for &p in self.parents(v) {
                children[p].push(v);
            }
        }
        let mut ready: Vec<VarId> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = ready.pop() {
            seen += 1;
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if seen == n {
            Ok(())
        } else {
            let culprit = (0..n).find(|&v| indegree[v] > 0).unwrap_or(0);
            Err(ModelError::Cycle(self.variables[culprit].name.clone()))
        }
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn id_of(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.cards[id]
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        self.cpts[id].parents()
    }

    /// The variable and its parents, sorted by id.
    pub fn family(&self, id: VarId) -> Vec<VarId> {
        let mut f: Vec<VarId> = self.parents(id).to_vec();
        f.push(id);
        f.sort_unstable();
        f
    }

    /// Number of joint instantiations of `vars` (saturating).
    pub fn instantiations(&self, vars: &[VarId]) -> u64 {
        vars.iter()
            .fold(1u64, |acc, &v| acc.saturating_mul(self.cards[v] as u64))
    }

    /// Total stored probability cells over all CPTs.
    pub fn cpt_storage_cells(&self) -> usize {
        self.cpts.iter().map(Cpt::storage_cells).sum()
    }

    /// `Pr(child = child_state | parents)` where the parents' states are read
    /// from `assignment` (indexed by variable id).
    pub fn cpt_prob(
        &self,
        child: VarId,
        child_state: usize,
        assignment: &[Option<usize>],
    ) -> Result<f64, ModelError> {
        if child_state >= self.cards[child] {
            return Err(ModelError::StateOutOfRange {
                var: child,
                state: child_state,
            });
        }
        let cpt = &self.cpts[child];
        match cpt.prob_in(child_state, assignment) {
            Some(p) => Ok(p),
            None => {
                let missing = cpt
                    .parents()
                    .iter()
                    .copied()
                    .find(|&p| assignment.get(p).copied().flatten().is_none())
                    .unwrap_or(child);
                Err(ModelError::MissingParent(missing))
            }
        }
    }
}

fn validate_cpt(cpt: &Cpt, cards: &[usize], child_name: &str) -> Result<(), ModelError> {
    let check_prob = |value: f64| {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(())
        } else {
            Err(ModelError::BadProbability {
                child: child_name.to_string(),
                value,
            })
        }
    };
    match cpt {
        Cpt::Table(t) => {
            let rows = t
                .parents
                .iter()
                .fold(1usize, |acc, &p| acc.saturating_mul(cards[p]));
            let expected = rows.saturating_mul(cards[t.child]);
            if t.entries.len() != expected {
                return Err(ModelError::TableLength {
                    child: child_name.to_string(),
                    expected,
                    actual: t.entries.len(),
                });
            }
            for &e in &t.entries {
                check_prob(e)?;
            }
            for row in 0..rows {
                let sum: f64 = t.row(row).iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(ModelError::RowSum {
                        child: child_name.to_string(),
                        row,
                        sum,
                    });
                }
            }
        }
        Cpt::NoisyOr(n) => {
            if cards[n.child] != 2 {
                return Err(ModelError::NoisyOrNotBinary(child_name.to_string()));
            }
            if n.trigger.len() != n.parents.len() || n.inhibitor.len() != n.parents.len() {
                return Err(ModelError::NoisyOrShape(child_name.to_string()));
            }
            for (&p, &t) in n.parents.iter().zip(&n.trigger) {
                if t >= cards[p] {
                    return Err(ModelError::StateOutOfRange { var: p, state: t });
                }
            }
            for &q in &n.inhibitor {
                check_prob(q)?;
            }
            check_prob(n.leak)?;
        }
    }
    Ok(())
}

/// Expands a noisy-or CPT into the equivalent dense table, refusing if the
/// table would exceed `budget_cells`.
pub fn expand_to_table(
    cpt: &NoisyOrCpt,
    cards: &[usize],
    budget_cells: u64,
) -> Result<TabularCpt, ModelError> {
    let rows = cpt
        .parents
        .iter()
        .fold(1u64, |acc, &p| acc.saturating_mul(cards[p] as u64));
    let needed = rows.saturating_mul(2);
    if needed > budget_cells {
        return Err(ModelError::TooLarge {
            needed,
            budget: budget_cells,
        });
    }
    let parent_cards: Vec<usize> = cpt.parents.iter().map(|&p| cards[p]).collect();
    let mut entries = Vec::with_capacity(needed as usize);
    let mut inst = vec![0usize; parent_cards.len()];
    for _ in 0..rows {
        let f = cpt.prob_false(&inst);
        entries.push(f);
        entries.push(1.0 - f);
        advance(&mut inst, &parent_cards);
    }
    Ok(TabularCpt::new(cpt.child, cpt.parents.clone(), entries, cards))
}

/// Steps a mixed-radix counter (last digit fastest). Returns `false` on wrap.
pub fn advance(digits: &mut [usize], radix: &[usize]) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < radix[i] {
            return true;
        }
        digits[i] = 0;
    }
    false
}

/// A partial assignment of variables to state indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: BTreeMap<VarId, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, var: VarId, state: usize) -> &mut Self {
        self.assignments.insert(var, state);
        self
    }

    pub fn with(mut self, var: VarId, state: usize) -> Self {
        self.set(var, state);
        self
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.assignments.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.assignments.iter().map(|(&v, &s)| (v, s))
    }

    pub fn validate(&self, net: &Network) -> Result<(), ModelError> {
        for (v, s) in self.iter() {
            if v >= net.len() || s >= net.cardinality(v) {
                return Err(ModelError::StateOutOfRange { var: v, state: s });
            }
        }
        Ok(())
    }
}

impl FromIterator<(VarId, usize)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (VarId, usize)>>(iter: I) -> Self {
        Evidence {
            assignments: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "network with {} variables", self.len())
    }
}

#[cfg(test)]
mod tests;
