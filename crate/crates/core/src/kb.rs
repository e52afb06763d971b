//! Unit resolution over multi-valued variables.
//!
//! A [`KnowledgeBase`] holds clauses compiled from the 0/1 entries of a
//! network's tables. Literals are `X = x` or `X ≠ x`. Asserting `X = x` fixes
//! X and removes every other state from its domain; asserting `X ≠ x` removes
//! x. Each clause keeps counts of its satisfied and falsified literals; once
//! all but one literal of an unsatisfied clause are falsified, the last one is
//! asserted in turn. Every change is pushed on a trail, so
//! [`KnowledgeBase::retract_to`] restores any earlier checkpoint exactly.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{advance, Cpt, Network, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: VarId,
    pub state: usize,
    pub positive: bool,
}

impl Literal {
    /// `var = state`
    pub fn eq(var: VarId, state: usize) -> Self {
        Literal {
            var,
            state,
            positive: true,
        }
    }

    /// `var ≠ state`
    pub fn ne(var: VarId, state: usize) -> Self {
        Literal {
            var,
            state,
            positive: false,
        }
    }

    pub fn display<'a>(&'a self, net: &'a Network) -> impl fmt::Display + 'a {
        struct Named<'a>(&'a Literal, &'a Network);
        impl fmt::Display for Named<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let v = self.1.variable(self.0.var);
                let op = if self.0.positive { "=" } else { "!=" };
                write!(f, "{}{}{}", v.name, op, v.states[self.0.state])
            }
        }
        Named(self, net)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    pub literals: Vec<Literal>,
}

impl Clause {
    /// Drops repeated literals, keeping first occurrences in order.
    pub fn new(literals: Vec<Literal>) -> Self {
        let mut seen = HashSet::new();
        Clause {
            literals: literals.into_iter().filter(|l| seen.insert(*l)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// Literals in sorted order, for comparing clauses as sets.
    pub fn key(&self) -> Vec<Literal> {
        let mut k = self.literals.clone();
        k.sort_unstable();
        k
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KbError {
    #[error("checkpoint is stale or was already retracted")]
    StaleCheckpoint,
    #[error("literal {0:?} is out of range")]
    BadLiteral(Literal),
}

#[must_use]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assertion {
    Ok,
    Contradiction,
}

impl Assertion {
    pub fn is_contradiction(self) -> bool {
        self == Assertion::Contradiction
    }
}

/// Opaque handle for [`KnowledgeBase::retract_to`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checkpoint {
    id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KbStats {
    pub clauses: usize,
    pub literals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TrailEntry {
    Removed { var: VarId, state: usize },
    Fixed { var: VarId },
}

/// Domains, fixed values and clause counters at one moment, for comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KbSnapshot {
    pub domains: Vec<Vec<bool>>,
    pub fixed: Vec<Option<usize>>,
    pub falsified: Vec<u32>,
    pub satisfied: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    clauses: Vec<Clause>,
    cards: Vec<usize>,
    // Clause ids per (var, state) for positive and negative occurrences.
    occ_pos: Vec<Vec<Vec<u32>>>,
    occ_neg: Vec<Vec<Vec<u32>>>,
    domain: Vec<Vec<bool>>,
    domain_size: Vec<usize>,
    fixed: Vec<Option<usize>>,
    falsified: Vec<u32>,
    satisfied: Vec<u32>,
    trail: Vec<TrailEntry>,
    checkpoints: Vec<(u64, usize)>,
    next_checkpoint: u64,
    collapse: bool,
    queue: VecDeque<Literal>,
    base_conflict: bool,
}

impl KnowledgeBase {
    /// Builds a KB over variables with the given cardinalities and propagates
    /// its unit clauses. `collapse` asserts `X = x` whenever X's domain has
    /// shrunk to `{x}`.
    pub fn new(clauses: Vec<Clause>, cards: Vec<usize>, collapse: bool) -> Result<Self, KbError> {
        for c in &clauses {
            for l in &c.literals {
                if l.var >= cards.len() || l.state >= cards[l.var] {
                    return Err(KbError::BadLiteral(*l));
                }
            }
        }
        let mut occ_pos: Vec<Vec<Vec<u32>>> = cards.iter().map(|&c| vec![Vec::new(); c]).collect();
        let mut occ_neg = occ_pos.clone();
        for (i, c) in clauses.iter().enumerate() {
            for l in &c.literals {
                let occ = if l.positive { &mut occ_pos } else { &mut occ_neg };
                occ[l.var][l.state].push(i as u32);
            }
        }
        let mut kb = KnowledgeBase {
            domain: cards.iter().map(|&c| vec![true; c]).collect(),
            domain_size: cards.clone(),
            fixed: vec![None; cards.len()],
            falsified: vec![0; clauses.len()],
            satisfied: vec![0; clauses.len()],
            clauses,
            cards,
            occ_pos,
            occ_neg,
            trail: Vec::new(),
            checkpoints: Vec::new(),
            next_checkpoint: 0,
            collapse,
            queue: VecDeque::new(),
            base_conflict: false,
        };
        if kb.clauses.iter().any(Clause::is_empty) {
            kb.base_conflict = true;
        }
        let units: Vec<Literal> = kb
            .clauses
            .iter()
            .filter(|c| c.len() == 1)
            .map(|c| c.literals[0])
            .collect();
        kb.queue.extend(units);
        if kb.propagate().is_contradiction() {
            kb.base_conflict = true;
        }
        Ok(kb)
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn stats(&self) -> KbStats {
        KbStats {
            clauses: self.clauses.len(),
            literals: self.clauses.iter().map(Clause::len).sum(),
        }
    }

    /// True when the clauses alone are contradictory.
    pub fn is_inconsistent(&self) -> bool {
        self.base_conflict
    }

    pub fn domain(&self, var: VarId) -> &[bool] {
        &self.domain[var]
    }

    pub fn fixed(&self, var: VarId) -> Option<usize> {
        self.fixed[var]
    }

    pub fn falsified_counts(&self) -> &[u32] {
        &self.falsified
    }

    pub fn satisfied_counts(&self) -> &[u32] {
        &self.satisfied
    }

    pub fn snapshot(&self) -> KbSnapshot {
        KbSnapshot {
            domains: self.domain.clone(),
            fixed: self.fixed.clone(),
            falsified: self.falsified.clone(),
            satisfied: self.satisfied.clone(),
        }
    }

    pub fn checkpoint(&mut self) -> Checkpoint {
        let id = self.next_checkpoint;
        self.next_checkpoint += 1;
        self.checkpoints.push((id, self.trail.len()));
        Checkpoint { id }
    }

    /// Undoes everything since `cp`, including cascaded implications, and
    /// invalidates `cp` and every checkpoint taken after it.
    pub fn retract_to(&mut self, cp: Checkpoint) -> Result<(), KbError> {
        let pos = self
            .checkpoints
            .iter()
            .rposition(|&(id, _)| id == cp.id)
            .ok_or(KbError::StaleCheckpoint)?;
        let len = self.checkpoints[pos].1;
        self.checkpoints.truncate(pos);
        while self.trail.len() > len {
            match self.trail.pop().expect("non-empty") {
                TrailEntry::Removed { var, state } => {
                    self.domain[var][state] = true;
                    self.domain_size[var] += 1;
                    for &c in &self.occ_pos[var][state] {
                        self.falsified[c as usize] -= 1;
                    }
                    for &c in &self.occ_neg[var][state] {
                        self.satisfied[c as usize] -= 1;
                    }
                }
                TrailEntry::Fixed { var } => {
                    let state = self.fixed[var].take().expect("fixed on trail");
                    for &c in &self.occ_pos[var][state] {
                        self.satisfied[c as usize] -= 1;
                    }
                    for &c in &self.occ_neg[var][state] {
                        self.falsified[c as usize] -= 1;
                    }
                }
            }
        }
        self.queue.clear();
        Ok(())
    }

    /// Asserts a literal and runs unit resolution to a fixpoint. On
    /// contradiction the KB is left mid-propagation; roll back with
    /// [`retract_to`](Self::retract_to).
    pub fn assert(&mut self, lit: Literal) -> Assertion {
        if self.base_conflict {
            return Assertion::Contradiction;
        }
        debug_assert!(lit.var < self.cards.len() && lit.state < self.cards[lit.var]);
        self.queue.push_back(lit);
        self.propagate()
    }

    fn propagate(&mut self) -> Assertion {
        while let Some(lit) = self.queue.pop_front() {
            if self.apply(lit).is_contradiction() {
                self.queue.clear();
                return Assertion::Contradiction;
            }
        }
        Assertion::Ok
    }

    fn apply(&mut self, lit: Literal) -> Assertion {
        let Literal { var, state, positive } = lit;
        if positive {
            match self.fixed[var] {
                Some(s) if s == state => return Assertion::Ok,
                Some(_) => return Assertion::Contradiction,
                None if !self.domain[var][state] => return Assertion::Contradiction,
                None => {}
            }
            self.fixed[var] = Some(state);
            self.trail.push(TrailEntry::Fixed { var });
            let mut conflict = false;
            for i in 0..self.occ_pos[var][state].len() {
                let c = self.occ_pos[var][state][i] as usize;
                self.satisfied[c] += 1;
            }
            for i in 0..self.occ_neg[var][state].len() {
                let c = self.occ_neg[var][state][i] as usize;
                self.falsified[c] += 1;
                conflict |= self.check_clause(c);
            }
            if conflict {
                return Assertion::Contradiction;
            }
            for s in 0..self.cards[var] {
                if s != state && self.domain[var][s] && self.remove(var, s) {
                    return Assertion::Contradiction;
                }
            }
            Assertion::Ok
        } else {
            if !self.domain[var][state] {
                return Assertion::Ok;
            }
            if self.fixed[var] == Some(state) {
                return Assertion::Contradiction;
            }
            if self.remove(var, state) || self.domain_size[var] == 0 {
                return Assertion::Contradiction;
            }
            if self.collapse && self.domain_size[var] == 1 && self.fixed[var].is_none() {
                let last = self.domain[var].iter().position(|&b| b).expect("one state left");
                self.queue.push_back(Literal::eq(var, last));
            }
            Assertion::Ok
        }
    }

    /// Removes a state from a domain and updates the affected clauses.
    /// Returns true on a falsified clause.
    fn remove(&mut self, var: VarId, state: usize) -> bool {
        self.domain[var][state] = false;
        self.domain_size[var] -= 1;
        self.trail.push(TrailEntry::Removed { var, state });
        for i in 0..self.occ_neg[var][state].len() {
            let c = self.occ_neg[var][state][i] as usize;
            self.satisfied[c] += 1;
        }
        let mut conflict = false;
        for i in 0..self.occ_pos[var][state].len() {
            let c = self.occ_pos[var][state][i] as usize;
            self.falsified[c] += 1;
            conflict |= self.check_clause(c);
        }
        conflict
    }

    /// Queues the last open literal of a unit clause; true if the clause is
    /// falsified outright.
    fn check_clause(&mut self, c: usize) -> bool {
        if self.satisfied[c] > 0 {
            return false;
        }
        let len = self.clauses[c].len() as u32;
        if self.falsified[c] == len {
            return true;
        }
        if self.falsified[c] + 1 == len {
            let open = self.clauses[c]
                .literals
                .iter()
                .copied()
                .find(|l| !self.is_falsified(*l))
                .expect("one open literal");
            self.queue.push_back(open);
        }
        false
    }

    pub fn is_falsified(&self, l: Literal) -> bool {
        if l.positive {
            !self.domain[l.var][l.state]
        } else {
            self.fixed[l.var] == Some(l.state)
        }
    }

    pub fn is_satisfied(&self, l: Literal) -> bool {
        if l.positive {
            self.fixed[l.var] == Some(l.state)
        } else {
            !self.domain[l.var][l.state]
        }
    }

    /// Recomputes every clause counter from the domains and compares.
    pub fn audit(&self) -> bool {
        self.clauses.iter().enumerate().all(|(i, c)| {
            let f = c.literals.iter().filter(|&&l| self.is_falsified(l)).count() as u32;
            let s = c.literals.iter().filter(|&&l| self.is_satisfied(l)).count() as u32;
            f == self.falsified[i] && s == self.satisfied[i]
        }) && self
            .domain
            .iter()
            .zip(&self.domain_size)
            .all(|(d, &n)| d.iter().filter(|&&b| b).count() == n)
    }

    /// One clause per line, literals as `name=state` / `name!=state`.
    pub fn dump(&self, net: &Network) -> String {
        let s = self.stats();
        let mut out = format!("c clauses {} literals {}\n", s.clauses, s.literals);
        for c in &self.clauses {
            let lits: Vec<String> = c.literals.iter().map(|l| l.display(net).to_string()).collect();
            out.push_str(&lits.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Clauses implied by the zero and one entries of the network's tables.
///
/// For each parent instantiation `u` of X's table: if some state x has
/// probability exactly 1, emit `(X = x ∨ ⋁ Pi ≠ ui)`; otherwise emit
/// `(X ≠ x ∨ ⋁ Pi ≠ ui)` for every state x with probability exactly 0.
/// Noisy-or CPTs contribute nothing.
pub fn compile_clauses(net: &Network) -> Vec<Clause> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for cpt in net.cpts() {
        let Cpt::Table(t) = cpt else { continue };
        let radix: Vec<usize> = t.parents.iter().map(|&p| net.cardinality(p)).collect();
        let mut inst = vec![0usize; radix.len()];
        for row in 0..t.rows() {
            let probs = t.row(row);
            let parents_ne = t
                .parents
                .iter()
                .zip(&inst)
                .map(|(&p, &s)| Literal::ne(p, s));
            let mut emit = |head: Literal| {
                let clause = Clause::new(std::iter::once(head).chain(parents_ne.clone()).collect());
                if seen.insert(clause.key()) {
                    out.push(clause);
                }
            };
            if let Some(x) = probs.iter().position(|&p| p == 1.0) {
                emit(Literal::eq(t.child, x));
            } else {
                for (x, _) in probs.iter().enumerate().filter(|(_, &p)| p == 0.0) {
                    emit(Literal::ne(t.child, x));
                }
            }
            advance(&mut inst, &radix);
        }
    }
    out
}

/// Compiles the network's determinism into a KB with domain collapse on.
pub fn compile_kb(net: &Network) -> KnowledgeBase {
    KnowledgeBase::new(compile_clauses(net), net.cardinalities().to_vec(), true)
        .expect("compiled literals are in range")
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::fixtures;
    use crate::oracle::is_consistent_extension;
    use crate::random::{random_network, NetworkParams};

    const A: VarId = 0;
    const B: VarId = 1;
    const C: VarId = 2;

    fn clause_set(clauses: &[Clause]) -> HashSet<Vec<Literal>> {
        clauses.iter().map(Clause::key).collect()
    }

    #[test]
    fn compiles_the_four_printed_clauses() {
        let net = fixtures::deterministic_example();
        let clauses = compile_clauses(&net);
        // states are 0-based: A=1 is index 0, C=3 is index 2
        let expected = [
            vec![Literal::eq(C, 0), Literal::ne(A, 0), Literal::ne(B, 0)],
            vec![Literal::eq(C, 1), Literal::ne(A, 0), Literal::ne(B, 1)],
            vec![Literal::ne(C, 2), Literal::ne(A, 1), Literal::ne(B, 0)],
            vec![Literal::ne(C, 2), Literal::ne(A, 1), Literal::ne(B, 1)],
        ]
        .map(Clause::new);
        assert_eq!(clauses.len(), 4);
        assert_eq!(clause_set(&clauses), clause_set(&expected));
        let kb = compile_kb(&net);
        assert_eq!(kb.stats(), KbStats { clauses: 4, literals: 12 });
        assert_eq!(
            kb.dump(&net).lines().nth(1).unwrap(),
            "C=1 A!=1 B!=1"
        );
    }

    #[test]
    fn positive_tables_yield_no_clauses() {
        assert!(compile_clauses(&fixtures::chain()).is_empty());
    }

    #[test]
    fn deterministic_root_is_a_unit_clause() {
        let net = crate::model::parse_network(
            r#"{"variables":[{"name":"A","states":["1","2"]}],
                "cpts":[{"child":"A","kind":"table","table":[0,1]}]}"#,
        )
        .unwrap();
        let clauses = compile_clauses(&net);
        assert_eq!(clauses, vec![Clause::new(vec![Literal::eq(0, 1)])]);
        let kb = compile_kb(&net);
        assert_eq!(kb.fixed(0), Some(1));
    }

    #[test]
    fn per_row_clauses_are_positive_or_negative_never_both() {
        for seed in 0..50 {
            let params = NetworkParams { determinism: 0.5, noisy_or: 0.0, ..Default::default() };
            let net = random_network(&params, seed);
            for c in compile_clauses(&net) {
                let head = c.literals[0];
                // Parent literals are all negative and on distinct variables.
                assert!(c.literals[1..].iter().all(|l| !l.positive));
                assert!(net.parents(head.var).len() == c.len() - 1);
            }
        }
    }

    #[test]
    fn unit_resolution_forces_c() {
        let mut kb = compile_kb(&fixtures::deterministic_example());
        assert_eq!(kb.assert(Literal::eq(A, 0)), Assertion::Ok);
        assert_eq!(kb.fixed(C), None);
        assert_eq!(kb.assert(Literal::eq(B, 0)), Assertion::Ok);
        assert_eq!(kb.fixed(C), Some(0));
        assert!(kb.audit());
        assert_eq!(kb.assert(Literal::eq(C, 1)), Assertion::Contradiction);
    }

    #[test]
    fn negative_literals_and_collapse() {
        let mut kb = compile_kb(&fixtures::deterministic_example());
        let cp = kb.checkpoint();
        // A=2 rules out C=3 whatever B is, via both negative clauses once B is known.
        assert_eq!(kb.assert(Literal::eq(A, 1)), Assertion::Ok);
        assert!(kb.domain(C)[2]);
        assert_eq!(kb.assert(Literal::ne(B, 1)), Assertion::Ok);
        // Domain collapse fixes B=1, then (C≠3 ∨ A≠2 ∨ B≠1) is unit.
        assert_eq!(kb.fixed(B), Some(0));
        assert!(!kb.domain(C)[2]);
        assert_eq!(kb.assert(Literal::eq(C, 2)), Assertion::Contradiction);
        kb.retract_to(cp).unwrap();
        assert!(kb.audit());
        assert_eq!(kb.snapshot(), compile_kb(&fixtures::deterministic_example()).snapshot());
    }

    #[test]
    fn collapse_can_be_disabled() {
        let net = fixtures::deterministic_example();
        let mut kb = KnowledgeBase::new(compile_clauses(&net), net.cardinalities().to_vec(), false).unwrap();
        assert_eq!(kb.assert(Literal::eq(A, 1)), Assertion::Ok);
        assert_eq!(kb.assert(Literal::ne(B, 1)), Assertion::Ok);
        assert_eq!(kb.fixed(B), None);
        assert!(kb.domain(C)[2]);
        assert_eq!(kb.assert(Literal::ne(B, 0)), Assertion::Contradiction);
    }

    #[test]
    fn empty_kb_never_propagates() {
        let mut kb = KnowledgeBase::new(Vec::new(), vec![2, 3], true).unwrap();
        assert_eq!(kb.assert(Literal::eq(0, 1)), Assertion::Ok);
        assert_eq!(kb.assert(Literal::ne(1, 0)), Assertion::Ok);
        assert_eq!(kb.fixed(1), None);
        assert_eq!(kb.assert(Literal::ne(0, 1)), Assertion::Contradiction);
    }

    #[test]
    fn checkpoints_unwind_lifo() {
        let mut kb = compile_kb(&fixtures::deterministic_example());
        let fresh = kb.snapshot();
        let outer = kb.checkpoint();
        assert_eq!(kb.assert(Literal::eq(A, 0)), Assertion::Ok);
        let after_a = kb.snapshot();
        let inner = kb.checkpoint();
        assert_eq!(kb.assert(Literal::eq(B, 1)), Assertion::Ok);
        assert_eq!(kb.fixed(C), Some(1));
        kb.retract_to(inner).unwrap();
        assert_eq!(kb.snapshot(), after_a);
        assert_eq!(kb.retract_to(inner), Err(KbError::StaleCheckpoint));
        let again = kb.checkpoint();
        kb.retract_to(outer).unwrap();
        assert_eq!(kb.snapshot(), fresh);
        assert_eq!(kb.retract_to(again), Err(KbError::StaleCheckpoint));
    }

    #[test]
    fn out_of_range_literals_are_rejected() {
        let bad = Clause::new(vec![Literal::eq(0, 5)]);
        assert_eq!(
            KnowledgeBase::new(vec![bad], vec![2], true).unwrap_err(),
            KbError::BadLiteral(Literal::eq(0, 5))
        );
    }

    #[test]
    fn contradictory_clauses_are_flagged() {
        let kb = KnowledgeBase::new(
            vec![Clause::new(vec![Literal::eq(0, 0)]), Clause::new(vec![Literal::eq(0, 1)])],
            vec![2],
            true,
        )
        .unwrap();
        assert!(kb.is_inconsistent());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        /// A contradiction means no extension of the asserted literals has
        /// positive probability.
        #[test]
        fn contradictions_are_sound(seed in any::<u64>()) {
            let params = NetworkParams { max_vars: 8, determinism: 0.5, ..Default::default() };
            let net = random_network(&params, seed);
            let mut kb = compile_kb(&net);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut asserted: Vec<Literal> = Vec::new();
            for _ in 0..6 {
                let var = rng.gen_range(0..net.len());
                let state = rng.gen_range(0..net.cardinality(var));
                let lit = if rng.gen_bool(0.7) { Literal::eq(var, state) } else { Literal::ne(var, state) };
                asserted.push(lit);
                if kb.assert(lit).is_contradiction() {
                    prop_assert!(!is_consistent_extension(&net, &asserted).unwrap());
                    break;
                }
                prop_assert!(kb.audit());
            }
        }
    }
}
