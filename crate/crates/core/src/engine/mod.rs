//! Recursive conditioning.
//!
//! `rc(t)` returns the probability of the recorded evidence on the subnetwork
//! below dtree node `t`:
//!
//! * a leaf for variable X returns `Pr(x | u)` if X is recorded, else 1;
//! * an internal node reads the recorded instantiation `y` of its context and
//!   returns `cache[y]` if present; otherwise it sums `rc(left) * rc(right)`
//!   over every instantiation of its not-yet-recorded cutset variables,
//!   recording each instantiation around the two calls, and stores the sum.
//!
//! Any subset of caches may be enabled without changing the result; only
//! the number of calls changes. With a [`KnowledgeBase`], each cutset
//! instantiation is asserted before recursing, and instantiations that unit
//! resolution refutes are skipped: their term is exactly zero.

mod domain;
mod policy;
mod recorder;

pub use policy::{apply_policy, CachePlan, CachePolicy};
pub use recorder::{Provenance, Recorder};

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::dtree::{CacheState, Dtree, DtreeError, NodeKind};
use crate::kb::{KbError, KnowledgeBase, Literal};
use crate::model::{Evidence, ModelError, Network, VarId, UNASSIGNED};
use domain::{Domain, Linear, LogSpace};

/// Caches with at most this many cells are stored densely.
pub const DENSE_CACHE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Dtree(#[from] DtreeError),
    #[error("dtree was built for a different network")]
    DtreeMismatch,
    #[error("invalid evidence: {0}")]
    Evidence(ModelError),
    #[error("parent {parent} of variable {var} is unassigned at lookup; the dtree is malformed")]
    UnassignedParent { var: VarId, parent: VarId },
    #[error(transparent)]
    Kb(#[from] KbError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryOptions {
    pub policy: CachePolicy,
    pub log_domain: bool,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            policy: CachePolicy::Full,
            log_domain: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheCounters {
    pub hits: u64,
    pub misses: u64,
    pub written: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KbCounters {
    pub enabled: bool,
    pub skips: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    /// `Pr(e)`; in log mode, the exponentiated log result.
    pub probability: f64,
    /// `log10 Pr(e)`, `null` when the probability is zero.
    pub log10: Option<f64>,
    pub rc_calls: u64,
    pub cache: CacheCounters,
    pub kb: KbCounters,
    /// Evidence alone was refuted by unit resolution; probability is 0.
    pub kb_evidence_contradiction: bool,
    /// Cache misses per dtree node.
    #[serde(skip)]
    pub node_misses: Vec<u64>,
}

/// Computes `Pr(evidence)` on an annotated dtree.
///
/// When `kb` is supplied it is used for pruning and returned to the state it
/// was in on entry.
pub fn rc_query(
    net: &Network,
    dtree: &Dtree,
    evidence: &Evidence,
    options: &QueryOptions,
    kb: Option<&mut KnowledgeBase>,
) -> Result<QueryResult, EngineError> {
    let mut recorder = Recorder::new(net.len());
    rc_query_with(net, dtree, evidence, options, kb, &mut recorder)
}

pub(crate) fn rc_query_with(
    net: &Network,
    dtree: &Dtree,
    evidence: &Evidence,
    options: &QueryOptions,
    kb: Option<&mut KnowledgeBase>,
    recorder: &mut Recorder,
) -> Result<QueryResult, EngineError> {
    if !dtree.is_annotated() {
        return Err(DtreeError::NotAnnotated.into());
    }
    if dtree.cardinalities() != net.cardinalities() {
        return Err(EngineError::DtreeMismatch);
    }
    evidence.validate(net).map_err(EngineError::Evidence)?;
    recorder.reset();
    for (v, s) in evidence.iter() {
        recorder.record_evidence(v, s);
    }
    let plan = apply_policy(dtree, options.policy);
    if options.log_domain {
        run::<LogSpace>(net, dtree, &plan, kb, recorder)
    } else {
        run::<Linear>(net, dtree, &plan, kb, recorder)
    }
}

fn run<D: Domain>(
    net: &Network,
    dtree: &Dtree,
    plan: &CachePlan,
    mut kb: Option<&mut KnowledgeBase>,
    recorder: &mut Recorder,
) -> Result<QueryResult, EngineError> {
    let kb_enabled = kb.is_some();
    let mut base = None;
    if let Some(kb) = kb.as_deref_mut() {
        let cp = kb.checkpoint();
        base = Some(cp);
        let refuted = recorder
            .evidence()
            .any(|(v, s)| kb.assert(Literal::eq(v, s)).is_contradiction());
        if refuted {
            kb.retract_to(cp)?;
            return Ok(QueryResult {
                probability: 0.0,
                log10: None,
                rc_calls: 0,
                cache: CacheCounters { hits: 0, misses: 0, written: 0 },
                kb: KbCounters { enabled: true, skips: 0 },
                kb_evidence_contradiction: true,
                node_misses: vec![0; dtree.len()],
            });
        }
    }

    let mut search = Search::<D>::new(net, dtree, plan, kb, recorder);
    let value = search.rc(dtree.root());
    let Search {
        calls,
        hits,
        misses,
        written,
        skips,
        node_misses,
        kb,
        error,
        ..
    } = search;
    if let (Some(kb), Some(cp)) = (kb, base) {
        kb.retract_to(cp)?;
    }
    let value = value.map_err(|Abort| error.expect("abort records its cause"))?;
    Ok(QueryResult {
        probability: D::to_prob(value),
        log10: D::to_log10(value),
        rc_calls: calls,
        cache: CacheCounters { hits, misses, written },
        kb: KbCounters { enabled: kb_enabled, skips },
        kb_evidence_contradiction: false,
        node_misses,
    })
}

/// `Pr(x | u)` if the leaf's variable is recorded, 1 otherwise.
pub fn lookup(net: &Network, var: VarId, recorder: &Recorder) -> Result<f64, EngineError> {
    leaf_value::<Linear>(net, var, recorder.states())
}

#[inline]
fn leaf_value<D: Domain>(net: &Network, var: VarId, states: &[usize]) -> Result<f64, EngineError> {
    let x = states[var];
    if x == UNASSIGNED {
        return Ok(D::ONE);
    }
    match net.cpt(var).prob_dense(x, states) {
        Some(p) => Ok(D::from_prob(p)),
        None => Err(unassigned_parent(net, var, states)),
    }
}

#[cold]
fn unassigned_parent(net: &Network, var: VarId, states: &[usize]) -> EngineError {
    let parent = net
        .parents(var)
        .iter()
        .copied()
        .find(|&p| states[p] == UNASSIGNED)
        .unwrap_or(var);
    EngineError::UnassignedParent { var, parent }
}

/// The recursion stopped early; the cause is in `Search::error`.
struct Abort;

enum NodeCache {
    Off,
    Dense(Vec<f64>),
    Sparse(HashMap<u64, f64>),
}

struct NodeInfo {
    kind: NodeKind,
    /// Range in `Search::free` of the cutset variables the node sums over.
    free: std::ops::Range<usize>,
    context: Vec<VarId>,
    strides: Vec<u64>,
}

struct Search<'a, D: Domain> {
    net: &'a Network,
    nodes: Vec<NodeInfo>,
    caches: Vec<NodeCache>,
    // Unrecorded cutset variables of every node, their cardinalities and the
    // current instantiation. Ancestors' cutsets are disjoint from a node's
    // own, so only evidence can pre-assign a cutset variable, and each node
    // is on the recursion stack at most once.
    free: Vec<VarId>,
    free_cards: Vec<usize>,
    digits: Vec<usize>,
    kb: Option<&'a mut KnowledgeBase>,
    recorder: &'a mut Recorder,
    calls: u64,
    hits: u64,
    misses: u64,
    written: u64,
    skips: u64,
    node_misses: Vec<u64>,
    error: Option<EngineError>,
    _domain: std::marker::PhantomData<D>,
}

impl<'a, D: Domain> Search<'a, D> {
    fn new(
        net: &'a Network,
        dtree: &'a Dtree,
        plan: &CachePlan,
        kb: Option<&'a mut KnowledgeBase>,
        recorder: &'a mut Recorder,
    ) -> Self {
        let mut free = Vec::new();
        let nodes = dtree
            .nodes()
            .iter()
            .map(|n| {
                let cards = n.context.iter().map(|&v| net.cardinality(v));
                let strides = crate::model::strides(cards)
                    .into_iter()
                    .map(|s| s as u64)
                    .collect();
                let start = free.len();
                free.extend(n.cutset.iter().copied().filter(|&v| !recorder.is_recorded(v)));
                NodeInfo {
                    kind: n.kind,
                    free: start..free.len(),
                    context: n.context.clone(),
                    strides,
                }
            })
            .collect();
        let caches = (0..dtree.len())
            .map(|id| {
                if plan.state(id) != CacheState::Live {
                    return NodeCache::Off;
                }
                let size = dtree.instantiations(&dtree.node(id).context);
                if size <= DENSE_CACHE_LIMIT {
                    NodeCache::Dense(Vec::new())
                } else {
                    NodeCache::Sparse(HashMap::new())
                }
            })
            .collect();
        let free_cards = free.iter().map(|&v| net.cardinality(v)).collect();
        let digits = vec![0; free.len()];
        Search {
            net,
            nodes,
            caches,
            free,
            free_cards,
            digits,
            kb,
            recorder,
            calls: 0,
            hits: 0,
            misses: 0,
            written: 0,
            skips: 0,
            node_misses: vec![0; dtree.len()],
            error: None,
            _domain: std::marker::PhantomData,
        }
    }

    fn context_index(&self, t: usize) -> u64 {
        let info = &self.nodes[t];
        let states = self.recorder.states();
        info.context
            .iter()
            .zip(&info.strides)
            .map(|(&v, &s)| {
                debug_assert_ne!(states[v], UNASSIGNED, "context variables are recorded");
                states[v] as u64 * s
            })
            .sum()
    }

    fn cache_get(&self, t: usize, key: u64) -> Option<f64> {
        match &self.caches[t] {
            NodeCache::Off => None,
            NodeCache::Dense(table) => table.get(key as usize).copied().filter(|v| !v.is_nan()),
            NodeCache::Sparse(map) => map.get(&key).copied(),
        }
    }

    fn cache_put(&mut self, t: usize, key: u64, value: f64) {
        match &mut self.caches[t] {
            NodeCache::Off => return,
            NodeCache::Dense(table) => {
                if table.is_empty() {
                    let size = self.nodes[t]
                        .context
                        .iter()
                        .map(|&v| self.net.cardinality(v))
                        .product();
                    table.resize(size, f64::NAN);
                }
                debug_assert!(table[key as usize].is_nan());
                table[key as usize] = value;
            }
            NodeCache::Sparse(map) => {
                let prev = map.insert(key, value);
                debug_assert!(prev.is_none());
            }
        }
        self.written += 1;
    }

    #[cold]
    fn fail(&mut self, e: EngineError) -> Abort {
        self.error = Some(e);
        Abort
    }

    #[inline]
    fn leaf(&mut self, var: VarId) -> Result<f64, Abort> {
        leaf_value::<D>(self.net, var, self.recorder.states()).map_err(|e| self.fail(e))
    }

    /// `rc(t)`, with leaves evaluated in place.
    #[inline(always)]
    fn child(&mut self, t: usize) -> Result<f64, Abort> {
        match self.nodes[t].kind {
            NodeKind::Leaf { var } => {
                self.calls += 1;
                self.leaf(var)
            }
            NodeKind::Internal { .. } => self.rc(t),
        }
    }

    fn rc(&mut self, t: usize) -> Result<f64, Abort> {
        self.calls += 1;
        let (left, right) = match self.nodes[t].kind {
            NodeKind::Leaf { var } => return self.leaf(var),
            NodeKind::Internal { left, right } => (left, right),
        };

        let caching = !matches!(self.caches[t], NodeCache::Off);
        let key = if caching { self.context_index(t) } else { 0 };
        if caching {
            if let Some(v) = self.cache_get(t, key) {
                self.hits += 1;
                return Ok(v);
            }
            self.misses += 1;
            self.node_misses[t] += 1;
        }

        let p = self.sum_cutset(t, left, right)?;
        if caching {
            self.cache_put(t, key, p);
        }
        Ok(p)
    }

    /// Sums `rc(left) * rc(right)` over every instantiation of `t`'s
    /// unrecorded cutset variables.
    fn sum_cutset(&mut self, t: usize, left: usize, right: usize) -> Result<f64, Abort> {
        let range = self.nodes[t].free.clone();
        for i in range.clone() {
            debug_assert!(!self.recorder.is_recorded(self.free[i]));
            self.digits[i] = 0;
            self.recorder.record(self.free[i], 0);
        }
        let mut p = D::ZERO;
        let result = loop {
            let mut checkpoint = None;
            if let Some(kb) = self.kb.as_deref_mut() {
                let cp = kb.checkpoint();
                let refuted = range
                    .clone()
                    .any(|i| kb.assert(Literal::eq(self.free[i], self.digits[i])).is_contradiction());
                checkpoint = Some((cp, refuted));
            }
            let term = if let Some((_, true)) = checkpoint {
                self.skips += 1;
                Ok(())
            } else {
                self.child(left).and_then(|l| {
                    let r = self.child(right)?;
                    p = D::add(p, D::mul(l, r));
                    Ok(())
                })
            };
            if let (Some((cp, _)), Some(kb)) = (checkpoint, self.kb.as_deref_mut()) {
                if let Err(e) = kb.retract_to(cp) {
                    break Err(self.fail(e.into()));
                }
            }
            if let Err(abort) = term {
                break Err(abort);
            }
            // Odometer step, last variable fastest; only changed digits are
            // re-recorded.
            let mut i = range.end;
            let done = loop {
                if i == range.start {
                    break true;
                }
                i -= 1;
                self.digits[i] += 1;
                if self.digits[i] < self.free_cards[i] {
                    self.recorder.record(self.free[i], self.digits[i]);
                    break false;
                }
                self.digits[i] = 0;
                self.recorder.record(self.free[i], 0);
            };
            if done {
                break Ok(p);
            }
        };
        for i in range {
            self.recorder.unrecord(self.free[i]);
        }
        result
    }
}
