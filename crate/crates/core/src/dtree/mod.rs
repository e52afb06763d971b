//! Decomposition trees.
//!
//! A dtree is a full binary tree whose leaves are the network's CPT families.
//! Each node carries four variable sets computed top-down by
//! [`Dtree::annotate`]:
//!
//! * `cutset(t) = vars(left) ∩ vars(right) − acutset(t)` for internal nodes,
//! * `acutset(t)`, the union of the cutsets of t's ancestors,
//! * `context(t) = vars(t) ∩ acutset(t)`, the key of t's cache,
//! * `cluster(t) = cutset(t) ∪ context(t)` (internal) or `vars(t)` (leaf).
//!
//! The width of a dtree is its largest cluster size minus one; its context
//! width is its largest context size. Recursive conditioning under full
//! caching stores one number per instantiation of each internal context, but
//! a cache whose context contains its parent's context is *dead*: each of its
//! entries is written once and never read again, so it is never allocated.

mod order;
mod shape;

pub use order::{min_fill_order, moral_graph};
pub use shape::DtreeShape;

pub(crate) use order::eliminate;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Network, VarId};
use crate::varset;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DtreeError {
    #[error("elimination order is not a permutation of the network's variables")]
    NotPermutation,
    #[error("dtree leaves do not match the network's families: {0}")]
    LeafMismatch(String),
    #[error("unknown variable `{0}` in dtree shape")]
    UnknownVariable(String),
    #[error("malformed dtree shape: {0}")]
    Syntax(String),
    #[error("dtree has not been annotated")]
    NotAnnotated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf { var: VarId },
    Internal { left: NodeId, right: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheState {
    Live,
    Dead,
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DtreeNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub vars: Vec<VarId>,
    pub acutset: Vec<VarId>,
    pub cutset: Vec<VarId>,
    pub context: Vec<VarId>,
    pub cluster: Vec<VarId>,
    pub cache: CacheState,
}

impl DtreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn children(&self) -> Option<(NodeId, NodeId)> {
        match self.kind {
            NodeKind::Internal { left, right } => Some((left, right)),
            NodeKind::Leaf { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DtreeStats {
    pub width: usize,
    pub context_width: usize,
    pub cache_cells_all: u64,
    pub cache_cells_live: u64,
    pub dead_caches: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dtree {
    nodes: Vec<DtreeNode>,
    root: NodeId,
    cards: Vec<usize>,
    annotated: bool,
}

impl Dtree {
    fn with_leaves(net: &Network) -> Self {
        let nodes = (0..net.len())
            .map(|v| DtreeNode {
                id: v,
                kind: NodeKind::Leaf { var: v },
                parent: None,
                vars: net.family(v),
                acutset: Vec::new(),
                cutset: Vec::new(),
                context: Vec::new(),
                cluster: Vec::new(),
                cache: CacheState::Disabled,
            })
            .collect();
        Dtree {
            nodes,
            root: 0,
            cards: net.cardinalities().to_vec(),
            annotated: false,
        }
    }

    fn compose(&mut self, left: NodeId, right: NodeId) -> NodeId {
        let id = self.nodes.len();
        let vars = varset::union(&self.nodes[left].vars, &self.nodes[right].vars);
        self.nodes[left].parent = Some(id);
        self.nodes[right].parent = Some(id);
        self.nodes.push(DtreeNode {
            id,
            kind: NodeKind::Internal { left, right },
            parent: None,
            vars,
            acutset: Vec::new(),
            cutset: Vec::new(),
            context: Vec::new(),
            cluster: Vec::new(),
            cache: CacheState::Disabled,
        });
        id
    }

    /// Pairs neighbours round by round until one tree remains.
    fn fold_balanced(&mut self, mut trees: Vec<NodeId>) -> NodeId {
        while trees.len() > 1 {
            let mut next = Vec::with_capacity(trees.len().div_ceil(2));
            for pair in trees.chunks(2) {
                match *pair {
                    [a, b] => next.push(self.compose(a, b)),
                    [a] => next.push(a),
                    _ => unreachable!(),
                }
            }
            trees = next;
        }
        trees[0]
    }

    /// Builds a dtree from an elimination order: for each variable in turn,
    /// every current tree mentioning it is composed into one. Remaining trees
    /// are composed at the end. The result is not yet annotated.
    pub fn from_order(net: &Network, order: &[VarId]) -> Result<Self, DtreeError> {
        if !order::is_permutation(order, net.len()) || net.is_empty() {
            return Err(DtreeError::NotPermutation);
        }
        let mut dt = Dtree::with_leaves(net);
        let mut pool: Vec<NodeId> = (0..net.len()).collect();
        for &v in order {
            let (with, without): (Vec<NodeId>, Vec<NodeId>) = pool
                .iter()
                .partition(|&&t| dt.nodes[t].vars.binary_search(&v).is_ok());
            if with.len() >= 2 {
                let t = dt.fold_balanced(with);
                pool = without;
                pool.push(t);
            }
        }
        dt.root = dt.fold_balanced(pool);
        Ok(dt)
    }

    /// Builds a dtree with exactly the given shape.
    pub fn from_shape(net: &Network, shape: &DtreeShape) -> Result<Self, DtreeError> {
        let mut dt = Dtree::with_leaves(net);
        let mut used = vec![false; net.len()];
        dt.root = dt.place(net, shape, &mut used)?;
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(DtreeError::LeafMismatch(format!(
                "no leaf for `{}`",
                net.variable(v).name
            )));
        }
        Ok(dt)
    }

    fn place(
        &mut self,
        net: &Network,
        shape: &DtreeShape,
        used: &mut [bool],
    ) -> Result<NodeId, DtreeError> {
        match shape {
            DtreeShape::Leaf(name) => {
                let v = net
                    .id_of(name)
                    .ok_or_else(|| DtreeError::UnknownVariable(name.clone()))?;
                if std::mem::replace(&mut used[v], true) {
                    return Err(DtreeError::LeafMismatch(format!("`{name}` appears twice")));
                }
                Ok(v)
            }
            DtreeShape::Node(l, r) => {
                let l = self.place(net, l, used)?;
                let r = self.place(net, r, used)?;
                Ok(self.compose(l, r))
            }
        }
    }

    /// Min-fill order, construction, annotation and dead-cache marking.
    pub fn min_fill(net: &Network) -> Result<Self, DtreeError> {
        let order = min_fill_order(net);
        let mut dt = Dtree::from_order(net, &order)?;
        dt.annotate(net)?;
        dt.mark_dead_caches();
        Ok(dt)
    }

    /// Fills in acutset, cutset, context and cluster for every node. All
    /// internal non-root caches start out live.
    pub fn annotate(&mut self, net: &Network) -> Result<DtreeStats, DtreeError> {
        self.check_leaves(net)?;
        self.cards = net.cardinalities().to_vec();
        for id in self.postorder() {
            if let NodeKind::Internal { left, right } = self.nodes[id].kind {
                self.nodes[id].vars = varset::union(&self.nodes[left].vars, &self.nodes[right].vars);
            }
        }
        let mut stack = vec![(self.root, Vec::new())];
        while let Some((id, acutset)) = stack.pop() {
            let node = &self.nodes[id];
            let context = varset::intersection(&node.vars, &acutset);
            let (cutset, cluster) = match node.kind {
                NodeKind::Leaf { .. } => (Vec::new(), node.vars.clone()),
                NodeKind::Internal { left, right } => {
                    let shared =
                        varset::intersection(&self.nodes[left].vars, &self.nodes[right].vars);
                    let cutset = varset::difference(&shared, &acutset);
                    let cluster = varset::union(&cutset, &context);
                    let below = varset::union(&acutset, &cutset);
                    stack.push((left, below.clone()));
                    stack.push((right, below));
                    (cutset, cluster)
                }
            };
            let cacheable = !node.is_leaf() && id != self.root;
            let node = &mut self.nodes[id];
            node.acutset = acutset;
            node.cutset = cutset;
            node.context = context;
            node.cluster = cluster;
            node.cache = if cacheable {
                CacheState::Live
            } else {
                CacheState::Disabled
            };
        }
        self.annotated = true;
        self.stats()
    }

    fn check_leaves(&self, net: &Network) -> Result<(), DtreeError> {
        let mut seen = vec![false; net.len()];
        let mut leaves = 0;
        for id in self.postorder() {
            if let NodeKind::Leaf { var } = self.nodes[id].kind {
                leaves += 1;
                if var >= net.len() || std::mem::replace(&mut seen[var], true) {
                    return Err(DtreeError::LeafMismatch(format!(
                        "variable {var} has more than one leaf or does not exist"
                    )));
                }
                if self.nodes[id].vars != net.family(var) {
                    return Err(DtreeError::LeafMismatch(format!(
                        "leaf for `{}` does not carry its family",
                        net.variable(var).name
                    )));
                }
            }
        }
        if leaves != net.len() {
            return Err(DtreeError::LeafMismatch(format!(
                "{leaves} leaves for {} variables",
                net.len()
            )));
        }
        Ok(())
    }

    /// Marks every internal cache whose context contains its parent's
    /// context as dead. Returns the number of caches marked.
    pub fn mark_dead_caches(&mut self) -> usize {
        let mut marked = 0;
        for id in 0..self.nodes.len() {
            let Some(parent) = self.nodes[id].parent else {
                continue;
            };
            if self.nodes[id].cache == CacheState::Live
                && varset::is_subset(&self.nodes[parent].context, &self.nodes[id].context)
            {
                self.nodes[id].cache = CacheState::Dead;
                marked += 1;
            }
        }
        marked
    }

    pub fn stats(&self) -> Result<DtreeStats, DtreeError> {
        if !self.annotated {
            return Err(DtreeError::NotAnnotated);
        }
        let mut s = DtreeStats {
            width: 0,
            context_width: 0,
            cache_cells_all: 0,
            cache_cells_live: 0,
            dead_caches: 0,
            nodes: self.nodes.len(),
        };
        for node in &self.nodes {
            s.width = s.width.max(node.cluster.len().saturating_sub(1));
            s.context_width = s.context_width.max(node.context.len());
            if self.is_cacheable(node.id) {
                let cells = self.instantiations(&node.context);
                s.cache_cells_all = s.cache_cells_all.saturating_add(cells);
                match node.cache {
                    CacheState::Live => s.cache_cells_live = s.cache_cells_live.saturating_add(cells),
                    CacheState::Dead => s.dead_caches += 1,
                    CacheState::Disabled => {}
                }
            }
        }
        Ok(s)
    }

    /// Internal, non-root nodes: the only ones that may hold a cache.
    pub fn is_cacheable(&self, id: NodeId) -> bool {
        !self.nodes[id].is_leaf() && id != self.root
    }

    pub fn is_annotated(&self) -> bool {
        self.annotated
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &DtreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[DtreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    /// `‖S‖`, the number of instantiations of `vars` (saturating).
    pub fn instantiations(&self, vars: &[VarId]) -> u64 {
        vars.iter()
            .fold(1u64, |acc, &v| acc.saturating_mul(self.cards[v] as u64))
    }

    /// Node ids with children before parents.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            match self.nodes[id].kind {
                NodeKind::Internal { left, right } if !expanded => {
                    stack.push((id, true));
                    stack.push((right, false));
                    stack.push((left, false));
                }
                _ => out.push(id),
            }
        }
        out
    }

    pub fn shape(&self, net: &Network) -> DtreeShape {
        self.shape_at(net, self.root)
    }

    fn shape_at(&self, net: &Network, id: NodeId) -> DtreeShape {
        match self.nodes[id].kind {
            NodeKind::Leaf { var } => DtreeShape::Leaf(net.variable(var).name.clone()),
            NodeKind::Internal { left, right } => DtreeShape::Node(
                Box::new(self.shape_at(net, left)),
                Box::new(self.shape_at(net, right)),
            ),
        }
    }

    /// Nested JSON: `{"leaf": "C"}` or
    /// `{"left": …, "right": …, "cutset": […], "context": […], "cache": "live"}`.
    pub fn to_json(&self, net: &Network) -> serde_json::Value {
        self.json_at(net, self.root)
    }

    fn json_at(&self, net: &Network, id: NodeId) -> serde_json::Value {
        let names = |vs: &[VarId]| -> Vec<String> {
            vs.iter().map(|&v| net.variable(v).name.clone()).collect()
        };
        let node = &self.nodes[id];
        match node.kind {
            NodeKind::Leaf { var } => serde_json::json!({
                "leaf": net.variable(var).name,
                "context": names(&node.context),
            }),
            NodeKind::Internal { left, right } => serde_json::json!({
                "left": self.json_at(net, left),
                "right": self.json_at(net, right),
                "cutset": names(&node.cutset),
                "context": names(&node.context),
                "cache": node.cache,
            }),
        }
    }

    /// Graphviz rendering with cutset and context on each internal node.
    pub fn to_dot(&self, net: &Network) -> String {
        let names = |vs: &[VarId]| -> String {
            vs.iter()
                .map(|&v| net.variable(v).name.as_str())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = String::from("digraph dtree {\n  node [shape=box];\n");
        for id in self.postorder() {
            let node = &self.nodes[id];
            match node.kind {
                NodeKind::Leaf { var } => out.push_str(&format!(
                    "  n{id} [label=\"{}\", shape=ellipse];\n",
                    net.variable(var).name
                )),
                NodeKind::Internal { left, right } => {
                    let style = if node.cache == CacheState::Dead {
                        ", style=dashed"
                    } else {
                        ""
                    };
                    out.push_str(&format!(
                        "  n{id} [label=\"cutset: {}\\ncontext: {}\"{style}];\n",
                        names(&node.cutset),
                        names(&node.context)
                    ));
                    out.push_str(&format!("  n{id} -> n{left};\n  n{id} -> n{right};\n"));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}
