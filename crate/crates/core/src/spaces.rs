//! Memory accounting under four models: jointree with Hugin or
//! Shenoy-Shafer storage, variable elimination, and recursive conditioning.
//!
//! Everything is counted in table cells (one stored probability each);
//! [`SpaceReport::bytes`] converts at 8 bytes per cell.
//!
//! The jointree induced by a dtree has one cluster per dtree node and one
//! edge per dtree edge, labelled with the child's context. RC's cache for an
//! internal node is indexed by exactly that context, so RC under full caching
//! and inward-only Shenoy-Shafer on the induced jointree store the same
//! tables; dead caches are where RC saves.

use serde::Serialize;

use crate::dtree::{Dtree, DtreeError, NodeId};
use crate::model::{Network, VarId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointreeEdge {
    pub parent: usize,
    pub child: usize,
    pub separator: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Jointree {
    pub clusters: Vec<Vec<VarId>>,
    pub edges: Vec<JointreeEdge>,
    /// Whether each cluster came from a dtree leaf.
    pub from_leaf: Vec<bool>,
    cards: Vec<usize>,
}

impl Jointree {
    pub fn size(&self, vars: &[VarId]) -> u64 {
        vars.iter()
            .fold(1u64, |acc, &v| acc.saturating_mul(self.cards[v] as u64))
    }

    pub fn neighbours(&self, cluster: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.parent == cluster || e.child == cluster)
            .count()
    }
}

/// Which separators [`shenoy_shafer_space_with`] sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeparatorScope {
    #[default]
    All,
    /// Only edges whose child end is an internal dtree node.
    InternalChildren,
}

/// Cluster `i` of the result is dtree node `i`.
pub fn induce_jointree(dtree: &Dtree) -> Result<Jointree, DtreeError> {
    if !dtree.is_annotated() {
        return Err(DtreeError::NotAnnotated);
    }
    let clusters = dtree.nodes().iter().map(|n| n.cluster.clone()).collect();
    let from_leaf = dtree.nodes().iter().map(|n| n.is_leaf()).collect();
    let edges = dtree
        .nodes()
        .iter()
        .filter_map(|n| {
            n.parent.map(|p: NodeId| JointreeEdge {
                parent: p,
                child: n.id,
                separator: n.context.clone(),
            })
        })
        .collect();
    Ok(Jointree {
        clusters,
        edges,
        from_leaf,
        cards: dtree.cardinalities().to_vec(),
    })
}

/// One table per separator, inward pass only.
pub fn shenoy_shafer_space(jt: &Jointree) -> u64 {
    shenoy_shafer_space_with(jt, SeparatorScope::All, false)
}

/// `both_directions` counts two tables per separator, as full propagation
/// would need.
pub fn shenoy_shafer_space_with(jt: &Jointree, scope: SeparatorScope, both_directions: bool) -> u64 {
    let sum = jt
        .edges
        .iter()
        .filter(|e| scope == SeparatorScope::All || !jt.from_leaf[e.child])
        .fold(0u64, |acc, e| acc.saturating_add(jt.size(&e.separator)));
    if both_directions {
        sum.saturating_mul(2)
    } else {
        sum
    }
}

/// One table per cluster plus one per separator.
pub fn hugin_space(jt: &Jointree) -> u64 {
    jt.clusters
        .iter()
        .fold(shenoy_shafer_space(jt), |acc, c| acc.saturating_add(jt.size(c)))
}

/// Sum of the tables created while eliminating variables in `order` on the
/// moral graph: each step builds a table over the variable and its current
/// neighbours.
pub fn ve_space(net: &Network, order: &[VarId]) -> Result<u64, DtreeError> {
    Ok(ve_clusters(net, order)?
        .iter()
        .fold(0u64, |acc, c| acc.saturating_add(net.instantiations(c))))
}

/// The cluster created at each elimination step, in order.
pub fn ve_clusters(net: &Network, order: &[VarId]) -> Result<Vec<Vec<VarId>>, DtreeError> {
    let mut seen = vec![false; net.len()];
    if order.len() != net.len() || order.iter().any(|&v| v >= net.len() || std::mem::replace(&mut seen[v], true)) {
        return Err(DtreeError::NotPermutation);
    }
    let mut adj = crate::dtree::moral_graph(net);
    Ok(order
        .iter()
        .map(|&v| {
            let mut c = crate::dtree::eliminate(&mut adj, v);
            c.push(v);
            c.sort_unstable();
            c
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RcSpace {
    pub cells_all: u64,
    pub cells_live: u64,
}

/// Cache cells over internal non-root nodes, with and without dead caches.
pub fn rc_space(dtree: &Dtree) -> Result<RcSpace, DtreeError> {
    let s = dtree.stats()?;
    Ok(RcSpace {
        cells_all: s.cache_cells_all,
        cells_live: s.cache_cells_live,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpaceReport {
    pub hugin_cells: u64,
    pub shenoy_shafer_cells: u64,
    pub ve_cells: u64,
    pub rc_cells_all: u64,
    pub rc_cells_live: u64,
}

impl SpaceReport {
    /// Computes every model for one network, its dtree, and the elimination
    /// order used for the VE figure.
    pub fn compute(net: &Network, dtree: &Dtree, order: &[VarId]) -> Result<Self, DtreeError> {
        let jt = induce_jointree(dtree)?;
        let rc = rc_space(dtree)?;
        Ok(SpaceReport {
            hugin_cells: hugin_space(&jt),
            shenoy_shafer_cells: shenoy_shafer_space(&jt),
            ve_cells: ve_space(net, order)?,
            rc_cells_all: rc.cells_all,
            rc_cells_live: rc.cells_live,
        })
    }

    pub fn bytes(cells: u64) -> u64 {
        cells.saturating_mul(8)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::dtree::{min_fill_order, DtreeShape};
    use crate::fixtures;
    use crate::random::{random_network, NetworkParams};

    fn chain_dtree() -> (Network, Dtree) {
        let net = fixtures::chain();
        let mut dt = Dtree::from_order(&net, &[0, 2, 1]).unwrap();
        dt.annotate(&net).unwrap();
        dt.mark_dead_caches();
        (net, dt)
    }

    /// Running intersection checked by graph search: the clusters holding
    /// each variable must induce a connected subgraph of the tree.
    fn running_intersection(jt: &Jointree, n_vars: usize) -> bool {
        for v in 0..n_vars {
            let holders: Vec<usize> = (0..jt.clusters.len())
                .filter(|&c| jt.clusters[c].contains(&v))
                .collect();
            let Some(&start) = holders.first() else { continue };
            let mut seen = vec![false; jt.clusters.len()];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(c) = stack.pop() {
                for e in &jt.edges {
                    let other = if e.parent == c {
                        e.child
                    } else if e.child == c {
                        e.parent
                    } else {
                        continue;
                    };
                    if !seen[other] && jt.clusters[other].contains(&v) {
                        seen[other] = true;
                        stack.push(other);
                    }
                }
            }
            if holders.iter().any(|&c| !seen[c]) {
                return false;
            }
        }
        true
    }

    #[test]
    fn single_leaf_jointree() {
        let net = fixtures::single_variable();
        let mut dt = Dtree::from_order(&net, &[0]).unwrap();
        dt.annotate(&net).unwrap();
        let jt = induce_jointree(&dt).unwrap();
        assert_eq!(jt.clusters.len(), 1);
        assert!(jt.edges.is_empty());
        assert_eq!(shenoy_shafer_space(&jt), 0);
        assert_eq!(hugin_space(&jt), 2);
        assert_eq!(ve_space(&net, &[0]).unwrap(), 2);
    }

    #[test]
    fn chain_jointree() {
        let (net, dt) = chain_dtree();
        let jt = induce_jointree(&dt).unwrap();
        assert_eq!(jt.clusters.len(), 5);
        // The edge into the internal node over {A}, {A,B} carries {B}.
        let inner = dt
            .nodes()
            .iter()
            .find(|n| !n.is_leaf() && n.id != dt.root())
            .unwrap()
            .id;
        let edge = jt.edges.iter().find(|e| e.child == inner).unwrap();
        assert_eq!(edge.separator, vec![1]);

        // Separators: C→{B}, inner→{B}, A→{A}, AB→{A,B}: 2 + 2 + 2 + 4.
        let by_hand: u64 = dt
            .nodes()
            .iter()
            .filter(|n| n.id != dt.root())
            .map(|n| dt.instantiations(&n.context))
            .sum();
        assert_eq!(by_hand, 10);
        assert_eq!(shenoy_shafer_space(&jt), 10);
        assert_eq!(shenoy_shafer_space_with(&jt, SeparatorScope::All, true), 20);
        assert_eq!(
            shenoy_shafer_space_with(&jt, SeparatorScope::InternalChildren, false),
            2
        );
        // Clusters: root {B}=2, inner {A,B}=4, A=2, AB=4, BC=4.
        assert_eq!(hugin_space(&jt), 10 + 16);

        let rc = rc_space(&dt).unwrap();
        assert_eq!(rc, RcSpace { cells_all: 2, cells_live: 0 });
        assert!(running_intersection(&jt, net.len()));
        assert!((0..jt.clusters.len()).all(|c| jt.neighbours(c) <= 3));
    }

    #[test]
    fn chain_ve_space() {
        let net = fixtures::chain();
        assert_eq!(ve_space(&net, &[0, 2, 1]).unwrap(), 4 + 4 + 2);
        assert_eq!(ve_space(&net, &[0, 1]), Err(DtreeError::NotPermutation));
    }

    #[test]
    fn star_rc_space_is_zero() {
        let net = fixtures::noisy_or_star(6, 0.0);
        let mut dt = Dtree::from_shape(
            &net,
            &DtreeShape::parse(&fixtures::right_linear_star_shape(6)).unwrap(),
        )
        .unwrap();
        dt.annotate(&net).unwrap();
        dt.mark_dead_caches();
        let rc = rc_space(&dt).unwrap();
        assert_eq!(rc.cells_live, 0);
        assert!(rc.cells_all > 0);
    }

    #[test]
    fn jointree_requires_annotation() {
        let net = fixtures::chain();
        let dt = Dtree::from_order(&net, &[0, 1, 2]).unwrap();
        assert_eq!(induce_jointree(&dt).unwrap_err(), DtreeError::NotAnnotated);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn space_identities(seed in any::<u64>()) {
            let net = random_network(&NetworkParams::default(), seed);
            let order = min_fill_order(&net);
            let mut dt = Dtree::from_order(&net, &order).unwrap();
            dt.annotate(&net).unwrap();
            dt.mark_dead_caches();
            let jt = induce_jointree(&dt).unwrap();
            prop_assert!(running_intersection(&jt, net.len()));
            for e in &jt.edges {
                prop_assert!(crate::varset::is_subset(&e.separator, &jt.clusters[e.parent]));
                prop_assert!(crate::varset::is_subset(&e.separator, &jt.clusters[e.child]));
            }
            let rc = rc_space(&dt).unwrap();
            prop_assert_eq!(
                rc.cells_all,
                shenoy_shafer_space_with(&jt, SeparatorScope::InternalChildren, false)
            );
            prop_assert!(hugin_space(&jt) >= shenoy_shafer_space(&jt));
            prop_assert!(rc.cells_live <= rc.cells_all);
            if dt.stats().unwrap().dead_caches > 0 {
                let dead_cells: u64 = dt.nodes().iter()
                    .filter(|n| n.cache == crate::dtree::CacheState::Dead)
                    .map(|n| dt.instantiations(&n.context))
                    .sum();
                prop_assert_eq!(rc.cells_live + dead_cells, rc.cells_all);
                prop_assert!(rc.cells_live < rc.cells_all);
            }

            // VE covers at least the maximal elimination clusters.
            let clusters = ve_clusters(&net, &order).unwrap();
            let maximal: u64 = clusters.iter().enumerate()
                .filter(|(i, c)| !clusters.iter().enumerate().any(|(j, d)| {
                    j != *i && crate::varset::is_subset(c, d) && (c.len() < d.len() || j < *i)
                }))
                .map(|(_, c)| net.instantiations(c))
                .sum();
            prop_assert!(ve_space(&net, &order).unwrap() >= maximal);
        }
    }
}
