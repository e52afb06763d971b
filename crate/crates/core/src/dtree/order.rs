use std::collections::BTreeSet;

use crate::model::{Network, VarId};

/// Undirected moral graph: every family becomes a clique.
pub fn moral_graph(net: &Network) -> Vec<BTreeSet<VarId>> {
    let mut adj = vec![BTreeSet::new(); net.len()];
    for v in 0..net.len() {
        let family = net.family(v);
        for (i, &a) in family.iter().enumerate() {
            for &b in &family[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    adj
}

fn fill_in(adj: &[BTreeSet<VarId>], v: VarId) -> usize {
    let nbrs: Vec<VarId> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if !adj[a].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Removes `v` from the graph after connecting its neighbours pairwise.
/// Returns the neighbourhood at the time of elimination.
pub(crate) fn eliminate(adj: &mut [BTreeSet<VarId>], v: VarId) -> Vec<VarId> {
    let nbrs: Vec<VarId> = adj[v].iter().copied().collect();
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    for &a in &nbrs {
        adj[a].remove(&v);
    }
    adj[v].clear();
    nbrs
}

/// Greedy min-fill elimination order over the moral graph.
///
/// Ties are broken by the smaller current neighbourhood, then by the smaller
/// variable id, so the order is fully deterministic.
pub fn min_fill_order(net: &Network) -> Vec<VarId> {
    let mut adj = moral_graph(net);
    let mut remaining: BTreeSet<VarId> = (0..net.len()).collect();
    let mut order = Vec::with_capacity(net.len());
    while !remaining.is_empty() {
        let best = remaining
            .iter()
            .copied()
            .min_by_key(|&v| (fill_in(&adj, v), adj[v].len(), v))
            .expect("non-empty");
        eliminate(&mut adj, best);
        remaining.remove(&best);
        order.push(best);
    }
    order
}

pub(crate) fn is_permutation(order: &[VarId], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}
