use std::fmt;
use std::str::FromStr;

use crate::dtree::{CacheState, Dtree, NodeId};

/// Which caches a query may use. Dead caches stay off under every policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    Full,
    None,
    /// Enable the smallest live caches first until the cell budget is spent.
    Budget(u64),
}

impl FromStr for CachePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(CachePolicy::Full),
            "none" => Ok(CachePolicy::None),
            _ => s
                .strip_prefix("budget:")
                .and_then(|n| n.parse().ok())
                .map(CachePolicy::Budget)
                .ok_or_else(|| format!("expected full, none or budget:N, got `{s}`")),
        }
    }
}

impl fmt::Display for CachePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CachePolicy::Full => f.write_str("full"),
            CachePolicy::None => f.write_str("none"),
            CachePolicy::Budget(n) => write!(f, "budget:{n}"),
        }
    }
}

/// Per-node cache states for one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachePlan {
    states: Vec<CacheState>,
    cells: u64,
}

impl CachePlan {
    pub fn state(&self, id: NodeId) -> CacheState {
        self.states[id]
    }

    pub fn states(&self) -> &[CacheState] {
        &self.states
    }

    /// Total cells of the enabled caches.
    pub fn cells(&self) -> u64 {
        self.cells
    }
}

pub fn apply_policy(dtree: &Dtree, policy: CachePolicy) -> CachePlan {
    let size = |id: NodeId| dtree.instantiations(&dtree.node(id).context);
    let mut states: Vec<CacheState> = dtree
        .nodes()
        .iter()
        .map(|n| match n.cache {
            CacheState::Dead => CacheState::Dead,
            _ => CacheState::Disabled,
        })
        .collect();
    let mut candidates: Vec<NodeId> = dtree
        .nodes()
        .iter()
        .filter(|n| n.cache == CacheState::Live && dtree.is_cacheable(n.id))
        .map(|n| n.id)
        .collect();
    let budget = match policy {
        CachePolicy::Full => u64::MAX,
        CachePolicy::None => 0,
        CachePolicy::Budget(n) => n,
    };
    candidates.sort_by_key(|&id| (size(id), id));
    let mut cells = 0u64;
    for id in candidates {
        let s = size(id);
        match cells.checked_add(s) {
            Some(total) if total <= budget => {
                cells = total;
                states[id] = CacheState::Live;
            }
            _ => break,
        }
    }
    CachePlan { states, cells }
}
