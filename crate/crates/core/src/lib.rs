//! Exact inference in Bayesian networks by recursive conditioning.
//!
//! A [`Network`](model::Network) is decomposed by a [`Dtree`](dtree::Dtree),
//! a full binary tree whose leaves carry the network's conditional
//! probability tables. [`rc_query`](engine::rc_query) walks the dtree,
//! conditioning on cutsets and caching subtree results keyed by each node's
//! context. Any subset of caches may be used; only running time changes.
//!
//! ```
//! use recond::dtree::Dtree;
//! use recond::engine::{rc_query, QueryOptions};
//! use recond::fixtures;
//! use recond::model::Evidence;
//!
//! let net = fixtures::chain();
//! let dtree = Dtree::min_fill(&net).unwrap();
//! let c = net.id_of("C").unwrap();
//! let e = Evidence::new().with(c, 1);
//! let r = rc_query(&net, &dtree, &e, &QueryOptions::default(), None).unwrap();
//! assert!((r.probability - 0.6065).abs() < 1e-12);
//! ```
//!
//! Deterministic zeros can be compiled into clauses
//! ([`compile_kb`](kb::compile_kb)); passing the resulting knowledge base to
//! the query lets unit resolution skip cutset instantiations that are known
//! to have probability zero.

pub mod bench;
pub mod dtree;
pub mod engine;
pub mod fixtures;
pub mod kb;
pub mod model;
pub mod oracle;
pub mod random;
pub mod spaces;
mod varset;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/dtrees.md")]
    mod dtrees {}
    #[doc = include_str!("../../../book/src/recursive-conditioning.md")]
    mod recursive_conditioning {}
    #[doc = include_str!("../../../book/src/caching.md")]
    mod caching {}
    #[doc = include_str!("../../../book/src/determinism.md")]
    mod determinism {}
    #[doc = include_str!("../../../book/src/space.md")]
    mod space {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
