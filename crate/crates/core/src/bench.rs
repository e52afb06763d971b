//! Paired KB-off / KB-on runs over seeded random networks.

use rayon::prelude::*;
use serde::Serialize;

use crate::dtree::Dtree;
use crate::engine::{rc_query, QueryOptions};
use crate::kb::compile_kb;
use crate::oracle::brute_force_probability;
use crate::random::{random_evidence, random_network, NetworkParams};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub instances: usize,
    pub network: NetworkParams,
    pub evidence_fraction: f64,
    pub seed: u64,
    pub oracle: bool,
    pub options: QueryOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            instances: 10,
            network: NetworkParams::default(),
            evidence_fraction: 0.3,
            seed: 0,
            oracle: false,
            options: QueryOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchLine {
    pub instance: usize,
    pub seed: u64,
    pub variables: usize,
    pub width: usize,
    pub clauses: usize,
    pub probability_kb_off: f64,
    pub probability_kb_on: f64,
    pub agree: bool,
    pub rc_calls_kb_off: u64,
    pub rc_calls_kb_on: u64,
    /// `rc_calls_kb_off / rc_calls_kb_on`; null when the KB refuted the
    /// evidence and made no calls.
    pub ratio: Option<f64>,
    pub kb_skips: u64,
    pub kb_evidence_contradiction: bool,
    /// `|rc - enumeration|`, when requested and the state space permits.
    pub oracle_delta: Option<f64>,
    pub error: Option<String>,
}

/// Seed for instance `i` of a run started with `seed`.
pub fn instance_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64)
}

/// Runs every instance, in parallel, returning lines in instance order.
pub fn run_bench(config: &BenchConfig) -> Vec<BenchLine> {
    (0..config.instances)
        .into_par_iter()
        .map(|i| run_instance(config, i))
        .collect()
}

pub fn run_instance(config: &BenchConfig, i: usize) -> BenchLine {
    let seed = instance_seed(config.seed, i);
    let net = random_network(&config.network, seed);
    let evidence = random_evidence(&net, config.evidence_fraction, seed ^ 0xe71d);
    let mut line = BenchLine {
        instance: i,
        seed,
        variables: net.len(),
        width: 0,
        clauses: 0,
        probability_kb_off: f64::NAN,
        probability_kb_on: f64::NAN,
        agree: false,
        rc_calls_kb_off: 0,
        rc_calls_kb_on: 0,
        ratio: None,
        kb_skips: 0,
        kb_evidence_contradiction: false,
        oracle_delta: None,
        error: None,
    };
    let outcome = (|| -> Result<(), String> {
        let dtree = Dtree::min_fill(&net).map_err(|e| e.to_string())?;
        line.width = dtree.stats().map_err(|e| e.to_string())?.width;
        let mut kb = compile_kb(&net);
        line.clauses = kb.stats().clauses;
        let off = rc_query(&net, &dtree, &evidence, &config.options, None).map_err(|e| e.to_string())?;
        let on = rc_query(&net, &dtree, &evidence, &config.options, Some(&mut kb))
            .map_err(|e| e.to_string())?;
        line.probability_kb_off = off.probability;
        line.probability_kb_on = on.probability;
        line.agree = (off.probability - on.probability).abs() <= 1e-12 * off.probability.max(1.0);
        line.rc_calls_kb_off = off.rc_calls;
        line.rc_calls_kb_on = on.rc_calls;
        line.ratio = (on.rc_calls > 0).then(|| off.rc_calls as f64 / on.rc_calls as f64);
        line.kb_skips = on.kb.skips;
        line.kb_evidence_contradiction = on.kb_evidence_contradiction;
        if config.oracle {
            if let Ok(truth) = brute_force_probability(&net, &evidence) {
                line.oracle_delta = Some((off.probability - truth).abs());
            }
        }
        Ok(())
    })();
    line.error = outcome.err();
    line
}
