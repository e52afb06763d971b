//! Seeded random networks and evidence for benchmarks and property tests.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Cpt, Evidence, Network, NoisyOrCpt, TabularCpt, Variable};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub min_vars: usize,
    pub max_vars: usize,
    pub max_states: usize,
    pub max_parents: usize,
    /// Probability that any given table cell is forced to zero.
    pub determinism: f64,
    /// Probability that a binary child with parents gets a noisy-or CPT.
    pub noisy_or: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            min_vars: 1,
            max_vars: 10,
            max_states: 4,
            max_parents: 3,
            determinism: 0.0,
            noisy_or: 0.1,
        }
    }
}

pub fn random_network(params: &NetworkParams, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = params.min_vars.max(1);
    let n = rng.gen_range(lo..=params.max_vars.max(lo));
    let max_states = params.max_states.max(1);

    let cards: Vec<usize> = (0..n)
        .map(|_| {
            if max_states == 1 || rng.gen_bool(0.05) {
                1
            } else {
                rng.gen_range(2..=max_states)
            }
        })
        .collect();
    let variables: Vec<Variable> = cards
        .iter()
        .enumerate()
        .map(|(id, &c)| Variable {
            id,
            name: format!("V{id}"),
            states: (0..c).map(|s| format!("s{s}")).collect(),
        })
        .collect();

    let mut cpts = Vec::with_capacity(n);
    for child in 0..n {
        let k = rng.gen_range(0..=params.max_parents.min(child));
        let mut parents: Vec<usize> = sample(&mut rng, child.max(1), k).into_vec();
        parents.sort_unstable();
        if cards[child] == 2 && k > 0 && rng.gen_bool(params.noisy_or.clamp(0.0, 1.0)) {
            let trigger = parents.iter().map(|&p| rng.gen_range(0..cards[p])).collect();
            let inhibitor = (0..k).map(|_| rng.gen::<f64>()).collect();
            let leak = rng.gen::<f64>() * 0.2;
            cpts.push(Cpt::NoisyOr(NoisyOrCpt {
                child,
                parents,
                trigger,
                inhibitor,
                leak,
            }));
            continue;
        }
        let rows: usize = parents.iter().map(|&p| cards[p]).product();
        let mut entries = Vec::with_capacity(rows * cards[child]);
        for _ in 0..rows {
            entries.extend(random_row(&mut rng, cards[child], params.determinism));
        }
        cpts.push(Cpt::Table(TabularCpt::new(child, parents, entries, &cards)));
    }
    Network::new(variables, cpts).expect("generated network is valid")
}

fn random_row(rng: &mut impl Rng, card: usize, determinism: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..card)
        .map(|_| {
            if rng.gen_bool(determinism.clamp(0.0, 1.0)) {
                0.0
            } else {
                rng.gen_range(0.05..1.0)
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..card)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Draws a forward sample and keeps each variable with probability
/// `fraction`. A quarter of the kept values are replaced by a uniformly random
/// state, so some evidence has probability zero.
pub fn random_evidence(net: &Network, fraction: f64, seed: u64) -> Evidence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let sample = forward_sample(net, &mut rng);
    let mut ev = Evidence::new();
    for (v, s) in sample.into_iter().enumerate() {
        if rng.gen_bool(fraction.clamp(0.0, 1.0)) {
            let s = if rng.gen_bool(0.25) {
                rng.gen_range(0..net.cardinality(v))
            } else {
                s
            };
            ev.set(v, s);
        }
    }
    ev
}

/// One complete instantiation drawn from the joint distribution. Relies on
/// parents having smaller ids than children, which holds for generated
/// networks; other networks are sampled in topological order.
pub fn forward_sample(net: &Network, rng: &mut impl Rng) -> Vec<usize> {
    let order = topological_order(net);
    let mut a: Vec<Option<usize>> = vec![None; net.len()];
    for v in order {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let card = net.cardinality(v);
        let mut chosen = card - 1;
        for s in 0..card {
            let p = net.cpt(v).prob_in(s, &a).expect("parents sampled first");
            acc += p;
            if u < acc && p > 0.0 {
                chosen = s;
                break;
            }
        }
        // Guard against rounding landing on a zero-probability tail state.
        if net.cpt(v).prob_in(chosen, &a).unwrap_or(0.0) == 0.0 {
            chosen = (0..card)
                .rev()
                .find(|&s| net.cpt(v).prob_in(s, &a).unwrap_or(0.0) > 0.0)
                .unwrap_or(chosen);
        }
        a[v] = Some(chosen);
    }
    a.into_iter().map(|s| s.expect("all sampled")).collect()
}

fn topological_order(net: &Network) -> Vec<usize> {
    let n = net.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        for v in 0..n {
            if !placed[v] && net.parents(v).iter().all(|&p| placed[p]) {
                placed[v] = true;
                order.push(v);
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let p = NetworkParams {
            determinism: 0.5,
            ..Default::default()
        };
        assert_eq!(random_network(&p, 7), random_network(&p, 7));
        let net = random_network(&p, 7);
        assert_eq!(random_evidence(&net, 0.3, 1), random_evidence(&net, 0.3, 1));
    }

    #[test]
    fn determinism_produces_zero_cells() {
        let p = NetworkParams {
            min_vars: 6,
            determinism: 0.5,
            noisy_or: 0.0,
            ..Default::default()
        };
        let zeros: usize = (0..20)
            .map(|seed| {
                let net = random_network(&p, seed);
                net.cpts()
                    .iter()
                    .map(|c| match c {
                        Cpt::Table(t) => t.entries.iter().filter(|&&e| e == 0.0).count(),
                        Cpt::NoisyOr(_) => 0,
                    })
                    .sum::<usize>()
            })
            .sum();
        assert!(zeros > 0);
    }
}
