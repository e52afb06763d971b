//! Enumeration oracles. They share nothing with the recursive-conditioning
//! path except [`Network::cpt_prob`], and are meant for checking small
//! networks only.

use thiserror::Error;

use crate::kb::Literal;
use crate::model::{advance, Evidence, Network};

/// Largest joint state space the oracles will enumerate.
pub const MAX_STATES: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("joint state space has {0} instantiations, limit is {MAX_STATES}")]
    TooLarge(u64),
    #[error("evidence is out of range")]
    BadEvidence,
}

fn check_size(net: &Network) -> Result<(), OracleError> {
    let all: Vec<usize> = (0..net.len()).collect();
    let size = net.instantiations(&all);
    if size > MAX_STATES {
        Err(OracleError::TooLarge(size))
    } else {
        Ok(())
    }
}

fn joint(net: &Network, inst: &[usize]) -> f64 {
    let a: Vec<Option<usize>> = inst.iter().map(|&s| Some(s)).collect();
    (0..net.len())
        .map(|v| net.cpt_prob(v, inst[v], &a).expect("complete instantiation"))
        .product()
}

/// `Pr(e)` by summing the joint over every complete instantiation that agrees
/// with the evidence.
pub fn brute_force_probability(net: &Network, evidence: &Evidence) -> Result<f64, OracleError> {
    evidence.validate(net).map_err(|_| OracleError::BadEvidence)?;
    check_size(net)?;
    let cards = net.cardinalities();
    let mut inst = vec![0usize; net.len()];
    let mut total = 0.0;
    loop {
        if evidence.iter().all(|(v, s)| inst[v] == s) {
            total += joint(net, &inst);
        }
        if !advance(&mut inst, cards) {
            break;
        }
    }
    Ok(total)
}

/// Whether some complete instantiation satisfying every literal has nonzero
/// probability.
pub fn is_consistent_extension(net: &Network, literals: &[Literal]) -> Result<bool, OracleError> {
    check_size(net)?;
    let cards = net.cardinalities();
    let mut inst = vec![0usize; net.len()];
    loop {
        let agrees = literals
            .iter()
            .all(|l| (inst[l.var] == l.state) == l.positive);
        if agrees && joint(net, &inst) > 0.0 {
            return Ok(true);
        }
        if !advance(&mut inst, cards) {
            return Ok(false);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn empty_evidence_sums_to_one() {
        for net in [fixtures::chain(), fixtures::deterministic_example(), fixtures::noisy_or_star(4, 0.2)] {
            let p = brute_force_probability(&net, &Evidence::new()).unwrap();
            assert!((p - 1.0).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn single_prior() {
        let net = fixtures::single_variable();
        assert_eq!(brute_force_probability(&net, &Evidence::new().with(0, 0)).unwrap(), 0.4);
    }

    #[test]
    fn chain_by_hand() {
        // Pr(C=1) = Σ_b Pr(b) Pr(C=1|b); Pr(B=0) = .3*.9 + .7*.2 = .41
        // Pr(C=1) = .41*.4 + .59*.75 = .164 + .4425 = .6065
        let net = fixtures::chain();
        let p = brute_force_probability(&net, &Evidence::new().with(2, 1)).unwrap();
        assert!((p - 0.6065).abs() < 1e-12);
        // Pr(A=1, C=0) = .7 * (.2*.6 + .8*.25) = .7 * .32 = .224
        let p = brute_force_probability(&net, &Evidence::new().with(0, 1).with(2, 0)).unwrap();
        assert!((p - 0.224).abs() < 1e-12);
    }

    #[test]
    fn consistency_on_the_deterministic_example() {
        let net = fixtures::deterministic_example();
        let zero = [Literal::eq(0, 0), Literal::eq(1, 0), Literal::eq(2, 1)];
        assert!(!is_consistent_extension(&net, &zero).unwrap());
        assert!(is_consistent_extension(&fixtures::chain(), &[]).unwrap());
    }

    #[test]
    fn refuses_large_spaces() {
        let net = fixtures::noisy_or_star(16, 0.0);
        assert!(matches!(
            brute_force_probability(&net, &Evidence::new()),
            Err(OracleError::TooLarge(_))
        ));
    }
}
