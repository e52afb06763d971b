//! Small hand-built networks used by the tests, the guide and the CLI.

use crate::model::{Cpt, Network, NoisyOrCpt, TabularCpt, Variable};

fn var(id: usize, name: &str, states: &[&str]) -> Variable {
    Variable {
        id,
        name: name.to_string(),
        states: states.iter().map(|s| s.to_string()).collect(),
    }
}

fn table(child: usize, parents: &[usize], entries: &[f64], cards: &[usize]) -> Cpt {
    Cpt::Table(TabularCpt::new(child, parents.to_vec(), entries.to_vec(), cards))
}

/// The 12-row deterministic table for `Pr(C | A, B)` with A, B over {1, 2}
/// and C over {1, 2, 3}.
pub const DETERMINISTIC_C_TABLE: [f64; 12] = [
    1.0, 0.0, 0.0, //
    0.0, 1.0, 0.0, //
    0.2, 0.8, 0.0, //
    0.7, 0.3, 0.0,
];

/// A → C ← B with `Pr(A=1) = 0.6`, `Pr(B=1) = 0.5` and
/// [`DETERMINISTIC_C_TABLE`] for C.
pub fn deterministic_example() -> Network {
    let vars = vec![
        var(0, "A", &["1", "2"]),
        var(1, "B", &["1", "2"]),
        var(2, "C", &["1", "2", "3"]),
    ];
    let cards = [2, 2, 3];
    let cpts = vec![
        table(0, &[], &[0.6, 0.4], &cards),
        table(1, &[], &[0.5, 0.5], &cards),
        table(2, &[0, 1], &DETERMINISTIC_C_TABLE, &cards),
    ];
    Network::new(vars, cpts).expect("fixture is valid")
}

/// Binary chain A → B → C.
pub fn chain() -> Network {
    let vars = vec![
        var(0, "A", &["0", "1"]),
        var(1, "B", &["0", "1"]),
        var(2, "C", &["0", "1"]),
    ];
    let cards = [2, 2, 2];
    let cpts = vec![
        table(0, &[], &[0.3, 0.7], &cards),
        table(1, &[0], &[0.9, 0.1, 0.2, 0.8], &cards),
        table(2, &[1], &[0.6, 0.4, 0.25, 0.75], &cards),
    ];
    Network::new(vars, cpts).expect("fixture is valid")
}

/// One binary variable with prior `[0.4, 0.6]`.
pub fn single_variable() -> Network {
    let vars = vec![var(0, "X", &["0", "1"])];
    let cpts = vec![table(0, &[], &[0.4, 0.6], &[2])];
    Network::new(vars, cpts).expect("fixture is valid")
}

/// Ternary roots `X1..Xn` (uniform priors) all feeding a binary noisy-or
/// child `Y`, triggered by each parent's last state. Inhibitors cycle through
/// a few distinct values so that parents are not interchangeable.
pub fn noisy_or_star(n: usize, leak: f64) -> Network {
    let mut vars: Vec<Variable> = (0..n)
        .map(|i| var(i, &format!("X{}", i + 1), &["0", "1", "2"]))
        .collect();
    vars.push(var(n, "Y", &["false", "true"]));
    let mut cards = vec![3; n];
    cards.push(2);
    let third = 1.0 / 3.0;
    let mut cpts: Vec<Cpt> = (0..n)
        .map(|i| table(i, &[], &[third, third, 1.0 - 2.0 * third], &cards))
        .collect();
    cpts.push(Cpt::NoisyOr(NoisyOrCpt {
        child: n,
        parents: (0..n).collect(),
        trigger: vec![2; n],
        inhibitor: (0..n).map(|i| [0.4, 0.5, 0.6, 0.7][i % 4]).collect(),
        leak,
    }));
    Network::new(vars, cpts).expect("fixture is valid")
}

/// Right-linear shape `(X1 (X2 (... (Xn Y))))` for [`noisy_or_star`].
pub fn right_linear_star_shape(n: usize) -> String {
    let mut s = "Y".to_string();
    for i in (1..=n).rev() {
        s = format!("(X{i} {s})");
    }
    s
}
