//! Fixed benchmark inputs shared by the criterion benches.

use balreg::instances::{gen_knapsack, gen_multirep, CapacityRule};
use balreg::types::{BinarySolution, Budgets, Instance};

/// Seeded selection instance with `n` items split into `parts` partitions.
pub fn selection(n: usize, parts: usize, gamma: usize, gamma_prime: usize) -> Instance {
    gen_multirep(n, parts, 7, Budgets::new(gamma, gamma_prime)).expect("valid generator arguments")
}

pub fn knapsack(n: usize, gamma: usize, gamma_prime: usize) -> Instance {
    gen_knapsack(n, 7, Budgets::new(gamma, gamma_prime), CapacityRule::Half).expect("valid generator arguments")
}

/// The cheapest nominal solution, a typical first iterate.
pub fn nominal_x(inst: &Instance) -> BinarySolution {
    inst.feasible.nominal_solve(inst.c_hat()).expect("feasible instance").0
}
