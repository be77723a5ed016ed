//! The innermost stage: after seeing `(y, δ)`, the decision maker raises up
//! to `Γ'` of the adversary's item costs.

use crate::error::{input, Result};
use crate::types::{BinarySolution, ItemCosts, Scenario};

/// `Σ (ĉ_i + d_i δ_i + d_i ε_i)(x_i - y_i)`.
pub fn outcome_value(
    costs: &ItemCosts,
    x: &BinarySolution,
    y: &BinarySolution,
    delta: &Scenario,
    epsilon: &Scenario,
) -> i64 {
    let (c, d) = (costs.c_hat(), costs.d());
    (0..costs.len())
        .map(|i| {
            let diff = i64::from(x.get(i)) - i64::from(y.get(i));
            if diff == 0 {
                return 0;
            }
            let mut cost = c[i];
            if delta.get(i) {
                cost += d[i];
            }
            if epsilon.get(i) {
                cost += d[i];
            }
            cost * diff
        })
        .sum()
}

/// Greedy optimal balancing response. Only items with `x_i = 0`, `y_i = 1`
/// and `d_i > 0` lower the value; the `Γ'` largest deviations among them
/// are attacked, ties to the lower index.
pub fn solve_balancing(
    costs: &ItemCosts,
    gamma_prime: usize,
    x: &BinarySolution,
    delta: &Scenario,
    y: &BinarySolution,
) -> Result<(Scenario, i64)> {
    let n = costs.len();
    if x.len() != n || y.len() != n || delta.len() != n {
        return input(format!(
            "balancing expects vectors of length {n}, got x={}, y={}, delta={}",
            x.len(),
            y.len(),
            delta.len()
        ));
    }
    let epsilon = greedy_epsilon(costs.d(), gamma_prime, x, y);
    let value = outcome_value(costs, x, y, delta, &epsilon);
    Ok((epsilon, value))
}

pub(crate) fn greedy_epsilon(
    d: &[i64],
    gamma_prime: usize,
    x: &BinarySolution,
    y: &BinarySolution,
) -> Scenario {
    let mut cand: Vec<usize> = (0..d.len())
        .filter(|&i| !x.get(i) && y.get(i) && d[i] > 0)
        .collect();
    cand.sort_by_key(|&i| (std::cmp::Reverse(d[i]), i));
    let mut eps = Scenario::zeros(d.len());
    for &i in cand.iter().take(gamma_prime) {
        eps.set(i, true);
    }
    eps
}
