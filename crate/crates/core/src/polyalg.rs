//! Polynomial special cases of multi-representative selection.

use std::time::Instant;

use crate::adversarial::adversarial_selection_dp;
use crate::error::{input, Error, Result};
use crate::master::SolveReport;
use crate::types::{BinarySolution, FeasibleSet, Instance};

fn selection_parts(inst: &Instance) -> Result<(&[Vec<usize>], &[usize])> {
    match &inst.feasible {
        FeasibleSet::MultiRepSelection { partitions, p } => Ok((partitions, p)),
        _ => input("a multi-representative selection instance is required"),
    }
}

/// Picks, per partition, the `p_ℓ` items that come first under `key`.
fn pick_by<K: Ord>(inst: &Instance, key: impl Fn(usize) -> K) -> Result<BinarySolution> {
    let (partitions, p) = selection_parts(inst)?;
    let mut x = BinarySolution::zeros(inst.n());
    for (items, &q) in partitions.iter().zip(p) {
        let mut order = items.clone();
        order.sort_by_key(|&i| (key(i), i));
        for &i in &order[..q] {
            x.set(i, true);
        }
    }
    Ok(x)
}

/// Classic min-max regret (`Γ' = 0`) by enumerating the kink points of the
/// dual program.
///
/// For dual prices `π ≥ 0` (attack budget) and `κ_ℓ ≥ 0` (partition quota)
/// the program separates by item: leaving item `i` out costs
/// `max(κ_ℓ − ĉ_i, 0)` and taking it costs `ĉ_i + max(d_i − π, κ_ℓ − ĉ_i, 0)`,
/// so each partition takes the `p_ℓ` items with the smallest difference.
/// For fixed `x` the objective is convex piecewise linear in `(π, κ)`, so an
/// optimum sits on a vertex of the breakpoint arrangement. Either `π` is
/// pinned by its own breakpoints (`0`, `d_i`), or one partition pins it
/// through `κ_j + π = ĉ_k + d_k` with `κ_j ∈ {0, ĉ_i}`. In both cases each
/// `κ_ℓ` lies in `{0, ĉ_i, ĉ_i + d_i − π}`.
pub fn solve_regret_budgeted_mrs(inst: &Instance) -> Result<SolveReport> {
    let started = Instant::now();
    let (partitions, p) = selection_parts(inst)?;
    if inst.gamma_prime() != 0 {
        return input("the regret algorithm requires a zero balancing budget");
    }
    let (c, d) = (inst.c_hat(), inst.d());
    let gamma = inst.gamma() as i64;

    let mut pis: Vec<i64> = std::iter::once(0).chain(d.iter().copied()).collect();
    for items in partitions {
        for &k in items {
            pis.push(c[k] + d[k]);
            for &i in items {
                pis.push(c[k] + d[k] - c[i]);
            }
        }
    }
    pis.retain(|&v| v >= 0);
    pis.sort_unstable();
    pis.dedup();

    let mut best: Option<(i64, i64)> = None;
    for &pi in &pis {
        let mut total = gamma * pi;
        for (items, &q) in partitions.iter().zip(p) {
            total += partition_best(items, q, pi, c, d).0;
        }
        if best.is_none_or(|(b, _)| total < b) {
            best = Some((total, pi));
        }
    }
    let (value, pi) = best.expect("π = 0 is always a candidate");
    let mut x = BinarySolution::zeros(inst.n());
    for (items, &q) in partitions.iter().zip(p) {
        let kappa = partition_best(items, q, pi, c, d).1;
        for i in chosen(items, q, pi, kappa, c, d) {
            x.set(i, true);
        }
    }
    let check = adversarial_selection_dp(inst, &x)?.value;
    if check != value {
        return Err(Error::Numerical(format!(
            "kink enumeration value {value} disagrees with evaluation {check}"
        )));
    }
    Ok(SolveReport::exact("regret-poly", x, value, started))
}

fn take_cost(i: usize, pi: i64, kappa: i64, c: &[i64], d: &[i64]) -> i64 {
    c[i] + (d[i] - pi).max(kappa - c[i]).max(0)
}

fn leave_cost(i: usize, kappa: i64, c: &[i64]) -> i64 {
    (kappa - c[i]).max(0)
}

fn chosen(items: &[usize], q: usize, pi: i64, kappa: i64, c: &[i64], d: &[i64]) -> Vec<usize> {
    let mut order = items.to_vec();
    order.sort_by_key(|&i| (take_cost(i, pi, kappa, c, d) - leave_cost(i, kappa, c), i));
    order.truncate(q);
    order
}

/// Minimum over the `κ` candidates of one partition's share; returns the
/// value and the minimizing `κ` (smallest on ties).
fn partition_best(items: &[usize], q: usize, pi: i64, c: &[i64], d: &[i64]) -> (i64, i64) {
    let mut kappas: Vec<i64> = vec![0];
    for &i in items {
        kappas.push(c[i]);
        kappas.push(c[i] + d[i] - pi);
    }
    kappas.retain(|&k| k >= 0);
    kappas.sort_unstable();
    kappas.dedup();
    let mut deltas = Vec::with_capacity(items.len());
    let mut best = (i64::MAX, 0);
    for &kappa in &kappas {
        deltas.clear();
        let mut v = -(q as i64) * kappa;
        for &i in items {
            let leave = leave_cost(i, kappa, c);
            v += leave;
            deltas.push(take_cost(i, pi, kappa, c, d) - leave);
        }
        deltas.select_nth_unstable(q - 1);
        v += deltas[..q].iter().sum::<i64>();
        if v < best.0 {
            best = (v, kappa);
        }
    }
    best
}

/// Returns a solution of balanced regret zero if one exists.
///
/// The candidate takes, per partition, the `p_ℓ` items with the smallest
/// `ĉ + d` (then `ĉ`, then index).
pub fn check_zero_solution(inst: &Instance) -> Result<Option<BinarySolution>> {
    selection_parts(inst)?;
    if inst.gamma() < 1 || inst.gamma_prime() < 1 {
        return input("the zero check requires both budgets to be at least one");
    }
    let (c, d) = (inst.c_hat(), inst.d());
    let x = pick_by(inst, |i| (c[i] + d[i], c[i]))?;
    let value = adversarial_selection_dp(inst, &x)?.value;
    Ok((value == 0).then_some(x))
}

/// Precedences implied by item dominance, and the variables they force.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dominance {
    /// `(i, j)`: some optimal solution has `x_i ≥ x_j`. Only the transitive
    /// reduction is listed.
    pub precedences: Vec<(usize, usize)>,
    /// `Some(true)` forced in, `Some(false)` forced out.
    pub forced: Vec<Option<bool>>,
}

impl Dominance {
    pub fn forced_in(&self) -> Vec<usize> {
        (0..self.forced.len()).filter(|&i| self.forced[i] == Some(true)).collect()
    }

    pub fn forced_out(&self) -> Vec<usize> {
        (0..self.forced.len()).filter(|&i| self.forced[i] == Some(false)).collect()
    }
}

/// `i` dominates `j` when it is no more expensive both nominally and when
/// deviating; full ties go to the lower index.
fn dominates(i: usize, j: usize, c: &[i64], d: &[i64]) -> bool {
    let (ui, uj) = (c[i] + d[i], c[j] + d[j]);
    i != j && c[i] <= c[j] && ui <= uj && (c[i] < c[j] || ui < uj || i < j)
}

pub fn dominance_reduce(inst: &Instance) -> Result<Dominance> {
    let (partitions, p) = selection_parts(inst)?;
    let (c, d) = (inst.c_hat(), inst.d());
    let mut out = Dominance {
        precedences: Vec::new(),
        forced: vec![None; inst.n()],
    };
    for (items, &q) in partitions.iter().zip(p) {
        for &j in items {
            let above = items.iter().filter(|&&i| dominates(i, j, c, d)).count();
            if above >= q {
                out.forced[j] = Some(false);
            }
            let below = items.iter().filter(|&&k| dominates(j, k, c, d)).count();
            if items.len() - 1 - below < q {
                out.forced[j] = Some(true);
            }
        }
        for &i in items {
            for &j in items {
                if !dominates(i, j, c, d) {
                    continue;
                }
                let implied = items
                    .iter()
                    .any(|&k| dominates(i, k, c, d) && dominates(k, j, c, d));
                if !implied {
                    out.precedences.push((i, j));
                }
            }
        }
    }
    out.precedences.sort_unstable();
    Ok(out)
}

/// Shortcut when `ĉ` or `d` is constant: take the smallest values of the
/// other vector per partition.
pub fn solve_constant_case(inst: &Instance) -> Result<Option<SolveReport>> {
    let started = Instant::now();
    selection_parts(inst)?;
    let (c, d) = (inst.c_hat(), inst.d());
    let constant = |v: &[i64]| v.iter().all(|&a| a == v[0]);
    let x = if constant(c) {
        pick_by(inst, |i| d[i])?
    } else if constant(d) {
        pick_by(inst, |i| c[i])?
    } else {
        return Ok(None);
    };
    let value = adversarial_selection_dp(inst, &x)?.value;
    Ok(Some(SolveReport::exact("constant-case", x, value, started)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Budgets, ItemCosts};

    fn selection(c: Vec<i64>, d: Vec<i64>, p: usize, g: usize, gp: usize) -> Instance {
        let n = c.len();
        Instance::new(
            "t",
            ItemCosts::new(c, d).unwrap(),
            Budgets::new(g, gp),
            FeasibleSet::MultiRepSelection {
                partitions: vec![(0..n).collect()],
                p: vec![p],
            },
        )
        .unwrap()
    }

    fn second() -> Instance {
        selection(vec![3, 2, 1, 4, 4, 4], vec![2, 4, 4, 0, 0, 0], 3, 2, 1)
    }

    #[test]
    fn regret_second_example() {
        let inst = second().with_budgets(2, 0).unwrap();
        let r = solve_regret_budgeted_mrs(&inst).unwrap();
        assert_eq!(r.value, 3);
        assert_eq!(r.x.indices(), vec![0, 1, 2]);
        assert!(solve_regret_budgeted_mrs(&second()).is_err());
    }

    #[test]
    fn regret_without_deviations() {
        let inst = selection(vec![5, 1, 4, 2], vec![0; 4], 2, 3, 0);
        let r = solve_regret_budgeted_mrs(&inst).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.x.indices(), vec![1, 3]);
    }

    #[test]
    fn zero_check_examples() {
        let inst = selection(vec![1, 1, 5, 5], vec![1, 1, 5, 5], 2, 1, 1);
        assert_eq!(check_zero_solution(&inst).unwrap().unwrap().indices(), vec![0, 1]);
        let first = selection(vec![8, 5, 2, 17, 15], vec![9, 14, 15, 12, 1], 2, 1, 1);
        assert!(check_zero_solution(&first).unwrap().is_none());
        let flat = selection(vec![4, 2, 3, 1], vec![0; 4], 2, 1, 2);
        assert_eq!(check_zero_solution(&flat).unwrap().unwrap().indices(), vec![1, 3]);
        assert!(check_zero_solution(&first.with_budgets(0, 1).unwrap()).is_err());
    }

    #[test]
    fn dominance_examples() {
        let inst = selection(vec![1, 2], vec![1, 1], 1, 1, 1);
        let dom = dominance_reduce(&inst).unwrap();
        assert_eq!(dom.precedences, vec![(0, 1)]);
        assert_eq!(dom.forced_in(), vec![0]);
        assert_eq!(dom.forced_out(), vec![1]);
        let dom = dominance_reduce(&second()).unwrap();
        assert!(dom.precedences.contains(&(2, 1)));
        // items 4..6 tie completely: a chain by index, no cycle
        assert!(dom.precedences.contains(&(3, 4)));
        assert!(!dom.precedences.contains(&(4, 3)));
        assert!(!dom.precedences.contains(&(3, 5)));
    }

    #[test]
    fn constant_vectors() {
        let inst = selection(vec![5, 5, 5, 5], vec![4, 1, 3, 2], 2, 1, 1);
        let r = solve_constant_case(&inst).unwrap().unwrap();
        assert_eq!(r.x.indices(), vec![1, 3]);
        let inst = selection(vec![5, 1, 3, 2], vec![0; 4], 2, 1, 1);
        let r = solve_constant_case(&inst).unwrap().unwrap();
        assert_eq!((r.x.indices(), r.value), (vec![1, 3], 0));
        assert!(solve_constant_case(&second()).unwrap().is_none());
    }
}
