//! The adversarial problem: for a fixed first-stage `x`, the worst
//! `(y, δ)` followed by the best balancing `ε`.
//!
//! Three interchangeable evaluators are provided. Attacks by the adversary
//! are only value-bearing on items with `x_i = 1, y_i = 0, d_i > 0`, so every
//! evaluator restricts `δ` to those items.

use serde::{Deserialize, Serialize};

use crate::balancing::{outcome_value, solve_balancing};
use crate::error::{input, Error, Result};
use crate::milp::{solve_milp, MilpModel, MilpStatus, ObjSense, Sense, SolveOptions, VarId};
use crate::types::{AdversaryCertificate, BinarySolution, FeasibleSet, Instance, Scenario};

/// Largest `|X|` the brute-force evaluators will enumerate.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

/// Candidate values of the balancing dual variable `s`: `{0} ∪ {d_i}`,
/// sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SGrid {
    values: Vec<i64>,
}

impl SGrid {
    pub fn new(d: &[i64]) -> Self {
        let mut values: Vec<i64> = std::iter::once(0).chain(d.iter().copied()).collect();
        values.sort_unstable();
        values.dedup();
        Self { values }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// The grid points that can attain the balancing minimum for budget `Γ'`.
    /// With `Γ' = 0` the term `Γ's` vanishes and the largest point dominates.
    pub fn relevant(&self, gamma_prime: usize) -> &[i64] {
        if gamma_prime == 0 {
            &self.values[self.values.len() - 1..]
        } else {
            &self.values
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryMethod {
    /// Selection instances use the dynamic program, everything else the MILP.
    #[default]
    Auto,
    Dp,
    Milp,
    Bruteforce,
}

impl AdversaryMethod {
    pub fn name(self) -> &'static str {
        match self {
            AdversaryMethod::Auto => "auto",
            AdversaryMethod::Dp => "dp",
            AdversaryMethod::Milp => "milp",
            AdversaryMethod::Bruteforce => "bruteforce",
        }
    }
}

/// Evaluates `x` with the chosen method.
pub fn evaluate(
    inst: &Instance,
    x: &BinarySolution,
    method: AdversaryMethod,
) -> Result<AdversaryCertificate> {
    match method {
        AdversaryMethod::Auto if inst.is_selection() => adversarial_selection_dp(inst, x),
        AdversaryMethod::Auto | AdversaryMethod::Milp => adversarial_milp(inst, x),
        AdversaryMethod::Dp => adversarial_selection_dp(inst, x),
        AdversaryMethod::Bruteforce => adversarial_bruteforce(inst, x),
    }
}

/// The value of `x` (its balanced regret).
pub fn adversarial_value(inst: &Instance, x: &BinarySolution) -> Result<i64> {
    Ok(evaluate(inst, x, AdversaryMethod::Auto)?.value)
}

fn certificate(
    inst: &Instance,
    x: &BinarySolution,
    y: BinarySolution,
    delta: Scenario,
    optimal: bool,
) -> Result<AdversaryCertificate> {
    let (epsilon, value) = solve_balancing(&inst.costs, inst.gamma_prime(), x, &delta, &y)?;
    Ok(AdversaryCertificate {
        value,
        y,
        delta,
        epsilon,
        optimal,
    })
}

/// Items whose attack changes the value, largest deviation first, ties by
/// index.
fn attackable(inst: &Instance, x: &BinarySolution, y: &BinarySolution) -> Vec<usize> {
    let d = inst.d();
    let mut items: Vec<usize> = (0..inst.n())
        .filter(|&i| x.get(i) && !y.get(i) && d[i] > 0)
        .collect();
    items.sort_by_key(|&i| (std::cmp::Reverse(d[i]), i));
    items
}

/// Calls `f` on every `k`-subset of `items`, in lexicographic position order.
fn for_each_subset(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        let need = k - cur.len();
        for i in start..=items.len() - need {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, f);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::with_capacity(k), f);
}

/// Exhaustive maximization over all feasible `y` and all maximal attacks.
pub fn adversarial_bruteforce(inst: &Instance, x: &BinarySolution) -> Result<AdversaryCertificate> {
    inst.check_solution(x)?;
    if inst.feasible.count_feasible(ENUMERATION_LIMIT).is_none() {
        return Err(Error::Scale(format!(
            "more than {ENUMERATION_LIMIT} feasible solutions to enumerate"
        )));
    }
    let n = inst.n();
    let gp = inst.gamma_prime();
    let mut best: Option<(i64, BinarySolution, Scenario)> = None;
    inst.feasible.visit(&mut |y| {
        let items = attackable(inst, x, y);
        let k = inst.gamma().min(items.len());
        let eps = crate::balancing::greedy_epsilon(inst.d(), gp, x, y);
        for_each_subset(&items, k, &mut |chosen| {
            let mut delta = Scenario::zeros(n);
            for &i in chosen {
                delta.set(i, true);
            }
            let v = outcome_value(&inst.costs, x, y, &delta, &eps);
            if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
                best = Some((v, y.clone(), delta));
            }
        });
        true
    });
    let (_, y, delta) = best.ok_or_else(|| Error::Infeasible("no feasible solution".into()))?;
    certificate(inst, x, y, delta, true)
}

/// Builds the dualized adversarial model. Returns the model, the `y` and `δ`
/// variables, and the constant `ĉ · x` left out of the objective.
pub fn build_adversarial_model(
    inst: &Instance,
    x: &BinarySolution,
) -> (MilpModel, Vec<VarId>, Vec<VarId>, i64) {
    let n = inst.n();
    let (c, d) = (inst.c_hat(), inst.d());
    let mut m = MilpModel::new();
    let y: Vec<VarId> = (0..n).map(|_| m.add_binary()).collect();
    let delta: Vec<VarId> = (0..n).map(|_| m.add_binary()).collect();
    let s = m.add_continuous(0.0, f64::INFINITY);
    let t: Vec<VarId> = (0..n)
        .map(|_| m.add_continuous(0.0, f64::INFINITY))
        .collect();
    for i in 0..n {
        m.set_name(y[i], format!("y{i}"));
        m.set_name(delta[i], format!("delta{i}"));
        m.set_name(t[i], format!("t{i}"));
    }
    m.set_name(s, "s");
    let mut obj = Vec::with_capacity(3 * n + 1);
    for i in 0..n {
        let xi = i64::from(x.get(i));
        if xi == 1 && d[i] > 0 {
            obj.push((delta[i], d[i] as f64));
        }
        obj.push((y[i], -(c[i] as f64)));
        obj.push((t[i], -1.0));
        if d[i] > 0 {
            m.add_constraint(
                vec![(s, 1.0), (t[i], 1.0), (y[i], -(d[i] as f64))],
                Sense::Ge,
                -((d[i] * xi) as f64),
            );
        }
        m.add_constraint(vec![(y[i], 1.0), (delta[i], 1.0)], Sense::Le, 1.0);
    }
    obj.push((s, -(inst.gamma_prime() as f64)));
    m.add_constraint(
        delta.iter().map(|&v| (v, 1.0)).collect(),
        Sense::Le,
        inst.gamma() as f64,
    );
    inst.feasible.encode(&mut m, &y);
    m.set_objective(ObjSense::Maximize, obj);
    (m, y, delta, x.dot(c))
}

/// Exact evaluation through the dualized MILP.
pub fn adversarial_milp(inst: &Instance, x: &BinarySolution) -> Result<AdversaryCertificate> {
    adversarial_milp_with(inst, x, &SolveOptions::default())
}

pub fn adversarial_milp_with(
    inst: &Instance,
    x: &BinarySolution,
    opts: &SolveOptions,
) -> Result<AdversaryCertificate> {
    inst.check_solution(x)?;
    let (model, yv, dv, _) = build_adversarial_model(inst, x);
    let res = solve_milp(&model, opts)?;
    if !res.has_solution() {
        return Err(match res.status {
            MilpStatus::Infeasible => Error::Infeasible("adversarial model is infeasible".into()),
            other => Error::Numerical(format!("adversarial model ended with {other:?}")),
        });
    }
    let n = inst.n();
    let raw_y = BinarySolution::from_bits(yv.iter().map(|v| res.assignment[v.0] > 0.5).collect());
    let y = inst.feasible.canonicalize(&raw_y);
    let d = inst.d();
    let mut delta = Scenario::zeros(n);
    for i in 0..n {
        if res.assignment[dv[i].0] > 0.5 && x.get(i) && !y.get(i) && d[i] > 0 {
            delta.set(i, true);
        }
    }
    let cert = certificate(inst, x, y, delta, res.status == MilpStatus::Optimal)?;
    if cert.optimal {
        let expected = res.rounded() + x.dot(inst.c_hat());
        if cert.value != expected {
            return Err(Error::Numerical(format!(
                "adversarial MILP value {expected} disagrees with its certificate {}",
                cert.value
            )));
        }
    }
    Ok(cert)
}

const NEG: i64 = i64::MIN / 4;

/// Per-partition table for a fixed `s`: `best[a]` is the largest
/// `Σ gains − Σ y-costs` with exactly `a` attacks and exactly `p` selections.
struct PartTable {
    best: Vec<i64>,
    /// `choice[(pos * (p + 1) + j) * (amax + 1) + a]`: 0 skip, 1 select, 2 attack.
    choice: Vec<u8>,
    p: usize,
    amax: usize,
}

fn part_table(items: &[usize], p: usize, amax: usize, gain: &[i64], ycost: &[i64]) -> PartTable {
    let w = amax + 1;
    let stride = (p + 1) * w;
    let mut cur = vec![NEG; stride];
    cur[0] = 0;
    let mut choice = vec![0u8; items.len() * stride];
    for (pos, &i) in items.iter().enumerate() {
        let mut next = cur.clone();
        let base = pos * stride;
        for j in 0..=p {
            for a in 0..=amax {
                let v = cur[j * w + a];
                if v == NEG {
                    continue;
                }
                if j < p {
                    let cand = v - ycost[i];
                    let idx = (j + 1) * w + a;
                    if cand > next[idx] {
                        next[idx] = cand;
                        choice[base + idx] = 1;
                    }
                }
                if a < amax && gain[i] > 0 {
                    let cand = v + gain[i];
                    let idx = j * w + a + 1;
                    if cand > next[idx] {
                        next[idx] = cand;
                        choice[base + idx] = 2;
                    }
                }
            }
        }
        cur = next;
    }
    PartTable {
        best: cur[p * w..].to_vec(),
        choice,
        p,
        amax,
    }
}

impl PartTable {
    fn backtrack(&self, items: &[usize], mut a: usize, y: &mut BinarySolution, delta: &mut Scenario) {
        let w = self.amax + 1;
        let stride = (self.p + 1) * w;
        let mut j = self.p;
        for pos in (0..items.len()).rev() {
            match self.choice[pos * stride + j * w + a] {
                1 => {
                    y.set(items[pos], true);
                    j -= 1;
                }
                2 => {
                    delta.set(items[pos], true);
                    a -= 1;
                }
                _ => {}
            }
        }
        debug_assert_eq!((j, a), (0, 0));
    }
}

/// Exact evaluation for multi-representative selection: loop over the
/// s-grid, solve each fixed-`s` problem by a per-partition dynamic program
/// and a budget convolution across partitions.
pub fn adversarial_selection_dp(inst: &Instance, x: &BinarySolution) -> Result<AdversaryCertificate> {
    let FeasibleSet::MultiRepSelection { partitions, p } = &inst.feasible else {
        return input("the selection dynamic program needs a multi-representative selection instance");
    };
    inst.check_solution(x)?;
    let n = inst.n();
    let (c, d) = (inst.c_hat(), inst.d());
    let gamma = inst.gamma();
    let gp = inst.gamma_prime() as i64;
    let gain: Vec<i64> = (0..n).map(|i| if x.get(i) { d[i] } else { 0 }).collect();
    let base = x.dot(c);
    let grid = SGrid::new(d);

    let mut best: Option<(i64, i64)> = None;
    for &s in grid.relevant(inst.gamma_prime()) {
        let v = selection_value_at(partitions, p, gamma, &gain, &ycost_at(c, d, x, s), None);
        let total = base + v - gp * s;
        if best.is_none_or(|(b, _)| total > b) {
            best = Some((total, s));
        }
    }
    let (_, s) = best.expect("grid is never empty");
    let mut y = BinarySolution::zeros(n);
    let mut delta = Scenario::zeros(n);
    selection_value_at(
        partitions,
        p,
        gamma,
        &gain,
        &ycost_at(c, d, x, s),
        Some((&mut y, &mut delta)),
    );
    certificate(inst, x, y, delta, true)
}

fn ycost_at(c: &[i64], d: &[i64], x: &BinarySolution, s: i64) -> Vec<i64> {
    (0..c.len())
        .map(|i| {
            let dev = if x.get(i) { 0 } else { d[i] };
            c[i] + (dev - s).max(0)
        })
        .collect()
}

fn selection_value_at(
    partitions: &[Vec<usize>],
    p: &[usize],
    gamma: usize,
    gain: &[i64],
    ycost: &[i64],
    out: Option<(&mut BinarySolution, &mut Scenario)>,
) -> i64 {
    let tables: Vec<PartTable> = partitions
        .iter()
        .zip(p)
        .map(|(items, &q)| {
            let attackable = items.iter().filter(|&&i| gain[i] > 0).count();
            part_table(items, q, gamma.min(attackable), gain, ycost)
        })
        .collect();
    // conv[l][a]: best over the first l partitions with exactly a attacks
    let mut conv = vec![vec![NEG; gamma + 1]];
    conv[0][0] = 0;
    let mut split: Vec<Vec<usize>> = Vec::with_capacity(tables.len());
    for table in &tables {
        let prev = conv.last().unwrap();
        let mut next = vec![NEG; gamma + 1];
        let mut arg = vec![0usize; gamma + 1];
        for (a, &pv) in prev.iter().enumerate() {
            if pv == NEG {
                continue;
            }
            for (b, &tv) in table.best.iter().enumerate() {
                if tv == NEG || a + b > gamma {
                    continue;
                }
                let cand = pv + tv;
                if cand > next[a + b] {
                    next[a + b] = cand;
                    arg[a + b] = b;
                }
            }
        }
        conv.push(next);
        split.push(arg);
    }
    let last = conv.last().unwrap();
    let (mut a, &value) = last
        .iter()
        .enumerate()
        .max_by(|(ia, va), (ib, vb)| va.cmp(vb).then(ib.cmp(ia)))
        .unwrap();
    if let Some((y, delta)) = out {
        for l in (0..tables.len()).rev() {
            let b = split[l][a];
            tables[l].backtrack(&partitions[l], b, y, delta);
            a -= b;
        }
    }
    value
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

    fn first() -> Instance {
        selection(vec![8, 5, 2, 17, 15], vec![9, 14, 15, 12, 1], 2, 1, 1)
    }

    fn second() -> Instance {
        selection(vec![3, 2, 1, 4, 4, 4], vec![2, 4, 4, 0, 0, 0], 3, 2, 1)
    }

    fn sol(n: usize, ones: &[usize]) -> BinarySolution {
        BinarySolution::from_indices(n, ones).unwrap()
    }

    #[test]
    fn grid_contents() {
        let g = SGrid::new(&[3, 0, 3, 1]);
        assert_eq!(g.values(), &[0, 1, 3]);
        assert_eq!(g.relevant(0), &[3]);
    }

    #[test]
    fn first_example_all_methods() {
        let inst = first();
        let x = sol(5, &[0, 2]);
        for m in [AdversaryMethod::Bruteforce, AdversaryMethod::Milp, AdversaryMethod::Dp] {
            let cert = evaluate(&inst, &x, m).unwrap();
            assert_eq!(cert.value, 1, "{m:?}");
            let replay = outcome_value(&inst.costs, &x, &cert.y, &cert.delta, &cert.epsilon);
            assert_eq!(replay, 1, "{m:?}");
        }
        // the first maximizer in enumeration order is the textbook one
        let cert = adversarial_bruteforce(&inst, &x).unwrap();
        assert_eq!(cert.y.indices(), vec![0, 4]);
        assert_eq!(cert.delta.indices(), vec![2]);
        assert_eq!(cert.epsilon.indices(), vec![4]);
    }

    #[test]
    fn second_example_values() {
        let inst = second();
        for (ones, v) in [(&[3, 4, 5][..], 2), (&[2, 3, 4], 1), (&[0, 1, 2], 3)] {
            let x = sol(6, ones);
            for m in [AdversaryMethod::Bruteforce, AdversaryMethod::Milp, AdversaryMethod::Dp] {
                assert_eq!(evaluate(&inst, &x, m).unwrap().value, v, "{ones:?} {m:?}");
            }
        }
    }

    #[test]
    fn no_attacks_means_nominal_regret() {
        let inst = selection(vec![4, 1, 3, 2], vec![0; 4], 2, 2, 1);
        let x = sol(4, &[0, 2]);
        let cert = adversarial_milp(&inst, &x).unwrap();
        assert_eq!(cert.value, 7 - 3);
        let inst = first().with_budgets(0, 0).unwrap();
        let (xn, _) = inst.feasible.nominal_solve(inst.c_hat()).unwrap();
        assert_eq!(adversarial_bruteforce(&inst, &xn).unwrap().value, 0);
    }

    #[test]
    fn wrong_variant_rejected() {
        let inst = Instance::new(
            "k",
            ItemCosts::new(vec![-3, -2], vec![1, 1]).unwrap(),
            Budgets::new(1, 0),
            FeasibleSet::Knapsack {
                weights: vec![1, 1],
                capacity: 1,
            },
        )
        .unwrap();
        let x = sol(2, &[0]);
        assert!(matches!(adversarial_selection_dp(&inst, &x), Err(Error::Input(_))));
    }
}
