//! Optimizing over the first stage: the full-enumeration master, iterative
//! scenario generation, and the compact MILP for multi-representative
//! selection.

use std::time::{Duration, Instant};

use log::{debug, info};
use serde::{Serialize, Serializer};

use crate::adversarial::{evaluate, AdversaryMethod, SGrid, ENUMERATION_LIMIT};
use crate::balancing::{greedy_epsilon, outcome_value};
use crate::error::{input, Error, Result};
use crate::milp::{solve_milp, MilpModel, MilpResult, MilpStatus, ObjSense, Sense, SolveOptions, VarId};
use crate::types::{BinarySolution, FeasibleSet, Instance, Scenario};

/// Convergence tolerance on `UB − LB`; all data is integral.
pub const GAP_TOL: f64 = 1e-6;

/// Pools up to this many scenarios are solved as one monolithic master in
/// the enumeration approach; larger ones activate scenarios lazily.
const MONOLITHIC_POOL: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    NodeLimit,
}

#[derive(Clone, Copy, Debug)]
pub struct MasterOptions {
    pub time_limit: Duration,
    pub node_limit: usize,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(1800),
            node_limit: 1_000_000,
        }
    }
}

impl MasterOptions {
    fn milp(&self, deadline: Instant) -> SolveOptions {
        SolveOptions {
            node_limit: self.node_limit,
            deadline: Some(deadline),
        }
    }
}

fn serialize_indices<S: Serializer>(x: &BinarySolution, s: S) -> std::result::Result<S::Ok, S::Error> {
    x.indices().serialize(s)
}

/// Outcome of optimizing over `x`.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub method: String,
    pub value: i64,
    #[serde(serialize_with = "serialize_indices")]
    pub x: BinarySolution,
    pub iterations: usize,
    pub lower_bounds: Vec<i64>,
    pub upper_bounds: Vec<i64>,
    pub status: SolveStatus,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SolveReport {
    pub(crate) fn exact(method: &str, x: BinarySolution, value: i64, started: Instant) -> Self {
        Self {
            method: method.into(),
            value,
            x,
            iterations: 1,
            lower_bounds: vec![value],
            upper_bounds: vec![value],
            status: SolveStatus::Optimal,
            wall_time: started.elapsed(),
        }
    }

    pub fn gap(&self) -> i64 {
        match (self.lower_bounds.last(), self.upper_bounds.last()) {
            (Some(lb), Some(ub)) => ub - lb,
            _ => 0,
        }
    }
}

/// A subset of the adversary's `(y, δ)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScenarioPool {
    entries: Vec<(BinarySolution, Scenario)>,
}

impl ScenarioPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a scenario; returns false if it was already present.
    pub fn add(&mut self, y: BinarySolution, delta: Scenario) -> bool {
        if self.contains(&y, &delta) {
            return false;
        }
        self.entries.push((y, delta));
        true
    }

    pub fn contains(&self, y: &BinarySolution, delta: &Scenario) -> bool {
        self.entries.iter().any(|(a, b)| a == y && b == delta)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(BinarySolution, Scenario)] {
        &self.entries
    }

    /// Warm start: `y` minimizes `ĉ + d` and `δ` hits the `Γ` largest
    /// deviations outside `y`.
    pub fn initial(inst: &Instance) -> Result<Self> {
        let (y, _) = inst.feasible.nominal_solve(&inst.costs.upper())?;
        let d = inst.d();
        let mut outside: Vec<usize> = (0..inst.n()).filter(|&i| !y.get(i) && d[i] > 0).collect();
        outside.sort_by_key(|&i| (std::cmp::Reverse(d[i]), i));
        let mut delta = Scenario::zeros(inst.n());
        for &i in outside.iter().take(inst.gamma()) {
            delta.set(i, true);
        }
        let mut pool = Self::new();
        pool.add(y, delta);
        Ok(pool)
    }
}

/// The master MILP with handles to its variables.
#[derive(Clone, Debug)]
pub struct MasterModel {
    pub model: MilpModel,
    pub z: VarId,
    pub x: Vec<VarId>,
    /// `eps[k][i]`; irrelevant entries are fixed at zero.
    pub eps: Vec<Vec<VarId>>,
}

/// `min z` over `x ∈ X` subject to one linearized balancing constraint per
/// pool scenario.
pub fn build_master(inst: &Instance, pool: &ScenarioPool) -> Result<MasterModel> {
    if pool.is_empty() {
        return input("the master needs at least one scenario");
    }
    let n = inst.n();
    let (c, d) = (inst.c_hat(), inst.d());
    let mut m = MilpModel::new();
    // the adversary can always copy x, so every value is non-negative
    let z = m.add_continuous(0.0, f64::INFINITY);
    m.set_name(z, "z");
    let x: Vec<VarId> = (0..n)
        .map(|i| {
            let v = m.add_binary();
            m.set_name(v, format!("x{i}"));
            v
        })
        .collect();
    let mut eps = Vec::with_capacity(pool.len());
    for (k, (y, delta)) in pool.entries().iter().enumerate() {
        // For integral x the ε polytope (bounds plus one cardinality row) is
        // totally unimodular, so ε may stay continuous.
        let ek: Vec<VarId> = (0..n)
            .map(|i| {
                let v = m.add_continuous(0.0, 1.0);
                m.set_name(v, format!("e{k}_{i}"));
                if !y.get(i) || d[i] == 0 {
                    m.set_bounds(v, 0.0, 0.0);
                }
                v
            })
            .collect();
        let mut row = vec![(z, 1.0)];
        let mut rhs = 0.0;
        for i in 0..n {
            let ci = (c[i] + if delta.get(i) { d[i] } else { 0 }) as f64;
            if ci != 0.0 {
                row.push((x[i], -ci));
            }
            if y.get(i) {
                rhs -= ci;
                if d[i] > 0 {
                    row.push((ek[i], d[i] as f64));
                    m.add_constraint(vec![(ek[i], 1.0), (x[i], 1.0)], Sense::Le, 1.0);
                }
            }
        }
        m.add_constraint(row, Sense::Ge, rhs);
        let budget: Vec<(VarId, f64)> = (0..n)
            .filter(|&i| y.get(i) && d[i] > 0)
            .map(|i| (ek[i], 1.0))
            .collect();
        if !budget.is_empty() {
            m.add_constraint(budget, Sense::Le, inst.gamma_prime() as f64);
        }
        eps.push(ek);
    }
    inst.feasible.encode(&mut m, &x);
    m.set_objective(ObjSense::Minimize, vec![(z, 1.0)]);
    Ok(MasterModel { model: m, z, x, eps })
}

fn extract_x(inst: &Instance, res: &MilpResult, vars: &[VarId]) -> BinarySolution {
    let raw = BinarySolution::from_bits(vars.iter().map(|v| res.assignment[v.0] > 0.5).collect());
    inst.feasible.canonicalize(&raw)
}

fn limit_status(status: MilpStatus) -> Option<SolveStatus> {
    match status {
        MilpStatus::TimeLimit => Some(SolveStatus::TimeLimit),
        MilpStatus::NodeLimit => Some(SolveStatus::NodeLimit),
        _ => None,
    }
}

/// Incumbent for runs stopped before the first master solution: the
/// minimizer of `ĉ + d`, with its exact value.
fn fallback_incumbent(inst: &Instance) -> Result<(BinarySolution, i64)> {
    let (x, _) = inst.feasible.nominal_solve(&inst.costs.upper())?;
    let value = evaluate(inst, &x, AdversaryMethod::Auto)?.value;
    Ok((x, value))
}

/// Tracks bounds and the incumbent across master iterations.
struct Progress {
    started: Instant,
    deadline: Instant,
    best: Option<(i64, BinarySolution)>,
    lower: Vec<i64>,
    upper: Vec<i64>,
    lb: i64,
}

impl Progress {
    fn new(opts: &MasterOptions) -> Self {
        let started = Instant::now();
        Self {
            started,
            deadline: started + opts.time_limit,
            best: None,
            lower: Vec::new(),
            upper: Vec::new(),
            lb: i64::MIN,
        }
    }

    fn record(&mut self, lb: i64, x: &BinarySolution, value: i64) {
        self.lb = self.lb.max(lb);
        if self.best.as_ref().is_none_or(|(v, _)| value < *v) {
            self.best = Some((value, x.clone()));
        }
        self.lower.push(self.lb);
        self.upper.push(self.best.as_ref().unwrap().0);
    }

    fn converged(&self) -> bool {
        match &self.best {
            Some((ub, _)) => (*ub - self.lb) as f64 <= GAP_TOL,
            None => false,
        }
    }

    fn finish(mut self, inst: &Instance, method: &str, status: SolveStatus) -> Result<SolveReport> {
        if self.best.is_none() {
            let (x, value) = fallback_incumbent(inst)?;
            self.best = Some((value, x));
            self.lower.push(self.lb.max(0));
            self.upper.push(value);
        }
        let (value, x) = self.best.expect("an incumbent was set above");
        Ok(SolveReport {
            method: method.into(),
            value,
            x,
            iterations: self.lower.len(),
            lower_bounds: self.lower,
            upper_bounds: self.upper,
            status,
            wall_time: self.started.elapsed(),
        })
    }
}

/// Scenario generation: alternate between the master over the pool (lower
/// bound) and the adversarial problem at the master's `x` (upper bound).
pub fn solve_iterative(
    inst: &Instance,
    adversary: AdversaryMethod,
    opts: &MasterOptions,
) -> Result<SolveReport> {
    let mut pool = ScenarioPool::initial(inst)?;
    let mut prog = Progress::new(opts);
    let method = format!("iterative/{}", adversary.name());
    loop {
        let master = build_master(inst, &pool)?;
        let res = solve_milp(&master.model, &opts.milp(prog.deadline))?;
        if !res.has_solution() {
            if let Some(status) = limit_status(res.status) {
                return prog.finish(inst, &method, status);
            }
            return Err(Error::Infeasible(format!("master ended with {:?}", res.status)));
        }
        let x = extract_x(inst, &res, &master.x);
        let cert = evaluate(inst, &x, adversary)?;
        let lb = match res.status {
            MilpStatus::Optimal => res.rounded(),
            _ => prog.lb,
        };
        prog.record(lb, &x, cert.value);
        debug!(
            "iteration {}: lb {} ub {} pool {}",
            prog.lower.len(),
            prog.lb,
            prog.upper.last().unwrap(),
            pool.len()
        );
        if let Some(status) = limit_status(res.status) {
            return prog.finish(inst, &method, status);
        }
        if prog.converged() {
            info!("{} converged after {} iterations", inst.name, prog.lower.len());
            return prog.finish(inst, &method, SolveStatus::Optimal);
        }
        if !pool.add(cert.y, cert.delta) {
            return Err(Error::Numerical(
                "adversary returned a pooled scenario before convergence".into(),
            ));
        }
        if Instant::now() >= prog.deadline {
            return prog.finish(inst, &method, SolveStatus::TimeLimit);
        }
    }
}

/// Every `(y, δ)` with `y ∈ X` and `δ` a maximal attack outside `y`.
/// Smaller attacks are dominated for every `x` and are left out.
pub fn enumerate_scenarios(inst: &Instance) -> Result<Vec<(BinarySolution, Scenario)>> {
    let ys = inst.feasible.enumerate(ENUMERATION_LIMIT)?;
    let d = inst.d();
    let mut out = Vec::new();
    for y in ys {
        let free: Vec<usize> = (0..inst.n()).filter(|&i| !y.get(i) && d[i] > 0).collect();
        let k = inst.gamma().min(free.len());
        let mut overflow = false;
        subsets(&free, k, &mut |chosen| {
            if out.len() >= ENUMERATION_LIMIT {
                overflow = true;
                return;
            }
            let mut delta = Scenario::zeros(inst.n());
            for &i in chosen {
                delta.set(i, true);
            }
            out.push((y.clone(), delta));
        });
        if overflow {
            return Err(Error::Scale(format!(
                "more than {ENUMERATION_LIMIT} scenarios to enumerate"
            )));
        }
    }
    Ok(out)
}

fn subsets(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..=items.len() - (k - cur.len()) {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, f);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::new(), f);
}

/// The enumeration approach: the master over all of `Ξ`. Small pools are
/// solved as a single model; larger ones activate violated scenarios from
/// the explicit list until none is violated, which yields the same optimum.
pub fn solve_enumeration(inst: &Instance, opts: &MasterOptions) -> Result<SolveReport> {
    let all = enumerate_scenarios(inst)?;
    let mut prog = Progress::new(opts);
    let method = "enumeration";
    let mut pool = ScenarioPool::new();
    let lazy = all.len() > MONOLITHIC_POOL;
    if lazy {
        pool = ScenarioPool::initial(inst)?;
    } else {
        for (y, delta) in &all {
            pool.add(y.clone(), delta.clone());
        }
    }
    loop {
        let master = build_master(inst, &pool)?;
        let res = solve_milp(&master.model, &opts.milp(prog.deadline))?;
        if !res.has_solution() {
            if let Some(status) = limit_status(res.status) {
                return prog.finish(inst, method, status);
            }
            return Err(Error::Infeasible(format!("master ended with {:?}", res.status)));
        }
        let x = extract_x(inst, &res, &master.x);
        // value of x over the explicit list; first maximizer wins ties
        let mut worst: Option<(i64, usize)> = None;
        for (k, (y, delta)) in all.iter().enumerate() {
            let eps = greedy_epsilon(inst.d(), inst.gamma_prime(), &x, y);
            let v = outcome_value(&inst.costs, &x, y, delta, &eps);
            if worst.is_none_or(|(w, _)| v > w) {
                worst = Some((v, k));
            }
        }
        let (value, k) = worst.expect("X is never empty");
        let lb = match res.status {
            MilpStatus::Optimal => res.rounded(),
            _ => prog.lb,
        };
        prog.record(lb, &x, value);
        if let Some(status) = limit_status(res.status) {
            return prog.finish(inst, method, status);
        }
        if prog.converged() || !lazy {
            return prog.finish(inst, method, SolveStatus::Optimal);
        }
        let (y, delta) = all[k].clone();
        if !pool.add(y, delta) {
            return Err(Error::Numerical("violated scenario already active".into()));
        }
        if Instant::now() >= prog.deadline {
            return prog.finish(inst, method, SolveStatus::TimeLimit);
        }
    }
}

/// Limit on `|X|²` for the double-loop brute force.
pub const BRUTEFORCE_PAIRS: usize = 100_000_000;

/// Double loop: every `x ∈ X` against every adversary response. The first
/// minimizer in enumeration order wins ties.
pub fn solve_bruteforce(inst: &Instance) -> Result<SolveReport> {
    let started = Instant::now();
    let xs = inst.feasible.enumerate(ENUMERATION_LIMIT)?;
    if xs.len().saturating_mul(xs.len()) > BRUTEFORCE_PAIRS {
        return Err(Error::Scale(format!(
            "{} feasible solutions are too many for the double loop",
            xs.len()
        )));
    }
    let mut best: Option<(i64, BinarySolution)> = None;
    for x in xs {
        let v = evaluate(inst, &x, AdversaryMethod::Bruteforce)?.value;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    let (value, x) = best.ok_or_else(|| Error::Infeasible("no feasible solution".into()))?;
    Ok(SolveReport::exact("bruteforce", x, value, started))
}

/// Precedence cuts `x_i ≥ x_j`.
pub type Precedences = [(usize, usize)];

/// Builds the compact selection model; returns it with the `x` variables.
pub fn build_compact_mrs(inst: &Instance, cuts: Option<&Precedences>) -> Result<(MilpModel, Vec<VarId>)> {
    let FeasibleSet::MultiRepSelection { partitions, p } = &inst.feasible else {
        return input("the compact formulation needs a multi-representative selection instance");
    };
    let n = inst.n();
    let (c, d) = (inst.c_hat(), inst.d());
    let gamma = inst.gamma() as f64;
    let gp = inst.gamma_prime() as i64;
    let mut part_of = vec![0usize; n];
    for (l, items) in partitions.iter().enumerate() {
        for &i in items {
            part_of[i] = l;
        }
    }
    let mut m = MilpModel::new();
    let t = m.add_continuous(f64::NEG_INFINITY, f64::INFINITY);
    m.set_name(t, "t");
    let x: Vec<VarId> = (0..n)
        .map(|i| {
            let v = m.add_binary();
            m.set_name(v, format!("x{i}"));
            v
        })
        .collect();
    let grid = SGrid::new(d);
    for (r, &s) in grid.relevant(inst.gamma_prime()).iter().enumerate() {
        let pi = m.add_continuous(0.0, f64::INFINITY);
        m.set_name(pi, format!("pi{r}"));
        let rho: Vec<VarId> = (0..n)
            .map(|i| {
                let v = m.add_continuous(0.0, f64::INFINITY);
                m.set_name(v, format!("rho{r}_{i}"));
                v
            })
            .collect();
        let kappa: Vec<VarId> = (0..partitions.len())
            .map(|l| {
                let v = m.add_continuous(f64::NEG_INFINITY, f64::INFINITY);
                m.set_name(v, format!("kappa{r}_{l}"));
                v
            })
            .collect();
        // t ≥ ĉx + Γπ + Σρ − Γ's − Σ p κ
        let mut row = vec![(t, 1.0), (pi, -gamma)];
        for i in 0..n {
            if c[i] != 0 {
                row.push((x[i], -(c[i] as f64)));
            }
            row.push((rho[i], -1.0));
        }
        for (l, &q) in p.iter().enumerate() {
            row.push((kappa[l], q as f64));
        }
        m.add_constraint(row, Sense::Ge, -((gp * s) as f64));
        for i in 0..n {
            if d[i] > 0 {
                m.add_constraint(
                    vec![(pi, 1.0), (rho[i], 1.0), (x[i], -(d[i] as f64))],
                    Sense::Ge,
                    0.0,
                );
            }
            // ρ_i + ĉ_i + [d_i − s]_+ (1 − x_i) ≥ κ_ℓ
            let excess = (d[i] - s).max(0) as f64;
            let mut row = vec![(rho[i], 1.0), (kappa[part_of[i]], -1.0)];
            if excess != 0.0 {
                row.push((x[i], -excess));
            }
            m.add_constraint(row, Sense::Ge, -(c[i] as f64) - excess);
        }
    }
    inst.feasible.encode(&mut m, &x);
    if let Some(cuts) = cuts {
        for &(i, j) in cuts {
            m.add_constraint(vec![(x[i], 1.0), (x[j], -1.0)], Sense::Ge, 0.0);
        }
    }
    m.set_objective(ObjSense::Minimize, vec![(t, 1.0)]);
    Ok((m, x))
}

/// Solves the compact formulation; optional precedence cuts are added as
/// `x_i ≥ x_j` rows.
pub fn solve_compact_mrs(
    inst: &Instance,
    cuts: Option<&Precedences>,
    opts: &MasterOptions,
) -> Result<SolveReport> {
    let started = Instant::now();
    let (model, xv) = build_compact_mrs(inst, cuts)?;
    let res = solve_milp(&model, &opts.milp(started + opts.time_limit))?;
    if !res.has_solution() {
        return match limit_status(res.status) {
            Some(status) => {
                let (x, value) = fallback_incumbent(inst)?;
                let mut report = SolveReport::exact("compact", x, value, started);
                report.lower_bounds = vec![0];
                report.status = status;
                Ok(report)
            }
            None => Err(Error::Infeasible(format!("compact model ended with {:?}", res.status))),
        };
    }
    let x = extract_x(inst, &res, &xv);
    let mut report = SolveReport::exact("compact", x, res.rounded(), started);
    if let Some(status) = limit_status(res.status) {
        // the incumbent's true value is the upper bound; no lower bound is proven
        let value = evaluate(inst, &report.x, AdversaryMethod::Auto)?.value;
        report.value = value;
        report.upper_bounds = vec![value];
        report.lower_bounds = vec![0];
        report.status = status;
    }
    Ok(report)
}
