//! Robustness criteria for a fixed solution, per-criterion optima, and
//! cross-criterion comparison matrices.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adversarial::{adversarial_value, AdversaryMethod, SGrid};
use crate::error::{input, Error, Result};
use crate::master::{solve_compact_mrs, solve_iterative, MasterOptions, SolveReport};
use crate::polyalg::{check_zero_solution, solve_constant_case, solve_regret_budgeted_mrs};
use crate::types::{BinarySolution, Instance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    /// Nominal cost.
    Bc,
    /// Worst case under interval uncertainty.
    WcI,
    /// Worst case under budgeted uncertainty.
    WcGamma,
    /// Min-max regret under interval uncertainty.
    RI,
    /// Min-max regret under budgeted uncertainty.
    RGamma,
    /// Balanced regret with the instance's budgets.
    Br,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::Bc,
        Criterion::WcI,
        Criterion::WcGamma,
        Criterion::RI,
        Criterion::RGamma,
        Criterion::Br,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Criterion::Bc => "BC",
            Criterion::WcI => "WC-I",
            Criterion::WcGamma => "WC-G",
            Criterion::RI => "R-I",
            Criterion::RGamma => "R-G",
            Criterion::Br => "BR",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['_', ' '], "-");
        Ok(match key.as_str() {
            "bc" => Criterion::Bc,
            "wc-i" => Criterion::WcI,
            "wc-g" | "wc-gamma" | "wc-γ" => Criterion::WcGamma,
            "r-i" => Criterion::RI,
            "r-g" | "r-gamma" | "r-γ" => Criterion::RGamma,
            "br" => Criterion::Br,
            _ => return input(format!("unknown criterion {s:?}")),
        })
    }
}

/// Value of `x` under `criterion`.
pub fn eval_criterion(inst: &Instance, x: &BinarySolution, criterion: Criterion) -> Result<i64> {
    inst.check_solution(x)?;
    let (c, d) = (inst.c_hat(), inst.d());
    Ok(match criterion {
        Criterion::Bc => x.dot(c),
        Criterion::WcI => x.dot(&inst.costs.upper()),
        Criterion::WcGamma => {
            let mut devs: Vec<i64> = x.indices().into_iter().map(|i| d[i]).collect();
            devs.sort_unstable_by(|a, b| b.cmp(a));
            x.dot(c) + devs.iter().take(inst.gamma()).sum::<i64>()
        }
        Criterion::RI => {
            let worst: Vec<i64> = (0..inst.n())
                .map(|i| c[i] + if x.get(i) { d[i] } else { 0 })
                .collect();
            let (_, best) = inst.feasible.nominal_solve(&worst)?;
            x.dot(&worst) - best
        }
        Criterion::RGamma => adversarial_value(&inst.with_budgets(inst.gamma(), 0)?, x)?,
        Criterion::Br => adversarial_value(inst, x)?,
    })
}

/// An optimal solution for `criterion`.
pub fn optimize_criterion(inst: &Instance, criterion: Criterion, opts: &MasterOptions) -> Result<SolveReport> {
    let started = Instant::now();
    match criterion {
        Criterion::Bc => {
            let (x, v) = inst.feasible.nominal_solve(inst.c_hat())?;
            Ok(SolveReport::exact("nominal", x, v, started))
        }
        Criterion::WcI => {
            let (x, v) = inst.feasible.nominal_solve(&inst.costs.upper())?;
            Ok(SolveReport::exact("nominal-upper", x, v, started))
        }
        Criterion::WcGamma => {
            let (x, v) = budgeted_worst_case(inst)?;
            Ok(SolveReport::exact("breakpoints", x, v, started))
        }
        Criterion::RI => optimize_balanced(&inst.with_budgets(inst.n(), 0)?, opts),
        Criterion::RGamma => optimize_balanced(&inst.with_budgets(inst.gamma(), 0)?, opts),
        Criterion::Br => optimize_balanced(inst, opts),
    }
}

/// `min_s Γ s + min_x Σ (ĉ_i + [d_i − s]_+) x_i` over the deviation grid;
/// the smallest minimizing `s` wins ties.
fn budgeted_worst_case(inst: &Instance) -> Result<(BinarySolution, i64)> {
    let (c, d) = (inst.c_hat(), inst.d());
    let gamma = inst.gamma() as i64;
    let mut best: Option<(BinarySolution, i64)> = None;
    for &s in SGrid::new(d).values() {
        let costs: Vec<i64> = (0..inst.n()).map(|i| c[i] + (d[i] - s).max(0)).collect();
        let (x, v) = inst.feasible.nominal_solve(&costs)?;
        let total = gamma * s + v;
        if best.as_ref().is_none_or(|(_, b)| total < *b) {
            best = Some((x, total));
        }
    }
    Ok(best.expect("the grid always contains zero"))
}

/// Balanced-regret optimum through the cheapest applicable solver.
fn optimize_balanced(inst: &Instance, opts: &MasterOptions) -> Result<SolveReport> {
    let started = Instant::now();
    if inst.gamma_prime() >= inst.n() {
        // the balancing stage can always mirror the adversary
        let (x, _) = inst.feasible.nominal_solve(&inst.costs.upper())?;
        let value = adversarial_value(inst, &x)?;
        return Ok(SolveReport::exact("full-balancing", x, value, started));
    }
    if !inst.is_selection() {
        return solve_iterative(inst, AdversaryMethod::Auto, opts);
    }
    if inst.gamma_prime() == 0 {
        return solve_regret_budgeted_mrs(inst);
    }
    if inst.gamma() >= 1 {
        if let Some(x) = check_zero_solution(inst)? {
            return Ok(SolveReport::exact("zero-check", x, 0, started));
        }
    }
    if let Some(report) = solve_constant_case(inst)? {
        return Ok(report);
    }
    solve_compact_mrs(inst, None, opts)
}

/// A solution label (row) or evaluation criterion (column) of a matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Plain(Criterion),
    /// Balanced regret with the given balancing budget.
    Balanced(usize),
}

impl Label {
    fn at(self, inst: &Instance) -> Result<(Instance, Criterion)> {
        match self {
            Label::Plain(c) => Ok((inst.clone(), c)),
            Label::Balanced(gp) => Ok((inst.with_budgets(inst.gamma(), gp)?, Criterion::Br)),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Plain(c) => write!(f, "{c}"),
            Label::Balanced(gp) => write!(f, "BR({gp})"),
        }
    }
}

/// The labels used when balanced regret is studied over `gamma_primes`:
/// the five classic criteria followed by one balanced label per budget.
pub fn matrix_labels(gamma_primes: &[usize]) -> Vec<Label> {
    Criterion::ALL[..5]
        .iter()
        .map(|&c| Label::Plain(c))
        .chain(gamma_primes.iter().map(|&gp| Label::Balanced(gp)))
        .collect()
}

/// Values of every label's optimal solution under every label, for one
/// instance. `values[r][c]` is row solution `r` under column criterion
/// `c`; `optima[c]` the column optimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceCriteria {
    pub name: String,
    pub solutions: Vec<BinarySolution>,
    pub values: Vec<Vec<i64>>,
    pub optima: Vec<i64>,
}

pub fn instance_criteria(inst: &Instance, labels: &[Label], opts: &MasterOptions) -> Result<InstanceCriteria> {
    let mut solutions = Vec::with_capacity(labels.len());
    let mut optima = Vec::with_capacity(labels.len());
    for &label in labels {
        let (at, crit) = label.at(inst)?;
        let report = optimize_criterion(&at, crit, opts)?;
        optima.push(report.value);
        solutions.push(report.x);
    }
    let mut values = Vec::with_capacity(labels.len());
    for x in &solutions {
        let mut row = Vec::with_capacity(labels.len());
        for &label in labels {
            let (at, crit) = label.at(inst)?;
            row.push(eval_criterion(&at, x, crit)?);
        }
        values.push(row);
    }
    for (c, opt) in optima.iter().enumerate() {
        if values.iter().any(|row| row[c] < *opt) {
            return Err(Error::Numerical(format!(
                "{}: a solution beats the reported {} optimum",
                inst.name, labels[c]
            )));
        }
    }
    Ok(InstanceCriteria {
        name: inst.name.clone(),
        solutions,
        values,
        optima,
    })
}

/// `(f − f*) / |f*|`; `None` when `f* = 0 < f`.
pub fn relative_difference(value: i64, optimum: i64) -> Option<f64> {
    if optimum == 0 {
        return (value == 0).then_some(0.0);
    }
    Some((value - optimum) as f64 / optimum.unsigned_abs() as f64)
}

/// Mean relative differences over a batch.
#[derive(Clone, Debug)]
pub struct CriteriaMatrix {
    pub labels: Vec<Label>,
    pub instances: Vec<InstanceCriteria>,
    /// `mean[r][c]`, over the instances with a finite difference.
    pub mean: Vec<Vec<Option<f64>>>,
    /// Instances excluded from `mean[r][c]` for a zero optimum.
    pub infinite: Vec<Vec<usize>>,
}

impl CriteriaMatrix {
    pub fn aggregate(labels: Vec<Label>, instances: Vec<InstanceCriteria>) -> Result<Self> {
        if instances.is_empty() {
            return input("the batch is empty");
        }
        let k = labels.len();
        let mut mean = vec![vec![None; k]; k];
        let mut infinite = vec![vec![0; k]; k];
        for r in 0..k {
            for c in 0..k {
                let mut sum = 0.0;
                let mut count = 0usize;
                for inst in &instances {
                    match relative_difference(inst.values[r][c], inst.optima[c]) {
                        Some(v) => {
                            sum += v;
                            count += 1;
                        }
                        None => infinite[r][c] += 1,
                    }
                }
                mean[r][c] = (count > 0).then(|| sum / count as f64);
            }
        }
        Ok(Self {
            labels,
            instances,
            mean,
            infinite,
        })
    }

    fn index(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Mean relative difference of `row`'s solutions under `col`.
    pub fn get(&self, row: Label, col: Label) -> Option<f64> {
        self.mean[self.index(row)?][self.index(col)?]
    }

    /// One line per (solution, criterion) pair.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["solution", "criterion", "mean_relative_difference", "infinite", "instances"])?;
        for (r, row) in self.labels.iter().enumerate() {
            for (c, col) in self.labels.iter().enumerate() {
                let mean = self.mean[r][c].map_or_else(|| "inf".to_string(), |v| format!("{v:.6}"));
                w.write_record([
                    row.to_string(),
                    col.to_string(),
                    mean,
                    self.infinite[r][c].to_string(),
                    self.instances.len().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Raw values: one line per (instance, solution, criterion).
    pub fn write_values_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["instance", "solution", "criterion", "value", "optimum"])?;
        for inst in &self.instances {
            for (r, row) in self.labels.iter().enumerate() {
                for (c, col) in self.labels.iter().enumerate() {
                    w.write_record([
                        inst.name.clone(),
                        row.to_string(),
                        col.to_string(),
                        inst.values[r][c].to_string(),
                        inst.optima[c].to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Sequential batch evaluation.
pub fn criteria_matrix(batch: &[Instance], gamma_primes: &[usize], opts: &MasterOptions) -> Result<CriteriaMatrix> {
    let labels = matrix_labels(gamma_primes);
    let rows = batch
        .iter()
        .map(|inst| instance_criteria(inst, &labels, opts))
        .collect::<Result<Vec<_>>>()?;
    CriteriaMatrix::aggregate(labels, rows)
}
