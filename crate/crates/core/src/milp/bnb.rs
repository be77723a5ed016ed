//! Depth-first branch-and-bound over the binary variables, reusing a single
//! working tableau across nodes.

use std::time::{Duration, Instant};

use log::{debug, warn};

use super::model::{MilpModel, ObjSense, Sense, VarKind};
use super::simplex::{LpData, LpStatus, Tableau, FEAS_TOL};
use crate::error::{Error, Result};

const PRUNE_TOL: f64 = 1e-7;
const INT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Objective in the model's sense; `NaN` when no assignment exists.
    pub value: f64,
    /// Empty when no assignment exists.
    pub assignment: Vec<f64>,
    pub nodes: usize,
}

impl MilpResult {
    fn empty(status: MilpStatus, nodes: usize) -> Self {
        Self {
            status,
            value: f64::NAN,
            assignment: Vec::new(),
            nodes,
        }
    }

    pub fn has_solution(&self) -> bool {
        !self.assignment.is_empty()
    }

    /// The objective rounded to the nearest integer.
    pub fn rounded(&self) -> i64 {
        self.value.round() as i64
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub node_limit: usize,
    pub deadline: Option<Instant>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            node_limit: 1_000_000,
            deadline: None,
        }
    }
}

impl SolveOptions {
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.deadline = Some(Instant::now() + limit);
        self
    }
}

/// The model after substituting fixed variables and dropping empty rows.
struct Reduced {
    lp: LpData,
    /// Model variable -> LP column, `None` when fixed.
    col_of: Vec<Option<usize>>,
    fixed: Vec<f64>,
    obj_const: f64,
    negate: bool,
    binaries: Vec<usize>,
}

fn reduce(model: &MilpModel) -> Option<Reduced> {
    let mut col_of = vec![None; model.vars.len()];
    let mut fixed = vec![0.0; model.vars.len()];
    let mut lp = LpData {
        ncols: 0,
        rows: Vec::new(),
        row_lo: Vec::new(),
        row_hi: Vec::new(),
        col_lo: Vec::new(),
        col_hi: Vec::new(),
        cost: Vec::new(),
    };
    let mut binaries = Vec::new();
    for (v, var) in model.vars.iter().enumerate() {
        if var.lower == var.upper {
            fixed[v] = var.lower;
            continue;
        }
        let (lo, hi) = match var.kind {
            VarKind::Binary => (var.lower.ceil(), var.upper.floor()),
            VarKind::Continuous => (var.lower, var.upper),
        };
        if lo > hi {
            return None;
        }
        if lo == hi {
            fixed[v] = lo;
            continue;
        }
        col_of[v] = Some(lp.ncols);
        if var.kind == VarKind::Binary {
            binaries.push(lp.ncols);
        }
        lp.ncols += 1;
        lp.col_lo.push(lo);
        lp.col_hi.push(hi);
    }
    let negate = model.sense == ObjSense::Maximize;
    let sign = if negate { -1.0 } else { 1.0 };
    lp.cost = vec![0.0; lp.ncols];
    let mut obj_const = 0.0;
    for &(v, c) in &model.objective {
        match col_of[v.0] {
            Some(j) => lp.cost[j] += sign * c,
            None => obj_const += sign * c * fixed[v.0],
        }
    }
    for c in &model.constraints {
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(c.row.len());
        let mut shift = 0.0;
        for &(v, a) in &c.row {
            match col_of[v.0] {
                Some(j) => row.push((j, a)),
                None => shift += a * fixed[v.0],
            }
        }
        let rhs = c.rhs - shift;
        row.retain(|&(_, a)| a != 0.0);
        if row.is_empty() {
            let ok = match c.sense {
                Sense::Le => rhs >= -FEAS_TOL,
                Sense::Ge => rhs <= FEAS_TOL,
                Sense::Eq => rhs.abs() <= FEAS_TOL,
            };
            if !ok {
                return None;
            }
            continue;
        }
        let (lo, hi) = match c.sense {
            Sense::Le => (f64::NEG_INFINITY, rhs),
            Sense::Ge => (rhs, f64::INFINITY),
            Sense::Eq => (rhs, rhs),
        };
        lp.rows.push(row);
        lp.row_lo.push(lo);
        lp.row_hi.push(hi);
    }
    Some(Reduced {
        lp,
        col_of,
        fixed,
        obj_const,
        negate,
        binaries,
    })
}

impl Reduced {
    fn assignment(&self, cols: &[f64]) -> Vec<f64> {
        self.col_of
            .iter()
            .zip(&self.fixed)
            .map(|(c, &f)| c.map_or(f, |j| cols[j]))
            .collect()
    }

    fn model_value(&self, internal: f64) -> f64 {
        let v = internal + self.obj_const;
        if self.negate {
            -v
        } else {
            v
        }
    }
}

/// Solves the continuous relaxation.
pub fn solve_lp(model: &MilpModel) -> Result<MilpResult> {
    model.check()?;
    let Some(red) = reduce(model) else {
        return Ok(MilpResult::empty(MilpStatus::Infeasible, 0));
    };
    let mut tab = Tableau::new(&red.lp);
    match tab.optimize() {
        LpStatus::Optimal => {
            let assignment = red.assignment(tab.values());
            Ok(MilpResult {
                status: MilpStatus::Optimal,
                value: red.model_value(tab.objective()),
                assignment,
                nodes: 1,
            })
        }
        LpStatus::Infeasible => Ok(MilpResult::empty(MilpStatus::Infeasible, 1)),
        LpStatus::Unbounded => Ok(MilpResult::empty(MilpStatus::Unbounded, 1)),
        LpStatus::IterationLimit => Err(Error::Numerical("simplex iteration limit".into())),
    }
}

/// Fixing state of a binary column at a node: free, at 0 or at 1.
type NodeState = Vec<i8>;

struct Node {
    state: NodeState,
}

/// Exact optimum by depth-first branch-and-bound.
pub fn solve_milp(model: &MilpModel, opts: &SolveOptions) -> Result<MilpResult> {
    model.check()?;
    let Some(red) = reduce(model) else {
        return Ok(MilpResult::empty(MilpStatus::Infeasible, 0));
    };
    let nb = red.binaries.len();
    let mut tab = Tableau::new(&red.lp);
    let mut current: NodeState = vec![-1; nb];
    let mut stack = vec![Node {
        state: vec![-1; nb],
    }];
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut limit: Option<MilpStatus> = None;

    while let Some(node) = stack.pop() {
        if nodes >= opts.node_limit {
            limit = Some(MilpStatus::NodeLimit);
            break;
        }
        if opts.deadline.is_some_and(|d| Instant::now() >= d) {
            limit = Some(MilpStatus::TimeLimit);
            break;
        }
        nodes += 1;
        for (b, (&want, have)) in node.state.iter().zip(current.iter_mut()).enumerate() {
            if want != *have {
                let j = red.binaries[b];
                let (lo, hi) = match want {
                    0 => (0.0, 0.0),
                    1 => (1.0, 1.0),
                    _ => (red.lp.col_lo[j], red.lp.col_hi[j]),
                };
                tab.set_bounds(j, lo, hi);
                *have = want;
            }
        }
        let status = tab.optimize();
        match status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if nodes == 1 {
                    return Ok(MilpResult::empty(MilpStatus::Unbounded, nodes));
                }
                // a bounded-binary child of a feasible bounded parent cannot be unbounded
                warn!("unbounded relaxation below the root; node skipped");
                continue;
            }
            LpStatus::IterationLimit => {
                return Err(Error::Numerical(format!(
                    "simplex failed to converge at node {nodes}"
                )));
            }
            LpStatus::Optimal => {}
        }
        let bound = tab.objective();
        if let Some((inc, _)) = &incumbent {
            if bound >= inc - PRUNE_TOL {
                continue;
            }
        }
        let values = tab.values();
        let mut branch: Option<(usize, f64)> = None;
        let mut best_dist = INT_TOL;
        for (b, &j) in red.binaries.iter().enumerate() {
            let v = values[j];
            let dist = (v - v.floor()).min(v.ceil() - v);
            if dist > best_dist + 1e-12 {
                best_dist = dist;
                branch = Some((b, v));
            }
        }
        let Some((b, v)) = branch else {
            let mut cols = values.to_vec();
            for &j in &red.binaries {
                cols[j] = cols[j].round();
            }
            debug!("incumbent {:.6} at node {nodes}", bound);
            incumbent = Some((bound, cols));
            continue;
        };
        let first: i8 = match &incumbent {
            Some((_, cols)) => cols[red.binaries[b]] as i8,
            None => i8::from(v >= 0.5),
        };
        for side in [1 - first, first] {
            let mut state = node.state.clone();
            state[b] = side;
            stack.push(Node { state });
        }
    }

    Ok(match incumbent {
        Some((_, cols)) => {
            let assignment = red.assignment(&cols);
            MilpResult {
                status: limit.unwrap_or(MilpStatus::Optimal),
                value: model.evaluate(&assignment),
                assignment,
                nodes,
            }
        }
        None => MilpResult::empty(limit.unwrap_or(MilpStatus::Infeasible), nodes),
    })
}
