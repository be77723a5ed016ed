//! Bounded-variable primal and dual simplex on a dense condensed tableau.
//!
//! Every row `i` gets a logical variable `s_i = a_i · x` whose bounds encode
//! the row sense, so the system is homogeneous: `x_B = -T x_N` with one
//! tableau column per nonbasic variable.

pub(crate) const PIVOT_TOL: f64 = 1e-9;
pub(crate) const FEAS_TOL: f64 = 1e-7;
const DUAL_TOL: f64 = 1e-9;
const BLAND_AFTER: usize = 1000;
const ZERO_FLUSH: f64 = 1e-13;

/// A linear program in column-bounded, row-ranged minimization form.
#[derive(Clone, Debug)]
pub(crate) struct LpData {
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    pub col_lo: Vec<f64>,
    pub col_hi: Vec<f64>,
    pub cost: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Loc {
    Basic(usize),
    Nonbasic(usize),
}

enum Leave {
    Flip,
    Row(usize, f64),
}

pub(crate) struct Tableau {
    m: usize,
    k: usize,
    /// Original structural coefficients, row-major `m × k`.
    a: Vec<f64>,
    t: Vec<f64>,
    basis: Vec<usize>,
    nonbasic: Vec<usize>,
    loc: Vec<Loc>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    val: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    degenerate: usize,
    since_refactor: usize,
}

impl Tableau {
    pub fn new(lp: &LpData) -> Self {
        let m = lp.rows.len();
        let k = lp.ncols;
        let mut a = vec![0.0; m * k];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, v) in row {
                a[i * k + j] += v;
            }
        }
        let mut lo = lp.col_lo.clone();
        lo.extend_from_slice(&lp.row_lo);
        let mut hi = lp.col_hi.clone();
        hi.extend_from_slice(&lp.row_hi);
        let mut cost = lp.cost.clone();
        cost.resize(k + m, 0.0);
        let mut tab = Self {
            m,
            k,
            a,
            t: Vec::new(),
            basis: Vec::new(),
            nonbasic: Vec::new(),
            loc: Vec::new(),
            lo,
            hi,
            val: vec![0.0; k + m],
            cost,
            d: vec![0.0; k],
            degenerate: 0,
            since_refactor: 0,
        };
        tab.reset_slack();
        tab
    }

    /// Restarts from the all-logical basis under the current bounds.
    pub fn reset_slack(&mut self) {
        let (m, k) = (self.m, self.k);
        self.t = self.a.iter().map(|v| -v).collect();
        self.basis = (k..k + m).collect();
        self.nonbasic = (0..k).collect();
        self.loc = (0..k)
            .map(Loc::Nonbasic)
            .chain((0..m).map(Loc::Basic))
            .collect();
        for j in 0..k {
            self.val[j] = self.resting_value(j, 0.0);
        }
        self.recompute_basics();
        self.recompute_duals();
        self.degenerate = 0;
        self.since_refactor = 0;
    }

    fn resting_value(&self, j: usize, reduced: f64) -> f64 {
        let (lo, hi) = (self.lo[j], self.hi[j]);
        if lo == hi {
            lo
        } else if reduced < -DUAL_TOL && hi.is_finite() {
            hi
        } else if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            0.0
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.val[..self.k]
    }

    pub fn objective(&self) -> f64 {
        self.cost
            .iter()
            .zip(&self.val)
            .map(|(c, v)| c * v)
            .sum()
    }

    /// Changes the bounds of structural column `j`. A nonbasic column moves
    /// to the bound that keeps its reduced cost dual feasible.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
        if let Loc::Nonbasic(q) = self.loc[j] {
            let old = self.val[j];
            let new = if old == lo || old == hi {
                // already resting on one of the new bounds; keep it unless the sign disagrees
                let dq = self.d[q];
                if (dq > DUAL_TOL && old == hi && lo.is_finite())
                    || (dq < -DUAL_TOL && old == lo && hi.is_finite())
                {
                    self.resting_value(j, dq)
                } else {
                    old
                }
            } else {
                self.resting_value(j, self.d[q])
            };
            self.shift_nonbasic(q, new - old);
            self.val[j] = new;
        }
    }

    fn shift_nonbasic(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let j = self.nonbasic[q];
        self.val[j] += delta;
        for r in 0..self.m {
            let a = self.t[r * self.k + q];
            if a != 0.0 {
                self.val[self.basis[r]] -= a * delta;
            }
        }
    }

    fn recompute_basics(&mut self) {
        let k = self.k;
        for r in 0..self.m {
            let row = &self.t[r * k..(r + 1) * k];
            let v: f64 = row
                .iter()
                .zip(&self.nonbasic)
                .map(|(a, &j)| a * self.val[j])
                .sum();
            self.val[self.basis[r]] = -v;
        }
    }

    fn recompute_duals(&mut self) {
        let k = self.k;
        for q in 0..k {
            self.d[q] = self.cost[self.nonbasic[q]];
        }
        for r in 0..self.m {
            let c = self.cost[self.basis[r]];
            if c == 0.0 {
                continue;
            }
            let row = &self.t[r * k..(r + 1) * k];
            for (dq, a) in self.d.iter_mut().zip(row) {
                *dq -= c * a;
            }
        }
    }

    /// Largest mismatch between a logical and its row activity.
    pub fn residual(&self) -> f64 {
        let k = self.k;
        let mut worst = 0.0f64;
        for i in 0..self.m {
            let row = &self.a[i * k..(i + 1) * k];
            let act: f64 = row.iter().zip(&self.val[..k]).map(|(a, x)| a * x).sum();
            let s = self.val[k + i];
            worst = worst.max((act - s).abs() / (1.0 + s.abs()));
        }
        worst
    }

    /// Rebuilds the tableau for the current basis from the original rows.
    /// Returns false if the basis matrix is numerically singular.
    pub fn refactor(&mut self) -> bool {
        let (m, k) = (self.m, self.k);
        let w = m + k;
        let mut aug = vec![0.0; m * w];
        let column = |var: usize, i: usize| -> f64 {
            if var < k {
                self.a[i * k + var]
            } else if var - k == i {
                -1.0
            } else {
                0.0
            }
        };
        for i in 0..m {
            for (c, &var) in self.basis.iter().enumerate() {
                aug[i * w + c] = column(var, i);
            }
            for (q, &var) in self.nonbasic.iter().enumerate() {
                aug[i * w + m + q] = column(var, i);
            }
        }
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&x, &y| aug[x * w + c].abs().total_cmp(&aug[y * w + c].abs()))
                .unwrap();
            if aug[piv * w + c].abs() < 1e-11 {
                return false;
            }
            if piv != c {
                for col in 0..w {
                    aug.swap(piv * w + col, c * w + col);
                }
            }
            let inv = 1.0 / aug[c * w + c];
            for col in 0..w {
                aug[c * w + col] *= inv;
            }
            let pivot_row: Vec<f64> = aug[c * w..(c + 1) * w].to_vec();
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = aug[i * w + c];
                if f == 0.0 {
                    continue;
                }
                for col in 0..w {
                    aug[i * w + col] -= f * pivot_row[col];
                }
            }
        }
        for r in 0..m {
            self.t[r * k..(r + 1) * k].copy_from_slice(&aug[r * w + m..(r + 1) * w]);
        }
        self.recompute_basics();
        self.recompute_duals();
        self.since_refactor = 0;
        true
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let k = self.k;
        let a = self.t[p * k + q];
        let mut prow: Vec<f64> = self.t[p * k..(p + 1) * k].iter().map(|v| v / a).collect();
        prow[q] = 1.0 / a;
        for r in 0..self.m {
            if r == p {
                continue;
            }
            let f = self.t[r * k + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[r * k..(r + 1) * k];
            row[q] = 0.0;
            for (x, &pv) in row.iter_mut().zip(&prow) {
                *x -= f * pv;
                if x.abs() < ZERO_FLUSH {
                    *x = 0.0;
                }
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            self.d[q] = 0.0;
            for (x, &pv) in self.d.iter_mut().zip(&prow) {
                *x -= f * pv;
            }
        }
        self.t[p * k..(p + 1) * k].copy_from_slice(&prow);
        let leaving = self.basis[p];
        let entering = self.nonbasic[q];
        self.basis[p] = entering;
        self.nonbasic[q] = leaving;
        self.loc[entering] = Loc::Basic(p);
        self.loc[leaving] = Loc::Nonbasic(q);
        self.since_refactor += 1;
    }

    fn maybe_refactor(&mut self) {
        if self.since_refactor >= 500.max(self.m) && !self.refactor() {
            self.reset_slack();
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let x = self.val[j];
        if x < self.lo[j] - FEAS_TOL {
            self.lo[j] - x
        } else if x > self.hi[j] + FEAS_TOL {
            x - self.hi[j]
        } else {
            0.0
        }
    }

    fn dual_feasible(&self) -> bool {
        (0..self.k).all(|q| {
            let j = self.nonbasic[q];
            let dq = self.d[q];
            if self.lo[j] == self.hi[j] {
                true
            } else if self.val[j] == self.lo[j] {
                dq >= -DUAL_TOL
            } else if self.val[j] == self.hi[j] {
                dq <= DUAL_TOL
            } else {
                dq.abs() <= DUAL_TOL
            }
        })
    }

    /// Two-phase primal simplex from the current basis.
    pub fn primal(&mut self, max_iter: usize) -> LpStatus {
        let (m, k) = (self.m, self.k);
        let mut phase_cost = vec![0.0; k];
        for _ in 0..max_iter {
            self.maybe_refactor();
            let mut phase1 = false;
            let mut signs = vec![0.0; m];
            for r in 0..m {
                let j = self.basis[r];
                let x = self.val[j];
                if x < self.lo[j] - FEAS_TOL {
                    signs[r] = -1.0;
                    phase1 = true;
                } else if x > self.hi[j] + FEAS_TOL {
                    signs[r] = 1.0;
                    phase1 = true;
                }
            }
            if phase1 {
                phase_cost.iter_mut().for_each(|v| *v = 0.0);
                for r in 0..m {
                    if signs[r] != 0.0 {
                        let row = &self.t[r * k..(r + 1) * k];
                        for (c, a) in phase_cost.iter_mut().zip(row) {
                            *c -= signs[r] * a;
                        }
                    }
                }
            }
            let dd = if phase1 { &phase_cost } else { &self.d };
            let bland = self.degenerate >= BLAND_AFTER;
            let mut enter: Option<(usize, f64)> = None;
            let mut best_score = 0.0;
            for q in 0..k {
                let j = self.nonbasic[q];
                let dq = dd[q];
                let dir = if dq < -DUAL_TOL && self.val[j] < self.hi[j] {
                    1.0
                } else if dq > DUAL_TOL && self.val[j] > self.lo[j] {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    if enter.is_none_or(|(bq, _)| j < self.nonbasic[bq]) {
                        enter = Some((q, dir));
                    }
                } else if dq.abs() > best_score {
                    best_score = dq.abs();
                    enter = Some((q, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return if phase1 {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            };
            let (theta, leave) = self.ratio_test(q, dir, phase1, bland);
            if !theta.is_finite() {
                return if phase1 {
                    LpStatus::IterationLimit
                } else {
                    LpStatus::Unbounded
                };
            }
            if theta <= 1e-12 {
                self.degenerate += 1;
            }
            self.shift_nonbasic(q, dir * theta);
            let jq = self.nonbasic[q];
            match leave {
                Leave::Flip => {
                    self.val[jq] = if dir > 0.0 { self.hi[jq] } else { self.lo[jq] };
                }
                Leave::Row(p, bound) => {
                    self.val[self.basis[p]] = bound;
                    self.pivot(p, q);
                }
            }
        }
        LpStatus::IterationLimit
    }

    fn ratio_test(&self, q: usize, dir: f64, phase1: bool, bland: bool) -> (f64, Leave) {
        let k = self.k;
        let jq = self.nonbasic[q];
        let span = self.hi[jq] - self.lo[jq];
        let mut best = span;
        let mut leave = Leave::Flip;
        let mut best_piv = 0.0f64;
        for r in 0..self.m {
            let a = self.t[r * k + q];
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let rate = -a * dir;
            let j = self.basis[r];
            let x = self.val[j];
            let (lo, hi) = (self.lo[j], self.hi[j]);
            let (limit, bound) = if rate > 0.0 {
                if phase1 && x < lo - FEAS_TOL {
                    ((lo - x) / rate, lo)
                } else if x > hi + FEAS_TOL || !hi.is_finite() {
                    continue;
                } else {
                    (((hi - x) / rate).max(0.0), hi)
                }
            } else if phase1 && x > hi + FEAS_TOL {
                ((x - hi) / -rate, hi)
            } else if x < lo - FEAS_TOL || !lo.is_finite() {
                continue;
            } else {
                (((x - lo) / -rate).max(0.0), lo)
            };
            let better = if limit < best - 1e-12 {
                true
            } else if limit <= best + 1e-12 {
                match leave {
                    Leave::Flip => false,
                    Leave::Row(p, _) if bland => j < self.basis[p],
                    Leave::Row(..) => a.abs() > best_piv,
                }
            } else {
                false
            };
            if better {
                best = limit;
                best_piv = a.abs();
                leave = Leave::Row(r, bound);
            }
        }
        (best, leave)
    }

    /// Dual simplex; requires a dual-feasible basis. Returns `Optimal` once
    /// the basis is primal feasible.
    pub fn dual(&mut self, max_iter: usize) -> LpStatus {
        let k = self.k;
        for _ in 0..max_iter {
            self.maybe_refactor();
            let mut leave: Option<usize> = None;
            let mut worst = 0.0;
            for r in 0..self.m {
                let inf = self.infeasibility(self.basis[r]);
                if inf > worst {
                    worst = inf;
                    leave = Some(r);
                }
            }
            let Some(p) = leave else {
                return LpStatus::Optimal;
            };
            let jp = self.basis[p];
            let x = self.val[jp];
            let (target, up) = if x < self.lo[jp] {
                (self.lo[jp], true)
            } else {
                (self.hi[jp], false)
            };
            let mut enter: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_piv = 0.0f64;
            for q in 0..k {
                let a = self.t[p * k + q];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let j = self.nonbasic[q];
                if self.lo[j] == self.hi[j] {
                    continue;
                }
                // x_p moves by -a·Δ, so the sign of Δ is fixed by the target side
                let step_up = (a < 0.0) == up;
                if (step_up && self.val[j] >= self.hi[j]) || (!step_up && self.val[j] <= self.lo[j])
                {
                    continue;
                }
                let ratio = self.d[q].abs() / a.abs();
                if ratio < best_ratio - 1e-12
                    || (ratio <= best_ratio + 1e-12 && a.abs() > best_piv)
                {
                    best_ratio = ratio;
                    best_piv = a.abs();
                    enter = Some(q);
                }
            }
            let Some(q) = enter else {
                return LpStatus::Infeasible;
            };
            let delta = (x - target) / self.t[p * k + q];
            self.shift_nonbasic(q, delta);
            self.val[jp] = target;
            self.pivot(p, q);
        }
        LpStatus::IterationLimit
    }

    /// Re-optimizes from the current basis: dual simplex when the basis is
    /// dual feasible, primal otherwise, with refactorization and a cold
    /// restart as fallbacks against numerical drift.
    pub fn optimize(&mut self) -> LpStatus {
        let cap = 20_000 + 50 * (self.m + self.k);
        for attempt in 0..3 {
            let mut status = LpStatus::IterationLimit;
            if attempt == 0 && self.dual_feasible() {
                status = self.dual(cap);
            }
            if status != LpStatus::Infeasible {
                status = self.primal(cap);
            }
            if status != LpStatus::IterationLimit && self.residual() <= FEAS_TOL {
                return status;
            }
            if attempt == 0 && self.refactor() {
                continue;
            }
            self.reset_slack();
        }
        LpStatus::IterationLimit
    }
}
