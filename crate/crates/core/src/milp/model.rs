use crate::error::{input, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub kind: VarKind,
    pub lower: f64,
    /// May be `f64::INFINITY`.
    pub upper: f64,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub row: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A mixed-binary linear program.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    pub(crate) vars: Vec<Variable>,
    pub(crate) constraints: Vec<Constraint>,
    pub(crate) objective: Vec<(VarId, f64)>,
    pub(crate) sense: ObjSense,
}

impl Default for MilpModel {
    fn default() -> Self {
        Self::new()
    }
}

impl MilpModel {
    pub fn new() -> Self {
        Self {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            sense: ObjSense::Minimize,
        }
    }

    pub fn add_var(&mut self, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(Variable {
            kind,
            lower,
            upper,
            name: format!("v{}", id.0),
        });
        id
    }

    pub fn add_binary(&mut self) -> VarId {
        self.add_var(VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_continuous(&mut self, lower: f64, upper: f64) -> VarId {
        self.add_var(VarKind::Continuous, lower, upper)
    }

    /// Renames a variable for LP dumps; names must be unique to be useful.
    pub fn set_name(&mut self, v: VarId, name: impl Into<String>) {
        self.vars[v.0].name = name.into();
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        self.vars[v.0].lower = lower;
        self.vars[v.0].upper = upper;
    }

    pub fn add_constraint(&mut self, row: Vec<(VarId, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { row, sense, rhs });
    }

    pub fn set_objective(&mut self, sense: ObjSense, row: Vec<(VarId, f64)>) {
        self.sense = sense;
        self.objective = row;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> (ObjSense, &[(VarId, f64)]) {
        (self.sense, &self.objective)
    }

    /// Objective value of an assignment, in the model's own sense.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Largest violation of any constraint or bound by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, var) in self.vars.iter().enumerate() {
            worst = worst.max(var.lower - values[v]).max(values[v] - var.upper);
        }
        for c in &self.constraints {
            let lhs: f64 = c.row.iter().map(|&(v, a)| a * values[v.0]).sum();
            let viol = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub(crate) fn check(&self) -> Result<()> {
        let n = self.vars.len();
        for (i, var) in self.vars.iter().enumerate() {
            if var.lower.is_nan() || var.upper.is_nan() || var.lower > var.upper {
                return input(format!("variable {i} has invalid bounds"));
            }
            if var.kind == VarKind::Binary && (var.lower < 0.0 || var.upper > 1.0) {
                return input(format!("binary variable {i} has bounds outside [0, 1]"));
            }
        }
        let in_range = |row: &[(VarId, f64)]| {
            row.iter()
                .all(|&(v, a)| v.0 < n && a.is_finite())
        };
        if !in_range(&self.objective) {
            return input("objective references an undeclared variable");
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if !in_range(&c.row) || !c.rhs.is_finite() {
                return input(format!("constraint {k} is malformed"));
            }
        }
        Ok(())
    }
}
