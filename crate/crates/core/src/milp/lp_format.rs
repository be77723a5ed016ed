//! CPLEX-style LP text output for cross-checking models with external solvers.

use std::fmt::Write;

use super::model::{MilpModel, ObjSense, Sense, VarId, VarKind};

fn term_list(out: &mut String, model: &MilpModel, row: &[(VarId, f64)]) {
    if row.is_empty() {
        out.push_str(" 0 ");
        out.push_str(&model.vars[0].name);
        return;
    }
    for (k, &(v, a)) in row.iter().enumerate() {
        let sign = if a < 0.0 { '-' } else { '+' };
        if k == 0 && a >= 0.0 {
            let _ = write!(out, " {} {}", a, model.vars[v.0].name);
        } else {
            let _ = write!(out, " {sign} {} {}", a.abs(), model.vars[v.0].name);
        }
    }
}

impl MilpModel {
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        out.push_str(match self.sense {
            ObjSense::Minimize => "Minimize\n",
            ObjSense::Maximize => "Maximize\n",
        });
        out.push_str(" obj:");
        if self.vars.is_empty() {
            out.push_str(" 0");
        } else {
            term_list(&mut out, self, &self.objective);
        }
        out.push_str("\nSubject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{i}:");
            term_list(&mut out, self, &c.row);
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            // adding zero turns -0 into 0
            let _ = writeln!(out, " {op} {}", c.rhs + 0.0);
        }
        out.push_str("Bounds\n");
        for var in &self.vars {
            let lo = if var.lower == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                (var.lower + 0.0).to_string()
            };
            let hi = if var.upper == f64::INFINITY {
                "+inf".to_string()
            } else {
                (var.upper + 0.0).to_string()
            };
            let _ = writeln!(out, " {lo} <= {} <= {hi}", var.name);
        }
        let bins: Vec<&str> = self
            .vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| v.name.as_str())
            .collect();
        if !bins.is_empty() {
            out.push_str("Binary\n");
            for name in bins {
                let _ = writeln!(out, " {name}");
            }
        }
        out.push_str("End\n");
        out
    }
}
