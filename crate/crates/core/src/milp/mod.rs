//! Mixed-binary linear programming: model building, a dense bounded-variable
//! simplex, and depth-first branch-and-bound.

mod bnb;
mod lp_format;
mod model;
mod simplex;

pub use bnb::{solve_lp, solve_milp, MilpResult, MilpStatus, SolveOptions};
pub use model::{Constraint, MilpModel, ObjSense, Sense, VarId, VarKind, Variable};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_models() {
        let mut m = MilpModel::new();
        let x = m.add_continuous(0.0, 10.0);
        m.add_constraint(vec![(x, 1.0)], Sense::Le, 1.0);
        m.set_objective(ObjSense::Maximize, vec![(x, 1.0)]);
        let r = solve_lp(&m).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert!((r.value - 1.0).abs() < 1e-9);

        let r = solve_lp(&MilpModel::new()).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert_eq!(r.value, 0.0);

        let mut m = MilpModel::new();
        let a = m.add_binary();
        let b = m.add_binary();
        m.add_constraint(vec![(a, 1.0), (b, 1.0)], Sense::Ge, 1.0);
        m.set_objective(ObjSense::Minimize, vec![(a, 1.0), (b, 1.0)]);
        let r = solve_milp(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert_eq!(r.rounded(), 1);
    }

    #[test]
    fn branching_needed() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut m = MilpModel::new();
        let v: Vec<VarId> = (0..3).map(|_| m.add_binary()).collect();
        m.add_constraint(vec![(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], Sense::Le, 5.0);
        m.add_constraint(vec![(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)], Sense::Le, 11.0);
        m.add_constraint(vec![(v[0], 3.0), (v[1], 4.0), (v[2], 2.0)], Sense::Le, 8.0);
        m.set_objective(ObjSense::Maximize, vec![(v[0], 5.0), (v[1], 4.0), (v[2], 3.0)]);
        let r = solve_milp(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.rounded(), 9);
        assert!(m.max_violation(&r.assignment) < 1e-7);
    }

    #[test]
    fn infeasible_binary_program() {
        let mut m = MilpModel::new();
        let a = m.add_binary();
        let b = m.add_binary();
        m.add_constraint(vec![(a, 2.0), (b, 2.0)], Sense::Eq, 1.0);
        let r = solve_milp(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, MilpStatus::Infeasible);
        assert!(!r.has_solution());
    }

    #[test]
    fn node_limit_reports_incumbent_or_nothing() {
        let mut m = MilpModel::new();
        let v: Vec<VarId> = (0..8).map(|_| m.add_binary()).collect();
        let row = v.iter().map(|&x| (x, 2.0)).collect();
        m.add_constraint(row, Sense::Le, 7.0);
        m.set_objective(ObjSense::Maximize, v.iter().map(|&x| (x, 1.0)).collect());
        let opts = SolveOptions {
            node_limit: 1,
            ..SolveOptions::default()
        };
        let r = solve_milp(&m, &opts).unwrap();
        assert_eq!(r.status, MilpStatus::NodeLimit);
        let r = solve_milp(&m, &SolveOptions::default()).unwrap();
        assert_eq!((r.status, r.rounded()), (MilpStatus::Optimal, 3));
    }

    #[test]
    fn malformed_model_is_rejected() {
        let mut m = MilpModel::new();
        m.add_constraint(vec![(VarId(3), 1.0)], Sense::Le, 1.0);
        assert!(solve_lp(&m).is_err());
        let mut m = MilpModel::new();
        m.add_var(VarKind::Binary, 0.0, 2.0);
        assert!(solve_milp(&m, &SolveOptions::default()).is_err());
    }
}
