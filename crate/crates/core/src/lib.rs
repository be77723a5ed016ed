//! Exact, polynomial-case and iterative solvers for combinatorial
//! optimization under balanced regret with budgeted uncertainty.
//!
//! The problem is `min_x max_{y, δ} min_ε Σ (ĉ_i + d_i δ_i + d_i ε_i)(x_i - y_i)`
//! where the adversary attacks at most `Γ` items and the balancing stage at
//! most `Γ'`.

pub mod adversarial;
pub mod balancing;
pub mod error;
pub mod evaluation;
pub mod feasible;
pub mod instances;
pub mod master;
pub mod milp;
pub mod polyalg;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    AdversaryCertificate, BinarySolution, Budgets, FeasibleSet, Instance, ItemCosts, Scenario,
};
pub use adversarial::{
    adversarial_bruteforce, adversarial_milp, adversarial_selection_dp, adversarial_value, evaluate,
    AdversaryMethod, SGrid,
};
pub use balancing::{outcome_value, solve_balancing};
pub use evaluation::{criteria_matrix, eval_criterion, optimize_criterion, CriteriaMatrix, Criterion};
pub use master::{
    solve_bruteforce, solve_compact_mrs, solve_enumeration, solve_iterative, MasterOptions, ScenarioPool, SolveReport,
    SolveStatus,
};
pub use polyalg::{check_zero_solution, dominance_reduce, solve_constant_case, solve_regret_budgeted_mrs};

/// Library version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
