use balreg::milp::{
    solve_lp, solve_milp, MilpModel, MilpStatus, ObjSense, Sense, SolveOptions, VarId,
};
use balreg::rng::SplitMix64;

fn random_binary_program(rng: &mut SplitMix64, n: usize) -> MilpModel {
    let mut m = MilpModel::new();
    let vars: Vec<VarId> = (0..n).map(|_| m.add_binary()).collect();
    let rows = 2 + rng.below(5);
    for _ in 0..rows {
        let row: Vec<(VarId, f64)> = vars
            .iter()
            .filter_map(|&v| {
                let a = rng.range(-5, 5);
                (a != 0).then_some((v, a as f64))
            })
            .collect();
        let sense = match rng.below(3) {
            0 => Sense::Le,
            1 => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs = match sense {
            Sense::Eq => rng.range(-3, 3),
            _ => rng.range(-8, 8),
        };
        m.add_constraint(row, sense, rhs as f64);
    }
    let sense = if rng.below(2) == 0 {
        ObjSense::Minimize
    } else {
        ObjSense::Maximize
    };
    let obj = vars.iter().map(|&v| (v, rng.range(-10, 10) as f64)).collect();
    m.set_objective(sense, obj);
    m
}

fn exhaustive(m: &MilpModel) -> Option<f64> {
    let n = m.num_vars();
    let (sense, _) = m.objective();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|i| f64::from((mask >> i) & 1)).collect();
        if m.max_violation(&x) > 1e-9 {
            continue;
        }
        let v = m.evaluate(&x);
        best = Some(match (best, sense) {
            (None, _) => v,
            (Some(b), ObjSense::Minimize) => b.min(v),
            (Some(b), ObjSense::Maximize) => b.max(v),
        });
    }
    best
}

#[test]
fn random_binary_programs_match_enumeration() {
    let mut rng = SplitMix64::new(7);
    let mut feasible = 0;
    for case in 0..50 {
        let m = random_binary_program(&mut rng, 12);
        let r = solve_milp(&m, &SolveOptions::default()).unwrap();
        match exhaustive(&m) {
            None => assert_eq!(r.status, MilpStatus::Infeasible, "case {case}"),
            Some(v) => {
                feasible += 1;
                assert_eq!(r.status, MilpStatus::Optimal, "case {case}");
                assert_eq!(r.rounded() as f64, v, "case {case}");
                assert!(m.max_violation(&r.assignment) <= 1e-7);
            }
        }
    }
    assert!(feasible >= 10, "only {feasible} feasible cases");
}

#[test]
fn relaxation_bounds_and_row_permutation() {
    let mut rng = SplitMix64::new(99);
    for _ in 0..30 {
        let m = random_binary_program(&mut rng, 10);
        let milp = solve_milp(&m, &SolveOptions::default()).unwrap();
        if milp.status != MilpStatus::Optimal {
            continue;
        }
        let lp = solve_lp(&m).unwrap();
        assert_eq!(lp.status, MilpStatus::Optimal);
        let (sense, _) = m.objective();
        match sense {
            ObjSense::Minimize => assert!(lp.value <= milp.value + 1e-7),
            ObjSense::Maximize => assert!(lp.value >= milp.value - 1e-7),
        }
        let mut permuted = MilpModel::new();
        for _ in 0..m.num_vars() {
            permuted.add_binary();
        }
        for c in m.constraints().iter().rev() {
            permuted.add_constraint(c.row.clone(), c.sense, c.rhs);
        }
        let (sense, obj) = m.objective();
        permuted.set_objective(sense, obj.to_vec());
        let again = solve_milp(&permuted, &SolveOptions::default()).unwrap();
        assert!((again.value - milp.value).abs() <= 1e-7);
    }
}

#[test]
fn knapsack_relaxation_matches_greedy_fill() {
    let mut rng = SplitMix64::new(2024);
    for _ in 0..20 {
        let n = 5 + rng.below(20);
        let w: Vec<i64> = (0..n).map(|_| rng.range(1, 50)).collect();
        let p: Vec<i64> = (0..n).map(|_| rng.range(1, 80)).collect();
        let cap = w.iter().sum::<i64>() / 3;
        let mut m = MilpModel::new();
        let vars: Vec<VarId> = (0..n).map(|_| m.add_binary()).collect();
        m.add_constraint(
            vars.iter().zip(&w).map(|(&v, &wi)| (v, wi as f64)).collect(),
            Sense::Le,
            cap as f64,
        );
        m.set_objective(
            ObjSense::Maximize,
            vars.iter().zip(&p).map(|(&v, &pi)| (v, pi as f64)).collect(),
        );
        let lp = solve_lp(&m).unwrap();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| (p[b] * w[a]).cmp(&(p[a] * w[b])));
        let mut room = cap as f64;
        let mut greedy = 0.0;
        for i in order {
            let take = (room / w[i] as f64).min(1.0);
            if take <= 0.0 {
                break;
            }
            greedy += take * p[i] as f64;
            room -= take * w[i] as f64;
        }
        assert!((lp.value - greedy).abs() < 1e-6, "{} vs {greedy}", lp.value);
    }
}
