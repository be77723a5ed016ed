//! Domain types shared by every solver: costs, budgets, feasible sets,
//! instances, solutions, scenarios and adversary certificates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Nominal costs and deviations of the `n` items.
///
/// Deviations are always non-negative. Nominal costs are non-negative for
/// selection and shortest-path instances; knapsack instances store negated
/// profits, so their nominal costs may be negative (see [`Instance::new`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItemCosts {
    c_hat: Vec<i64>,
    d: Vec<i64>,
}

impl ItemCosts {
    pub fn new(c_hat: Vec<i64>, d: Vec<i64>) -> Result<Self> {
        if c_hat.is_empty() {
            return input("at least one item is required");
        }
        if c_hat.len() != d.len() {
            return input(format!(
                "nominal costs have length {} but deviations have length {}",
                c_hat.len(),
                d.len()
            ));
        }
        if let Some(i) = d.iter().position(|&v| v < 0) {
            return input(format!("deviation of item {i} is negative"));
        }
        Ok(Self { c_hat, d })
    }

    pub fn len(&self) -> usize {
        self.c_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_hat.is_empty()
    }

    pub fn c_hat(&self) -> &[i64] {
        &self.c_hat
    }

    pub fn d(&self) -> &[i64] {
        &self.d
    }

    /// `ĉ + d`, the cost vector when every item deviates.
    pub fn upper(&self) -> Vec<i64> {
        self.c_hat.iter().zip(&self.d).map(|(c, d)| c + d).collect()
    }

    pub(crate) fn magnitude(&self) -> i128 {
        self.c_hat
            .iter()
            .zip(&self.d)
            .map(|(&c, &d)| (c as i128).abs() + d as i128)
            .sum()
    }
}

/// Attack budgets: `gamma` for the adversary, `gamma_prime` for the
/// balancing stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub gamma: usize,
    pub gamma_prime: usize,
}

impl Budgets {
    pub fn new(gamma: usize, gamma_prime: usize) -> Self {
        Self { gamma, gamma_prime }
    }
}

/// The combinatorial structure of the feasible solutions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeasibleSet {
    /// Choose exactly `p[l]` items from every part `partitions[l]`.
    #[serde(rename = "multirep_selection")]
    MultiRepSelection {
        partitions: Vec<Vec<usize>>,
        p: Vec<usize>,
    },
    /// Any packing with total weight at most `capacity`.
    Knapsack { weights: Vec<i64>, capacity: i64 },
    /// Edge indicator vectors of simple `source`-`target` paths; item `e` is
    /// the directed edge `edges[e]`.
    ShortestPath {
        nodes: usize,
        edges: Vec<(usize, usize)>,
        source: usize,
        target: usize,
    },
}

/// A 0/1 vector over the items.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinarySolution(Vec<bool>);

/// An attack indicator vector (used for both `δ` and `ε`).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scenario(Vec<bool>);

macro_rules! bitvec_impl {
    ($t:ident) => {
        impl $t {
            pub fn zeros(n: usize) -> Self {
                Self(vec![false; n])
            }

            pub fn from_bits(bits: Vec<bool>) -> Self {
                Self(bits)
            }

            /// Builds a vector of length `n` with ones at the given 0-based indices.
            pub fn from_indices(n: usize, ones: &[usize]) -> Result<Self> {
                let mut bits = vec![false; n];
                for &i in ones {
                    if i >= n {
                        return input(format!("index {i} out of range for length {n}"));
                    }
                    bits[i] = true;
                }
                Ok(Self(bits))
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            #[inline]
            pub fn get(&self, i: usize) -> bool {
                self.0[i]
            }

            pub fn set(&mut self, i: usize, v: bool) {
                self.0[i] = v;
            }

            pub fn bits(&self) -> &[bool] {
                &self.0
            }

            pub fn count(&self) -> usize {
                self.0.iter().filter(|&&b| b).count()
            }

            /// 0-based indices of the ones.
            pub fn indices(&self) -> Vec<usize> {
                self.0
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &b)| b.then_some(i))
                    .collect()
            }

            pub fn as_f64(&self) -> Vec<f64> {
                self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
            }
        }

        impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{:?}", stringify!($t), self.indices())
            }
        }
    };
}

bitvec_impl!(BinarySolution);
bitvec_impl!(Scenario);

impl BinarySolution {
    /// `Σ costs_i x_i`.
    pub fn dot(&self, costs: &[i64]) -> i64 {
        self.0
            .iter()
            .zip(costs)
            .filter(|(&b, _)| b)
            .map(|(_, &c)| c)
            .sum()
    }
}

/// A worst case for a fixed first-stage solution: the adversary's `(y, δ)`,
/// the balancing response `ε`, and the attained regret.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversaryCertificate {
    pub value: i64,
    pub y: BinarySolution,
    pub delta: Scenario,
    pub epsilon: Scenario,
    /// False when the underlying search stopped early (node limit).
    pub optimal: bool,
}

/// A balanced-regret problem instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub costs: ItemCosts,
    pub budgets: Budgets,
    pub feasible: FeasibleSet,
    /// Generator seed, when the instance was produced by a seeded generator.
    pub seed: Option<u64>,
}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        costs: ItemCosts,
        budgets: Budgets,
        feasible: FeasibleSet,
    ) -> Result<Self> {
        let inst = Self {
            name: name.into(),
            costs,
            budgets,
            feasible,
            seed: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Same instance with different budgets.
    pub fn with_budgets(&self, gamma: usize, gamma_prime: usize) -> Result<Self> {
        let mut inst = self.clone();
        inst.budgets = Budgets::new(gamma, gamma_prime);
        inst.validate()?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.costs.len()
    }

    pub fn c_hat(&self) -> &[i64] {
        self.costs.c_hat()
    }

    pub fn d(&self) -> &[i64] {
        self.costs.d()
    }

    pub fn gamma(&self) -> usize {
        self.budgets.gamma
    }

    pub fn gamma_prime(&self) -> usize {
        self.budgets.gamma_prime
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.feasible.dim() != n {
            return input(format!(
                "feasible set has dimension {} but there are {n} items",
                self.feasible.dim()
            ));
        }
        if self.budgets.gamma > n || self.budgets.gamma_prime > n {
            return input(format!(
                "budgets ({}, {}) exceed n = {n}",
                self.budgets.gamma, self.budgets.gamma_prime
            ));
        }
        let nominal_signed_ok = matches!(self.feasible, FeasibleSet::Knapsack { .. });
        if !nominal_signed_ok {
            if let Some(i) = self.c_hat().iter().position(|&c| c < 0) {
                return input(format!("nominal cost of item {i} is negative"));
            }
        }
        if self.costs.magnitude() > 1i128 << 60 {
            return Err(Error::Scale("cost magnitudes exceed 2^60".into()));
        }
        self.feasible.validate()
    }

    pub fn is_selection(&self) -> bool {
        matches!(self.feasible, FeasibleSet::MultiRepSelection { .. })
    }

    pub(crate) fn check_solution(&self, x: &BinarySolution) -> Result<()> {
        if !self.feasible.is_feasible(x)? {
            return input(format!("solution {x:?} is not feasible"));
        }
        Ok(())
    }
}
