//! Seeded instance families, the two hardness-reduction builders, JSON
//! files and travel-time graph ingestion.

use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::rng::SplitMix64;
use crate::types::{Budgets, FeasibleSet, Instance, ItemCosts};

/// Uniform selection: `p = ⌊n/2⌋`, `ĉ_i ∈ {1..100}`, `d_i ∈ {0..99}`. All
/// nominal costs are drawn before the deviations.
pub fn gen_selection(n: usize, seed: u64, budgets: Budgets) -> Result<Instance> {
    gen_multirep(n, 1, seed, budgets)
}

/// Like [`gen_selection`] but with `parts` contiguous partitions of
/// near-equal size, each with quota `max(1, ⌊|T_ℓ|/2⌋)`.
pub fn gen_multirep(n: usize, parts: usize, seed: u64, budgets: Budgets) -> Result<Instance> {
    if n < 2 {
        return input("selection instances need n >= 2");
    }
    if parts == 0 || parts > n {
        return input(format!("cannot split {n} items into {parts} partitions"));
    }
    let mut rng = SplitMix64::new(seed);
    let c: Vec<i64> = (0..n).map(|_| rng.range(1, 100)).collect();
    let d: Vec<i64> = (0..n).map(|_| rng.range(0, 99)).collect();
    let mut partitions = Vec::with_capacity(parts);
    let mut start = 0;
    for l in 0..parts {
        let len = n / parts + usize::from(l < n % parts);
        partitions.push((start..start + len).collect::<Vec<_>>());
        start += len;
    }
    let p = partitions.iter().map(|t| (t.len() / 2).max(1)).collect();
    let name = if parts == 1 {
        format!("selection-n{n}-s{seed}")
    } else {
        format!("multirep-n{n}-l{parts}-s{seed}")
    };
    Ok(Instance::new(
        name,
        ItemCosts::new(c, d)?,
        budgets,
        FeasibleSet::MultiRepSelection { partitions, p },
    )?
    .with_seed(seed))
}

/// How the knapsack capacity is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CapacityRule {
    /// `⌊Σ w_i / 2⌋`.
    #[default]
    Half,
    Value(i64),
}

const R_BAR: i64 = 1000;

/// Almost strongly correlated knapsack. Profits are stored negated, so the
/// instance minimizes cost like every other family: item `i` has nominal
/// cost `−ĉ_i` where `ĉ_i` is the drawn nominal profit, and deviation
/// `d_i`, the possible profit gain.
pub fn gen_knapsack(n: usize, seed: u64, budgets: Budgets, rule: CapacityRule) -> Result<Instance> {
    if n < 2 {
        return input("knapsack instances need n >= 2");
    }
    let mut rng = SplitMix64::new(seed);
    let mut w = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for _ in 0..n {
        let wi = rng.range(1, R_BAR);
        let pi = rng.range(wi + R_BAR / 10 - R_BAR / 500, wi + R_BAR / 10 + R_BAR / 500);
        // ⌈0.8 p⌉ and ⌈1.2 p⌉ in integer arithmetic
        let lo = (4 * pi + 4) / 5;
        let hi = (6 * pi + 4) / 5;
        let ci = rng.range(lo, pi);
        let di = rng.range(pi - ci, hi - ci);
        w.push(wi);
        c.push(-ci);
        d.push(di);
    }
    let capacity = match rule {
        CapacityRule::Half => w.iter().sum::<i64>() / 2,
        CapacityRule::Value(v) => v,
    };
    Ok(Instance::new(
        format!("knapsack-n{n}-s{seed}"),
        ItemCosts::new(c, d)?,
        budgets,
        FeasibleSet::Knapsack {
            weights: w,
            capacity,
        },
    )?
    .with_seed(seed))
}

/// Random layered digraph from node 0 to the last node: `layers` inner
/// layers of `width` nodes, complete between consecutive layers,
/// `ĉ ∈ {1..100}`, `d ∈ {0..99}`.
pub fn gen_layered_graph(layers: usize, width: usize, seed: u64, budgets: Budgets) -> Result<Instance> {
    if layers == 0 || width == 0 {
        return input("a layered graph needs at least one layer of width one");
    }
    let nodes = layers * width + 2;
    let target = nodes - 1;
    let layer = |l: usize| (0..width).map(move |k| 1 + l * width + k);
    let mut edges = Vec::new();
    edges.extend(layer(0).map(|v| (0, v)));
    for l in 0..layers - 1 {
        for u in layer(l) {
            edges.extend(layer(l + 1).map(|v| (u, v)));
        }
    }
    edges.extend(layer(layers - 1).map(|u| (u, target)));
    let mut rng = SplitMix64::new(seed);
    let m = edges.len();
    let c: Vec<i64> = (0..m).map(|_| rng.range(1, 100)).collect();
    let d: Vec<i64> = (0..m).map(|_| rng.range(0, 99)).collect();
    Ok(Instance::new(
        format!("layered-{layers}x{width}-s{seed}"),
        ItemCosts::new(c, d)?,
        budgets,
        FeasibleSet::ShortestPath {
            nodes,
            edges,
            source: 0,
            target,
        },
    )?
    .with_seed(seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    Equipartition,
    Partition,
}

/// Weights `a_1..a_n` of a number-partitioning instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionSpec {
    pub weights: Vec<i64>,
    pub kind: ReductionKind,
}

/// A reduction instance with the optimum it attains exactly when the
/// weights can be split as required.
#[derive(Clone, Debug)]
pub struct ReducedInstance {
    pub instance: Instance,
    pub threshold: i64,
}

impl ReductionSpec {
    pub fn new(weights: Vec<i64>, kind: ReductionKind) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&a| a <= 0) {
            return input("reduction weights must be positive and non-empty");
        }
        Ok(Self { weights, kind })
    }

    pub fn total(&self) -> i64 {
        self.weights.iter().sum()
    }

    pub fn build(&self) -> Result<ReducedInstance> {
        match self.kind {
            ReductionKind::Equipartition => build_equipartition_reduction(self),
            ReductionKind::Partition => build_partition_reduction(self),
        }
    }

    /// Whether the weights admit the split the reduction encodes (by
    /// subset enumeration).
    pub fn is_yes_instance(&self) -> bool {
        let a = match self.kind {
            ReductionKind::Equipartition => self.weights.clone(),
            ReductionKind::Partition => padded_weights(&self.weights),
        };
        let n = a.len();
        let total: i64 = a.iter().sum();
        if total % 2 != 0 || n > 30 {
            return false;
        }
        (0u32..1 << n).any(|mask| {
            let sum: i64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| a[i]).sum();
            let size_ok = match self.kind {
                ReductionKind::Equipartition => mask.count_ones() as usize * 2 == n,
                ReductionKind::Partition => true,
            };
            size_ok && 2 * sum == total
        })
    }
}

/// Selection instance from an equipartition instance (all costs scaled by
/// four to stay integral).
pub fn build_equipartition_reduction(spec: &ReductionSpec) -> Result<ReducedInstance> {
    if spec.kind != ReductionKind::Equipartition {
        return input("expected an equipartition specification");
    }
    let n = spec.weights.len();
    if !n.is_multiple_of(2) {
        return input(format!("equipartition needs an even number of weights, got {n}"));
    }
    let a_sum = spec.total();
    let mut c = Vec::with_capacity(3 * n + 4);
    let mut d = Vec::with_capacity(3 * n + 4);
    for &a in &spec.weights {
        let dev = 4 * a_sum - 6 * a;
        if dev < 0 {
            return input(format!("weight {a} exceeds two thirds of the total {a_sum}"));
        }
        c.push(4 * a);
        d.push(dev);
    }
    for _ in 0..2 * n + 2 {
        c.push(0);
        d.push(6 * a_sum - 1);
    }
    for _ in 0..2 {
        c.push(0);
        d.push(4 * a_sum - 1);
    }
    let items = c.len();
    let q = n / 2 + 1;
    let weights: Vec<String> = spec.weights.iter().map(i64::to_string).collect();
    let instance = Instance::new(
        format!("equipartition-x4-{}", weights.join("-")),
        ItemCosts::new(c, d)?,
        Budgets::new(q, 1),
        FeasibleSet::MultiRepSelection {
            partitions: vec![(0..items).collect()],
            p: vec![q],
        },
    )?;
    Ok(ReducedInstance {
        instance,
        threshold: (2 * n as i64 - 3) * a_sum,
    })
}

fn padded_weights(a: &[i64]) -> Vec<i64> {
    let total: i64 = a.iter().sum();
    let amax = *a.iter().max().unwrap();
    let mut out = a.to_vec();
    if 3 * amax > total {
        out.extend([total, total]);
    }
    out
}

/// Representative selection instance from a partition instance. Weights
/// with `a_max > A/3` are first padded with two items of size `A`.
pub fn build_partition_reduction(spec: &ReductionSpec) -> Result<ReducedInstance> {
    if spec.kind != ReductionKind::Partition {
        return input("expected a partition specification");
    }
    let a = padded_weights(&spec.weights);
    let n = a.len();
    let a_sum: i64 = a.iter().sum();
    let amax = *a.iter().max().unwrap();
    let big = (n as i64 + 2) * a_sum + 3 * amax;
    let mut c = Vec::with_capacity(4 * n);
    let mut d = Vec::with_capacity(4 * n);
    let mut partitions = Vec::with_capacity(n);
    for (l, &ai) in a.iter().enumerate() {
        c.extend([a_sum + 2 * ai, 0, 0, a_sum - 2 * ai]);
        d.extend([2 * a_sum - 3 * ai, big, big, 2 * a_sum + 3 * ai]);
        partitions.push((4 * l..4 * l + 4).collect());
    }
    let weights: Vec<String> = spec.weights.iter().map(i64::to_string).collect();
    let instance = Instance::new(
        format!("partition-{}", weights.join("-")),
        ItemCosts::new(c, d)?,
        Budgets::new(n, 1),
        FeasibleSet::MultiRepSelection {
            partitions,
            p: vec![1; n],
        },
    )?;
    Ok(ReducedInstance {
        instance,
        threshold: (2 * n as i64 - 2) * a_sum - 3 * amax,
    })
}

/// On-disk instance layout (0-based indices).
#[derive(Clone, Debug, Serialize, Deserialize)]
struct InstanceFile {
    name: String,
    c_hat: Vec<i64>,
    d: Vec<i64>,
    gamma: usize,
    gamma_prime: usize,
    feasible_set: FeasibleSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

pub fn instance_to_json(inst: &Instance) -> Result<String> {
    let file = InstanceFile {
        name: inst.name.clone(),
        c_hat: inst.c_hat().to_vec(),
        d: inst.d().to_vec(),
        gamma: inst.gamma(),
        gamma_prime: inst.gamma_prime(),
        feasible_set: inst.feasible.clone(),
        seed: inst.seed,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    let f: InstanceFile = serde_json::from_str(text)?;
    let inst = Instance::new(
        f.name,
        ItemCosts::new(f.c_hat, f.d)?,
        Budgets::new(f.gamma, f.gamma_prime),
        f.feasible_set,
    )?;
    Ok(match f.seed {
        Some(s) => inst.with_seed(s),
        None => inst,
    })
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn write_instance(path: &Path, inst: &Instance) -> Result<()> {
    let mut text = instance_to_json(inst)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Nearest-rank percentile: the value at 1-based rank `⌈q·m⌉` of the sorted
/// sample, with `q` given in percent.
pub fn nearest_rank(sorted: &[f64], percent: usize) -> f64 {
    let m = sorted.len();
    let rank = (percent * m).div_ceil(100).max(1);
    sorted[rank - 1]
}

fn parse_num<T: std::str::FromStr>(field: &str, what: &str, line: usize) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Input(format!("line {line}: cannot parse {what} from {field:?}")))
}

fn csv_rows(path: &Path) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let header = k == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err());
        if !header && !rec.iter().all(str::is_empty) {
            rows.push((k + 1, rec));
        }
    }
    Ok(rows)
}

/// Builds one shortest-path instance per `(source, target)` pair from an
/// edge file (`edge_id, tail, head, t_1, …, t_m` with `m ≥ 10`). Nominal
/// costs are the rounded 10th percentiles of the scenario travel times and
/// deviations the rounded 90th percentile minus the nominal cost.
pub fn ingest_graph(edges_path: &Path, pairs_path: &Path, budgets: Budgets) -> Result<Vec<Instance>> {
    let mut edges = Vec::new();
    let mut c = Vec::new();
    let mut d = Vec::new();
    let mut nodes = 0usize;
    for (line, rec) in csv_rows(edges_path)? {
        if rec.len() < 13 {
            return input(format!(
                "line {line}: expected edge id, tail, head and at least 10 scenarios"
            ));
        }
        let tail: usize = parse_num(&rec[1], "tail", line)?;
        let head: usize = parse_num(&rec[2], "head", line)?;
        let mut times = rec
            .iter()
            .skip(3)
            .map(|f| parse_num::<f64>(f, "travel time", line))
            .collect::<Result<Vec<f64>>>()?;
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return input(format!("line {line}: travel times must be finite and non-negative"));
        }
        times.sort_by(f64::total_cmp);
        let lo = nearest_rank(&times, 10).round() as i64;
        let hi = nearest_rank(&times, 90).round() as i64;
        edges.push((tail, head));
        c.push(lo);
        d.push(hi - lo);
        nodes = nodes.max(tail + 1).max(head + 1);
    }
    if edges.is_empty() {
        return input("the edge file has no edges");
    }
    let mut out = Vec::new();
    for (line, rec) in csv_rows(pairs_path)? {
        if rec.len() < 2 {
            return input(format!("line {line}: expected source, target"));
        }
        let source: usize = parse_num(&rec[0], "source", line)?;
        let target: usize = parse_num(&rec[1], "target", line)?;
        let built = Instance::new(
            format!("graph-{source}-{target}"),
            ItemCosts::new(c.clone(), d.clone())?,
            Budgets::new(budgets.gamma.min(edges.len()), budgets.gamma_prime.min(edges.len())),
            FeasibleSet::ShortestPath {
                nodes,
                edges: edges.clone(),
                source,
                target,
            },
        );
        match built {
            Ok(inst) => out.push(inst),
            Err(Error::Infeasible(msg)) => warn!("skipping pair {source} -> {target}: {msg}"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_generator() {
        let a = gen_selection(6, 5, Budgets::new(2, 1)).unwrap();
        let b = gen_selection(6, 5, Budgets::new(2, 1)).unwrap();
        assert_eq!(a, b);
        let FeasibleSet::MultiRepSelection { p, .. } = &a.feasible else {
            panic!()
        };
        assert_eq!(p, &vec![3]);
        assert_ne!(a, gen_selection(6, 6, Budgets::new(2, 1)).unwrap());
    }

    #[test]
    fn nominal_cost_distribution() {
        let inst = gen_selection(10_000, 1, Budgets::new(0, 0)).unwrap();
        let c = inst.c_hat();
        assert!(c.iter().all(|&v| (1..=100).contains(&v)));
        let mean = c.iter().sum::<i64>() as f64 / c.len() as f64;
        assert!((mean - 50.5).abs() <= 1.5, "mean {mean}");
        assert!(inst.d().iter().all(|&v| (0..=99).contains(&v)));
    }

    #[test]
    fn multirep_partitions() {
        let inst = gen_multirep(10, 4, 3, Budgets::new(1, 1)).unwrap();
        let FeasibleSet::MultiRepSelection { partitions, p } = &inst.feasible else {
            panic!()
        };
        let sizes: Vec<usize> = partitions.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 2, 2]);
        assert_eq!(p, &vec![1, 1, 1, 1]);
    }

    #[test]
    fn knapsack_generator_ranges() {
        for seed in 0..20 {
            let inst = gen_knapsack(30, seed, Budgets::new(3, 1), CapacityRule::Half).unwrap();
            let FeasibleSet::Knapsack { weights, capacity } = &inst.feasible else {
                panic!()
            };
            assert_eq!(*capacity, weights.iter().sum::<i64>() / 2);
            for i in 0..30 {
                let w = weights[i];
                let profit = -inst.c_hat()[i];
                let dev = inst.d()[i];
                assert!((1..=R_BAR).contains(&w));
                assert!(dev >= 0);
                // p is unknown after generation, but it lies in w + 98 ..= w + 102
                let feasible_p = (w + 98..=w + 102).any(|p| {
                    let lo = (4 * p + 4) / 5;
                    let hi = (6 * p + 4) / 5;
                    lo <= profit && profit <= p && profit + dev <= hi && dev >= p - profit
                });
                assert!(feasible_p, "item {i} of seed {seed}");
            }
        }
    }

    #[test]
    fn reduction_shapes() {
        let spec = ReductionSpec::new(vec![1, 1, 1, 1], ReductionKind::Equipartition).unwrap();
        let red = spec.build().unwrap();
        assert_eq!(red.instance.n(), 16);
        assert_eq!(red.threshold, 20);
        assert!(spec.is_yes_instance());
        let odd = ReductionSpec::new(vec![1, 1, 1], ReductionKind::Equipartition).unwrap();
        assert!(odd.build().is_err());

        let spec = ReductionSpec::new(vec![1, 1, 2, 2], ReductionKind::Partition).unwrap();
        let red = spec.build().unwrap();
        assert_eq!(red.threshold, 30);
        let FeasibleSet::MultiRepSelection { partitions, p } = &red.instance.feasible else {
            panic!()
        };
        assert!(partitions.iter().all(|t| t.len() == 4));
        assert!(p.iter().all(|&q| q == 1));

        // 1 + 1 + 1: a_max = 1 <= 3/3, no padding needed; 3 + 1 + 1 gets padded
        let spec = ReductionSpec::new(vec![3, 1, 1], ReductionKind::Partition).unwrap();
        let red = spec.build().unwrap();
        assert_eq!(red.instance.n(), 4 * 5);
    }

    #[test]
    fn json_round_trip() {
        for inst in [
            gen_selection(8, 2, Budgets::new(2, 1)).unwrap(),
            gen_knapsack(5, 2, Budgets::new(1, 1), CapacityRule::Value(900)).unwrap(),
            gen_layered_graph(2, 2, 2, Budgets::new(1, 0)).unwrap(),
        ] {
            let text = instance_to_json(&inst).unwrap();
            assert_eq!(instance_from_json(&text).unwrap(), inst);
        }
    }

    #[test]
    fn percentile_by_hand() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 10), 1.0);
        assert_eq!(nearest_rank(&v, 90), 9.0);
        let v = vec![7.0; 12];
        assert_eq!(nearest_rank(&v, 10), 7.0);
    }

    #[test]
    fn graph_ingestion() {
        let dir = tempfile::tempdir().unwrap();
        let edges = dir.path().join("edges.csv");
        let pairs = dir.path().join("pairs.csv");
        let times = |base: i64| -> String {
            (1..=10).map(|k| (base * k).to_string()).collect::<Vec<_>>().join(",")
        };
        fs::write(
            &edges,
            format!(
                "id,tail,head,s1,s2,s3,s4,s5,s6,s7,s8,s9,s10\n0,0,1,{}\n1,1,2,{}\n2,0,2,{}\n",
                times(1),
                ["4"; 10].join(","),
                times(3)
            ),
        )
        .unwrap();
        fs::write(&pairs, "0,2\n2,0\n").unwrap();
        let out = ingest_graph(&edges, &pairs, Budgets::new(1, 1)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].c_hat(), &[1, 4, 3]);
        assert_eq!(out[0].d(), &[8, 0, 24]);
        let again = ingest_graph(&edges, &pairs, Budgets::new(1, 1)).unwrap();
        assert_eq!(
            instance_to_json(&out[0]).unwrap(),
            instance_to_json(&again[0]).unwrap()
        );
        fs::write(&edges, "0,0,1,1,2\n").unwrap();
        assert!(ingest_graph(&edges, &pairs, Budgets::new(1, 1)).is_err());
    }
}
