//! Feasibility, nominal optimization, enumeration and linear encoding of the
//! three feasible-set families.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{input, Error, Result};
use crate::milp::{MilpModel, Sense, VarId};
use crate::types::{BinarySolution, FeasibleSet};

/// Largest `n · (capacity + 1)` table the knapsack dynamic program allocates.
const KNAPSACK_TABLE_LIMIT: usize = 50_000_000;

impl FeasibleSet {
    /// Number of items.
    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::MultiRepSelection { partitions, .. } => {
                partitions.iter().map(Vec::len).sum()
            }
            FeasibleSet::Knapsack { weights, .. } => weights.len(),
            FeasibleSet::ShortestPath { edges, .. } => edges.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleSet::MultiRepSelection { partitions, p } => {
                if partitions.len() != p.len() {
                    return input("one quota per partition is required");
                }
                if partitions.is_empty() {
                    return input("at least one partition is required");
                }
                let n = self.dim();
                let mut seen = vec![false; n];
                for (part, &quota) in partitions.iter().zip(p) {
                    if quota < 1 || quota > part.len() {
                        return input(format!(
                            "quota {quota} outside 1..={} for a partition",
                            part.len()
                        ));
                    }
                    for &i in part {
                        if i >= n || seen[i] {
                            return input(format!(
                                "partitions must be disjoint and cover 0..{n} (bad index {i})"
                            ));
                        }
                        seen[i] = true;
                    }
                }
                Ok(())
            }
            FeasibleSet::Knapsack { weights, capacity } => {
                if weights.iter().any(|&w| w <= 0) {
                    return input("knapsack weights must be positive");
                }
                if *capacity <= 0 {
                    return input("knapsack capacity must be positive");
                }
                Ok(())
            }
            FeasibleSet::ShortestPath {
                nodes,
                edges,
                source,
                target,
            } => {
                if source == target {
                    return input("source and target must differ");
                }
                if *source >= *nodes || *target >= *nodes {
                    return input("source or target out of range");
                }
                if let Some(e) = edges.iter().position(|&(u, v)| u >= *nodes || v >= *nodes) {
                    return input(format!("edge {e} references a missing node"));
                }
                if !reachable(*nodes, edges, *source, *target) {
                    return Err(Error::Infeasible(format!(
                        "node {target} is unreachable from {source}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn is_feasible(&self, x: &BinarySolution) -> Result<bool> {
        if x.len() != self.dim() {
            return input(format!(
                "solution has length {} but the feasible set has dimension {}",
                x.len(),
                self.dim()
            ));
        }
        Ok(match self {
            FeasibleSet::MultiRepSelection { partitions, p } => partitions
                .iter()
                .zip(p)
                .all(|(part, &q)| part.iter().filter(|&&i| x.get(i)).count() == q),
            FeasibleSet::Knapsack { weights, capacity } => {
                x.dot(weights) <= *capacity
            }
            FeasibleSet::ShortestPath {
                nodes,
                edges,
                source,
                target,
            } => is_simple_path(*nodes, edges, *source, *target, x),
        })
    }

    /// A minimizer of `costs · x`; ties prefer lower indices.
    pub fn nominal_solve(&self, costs: &[i64]) -> Result<(BinarySolution, i64)> {
        let n = self.dim();
        if costs.len() != n {
            return input(format!("expected {n} costs, got {}", costs.len()));
        }
        let x = match self {
            FeasibleSet::MultiRepSelection { partitions, p } => {
                let mut x = BinarySolution::zeros(n);
                for (part, &quota) in partitions.iter().zip(p) {
                    let mut order = part.clone();
                    order.sort_by_key(|&i| (costs[i], i));
                    for &i in &order[..quota] {
                        x.set(i, true);
                    }
                }
                x
            }
            FeasibleSet::Knapsack { weights, capacity } => {
                knapsack_min(weights, *capacity, costs)?
            }
            FeasibleSet::ShortestPath {
                nodes,
                edges,
                source,
                target,
            } => {
                if let Some(e) = costs.iter().position(|&c| c < 0) {
                    return input(format!("shortest path needs non-negative costs (edge {e})"));
                }
                dijkstra(*nodes, edges, *source, *target, costs)?
            }
        };
        let value = x.dot(costs);
        Ok((x, value))
    }

    /// Number of feasible solutions, or `None` once it exceeds `limit`.
    pub fn count_feasible(&self, limit: usize) -> Option<usize> {
        let mut count = 0usize;
        let complete = self.visit(&mut |_| {
            count += 1;
            count <= limit
        });
        complete.then_some(count)
    }

    /// All feasible solutions in a fixed enumeration order; fails with a scale
    /// error if there are more than `limit`.
    pub fn enumerate(&self, limit: usize) -> Result<Vec<BinarySolution>> {
        let mut out = Vec::new();
        let complete = self.visit(&mut |x| {
            if out.len() >= limit {
                return false;
            }
            out.push(x.clone());
            true
        });
        if !complete {
            return Err(Error::Scale(format!(
                "more than {limit} feasible solutions"
            )));
        }
        Ok(out)
    }

    /// Calls `f` on every feasible solution until it returns false. Returns
    /// whether the enumeration ran to completion.
    pub fn visit(&self, f: &mut dyn FnMut(&BinarySolution) -> bool) -> bool {
        let n = self.dim();
        let mut x = BinarySolution::zeros(n);
        match self {
            FeasibleSet::MultiRepSelection { partitions, p } => {
                visit_selection(partitions, p, 0, 0, 0, &mut x, f)
            }
            FeasibleSet::Knapsack { weights, capacity } => {
                visit_knapsack(weights, 0, *capacity, &mut x, f)
            }
            FeasibleSet::ShortestPath {
                nodes,
                edges,
                source,
                target,
            } => {
                let adj = out_adjacency(*nodes, edges);
                let mut on_path = vec![false; *nodes];
                on_path[*source] = true;
                visit_paths(&adj, edges, *source, *target, &mut on_path, &mut x, f)
            }
        }
    }

    /// Adds the linear description of the set over `vars` to `model`.
    pub fn encode(&self, model: &mut MilpModel, vars: &[VarId]) {
        match self {
            FeasibleSet::MultiRepSelection { partitions, p } => {
                for (part, &quota) in partitions.iter().zip(p) {
                    let row = part.iter().map(|&i| (vars[i], 1.0)).collect();
                    model.add_constraint(row, Sense::Eq, quota as f64);
                }
            }
            FeasibleSet::Knapsack { weights, capacity } => {
                let row = weights
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| (vars[i], w as f64))
                    .collect();
                model.add_constraint(row, Sense::Le, *capacity as f64);
            }
            FeasibleSet::ShortestPath {
                nodes,
                edges,
                source,
                target,
            } => {
                let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); *nodes];
                for (e, &(u, v)) in edges.iter().enumerate() {
                    rows[u].push((vars[e], 1.0));
                    rows[v].push((vars[e], -1.0));
                }
                for (node, row) in rows.into_iter().enumerate() {
                    let rhs = if node == *source {
                        1.0
                    } else if node == *target {
                        -1.0
                    } else {
                        0.0
                    };
                    if row.is_empty() {
                        continue;
                    }
                    model.add_constraint(row, Sense::Eq, rhs);
                }
            }
        }
    }

    /// Maps a solution of the linear encoding to a member of the set that
    /// uses a subset of its items. Only path instances can differ: flow
    /// solutions may carry detached cycles, which are dropped.
    pub fn canonicalize(&self, x: &BinarySolution) -> BinarySolution {
        match self {
            FeasibleSet::ShortestPath {
                nodes,
                edges,
                source,
                target,
            } => extract_path(*nodes, edges, *source, *target, x).unwrap_or_else(|| x.clone()),
            _ => x.clone(),
        }
    }
}

fn visit_selection(
    partitions: &[Vec<usize>],
    p: &[usize],
    part: usize,
    pos: usize,
    chosen: usize,
    x: &mut BinarySolution,
    f: &mut dyn FnMut(&BinarySolution) -> bool,
) -> bool {
    if part == partitions.len() {
        return f(x);
    }
    let items = &partitions[part];
    let quota = p[part];
    if chosen == quota {
        return visit_selection(partitions, p, part + 1, 0, 0, x, f);
    }
    if items.len() - pos < quota - chosen {
        return true;
    }
    // take before skip, so the first solution is the lexicographically smallest index set
    x.set(items[pos], true);
    if !visit_selection(partitions, p, part, pos + 1, chosen + 1, x, f) {
        x.set(items[pos], false);
        return false;
    }
    x.set(items[pos], false);
    visit_selection(partitions, p, part, pos + 1, chosen, x, f)
}

fn visit_knapsack(
    weights: &[i64],
    pos: usize,
    remaining: i64,
    x: &mut BinarySolution,
    f: &mut dyn FnMut(&BinarySolution) -> bool,
) -> bool {
    if pos == weights.len() {
        return f(x);
    }
    if !visit_knapsack(weights, pos + 1, remaining, x, f) {
        return false;
    }
    if weights[pos] <= remaining {
        x.set(pos, true);
        let ok = visit_knapsack(weights, pos + 1, remaining - weights[pos], x, f);
        x.set(pos, false);
        return ok;
    }
    true
}

fn visit_paths(
    adj: &[Vec<usize>],
    edges: &[(usize, usize)],
    at: usize,
    target: usize,
    on_path: &mut [bool],
    x: &mut BinarySolution,
    f: &mut dyn FnMut(&BinarySolution) -> bool,
) -> bool {
    if at == target {
        return f(x);
    }
    for &e in &adj[at] {
        let next = edges[e].1;
        if on_path[next] {
            continue;
        }
        on_path[next] = true;
        x.set(e, true);
        let ok = visit_paths(adj, edges, next, target, on_path, x, f);
        x.set(e, false);
        on_path[next] = false;
        if !ok {
            return false;
        }
    }
    true
}

fn out_adjacency(nodes: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); nodes];
    for (e, &(u, _)) in edges.iter().enumerate() {
        adj[u].push(e);
    }
    adj
}

fn reachable(nodes: usize, edges: &[(usize, usize)], source: usize, target: usize) -> bool {
    let adj = out_adjacency(nodes, edges);
    let mut seen = vec![false; nodes];
    let mut stack = vec![source];
    seen[source] = true;
    while let Some(u) = stack.pop() {
        if u == target {
            return true;
        }
        for &e in &adj[u] {
            let v = edges[e].1;
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    false
}

fn is_simple_path(
    nodes: usize,
    edges: &[(usize, usize)],
    source: usize,
    target: usize,
    x: &BinarySolution,
) -> bool {
    let mut next = vec![usize::MAX; nodes];
    let mut indeg = vec![0usize; nodes];
    let mut selected = 0usize;
    for (e, &(u, v)) in edges.iter().enumerate() {
        if !x.get(e) {
            continue;
        }
        if next[u] != usize::MAX {
            return false;
        }
        next[u] = v;
        indeg[v] += 1;
        selected += 1;
    }
    if indeg[source] != 0 || next[target] != usize::MAX {
        return false;
    }
    let mut visited = vec![false; nodes];
    let mut at = source;
    let mut walked = 0usize;
    visited[source] = true;
    while at != target {
        let v = next[at];
        if v == usize::MAX || visited[v] {
            return false;
        }
        visited[v] = true;
        walked += 1;
        at = v;
    }
    walked == selected
}

fn extract_path(
    nodes: usize,
    edges: &[(usize, usize)],
    source: usize,
    target: usize,
    x: &BinarySolution,
) -> Option<BinarySolution> {
    let adj = out_adjacency(nodes, edges);
    // walk the flow, cutting loops as soon as a node repeats
    let mut path: Vec<usize> = Vec::new();
    let mut pos_of = vec![usize::MAX; nodes];
    let mut used = vec![false; edges.len()];
    let mut at = source;
    pos_of[source] = 0;
    let mut steps = 0;
    while at != target {
        let e = *adj[at].iter().find(|&&e| x.get(e) && !used[e])?;
        used[e] = true;
        steps += 1;
        if steps > edges.len() {
            return None;
        }
        let v = edges[e].1;
        if pos_of[v] != usize::MAX {
            let keep = pos_of[v];
            for &old in &path[keep..] {
                pos_of[edges[old].1] = usize::MAX;
            }
            path.truncate(keep);
            pos_of[v] = keep;
        } else {
            path.push(e);
            pos_of[v] = path.len();
        }
        at = v;
    }
    let mut out = BinarySolution::zeros(edges.len());
    for e in path {
        out.set(e, true);
    }
    Some(out)
}

fn dijkstra(
    nodes: usize,
    edges: &[(usize, usize)],
    source: usize,
    target: usize,
    costs: &[i64],
) -> Result<BinarySolution> {
    let adj = out_adjacency(nodes, edges);
    let mut dist = vec![i64::MAX; nodes];
    let mut pred = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0i64, source)));
    while let Some(Reverse((du, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == target {
            break;
        }
        for &e in &adj[u] {
            let v = edges[e].1;
            let alt = du + costs[e];
            if alt < dist[v] {
                dist[v] = alt;
                pred[v] = e;
                heap.push(Reverse((alt, v)));
            }
        }
    }
    if dist[target] == i64::MAX {
        return Err(Error::Infeasible(format!(
            "node {target} is unreachable from {source}"
        )));
    }
    let mut x = BinarySolution::zeros(edges.len());
    let mut at = target;
    while at != source {
        let e = pred[at];
        x.set(e, true);
        at = edges[e].0;
    }
    Ok(x)
}

/// Minimizes `costs · x` subject to the capacity. Only items with negative
/// cost can help; among those the forgone profit `-costs` is maximized.
fn knapsack_min(weights: &[i64], capacity: i64, costs: &[i64]) -> Result<BinarySolution> {
    let n = weights.len();
    let candidates: Vec<usize> = (0..n)
        .filter(|&i| costs[i] < 0 && weights[i] <= capacity)
        .collect();
    let mut x = BinarySolution::zeros(n);
    if candidates.is_empty() {
        return Ok(x);
    }
    let total: i64 = candidates.iter().map(|&i| weights[i]).sum();
    let cap = capacity.min(total) as usize;
    if candidates.len().saturating_mul(cap + 1) > KNAPSACK_TABLE_LIMIT {
        return Err(Error::Scale(format!(
            "knapsack table {} x {} too large",
            candidates.len(),
            cap + 1
        )));
    }
    let mut best = vec![0i64; cap + 1];
    let mut take = vec![false; candidates.len() * (cap + 1)];
    for (k, &i) in candidates.iter().enumerate() {
        let w = weights[i] as usize;
        let gain = -costs[i];
        for c in (w..=cap).rev() {
            let alt = best[c - w] + gain;
            if alt > best[c] {
                best[c] = alt;
                take[k * (cap + 1) + c] = true;
            }
        }
    }
    let mut c = cap;
    for (k, &i) in candidates.iter().enumerate().rev() {
        if take[k * (cap + 1) + c] {
            x.set(i, true);
            c -= weights[i] as usize;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn selection(n: usize, p: usize) -> FeasibleSet {
        FeasibleSet::MultiRepSelection {
            partitions: vec![(0..n).collect()],
            p: vec![p],
        }
    }

    fn sol(n: usize, ones: &[usize]) -> BinarySolution {
        BinarySolution::from_indices(n, ones).unwrap()
    }

    #[test]
    fn selection_feasibility() {
        assert!(selection(6, 3).is_feasible(&sol(6, &[3, 4, 5])).unwrap());
        assert!(!selection(6, 1).is_feasible(&BinarySolution::zeros(6)).unwrap());
        assert!(selection(5, 2).is_feasible(&sol(5, &[0, 2])).unwrap());
        assert!(selection(5, 2).is_feasible(&BinarySolution::zeros(4)).is_err());
    }

    #[test]
    fn selection_nominal_second_example() {
        let f = selection(6, 3);
        let (x, v) = f.nominal_solve(&[3, 2, 1, 4, 4, 4]).unwrap();
        assert_eq!(x.indices(), vec![0, 1, 2]);
        assert_eq!(v, 6);
        let (x, v) = f.nominal_solve(&[5, 6, 5, 4, 4, 4]).unwrap();
        assert_eq!(x.indices(), vec![3, 4, 5]);
        assert_eq!(v, 12);
        let (x, v) = f.nominal_solve(&[0; 6]).unwrap();
        assert!(f.is_feasible(&x).unwrap());
        assert_eq!(v, 0);
    }

    #[test]
    fn knapsack_minimum_matches_enumeration() {
        let f = FeasibleSet::Knapsack {
            weights: vec![3, 4, 5, 2, 7],
            capacity: 10,
        };
        let costs = [-4, -5, -6, -1, 3];
        let (_, v) = f.nominal_solve(&costs).unwrap();
        let best = f
            .enumerate(1000)
            .unwrap()
            .iter()
            .map(|x| x.dot(&costs))
            .min()
            .unwrap();
        assert_eq!(v, best);
        let (x, v) = f.nominal_solve(&[1, 1, 1, 1, 1]).unwrap();
        assert_eq!((x.count(), v), (0, 0));
    }

    fn diamond() -> FeasibleSet {
        // 0 -> 1 -> 3, 0 -> 2 -> 3, 1 -> 2, plus a back edge 2 -> 1
        FeasibleSet::ShortestPath {
            nodes: 4,
            edges: vec![(0, 1), (1, 3), (0, 2), (2, 3), (1, 2), (2, 1)],
            source: 0,
            target: 3,
        }
    }

    #[test]
    fn path_feasibility_rejects_cycles() {
        let f = diamond();
        assert!(f.is_feasible(&sol(6, &[0, 1])).unwrap());
        assert!(f.is_feasible(&sol(6, &[0, 4, 3])).unwrap());
        // path plus a detached 1 <-> 2 cycle
        assert!(!f.is_feasible(&sol(6, &[2, 3, 4, 5])).unwrap());
        assert!(!f.is_feasible(&sol(6, &[0])).unwrap());
        assert_eq!(f.canonicalize(&sol(6, &[0, 1, 4, 5])).indices(), vec![0, 1]);
    }

    #[test]
    fn path_enumeration_and_dijkstra() {
        let f = diamond();
        let paths = f.enumerate(100).unwrap();
        assert_eq!(paths.len(), 4);
        assert!(paths.iter().all(|x| f.is_feasible(x).unwrap()));
        let costs = [1, 5, 2, 1, 0, 0];
        let (x, v) = f.nominal_solve(&costs).unwrap();
        let best = paths.iter().map(|x| x.dot(&costs)).min().unwrap();
        assert_eq!(v, best);
        assert_eq!(x.indices(), vec![0, 3, 4]);
        assert!(f.is_feasible(&x).unwrap());
    }

    #[test]
    fn unreachable_target_is_rejected() {
        let f = FeasibleSet::ShortestPath {
            nodes: 3,
            edges: vec![(0, 1)],
            source: 0,
            target: 2,
        };
        assert!(matches!(f.validate(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn selection_counts() {
        let f = FeasibleSet::MultiRepSelection {
            partitions: vec![vec![0, 1, 2], vec![3, 4, 5, 6]],
            p: vec![1, 2],
        };
        assert_eq!(f.count_feasible(1000), Some(18));
        assert_eq!(f.count_feasible(10), None);
        assert!(f.enumerate(10).is_err());
    }
}
