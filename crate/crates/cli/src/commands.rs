use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use balreg::evaluation::{instance_criteria, Label};
use balreg::instances::{
    gen_knapsack, gen_layered_graph, gen_multirep, gen_selection, ingest_graph, read_instance,
    write_instance, CapacityRule, ReductionKind, ReductionSpec,
};
use balreg::master::{build_compact_mrs, build_master, solve_bruteforce};
use balreg::rng::SplitMix64;
use balreg::{
    check_zero_solution, dominance_reduce, optimize_criterion, solve_compact_mrs, solve_enumeration,
    solve_iterative, solve_regret_budgeted_mrs, AdversaryMethod, Budgets, CriteriaMatrix, Criterion,
    Instance, MasterOptions, ScenarioPool, SolveReport, SolveStatus,
};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::{Adversary, CrosscheckArgs, EvaluateArgs, Family, GenerateArgs, IngestArgs, Method, SolveArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] balreg::Error),
    #[error("{0}")]
    Limit(String),
    #[error("{0}")]
    Disagreement(String),
}

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

fn io(e: std::io::Error) -> CliError {
    CliError::Core(e.into())
}

fn parse_capacity(rule: &str) -> Result<CapacityRule> {
    match rule.split_once(':') {
        None if rule == "half" => Ok(CapacityRule::Half),
        Some(("value", v)) => v
            .parse()
            .map(CapacityRule::Value)
            .map_err(|_| CliError::Usage(format!("bad capacity {v:?}"))),
        _ => usage(format!("capacity rule must be `half` or `value:C`, got {rule:?}")),
    }
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let budgets = Budgets::new(a.gamma, a.gamma_prime);
    let inst = match a.family {
        Family::Selection => gen_selection(a.n, a.seed, budgets)?,
        Family::Multirep => gen_multirep(a.n, a.partitions, a.seed, budgets)?,
        Family::Knapsack => gen_knapsack(a.n, a.seed, budgets, parse_capacity(&a.capacity_rule)?)?,
        Family::Layered => gen_layered_graph(a.n, a.width, a.seed, budgets)?,
        Family::Equipartition | Family::Partition => {
            let kind = match a.family {
                Family::Equipartition => ReductionKind::Equipartition,
                _ => ReductionKind::Partition,
            };
            let weights = match &a.weights {
                Some(w) => w.clone(),
                None => {
                    let mut rng = SplitMix64::new(a.seed);
                    (0..a.n).map(|_| rng.range(1, 10)).collect()
                }
            };
            if a.gamma != 0 || a.gamma_prime != 0 {
                warn!("reduction instances fix their own budgets; --gamma and --gamma-prime are ignored");
            }
            let red = ReductionSpec::new(weights, kind)?.build()?;
            info!("threshold {}", red.threshold);
            red.instance.with_seed(a.seed)
        }
    };
    info!("seed {}", a.seed);
    write_instance(&a.out, &inst)?;
    info!("wrote {} ({} items) to {}", inst.name, inst.n(), a.out.display());
    Ok(())
}

fn master_options(time_limit: Option<f64>, node_limit: Option<usize>) -> Result<MasterOptions> {
    let mut opts = MasterOptions::default();
    if let Some(t) = time_limit {
        if !(t > 0.0 && t.is_finite()) {
            return usage("--time-limit must be a positive number of seconds");
        }
        opts.time_limit = Duration::from_secs_f64(t);
    }
    if let Some(n) = node_limit {
        opts.node_limit = n;
    }
    Ok(opts)
}

fn adversary(a: Adversary) -> AdversaryMethod {
    match a {
        Adversary::Auto => AdversaryMethod::Auto,
        Adversary::Dp => AdversaryMethod::Dp,
        Adversary::Milp => AdversaryMethod::Milp,
        Adversary::Bruteforce => AdversaryMethod::Bruteforce,
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    instance: &'a str,
    seed: Option<u64>,
    version: &'static str,
    #[serde(flatten)]
    report: &'a SolveReport,
    gap: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_secs: Option<f64>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(balreg::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(io)
}

pub fn solve(a: &SolveArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let opts = master_options(a.time_limit, a.node_limit)?;
    let cuts = if a.cuts {
        Some(dominance_reduce(&inst)?.precedences)
    } else {
        None
    };
    if let Some(path) = &a.dump_lp {
        let model = match a.method {
            Method::Compact => build_compact_mrs(&inst, cuts.as_deref())?.0,
            _ => build_master(&inst, &ScenarioPool::initial(&inst)?)?.model,
        };
        fs::write(path, model.to_lp_string()).map_err(io)?;
    }
    let report = match a.method {
        Method::Auto => optimize_criterion(&inst, Criterion::Br, &opts)?,
        Method::Iterative => solve_iterative(&inst, adversary(a.adversary), &opts)?,
        Method::Enumeration => solve_enumeration(&inst, &opts)?,
        Method::Compact => solve_compact_mrs(&inst, cuts.as_deref(), &opts)?,
        Method::Bruteforce => solve_bruteforce(&inst)?,
        Method::RegretPoly => solve_regret_budgeted_mrs(&inst)?,
    };
    let out = SolveOutput {
        instance: &inst.name,
        seed: inst.seed,
        version: balreg::VERSION,
        report: &report,
        gap: report.gap(),
        wall_time_secs: a.timing.then_some(report.wall_time.as_secs_f64()),
    };
    write_json(&a.out, &out)?;
    info!("{}: value {} by {} ({:?})", inst.name, report.value, report.method, report.status);
    match report.status {
        SolveStatus::Optimal => Ok(()),
        s => Err(CliError::Limit(format!(
            "stopped by {s:?} with incumbent {} and gap {}",
            report.value,
            report.gap()
        ))),
    }
}

fn load_batch(pattern: &str) -> Result<Vec<Instance>> {
    let paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| CliError::Usage(format!("bad pattern {pattern:?}: {e}")))?
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if paths.is_empty() {
        return usage(format!("no instance files match {pattern:?}"));
    }
    let mut sorted = paths;
    sorted.sort();
    sorted.iter().map(|p| Ok(read_instance(p)?)).collect()
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_range(range: &str) -> Result<Vec<usize>> {
    let bad = || CliError::Usage(format!("range must look like A..B, got {range:?}"));
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn labels(criteria: &str, range: Option<&str>) -> Result<Vec<Label>> {
    let chosen: Vec<Criterion> = if criteria == "all" {
        Criterion::ALL.to_vec()
    } else {
        criteria
            .split(',')
            .map(|c| c.parse::<Criterion>())
            .collect::<balreg::Result<_>>()?
    };
    let mut out: Vec<Label> = chosen
        .iter()
        .filter(|&&c| c != Criterion::Br)
        .map(|&c| Label::Plain(c))
        .collect();
    match range {
        Some(r) => out.extend(parse_range(r)?.into_iter().map(Label::Balanced)),
        None if chosen.contains(&Criterion::Br) => out.push(Label::Plain(Criterion::Br)),
        None => {}
    }
    if out.is_empty() {
        return usage("no criteria selected");
    }
    Ok(out)
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let batch = load_batch(&a.instances)?;
    let labels = labels(&a.criteria, a.gamma_prime_range.as_deref())?;
    let opts = master_options(a.time_limit, None)?;
    let rows = thread_pool(a.jobs)?.install(|| {
        batch
            .par_iter()
            .map(|inst| instance_criteria(inst, &labels, &opts))
            .collect::<balreg::Result<Vec<_>>>()
    })?;
    let matrix = CriteriaMatrix::aggregate(labels, rows)?;
    matrix.write_csv(fs::File::create(&a.out).map_err(io)?)?;
    if let Some(path) = &a.values {
        matrix.write_values_csv(fs::File::create(path).map_err(io)?)?;
    }
    info!("evaluated {} instances into {}", batch.len(), a.out.display());
    Ok(())
}

/// Every applicable method's value; `None` marks a skipped method.
fn crosscheck_one(inst: &Instance) -> balreg::Result<Vec<(String, i64)>> {
    let opts = MasterOptions::default();
    let mut out = Vec::new();
    let mut push = |r: balreg::Result<SolveReport>| -> balreg::Result<()> {
        match r {
            Ok(rep) => out.push((rep.method.clone(), rep.value)),
            Err(balreg::Error::Scale(msg)) => warn!("{}: skipped a method: {msg}", inst.name),
            Err(e) => return Err(e),
        }
        Ok(())
    };
    push(solve_bruteforce(inst))?;
    push(solve_enumeration(inst, &opts))?;
    push(solve_iterative(inst, AdversaryMethod::Milp, &opts))?;
    push(optimize_criterion(inst, Criterion::Br, &opts))?;
    if inst.is_selection() {
        push(solve_iterative(inst, AdversaryMethod::Dp, &opts))?;
        push(solve_compact_mrs(inst, None, &opts))?;
        if inst.gamma_prime() == 0 {
            push(solve_regret_budgeted_mrs(inst))?;
        }
        if inst.gamma() >= 1 && inst.gamma_prime() >= 1 {
            let zero = check_zero_solution(inst)?.is_some();
            out.push(("zero-check".into(), if zero { 0 } else { -1 }));
        }
    }
    Ok(out)
}

pub fn crosscheck(a: &CrosscheckArgs) -> Result<()> {
    let batch: Vec<Instance> = load_batch(&a.instances)?
        .into_iter()
        .filter(|i| {
            let keep = i.n() <= a.max_n;
            if !keep {
                info!("skipping {} with {} items", i.name, i.n());
            }
            keep
        })
        .collect();
    let results = thread_pool(a.jobs)?.install(|| {
        batch
            .par_iter()
            .map(crosscheck_one)
            .collect::<balreg::Result<Vec<_>>>()
    })?;
    let mut disagreements = Vec::new();
    let mut rows = vec!["instance,method,value".to_string()];
    for (inst, values) in batch.iter().zip(&results) {
        let reference = values.iter().find(|(m, _)| m != "zero-check").map(|(_, v)| *v);
        for (method, v) in values {
            rows.push(format!("{},{method},{v}", inst.name));
            let agrees = match (method.as_str(), reference) {
                ("zero-check", Some(r)) => (*v == 0) == (r == 0),
                (_, Some(r)) => *v == r,
                _ => true,
            };
            if !agrees {
                disagreements.push(format!("{}: {method} gives {v}, reference {reference:?}", inst.name));
            }
        }
    }
    if let Some(path) = &a.out {
        fs::write(path, rows.join("\n") + "\n").map_err(io)?;
    }
    info!("cross-checked {} instances", batch.len());
    if disagreements.is_empty() {
        Ok(())
    } else {
        for d in &disagreements {
            log::error!("{d}");
        }
        Err(CliError::Disagreement(format!("{} disagreements", disagreements.len())))
    }
}

pub fn ingest(a: &IngestArgs) -> Result<()> {
    let instances = ingest_graph(&a.edges, &a.pairs, Budgets::new(a.gamma, a.gamma_prime))?;
    fs::create_dir_all(&a.out).map_err(io)?;
    for inst in &instances {
        write_instance(&a.out.join(format!("{}.json", inst.name)), inst)?;
    }
    info!("wrote {} instances to {}", instances.len(), a.out.display());
    Ok(())
}
