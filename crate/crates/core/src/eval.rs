//! Neighbour-fixed re-solves, per-instance gap and speedup, and the
//! aggregate report.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::{nearest_neighbors, InstanceRecord, NeighborSet};
use crate::milp::HighsBackend;
use crate::opf::solve_opf_with;
use crate::ptdf::{compute_ptdf, PtdfMatrix};
use crate::scenario::ScenarioInstance;
use crate::system::PowerSystem;
use crate::uc::{solve_uc_with, SolverConfig};

/// Upper edges of the first four gap buckets, as fractions. The last bucket
/// is open above.
pub const BUCKET_EDGES: [f64; 4] = [1e-4, 2e-4, 5e-4, 1e-3];
pub const BUCKET_LABELS: [&str; 5] = ["<0.01%", "0.01-0.02%", "0.02-0.05%", "0.05-0.1%", ">0.1%"];

/// Largest share of failed solves tolerated while building a record store.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpfResult {
    pub neighbor_id: u64,
    pub feasible: bool,
    /// Absent when infeasible.
    pub objective: Option<f64>,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEval {
    pub instance_id: u64,
    pub neighbor_set: NeighborSet,
    pub opf_results: Vec<OpfResult>,
    pub uc_objective: f64,
    pub uc_solve_seconds: f64,
    pub best_cost: Option<f64>,
    pub best_neighbor: Option<u64>,
    pub gap: Option<f64>,
    pub speedup: f64,
    pub all_infeasible: bool,
    /// Elapsed time of the whole evaluation, for reference only.
    pub wall_seconds: f64,
}

/// `(best - uc) / uc`.
pub fn suboptimality_gap(best_cost: f64, uc_objective: f64) -> f64 {
    (best_cost - uc_objective) / uc_objective
}

/// UC time over the slowest re-solve plus the selection time.
pub fn speedup(uc_seconds: f64, opf_seconds: &[f64], learn_seconds: f64) -> f64 {
    let slowest = opf_seconds.iter().copied().fold(0.0, f64::max);
    uc_seconds / (slowest + learn_seconds)
}

impl InstanceEval {
    /// Derives best cost, gap and speedup from the raw timings and costs.
    pub fn from_results(
        record: &InstanceRecord,
        neighbor_set: NeighborSet,
        opf_results: Vec<OpfResult>,
        wall_seconds: f64,
    ) -> Self {
        let best = opf_results
            .iter()
            .filter_map(|r| r.objective.filter(|_| r.feasible).map(|c| (c, r.neighbor_id)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let times: Vec<f64> = opf_results.iter().map(|r| r.solve_seconds).collect();
        let speedup = speedup(record.uc_solve_seconds, &times, neighbor_set.learn_seconds);
        Self {
            instance_id: record.instance_id,
            neighbor_set,
            opf_results,
            uc_objective: record.uc_objective,
            uc_solve_seconds: record.uc_solve_seconds,
            best_cost: best.map(|b| b.0),
            best_neighbor: best.map(|b| b.1),
            gap: best.map(|b| suboptimality_gap(b.0, record.uc_objective)),
            speedup,
            all_infeasible: best.is_none(),
            wall_seconds,
        }
    }
}

/// Read-only evaluation context shared by all queries on one system.
pub struct Evaluator<'a> {
    system: &'a PowerSystem,
    ptdf: PtdfMatrix,
    records: &'a [InstanceRecord],
    by_id: HashMap<u64, usize>,
    config: SolverConfig,
    pool: rayon::ThreadPool,
    k: usize,
}

impl<'a> Evaluator<'a> {
    /// `jobs` caps the number of concurrent re-solves per instance.
    pub fn new(
        system: &'a PowerSystem,
        records: &'a [InstanceRecord],
        k: usize,
        config: &SolverConfig,
        jobs: usize,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Input("k must be at least 1".into()));
        }
        if jobs == 0 {
            return Err(Error::Input("jobs must be at least 1".into()));
        }
        config.validate()?;
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if by_id.insert(r.instance_id, i).is_some() {
                return Err(Error::Input(format!("duplicate instance id {}", r.instance_id)));
            }
            r.demand.check_dims(system)?;
        }
        let threads = k.min(jobs).min(records.len().saturating_sub(1)).max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Backend(format!("thread pool: {e}")))?;
        Ok(Self {
            system,
            ptdf: compute_ptdf(system, config.slack_bus)?,
            records,
            by_id,
            config: config.clone(),
            pool,
            k,
        })
    }

    pub fn evaluate(&self, query_id: u64) -> Result<InstanceEval> {
        let start = Instant::now();
        let &qi = self
            .by_id
            .get(&query_id)
            .ok_or_else(|| Error::Input(format!("instance {query_id} is not in the record store")))?;
        let query = &self.records[qi];
        let neighbors = nearest_neighbors(query, self.records, self.k)?;
        let opf_results = self.pool.install(|| {
            neighbors
                .neighbor_ids
                .par_iter()
                .map(|id| {
                    let donor = &self.records[self.by_id[id]];
                    let opf = solve_opf_with(
                        &HighsBackend,
                        self.system,
                        &self.ptdf,
                        &query.demand,
                        &donor.commitment,
                        &self.config,
                    )?;
                    Ok(OpfResult {
                        neighbor_id: *id,
                        feasible: opf.feasible,
                        objective: opf.feasible.then_some(opf.objective),
                        solve_seconds: opf.solve_seconds,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(InstanceEval::from_results(
            query,
            neighbors,
            opf_results,
            start.elapsed().as_secs_f64(),
        ))
    }
}

pub fn evaluate_instance(
    query_id: u64,
    records: &[InstanceRecord],
    k: usize,
    system: &PowerSystem,
    config: &SolverConfig,
) -> Result<InstanceEval> {
    Evaluator::new(system, records, k, config, k)?.evaluate(query_id)
}

/// Evaluates every record against the others, in id order.
pub fn evaluate_all(
    system: &PowerSystem,
    records: &[InstanceRecord],
    k: usize,
    config: &SolverConfig,
    jobs: usize,
) -> Result<Vec<InstanceEval>> {
    let evaluator = Evaluator::new(system, records, k, config, jobs)?;
    let mut ids: Vec<u64> = records.iter().map(|r| r.instance_id).collect();
    ids.sort_unstable();
    ids.into_iter()
        .map(|id| {
            let e = evaluator.evaluate(id)?;
            log::info!(
                "event=evaluated instance={} gap={} speedup={:.3} infeasible={}",
                id,
                e.gap.map_or("none".to_string(), |g| format!("{g:.6e}")),
                e.speedup,
                e.all_infeasible
            );
            Ok(e)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub name: String,
    pub buses: usize,
    pub units: usize,
    pub lines: usize,
}

impl SystemSummary {
    pub fn of(system: &PowerSystem) -> Self {
        Self {
            name: system.name().to_string(),
            buses: system.n_buses(),
            units: system.n_generators(),
            lines: system.n_lines(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: SystemSummary,
    pub n_instances: usize,
    /// Fractions, over instances with a gap; absent when there are none.
    pub mean_gap: Option<f64>,
    pub max_gap: Option<f64>,
    pub histogram: [usize; 5],
    pub n_infeasible: usize,
    /// Over all instances.
    pub mean_speedup: f64,
}

impl EvalReport {
    pub fn row_sum(&self) -> usize {
        self.histogram.iter().sum::<usize>() + self.n_infeasible
    }
}

/// Bucket index of a gap; negative gaps land in the first bucket.
pub fn bucket(gap: f64) -> usize {
    BUCKET_EDGES.iter().position(|&edge| gap < edge).unwrap_or(BUCKET_EDGES.len())
}

pub fn aggregate(system: SystemSummary, evals: &[InstanceEval]) -> Result<EvalReport> {
    if evals.is_empty() {
        return Err(Error::Empty("evaluation list"));
    }
    let gaps: Vec<f64> = evals.iter().filter_map(|e| e.gap).collect();
    let mut histogram = [0usize; 5];
    for &g in &gaps {
        histogram[bucket(g)] += 1;
    }
    let (mean_gap, max_gap) = if gaps.is_empty() {
        (None, None)
    } else {
        (
            Some(gaps.iter().sum::<f64>() / gaps.len() as f64),
            Some(gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        )
    };
    Ok(EvalReport {
        system,
        n_instances: evals.len(),
        mean_gap,
        max_gap,
        histogram,
        n_infeasible: evals.iter().filter(|e| e.all_infeasible).count(),
        mean_speedup: evals.iter().map(|e| e.speedup).sum::<f64>() / evals.len() as f64,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveSummary {
    pub solved: usize,
    pub skipped: usize,
    pub failed: Vec<u64>,
}

/// Solves each instance not already in `done`, handing every new record to
/// `sink` as soon as it exists. Solver failures are logged and skipped;
/// more than [`MAX_FAILURE_FRACTION`] of them aborts the run.
pub fn solve_instances(
    system: &PowerSystem,
    instances: &[ScenarioInstance],
    done: &HashSet<u64>,
    config: &SolverConfig,
    mut sink: impl FnMut(InstanceRecord) -> Result<()>,
) -> Result<SolveSummary> {
    config.validate()?;
    let ptdf = compute_ptdf(system, config.slack_bus)?;
    let total = instances.len();
    let mut summary = SolveSummary::default();
    for inst in instances {
        if done.contains(&inst.instance_id) {
            log::info!("event=skip instance={} reason=already_solved", inst.instance_id);
            summary.skipped += 1;
            continue;
        }
        match solve_uc_with(&HighsBackend, system, &ptdf, &inst.demand, config) {
            Ok(sol) => {
                log::info!(
                    "event=solved instance={} objective={:.6} seconds={:.3} gap={:.3e} rounds={} cuts={}",
                    inst.instance_id,
                    sol.objective,
                    sol.solve_seconds,
                    sol.mip_gap_achieved,
                    sol.lazy_rounds,
                    sol.added_line_constraints
                );
                sink(InstanceRecord {
                    instance_id: inst.instance_id,
                    seed: inst.seed,
                    demand: inst.demand.clone(),
                    commitment: sol.commitment,
                    uc_objective: sol.objective,
                    uc_solve_seconds: sol.solve_seconds,
                    mip_gap_achieved: sol.mip_gap_achieved,
                })?;
                summary.solved += 1;
            }
            Err(e) if e.is_solver_failure() => {
                log::warn!("event=solve_failed instance={} error=\"{}\"", inst.instance_id, e);
                summary.failed.push(inst.instance_id);
                if summary.failed.len() as f64 > MAX_FAILURE_FRACTION * total as f64 {
                    return Err(Error::TooManyFailures {
                        failed: summary.failed.len(),
                        total,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}

/// Generates `n` profiles and solves them all in memory.
pub fn build_dataset(
    system: &PowerSystem,
    n_instances: usize,
    master_seed: u64,
    config: &SolverConfig,
) -> Result<Vec<InstanceRecord>> {
    let instances = crate::scenario::generate_instances(system, n_instances, master_seed)?;
    let mut records = Vec::with_capacity(n_instances);
    solve_instances(system, &instances, &HashSet::new(), config, |r| {
        records.push(r);
        Ok(())
    })?;
    Ok(records)
}
