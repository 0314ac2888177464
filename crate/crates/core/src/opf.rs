//! Dispatch LP with the commitment held fixed.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, PartialResult, Result};
use crate::milp::{HighsBackend, MilpBackend};
use crate::ptdf::{compute_ptdf, PtdfMatrix};
use crate::scenario::DemandMatrix;
use crate::system::PowerSystem;
use crate::uc::{validate_commitment, Commitment, CommitmentSchedule, LazyError, SolverConfig, UcModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpfSolution {
    pub feasible: bool,
    /// MW, generator by hour; empty when infeasible
    pub dispatch: Vec<Vec<f64>>,
    /// Total cost including no-load and startup costs; infinite when infeasible.
    pub objective: f64,
    pub solve_seconds: f64,
    pub lazy_rounds: usize,
}

/// No-load and startup cost of a schedule.
pub fn fixed_commitment_cost(system: &PowerSystem, schedule: &CommitmentSchedule) -> f64 {
    let starts = schedule.startups(system);
    system
        .generators()
        .iter()
        .enumerate()
        .map(|(g, gen)| {
            (0..schedule.horizon())
                .map(|t| {
                    let on = if schedule.is_on(g, t) { gen.no_load_cost } else { 0.0 };
                    let start = if starts[g][t] { gen.startup_cost } else { 0.0 };
                    on + start
                })
                .sum::<f64>()
        })
        .sum()
}

pub fn solve_opf(
    system: &PowerSystem,
    demand: &DemandMatrix,
    commitment: &CommitmentSchedule,
    config: &SolverConfig,
) -> Result<OpfSolution> {
    let ptdf = compute_ptdf(system, config.slack_bus)?;
    solve_opf_with(&HighsBackend, system, &ptdf, demand, commitment, config)
}

/// An infeasible LP is a regular outcome (`feasible == false`); a schedule
/// that breaks unit logic is an error.
pub fn solve_opf_with(
    backend: &dyn MilpBackend,
    system: &PowerSystem,
    ptdf: &PtdfMatrix,
    demand: &DemandMatrix,
    commitment: &CommitmentSchedule,
    config: &SolverConfig,
) -> Result<OpfSolution> {
    let start = Instant::now();
    config.validate()?;
    demand.check_dims(system)?;
    validate_commitment(system, commitment)?;
    let deadline = start + Duration::from_secs_f64(config.time_limit_seconds);
    let mut model = UcModel::build(
        backend,
        system,
        ptdf,
        demand,
        Commitment::Fixed(commitment),
        config.transmission,
    );
    match model.lazy_loop(config, deadline) {
        Ok(o) => Ok(OpfSolution {
            feasible: true,
            dispatch: o.values,
            objective: o.objective + fixed_commitment_cost(system, commitment),
            solve_seconds: start.elapsed().as_secs_f64(),
            lazy_rounds: o.rounds,
        }),
        Err(LazyError::Infeasible { rounds, .. }) => Ok(OpfSolution {
            feasible: false,
            dispatch: Vec::new(),
            objective: f64::INFINITY,
            solve_seconds: start.elapsed().as_secs_f64(),
            lazy_rounds: rounds,
        }),
        Err(LazyError::Stopped { reason, .. }) => Err(Error::Partial(Box::new(PartialResult {
            reason,
            incumbent: None,
            gap: f64::INFINITY,
        }))),
        Err(LazyError::Other(e)) => Err(e),
    }
}
