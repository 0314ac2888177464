//! Solver backend abstraction.
//!
//! Models are built incrementally through a [`MilpSession`]: add variables,
//! add rows, solve, add more rows, solve again. Objectives are always
//! minimized. The only shipped backend is HiGHS.

use std::time::Duration;

use highs::{Col, HighsModelStatus, HighsSolutionStatus, RowProblem, Sense};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveParams {
    pub mip_gap: f64,
    pub time_limit: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit,
    Failed,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Objective of the incumbent, when there is one.
    pub objective: f64,
    pub best_bound: f64,
    /// Relative gap between incumbent and bound; zero for LPs.
    pub gap: f64,
    /// Primal values indexed by [`VarId::index`]; empty without incumbent.
    pub values: Vec<f64>,
}

impl SolveOutcome {
    pub fn has_solution(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }
}

/// One mutable optimization model. Sessions are not shared across threads.
pub trait MilpSession {
    fn add_var(&mut self, kind: VarKind, lower: f64, upper: f64, cost: f64) -> VarId;
    fn add_row(&mut self, lower: f64, upper: f64, terms: &[(VarId, f64)]);
    fn num_vars(&self) -> usize;
    fn num_rows(&self) -> usize;
    fn solve(&mut self, params: &SolveParams) -> Result<SolveOutcome>;
}

pub trait MilpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn session(&self) -> Box<dyn MilpSession>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

impl MilpBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn session(&self) -> Box<dyn MilpSession> {
        Box::new(HighsSession::default())
    }
}

enum State {
    Building(RowProblem),
    Loaded(highs::Model),
    Poisoned,
}

pub struct HighsSession {
    state: State,
    cols: Vec<Col>,
    n_rows: usize,
    has_integers: bool,
}

impl Default for HighsSession {
    fn default() -> Self {
        Self {
            state: State::Building(RowProblem::default()),
            cols: Vec::new(),
            n_rows: 0,
            has_integers: false,
        }
    }
}

impl MilpSession for HighsSession {
    fn add_var(&mut self, kind: VarKind, lower: f64, upper: f64, cost: f64) -> VarId {
        let integer = kind == VarKind::Binary;
        let (lower, upper) = if integer { (lower.max(0.0), upper.min(1.0)) } else { (lower, upper) };
        self.has_integers |= integer;
        let col = match &mut self.state {
            State::Building(p) => p.add_column_with_integrality(cost, lower..=upper, integer),
            State::Loaded(m) => m.add_column_with_integrality(cost, lower..=upper, std::iter::empty::<(highs::Row, f64)>(), integer),
            State::Poisoned => panic!("session used after backend failure"),
        };
        self.cols.push(col);
        VarId(self.cols.len() - 1)
    }

    fn add_row(&mut self, lower: f64, upper: f64, terms: &[(VarId, f64)]) {
        let factors = terms.iter().map(|&(v, a)| (self.cols[v.0], a));
        match &mut self.state {
            State::Building(p) => p.add_row(lower..=upper, factors.collect::<Vec<_>>()),
            State::Loaded(m) => {
                m.add_row(lower..=upper, factors);
            }
            State::Poisoned => panic!("session used after backend failure"),
        }
        self.n_rows += 1;
    }

    fn num_vars(&self) -> usize {
        self.cols.len()
    }

    fn num_rows(&self) -> usize {
        self.n_rows
    }

    fn solve(&mut self, params: &SolveParams) -> Result<SolveOutcome> {
        let mut model = match std::mem::replace(&mut self.state, State::Poisoned) {
            State::Building(p) => {
                let mut m = p
                    .try_optimise(Sense::Minimise)
                    .map_err(|s| Error::Backend(format!("HiGHS rejected the model: {s:?}")))?;
                m.make_quiet();
                m
            }
            State::Loaded(m) => m,
            State::Poisoned => return Err(Error::Backend("session is unusable".into())),
        };
        model.set_option("mip_rel_gap", params.mip_gap);
        model.set_option("time_limit", params.time_limit.as_secs_f64().max(1e-3));
        let solved = model
            .try_solve()
            .map_err(|s| Error::Backend(format!("HiGHS run failed: {s:?}")))?;

        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::Infeasible | HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Infeasible,
            HighsModelStatus::ReachedTimeLimit => SolveStatus::TimeLimit,
            _ => SolveStatus::Failed,
        };
        let has_solution = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let values = if has_solution && status != SolveStatus::Infeasible {
            solved.get_solution().columns().to_vec()
        } else {
            Vec::new()
        };
        let objective = if values.is_empty() { f64::INFINITY } else { solved.objective_value() };
        let (best_bound, gap) = if self.has_integers {
            let bound = solved.double_info_value(c"mip_dual_bound").unwrap_or(f64::NEG_INFINITY);
            (bound, solved.mip_gap())
        } else if status == SolveStatus::Optimal {
            (objective, 0.0)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        self.state = State::Loaded(solved.into());
        Ok(SolveOutcome {
            status,
            objective,
            best_bound,
            gap,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SolveParams {
        SolveParams {
            mip_gap: 1e-9,
            time_limit: Duration::from_secs(10),
        }
    }

    #[test]
    fn small_milp() {
        // max x + 0.64 y  s.t. 50x + 31y <= 250, 3x - 2y >= -4, x binary, y >= 0
        let mut s = HighsBackend.session();
        let x = s.add_var(VarKind::Binary, 0.0, 1.0, -1.0);
        let y = s.add_var(VarKind::Continuous, 0.0, f64::INFINITY, -0.64);
        s.add_row(f64::NEG_INFINITY, 250.0, &[(x, 50.0), (y, 31.0)]);
        s.add_row(-4.0, f64::INFINITY, &[(x, 3.0), (y, -2.0)]);
        let out = s.solve(&params()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.value(x) - 1.0).abs() < 1e-9);
        assert!((out.value(y) - 3.5).abs() < 1e-6);
        assert!(out.gap <= 1e-9);
    }

    #[test]
    fn rows_added_after_solve() {
        let mut s = HighsBackend.session();
        let x = s.add_var(VarKind::Continuous, 0.0, 10.0, -1.0);
        let out = s.solve(&params()).unwrap();
        assert!((out.objective + 10.0).abs() < 1e-9);
        s.add_row(f64::NEG_INFINITY, 4.0, &[(x, 1.0)]);
        let out = s.solve(&params()).unwrap();
        assert!((out.objective + 4.0).abs() < 1e-9);
        assert_eq!(out.gap, 0.0);
        s.add_row(6.0, f64::INFINITY, &[(x, 1.0)]);
        let out = s.solve(&params()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(!out.has_solution());
    }
}
