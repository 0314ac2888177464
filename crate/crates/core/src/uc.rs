//! Unit commitment MILP with lazily generated transmission limits.
//!
//! Per unit `g` and hour `t` the model has an on/off binary `u`, a startup
//! indicator `s` and an output `p`. The shutdown indicator is implied as
//! `w = s - u + u_prev`. The three startup rows
//!
//! ```text
//! s >= u - u_prev,   s <= u,   s <= 1 - u_prev
//! ```
//!
//! pin `s` to `u (1 - u_prev)`, so `s` is declared continuous and takes
//! integral values at every integral `u`.
//!
//! Costs: `marginal * p + no_load * u + startup * s`.
//!
//! The same builder serves the fixed-commitment LP used by [`crate::opf`]:
//! with a fixed schedule `u` and `s` become constants and only `p` remains.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, InfeasibilityCause, PartialResult, Result};
use crate::milp::{HighsBackend, MilpBackend, MilpSession, SolveParams, SolveStatus, VarId, VarKind};
use crate::opf::{fixed_commitment_cost, solve_opf_with};
use crate::ptdf::{compute_ptdf, PtdfMatrix};
use crate::scenario::DemandMatrix;
use crate::system::PowerSystem;

/// Maximum `G * T` accepted by [`brute_force_uc`].
pub const ENUMERATION_LIMIT: usize = 16;

/// Tolerance for dispatch bounds and hourly balance checks (MW).
pub const DISPATCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransmissionMode {
    /// Start without line limits and add violated ones.
    Lazy,
    /// Every line limit in every hour from the start.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mip_gap: f64,
    pub time_limit_seconds: f64,
    /// MW
    pub flow_violation_tol: f64,
    pub max_lazy_rounds: usize,
    pub transmission: TransmissionMode,
    pub slack_bus: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mip_gap: 1e-4,
            time_limit_seconds: 600.0,
            flow_violation_tol: 1e-4,
            max_lazy_rounds: 50,
            transmission: TransmissionMode::Lazy,
            slack_bus: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mip_gap >= 0.0 && self.mip_gap.is_finite()) {
            return Err(Error::Input("mip_gap must be >= 0".into()));
        }
        if !(self.time_limit_seconds > 0.0) {
            return Err(Error::Input("time limit must be positive".into()));
        }
        if !(self.flow_violation_tol >= 0.0) {
            return Err(Error::Input("flow_violation_tol must be >= 0".into()));
        }
        if self.max_lazy_rounds == 0 {
            return Err(Error::Input("max_lazy_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Generator-by-hour on/off matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct CommitmentSchedule {
    on: Vec<Vec<u8>>,
}

impl TryFrom<Vec<Vec<u8>>> for CommitmentSchedule {
    type Error = Error;

    fn try_from(on: Vec<Vec<u8>>) -> Result<Self> {
        let t = on.first().map_or(0, Vec::len);
        for (g, row) in on.iter().enumerate() {
            if row.len() != t {
                return Err(Error::validation("commitment", g, "rows have different lengths"));
            }
            if row.iter().any(|&v| v > 1) {
                return Err(Error::validation("commitment", g, "entries must be 0 or 1"));
            }
        }
        Ok(Self { on })
    }
}

impl From<CommitmentSchedule> for Vec<Vec<u8>> {
    fn from(c: CommitmentSchedule) -> Self {
        c.on
    }
}

impl CommitmentSchedule {
    pub fn from_fn(n_generators: usize, horizon: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        Self {
            on: (0..n_generators)
                .map(|g| (0..horizon).map(|t| u8::from(f(g, t))).collect())
                .collect(),
        }
    }

    pub fn all_on(n_generators: usize, horizon: usize) -> Self {
        Self::from_fn(n_generators, horizon, |_, _| true)
    }

    pub fn all_off(n_generators: usize, horizon: usize) -> Self {
        Self::from_fn(n_generators, horizon, |_, _| false)
    }

    pub fn is_on(&self, generator: usize, hour: usize) -> bool {
        self.on[generator][hour] == 1
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.on
    }

    pub fn n_generators(&self) -> usize {
        self.on.len()
    }

    pub fn horizon(&self) -> usize {
        self.on.first().map_or(0, Vec::len)
    }

    /// Status in `hour`, where `hour == None` is the pre-horizon state.
    fn status(&self, system: &PowerSystem, generator: usize, hour: Option<usize>) -> bool {
        match hour {
            Some(t) => self.is_on(generator, t),
            None => system.generators()[generator].initially_on(),
        }
    }

    /// Startup indicators implied by the schedule and the initial states.
    pub fn startups(&self, system: &PowerSystem) -> Vec<Vec<bool>> {
        (0..self.n_generators())
            .map(|g| {
                (0..self.horizon())
                    .map(|t| self.is_on(g, t) && !self.status(system, g, t.checked_sub(1)))
                    .collect()
            })
            .collect()
    }
}

/// Checks minimum up/down times, including those carried over from the
/// initial state.
pub fn validate_commitment(system: &PowerSystem, schedule: &CommitmentSchedule) -> Result<()> {
    if schedule.n_generators() != system.n_generators() || schedule.horizon() != system.horizon() {
        return Err(Error::dims(
            format!("{}x{}", system.n_generators(), system.horizon()),
            format!("{}x{}", schedule.n_generators(), schedule.horizon()),
        ));
    }
    let horizon = system.horizon();
    for (gi, gen) in system.generators().iter().enumerate() {
        let row = &schedule.on[gi];
        let (forced, status) = gen.forced_initial_hours();
        if let Some(t) = (0..forced.min(horizon)).find(|&t| (row[t] == 1) != status) {
            return Err(Error::LogicViolation {
                generator: gi,
                hour: t,
                rule: if status { "initial minimum up time" } else { "initial minimum down time" },
            });
        }
        // Every run that starts inside the horizon and ends before its end
        // must last at least the minimum time of its state.
        let mut start = 0;
        while start < horizon {
            let state = row[start];
            let mut end = start;
            while end < horizon && row[end] == state {
                end += 1;
            }
            let began_inside = start > 0 || (state == 1) != gen.initially_on();
            if began_inside && end < horizon {
                let (min, rule) = if state == 1 {
                    (gen.min_up, "minimum up time")
                } else {
                    (gen.min_down, "minimum down time")
                };
                if end - start < min as usize {
                    return Err(Error::LogicViolation {
                        generator: gi,
                        hour: end,
                        rule,
                    });
                }
            }
            start = end;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcSolution {
    pub commitment: CommitmentSchedule,
    /// MW, generator by hour
    pub dispatch: Vec<Vec<f64>>,
    pub objective: f64,
    pub solve_seconds: f64,
    pub mip_gap_achieved: f64,
    pub lazy_rounds: usize,
    pub added_line_constraints: usize,
    /// Objective of each master solve, in order.
    #[serde(default)]
    pub round_objectives: Vec<f64>,
}

/// Largest violation of any line limit by a dispatch, over all lines and hours.
pub fn max_flow_violation(
    system: &PowerSystem,
    ptdf: &PtdfMatrix,
    demand: &DemandMatrix,
    dispatch: &[Vec<f64>],
) -> f64 {
    (0..system.horizon())
        .flat_map(|t| {
            hourly_flows(system, ptdf, demand, dispatch, t)
                .into_iter()
                .zip(system.lines())
                .map(|(f, l)| f.abs() - l.flow_limit)
                .collect::<Vec<_>>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn hourly_flows(
    system: &PowerSystem,
    ptdf: &PtdfMatrix,
    demand: &DemandMatrix,
    dispatch: &[Vec<f64>],
    hour: usize,
) -> Vec<f64> {
    let mut injections: Vec<f64> = (0..system.n_buses()).map(|b| -demand.value(b, hour)).collect();
    for (g, gen) in system.generators().iter().enumerate() {
        injections[gen.bus] += dispatch[g][hour];
    }
    ptdf.flows_unchecked(&injections)
}

/// A quantity that is either a decision variable or a known constant.
#[derive(Clone, Copy)]
enum Term {
    Var(VarId),
    Const(f64),
}

/// Makes the model infeasible, for rows whose constant part alone breaks them.
fn add_contradiction(session: &mut dyn MilpSession) {
    let v = session.add_var(VarKind::Continuous, 0.0, 0.0, 0.0);
    session.add_row(1.0, 1.0, &[(v, 1.0)]);
}

#[derive(Default)]
struct Row {
    terms: Vec<(VarId, f64)>,
    constant: f64,
}

impl Row {
    fn add(&mut self, coef: f64, term: Term) -> &mut Self {
        match term {
            Term::Var(v) => self.terms.push((v, coef)),
            Term::Const(c) => self.constant += coef * c,
        }
        self
    }

    /// Adds `lower <= row <= upper`, combining repeated variables.
    fn push(mut self, session: &mut dyn MilpSession, lower: f64, upper: f64) {
        self.terms.sort_by_key(|t| t.0.index());
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for (v, a) in self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += a,
                _ => merged.push((v, a)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        if merged.is_empty() {
            if self.constant < lower - 1e-9 || self.constant > upper + 1e-9 {
                add_contradiction(session);
            }
            return;
        }
        session.add_row(lower - self.constant, upper - self.constant, &merged);
    }
}

pub(crate) enum Commitment<'a> {
    Free,
    Fixed(&'a CommitmentSchedule),
}

pub(crate) struct LazyOutcome {
    pub values: Vec<Vec<f64>>,
    pub commitment: Option<CommitmentSchedule>,
    pub objective: f64,
    pub gap: f64,
    pub rounds: usize,
    pub added: usize,
    pub round_objectives: Vec<f64>,
}

pub(crate) enum LazyError {
    Infeasible { lines: Vec<usize>, rounds: usize },
    Stopped { reason: String, partial: Option<LazyOutcome> },
    Other(Error),
}

impl From<Error> for LazyError {
    fn from(e: Error) -> Self {
        LazyError::Other(e)
    }
}

/// Model of one instance with the bookkeeping needed to add line rows.
pub(crate) struct UcModel<'a> {
    system: &'a PowerSystem,
    ptdf: &'a PtdfMatrix,
    demand: &'a DemandMatrix,
    session: Box<dyn MilpSession>,
    p: Vec<Vec<VarId>>,
    u: Option<Vec<Vec<VarId>>>,
    enforced: BTreeSet<(usize, usize)>,
}

impl<'a> UcModel<'a> {
    pub fn build(
        backend: &dyn MilpBackend,
        system: &'a PowerSystem,
        ptdf: &'a PtdfMatrix,
        demand: &'a DemandMatrix,
        commitment: Commitment<'_>,
        mode: TransmissionMode,
    ) -> Self {
        let mut session = backend.session();
        let n_g = system.n_generators();
        let horizon = system.horizon();
        let gens = system.generators();

        let (u_terms, s_terms, p, u_vars) = match commitment {
            Commitment::Free => {
                let mut u = Vec::with_capacity(n_g);
                let mut s = Vec::with_capacity(n_g);
                let mut p = Vec::with_capacity(n_g);
                for gen in gens {
                    let (forced, status) = gen.forced_initial_hours();
                    let fix = if status { 1.0 } else { 0.0 };
                    u.push(
                        (0..horizon)
                            .map(|t| {
                                let (lo, hi) = if t < forced { (fix, fix) } else { (0.0, 1.0) };
                                session.add_var(VarKind::Binary, lo, hi, gen.no_load_cost)
                            })
                            .collect::<Vec<_>>(),
                    );
                    s.push(
                        (0..horizon)
                            .map(|_| session.add_var(VarKind::Continuous, 0.0, 1.0, gen.startup_cost))
                            .collect::<Vec<_>>(),
                    );
                    p.push(
                        (0..horizon)
                            .map(|_| session.add_var(VarKind::Continuous, 0.0, gen.p_max, gen.marginal_cost))
                            .collect::<Vec<_>>(),
                    );
                }
                let ut = u.iter().map(|r| r.iter().map(|&v| Term::Var(v)).collect()).collect();
                let st = s.iter().map(|r| r.iter().map(|&v| Term::Var(v)).collect()).collect();
                (ut, st, p, Some(u))
            }
            Commitment::Fixed(schedule) => {
                let starts = schedule.startups(system);
                let ut: Vec<Vec<Term>> = (0..n_g)
                    .map(|g| {
                        (0..horizon)
                            .map(|t| Term::Const(if schedule.is_on(g, t) { 1.0 } else { 0.0 }))
                            .collect()
                    })
                    .collect();
                let st: Vec<Vec<Term>> = starts
                    .iter()
                    .map(|r| r.iter().map(|&s| Term::Const(if s { 1.0 } else { 0.0 })).collect())
                    .collect();
                let p = gens
                    .iter()
                    .enumerate()
                    .map(|(g, gen)| {
                        (0..horizon)
                            .map(|t| {
                                let on = if schedule.is_on(g, t) { 1.0 } else { 0.0 };
                                session.add_var(
                                    VarKind::Continuous,
                                    on * gen.p_min,
                                    on * gen.p_max,
                                    gen.marginal_cost,
                                )
                            })
                            .collect()
                    })
                    .collect();
                (ut, st, p, None)
            }
        };

        // hourly balance
        for t in 0..horizon {
            let total = demand.hourly_total(t);
            let mut row = Row::default();
            for pg in &p {
                row.add(1.0, Term::Var(pg[t]));
            }
            row.push(session.as_mut(), total, total);
        }

        for (g, gen) in gens.iter().enumerate() {
            let u = &u_terms[g];
            let s = &s_terms[g];
            let init_u = Term::Const(if gen.initially_on() { 1.0 } else { 0.0 });
            let init_p = Term::Const(gen.initial_power);
            let u_prev = |t: usize| if t == 0 { init_u } else { u[t - 1] };
            let p_prev = |t: usize| if t == 0 { init_p } else { Term::Var(p[g][t - 1]) };
            // shutdown indicator as (coef, term) pieces: s - u + u_prev
            let w = |t: usize| [(1.0, s[t]), (-1.0, u[t]), (1.0, u_prev(t))];

            for t in 0..horizon {
                let pt = Term::Var(p[g][t]);
                if u_vars.is_some() {
                    let mut r = Row::default();
                    r.add(1.0, pt).add(-gen.p_max, u[t]);
                    r.push(session.as_mut(), f64::NEG_INFINITY, 0.0);
                    let mut r = Row::default();
                    r.add(1.0, pt).add(-gen.p_min, u[t]);
                    r.push(session.as_mut(), 0.0, f64::INFINITY);

                    let mut r = Row::default();
                    r.add(1.0, s[t]).add(-1.0, u[t]).add(1.0, u_prev(t));
                    r.push(session.as_mut(), 0.0, f64::INFINITY);
                    let mut r = Row::default();
                    r.add(1.0, s[t]).add(-1.0, u[t]);
                    r.push(session.as_mut(), f64::NEG_INFINITY, 0.0);
                    let mut r = Row::default();
                    r.add(1.0, s[t]).add(1.0, u_prev(t));
                    r.push(session.as_mut(), f64::NEG_INFINITY, 1.0);

                    // minimum up: sum of recent startups <= u
                    let mut r = Row::default();
                    for tau in t.saturating_sub(gen.min_up as usize - 1)..=t {
                        r.add(1.0, s[tau]);
                    }
                    r.add(-1.0, u[t]);
                    r.push(session.as_mut(), f64::NEG_INFINITY, 0.0);

                    // minimum down: sum of recent shutdowns <= 1 - u
                    let mut r = Row::default();
                    for tau in t.saturating_sub(gen.min_down as usize - 1)..=t {
                        for (c, term) in w(tau) {
                            r.add(c, term);
                        }
                    }
                    r.add(1.0, u[t]);
                    r.push(session.as_mut(), f64::NEG_INFINITY, 1.0);
                }

                // ramp up: p - p_prev <= RU u_prev + SU s
                let mut r = Row::default();
                r.add(1.0, pt)
                    .add(-1.0, p_prev(t))
                    .add(-gen.ramp_up, u_prev(t))
                    .add(-gen.startup_limit, s[t]);
                r.push(session.as_mut(), f64::NEG_INFINITY, 0.0);

                // ramp down: p_prev - p <= RD u + SD w
                let mut r = Row::default();
                r.add(1.0, p_prev(t)).add(-1.0, pt).add(-gen.ramp_down, u[t]);
                for (c, term) in w(t) {
                    r.add(-gen.shutdown_limit * c, term);
                }
                r.push(session.as_mut(), f64::NEG_INFINITY, 0.0);
            }
        }

        let mut model = Self {
            system,
            ptdf,
            demand,
            session,
            p,
            u: u_vars,
            enforced: BTreeSet::new(),
        };
        if mode == TransmissionMode::Full {
            for t in 0..horizon {
                for l in 0..system.n_lines() {
                    model.enforce_line(l, t);
                }
            }
        }
        model
    }

    fn enforce_line(&mut self, line: usize, hour: usize) {
        if !self.enforced.insert((line, hour)) {
            return;
        }
        let row = self.ptdf.row(line);
        let shift: f64 = (0..self.system.n_buses())
            .map(|b| row[b] * self.demand.value(b, hour))
            .sum();
        let terms: Vec<(VarId, f64)> = self
            .system
            .generators()
            .iter()
            .enumerate()
            .filter_map(|(g, gen)| {
                let a = row[gen.bus];
                (a.abs() > 1e-12).then_some((self.p[g][hour], a))
            })
            .collect();
        let limit = self.system.lines()[line].flow_limit;
        if terms.is_empty() {
            // A line whose flow does not depend on any unit: the row is a
            // constant and is either always or never satisfied.
            if shift.abs() > limit {
                add_contradiction(self.session.as_mut());
            }
            return;
        }
        self.session.add_row(-limit + shift, limit + shift, &terms);
    }

    fn violations(&self, dispatch: &[Vec<f64>], tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for t in 0..self.system.horizon() {
            let flows = hourly_flows(self.system, self.ptdf, self.demand, dispatch, t);
            for (l, (f, line)) in flows.iter().zip(self.system.lines()).enumerate() {
                if f.abs() > line.flow_limit + tol && !self.enforced.contains(&(l, t)) {
                    out.push((l, t));
                }
            }
        }
        out
    }

    fn enforced_lines(&self) -> Vec<usize> {
        let lines: BTreeSet<usize> = self.enforced.iter().map(|&(l, _)| l).collect();
        lines.into_iter().collect()
    }

    /// Solve, add every violated line limit, and repeat until none remain.
    pub fn lazy_loop(&mut self, config: &SolverConfig, deadline: Instant) -> Result<LazyOutcome, LazyError> {
        let mut round_objectives = Vec::new();
        let mut added = 0;
        let initial = self.enforced.len();
        for round in 1..=config.max_lazy_rounds {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(LazyError::Stopped {
                    reason: "time limit".into(),
                    partial: None,
                });
            }
            let params = SolveParams {
                mip_gap: config.mip_gap,
                time_limit: remaining,
            };
            let out = self.session.solve(&params)?;
            match out.status {
                SolveStatus::Optimal => {}
                SolveStatus::Infeasible => {
                    return Err(LazyError::Infeasible {
                        lines: self.enforced_lines(),
                        rounds: round,
                    })
                }
                SolveStatus::TimeLimit | SolveStatus::Failed => {
                    let reason = if out.status == SolveStatus::TimeLimit {
                        "time limit"
                    } else {
                        "solver failure"
                    };
                    let partial = out.has_solution().then(|| self.outcome(&out, round, added, round_objectives.clone()));
                    return Err(LazyError::Stopped {
                        reason: reason.into(),
                        partial,
                    });
                }
            }
            round_objectives.push(out.objective);
            let dispatch = self.dispatch(&out);
            let violated = self.violations(&dispatch, config.flow_violation_tol);
            if violated.is_empty() {
                return Ok(self.outcome(&out, round, added, round_objectives));
            }
            if round == config.max_lazy_rounds {
                let partial = self.outcome(&out, round, added, round_objectives);
                return Err(LazyError::Stopped {
                    reason: format!("lazy round limit {} reached", config.max_lazy_rounds),
                    partial: Some(partial),
                });
            }
            for (l, t) in violated {
                self.enforce_line(l, t);
            }
            added = self.enforced.len() - initial;
        }
        unreachable!("loop returns on its last round")
    }

    fn dispatch(&self, out: &crate::milp::SolveOutcome) -> Vec<Vec<f64>> {
        self.p.iter().map(|r| r.iter().map(|&v| out.value(v)).collect()).collect()
    }

    fn outcome(&self, out: &crate::milp::SolveOutcome, rounds: usize, added: usize, round_objectives: Vec<f64>) -> LazyOutcome {
        let commitment = self.u.as_ref().map(|u| CommitmentSchedule {
            on: u
                .iter()
                .map(|r| r.iter().map(|&v| u8::from(out.value(v) > 0.5)).collect())
                .collect(),
        });
        LazyOutcome {
            values: self.dispatch(out),
            commitment,
            objective: out.objective,
            gap: out.gap,
            rounds,
            added,
            round_objectives,
        }
    }
}

/// Hours in which committed-or-not capacity cannot cover demand.
pub(crate) fn capacity_screen(system: &PowerSystem, demand: &DemandMatrix) -> Result<()> {
    let capacity = system.total_capacity();
    for t in 0..system.horizon() {
        let d = demand.hourly_total(t);
        if d > capacity + DISPATCH_TOL {
            return Err(Error::Infeasible(InfeasibilityCause::CapacityShortfall {
                hour: t,
                demand: d,
                capacity,
            }));
        }
    }
    Ok(())
}

/// Solves the unit commitment of one demand matrix with the HiGHS backend.
pub fn solve_uc(system: &PowerSystem, demand: &DemandMatrix, config: &SolverConfig) -> Result<UcSolution> {
    let ptdf = compute_ptdf(system, config.slack_bus)?;
    solve_uc_with(&HighsBackend, system, &ptdf, demand, config)
}

pub fn solve_uc_with(
    backend: &dyn MilpBackend,
    system: &PowerSystem,
    ptdf: &PtdfMatrix,
    demand: &DemandMatrix,
    config: &SolverConfig,
) -> Result<UcSolution> {
    let start = Instant::now();
    config.validate()?;
    demand.check_dims(system)?;
    capacity_screen(system, demand)?;
    let deadline = start + Duration::from_secs_f64(config.time_limit_seconds);
    let mut model = UcModel::build(backend, system, ptdf, demand, Commitment::Free, config.transmission);
    let finish = |o: LazyOutcome| UcSolution {
        commitment: o.commitment.expect("free commitment model yields a schedule"),
        dispatch: o.values,
        objective: o.objective,
        solve_seconds: start.elapsed().as_secs_f64(),
        mip_gap_achieved: o.gap,
        lazy_rounds: o.rounds,
        added_line_constraints: o.added,
        round_objectives: o.round_objectives,
    };
    match model.lazy_loop(config, deadline) {
        Ok(o) => Ok(finish(o)),
        Err(LazyError::Infeasible { lines, .. }) => Err(Error::Infeasible(if lines.is_empty() {
            InfeasibilityCause::UnitConstraints
        } else {
            InfeasibilityCause::LineSet { lines }
        })),
        Err(LazyError::Stopped { reason, partial }) => {
            let incumbent = partial.map(finish);
            let gap = incumbent.as_ref().map_or(f64::INFINITY, |s| s.mip_gap_achieved);
            Err(Error::Partial(Box::new(PartialResult { reason, incumbent, gap })))
        }
        Err(LazyError::Other(e)) => Err(e),
    }
}

/// Exact single-bus, single-hour dispatch cost of the committed units,
/// ignoring ramps and lines. A lower bound on the fixed-commitment LP.
fn merit_order_bound(system: &PowerSystem, schedule: &CommitmentSchedule, demand: &DemandMatrix) -> Option<f64> {
    let gens = system.generators();
    let mut total = 0.0;
    for t in 0..system.horizon() {
        let d = demand.hourly_total(t);
        let mut committed: Vec<usize> = (0..gens.len()).filter(|&g| schedule.is_on(g, t)).collect();
        let floor: f64 = committed.iter().map(|&g| gens[g].p_min).sum();
        let ceiling: f64 = committed.iter().map(|&g| gens[g].p_max).sum();
        if d < floor - DISPATCH_TOL || d > ceiling + DISPATCH_TOL {
            return None;
        }
        committed.sort_by(|&a, &b| gens[a].marginal_cost.total_cmp(&gens[b].marginal_cost));
        let mut rest = (d - floor).max(0.0);
        for g in committed {
            let gen = &gens[g];
            let extra = rest.min(gen.p_max - gen.p_min);
            total += gen.marginal_cost * (gen.p_min + extra);
            rest -= extra;
        }
    }
    Some(total)
}

/// Exhaustive oracle: every commitment matrix that passes the unit-logic
/// check is dispatched by the fixed-commitment LP; the cheapest wins.
///
/// Schedules are skipped without an LP when hourly capacity cannot match
/// demand or when the merit-order relaxation already costs more than the
/// best schedule found, neither of which can discard an optimum.
pub fn brute_force_uc(system: &PowerSystem, demand: &DemandMatrix) -> Result<UcSolution> {
    let start = Instant::now();
    let cells = system.n_generators() * system.horizon();
    if cells > ENUMERATION_LIMIT {
        return Err(Error::EnumerationBound {
            cells,
            limit: ENUMERATION_LIMIT,
        });
    }
    demand.check_dims(system)?;
    let config = SolverConfig {
        mip_gap: 0.0,
        ..SolverConfig::default()
    };
    let ptdf = compute_ptdf(system, config.slack_bus)?;
    let horizon = system.horizon();
    let mut best: Option<(f64, CommitmentSchedule, Vec<Vec<f64>>)> = None;
    for mask in 0u64..(1u64 << cells) {
        let schedule =
            CommitmentSchedule::from_fn(system.n_generators(), horizon, |g, t| mask >> (g * horizon + t) & 1 == 1);
        if validate_commitment(system, &schedule).is_err() {
            continue;
        }
        let Some(bound) = merit_order_bound(system, &schedule, demand) else {
            continue;
        };
        let fixed = fixed_commitment_cost(system, &schedule);
        if let Some((b, _, _)) = &best {
            if fixed + bound > *b {
                continue;
            }
        }
        let opf = solve_opf_with(&HighsBackend, system, &ptdf, demand, &schedule, &config)?;
        if !opf.feasible {
            continue;
        }
        if best.as_ref().is_none_or(|(b, _, _)| opf.objective < *b) {
            best = Some((opf.objective, schedule, opf.dispatch));
        }
    }
    let (objective, commitment, dispatch) =
        best.ok_or(Error::Infeasible(InfeasibilityCause::NoFeasibleCommitment))?;
    Ok(UcSolution {
        commitment,
        dispatch,
        objective,
        solve_seconds: start.elapsed().as_secs_f64(),
        mip_gap_achieved: 0.0,
        lazy_rounds: 0,
        added_line_constraints: 0,
        round_objectives: Vec::new(),
    })
}
