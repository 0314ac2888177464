//! Unit commitment benchmark: exact solves, nearest-neighbour commitment
//! reuse, and the gap and speedup report that compares the two.
//!
//! The pipeline is
//!
//! 1. [`scenario::generate_instances`] draws daily load profiles,
//! 2. [`uc::solve_uc`] solves each one exactly and the results form a record store,
//! 3. [`eval::evaluate_all`] re-solves every instance with the commitments of its
//!    nearest stored neighbours fixed ([`opf::solve_opf`]),
//! 4. [`eval::aggregate`] summarizes gaps and speedups.

pub mod cases;
pub mod error;
pub mod eval;
pub mod import;
pub mod io;
pub mod knn;
pub mod milp;
pub mod opf;
pub mod plot;
pub mod ptdf;
pub mod scenario;
pub mod system;
pub mod uc;

pub use error::{Error, InfeasibilityCause, PartialResult, Result};
pub use eval::{aggregate, evaluate_all, evaluate_instance, EvalReport, InstanceEval};
pub use knn::{demand_distance, nearest_neighbors, InstanceRecord, NeighborSet};
pub use opf::{solve_opf, OpfSolution};
pub use ptdf::{compute_ptdf, PtdfMatrix};
pub use scenario::{generate_profile, DemandMatrix, ScenarioInstance};
pub use system::{Bus, Generator, Line, PowerSystem};
pub use uc::{brute_force_uc, solve_uc, CommitmentSchedule, SolverConfig, UcSolution};
