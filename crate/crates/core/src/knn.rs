//! Nearest past instances by demand distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::DemandMatrix;
use crate::uc::CommitmentSchedule;

/// A solved instance kept for later neighbour lookups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: u64,
    pub seed: u64,
    #[serde(flatten)]
    pub demand: DemandMatrix,
    pub commitment: CommitmentSchedule,
    pub uc_objective: f64,
    pub uc_solve_seconds: f64,
    #[serde(default)]
    pub mip_gap_achieved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub query_id: u64,
    /// Neighbour ids, nearest first.
    pub neighbor_ids: Vec<u64>,
    pub distances: Vec<f64>,
    pub learn_seconds: f64,
    /// `k` was larger than the number of other records.
    pub truncated: bool,
}

/// Euclidean distance between two demand matrices, flattened.
pub fn demand_distance(a: &DemandMatrix, b: &DemandMatrix) -> Result<f64> {
    if a.n_buses() != b.n_buses() || a.horizon() != b.horizon() {
        return Err(Error::dims(
            format!("{}x{}", a.n_buses(), a.horizon()),
            format!("{}x{}", b.n_buses(), b.horizon()),
        ));
    }
    Ok(a.flat().zip(b.flat()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Default neighbour count: ten percent of the record store, rounded up.
pub fn default_k(n_records: usize) -> usize {
    n_records.div_ceil(10).max(1)
}

/// The `k` records closest to `query`, excluding the query itself. Ties go
/// to the lower instance id.
pub fn nearest_neighbors(query: &InstanceRecord, records: &[InstanceRecord], k: usize) -> Result<NeighborSet> {
    if k == 0 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    let start = std::time::Instant::now();
    let mut scored = Vec::with_capacity(records.len());
    for r in records.iter().filter(|r| r.instance_id != query.instance_id) {
        scored.push((demand_distance(&query.demand, &r.demand)?, r.instance_id));
    }
    if scored.is_empty() {
        return Err(Error::Empty("record store has no other instances"));
    }
    let requested = k;
    let truncated = k > scored.len();
    let k = k.min(scored.len());
    let order = |a: &(f64, u64), b: &(f64, u64)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_by(order);
    let learn_seconds = start.elapsed().as_secs_f64();
    if truncated {
        log::warn!(
            "event=k_truncated query={} requested={} available={}",
            query.instance_id,
            requested,
            scored.len()
        );
    }
    Ok(NeighborSet {
        query_id: query.instance_id,
        neighbor_ids: scored.iter().map(|s| s.1).collect(),
        distances: scored.iter().map(|s| s.0).collect(),
        learn_seconds,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64, hourly: &[f64]) -> InstanceRecord {
        InstanceRecord {
            instance_id: id,
            seed: id,
            demand: DemandMatrix::single_bus(hourly).unwrap(),
            commitment: CommitmentSchedule::all_on(1, hourly.len()),
            uc_objective: 1.0,
            uc_solve_seconds: 0.0,
            mip_gap_achieved: 0.0,
        }
    }

    #[test]
    fn distance_example() {
        let a = DemandMatrix::single_bus(&[1.0, 2.0]).unwrap();
        let b = DemandMatrix::single_bus(&[4.0, 6.0]).unwrap();
        assert!((demand_distance(&a, &b).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(demand_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let a = DemandMatrix::single_bus(&[1.0, 2.0]).unwrap();
        let b = DemandMatrix::single_bus(&[1.0]).unwrap();
        assert!(matches!(demand_distance(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn picks_nearest_and_breaks_ties_by_id() {
        let store = vec![
            record(0, &[10.0]),
            record(3, &[12.0]),
            record(1, &[8.0]),
            record(2, &[30.0]),
        ];
        let n = nearest_neighbors(&store[0], &store, 2).unwrap();
        assert_eq!(n.neighbor_ids, vec![1, 3]);
        assert_eq!(n.distances, vec![2.0, 2.0]);
        assert!(!n.truncated);
    }

    #[test]
    fn k_larger_than_store_truncates() {
        let store = vec![record(0, &[1.0]), record(1, &[2.0]), record(2, &[3.0])];
        let n = nearest_neighbors(&store[1], &store, 10).unwrap();
        assert_eq!(n.neighbor_ids.len(), 2);
        assert!(n.truncated);
    }

    #[test]
    fn lone_record_is_an_error() {
        let store = vec![record(0, &[1.0])];
        assert!(matches!(nearest_neighbors(&store[0], &store, 1), Err(Error::Empty(_))));
    }

    #[test]
    fn default_k_rounds_up() {
        assert_eq!(default_k(100), 10);
        assert_eq!(default_k(101), 11);
        assert_eq!(default_k(5), 1);
    }
}
