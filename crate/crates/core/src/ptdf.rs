//! DC power-flow sensitivities.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::system::{is_connected, PowerSystem};

/// Injections must sum to zero within this tolerance (MW).
pub const BALANCE_TOL: f64 = 1e-6;

/// Line flow sensitivities to bus injections, `L x B`, row-major.
///
/// Flows are positive in the `from_bus -> to_bus` direction. The slack bus
/// column is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PtdfMatrix {
    n_lines: usize,
    n_buses: usize,
    entries: Vec<f64>,
    slack_bus: usize,
}

impl PtdfMatrix {
    pub fn n_lines(&self) -> usize {
        self.n_lines
    }

    pub fn n_buses(&self) -> usize {
        self.n_buses
    }

    pub fn slack_bus(&self) -> usize {
        self.slack_bus
    }

    pub fn row(&self, line: usize) -> &[f64] {
        &self.entries[line * self.n_buses..(line + 1) * self.n_buses]
    }

    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.entries[line * self.n_buses + bus]
    }

    /// `PTDF * injections` without the balance check.
    pub fn flows_unchecked(&self, injections: &[f64]) -> Vec<f64> {
        (0..self.n_lines)
            .map(|l| self.row(l).iter().zip(injections).map(|(a, p)| a * p).sum())
            .collect()
    }
}

pub fn compute_ptdf(system: &PowerSystem, slack: usize) -> Result<PtdfMatrix> {
    let n = system.n_buses();
    if slack >= n {
        return Err(Error::Input(format!("slack bus {slack} does not exist")));
    }
    let lines = system.lines();
    if !is_connected(n, lines) {
        return Err(Error::Structural("transmission network is not connected".into()));
    }
    if lines.iter().any(|l| !(l.reactance > 0.0)) {
        return Err(Error::Input("line reactances must be positive".into()));
    }

    // Reduced susceptance matrix without the slack row and column.
    let reduced = |b: usize| -> Option<usize> {
        match b.cmp(&slack) {
            std::cmp::Ordering::Less => Some(b),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(b - 1),
        }
    };
    let m = n - 1;
    let mut entries = vec![0.0; lines.len() * n];
    if m > 0 {
        let mut bmat = DMatrix::<f64>::zeros(m, m);
        for l in lines {
            let b = 1.0 / l.reactance;
            let (f, t) = (reduced(l.from_bus), reduced(l.to_bus));
            if let Some(f) = f {
                bmat[(f, f)] += b;
            }
            if let Some(t) = t {
                bmat[(t, t)] += b;
            }
            if let (Some(f), Some(t)) = (f, t) {
                bmat[(f, t)] -= b;
                bmat[(t, f)] -= b;
            }
        }
        let chol = bmat
            .cholesky()
            .ok_or_else(|| Error::Numerical("reduced susceptance matrix is singular".into()))?;
        let x = chol.inverse();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("reduced susceptance inverse is not finite".into()));
        }
        for (li, l) in lines.iter().enumerate() {
            let b = 1.0 / l.reactance;
            let row = &mut entries[li * n..(li + 1) * n];
            for (bus, out) in row.iter_mut().enumerate() {
                let Some(k) = reduced(bus) else { continue };
                let xf = reduced(l.from_bus).map_or(0.0, |f| x[(f, k)]);
                let xt = reduced(l.to_bus).map_or(0.0, |t| x[(t, k)]);
                *out = b * (xf - xt);
            }
        }
    }
    Ok(PtdfMatrix {
        n_lines: lines.len(),
        n_buses: n,
        entries,
        slack_bus: slack,
    })
}

/// Line flows (MW) for a balanced injection vector.
pub fn line_flows(ptdf: &PtdfMatrix, injections: &[f64]) -> Result<Vec<f64>> {
    if injections.len() != ptdf.n_buses {
        return Err(Error::dims(ptdf.n_buses, injections.len()));
    }
    let sum: f64 = injections.iter().sum();
    if sum.abs() > BALANCE_TOL {
        return Err(Error::Unbalanced { sum });
    }
    Ok(ptdf.flows_unchecked(injections))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::system::{default_hourly_profile, Bus, Line};

    fn ring3() -> PowerSystem {
        let buses = (0..3)
            .map(|id| Bus {
                id,
                nominal_load_share: 1.0,
            })
            .collect();
        let lines = [(0, 1), (1, 2), (2, 0)]
            .into_iter()
            .map(|(f, t)| Line {
                id: 0,
                from_bus: f,
                to_bus: t,
                reactance: 0.1,
                flow_limit: 100.0,
            })
            .collect();
        let (m, s) = default_hourly_profile(1);
        PowerSystem::new("ring", buses, vec![], lines, m, s, 1).unwrap()
    }

    #[test]
    fn two_bus_row() {
        let sys = cases::two_bus();
        let ptdf = compute_ptdf(&sys, 0).unwrap();
        assert_eq!(ptdf.get(0, 0), 0.0);
        assert!((ptdf.get(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ring_splits_two_thirds() {
        let ptdf = compute_ptdf(&ring3(), 0).unwrap();
        let f = line_flows(&ptdf, &[-1.0, 1.0, 0.0]).unwrap();
        // line 0 is 0->1 (direct path), lines 1 and 2 form 1->2->0
        assert!((f[0] + 2.0 / 3.0).abs() < 1e-12);
        assert!((f[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((f[2] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn slack_column_is_zero() {
        let sys = cases::five_bus();
        for slack in 0..sys.n_buses() {
            let ptdf = compute_ptdf(&sys, slack).unwrap();
            assert!((0..ptdf.n_lines()).all(|l| ptdf.get(l, slack) == 0.0));
        }
    }

    #[test]
    fn zero_injection_zero_flow() {
        let ptdf = compute_ptdf(&cases::five_bus(), 0).unwrap();
        assert!(line_flows(&ptdf, &[0.0; 5]).unwrap().iter().all(|&f| f == 0.0));
    }

    #[test]
    fn two_bus_hundred_mw() {
        let ptdf = compute_ptdf(&cases::two_bus(), 0).unwrap();
        let f = line_flows(&ptdf, &[-100.0, 100.0]).unwrap();
        assert!((f[0].abs() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn unbalanced_injection_rejected() {
        let ptdf = compute_ptdf(&cases::five_bus(), 0).unwrap();
        let err = line_flows(&ptdf, &[1.0; 5]).unwrap_err();
        assert!(matches!(err, Error::Unbalanced { .. }));
    }

    #[test]
    fn bad_slack_rejected() {
        assert!(compute_ptdf(&cases::two_bus(), 5).is_err());
    }
}
