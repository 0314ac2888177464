//! Randomized daily load profiles.
//!
//! A profile is the product of three independent draws: a system peak, a
//! per-bus distribution factor and a per-hour temporal factor. All draws
//! come from a ChaCha12 stream seeded with the instance seed, so the same
//! `(system, seed)` always yields the same matrix, on any platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::PowerSystem;

/// Peak demand as a fraction of installed capacity.
pub const PEAK_CAPACITY_FRACTION: f64 = 0.6;
pub const PEAK_DRAW_RANGE: (f64, f64) = (0.925, 1.075);
pub const BUS_DRAW_RANGE: (f64, f64) = (0.9, 1.1);
/// Smallest hour-to-hour ratio accepted from the normal draw.
pub const MIN_RATIO: f64 = 0.01;
const MAX_REDRAWS: usize = 100;

/// Bus-by-hour demand in MW, stored together with the factors it was
/// built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDemand")]
pub struct DemandMatrix {
    #[serde(rename = "demand")]
    values: Vec<Vec<f64>>,
    peak: f64,
    bus_factors: Vec<f64>,
    temporal_factors: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDemand {
    demand: Vec<Vec<f64>>,
    peak: f64,
    bus_factors: Vec<f64>,
    temporal_factors: Vec<f64>,
}

impl TryFrom<RawDemand> for DemandMatrix {
    type Error = Error;

    fn try_from(raw: RawDemand) -> Result<Self> {
        let built = DemandMatrix::from_factors(raw.peak, raw.bus_factors, raw.temporal_factors)?;
        if raw.demand.len() != built.values.len()
            || raw.demand.iter().any(|r| r.len() != built.horizon())
        {
            return Err(Error::dims(
                format!("{}x{}", built.n_buses(), built.horizon()),
                format!("{}x{}", raw.demand.len(), raw.demand.first().map_or(0, Vec::len)),
            ));
        }
        for (b, (stored, expect)) in raw.demand.iter().zip(&built.values).enumerate() {
            for (s, e) in stored.iter().zip(expect) {
                if (s - e).abs() > 1e-9 * e.abs().max(1.0) {
                    return Err(Error::validation(
                        "demand",
                        b,
                        "value inconsistent with peak * bus factor * temporal factor",
                    ));
                }
            }
        }
        // keep the stored numbers verbatim
        Ok(DemandMatrix {
            values: raw.demand,
            ..built
        })
    }
}

impl DemandMatrix {
    /// `D_bt = peak * bus_factors[b] * temporal_factors[t]`.
    pub fn from_factors(peak: f64, bus_factors: Vec<f64>, temporal_factors: Vec<f64>) -> Result<Self> {
        if !(peak >= 0.0 && peak.is_finite()) {
            return Err(Error::Input(format!("peak demand {peak} must be finite and >= 0")));
        }
        if bus_factors.is_empty() || temporal_factors.is_empty() {
            return Err(Error::Input("demand needs at least one bus and one hour".into()));
        }
        if bus_factors.iter().chain(&temporal_factors).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Input("demand factors must be finite and >= 0".into()));
        }
        let sum: f64 = bus_factors.iter().sum();
        if (sum - 1.0).abs() > 1e-12 * bus_factors.len().max(1) as f64 {
            return Err(Error::Input(format!("bus factors sum to {sum}, expected 1")));
        }
        let max = temporal_factors.iter().copied().fold(f64::MIN, f64::max);
        if max != 1.0 {
            return Err(Error::Input(format!("temporal factors peak at {max}, expected 1")));
        }
        let values = bus_factors
            .iter()
            .map(|b| temporal_factors.iter().map(|g| peak * b * g).collect())
            .collect();
        Ok(Self {
            values,
            peak,
            bus_factors,
            temporal_factors,
        })
    }

    /// Single-bus demand from an hourly series.
    pub fn single_bus(hourly: &[f64]) -> Result<Self> {
        if hourly.is_empty() {
            return Err(Error::Empty("hourly demand"));
        }
        let peak = hourly.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Self::from_factors(0.0, vec![1.0], vec![1.0; hourly.len()]);
        }
        let mut temporal: Vec<f64> = hourly.iter().map(|d| d / peak).collect();
        // pin the normalizing element exactly
        if let Some(i) = hourly.iter().position(|&d| d == peak) {
            temporal[i] = 1.0;
        }
        let mut m = Self::from_factors(peak, vec![1.0], temporal)?;
        m.values = vec![hourly.to_vec()];
        Ok(m)
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, bus: usize, hour: usize) -> f64 {
        self.values[bus][hour]
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn bus_factors(&self) -> &[f64] {
        &self.bus_factors
    }

    pub fn temporal_factors(&self) -> &[f64] {
        &self.temporal_factors
    }

    pub fn n_buses(&self) -> usize {
        self.values.len()
    }

    pub fn horizon(&self) -> usize {
        self.temporal_factors.len()
    }

    pub fn hourly_total(&self, hour: usize) -> f64 {
        self.values.iter().map(|r| r[hour]).sum()
    }

    pub fn hourly_totals(&self) -> Vec<f64> {
        (0..self.horizon()).map(|t| self.hourly_total(t)).collect()
    }

    /// Row-major (bus, hour) iteration over all entries.
    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn check_dims(&self, system: &PowerSystem) -> Result<()> {
        if self.n_buses() != system.n_buses() || self.horizon() != system.horizon() {
            return Err(Error::dims(
                format!("{}x{}", system.n_buses(), system.horizon()),
                format!("{}x{}", self.n_buses(), self.horizon()),
            ));
        }
        Ok(())
    }
}

/// Peak demand for a given uniform factor.
pub fn peak_from_draw(total_capacity: f64, factor: f64) -> f64 {
    PEAK_CAPACITY_FRACTION * total_capacity * factor
}

pub fn draw_peak_demand<R: RngCore>(system: &PowerSystem, rng: &mut R) -> Result<f64> {
    if system.n_generators() == 0 {
        return Err(Error::Input("peak demand needs at least one generator".into()));
    }
    let u = uniform(rng, PEAK_DRAW_RANGE);
    Ok(peak_from_draw(system.total_capacity(), u))
}

/// Normalized bus factors for explicit per-bus multipliers.
pub fn bus_factors_from_draws(nominal: &[f64], draws: &[f64]) -> Result<Vec<f64>> {
    if nominal.len() != draws.len() {
        return Err(Error::dims(nominal.len(), draws.len()));
    }
    if nominal.iter().any(|&b| !(b >= 0.0)) || nominal.iter().all(|&b| b == 0.0) {
        return Err(Error::Input("nominal load shares must be >= 0 and not all zero".into()));
    }
    let raw: Vec<f64> = nominal.iter().zip(draws).map(|(b, u)| b * u).collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|b| b / sum).collect())
}

pub fn draw_bus_factors<R: RngCore>(system: &PowerSystem, rng: &mut R) -> Result<Vec<f64>> {
    let nominal: Vec<f64> = system.buses().iter().map(|b| b.nominal_load_share).collect();
    let draws: Vec<f64> = nominal.iter().map(|_| uniform(rng, BUS_DRAW_RANGE)).collect();
    bus_factors_from_draws(&nominal, &draws)
}

/// Cumulative product of hour-to-hour ratios, scaled so the largest is 1.
pub fn temporal_factors_from_ratios(ratios: &[f64]) -> Vec<f64> {
    let mut level = 1.0;
    let gamma: Vec<f64> = ratios
        .iter()
        .map(|v| {
            level *= v;
            level
        })
        .collect();
    let max = gamma.iter().copied().fold(f64::MIN, f64::max);
    gamma.into_iter().map(|g| g / max).collect()
}

pub fn draw_temporal_factors<R: RngCore>(system: &PowerSystem, rng: &mut R) -> Result<Vec<f64>> {
    let ratios = system
        .hourly_ratio_mean()
        .iter()
        .zip(system.hourly_ratio_std())
        .map(|(&mean, &std)| draw_ratio(rng, mean, std))
        .collect::<Result<Vec<_>>>()?;
    Ok(temporal_factors_from_ratios(&ratios))
}

fn draw_ratio<R: RngCore>(rng: &mut R, mean: f64, std: f64) -> Result<f64> {
    if std == 0.0 {
        return Ok(mean.max(MIN_RATIO));
    }
    let normal = Normal::new(mean, std).map_err(|e| Error::Input(format!("hourly ratio: {e}")))?;
    for _ in 0..MAX_REDRAWS {
        let v = normal.sample(rng);
        if v >= MIN_RATIO {
            return Ok(v);
        }
    }
    Ok(MIN_RATIO)
}

fn uniform<R: RngCore>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn generate_profile(system: &PowerSystem, seed: u64) -> Result<DemandMatrix> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let peak = draw_peak_demand(system, &mut rng)?;
    let bus = draw_bus_factors(system, &mut rng)?;
    let temporal = draw_temporal_factors(system, &mut rng)?;
    DemandMatrix::from_factors(peak, bus, temporal)
}

/// One generated profile of an instance set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInstance {
    pub instance_id: u64,
    pub seed: u64,
    #[serde(flatten)]
    pub demand: DemandMatrix,
}

/// `n` profiles with ids `0..n`, each drawn from [`instance_seed`].
pub fn generate_instances(system: &PowerSystem, n: usize, master_seed: u64) -> Result<Vec<ScenarioInstance>> {
    (0..n as u64)
        .map(|i| {
            let seed = instance_seed(master_seed, i);
            Ok(ScenarioInstance {
                instance_id: i,
                seed,
                demand: generate_profile(system, seed)?,
            })
        })
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of instance `index` in a batch: `splitmix64(master ^ splitmix64(index))`.
pub fn instance_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::system::{Bus, PowerSystem};

    fn with_profile(mean: Vec<f64>, std: Vec<f64>) -> PowerSystem {
        let t = mean.len();
        PowerSystem::new(
            "p",
            vec![Bus { id: 0, nominal_load_share: 1.0 }],
            vec![cases::simple_generator(0, 0, 0.0, 1000.0, 1.0)],
            vec![],
            mean,
            std,
            t,
        )
        .unwrap()
    }

    #[test]
    fn midpoint_peak() {
        assert!((peak_from_draw(1000.0, 1.0) - 600.0).abs() < 1e-12);
    }

    #[test]
    fn peak_always_in_range() {
        let sys = with_profile(vec![1.0], vec![0.0]);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let p = draw_peak_demand(&sys, &mut rng).unwrap();
            assert!((555.0..=645.0).contains(&p), "{p}");
        }
    }

    #[test]
    fn peak_needs_generators() {
        let sys = PowerSystem::new(
            "empty",
            vec![Bus { id: 0, nominal_load_share: 1.0 }],
            vec![],
            vec![],
            vec![1.0],
            vec![0.0],
            1,
        )
        .unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(draw_peak_demand(&sys, &mut rng).is_err());
    }

    #[test]
    fn single_bus_factor_is_one() {
        assert_eq!(bus_factors_from_draws(&[0.3], &[1.07]).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_bus_factors() {
        let f = bus_factors_from_draws(&[0.5, 0.5], &[0.9, 1.1]).unwrap();
        assert!((f[0] - 0.45).abs() < 1e-15);
        assert!((f[1] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn zero_shares_rejected() {
        assert!(bus_factors_from_draws(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn constant_ratios_flat_profile() {
        let sys = with_profile(vec![1.0; 24], vec![0.0; 24]);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        assert!(draw_temporal_factors(&sys, &mut rng).unwrap().iter().all(|&g| g == 1.0));
    }

    #[test]
    fn three_hour_example() {
        let g = temporal_factors_from_ratios(&[1.0, 1.2, 0.8]);
        assert!((g[0] - 1.0 / 1.2).abs() < 1e-15);
        assert_eq!(g[1], 1.0);
        assert!((g[2] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn negative_mean_is_clamped() {
        let sys = with_profile(vec![-5.0, 1.0], vec![0.01, 0.0]);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let g = draw_temporal_factors(&sys, &mut rng).unwrap();
        assert!(g.iter().all(|&v| v > 0.0));
        assert_eq!(g.iter().copied().fold(f64::MIN, f64::max), 1.0);
    }

    #[test]
    fn profile_is_deterministic() {
        let sys = cases::five_bus();
        assert_eq!(generate_profile(&sys, 42).unwrap(), generate_profile(&sys, 42).unwrap());
        assert_ne!(generate_profile(&sys, 42).unwrap(), generate_profile(&sys, 43).unwrap());
    }

    #[test]
    fn single_bus_series() {
        let d = DemandMatrix::single_bus(&[50.0, 60.0]).unwrap();
        assert_eq!(d.values(), &[vec![50.0, 60.0]]);
        assert_eq!(d.peak(), 60.0);
    }

    #[test]
    fn inconsistent_stored_values_rejected() {
        let d = DemandMatrix::from_factors(100.0, vec![0.5, 0.5], vec![1.0, 0.5]).unwrap();
        let mut v = serde_json::to_value(&d).unwrap();
        v["demand"][0][0] = serde_json::json!(49.0);
        assert!(serde_json::from_value::<DemandMatrix>(v).is_err());
    }

    #[test]
    fn sub_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| instance_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(instance_seed(7, 3), instance_seed(7, 3));
    }
}
