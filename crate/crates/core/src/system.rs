//! Static power-system description shared by every solver.
//!
//! A [`PowerSystem`] can only be obtained through [`PowerSystem::new`], which
//! checks every field and merges parallel lines. After construction the value
//! is immutable.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard deviation of the hour-to-hour demand ratio used when a system
/// file does not provide its own.
pub const DEFAULT_RATIO_STD: f64 = 0.05;

/// Relative load level over a typical day: overnight trough, morning ramp,
/// midday plateau and an evening peak at 19:00.
const DAILY_SHAPE: [f64; 24] = [
    0.64, 0.60, 0.58, 0.57, 0.58, 0.62, 0.70, 0.79, 0.86, 0.90, 0.92, 0.93, 0.92, 0.91, 0.90,
    0.90, 0.92, 0.96, 1.00, 0.98, 0.94, 0.86, 0.77, 0.69,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    /// Nominal fraction of system demand located at this bus.
    pub nominal_load_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// $/MWh
    pub marginal_cost: f64,
    /// $/h while committed
    pub no_load_cost: f64,
    /// $ per start
    pub startup_cost: f64,
    pub min_up: u32,
    pub min_down: u32,
    /// MW/h
    pub ramp_up: f64,
    /// MW/h
    pub ramp_down: f64,
    /// Maximum output in the hour the unit starts.
    pub startup_limit: f64,
    /// Maximum output in the hour before the unit shuts down.
    pub shutdown_limit: f64,
    /// Positive: hours the unit has already been on. Negative: hours off.
    pub initial_on_hours: i32,
    pub initial_power: f64,
}

impl Generator {
    pub fn initially_on(&self) -> bool {
        self.initial_on_hours > 0
    }

    /// Hours at the start of the horizon in which the unit status is forced
    /// by the initial condition: `(hours, status)`.
    pub fn forced_initial_hours(&self) -> (usize, bool) {
        if self.initially_on() {
            let done = self.initial_on_hours as u32;
            (self.min_up.saturating_sub(done) as usize, true)
        } else {
            let done = self.initial_on_hours.unsigned_abs();
            (self.min_down.saturating_sub(done) as usize, false)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    /// per unit
    pub reactance: f64,
    /// MW, symmetric
    pub flow_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSystem {
    name: String,
    buses: Vec<Bus>,
    generators: Vec<Generator>,
    lines: Vec<Line>,
    hourly_ratio_mean: Vec<f64>,
    hourly_ratio_std: Vec<f64>,
    horizon: usize,
}

impl PowerSystem {
    /// Validates all data and merges parallel lines.
    ///
    /// Lines joining the same pair of buses are combined into one line whose
    /// susceptance is the sum of the parts and whose limit is the sum of the
    /// limits; line ids are then renumbered `0..L`.
    pub fn new(
        name: impl Into<String>,
        buses: Vec<Bus>,
        generators: Vec<Generator>,
        lines: Vec<Line>,
        hourly_ratio_mean: Vec<f64>,
        hourly_ratio_std: Vec<f64>,
        horizon: usize,
    ) -> Result<Self> {
        validate_buses(&buses)?;
        for (i, g) in generators.iter().enumerate() {
            validate_generator(i, g, buses.len())?;
        }
        for (i, l) in lines.iter().enumerate() {
            if l.from_bus >= buses.len() || l.to_bus >= buses.len() {
                return Err(Error::validation("lines", i, "references a missing bus"));
            }
            if l.from_bus == l.to_bus {
                return Err(Error::validation("lines", i, "from_bus equals to_bus"));
            }
            if !(l.reactance > 0.0 && l.reactance.is_finite()) {
                return Err(Error::validation("lines", i, "reactance must be positive"));
            }
            if !(l.flow_limit > 0.0) {
                return Err(Error::validation("lines", i, "flow_limit must be positive"));
            }
        }
        if horizon == 0 {
            return Err(Error::Input("horizon must be at least one hour".into()));
        }
        if hourly_ratio_mean.len() != horizon {
            return Err(Error::validation(
                "hourly_ratio_mean",
                hourly_ratio_mean.len(),
                format!("length must equal horizon {horizon}"),
            ));
        }
        if hourly_ratio_std.len() != horizon {
            return Err(Error::validation(
                "hourly_ratio_std",
                hourly_ratio_std.len(),
                format!("length must equal horizon {horizon}"),
            ));
        }
        for (t, (&m, &s)) in hourly_ratio_mean.iter().zip(&hourly_ratio_std).enumerate() {
            if !m.is_finite() {
                return Err(Error::validation("hourly_ratio_mean", t, "must be finite"));
            }
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::validation("hourly_ratio_std", t, "must be finite and >= 0"));
            }
        }
        let lines = merge_parallel(lines);
        if !is_connected(buses.len(), &lines) {
            return Err(Error::Structural("transmission network is not connected".into()));
        }
        Ok(Self {
            name: name.into(),
            buses,
            generators,
            lines,
            hourly_ratio_mean,
            hourly_ratio_std,
            horizon,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn hourly_ratio_mean(&self) -> &[f64] {
        &self.hourly_ratio_mean
    }

    pub fn hourly_ratio_std(&self) -> &[f64] {
        &self.hourly_ratio_std
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn total_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.p_max).sum()
    }

    /// Same network and fleet under a different name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Default mean ratios `D_t / D_{t-1}` and standard deviations for `horizon`
/// hours. Hour 0 is relative to an implicit pre-horizon level of 1; longer
/// horizons repeat the daily shape.
pub fn default_hourly_profile(horizon: usize) -> (Vec<f64>, Vec<f64>) {
    let mean = (0..horizon)
        .map(|t| {
            if t == 0 {
                1.0
            } else {
                DAILY_SHAPE[t % 24] / DAILY_SHAPE[(t - 1) % 24]
            }
        })
        .collect();
    (mean, vec![DEFAULT_RATIO_STD; horizon])
}

fn validate_buses(buses: &[Bus]) -> Result<()> {
    if buses.is_empty() {
        return Err(Error::Input("system has no buses".into()));
    }
    let mut total = 0.0;
    for (i, b) in buses.iter().enumerate() {
        if b.id != i {
            return Err(Error::validation("buses", i, format!("id {} is not contiguous", b.id)));
        }
        if !(b.nominal_load_share >= 0.0 && b.nominal_load_share.is_finite()) {
            return Err(Error::validation("buses", i, "nominal_load_share must be >= 0"));
        }
        total += b.nominal_load_share;
    }
    if total <= 0.0 {
        return Err(Error::Input("sum of nominal_load_share must be positive".into()));
    }
    Ok(())
}

fn validate_generator(i: usize, g: &Generator, n_buses: usize) -> Result<()> {
    let fail = |msg: &str| Err(Error::validation("generators", i, msg));
    let finite = [
        g.p_min,
        g.p_max,
        g.marginal_cost,
        g.no_load_cost,
        g.startup_cost,
        g.ramp_up,
        g.ramp_down,
        g.startup_limit,
        g.shutdown_limit,
        g.initial_power,
    ];
    if finite.iter().any(|v| !v.is_finite()) {
        return fail("all numeric fields must be finite");
    }
    if g.id != i {
        return fail("id is not contiguous");
    }
    if g.bus >= n_buses {
        return fail("references a missing bus");
    }
    if !(0.0 <= g.p_min && g.p_min <= g.p_max) {
        return fail("requires 0 <= p_min <= p_max");
    }
    if g.marginal_cost < 0.0 || g.no_load_cost < 0.0 || g.startup_cost < 0.0 {
        return fail("costs must be non-negative");
    }
    if g.min_up < 1 || g.min_down < 1 {
        return fail("min_up and min_down must be at least one hour");
    }
    if !(g.ramp_up > 0.0 && g.ramp_down > 0.0) {
        return fail("ramp limits must be positive");
    }
    if !(g.p_min <= g.startup_limit && g.startup_limit <= g.p_max) {
        return fail("requires p_min <= startup_limit <= p_max");
    }
    if !(g.p_min <= g.shutdown_limit && g.shutdown_limit <= g.p_max) {
        return fail("requires p_min <= shutdown_limit <= p_max");
    }
    if g.initial_on_hours == 0 {
        return fail("initial_on_hours must be non-zero");
    }
    if g.initially_on() {
        if !(g.p_min <= g.initial_power && g.initial_power <= g.p_max) {
            return fail("initially on unit requires p_min <= initial_power <= p_max");
        }
    } else if g.initial_power != 0.0 {
        return fail("initially off unit requires initial_power = 0");
    }
    Ok(())
}

fn merge_parallel(lines: Vec<Line>) -> Vec<Line> {
    let mut merged: Vec<Line> = Vec::with_capacity(lines.len());
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    for l in lines {
        let key = (l.from_bus.min(l.to_bus), l.from_bus.max(l.to_bus));
        match index.get(&key) {
            Some(&k) => {
                let m = &mut merged[k];
                m.reactance = 1.0 / (1.0 / m.reactance + 1.0 / l.reactance);
                m.flow_limit += l.flow_limit;
            }
            None => {
                index.insert(key, merged.len());
                merged.push(l);
            }
        }
    }
    for (i, l) in merged.iter_mut().enumerate() {
        l.id = i;
    }
    merged
}

pub(crate) fn is_connected(n_buses: usize, lines: &[Line]) -> bool {
    if n_buses == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n_buses];
    for l in lines {
        adj[l.from_bus].push(l.to_bus);
        adj[l.to_bus].push(l.from_bus);
    }
    let mut seen = vec![false; n_buses];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(b) = stack.pop() {
        for &n in &adj[b] {
            if !seen[n] {
                seen[n] = true;
                stack.push(n);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    fn line(from: usize, to: usize, x: f64, limit: f64) -> Line {
        Line {
            id: 0,
            from_bus: from,
            to_bus: to,
            reactance: x,
            flow_limit: limit,
        }
    }

    fn two_buses() -> Vec<Bus> {
        (0..2)
            .map(|id| Bus {
                id,
                nominal_load_share: 0.5,
            })
            .collect()
    }

    #[test]
    fn parallel_lines_are_merged() {
        let (m, s) = default_hourly_profile(24);
        let sys = PowerSystem::new(
            "p",
            two_buses(),
            vec![cases::simple_generator(0, 0, 0.0, 100.0, 10.0)],
            vec![line(0, 1, 0.2, 50.0), line(1, 0, 0.2, 30.0)],
            m,
            s,
            24,
        )
        .unwrap();
        assert_eq!(sys.n_lines(), 1);
        assert!((sys.lines()[0].reactance - 0.1).abs() < 1e-12);
        assert_eq!(sys.lines()[0].flow_limit, 80.0);
    }

    #[test]
    fn disconnected_network_is_rejected() {
        let buses = (0..3)
            .map(|id| Bus {
                id,
                nominal_load_share: 1.0,
            })
            .collect();
        let (m, s) = default_hourly_profile(2);
        let err = PowerSystem::new("d", buses, vec![], vec![line(0, 1, 0.1, 10.0)], m, s, 2)
            .unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn generator_on_missing_bus_is_named() {
        let (m, s) = default_hourly_profile(2);
        let g = cases::simple_generator(0, 7, 0.0, 100.0, 10.0);
        let err = PowerSystem::new("g", two_buses(), vec![g], vec![line(0, 1, 0.1, 1.0)], m, s, 2)
            .unwrap_err();
        match err {
            Error::Validation { field, index, .. } => {
                assert_eq!(field, "generators");
                assert_eq!(index, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn initial_power_must_match_status() {
        let (m, s) = default_hourly_profile(1);
        let mut g = cases::simple_generator(0, 0, 10.0, 100.0, 10.0);
        g.initial_power = 5.0;
        let buses = vec![Bus {
            id: 0,
            nominal_load_share: 1.0,
        }];
        assert!(PowerSystem::new("g", buses, vec![g], vec![], m, s, 1).is_err());
    }

    #[test]
    fn forced_hours_follow_initial_state() {
        let mut g = cases::simple_generator(0, 0, 10.0, 100.0, 10.0);
        g.min_up = 4;
        g.min_down = 3;
        g.initial_on_hours = 1;
        g.initial_power = 20.0;
        assert_eq!(g.forced_initial_hours(), (3, true));
        g.initial_on_hours = -1;
        g.initial_power = 0.0;
        assert_eq!(g.forced_initial_hours(), (2, false));
        g.initial_on_hours = -5;
        assert_eq!(g.forced_initial_hours(), (0, false));
    }

    #[test]
    fn default_profile_peaks_in_the_evening() {
        let (mean, std) = default_hourly_profile(24);
        let mut level = 1.0;
        let levels: Vec<f64> = mean
            .iter()
            .map(|r| {
                level *= r;
                level
            })
            .collect();
        let peak = levels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, 18);
        assert!(std.iter().all(|&s| s == DEFAULT_RATIO_STD));
    }
}
