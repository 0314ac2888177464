//! Built-in test systems.
//!
//! These are small, fully specified systems used by the test suites and the
//! command line (`--system builtin:<name>`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ptdf::compute_ptdf;
use crate::system::{default_hourly_profile, Bus, Generator, Line, PowerSystem};

/// Unit with no binding inter-temporal limits, initially off.
pub fn simple_generator(id: usize, bus: usize, p_min: f64, p_max: f64, marginal: f64) -> Generator {
    Generator {
        id,
        bus,
        p_min,
        p_max,
        marginal_cost: marginal,
        no_load_cost: 0.0,
        startup_cost: 0.0,
        min_up: 1,
        min_down: 1,
        ramp_up: p_max.max(1.0),
        ramp_down: p_max.max(1.0),
        startup_limit: p_max,
        shutdown_limit: p_max,
        initial_on_hours: -1,
        initial_power: 0.0,
    }
}

fn line(from_bus: usize, to_bus: usize, reactance: f64, flow_limit: f64) -> Line {
    Line {
        id: 0,
        from_bus,
        to_bus,
        reactance,
        flow_limit,
    }
}

pub fn builtin(name: &str) -> Result<PowerSystem> {
    match name {
        "two-bus" => Ok(two_bus()),
        "single-bus" => Ok(single_bus_three_units(4)),
        "five-bus" => Ok(five_bus()),
        "synthetic-30" => synthetic(30, 12, 7),
        other => Err(Error::Input(format!("unknown builtin system {other:?}"))),
    }
}

/// Two buses, one line, one unit at each end. Horizon of one hour.
pub fn two_bus() -> PowerSystem {
    let buses = vec![
        Bus { id: 0, nominal_load_share: 0.0 },
        Bus { id: 1, nominal_load_share: 1.0 },
    ];
    let gens = vec![
        simple_generator(0, 0, 0.0, 200.0, 10.0),
        simple_generator(1, 1, 0.0, 200.0, 30.0),
    ];
    let (m, s) = default_hourly_profile(1);
    PowerSystem::new("two-bus", buses, gens, vec![line(0, 1, 0.1, 100.0)], m, s, 1)
        .expect("two-bus system is valid")
}

/// One bus with three units of increasing cost and stiffness. The base unit
/// starts online.
pub fn single_bus_three_units(horizon: usize) -> PowerSystem {
    let buses = vec![Bus { id: 0, nominal_load_share: 1.0 }];
    let gens = vec![
        Generator {
            no_load_cost: 50.0,
            startup_cost: 400.0,
            min_up: 2,
            min_down: 2,
            ramp_up: 60.0,
            ramp_down: 60.0,
            startup_limit: 60.0,
            shutdown_limit: 60.0,
            initial_on_hours: 4,
            initial_power: 90.0,
            ..simple_generator(0, 0, 30.0, 120.0, 12.0)
        },
        Generator {
            no_load_cost: 25.0,
            startup_cost: 120.0,
            min_up: 2,
            min_down: 1,
            ramp_up: 50.0,
            ramp_down: 50.0,
            startup_limit: 50.0,
            shutdown_limit: 60.0,
            ..simple_generator(1, 0, 15.0, 80.0, 25.0)
        },
        Generator {
            no_load_cost: 10.0,
            startup_cost: 30.0,
            ..simple_generator(2, 0, 5.0, 60.0, 45.0)
        },
    ];
    let (m, s) = default_hourly_profile(horizon);
    PowerSystem::new("single-bus", buses, gens, vec![], m, s, horizon)
        .expect("single-bus system is valid")
}

/// Five buses, six lines, four units. The cheap unit at bus 0 can only
/// export through two limited lines, so high-demand hours congest.
pub fn five_bus() -> PowerSystem {
    let shares = [0.0, 0.2, 0.3, 0.3, 0.2];
    let buses = shares
        .iter()
        .enumerate()
        .map(|(id, &s)| Bus { id, nominal_load_share: s })
        .collect();
    let gens = vec![
        Generator {
            no_load_cost: 200.0,
            startup_cost: 500.0,
            min_up: 4,
            min_down: 4,
            ramp_up: 100.0,
            ramp_down: 100.0,
            startup_limit: 150.0,
            shutdown_limit: 150.0,
            initial_on_hours: 8,
            initial_power: 150.0,
            ..simple_generator(0, 0, 60.0, 250.0, 15.0)
        },
        Generator {
            no_load_cost: 120.0,
            startup_cost: 300.0,
            min_up: 3,
            min_down: 2,
            ramp_up: 80.0,
            ramp_down: 80.0,
            startup_limit: 100.0,
            shutdown_limit: 100.0,
            ..simple_generator(1, 1, 30.0, 150.0, 25.0)
        },
        Generator {
            no_load_cost: 80.0,
            startup_cost: 150.0,
            min_up: 2,
            min_down: 2,
            ramp_up: 90.0,
            ramp_down: 90.0,
            startup_limit: 90.0,
            shutdown_limit: 90.0,
            ..simple_generator(2, 3, 20.0, 120.0, 35.0)
        },
        Generator {
            no_load_cost: 30.0,
            startup_cost: 50.0,
            ..simple_generator(3, 4, 10.0, 100.0, 60.0)
        },
    ];
    let lines = vec![
        line(0, 1, 0.10, 120.0),
        line(0, 2, 0.12, 100.0),
        line(1, 2, 0.08, 200.0),
        line(1, 3, 0.10, 200.0),
        line(2, 4, 0.10, 200.0),
        line(3, 4, 0.15, 200.0),
    ];
    let (m, s) = default_hourly_profile(24);
    PowerSystem::new("five-bus", buses, gens, lines, m, s, 24).expect("five-bus system is valid")
}

/// Random single-bus system for oracle comparisons.
pub fn random_single_bus(seed: u64, n_gens: usize, horizon: usize) -> PowerSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens = (0..n_gens)
        .map(|id| {
            let p_max = rng.random_range(4..=12) as f64 * 10.0;
            let p_min = (p_max * rng.random_range(0.1..0.5)).round();
            let ramp = (p_max * rng.random_range(0.3..1.0)).round().max(1.0);
            let startup_limit = rng.random_range(p_min..=p_max).round().clamp(p_min, p_max);
            let shutdown_limit = rng.random_range(p_min..=p_max).round().clamp(p_min, p_max);
            let min_up = rng.random_range(1..=3);
            let min_down = rng.random_range(1..=3);
            let on = rng.random_bool(0.4);
            Generator {
                id,
                bus: 0,
                p_min,
                p_max,
                marginal_cost: rng.random_range(10..=60) as f64,
                no_load_cost: rng.random_range(0..=100) as f64,
                startup_cost: rng.random_range(0..=500) as f64,
                min_up,
                min_down,
                ramp_up: ramp,
                ramp_down: ramp,
                startup_limit,
                shutdown_limit,
                initial_on_hours: if on { rng.random_range(1..=3) } else { -rng.random_range(1..=3) },
                initial_power: if on { rng.random_range(p_min..=p_max).round().clamp(p_min, p_max) } else { 0.0 },
            }
        })
        .collect();
    let buses = vec![Bus { id: 0, nominal_load_share: 1.0 }];
    let (m, s) = default_hourly_profile(horizon);
    PowerSystem::new(format!("random-{seed}"), buses, gens, vec![], m, s, horizon)
        .expect("random single-bus system is valid")
}

/// Hour-to-hour ratio spread of the synthetic systems. Day-to-day variation
/// comes mostly from the peak level and the bus distribution.
pub const SYNTHETIC_RATIO_STD: f64 = 0.01;

/// Meshed synthetic system: a ring with random chords, a three-tier fleet
/// (base, mid-merit with long minimum up times, peaking) and line limits
/// sized from a merit-order dispatch at nominal peak, with the two most
/// loaded lines made binding.
pub fn synthetic(n_buses: usize, n_gens: usize, seed: u64) -> Result<PowerSystem> {
    if n_buses < 3 || n_gens == 0 {
        return Err(Error::Input("synthetic systems need >= 3 buses and >= 1 unit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let buses: Vec<Bus> = (0..n_buses)
        .map(|id| Bus {
            id,
            nominal_load_share: if rng.random_bool(0.7) { rng.random_range(0.5..1.5) } else { 0.0 },
        })
        .collect();

    let mut lines: Vec<Line> = (0..n_buses)
        .map(|b| line(b, (b + 1) % n_buses, rng.random_range(0.05..0.25), 1.0))
        .collect();
    for _ in 0..n_buses / 2 {
        let a = rng.random_range(0..n_buses);
        let mut b = rng.random_range(0..n_buses);
        while b == a {
            b = rng.random_range(0..n_buses);
        }
        lines.push(line(a, b, rng.random_range(0.05..0.25), 1.0));
    }

    let gens: Vec<Generator> = (0..n_gens)
        .map(|id| {
            let bus = rng.random_range(0..n_buses);
            match id % 4 {
                0 => {
                    let p_max = rng.random_range(30..=40) as f64 * 10.0;
                    Generator {
                        id,
                        bus,
                        p_min: 0.4 * p_max,
                        p_max,
                        marginal_cost: rng.random_range(12.0..18.0),
                        no_load_cost: 300.0,
                        startup_cost: 2000.0,
                        min_up: 8,
                        min_down: 6,
                        ramp_up: 0.3 * p_max,
                        ramp_down: 0.3 * p_max,
                        startup_limit: 0.5 * p_max,
                        shutdown_limit: 0.5 * p_max,
                        initial_on_hours: 8,
                        initial_power: 0.5 * p_max,
                    }
                }
                1 | 2 => {
                    let p_max = rng.random_range(15..=25) as f64 * 10.0;
                    Generator {
                        id,
                        bus,
                        p_min: 0.3 * p_max,
                        p_max,
                        marginal_cost: rng.random_range(22.0..32.0),
                        no_load_cost: 150.0,
                        startup_cost: 600.0,
                        min_up: 8,
                        min_down: 3,
                        ramp_up: 0.5 * p_max,
                        ramp_down: 0.5 * p_max,
                        startup_limit: 0.6 * p_max,
                        shutdown_limit: 0.6 * p_max,
                        initial_on_hours: -3,
                        initial_power: 0.0,
                    }
                }
                _ => {
                    let p_max = rng.random_range(6..=12) as f64 * 10.0;
                    Generator {
                        id,
                        bus,
                        p_min: 0.2 * p_max,
                        p_max,
                        marginal_cost: rng.random_range(45.0..70.0),
                        no_load_cost: 40.0,
                        startup_cost: 80.0,
                        min_up: 1,
                        min_down: 1,
                        ramp_up: p_max,
                        ramp_down: p_max,
                        startup_limit: p_max,
                        shutdown_limit: p_max,
                        initial_on_hours: -1,
                        initial_power: 0.0,
                    }
                }
            }
        })
        .collect();

    let (m, _) = default_hourly_profile(24);
    let s = vec![SYNTHETIC_RATIO_STD; 24];
    let name = format!("synthetic-{n_buses}");
    let draft = PowerSystem::new(name.clone(), buses.clone(), gens.clone(), lines, m.clone(), s.clone(), 24)?;

    // Reference flows: merit-order dispatch of nominal peak demand.
    let peak = 0.6 * draft.total_capacity();
    let share_total: f64 = buses.iter().map(|b| b.nominal_load_share).sum();
    let mut injections: Vec<f64> =
        buses.iter().map(|b| -peak * b.nominal_load_share / share_total).collect();
    let mut order: Vec<&Generator> = gens.iter().collect();
    order.sort_by(|a, b| a.marginal_cost.total_cmp(&b.marginal_cost));
    let mut remaining = peak;
    for g in order {
        let p = remaining.min(g.p_max);
        injections[g.bus] += p;
        remaining -= p;
    }
    let ptdf = compute_ptdf(&draft, 0)?;
    let flows = ptdf.flows_unchecked(&injections);
    let floor = 0.05 * peak;
    let mut limits: Vec<f64> = flows.iter().map(|f| (1.3 * f.abs()).max(floor)).collect();
    let mut by_load: Vec<usize> = (0..flows.len()).collect();
    by_load.sort_by(|&a, &b| flows[b].abs().total_cmp(&flows[a].abs()));
    for &l in by_load.iter().take(2) {
        limits[l] = (0.8 * flows[l].abs()).max(floor);
    }
    let lines = draft
        .lines()
        .iter()
        .zip(&limits)
        .map(|(l, &lim)| Line {
            flow_limit: lim.round(),
            ..l.clone()
        })
        .collect();
    PowerSystem::new(name, buses, gens, lines, m, s, 24)
}
