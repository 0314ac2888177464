//! Importer for the public unit-commitment benchmark JSON layout.
//!
//! Buses, units and lines are numbered in order of appearance. Only the
//! features the model supports are accepted; files that use others are
//! rejected with the list of offending sections rather than silently
//! simplified.

use std::collections::HashMap;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::system::{default_hourly_profile, Bus, Generator, Line, PowerSystem, DEFAULT_RATIO_STD};

/// Limit assigned to lines without a "Normal flow limit (MW)".
pub const UNLIMITED_FLOW: f64 = 1e9;

const UNSUPPORTED_SECTIONS: [&str; 4] = ["Reserves", "Contingencies", "Price-sensitive loads", "Storage units"];

fn bad(section: &str, name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Input(format!("{section} {name:?}: {msg}"))
}

fn number(obj: &Map<String, Value>, key: &str, section: &str, name: &str) -> Result<Option<f64>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| bad(section, name, format!("{key:?} must be a number"))),
    }
}

fn require(obj: &Map<String, Value>, key: &str, section: &str, name: &str) -> Result<f64> {
    number(obj, key, section, name)?.ok_or_else(|| bad(section, name, format!("missing {key:?}")))
}

fn numbers(v: &Value, key: &str, section: &str, name: &str) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) => items
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| bad(section, name, format!("{key:?} must hold numbers"))))
            .collect(),
        Value::Number(n) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
        _ => Err(bad(section, name, format!("{key:?} must be a number or a list"))),
    }
}

fn section<'a>(root: &'a Map<String, Value>, key: &str) -> Result<Option<&'a Map<String, Value>>> {
    match root.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Object(m)) => Ok(Some(m)),
        Some(_) => Err(Error::Input(format!("section {key:?} must be an object"))),
    }
}

fn entries<'a>(obj: &'a Map<String, Value>, sec: &str) -> Result<Vec<(&'a str, &'a Map<String, Value>)>> {
    obj.iter()
        .map(|(k, v)| {
            v.as_object()
                .map(|m| (k.as_str(), m))
                .ok_or_else(|| bad(sec, k, "entry must be an object"))
        })
        .collect()
}

pub fn import_external(path: &Path) -> Result<PowerSystem> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let root: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("imported");
    import_value(name, &root)
}

/// Converts an already parsed document.
pub fn import_value(name: &str, root: &Value) -> Result<PowerSystem> {
    let root = root
        .as_object()
        .ok_or_else(|| Error::Input("document must be a JSON object".into()))?;

    let mut offending: Vec<String> = UNSUPPORTED_SECTIONS
        .iter()
        .filter(|s| match root.get(**s) {
            None | Some(Value::Null) => false,
            Some(Value::Object(m)) => !m.is_empty(),
            Some(Value::Array(a)) => !a.is_empty(),
            Some(_) => true,
        })
        .map(|s| s.to_lowercase())
        .collect();

    let params = section(root, "Parameters")?.cloned().unwrap_or_default();
    let horizon = number(&params, "Time horizon (h)", "Parameters", "")?
        .or(number(&params, "Time (h)", "Parameters", "")?)
        .unwrap_or(24.0);
    if horizon < 1.0 || horizon.fract() != 0.0 {
        return Err(Error::Input(format!("time horizon {horizon} must be a positive integer")));
    }
    let horizon = horizon as usize;
    if let Some(step) = number(&params, "Time step (min)", "Parameters", "")? {
        if step != 60.0 {
            offending.push("sub-hourly time step".into());
        }
    }

    let bus_sec = section(root, "Buses")?.ok_or_else(|| Error::Input("missing \"Buses\" section".into()))?;
    let mut bus_index = HashMap::new();
    let mut loads = Vec::new();
    let mut has_series = false;
    for (i, (bname, b)) in entries(bus_sec, "bus")?.into_iter().enumerate() {
        bus_index.insert(bname.to_string(), i);
        let load = match b.get("Load (MW)") {
            None => vec![0.0],
            Some(v) => numbers(v, "Load (MW)", "bus", bname)?,
        };
        if load.len() > 1 {
            has_series = true;
            if load.len() != horizon {
                return Err(bad("bus", bname, format!("load series has {} values, horizon is {horizon}", load.len())));
            }
        }
        loads.push(load);
    }

    let mean_load: Vec<f64> = loads.iter().map(|l| l.iter().sum::<f64>() / l.len() as f64).collect();
    let total: f64 = mean_load.iter().sum();
    let shares: Vec<f64> = if total > 0.0 {
        mean_load.iter().map(|m| m / total).collect()
    } else {
        vec![1.0 / loads.len().max(1) as f64; loads.len()]
    };
    let buses = shares
        .into_iter()
        .enumerate()
        .map(|(id, nominal_load_share)| Bus { id, nominal_load_share })
        .collect();

    let (mean, std) = if has_series {
        let level = |t: usize| -> f64 { loads.iter().map(|l| if l.len() == 1 { l[0] } else { l[t] }).sum() };
        let mut mean = vec![1.0];
        for t in 1..horizon {
            let prev = level(t - 1);
            if prev <= 0.0 {
                return Err(Error::Input(format!("aggregate load is zero in hour {}", t - 1)));
            }
            mean.push(level(t) / prev);
        }
        (mean, vec![DEFAULT_RATIO_STD; horizon])
    } else {
        default_hourly_profile(horizon)
    };

    let gen_sec = section(root, "Generators")?.ok_or_else(|| Error::Input("missing \"Generators\" section".into()))?;
    let mut generators = Vec::new();
    let mut piecewise = false;
    let mut startup_categories = false;
    let mut must_run = false;
    for (id, (gname, g)) in entries(gen_sec, "generator")?.into_iter().enumerate() {
        let bus_name = g
            .get("Bus")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("generator", gname, "missing \"Bus\""))?;
        let bus = *bus_index
            .get(bus_name)
            .ok_or_else(|| bad("generator", gname, format!("unknown bus {bus_name:?}")))?;
        let mw = numbers(
            g.get("Production cost curve (MW)")
                .ok_or_else(|| bad("generator", gname, "missing cost curve"))?,
            "Production cost curve (MW)",
            "generator",
            gname,
        )?;
        let cost = numbers(
            g.get("Production cost curve ($)")
                .ok_or_else(|| bad("generator", gname, "missing cost curve"))?,
            "Production cost curve ($)",
            "generator",
            gname,
        )?;
        if mw.len() != cost.len() || mw.is_empty() {
            return Err(bad("generator", gname, "cost curve lists differ in length"));
        }
        if mw.len() > 2 {
            piecewise = true;
            continue;
        }
        let (p_min, p_max) = (mw[0], *mw.last().unwrap());
        let marginal = if mw.len() == 2 && p_max > p_min {
            (cost[1] - cost[0]) / (p_max - p_min)
        } else {
            0.0
        };
        let no_load = cost[0] - marginal * p_min;
        let startup = match g.get("Startup costs ($)") {
            None => vec![0.0],
            Some(v) => numbers(v, "Startup costs ($)", "generator", gname)?,
        };
        if startup.len() > 1 {
            startup_categories = true;
        }
        if g.get("Must run?").and_then(Value::as_bool).unwrap_or(false) {
            must_run = true;
        }
        let hours = |key: &str| -> Result<u32> {
            let v = number(g, key, "generator", gname)?.unwrap_or(1.0);
            if v < 0.0 || v.fract() != 0.0 {
                return Err(bad("generator", gname, format!("{key:?} must be a whole number of hours")));
            }
            Ok((v as u32).max(1))
        };
        let min_up = hours("Minimum uptime (h)")?;
        let min_down = hours("Minimum downtime (h)")?;
        // limits above capacity never bind; capping them keeps coefficients small
        let limit = |key: &str| -> Result<f64> { Ok(number(g, key, "generator", gname)?.unwrap_or(p_max).min(p_max)) };
        let initial_on_hours = match number(g, "Initial status (h)", "generator", gname)? {
            Some(h) if h.fract() == 0.0 && h != 0.0 => h as i32,
            Some(h) => return Err(bad("generator", gname, format!("initial status {h} must be a non-zero integer"))),
            None => -(min_down as i32),
        };
        generators.push(Generator {
            id,
            bus,
            p_min,
            p_max,
            marginal_cost: marginal,
            no_load_cost: no_load,
            startup_cost: startup[0],
            min_up,
            min_down,
            ramp_up: limit("Ramp up limit (MW)")?,
            ramp_down: limit("Ramp down limit (MW)")?,
            startup_limit: limit("Startup limit (MW)")?,
            shutdown_limit: limit("Shutdown limit (MW)")?,
            initial_on_hours,
            initial_power: number(g, "Initial power (MW)", "generator", gname)?.unwrap_or(0.0),
        });
    }
    if piecewise {
        offending.push("piecewise costs".into());
    }
    if startup_categories {
        offending.push("startup categories".into());
    }
    if must_run {
        offending.push("must-run units".into());
    }
    if !offending.is_empty() {
        return Err(Error::Unsupported { sections: offending });
    }

    let mut lines = Vec::new();
    if let Some(line_sec) = section(root, "Transmission lines")? {
        for (id, (lname, l)) in entries(line_sec, "line")?.into_iter().enumerate() {
            let end = |key: &str| -> Result<usize> {
                let b = l
                    .get(key)
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("line", lname, format!("missing {key:?}")))?;
                bus_index
                    .get(b)
                    .copied()
                    .ok_or_else(|| bad("line", lname, format!("unknown bus {b:?}")))
            };
            lines.push(Line {
                id,
                from_bus: end("Source bus")?,
                to_bus: end("Target bus")?,
                reactance: require(l, "Reactance (ohms)", "line", lname)?,
                flow_limit: number(l, "Normal flow limit (MW)", "line", lname)?.unwrap_or(UNLIMITED_FLOW),
            });
        }
    }

    PowerSystem::new(name, buses, generators, lines, mean, std, horizon)
}
