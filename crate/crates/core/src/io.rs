//! Reading and writing experiment artifacts.
//!
//! Every file is JSON except the final report table, which is CSV. Writes go
//! to a temporary sibling first and are renamed into place, so a reader never
//! sees a half-written file. Floats are written in shortest round-trip form.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{EvalReport, InstanceEval, SystemSummary};
use crate::knn::InstanceRecord;
use crate::scenario::ScenarioInstance;
use crate::system::{default_hourly_profile, Bus, Generator, Line, PowerSystem};
use crate::uc::SolverConfig;

pub const SCHEMA_VERSION: &str = "1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn parse_error(path: &Path, e: &serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Parses `text`, logging a warning for each field the target type does not
/// know.
fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_ignored::deserialize(&mut de, |field| {
        log::warn!("event=unknown_field file={} field={}", path.display(), field);
    })
    .map_err(|e| parse_error(path, &e))?;
    de.end().map_err(|e| parse_error(path, &e))?;
    Ok(value)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    parse_json(path, &text)
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<String>,
}

fn check_version(path: &Path, text: &str, required: bool) -> Result<()> {
    let probe: VersionProbe = match serde_json::from_str(text) {
        Ok(p) => p,
        // arrays and malformed files are reported by the full parse
        Err(e) if e.is_data() => return Ok(()),
        Err(e) => return Err(parse_error(path, &e)),
    };
    match probe.schema_version {
        Some(v) if v != SCHEMA_VERSION => Err(Error::SchemaVersion {
            found: v,
            expected: SCHEMA_VERSION.to_string(),
        }),
        None if required => Err(Error::SchemaVersion {
            found: "none".into(),
            expected: SCHEMA_VERSION.to_string(),
        }),
        _ => Ok(()),
    }
}

fn load_versioned<T: DeserializeOwned>(path: &Path, required: bool) -> Result<T> {
    let text = read_text(path)?;
    check_version(path, &text, required)?;
    parse_json(path, &text)
}

#[derive(Deserialize)]
struct GeneratorFile {
    id: usize,
    bus: usize,
    p_min: f64,
    p_max: f64,
    marginal_cost: f64,
    #[serde(default)]
    no_load_cost: f64,
    #[serde(default)]
    startup_cost: f64,
    #[serde(default = "one")]
    min_up: u32,
    #[serde(default = "one")]
    min_down: u32,
    ramp_up: Option<f64>,
    ramp_down: Option<f64>,
    startup_limit: Option<f64>,
    shutdown_limit: Option<f64>,
    initial_on_hours: Option<i32>,
    #[serde(default)]
    initial_power: f64,
}

fn one() -> u32 {
    1
}

impl From<GeneratorFile> for Generator {
    fn from(g: GeneratorFile) -> Self {
        Generator {
            id: g.id,
            bus: g.bus,
            p_min: g.p_min,
            p_max: g.p_max,
            marginal_cost: g.marginal_cost,
            no_load_cost: g.no_load_cost,
            startup_cost: g.startup_cost,
            min_up: g.min_up,
            min_down: g.min_down,
            ramp_up: g.ramp_up.unwrap_or(g.p_max),
            ramp_down: g.ramp_down.unwrap_or(g.p_max),
            startup_limit: g.startup_limit.unwrap_or(g.p_max),
            shutdown_limit: g.shutdown_limit.unwrap_or(g.p_max),
            // off long enough to start at once
            initial_on_hours: g.initial_on_hours.unwrap_or(-(g.min_down.max(1) as i32)),
            initial_power: g.initial_power,
        }
    }
}

#[derive(Deserialize)]
struct SystemFile {
    #[allow(dead_code)]
    schema_version: Option<String>,
    name: String,
    buses: Vec<Bus>,
    generators: Vec<GeneratorFile>,
    #[serde(default)]
    lines: Vec<Line>,
    hourly_ratio_mean: Option<Vec<f64>>,
    hourly_ratio_std: Option<Vec<f64>>,
    #[serde(default = "day")]
    horizon: usize,
}

fn day() -> usize {
    24
}

#[derive(Serialize)]
struct SystemFileOut<'a> {
    schema_version: &'static str,
    #[serde(flatten)]
    system: &'a PowerSystem,
}

/// Loads a native system file. Missing unit data takes neutral defaults:
/// ramp and start/stop limits equal to `p_max`, minimum times of one hour,
/// and an initial state of off for `min_down` hours at zero output.
pub fn load_system(path: &Path) -> Result<PowerSystem> {
    let file: SystemFile = load_versioned(path, false)?;
    let (mean, std) = default_hourly_profile(file.horizon);
    PowerSystem::new(
        file.name,
        file.buses,
        file.generators.into_iter().map(Generator::from).collect(),
        file.lines,
        file.hourly_ratio_mean.unwrap_or(mean),
        file.hourly_ratio_std.unwrap_or(std),
        file.horizon,
    )
}

/// Loads either a native system file or one in the external benchmark
/// layout, told apart by the external layout's "Generators" section.
pub fn load_system_auto(path: &Path) -> Result<PowerSystem> {
    let text = read_text(path)?;
    let external = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.as_object().map(|o| o.contains_key("Generators")))
        .unwrap_or(false);
    if external {
        crate::import::import_external(path)
    } else {
        load_system(path)
    }
}

pub fn save_system(path: &Path, system: &PowerSystem) -> Result<()> {
    save_json(
        path,
        &SystemFileOut {
            schema_version: SCHEMA_VERSION,
            system,
        },
    )
}

pub fn load_instances(path: &Path) -> Result<Vec<ScenarioInstance>> {
    load_versioned(path, false)
}

pub fn save_instances(path: &Path, instances: &[ScenarioInstance]) -> Result<()> {
    save_json(path, instances)
}

pub fn load_records(path: &Path) -> Result<Vec<InstanceRecord>> {
    load_versioned(path, false)
}

/// Like [`load_records`], but a missing file is an empty store.
pub fn load_records_or_empty(path: &Path) -> Result<Vec<InstanceRecord>> {
    if path.exists() {
        load_records(path)
    } else {
        Ok(Vec::new())
    }
}

pub fn save_records(path: &Path, records: &[InstanceRecord]) -> Result<()> {
    save_json(path, records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalsFile {
    pub schema_version: String,
    pub system: SystemSummary,
    pub k: usize,
    pub config: SolverConfig,
    pub evals: Vec<InstanceEval>,
}

impl EvalsFile {
    pub fn new(system: SystemSummary, k: usize, config: SolverConfig, evals: Vec<InstanceEval>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            system,
            k,
            config,
            evals,
        }
    }
}

pub fn load_evals(path: &Path) -> Result<EvalsFile> {
    load_versioned(path, true)
}

pub fn save_evals(path: &Path, evals: &EvalsFile) -> Result<()> {
    save_json(path, evals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: String,
    pub reports: Vec<EvalReport>,
}

pub fn load_report(path: &Path) -> Result<Vec<EvalReport>> {
    Ok(load_versioned::<ReportFile>(path, true)?.reports)
}

pub fn save_report(path: &Path, reports: &[EvalReport]) -> Result<()> {
    save_json(
        path,
        &ReportFile {
            schema_version: SCHEMA_VERSION.into(),
            reports: reports.to_vec(),
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub system_file: Option<PathBuf>,
    pub instance_file: Option<PathBuf>,
    pub record_file: Option<PathBuf>,
    pub evals_file: Option<PathBuf>,
    pub report_file: Option<PathBuf>,
    pub master_seed: Option<u64>,
    pub k: Option<usize>,
    pub config: Option<SolverConfig>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            system_file: None,
            instance_file: None,
            record_file: None,
            evals_file: None,
            report_file: None,
            master_seed: None,
            k: None,
            config: None,
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    load_versioned(path, true)
}

pub fn save_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    save_json(path, manifest)
}

pub const CSV_HEADER: [&str; 13] = [
    "name",
    "buses",
    "units",
    "lines",
    "mean_gap_pct",
    "max_gap_pct",
    "lt_0.01pct",
    "0.01_0.02pct",
    "0.02_0.05pct",
    "0.05_0.1pct",
    "gt_0.1pct",
    "n_infeasible",
    "mean_speedup",
];

fn pct(v: Option<f64>) -> String {
    v.map_or(String::new(), |g| format!("{:.4}", g * 100.0))
}

/// One row per report: gaps in percent with four decimals, speedup with one.
pub fn report_csv(reports: &[EvalReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    w.write_record(CSV_HEADER).map_err(ser)?;
    for r in reports {
        let mut row = vec![
            r.system.name.clone(),
            r.system.buses.to_string(),
            r.system.units.to_string(),
            r.system.lines.to_string(),
            pct(r.mean_gap),
            pct(r.max_gap),
        ];
        row.extend(r.histogram.iter().map(|c| c.to_string()));
        row.push(r.n_infeasible.to_string());
        row.push(format!("{:.1}", r.mean_speedup));
        w.write_record(&row).map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}

pub fn save_report_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    write_atomic(path, report_csv(reports)?.as_bytes())
}

/// Parses a table written by [`report_csv`] back into its cells.
pub fn read_report_csv(text: &str) -> Result<Vec<Vec<String>>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|row| {
            row.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| Error::Input(format!("report table: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::scenario::generate_instances;

    #[test]
    fn system_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sys.json");
        let sys = cases::five_bus();
        save_system(&path, &sys).unwrap();
        assert_eq!(load_system(&path).unwrap(), sys);
    }

    #[test]
    fn minimal_system_file_loads_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sys.json");
        fs::write(
            &path,
            r#"{"name": "mini", "horizon": 2,
                "buses": [{"id": 0, "nominal_load_share": 1.0}],
                "generators": [{"id": 0, "bus": 0, "p_min": 0, "p_max": 10, "marginal_cost": 1, "min_down": 3}]}"#,
        )
        .unwrap();
        let sys = load_system(&path).unwrap();
        let g = &sys.generators()[0];
        assert_eq!(g.initial_on_hours, -3);
        assert_eq!(g.ramp_up, 10.0);
        assert_eq!(sys.horizon(), 2);
        assert_eq!(sys.hourly_ratio_mean().len(), 2);
    }

    #[test]
    fn missing_bus_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sys.json");
        fs::write(
            &path,
            r#"{"name": "bad", "horizon": 1,
                "buses": [{"id": 0, "nominal_load_share": 1.0}],
                "generators": [{"id": 0, "bus": 4, "p_min": 0, "p_max": 10, "marginal_cost": 1}]}"#,
        )
        .unwrap();
        match load_system(&path) {
            Err(Error::Validation { field, index, .. }) => {
                assert_eq!(field, "generators");
                assert_eq!(index, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_has_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sys.json");
        fs::write(&path, "{\n  \"name\": \"x\",\n  \"buses\": [oops]\n}").unwrap();
        match load_system(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_truncated_files_fail_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let sys = cases::five_bus();
        let path = dir.path().join("inst.json");
        save_instances(&path, &generate_instances(&sys, 3, 1).unwrap()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_instances(&path), Err(Error::Parse { .. })));
        fs::write(&path, "").unwrap();
        assert!(matches!(load_instances(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn instances_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        let inst = generate_instances(&cases::five_bus(), 4, 99).unwrap();
        save_instances(&path, &inst).unwrap();
        assert_eq!(load_instances(&path).unwrap(), inst);
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(&path, r#"{"schema_version": "1", "k": 3, "colour": "blue"}"#).unwrap();
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.k, Some(3));
    }

    #[test]
    fn version_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(&path, r#"{"schema_version": "7"}"#).unwrap();
        assert!(matches!(load_manifest(&path), Err(Error::SchemaVersion { .. })));
        fs::write(&path, r#"{"k": 1}"#).unwrap();
        assert!(matches!(load_manifest(&path), Err(Error::SchemaVersion { .. })));
    }

    #[test]
    fn missing_record_store_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_records_or_empty(&dir.path().join("none.json")).unwrap().is_empty());
    }

    #[test]
    fn csv_layout() {
        let report = EvalReport {
            system: SystemSummary {
                name: "s".into(),
                buses: 5,
                units: 4,
                lines: 6,
            },
            n_instances: 3,
            mean_gap: Some(0.0001333333),
            max_gap: None,
            histogram: [1, 1, 1, 0, 0],
            n_infeasible: 0,
            mean_speedup: 12.34,
        };
        let text = report_csv(&[report]).unwrap();
        let rows = read_report_csv(&text).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].len(), 13);
        assert_eq!(rows[0][4], "0.0133");
        assert_eq!(rows[0][5], "");
        assert_eq!(rows[0][12], "12.3");
    }
}
