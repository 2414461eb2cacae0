//! Scenario files: a JSON tree with the sections `sphere`, `metal`,
//! `emitters`, `controls`, `evolve`, `eigenstates` and `sweep`.

use std::fmt;
use std::path::Path;

use plasmodicke_core::geometry::{
    place_pair, place_polar, place_ring, validate, DrudeModel, EmitterSet, NanoSphere, NumericalControls, OrientationMode,
    SystemConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Modes,
    Rates,
    Eigenstates,
    Evolve,
    Ladder,
    Sweep,
}

impl Task {
    pub const ALL: [Task; 6] = [Task::Modes, Task::Rates, Task::Eigenstates, Task::Evolve, Task::Ladder, Task::Sweep];

    pub fn name(self) -> &'static str {
        match self {
            Task::Modes => "modes",
            Task::Rates => "rates",
            Task::Eigenstates => "eigenstates",
            Task::Evolve => "evolve",
            Task::Ladder => "ladder",
            Task::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub params: Vec<String>,
    /// One entry per series point, aligned with `params`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    /// Optional outer parameter with listed values.
    pub series: Option<Series>,
}

impl SweepSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        (0..self.steps).map(|i| self.from + (self.to - self.from) * i as f64 / (self.steps - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveSpec {
    /// Final time in units of 1/Γ₁.
    pub t_max: f64,
    pub samples: usize,
}

impl Default for EvolveSpec {
    fn default() -> Self {
        Self { t_max: 3.0, samples: 301 }
    }
}

impl EvolveSpec {
    pub fn grid(&self) -> Vec<f64> {
        (0..self.samples).map(|i| self.t_max * i as f64 / (self.samples - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub config: SystemConfig,
    pub tasks: Vec<Task>,
    pub sweep: Option<SweepSpec>,
    pub evolve: EvolveSpec,
    /// Multipole selections for the eigenstate task; 0 means all orders.
    pub selections: Vec<usize>,
    /// The tree the scenario was parsed from.
    pub source: Value,
}

impl Scenario {
    pub fn has(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }
}

const SECTIONS: [(&str, &[&str]); 7] = [
    ("sphere", &["radius_nm", "eps_d"]),
    ("metal", &["eps_inf", "omega_p_eV", "gamma_p_eV"]),
    ("emitters", &["layout", "count", "h_nm", "orientation", "omega0_eV", "theta_deg", "offset_deg"]),
    ("controls", &["max_multipole", "fit_window_eV", "time_step_factor", "eigen_tolerance", "free_space_coupling"]),
    ("evolve", &["t_max", "samples"]),
    ("eigenstates", &["selections"]),
    ("sweep", &["param", "from", "to", "steps", "series"]),
];

/// Value at a dotted path.
pub fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(v, |v, key| v.get(key))
}

/// Sets the number at a dotted path, creating missing objects. The
/// existing value, if any, must be a number.
pub fn set_number(v: &mut Value, path: &str, x: f64) -> CliResult<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("malformed parameter path `{path}`")));
    }
    let mut cur = v;
    for key in &keys[..keys.len() - 1] {
        let obj = cur.as_object_mut().ok_or_else(|| CliError::Config(format!("`{path}` does not address an object")))?;
        cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = cur.as_object_mut().ok_or_else(|| CliError::Config(format!("`{path}` does not address an object")))?;
    let last = keys[keys.len() - 1];
    if let Some(old) = obj.get(last) {
        if !old.is_number() {
            return Err(CliError::Config(format!("parameter `{path}` is not numeric")));
        }
    }
    let num = serde_json::Number::from_f64(x).ok_or_else(|| CliError::Config(format!("value {x} for `{path}` is not finite")))?;
    obj.insert(last.to_string(), Value::Number(num));
    Ok(())
}

fn missing(path: &str) -> CliError {
    CliError::Config(format!("missing key {path}"))
}

fn number(v: &Value, path: &str) -> CliResult<Option<f64>> {
    match lookup(v, path) {
        None => Ok(None),
        Some(x) => x.as_f64().map(Some).ok_or_else(|| CliError::Config(format!("key {path} must be a number"))),
    }
}

fn req_number(v: &Value, path: &str) -> CliResult<f64> {
    number(v, path)?.ok_or_else(|| missing(path))
}

fn integer(v: &Value, path: &str) -> CliResult<Option<usize>> {
    match number(v, path)? {
        None => Ok(None),
        Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 => Ok(Some(x as usize)),
        Some(x) => Err(CliError::Config(format!("key {path} must be a non-negative integer, got {x}"))),
    }
}

fn string<'a>(v: &'a Value, path: &str) -> CliResult<Option<&'a str>> {
    match lookup(v, path) {
        None => Ok(None),
        Some(x) => x.as_str().map(Some).ok_or_else(|| CliError::Config(format!("key {path} must be a string"))),
    }
}

fn check_keys(v: &Value) -> CliResult<()> {
    let obj = v.as_object().ok_or_else(|| CliError::Config("scenario must be a JSON object".into()))?;
    for (key, val) in obj {
        if key == "name" || key == "tasks" {
            continue;
        }
        let Some((_, allowed)) = SECTIONS.iter().find(|(s, _)| s == key) else {
            return Err(CliError::Config(format!("unknown section `{key}`")));
        };
        let inner = val.as_object().ok_or_else(|| CliError::Config(format!("section `{key}` must be an object")))?;
        for k in inner.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(CliError::Config(format!("unknown key {key}.{k}")));
            }
        }
    }
    Ok(())
}

fn orientation(v: &Value) -> CliResult<OrientationMode> {
    let s = string(v, "emitters.orientation")?.ok_or_else(|| missing("emitters.orientation"))?;
    match s {
        "radial" => Ok(OrientationMode::Radial),
        "azimuthal" => Ok(OrientationMode::Azimuthal),
        "tangential" => Ok(OrientationMode::Tangential),
        other => Err(CliError::Config(format!("emitters.orientation `{other}` is not radial, azimuthal or tangential"))),
    }
}

fn system_config(v: &Value) -> CliResult<SystemConfig> {
    let silver = DrudeModel::silver();
    let metal = DrudeModel::new(
        number(v, "metal.eps_inf")?.unwrap_or(silver.eps_inf),
        number(v, "metal.omega_p_eV")?.unwrap_or(silver.omega_p),
        number(v, "metal.gamma_p_eV")?.unwrap_or(silver.gamma_p),
    );
    let sphere = NanoSphere::new(req_number(v, "sphere.radius_nm")?, metal).with_host(number(v, "sphere.eps_d")?.unwrap_or(1.0));
    let layout = string(v, "emitters.layout")?.ok_or_else(|| missing("emitters.layout"))?;
    let h = req_number(v, "emitters.h_nm")?;
    let omega0 = req_number(v, "emitters.omega0_eV")?;
    let count = integer(v, "emitters.count")?;
    let geometry = |e: plasmodicke_core::Error| CliError::Config(format!("emitters: {e}"));
    let emitters: EmitterSet = match layout {
        "ring" => {
            let n = count.ok_or_else(|| missing("emitters.count"))?;
            place_ring(n, h, orientation(v)?, &sphere, omega0).map_err(geometry)?
        }
        "poles" => {
            let n = count.ok_or_else(|| missing("emitters.count"))?;
            place_polar(n, h, &sphere, omega0, number(v, "emitters.offset_deg")?.unwrap_or(1.0)).map_err(geometry)?
        }
        "pair" => {
            if let Some(n) = count.filter(|&n| n != 2) {
                return Err(CliError::Config(format!("emitters.count must be 2 for the pair layout, got {n}")));
            }
            let theta = number(v, "emitters.theta_deg")?.unwrap_or(180.0).to_radians();
            place_pair(theta, h, orientation(v)?, &sphere, omega0).map_err(geometry)?
        }
        other => return Err(CliError::Config(format!("emitters.layout `{other}` is not ring, poles or pair"))),
    };
    let d = NumericalControls::default();
    let controls = NumericalControls {
        max_multipole: integer(v, "controls.max_multipole")?.unwrap_or(d.max_multipole),
        fit_window: number(v, "controls.fit_window_eV")?.unwrap_or(d.fit_window),
        time_step_factor: number(v, "controls.time_step_factor")?.unwrap_or(d.time_step_factor),
        eigen_tolerance: number(v, "controls.eigen_tolerance")?.unwrap_or(d.eigen_tolerance),
        free_space_coupling: match lookup(v, "controls.free_space_coupling") {
            None => d.free_space_coupling,
            Some(b) => b.as_bool().ok_or_else(|| CliError::Config("key controls.free_space_coupling must be a boolean".into()))?,
        },
    };
    let config = SystemConfig::new(sphere, emitters).with_controls(controls);
    let violations = validate(&config);
    if !violations.is_empty() {
        return Err(CliError::Config(format!("invalid configuration: {}", violations.join("; "))));
    }
    Ok(config)
}

fn tasks(v: &Value) -> CliResult<Vec<Task>> {
    let list = lookup(v, "tasks").ok_or_else(|| missing("tasks"))?;
    let list = list.as_array().ok_or_else(|| CliError::Config("key tasks must be a list".into()))?;
    let mut out = Vec::new();
    for t in list {
        let name = t.as_str().ok_or_else(|| CliError::Config("tasks must be strings".into()))?;
        let task = Task::ALL
            .into_iter()
            .find(|t| t.name() == name)
            .ok_or_else(|| CliError::Config(format!("unknown task `{name}`")))?;
        if !out.contains(&task) {
            out.push(task);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("task list is empty".into()));
    }
    out.sort();
    Ok(out)
}

fn sweep_spec(v: &Value) -> CliResult<Option<SweepSpec>> {
    if lookup(v, "sweep").is_none() {
        return Ok(None);
    }
    let param = string(v, "sweep.param")?.ok_or_else(|| missing("sweep.param"))?.to_string();
    let steps = integer(v, "sweep.steps")?.ok_or_else(|| missing("sweep.steps"))?;
    if steps == 0 {
        return Err(CliError::Config("sweep.steps must be at least 1".into()));
    }
    let series = match lookup(v, "sweep.series") {
        None => None,
        Some(_) => Some(series(v)?),
    };
    Ok(Some(SweepSpec { param, from: req_number(v, "sweep.from")?, to: req_number(v, "sweep.to")?, steps, series }))
}

/// `{"param": p, "values": [..]}` or `{"params": [..], "values": [[..], ..]}`.
fn series(v: &Value) -> CliResult<Series> {
    let bad = |m: &str| CliError::Config(format!("sweep.series: {m}"));
    let values = lookup(v, "sweep.series.values").and_then(Value::as_array).ok_or_else(|| missing("sweep.series.values"))?;
    let num = |x: &Value| x.as_f64().ok_or_else(|| bad("values must be numbers"));
    if let Some(param) = string(v, "sweep.series.param")? {
        let values = values.iter().map(|x| Ok(vec![num(x)?])).collect::<CliResult<Vec<_>>>()?;
        return Ok(Series { params: vec![param.to_string()], values });
    }
    let params = lookup(v, "sweep.series.params")
        .and_then(Value::as_array)
        .ok_or_else(|| missing("sweep.series.param"))?
        .iter()
        .map(|p| p.as_str().map(str::to_string).ok_or_else(|| bad("params must be strings")))
        .collect::<CliResult<Vec<_>>>()?;
    if params.is_empty() {
        return Err(bad("params is empty"));
    }
    let values = values
        .iter()
        .map(|row| {
            let row = row.as_array().ok_or_else(|| bad("each value must be a list"))?;
            if row.len() != params.len() {
                return Err(bad("each value list must match params"));
            }
            row.iter().map(num).collect::<CliResult<Vec<_>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Series { params, values })
}

/// Validates a scenario tree.
pub fn parse_value(v: Value) -> CliResult<Scenario> {
    check_keys(&v)?;
    let name = string(&v, "name")?.unwrap_or("scenario").to_string();
    let tasks = tasks(&v)?;
    let sweep = sweep_spec(&v)?;
    match (tasks.contains(&Task::Sweep), sweep.is_some()) {
        (true, false) => return Err(CliError::Config("sweep task requested without a sweep section".into())),
        (false, true) => return Err(CliError::Config("sweep section given without the sweep task".into())),
        _ => {}
    }
    let evolve = EvolveSpec {
        t_max: number(&v, "evolve.t_max")?.unwrap_or(EvolveSpec::default().t_max),
        samples: integer(&v, "evolve.samples")?.unwrap_or(EvolveSpec::default().samples),
    };
    if evolve.t_max.is_nan() || evolve.t_max <= 0.0 || evolve.samples < 2 {
        return Err(CliError::Config("evolve needs t_max > 0 and at least 2 samples".into()));
    }
    let selections = match lookup(&v, "eigenstates.selections") {
        None => vec![0],
        Some(list) => list
            .as_array()
            .ok_or_else(|| CliError::Config("eigenstates.selections must be a list".into()))?
            .iter()
            .map(|x| {
                x.as_u64()
                    .map(|n| n as usize)
                    .ok_or_else(|| CliError::Config("eigenstates.selections must hold non-negative integers".into()))
            })
            .collect::<CliResult<Vec<usize>>>()?,
    };
    let config = system_config(&v)?;
    if let Some(&bad) = selections.iter().find(|&&n| n > config.controls.max_multipole) {
        return Err(CliError::Config(format!("eigenstates selection {bad} exceeds controls.max_multipole")));
    }
    Ok(Scenario { name, config, tasks, sweep, evolve, selections, source: v })
}

pub fn parse_str(text: &str) -> CliResult<Scenario> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed scenario: {e}")))?;
    parse_value(v)
}

pub fn parse_config(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
