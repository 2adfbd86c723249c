//! Experiment configuration: JSON schema, defaults and validation.
//!
//! Validation walks the raw JSON tree so that every problem is reported at
//! once, each tagged with the path of the offending field.

use std::fmt;
use std::path::PathBuf;

use prethermal::{NoiseKind, NoiseModel, Observable, ProductStateSpec};
use serde::Serialize;
use serde_json::{Map, Value};

pub const SCENARIOS: [&str; 6] = [
    "prethermal_scan",
    "ensemble_compare",
    "noise_scaling",
    "mitigation_run",
    "magnus_compare",
    "sample_budget",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    PrethermalScan,
    EnsembleCompare,
    NoiseScaling,
    MitigationRun,
    MagnusCompare,
    SampleBudget,
}

impl Scenario {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "prethermal_scan" => Scenario::PrethermalScan,
            "ensemble_compare" => Scenario::EnsembleCompare,
            "noise_scaling" => Scenario::NoiseScaling,
            "mitigation_run" => Scenario::MitigationRun,
            "magnus_compare" => Scenario::MagnusCompare,
            "sample_budget" => Scenario::SampleBudget,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        SCENARIOS[self as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetEntry {
    pub n: usize,
    pub depth: usize,
    pub p: f64,
    pub p_m: f64,
    pub epsilon: f64,
}

/// A validated experiment. Fields not used by the chosen scenario keep
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub rows: usize,
    pub cols: usize,
    pub coupling: f64,
    /// Trotter steps `tau`, in units of `1/J`.
    pub taus: Vec<f64>,
    pub states: Vec<ProductStateSpec>,
    pub observable: Observable,
    pub noise: NoiseModel,
    pub n_traj: usize,
    pub seed: u64,
    pub output: PathBuf,
    /// Trotter steps of the noisy circuits.
    pub steps: usize,
    /// End of the time window for scans, in units of `1/J`.
    pub t_max: f64,
    pub epsilon: f64,
    /// Energy width of the microcanonical window, in units of `J`.
    pub delta: f64,
    /// Time at which the plateau value is read off, in units of `1/J`.
    pub t_plateau: f64,
    pub magnus_orders: Vec<usize>,
    pub budget: Vec<BudgetEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

const TOP_LEVEL: [&str; 20] = [
    "scenario",
    "lattice",
    "coupling",
    "omega",
    "tau",
    "states",
    "observable",
    "noise",
    "n_traj",
    "seed",
    "output",
    "steps",
    "t_max",
    "epsilon",
    "delta",
    "t_plateau",
    "magnus_orders",
    "budget",
    "theta",
    "phi",
];

struct Walker {
    errors: Vec<ConfigError>,
}

impl Walker {
    fn err(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ConfigError {
            path: path.into(),
            message: message.into(),
        });
    }

    fn number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.err(path, "expected a number");
                None
            }
        }
    }

    fn count(&mut self, v: &Value, path: &str) -> Option<usize> {
        match v.as_u64() {
            Some(x) => Some(x as usize),
            None => {
                self.err(path, "expected a non-negative integer");
                None
            }
        }
    }

    fn probability(&mut self, v: &Value, path: &str) -> Option<f64> {
        let x = self.number(v, path)?;
        if !(0.0..1.0).contains(&x) {
            self.err(path, format!("probability {x} outside [0, 1)"));
            return None;
        }
        Some(x)
    }

    fn positive(&mut self, v: &Value, path: &str) -> Option<f64> {
        let x = self.number(v, path)?;
        if x <= 0.0 {
            self.err(path, format!("must be positive, got {x}"));
            return None;
        }
        Some(x)
    }

    fn number_list(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        match v {
            Value::Array(items) if !items.is_empty() => {
                let parsed: Vec<Option<f64>> = items
                    .iter()
                    .enumerate()
                    .map(|(i, x)| self.positive(x, &format!("{path}[{i}]")))
                    .collect();
                parsed.into_iter().collect()
            }
            Value::Array(_) => {
                self.err(path, "must not be empty");
                None
            }
            other => self.positive(other, path).map(|x| vec![x]),
        }
    }
}

fn object<'a>(w: &mut Walker, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
    let obj = v.as_object();
    if obj.is_none() {
        w.err(path, "expected an object");
    }
    obj
}

fn noise_model(w: &mut Walker, v: &Value) -> Option<NoiseModel> {
    let obj = object(w, v, "noise")?;
    for key in obj.keys() {
        if !["kind", "p", "measurement_error", "backward"].contains(&key.as_str()) {
            w.err(format!("noise.{key}"), "unknown field");
        }
    }
    let kind = match obj.get("kind").map(|k| k.as_str()) {
        None => Some(NoiseKind::Depolarizing),
        Some(Some("depolarizing")) => Some(NoiseKind::Depolarizing),
        Some(Some("phase_damping")) => Some(NoiseKind::PhaseDamping),
        Some(Some("amplitude_damping")) => Some(NoiseKind::AmplitudeDamping),
        Some(_) => {
            w.err(
                "noise.kind",
                "expected depolarizing, phase_damping or amplitude_damping",
            );
            None
        }
    };
    let p = match obj.get("p") {
        Some(v) => w.probability(v, "noise.p"),
        None => {
            w.err("noise.p", "missing error probability");
            None
        }
    };
    let p_m = obj
        .get("measurement_error")
        .map_or(Some(0.0), |v| w.probability(v, "noise.measurement_error"));
    let backward = match obj.get("backward") {
        None => Some(prethermal::BackwardPlacement::BeforeLayer),
        Some(v) => match serde_json::from_value(v.clone()) {
            Ok(b) => Some(b),
            Err(_) => {
                w.err("noise.backward", "expected before_layer or after_layer");
                None
            }
        },
    };
    let model = NoiseModel::new(kind?, p?).ok()?;
    Some(model.with_measurement_error(p_m?).ok()?.with_backward(backward?))
}

fn states(w: &mut Walker, v: &Value) -> Option<Vec<ProductStateSpec>> {
    let Value::Array(items) = v else {
        w.err("states", "expected a list of {theta, phi} objects");
        return None;
    };
    if items.is_empty() {
        w.err("states", "must not be empty");
        return None;
    }
    let mut out = Vec::new();
    let mut ok = true;
    for (i, item) in items.iter().enumerate() {
        let path = format!("states[{i}]");
        let Some(obj) = object(w, item, &path) else {
            ok = false;
            continue;
        };
        let mut angle = |key: &str| match obj.get(key) {
            Some(v) => w.number(v, &format!("{path}.{key}")),
            None => {
                w.err(format!("{path}.{key}"), "missing angle");
                None
            }
        };
        match (angle("theta"), angle("phi")) {
            (Some(t), Some(p)) => out.push(ProductStateSpec::new(t, p)),
            _ => ok = false,
        }
    }
    ok.then_some(out)
}

fn budget(w: &mut Walker, v: &Value) -> Option<Vec<BudgetEntry>> {
    let Value::Array(items) = v else {
        w.err("budget", "expected a list of {n, depth, p, p_m, epsilon} objects");
        return None;
    };
    let mut out = Vec::new();
    let mut ok = true;
    for (i, item) in items.iter().enumerate() {
        let path = format!("budget[{i}]");
        let Some(obj) = object(w, item, &path) else {
            ok = false;
            continue;
        };
        let n = match obj.get("n") {
            Some(v) => w.count(v, &format!("{path}.n")),
            None => {
                w.err(format!("{path}.n"), "missing qubit count");
                None
            }
        };
        let depth = match obj.get("depth") {
            Some(v) => w.count(v, &format!("{path}.depth")),
            None => {
                w.err(format!("{path}.depth"), "missing depth");
                None
            }
        };
        let p = match obj.get("p") {
            Some(v) => w.probability(v, &format!("{path}.p")),
            None => {
                w.err(format!("{path}.p"), "missing error probability");
                None
            }
        };
        let p_m = obj
            .get("p_m")
            .map_or(Some(0.0), |v| w.probability(v, &format!("{path}.p_m")));
        let epsilon = obj
            .get("epsilon")
            .map_or(Some(1.0), |v| w.positive(v, &format!("{path}.epsilon")));
        match (n, depth, p, p_m, epsilon) {
            (Some(n), Some(depth), Some(p), Some(p_m), Some(epsilon)) => out.push(BudgetEntry {
                n,
                depth,
                p,
                p_m,
                epsilon,
            }),
            _ => ok = false,
        }
    }
    ok.then_some(out)
}

/// Parses and validates a JSON configuration, reporting every problem.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let root: Value = serde_json::from_str(raw).map_err(|e| {
        vec![ConfigError {
            path: "$".into(),
            message: format!("invalid JSON: {e}"),
        }]
    })?;
    let mut w = Walker { errors: Vec::new() };
    let Some(obj) = object(&mut w, &root, "$") else {
        return Err(w.errors);
    };
    for key in obj.keys() {
        if !TOP_LEVEL.contains(&key.as_str()) {
            w.err(key.clone(), "unknown field");
        }
    }

    let scenario = match obj.get("scenario").map(|v| v.as_str()) {
        Some(Some(s)) => {
            let parsed = Scenario::parse(s);
            if parsed.is_none() {
                w.err(
                    "scenario",
                    format!("unknown scenario {s:?}; expected one of {}", SCENARIOS.join(", ")),
                );
            }
            parsed
        }
        Some(None) => {
            w.err("scenario", "expected a string");
            None
        }
        None => {
            w.err("scenario", "missing");
            None
        }
    };

    let seed = match obj.get("seed") {
        Some(v) => v.as_u64().or_else(|| {
            w.err("seed", "expected a non-negative integer");
            None
        }),
        None => {
            w.err("seed", "missing; every run must be seeded");
            None
        }
    };

    let (rows, cols) = match obj.get("lattice") {
        None => (Some(4), Some(4)),
        Some(v) => match object(&mut w, v, "lattice") {
            Some(l) => {
                let rows = l.get("rows").map_or(Some(4), |v| w.count(v, "lattice.rows"));
                let cols = l.get("cols").map_or(Some(4), |v| w.count(v, "lattice.cols"));
                (rows, cols)
            }
            None => (None, None),
        },
    };

    let coupling = obj.get("coupling").map_or(Some(1.0), |v| {
        let j = w.number(v, "coupling")?;
        if j == 0.0 {
            w.err("coupling", "must be nonzero");
            return None;
        }
        Some(j)
    });

    let taus = match (obj.get("omega"), obj.get("tau")) {
        (Some(_), Some(_)) => {
            w.err("omega", "conflicts with tau; give exactly one of omega or tau");
            None
        }
        (Some(v), None) => w
            .number_list(v, "omega")
            .map(|ws| ws.iter().map(|o| 2.0 * std::f64::consts::PI / o).collect()),
        (None, Some(v)) => w.number_list(v, "tau"),
        (None, None) => Some(vec![2.0 * std::f64::consts::PI / 8.0]),
    };

    let states = match (obj.get("states"), obj.get("theta"), obj.get("phi")) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            w.err(
                "states",
                "conflicts with theta/phi; give either states or a theta/phi grid",
            );
            None
        }
        (Some(v), None, None) => states(&mut w, v),
        (None, None, None) => Some(vec![ProductStateSpec::x_plus()]),
        (None, theta, phi) => {
            let theta = theta.map_or(Some(vec![std::f64::consts::FRAC_PI_2]), |v| {
                angle_list(&mut w, v, "theta")
            });
            let phi = phi.map_or(Some(vec![0.0]), |v| angle_list(&mut w, v, "phi"));
            theta.zip(phi).map(|(ts, ps)| {
                ts.iter()
                    .flat_map(|&t| ps.iter().map(move |&p| ProductStateSpec::new(t, p)))
                    .collect()
            })
        }
    };

    let observable = match obj.get("observable") {
        None => Some(Observable::InplaneMagnetization),
        Some(v) => match serde_json::from_value::<Observable>(v.clone()) {
            Ok(o) => Some(o),
            Err(e) => {
                w.err(
                    "observable",
                    format!("expected \"inplane_magnetization\" or {{\"pauli\": \"X5 X6\"}}: {e}"),
                );
                None
            }
        },
    };

    let noise = obj
        .get("noise")
        .map_or(Some(NoiseModel::noiseless()), |v| noise_model(&mut w, v));
    let n_traj = obj
        .get("n_traj")
        .map_or(Some(prethermal::trajectories::DEFAULT_TRAJECTORIES), |v| {
            let n = w.count(v, "n_traj")?;
            if n == 0 {
                w.err("n_traj", "must be at least 1");
                return None;
            }
            Some(n)
        });
    let output = match obj.get("output") {
        None => Some(PathBuf::from("output")),
        Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
        Some(_) => {
            w.err("output", "expected a non-empty path string");
            None
        }
    };
    let steps = obj.get("steps").map_or(Some(10), |v| w.count(v, "steps"));
    let t_max = obj
        .get("t_max")
        .map_or(Some(prethermal::analysis::DEFAULT_T_CAP), |v| w.positive(v, "t_max"));
    let epsilon = obj
        .get("epsilon")
        .map_or(Some(prethermal::analysis::DEFAULT_EPSILON), |v| {
            w.positive(v, "epsilon")
        });
    let delta = obj.get("delta").map_or(Some(0.5), |v| w.positive(v, "delta"));
    let t_plateau = obj.get("t_plateau").map_or(Some(20.0), |v| w.positive(v, "t_plateau"));
    let magnus_orders = obj
        .get("magnus_orders")
        .map_or(Some(vec![0, 1, 2]), |v| match v.as_array() {
            Some(items) if !items.is_empty() => items
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let path = format!("magnus_orders[{i}]");
                    let k = w.count(x, &path)?;
                    if k > 2 {
                        w.err(path, "orders above 2 are not implemented");
                        return None;
                    }
                    Some(k)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .collect(),
            _ => {
                w.err("magnus_orders", "expected a non-empty list of integers");
                None
            }
        });
    let budget = obj.get("budget").map_or(Some(Vec::new()), |v| budget(&mut w, v));

    if let (Some(Scenario::SampleBudget), Some(b)) = (scenario, &budget) {
        if b.is_empty() {
            w.err("budget", "sample_budget needs at least one entry");
        }
    }
    if let (Some(obs), Some(Scenario::NoiseScaling | Scenario::MitigationRun)) = (&observable, scenario) {
        if !matches!(obs, Observable::Pauli(p) if p.is_unitary()) {
            w.err(
                "observable",
                "echo circuits need a unitary Pauli string such as {\"pauli\": \"X5 X6\"}",
            );
        }
    }

    if !w.errors.is_empty() {
        return Err(w.errors);
    }
    Ok(ExperimentConfig {
        scenario: scenario.expect("checked"),
        rows: rows.expect("checked"),
        cols: cols.expect("checked"),
        coupling: coupling.expect("checked"),
        taus: taus.expect("checked"),
        states: states.expect("checked"),
        observable: observable.expect("checked"),
        noise: noise.expect("checked"),
        n_traj: n_traj.expect("checked"),
        seed: seed.expect("checked"),
        output: output.expect("checked"),
        steps: steps.expect("checked"),
        t_max: t_max.expect("checked"),
        epsilon: epsilon.expect("checked"),
        delta: delta.expect("checked"),
        t_plateau: t_plateau.expect("checked"),
        magnus_orders: magnus_orders.expect("checked"),
        budget: budget.expect("checked"),
    })
}

fn angle_list(w: &mut Walker, v: &Value, path: &str) -> Option<Vec<f64>> {
    match v {
        Value::Array(items) if !items.is_empty() => items
            .iter()
            .enumerate()
            .map(|(i, x)| w.number(x, &format!("{path}[{i}]")))
            .collect::<Vec<_>>()
            .into_iter()
            .collect(),
        Value::Array(_) => {
            w.err(path, "must not be empty");
            None
        }
        other => w.number(other, path).map(|x| vec![x]),
    }
}
