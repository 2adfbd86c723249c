//! Scenario drivers. Each one writes CSV tables into the output directory
//! and returns their file names; `run_scenario` adds the metadata sidecar.

use std::fs;
use std::path::Path;

use prethermal::ed::{eigenstate_table, full_spectrum, microcanonical_from_table, EdLimits, DEGENERACY_TOLERANCE};
use prethermal::magnus::deviation_from_spectra;
use prethermal::mitigation::{time_averaged_rescale, Estimate, MitigationRecord};
use prethermal::trajectories::noisy_survival_series;
use prethermal::{
    analysis, diagonal_ensemble, diagonalize_sector, magnus_spectra, sample_budget, survival_probability, EnsembleKind,
    Lattice, Observable, PauliObservable, SpinHamiltonian, TrotterSchedule,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Scenario};
use crate::CliError;

struct Table {
    name: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&'static str]) -> Self {
        Table {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path) -> Result<String, CliError> {
        let file = format!("{}.csv", self.name);
        let mut w = csv::Writer::from_path(dir.join(&file))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(file)
    }
}

fn f(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, f)
}

/// Independent stream seed for sub-task `k` of a run.
fn sub_seed(seed: u64, k: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(k.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("eight bytes"))
}

#[derive(Serialize)]
struct Metadata<'a> {
    scenario: &'static str,
    version: &'static str,
    seed: u64,
    config_sha256: String,
    files: &'a [String],
    config: &'a ExperimentConfig,
}

/// Runs the configured scenario and returns the files written, the
/// metadata sidecar last.
pub fn run_scenario(config: &ExperimentConfig, raw_config: &str) -> Result<Vec<String>, CliError> {
    let dir = &config.output;
    fs::create_dir_all(dir)?;
    let tables = match config.scenario {
        Scenario::PrethermalScan => prethermal_scan(config)?,
        Scenario::EnsembleCompare => ensemble_compare(config)?,
        Scenario::NoiseScaling => noise_scaling(config)?,
        Scenario::MitigationRun => mitigation_run(config)?,
        Scenario::MagnusCompare => magnus_compare(config)?,
        Scenario::SampleBudget => budget_table(config)?,
    };
    let mut files = tables.iter().map(|t| t.write(dir)).collect::<Result<Vec<_>, _>>()?;
    let meta = Metadata {
        scenario: config.scenario.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config_sha256: format!("{:x}", Sha256::digest(raw_config.as_bytes())),
        files: &files,
        config,
    };
    let name = "metadata.json".to_string();
    fs::write(dir.join(&name), serde_json::to_string_pretty(&meta)? + "\n")?;
    files.push(name);
    Ok(files)
}

fn lattice(c: &ExperimentConfig) -> Result<Lattice, CliError> {
    Ok(Lattice::new(c.rows, c.cols)?)
}

fn schedules(c: &ExperimentConfig, lat: &Lattice) -> Result<Vec<TrotterSchedule>, CliError> {
    Ok(c.taus
        .iter()
        .map(|&tau| TrotterSchedule::new(lat, c.coupling, tau))
        .collect::<Result<_, _>>()?)
}

fn pauli(c: &ExperimentConfig) -> PauliObservable {
    match &c.observable {
        Observable::Pauli(p) => p.clone(),
        Observable::InplaneMagnetization => unreachable!("validated as a Pauli string"),
    }
}

fn prethermal_scan(c: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let lat = lattice(c)?;
    let mut series = Table::new(
        "series",
        &[
            "state",
            "omega[J]",
            "tau[1/J]",
            "t[1/J]",
            "instantaneous",
            "running_average",
        ],
    );
    let mut plateaus = Table::new(
        "plateaus",
        &[
            "state",
            "omega[J]",
            "tau[1/J]",
            "t1[1/J]",
            "t2[1/J]",
            "value",
            "epsilon",
            "found",
            "truncated",
        ],
    );
    for (i, spec) in c.states.iter().enumerate() {
        let psi = spec.state(&lat);
        for sched in schedules(c, &lat)? {
            let m = analysis::steps_to_cap(sched.tau(), c.t_max);
            let s = analysis::floquet_time_average(&psi, &c.observable, &sched, m)?;
            for k in 0..s.len() {
                series.push(vec![
                    i.to_string(),
                    f(sched.omega()),
                    f(sched.tau()),
                    f(s.time(k)),
                    f(s.instantaneous[k]),
                    f(s.running[k]),
                ]);
            }
            let p = analysis::detect_plateau(&s, c.epsilon, c.t_max)?;
            plateaus.push(vec![
                i.to_string(),
                f(sched.omega()),
                f(sched.tau()),
                f(p.t1),
                f(p.t2),
                f(p.value),
                f(p.epsilon),
                p.found.to_string(),
                p.truncated_at_cap.to_string(),
            ]);
        }
    }
    Ok(vec![series, plateaus])
}

fn ensemble_compare(c: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let lat = lattice(c)?;
    let h = SpinHamiltonian::xy(&lat, c.coupling)?;
    let sched = TrotterSchedule::new(&lat, c.coupling, c.taus[0])?;
    let limits = EdLimits::default();
    let spectra = full_spectrum(&h, &limits)?;
    let magnus = magnus_spectra(&h, sched.tau(), 1, &limits)?;
    // odd lattices have no m_z = 0 sector; use the one closest to it
    let central = diagonalize_sector(&h, (lat.num_sites() % 2) as i32)?;
    let (energies, values) = eigenstate_table(std::slice::from_ref(&central), &c.observable);
    let tol = DEGENERACY_TOLERANCE * c.coupling.abs();
    let m = analysis::steps_to_cap(sched.tau(), c.t_plateau);

    let mut table = Table::new(
        "ensembles",
        &[
            "state",
            "theta",
            "phi",
            "energy[J]",
            "plateau",
            "diagonal",
            "microcanonical",
            "magnus1_diagonal",
        ],
    );
    for (i, spec) in c.states.iter().enumerate() {
        let psi = spec.state(&lat);
        let energy = spec.energy(&h);
        let series = analysis::floquet_time_average(&psi, &c.observable, &sched, m)?;
        let micro = microcanonical_from_table(&energies, &values, energy, c.delta, EnsembleKind::Broadened)?;
        table.push(vec![
            i.to_string(),
            f(spec.theta),
            f(spec.phi),
            f(energy),
            f(*series.running.last().expect("nonempty series")),
            f(diagonal_ensemble(&psi, &c.observable, &spectra, tol)?.value),
            f(micro),
            f(diagonal_ensemble(&psi, &c.observable, &magnus, tol)?.value),
        ]);
    }
    Ok(vec![table])
}

fn noise_scaling(c: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let lat = lattice(c)?;
    let n = lat.num_sites();
    let sched = TrotterSchedule::new(&lat, c.coupling, c.taus[0])?;
    let steps: Vec<usize> = (0..=c.steps).collect();
    let gamma = sched.layers_per_step();
    let mut table = Table::new(
        "survival",
        &[
            "state",
            "t[1/J]",
            "D",
            "ND",
            "L_id",
            "L_id_err",
            "L_A",
            "L_A_err",
            "L_A_noiseless",
        ],
    );
    let obs = pauli(c);
    for (i, spec) in c.states.iter().enumerate() {
        let psi = spec.state(&lat);
        let k = 2 * i as u64;
        let id = noisy_survival_series(
            &psi,
            &sched,
            &steps,
            &PauliObservable::identity(),
            &c.noise,
            c.n_traj,
            sub_seed(c.seed, k),
        )?;
        let la = noisy_survival_series(&psi, &sched, &steps, &obs, &c.noise, c.n_traj, sub_seed(c.seed, k + 1))?;
        for (j, &s) in steps.iter().enumerate() {
            let depth = 2 * gamma * s;
            table.push(vec![
                i.to_string(),
                f(s as f64 * sched.tau()),
                depth.to_string(),
                (n * depth).to_string(),
                f(id[j].mean),
                f(id[j].stderr),
                f(la[j].mean),
                f(la[j].stderr),
                f(survival_probability(&psi, &sched, s, &obs)?),
            ]);
        }
    }
    Ok(vec![table])
}

fn mitigation_run(c: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let lat = lattice(c)?;
    let h = SpinHamiltonian::xy(&lat, c.coupling)?;
    let sched = TrotterSchedule::new(&lat, c.coupling, c.taus[0])?;
    let steps: Vec<usize> = (0..=c.steps).collect();
    let gamma = sched.layers_per_step();
    let obs = pauli(c);
    let mut records = Table::new(
        "mitigation",
        &[
            "state",
            "t[1/J]",
            "D",
            "L_id",
            "L_id_err",
            "L_A",
            "L_A_err",
            "rescaled",
            "rescaled_err",
            "s",
        ],
    );
    let mut averages = Table::new(
        "time_average",
        &[
            "state",
            "energy[J]",
            "t[1/J]",
            "noiseless",
            "mitigated",
            "mitigated_err",
            "reliable",
        ],
    );
    for (i, spec) in c.states.iter().enumerate() {
        let psi = spec.state(&lat);
        let k = 2 * i as u64;
        let la = noisy_survival_series(&psi, &sched, &steps, &obs, &c.noise, c.n_traj, sub_seed(c.seed, k))?;
        let id = noisy_survival_series(
            &psi,
            &sched,
            &steps,
            &PauliObservable::identity(),
            &c.noise,
            c.n_traj,
            sub_seed(c.seed, k + 1),
        )?;
        let reference: Vec<f64> = steps
            .iter()
            .map(|&s| survival_probability(&psi, &sched, s, &obs))
            .collect::<Result<_, _>>()?;
        for (j, &s) in steps.iter().enumerate() {
            let r = MitigationRecord::new(
                s as f64 * sched.tau(),
                2 * gamma * s,
                Estimate::from(&la[j]),
                Estimate::from(&id[j]),
                Some(reference[j]),
            )?;
            records.push(vec![
                i.to_string(),
                f(r.t),
                r.depth.to_string(),
                f(r.l_id.mean),
                f(r.l_id.stderr),
                f(r.l_a.mean),
                f(r.l_a.stderr),
                f(r.rescaled.mean),
                f(r.rescaled.stderr),
                opt(r.s),
            ]);
        }
        let avg = time_averaged_rescale(&la, &id)?;
        averages.push(vec![
            i.to_string(),
            f(spec.energy(&h)),
            f(c.steps as f64 * sched.tau()),
            f(reference.iter().sum::<f64>() / reference.len() as f64),
            f(avg.mean),
            f(avg.stderr),
            avg.reliable.to_string(),
        ]);
    }
    Ok(vec![records, averages])
}

fn magnus_compare(c: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let lat = lattice(c)?;
    let h = SpinHamiltonian::xy(&lat, c.coupling)?;
    let t_max = c.t_max.min(1e3 / c.coupling.abs());
    let mut table = Table::new(
        "magnus",
        &["state", "omega[J]", "order", "t[1/J]", "floquet", "magnus", "deviation"],
    );
    for sched in schedules(c, &lat)? {
        for &order in &c.magnus_orders {
            let spectra = magnus_spectra(&h, sched.tau(), order, &EdLimits::default())?;
            for (i, spec) in c.states.iter().enumerate() {
                let psi = spec.state(&lat);
                let d = deviation_from_spectra(&psi, &c.observable, &sched, order, t_max, &spectra)?;
                for k in 0..d.times.len() {
                    table.push(vec![
                        i.to_string(),
                        f(sched.omega()),
                        order.to_string(),
                        f(d.times[k]),
                        f(d.floquet[k]),
                        f(d.magnus[k]),
                        f(d.deviation[k]),
                    ]);
                }
            }
        }
    }
    Ok(vec![table])
}

fn budget_table(c: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let mut table = Table::new("budget", &["N", "D", "p", "p_m", "epsilon", "shots"]);
    for b in &c.budget {
        let r = sample_budget(b.n, b.depth, b.p, b.p_m, b.epsilon)?;
        table.push(vec![
            r.n.to_string(),
            r.depth.to_string(),
            f(r.p),
            f(r.p_m),
            f(r.epsilon),
            format!("{:e}", r.shots),
        ]);
    }
    Ok(vec![table])
}
