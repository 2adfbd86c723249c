//! End-to-end acceptance runs. Each check prints one PASS or FAIL line and
//! the process exits non-zero when any check fails. Pass check numbers as
//! arguments to run a subset, e.g. `cargo test --test acceptance -- 6 7`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use prethermal::analysis::{linear_fit, steps_to_cap};
use prethermal::density::{exact_bound_inputs, exact_noisy_forward, DensityMatrix};
use prethermal::ed::{eigenstate_table, full_space_eigenvalues, microcanonical_from_table};
use prethermal::trajectories::noisy_forward_states;
use prethermal::*;
use prethermal_validation::quadrature_gaps;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

type CheckFn<'a> = dyn Fn() -> Result<Outcome> + 'a;

const P: f64 = 0.003;
const EPSILON: f64 = 0.05;
const T_CAP: f64 = 1e3;

fn inplane() -> Observable {
    Observable::InplaneMagnetization
}

/// Product states with in-plane spins at relative angle `k pi / 7`, which
/// sweep the energy from the bottom to the top of the product-state range.
fn energy_sweep() -> Vec<ProductStateSpec> {
    (0..8)
        .map(|k| ProductStateSpec::new(PI / 2.0, k as f64 * PI / 7.0))
        .collect()
}

fn plateau_survives_fast_driving() -> Result<Outcome> {
    let lat = Lattice::new(4, 4)?;
    let psi = ProductStateSpec::x_plus().state(&lat);
    let infinite_t = 2.0 / lat.num_sites() as f64;
    let mut pass = true;
    let mut parts = Vec::new();
    for omega in [9.0, 10.0] {
        let sched = TrotterSchedule::from_omega(&lat, 1.0, omega)?;
        let series = floquet_time_average(&psi, &inplane(), &sched, steps_to_cap(sched.tau(), T_CAP))?;
        let rep = detect_plateau(&series, EPSILON, T_CAP)?;
        pass &= rep.found && rep.truncated_at_cap;
        parts.push(format!(
            "w={omega}: plateau [{:.1}, {:.1}] value {:.3} truncated={}",
            rep.t1, rep.t2, rep.value, rep.truncated_at_cap
        ));
    }
    for omega in [2.0, 3.0, 4.0] {
        let sched = TrotterSchedule::from_omega(&lat, 1.0, omega)?;
        let series = floquet_time_average(&psi, &inplane(), &sched, steps_to_cap(sched.tau(), T_CAP))?;
        let avg = series.running_at(T_CAP).unwrap_or(f64::NAN);
        // at omega = 2J every bond gate is a full iSWAP, a Clifford circuit
        // that cannot thermalize, so it is reported but not graded
        let graded = omega != 2.0;
        if graded {
            pass &= (avg - infinite_t).abs() <= 0.02;
        }
        parts.push(format!(
            "w={omega}: running average {avg:.4} at Jt=1000{}",
            if graded { "" } else { " (iSWAP point, not graded)" }
        ));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn plateau_matches_ensembles() -> Result<Outcome> {
    let lat = Lattice::new(4, 3)?;
    let h = SpinHamiltonian::xy(&lat, 1.0)?;
    let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0)?;
    let spectra = magnus_spectra(&h, sched.tau(), 1, &EdLimits::default())?;
    let sector = diagonalize_sector(&h, 0)?;
    let (energies, values) = eigenstate_table(&[sector], &inplane());
    let steps = steps_to_cap(sched.tau(), 20.0);
    let (mut magnus_ok, mut micro_ok) = (0, 0);
    let mut parts = Vec::new();
    let states = energy_sweep();
    for spec in &states {
        let psi = spec.state(&lat);
        let e = spec.energy(&h);
        let plateau = *floquet_time_average(&psi, &inplane(), &sched, steps)?
            .running
            .last()
            .unwrap();
        let diag = diagonal_ensemble(&psi, &inplane(), &spectra, 1e-8)?.value;
        let micro = microcanonical_from_table(&energies, &values, e, 0.5, EnsembleKind::Broadened)?;
        magnus_ok += usize::from((plateau - diag).abs() <= 0.05);
        micro_ok += usize::from((plateau - micro).abs() <= 0.1);
        parts.push(format!("E={e:.2}: {plateau:.3}/{diag:.3}/{micro:.3}"));
    }
    let n = states.len();
    Ok(Outcome::new(
        magnus_ok == n && micro_ok == n,
        format!(
            "plateau/magnus-1 diagonal/microcanonical {}; magnus within 0.05 for {magnus_ok}/{n}, \
             microcanonical within 0.1 for {micro_ok}/{n}",
            parts.join(", ")
        ),
    ))
}

fn survival_decays_with_circuit_volume() -> Result<Outcome> {
    let predicted_knee = 2f64.ln() / (1.0 / (1.0 - P)).ln();
    let mut pass = true;
    let mut parts = Vec::new();
    for (rows, cols, seed) in [(3, 3, 31), (4, 4, 41)] {
        let lat = Lattice::new(rows, cols)?;
        let n = lat.num_sites() as f64;
        let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0)?;
        let psi = ProductStateSpec::x_plus().state(&lat);
        let gamma = 2 * sched.layers_per_step();
        let steps: Vec<usize> = (0..=(2.0 * predicted_knee) as usize / gamma + 1).collect();
        let model = NoiseModel::depolarizing(P)?;
        let echoes = noisy_survival_series(&psi, &sched, &steps, &PauliObservable::identity(), &model, 2000, seed)?;
        let points: Vec<(f64, f64)> = steps
            .iter()
            .zip(&echoes)
            .map(|(&s, e)| ((s * gamma) as f64, e.mean))
            .collect();

        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|(d, _)| *d <= 80.0)
            .map(|&(d, l)| (n * d, l.ln()))
            .unzip();
        let ratio = linear_fit(&xs, &ys).0 / (1.0 - P).ln();

        // first depth from which the excess over (1-p)^{ND} stays above 2
        let excess: Vec<bool> = points.iter().map(|&(d, l)| l > 2.0 * (1.0 - P).powf(n * d)).collect();
        let knee = (0..points.len())
            .find(|&i| excess[i..].iter().all(|&x| x))
            .map(|i| points[i].0);
        let knee_ok = knee.is_some_and(|d| d >= predicted_knee / 2.0 && d <= 2.0 * predicted_knee);
        pass &= (ratio - 1.0).abs() <= 0.05 && knee_ok;
        parts.push(format!(
            "{rows}x{cols}: slope/log(1-p) = {ratio:.3}, knee at D = {} (window [{:.0}, {:.0}])",
            knee.map_or("none".into(), |d| format!("{d:.0}")),
            predicted_knee / 2.0,
            2.0 * predicted_knee
        ));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

/// Noisy echoes of `X5 X6` and the identity for the energy sweep on 4x4,
/// with the noiseless reference, for 0..=10 Trotter steps at omega = 8J.
struct MitigationData {
    steps: Vec<usize>,
    runs: Vec<(Vec<TrajectoryEnsemble>, Vec<TrajectoryEnsemble>, Vec<f64>)>,
}

fn mitigation_data() -> Result<MitigationData> {
    let lat = Lattice::new(4, 4)?;
    let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0)?;
    let obs: PauliObservable = "X5 X6".parse()?;
    let model = NoiseModel::depolarizing(P)?;
    let steps: Vec<usize> = (0..=10).collect();
    let mut runs = Vec::new();
    for (k, spec) in energy_sweep().iter().enumerate() {
        let psi = spec.state(&lat);
        let la = noisy_survival_series(&psi, &sched, &steps, &obs, &model, 2000, 100 + k as u64)?;
        let li = noisy_survival_series(
            &psi,
            &sched,
            &steps,
            &PauliObservable::identity(),
            &model,
            2000,
            200 + k as u64,
        )?;
        let exact = steps
            .iter()
            .map(|&n| survival_probability(&psi, &sched, n, &obs))
            .collect::<Result<Vec<f64>>>()?;
        runs.push((la, li, exact));
    }
    Ok(MitigationData { steps, runs })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn rescaling_is_accurate(data: &MitigationData) -> Result<Outcome> {
    let (la, li, exact) = &data.runs[0];
    let last = data.steps.len() - 1;
    let r = rescale(Estimate::from(&la[last]), Estimate::from(&li[last]))?;
    let rel = (r.mean - exact[last]).abs() / exact[last];

    // bias over D = 40..80
    let late = data.steps.iter().position(|&n| n >= 5).unwrap();
    let avg = time_averaged_rescale(&la[late..], &li[late..])?;
    let s = avg.mean - mean(&exact[late..]);
    let z = s / avg.stderr;

    // context only: the same comparison for the average over D = 0..80
    let whole = time_averaged_rescale(la, li)?;
    let whole_rel = (whole.mean - mean(exact)).abs() / mean(exact);
    Ok(Outcome::new(
        rel <= 0.15 && z > 1.645,
        format!(
            "D=80: rescaled {:.4} ± {:.4} vs noiseless {:.4} (relative error {:.3}); \
             mean s over D=40..80 = {s:.4} ± {:.4} (z = {z:.2}, need > 1.645); \
             average over D=0..80 has relative error {whole_rel:.3}",
            r.mean, r.stderr, exact[last], rel, avg.stderr
        ),
    ))
}

fn pevp_reference_inside_error_bars(data: &MitigationData) -> Result<Outcome> {
    let mut inside = 0;
    let mut parts = Vec::new();
    for (la, li, exact) in &data.runs {
        let r = time_averaged_rescale(la, li)?;
        let reference = mean(exact);
        inside += usize::from((r.mean - reference).abs() <= r.stderr);
        parts.push(format!("{:.4}±{:.4} vs {reference:.4}", r.mean, r.stderr));
    }
    Ok(Outcome::new(
        inside >= 7,
        format!(
            "{inside}/{} references inside 1 sigma: {}",
            data.runs.len(),
            parts.join(", ")
        ),
    ))
}

fn closed_form_constants() -> Result<Outcome> {
    let depth = max_depth(None, P, 1.0)?;
    let b3 = sample_budget(50, 80, 0.003, 0.0, 1.0)?.shots;
    let b2 = sample_budget(50, 80, 0.002, 0.0, 1.0)?.shots;
    let pass = (depth.floor() - 230.0).abs() <= 1.0 && (b3 / 3e10 - 1.0).abs() <= 0.1 && (b2 / 9e6 - 1.0).abs() <= 0.1;
    Ok(Outcome::new(
        pass,
        format!("max depth {depth:.1}, budget {b3:.3e} at p=0.3%, {b2:.3e} at p=0.2%"),
    ))
}

fn oracles_agree() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;

    let lat = Lattice::new(2, 3)?;
    let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0)?;
    let psi = ProductStateSpec::new(1.2, 0.5).state(&lat);
    let n_traj = 1000;
    let mut worst: f64 = 0.0;
    for kind in [
        NoiseKind::Depolarizing,
        NoiseKind::PhaseDamping,
        NoiseKind::AmplitudeDamping,
    ] {
        let model = NoiseModel::new(kind, 0.03)?;
        let exact = exact_noisy_forward(&psi, &sched, 3, &model)?;
        let sampled = DensityMatrix::mixture(&noisy_forward_states(&psi, &sched, 3, &model, n_traj, 7)?)?;
        worst = worst.max(sampled.trace_distance(&exact));
    }
    pass &= worst < 5.0 / (n_traj as f64).sqrt();
    parts.push(format!("trace distance {worst:.4}"));

    let obs: PauliObservable = "X2 X3".parse()?;
    let mut echo_gap: f64 = 0.0;
    for n in [0, 1, 4, 9] {
        let direct = obs.expectation(&sched.evolve(&psi, n)?).powi(2);
        echo_gap = echo_gap.max((survival_probability(&psi, &sched, n, &obs)? - direct).abs());
    }
    pass &= echo_gap < 1e-10;
    parts.push(format!("echo gap {echo_gap:.1e}"));

    let mut spec_gap: f64 = 0.0;
    for (rows, cols) in [(2, 3), (2, 5)] {
        let h = SpinHamiltonian::xy(&Lattice::new(rows, cols)?, 1.0)?;
        let mut sectors: Vec<f64> = full_spectrum(&h, &EdLimits::default())?
            .iter()
            .flat_map(|s| s.eigenvalues.clone())
            .collect();
        sectors.sort_by(f64::total_cmp);
        let full = full_space_eigenvalues(&h)?;
        pass &= sectors.len() == full.len();
        spec_gap = sectors
            .iter()
            .zip(&full)
            .map(|(a, b)| (a - b).abs())
            .fold(spec_gap, f64::max);
    }
    pass &= spec_gap < 1e-8;
    parts.push(format!("spectrum gap {spec_gap:.1e}"));

    let mut bounds = 0;
    for kind in [NoiseKind::Depolarizing, NoiseKind::PhaseDamping] {
        for (p, n) in [(0.01, 2), (0.03, 4)] {
            let b = exact_bound_inputs(&psi, &sched, n, &obs, &NoiseModel::new(kind, p)?)?;
            pass &= bound_check(b.q, b.r, b.l_noisy, b.l_true).is_ok();
            bounds += 1;
        }
    }
    parts.push(format!("{bounds} exact runs checked against the rescaling bound"));
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn first_order_magnus_is_closer() -> Result<Outcome> {
    let lat = Lattice::new(4, 3)?;
    let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0)?;
    let psi = ProductStateSpec::x_plus().state(&lat);
    let dev = |order| {
        floquet_vs_magnus_deviation(&psi, &inplane(), &sched, order, 100.0, &EdLimits::default())
            .map(|d| d.max_deviation())
    };
    let (d0, d1) = (dev(0)?, dev(1)?);
    let mut gap: f64 = 0.0;
    for (seed, segments) in [(1, 2), (2, 4), (3, 4)] {
        let (a, b) = quadrature_gaps(segments, seed)?;
        gap = gap.max(a).max(b);
    }
    Ok(Outcome::new(
        d1 < d0 && gap < 1e-8,
        format!("max deviation order 0: {d0:.4}, order 1: {d1:.4}; quadrature gap {gap:.1e}"),
    ))
}

fn amplitude_damping_halves_the_rate() -> Result<Outcome> {
    let lat = Lattice::new(4, 4)?;
    let n = lat.num_sites() as f64;
    let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0)?;
    let model = NoiseModel::new(NoiseKind::AmplitudeDamping, P)?;
    let steps = [2, 4, 6, 8, 10];
    let gamma = 2 * sched.layers_per_step();
    let target = (1.0 - P / 2.0).ln();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, phi) in [0.0, PI / 2.0].into_iter().enumerate() {
        let psi = ProductStateSpec::new(PI / 2.0, phi).state(&lat);
        let echoes = noisy_survival_series(
            &psi,
            &sched,
            &steps,
            &PauliObservable::identity(),
            &model,
            2000,
            300 + k as u64,
        )?;
        let (xs, ys): (Vec<f64>, Vec<f64>) = steps
            .iter()
            .zip(&echoes)
            .map(|(&s, e)| (n * (s * gamma) as f64, e.mean.ln()))
            .unzip();
        let ratio = linear_fit(&xs, &ys).0 / target;
        pass &= (ratio - 1.0).abs() <= 0.1;
        parts.push(format!("phi={phi:.2}: per-layer exponent / log(1-p/2) = {ratio:.3}"));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();

    // criteria 4 and 5 share one set of trajectories
    let data: OnceLock<std::result::Result<MitigationData, String>> = OnceLock::new();
    let with_data = |f: fn(&MitigationData) -> Result<Outcome>| -> Result<Outcome> {
        match data.get_or_init(|| mitigation_data().map_err(|e| e.to_string())) {
            Ok(d) => f(d),
            Err(e) => Ok(Outcome::new(false, format!("error: {e}"))),
        }
    };

    let checks: Vec<(usize, &str, Box<CheckFn>)> = vec![
        (1, "prethermal plateau", Box::new(plateau_survives_fast_driving)),
        (2, "ensemble agreement", Box::new(plateau_matches_ensembles)),
        (3, "survival scaling", Box::new(survival_decays_with_circuit_volume)),
        (4, "mitigation accuracy", Box::new(|| with_data(rescaling_is_accurate))),
        (
            5,
            "full PEVP run",
            Box::new(|| with_data(pevp_reference_inside_error_bars)),
        ),
        (6, "closed-form constants", Box::new(closed_form_constants)),
        (7, "oracle equivalences", Box::new(oracles_agree)),
        (8, "magnus quality", Box::new(first_order_magnus_is_closer)),
        (9, "amplitude damping", Box::new(amplitude_damping_halves_the_rate)),
    ];

    let mut failures = 0;
    for (k, name, check) in &checks {
        if !selected.is_empty() && !selected.contains(k) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "{} criterion {k} ({name}): {detail} [{:.0}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }

    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
