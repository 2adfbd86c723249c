//! Monte Carlo wavefunction estimates of noisy echo-circuit survival
//! probabilities.
//!
//! Each trajectory owns a ChaCha8 stream selected by `(seed, index)`, so
//! results do not depend on scheduling or thread count. For Pauli channels
//! the error patterns of forward layer `k` and of the matching backward
//! layer are drawn back to back, which makes a trajectory's noise on the
//! first `K` layers independent of the total depth.
//!
//! With noise placed before each inverse layer, a Pauli channel's echo
//! amplitude equals `<chi|A|phi>`, where `phi` and `chi` are the forward
//! evolutions carrying the forward and backward error patterns. Both are
//! advanced together, so one sweep yields outcomes for every requested
//! step count. States stay implicit (equal to the cached noiseless
//! evolution) until their first error.

use std::borrow::Cow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PauliObservable;
use crate::noise::{apply_noise_layer, sample_pauli_layer, BackwardPlacement, NoiseModel, PauliError};
use crate::state::{PureState, C64};
use crate::trotter::TrotterSchedule;

/// Default number of trajectories per estimate.
pub const DEFAULT_TRAJECTORIES: usize = 2000;

/// Memory allowed for cached noiseless states.
const CACHE_BUDGET_BYTES: usize = 256 << 20;

/// RNG stream of trajectory `index`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<f64>>,
}

impl TrajectoryEnsemble {
    pub fn from_outcomes(seed: u64, outcomes: Vec<f64>) -> Self {
        let (mean, stderr) = mean_and_stderr(&outcomes);
        TrajectoryEnsemble {
            n_traj: outcomes.len(),
            seed,
            mean,
            stderr,
            outcomes: Some(outcomes),
        }
    }

    /// Drops per-trajectory outcomes, keeping the summary.
    pub fn summary(&self) -> Self {
        TrajectoryEnsemble {
            outcomes: None,
            ..self.clone()
        }
    }
}

/// Sample mean and `stddev / sqrt(n)` with the unbiased variance.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return (xs[0], 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Noiseless states after each layer, stored every `stride` layers.
struct NoiselessCache<'a> {
    schedule: &'a TrotterSchedule,
    stride: usize,
    checkpoints: Vec<Vec<C64>>,
}

impl<'a> NoiselessCache<'a> {
    fn new(schedule: &'a TrotterSchedule, psi: &PureState, max_layer: usize) -> Self {
        let bytes = psi.dim() * std::mem::size_of::<C64>();
        let slots = (CACHE_BUDGET_BYTES / bytes).max(2);
        let stride = max_layer.div_ceil(slots - 1).max(1);
        let mut checkpoints = vec![psi.amplitudes().to_vec()];
        let mut cur = psi.amplitudes().to_vec();
        let gamma = schedule.layers_per_step();
        for k in 0..max_layer {
            schedule.apply_layer(&mut cur, k % gamma);
            if (k + 1) % stride == 0 {
                checkpoints.push(cur.clone());
            }
        }
        NoiselessCache {
            schedule,
            stride,
            checkpoints,
        }
    }

    /// Noiseless state after `layer` layers.
    fn state(&self, layer: usize) -> Cow<'_, [C64]> {
        let base = layer / self.stride;
        let start = &self.checkpoints[base];
        if layer.is_multiple_of(self.stride) {
            return Cow::Borrowed(start);
        }
        let gamma = self.schedule.layers_per_step();
        let mut v = start.clone();
        for k in base * self.stride..layer {
            self.schedule.apply_layer(&mut v, k % gamma);
        }
        Cow::Owned(v)
    }
}

/// Forward evolution that materializes only at its first error.
struct LazyTrajectory(Option<Vec<C64>>);

impl LazyTrajectory {
    /// Advances through `layer` and then applies `error`.
    fn advance(&mut self, cache: &NoiselessCache, layer: usize, error: PauliError) {
        let gamma = cache.schedule.layers_per_step();
        if let Some(v) = &mut self.0 {
            cache.schedule.apply_layer(v, layer % gamma);
        }
        if !error.is_identity() {
            let v = self.0.get_or_insert_with(|| cache.state(layer + 1).into_owned());
            error.apply(v);
        }
    }

    fn view<'c>(&'c self, cache: &'c NoiselessCache, layer: usize) -> Cow<'c, [C64]> {
        match &self.0 {
            Some(v) => Cow::Borrowed(v),
            None => cache.state(layer),
        }
    }
}

fn check_inputs(
    psi: &PureState,
    schedule: &TrotterSchedule,
    obs: &PauliObservable,
    model: &NoiseModel,
    n_traj: usize,
) -> Result<()> {
    psi.ensure_qubits(schedule.num_qubits())?;
    obs.ensure_unitary()?;
    if let Some(s) = obs.max_site() {
        if s >= schedule.num_qubits() {
            return Err(Error::param("observable", format!("site {s} outside the lattice")));
        }
    }
    model.validate()?;
    if n_traj == 0 {
        return Err(Error::param("n_traj", "must be at least 1"));
    }
    Ok(())
}

/// Estimates `L_A` after `n_steps` Trotter steps forward and back
/// (`8 n_steps` noisy layers on a 2D lattice).
pub fn noisy_survival_probability(
    psi: &PureState,
    schedule: &TrotterSchedule,
    n_steps: usize,
    obs: &PauliObservable,
    model: &NoiseModel,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryEnsemble> {
    let mut series = noisy_survival_series(psi, schedule, &[n_steps], obs, model, n_traj, seed)?;
    Ok(series.remove(0))
}

/// Estimates `L_A` for each entry of `steps`. Trajectory `i` sees the same
/// noise realization on shared layers for every entry, so the returned
/// ensembles are correlated across `steps`; per-trajectory outcomes are
/// kept for that reason.
pub fn noisy_survival_series(
    psi: &PureState,
    schedule: &TrotterSchedule,
    steps: &[usize],
    obs: &PauliObservable,
    model: &NoiseModel,
    n_traj: usize,
    seed: u64,
) -> Result<Vec<TrajectoryEnsemble>> {
    check_inputs(psi, schedule, obs, model, n_traj)?;
    if steps.is_empty() {
        return Ok(Vec::new());
    }
    let per_traj: Vec<Vec<f64>> = if model.is_pauli_channel() && model.backward == BackwardPlacement::BeforeLayer {
        mirrored_outcomes(psi, schedule, steps, obs, model, n_traj, seed)
    } else {
        (0..n_traj)
            .into_par_iter()
            .map(|i| {
                steps
                    .iter()
                    .map(|&n| {
                        let mut rng = trajectory_rng(seed, i as u64);
                        sequential_echo(psi, schedule, n, obs, model, &mut rng)
                    })
                    .collect()
            })
            .collect()
    };
    Ok((0..steps.len())
        .map(|j| TrajectoryEnsemble::from_outcomes(seed, per_traj.iter().map(|o| o[j]).collect()))
        .collect())
}

fn mirrored_outcomes(
    psi: &PureState,
    schedule: &TrotterSchedule,
    steps: &[usize],
    obs: &PauliObservable,
    model: &NoiseModel,
    n_traj: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let n = schedule.num_qubits();
    let gamma = schedule.layers_per_step();
    let max_layer = steps.iter().max().copied().unwrap_or(0) * gamma;
    let cache = NoiselessCache::new(schedule, psi, max_layer);

    // Readout slots: (layer count, output index), in layer order.
    let mut readouts: Vec<(usize, usize)> = steps.iter().enumerate().map(|(j, &s)| (s * gamma, j)).collect();
    readouts.sort();

    let clean: Vec<f64> = steps
        .iter()
        .map(|&s| {
            let v = cache.state(s * gamma);
            obs.matrix_element(&v, &v).norm_sqr()
        })
        .collect();

    (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i as u64);
            let mut phi = LazyTrajectory(None);
            let mut chi = LazyTrajectory(None);
            let mut out = vec![0.0; steps.len()];
            let mut next = 0;
            for layer in 0..=max_layer {
                while next < readouts.len() && readouts[next].0 == layer {
                    let j = readouts[next].1;
                    out[j] = match (&phi.0, &chi.0) {
                        (None, None) => clean[j],
                        _ => {
                            let a = phi.view(&cache, layer);
                            let b = chi.view(&cache, layer);
                            obs.matrix_element(&b, &a).norm_sqr()
                        }
                    };
                    next += 1;
                }
                if layer == max_layer {
                    break;
                }
                let e_fwd = sample_pauli_layer(n, model, &mut rng);
                let e_bwd = sample_pauli_layer(n, model, &mut rng);
                phi.advance(&cache, layer, e_fwd);
                chi.advance(&cache, layer, e_bwd);
            }
            out
        })
        .collect()
}

/// Runs the echo circuit gate by gate on one trajectory.
fn sequential_echo(
    psi: &PureState,
    schedule: &TrotterSchedule,
    n_steps: usize,
    obs: &PauliObservable,
    model: &NoiseModel,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let n = schedule.num_qubits();
    let gamma = schedule.layers_per_step();
    let layers = n_steps * gamma;
    let mut v = psi.amplitudes().to_vec();

    if model.is_pauli_channel() {
        let mut fwd = Vec::with_capacity(layers);
        let mut bwd = Vec::with_capacity(layers);
        for _ in 0..layers {
            fwd.push(sample_pauli_layer(n, model, rng));
            bwd.push(sample_pauli_layer(n, model, rng));
        }
        for (k, e) in fwd.iter().enumerate() {
            schedule.apply_layer(&mut v, k % gamma);
            e.apply(&mut v);
        }
        obs.apply_in_place(&mut v);
        for k in (0..layers).rev() {
            match model.backward {
                BackwardPlacement::BeforeLayer => {
                    bwd[k].apply(&mut v);
                    schedule.apply_layer_inverse(&mut v, k % gamma);
                }
                BackwardPlacement::AfterLayer => {
                    schedule.apply_layer_inverse(&mut v, k % gamma);
                    bwd[k].apply(&mut v);
                }
            }
        }
    } else {
        for k in 0..layers {
            schedule.apply_layer(&mut v, k % gamma);
            apply_noise_layer(&mut v, n, model, rng);
        }
        obs.apply_in_place(&mut v);
        for k in (0..layers).rev() {
            match model.backward {
                BackwardPlacement::BeforeLayer => {
                    apply_noise_layer(&mut v, n, model, rng);
                    schedule.apply_layer_inverse(&mut v, k % gamma);
                }
                BackwardPlacement::AfterLayer => {
                    schedule.apply_layer_inverse(&mut v, k % gamma);
                    apply_noise_layer(&mut v, n, model, rng);
                }
            }
        }
    }
    let overlap: C64 = psi.amplitudes().iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
    overlap.norm_sqr()
}

/// One noisy forward trajectory: each layer followed by a noise layer.
pub fn noisy_forward_state(
    psi: &PureState,
    schedule: &TrotterSchedule,
    n_steps: usize,
    model: &NoiseModel,
    rng: &mut ChaCha8Rng,
) -> Result<PureState> {
    psi.ensure_qubits(schedule.num_qubits())?;
    let n = schedule.num_qubits();
    let gamma = schedule.layers_per_step();
    let mut out = psi.clone();
    for k in 0..n_steps * gamma {
        schedule.apply_layer(out.amplitudes_mut(), k % gamma);
        apply_noise_layer(out.amplitudes_mut(), n, model, rng);
    }
    Ok(out)
}

/// `n_traj` independent noisy forward trajectories, in stream order.
pub fn noisy_forward_states(
    psi: &PureState,
    schedule: &TrotterSchedule,
    n_steps: usize,
    model: &NoiseModel,
    n_traj: usize,
    seed: u64,
) -> Result<Vec<PureState>> {
    model.validate()?;
    (0..n_traj)
        .into_par_iter()
        .map(|i| noisy_forward_state(psi, schedule, n_steps, model, &mut trajectory_rng(seed, i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Bond, Lattice};
    use crate::model::{Pauli, ProductStateSpec};
    use crate::noise::NoiseKind;
    use crate::trotter::survival_probability;

    fn setup(rows: usize, cols: usize) -> (PureState, TrotterSchedule, PauliObservable) {
        let lat = Lattice::new(rows, cols).unwrap();
        let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0).unwrap();
        let psi = ProductStateSpec::x_plus().state(&lat);
        let obs = PauliObservable::two_site(Pauli::X, Bond::new(0, 1));
        (psi, sched, obs)
    }

    #[test]
    fn noiseless_matches_echo_circuit() {
        let (psi, sched, obs) = setup(2, 3);
        let model = NoiseModel::noiseless();
        for n in [0, 1, 4] {
            let ens = noisy_survival_probability(&psi, &sched, n, &obs, &model, 20, 3).unwrap();
            let exact = survival_probability(&psi, &sched, n, &obs).unwrap();
            assert!((ens.mean - exact).abs() < 1e-10);
            assert_eq!(ens.stderr, 0.0);
        }
    }

    #[test]
    fn mirrored_and_sequential_paths_agree_per_trajectory() {
        let (psi, sched, obs) = setup(2, 3);
        let model = NoiseModel::depolarizing(0.05).unwrap();
        let steps = [1, 3, 5];
        let fast = noisy_survival_series(&psi, &sched, &steps, &obs, &model, 40, 17).unwrap();
        for (j, &n) in steps.iter().enumerate() {
            let outcomes = fast[j].outcomes.as_ref().unwrap();
            for (i, o) in outcomes.iter().enumerate() {
                let mut rng = trajectory_rng(17, i as u64);
                let slow = sequential_echo(&psi, &sched, n, &obs, &model, &mut rng);
                assert!((o - slow).abs() < 1e-12, "traj {i} step {n}: {o} vs {slow}");
            }
        }
    }

    #[test]
    fn series_entries_match_single_runs() {
        let (psi, sched, obs) = setup(2, 2);
        let model = NoiseModel::new(NoiseKind::PhaseDamping, 0.02).unwrap();
        let series = noisy_survival_series(&psi, &sched, &[2, 6], &obs, &model, 50, 5).unwrap();
        let single = noisy_survival_probability(&psi, &sched, 6, &obs, &model, 50, 5).unwrap();
        assert_eq!(series[1].outcomes, single.outcomes);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let (psi, sched, obs) = setup(2, 3);
        let model = NoiseModel::depolarizing(0.01).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| noisy_survival_probability(&psi, &sched, 3, &obs, &model, 64, 99).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn identity_echo_with_amplitude_damping_stays_in_range() {
        let (psi, sched, _) = setup(2, 2);
        let model = NoiseModel::new(NoiseKind::AmplitudeDamping, 0.02).unwrap();
        let ens = noisy_survival_probability(&psi, &sched, 3, &PauliObservable::identity(), &model, 30, 1).unwrap();
        assert!(ens.outcomes.unwrap().iter().all(|x| (0.0..=1.0 + 1e-12).contains(x)));
        assert!(ens.mean < 1.0);
    }

    #[test]
    fn small_cache_recomputes_states() {
        let (psi, sched, _) = setup(2, 2);
        let mut cache = NoiselessCache::new(&sched, &psi, 12);
        let direct: Vec<_> = (0..=12).map(|k| cache.state(k).into_owned()).collect();
        cache = NoiselessCache {
            schedule: &sched,
            stride: 5,
            checkpoints: (0..=12).step_by(5).map(|k| direct[k].clone()).collect(),
        };
        for (k, d) in direct.iter().enumerate() {
            let v = cache.state(k);
            let diff = v.iter().zip(d).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-14, "layer {k}");
        }
    }

    #[test]
    fn ensemble_json_elides_outcomes() {
        let ens = TrajectoryEnsemble::from_outcomes(4, vec![1.0, 0.0, 1.0, 1.0]);
        assert!((ens.mean - 0.75).abs() < 1e-15);
        assert!((ens.stderr - 0.25).abs() < 1e-15);
        let text = serde_json::to_string(&ens.summary()).unwrap();
        assert!(!text.contains("outcomes"));
        let back: TrajectoryEnsemble = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ens.summary());
    }

    #[test]
    fn rejects_bad_inputs() {
        let (psi, sched, obs) = setup(2, 2);
        let model = NoiseModel::depolarizing(0.01).unwrap();
        assert!(noisy_survival_probability(&psi, &sched, 1, &obs, &model, 0, 1).is_err());
        let far = PauliObservable::new(&[(7, Pauli::Z)], 1.0).unwrap();
        assert!(noisy_survival_probability(&psi, &sched, 1, &far, &model, 1, 1).is_err());
    }
}
