//! Cross-checks of the fast simulation paths against dense and
//! density-matrix references.

use nalgebra::DMatrix;
use prethermal::density::{exact_bound_inputs, exact_noisy_forward, exact_noisy_survival, DensityMatrix};
use prethermal::ed::{full_space_eigenvalues, full_spectrum, EdLimits};
use prethermal::magnus::group_operator;
use prethermal::trajectories::noisy_forward_states;
use prethermal::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense_group(h: &SpinHamiltonian, g: usize) -> DMatrix<C64> {
    let basis: Vec<usize> = (0..1usize << h.num_qubits()).collect();
    group_operator(h, g, &basis).to_dense()
}

fn expm(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -t * e)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

fn random_state(n: usize, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let mut psi = PureState::from_amplitudes(amps).unwrap();
    psi.normalize();
    psi
}

fn apply_dense(m: &DMatrix<C64>, psi: &PureState) -> PureState {
    let v = m * nalgebra::DVector::from_column_slice(psi.amplitudes());
    PureState::from_amplitudes(v.iter().copied().collect()).unwrap()
}

#[test]
fn trotter_step_is_the_product_of_group_exponentials() {
    for (rows, cols) in [(2, 2), (2, 3), (1, 4)] {
        let lat = Lattice::new(rows, cols).unwrap();
        let h = SpinHamiltonian::xy(&lat, 0.7).unwrap();
        let sched = TrotterSchedule::new(&lat, 0.7, 0.4).unwrap();
        let dim = 1 << lat.num_sites();
        let mut u = DMatrix::<C64>::identity(dim, dim);
        for g in 0..sched.layers_per_step() {
            u = expm(&dense_group(&h, g), sched.tau()) * u;
        }
        let psi = random_state(lat.num_sites(), 3);
        let fast = sched.evolve(&psi, 3).unwrap();
        let slow = apply_dense(&(&u * &u * &u), &psi);
        assert!(fast.max_abs_diff(&slow) < 1e-12, "{rows}x{cols}");
    }
}

#[test]
fn trotterized_evolution_converges_to_the_exact_propagator() {
    let lat = Lattice::new(2, 2).unwrap();
    let h = SpinHamiltonian::xy(&lat, 1.0).unwrap();
    let dense: DMatrix<C64> = ed::dense_hamiltonian(&h).map(|x| C64::new(x, 0.0));
    let psi = ProductStateSpec::new(1.1, 0.4).state(&lat);
    let t = 2.0;
    let exact = apply_dense(&expm(&dense, t), &psi);
    let errors: Vec<f64> = [20, 40, 80]
        .iter()
        .map(|&steps| {
            let sched = TrotterSchedule::new(&lat, 1.0, t / steps as f64).unwrap();
            (1.0 - sched.evolve(&psi, steps).unwrap().fidelity(&exact)).sqrt()
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] < 0.6 * w[0], "{errors:?}");
    }
    assert!(errors[2] < 0.05);
}

#[test]
fn echo_equals_squared_expectation() {
    let lat = Lattice::new(2, 3).unwrap();
    let sched = TrotterSchedule::from_omega(&lat, 1.0, 6.0).unwrap();
    for (seed, obs) in [(1, "X2 X3"), (2, "Z0"), (3, "-Y1 Z4"), (4, "X0 Y1 Z2 X5")] {
        let obs: PauliObservable = obs.parse().unwrap();
        let psi = random_state(6, seed);
        for n in [0, 1, 5] {
            let evolved = sched.evolve(&psi, n).unwrap();
            let direct = obs.expectation(&evolved).powi(2);
            let echo = survival_probability(&psi, &sched, n, &obs).unwrap();
            assert!((echo - direct).abs() < 1e-10);
        }
    }
}

#[test]
fn sector_spectra_reassemble_the_full_spectrum() {
    for (rows, cols) in [(2, 3), (2, 5), (3, 3)] {
        let lat = Lattice::new(rows, cols).unwrap();
        let h = SpinHamiltonian::xy(&lat, 1.3).unwrap();
        let mut sectors: Vec<f64> = full_spectrum(&h, &EdLimits::default())
            .unwrap()
            .iter()
            .flat_map(|s| s.eigenvalues.clone())
            .collect();
        sectors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let full = full_space_eigenvalues(&h).unwrap();
        assert_eq!(sectors.len(), full.len());
        for (a, b) in sectors.iter().zip(&full) {
            assert!((a - b).abs() < 1e-8, "{rows}x{cols}");
        }
    }
}

#[test]
fn trajectory_average_reproduces_kraus_evolution() {
    let lat = Lattice::new(2, 3).unwrap();
    let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0).unwrap();
    let psi = ProductStateSpec::new(1.2, 0.5).state(&lat);
    let n_traj = 1000;
    for kind in [
        NoiseKind::Depolarizing,
        NoiseKind::PhaseDamping,
        NoiseKind::AmplitudeDamping,
    ] {
        let model = NoiseModel::new(kind, 0.03).unwrap();
        let exact = exact_noisy_forward(&psi, &sched, 3, &model).unwrap();
        let states = noisy_forward_states(&psi, &sched, 3, &model, n_traj, 7).unwrap();
        let sampled = DensityMatrix::mixture(&states).unwrap();
        let d = sampled.trace_distance(&exact);
        assert!(d < 5.0 / (n_traj as f64).sqrt(), "{kind:?}: trace distance {d}");
        assert!((exact.trace().re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn noisy_echo_matches_density_matrix() {
    let lat = Lattice::new(2, 2).unwrap();
    let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0).unwrap();
    let psi = ProductStateSpec::x_plus().state(&lat);
    let obs: PauliObservable = "X0 X1".parse().unwrap();
    for kind in [
        NoiseKind::Depolarizing,
        NoiseKind::PhaseDamping,
        NoiseKind::AmplitudeDamping,
    ] {
        for placement in [BackwardPlacement::BeforeLayer, BackwardPlacement::AfterLayer] {
            let model = NoiseModel::new(kind, 0.02).unwrap().with_backward(placement);
            let exact = exact_noisy_survival(&psi, &sched, 4, &obs, &model).unwrap();
            let est = noisy_survival_probability(&psi, &sched, 4, &obs, &model, 4000, 5).unwrap();
            assert!(
                (est.mean - exact).abs() < 3.0 * est.stderr + 1e-12,
                "{kind:?} {placement:?}: {} ± {} vs {exact}",
                est.mean,
                est.stderr
            );
        }
    }
}

#[test]
fn rescaling_bound_holds_for_exact_channels() {
    let configs = [
        (2, 2, 0.01, 2, "X0 X1"),
        (2, 2, 0.05, 3, "Z0"),
        (2, 3, 0.01, 2, "X2 X3"),
        (2, 3, 0.03, 4, "Y1 Y4"),
    ];
    for (rows, cols, p, n, obs) in configs {
        let lat = Lattice::new(rows, cols).unwrap();
        let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0).unwrap();
        let obs: PauliObservable = obs.parse().unwrap();
        for kind in [NoiseKind::Depolarizing, NoiseKind::PhaseDamping] {
            let model = NoiseModel::new(kind, p).unwrap();
            for psi in [ProductStateSpec::x_plus().state(&lat), random_state(lat.num_sites(), 9)] {
                let b = exact_bound_inputs(&psi, &sched, n, &obs, &model).unwrap();
                bound_check(b.q, b.r, b.l_noisy, b.l_true).unwrap();
            }
        }
    }
}

#[test]
fn no_error_weight_of_the_exact_channel() {
    // 2x2 at p = 1% and 16 echo layers: q = (1-p)^{N D_forward}
    let lat = Lattice::new(2, 2).unwrap();
    let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0).unwrap();
    let model = NoiseModel::depolarizing(0.01).unwrap();
    let psi = ProductStateSpec::x_plus().state(&lat);
    let obs = PauliObservable::identity();
    let b = exact_bound_inputs(&psi, &sched, 2, &obs, &model).unwrap();
    assert!((b.q - 0.99f64.powi(4 * 8)).abs() < 1e-12);
    assert!(b.r > 0.0 && b.r <= 1.0);
    bound_check(b.q, b.r, b.l_noisy, b.l_true).unwrap();
}
