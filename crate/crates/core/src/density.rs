//! Exact density-matrix evolution for small systems, used as a reference
//! for the trajectory sampler and for the mitigation bound.
//!
//! `rho[i][j]` is stored at index `i | j << N`, so left multiplication acts
//! on bits `0..N` and right multiplication on bits `N..2N` with the
//! conjugated operator.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::model::{Pauli, PauliObservable};
use crate::noise::{BackwardPlacement, NoiseModel};
use crate::state::{PureState, C64};
use crate::trotter::{apply_bond_rotation, TrotterSchedule};

/// Largest system handled by the dense oracle.
pub const MAX_DENSITY_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn pure(state: &PureState) -> Result<Self> {
        let n = state.num_qubits();
        if n > MAX_DENSITY_QUBITS {
            return Err(Error::QubitCapExceeded {
                requested: n,
                cap: MAX_DENSITY_QUBITS,
            });
        }
        let psi = state.amplitudes();
        let dim = psi.len();
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            for i in 0..dim {
                data[i | j << n] = psi[i] * psi[j].conj();
            }
        }
        Ok(DensityMatrix { n, data })
    }

    /// Uniform mixture of pure states.
    pub fn mixture(states: &[PureState]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::param("states", "need at least one state"))?;
        let mut acc = DensityMatrix::pure(first)?;
        for s in &states[1..] {
            s.ensure_qubits(acc.n)?;
            let psi = s.amplitudes();
            let dim = psi.len();
            for j in 0..dim {
                for i in 0..dim {
                    acc.data[i | j << acc.n] += psi[i] * psi[j].conj();
                }
            }
        }
        let w = 1.0 / states.len() as f64;
        acc.data.iter_mut().for_each(|x| *x *= w);
        Ok(acc)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i | j << self.n]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    /// `<psi| rho |psi>`.
    pub fn overlap(&self, state: &PureState) -> f64 {
        let psi = state.amplitudes();
        let dim = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..dim {
            for i in 0..dim {
                acc += psi[i].conj() * self.get(i, j) * psi[j];
            }
        }
        acc.re
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &DensityMatrix, b: f64) -> DensityMatrix {
        DensityMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(x, y)| x * a + y * b).collect(),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<Complex<f64>> {
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |i, j| self.get(i, j))
    }

    /// `1/2 || self - other ||_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = self.combine(1.0, other, -1.0).to_matrix();
        let eig = diff.symmetric_eigenvalues();
        0.5 * eig.iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn apply_layer(&mut self, schedule: &TrotterSchedule, layer: usize, inverse: bool) {
        let (s, c) = (schedule.coupling() * schedule.tau() / 2.0).sin_cos();
        let s = if inverse { -s } else { s };
        for &bond in &schedule.layers()[layer] {
            apply_bond_rotation(&mut self.data, bond, c, s);
            let right = crate::lattice::Bond::new(bond.a + self.n, bond.b + self.n);
            apply_bond_rotation(&mut self.data, right, c, -s);
        }
    }

    /// `A rho A^dagger` for a Pauli string.
    pub fn apply_pauli(&mut self, obs: &PauliObservable) {
        obs.apply_in_place(&mut self.data);
        let ny = obs.support().iter().filter(|(_, p)| *p == Pauli::Y).count();
        let shifted: Vec<_> = obs.support().iter().map(|&(s, p)| (s + self.n, p)).collect();
        let sign = if ny % 2 == 0 { 1.0 } else { -1.0 };
        let conj = PauliObservable::new(&shifted, obs.prefactor() * sign).expect("shifted support stays distinct");
        conj.apply_in_place(&mut self.data);
    }

    /// Applies the single-qubit channel of `model` to every qubit.
    pub fn apply_channel(&mut self, model: &NoiseModel) {
        if model.is_noiseless() {
            return;
        }
        let kraus = model.kraus();
        for q in 0..self.n {
            self.apply_kraus(q, &kraus);
        }
    }

    fn apply_kraus(&mut self, q: usize, kraus: &[[[C64; 2]; 2]]) {
        let lo = 1usize << q;
        let hi = 1usize << (q + self.n);
        for base in 0..self.data.len() {
            if base & (lo | hi) != 0 {
                continue;
            }
            let idx = |a: usize, b: usize| base | (a * lo) | (b * hi);
            let m = [
                [self.data[idx(0, 0)], self.data[idx(0, 1)]],
                [self.data[idx(1, 0)], self.data[idx(1, 1)]],
            ];
            let mut out = [[C64::new(0.0, 0.0); 2]; 2];
            for k in kraus {
                for (a, row) in out.iter_mut().enumerate() {
                    for (b, o) in row.iter_mut().enumerate() {
                        for x in 0..2 {
                            for y in 0..2 {
                                *o += k[a][x] * m[x][y] * k[b][y].conj();
                            }
                        }
                    }
                }
            }
            for (a, row) in out.iter().enumerate() {
                for (b, &v) in row.iter().enumerate() {
                    self.data[idx(a, b)] = v;
                }
            }
        }
    }
}

/// State after `n_steps` noisy forward steps, noise following every layer.
pub fn exact_noisy_forward(
    psi: &PureState,
    schedule: &TrotterSchedule,
    n_steps: usize,
    model: &NoiseModel,
) -> Result<DensityMatrix> {
    psi.ensure_qubits(schedule.num_qubits())?;
    let mut rho = DensityMatrix::pure(psi)?;
    let gamma = schedule.layers_per_step();
    for k in 0..n_steps * gamma {
        rho.apply_layer(schedule, k % gamma, false);
        rho.apply_channel(model);
    }
    Ok(rho)
}

/// Exact survival probability of the noisy echo circuit.
pub fn exact_noisy_survival(
    psi: &PureState,
    schedule: &TrotterSchedule,
    n_steps: usize,
    obs: &PauliObservable,
    model: &NoiseModel,
) -> Result<f64> {
    obs.ensure_unitary()?;
    let mut rho = exact_noisy_forward(psi, schedule, n_steps, model)?;
    rho.apply_pauli(obs);
    let gamma = schedule.layers_per_step();
    for k in (0..n_steps * gamma).rev() {
        match model.backward {
            BackwardPlacement::BeforeLayer => {
                rho.apply_channel(model);
                rho.apply_layer(schedule, k % gamma, true);
            }
            BackwardPlacement::AfterLayer => {
                rho.apply_layer(schedule, k % gamma, true);
                rho.apply_channel(model);
            }
        }
    }
    Ok(rho.overlap(psi))
}

/// Inputs of the mitigation bound from an exact forward evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactBoundInputs {
    /// Probability that no error hit the forward circuit.
    pub q: f64,
    /// `sqrt(Tr rho_err^2)` of the error-conditioned state.
    pub r: f64,
    pub l_noisy: f64,
    pub l_true: f64,
}

/// Decomposes the noisy forward state into its error-free part and the
/// error-conditioned remainder, for a Pauli channel with forward noise
/// after every layer.
pub fn exact_bound_inputs(
    psi: &PureState,
    schedule: &TrotterSchedule,
    n_steps: usize,
    obs: &PauliObservable,
    model: &NoiseModel,
) -> Result<ExactBoundInputs> {
    if !model.is_pauli_channel() {
        return Err(Error::param(
            "noise",
            "the error-free decomposition needs a Pauli channel",
        ));
    }
    let n = schedule.num_qubits();
    let forward_layers = n_steps * schedule.layers_per_step();
    let q = (1.0 - model.p).powi((n * forward_layers) as i32);
    let rho = exact_noisy_forward(psi, schedule, n_steps, model)?;
    let clean = schedule.evolve(psi, n_steps)?;
    let l_true = obs.expectation(&clean).powi(2);
    let l_noisy = exact_noisy_survival(psi, schedule, n_steps, obs, model)?;
    let r = if q < 1.0 {
        let tilde = rho.combine(1.0 / (1.0 - q), &DensityMatrix::pure(&clean)?, -q / (1.0 - q));
        tilde.purity().sqrt()
    } else {
        0.0
    };
    Ok(ExactBoundInputs { q, r, l_noisy, l_true })
}
