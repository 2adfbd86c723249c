//! First-order Trotter evolution of the XY model built from partial iSWAP
//! gates, one gate layer per bond group.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Bond, Lattice};
use crate::model::PauliObservable;
use crate::state::{PureState, C64};

/// Bond propagator `exp(i J tau (S^x S^x + S^y S^y))` in the basis
/// `|00>, |01>, |10>, |11>`.
pub fn partial_iswap_gate(j: f64, tau: f64) -> [[C64; 4]; 4] {
    let (s, c) = (j * tau / 2.0).sin_cos();
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let cc = C64::new(c, 0.0);
    let is = C64::new(0.0, s);
    [[one, z, z, z], [z, cc, is, z], [z, is, cc, z], [z, z, z, one]]
}

/// Applies the flip-flop rotation `[[c, i s], [i s, c]]` on the
/// antiparallel subspace of `bond`.
pub(crate) fn apply_bond_rotation(psi: &mut [C64], bond: Bond, c: f64, s: f64) {
    let bit_a = 1usize << bond.a;
    let bit_b = 1usize << bond.b;
    let lo = bond.a.min(bond.b);
    let hi = bond.a.max(bond.b);
    let is = C64::new(0.0, s);
    let dim = psi.len();
    let mut x = 0;
    while x < dim {
        let mut y = x;
        while y < x + (1 << hi) {
            for base in y..y + (1 << lo) {
                let i1 = base | bit_a;
                let i2 = base | bit_b;
                let (v1, v2) = (psi[i1], psi[i2]);
                psi[i1] = v1 * c + v2 * is;
                psi[i2] = v1 * is + v2 * c;
            }
            y += 2 << lo;
        }
        x += 2 << hi;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterSchedule {
    lattice: Lattice,
    coupling: f64,
    tau: f64,
    layers: Vec<Vec<Bond>>,
}

impl TrotterSchedule {
    pub fn new(lattice: &Lattice, coupling: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param("tau", format!("must be positive, got {tau}")));
        }
        if coupling == 0.0 || !coupling.is_finite() {
            return Err(Error::param("J", format!("must be finite and nonzero, got {coupling}")));
        }
        Ok(TrotterSchedule {
            lattice: lattice.clone(),
            coupling,
            tau,
            layers: lattice.groups().iter().map(|g| g.bonds.clone()).collect(),
        })
    }

    /// Schedule with `tau = 2 pi / omega`.
    pub fn from_omega(lattice: &Lattice, coupling: f64, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::param("omega", format!("must be positive, got {omega}")));
        }
        Self::new(lattice, coupling, 2.0 * PI / omega)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.tau
    }

    pub fn num_qubits(&self) -> usize {
        self.lattice.num_sites()
    }

    pub fn layers(&self) -> &[Vec<Bond>] {
        &self.layers
    }

    pub fn layers_per_step(&self) -> usize {
        self.layers.len()
    }

    fn rotation(&self) -> (f64, f64) {
        let (s, c) = (self.coupling * self.tau / 2.0).sin_cos();
        (c, s)
    }

    pub fn apply_layer(&self, psi: &mut [C64], layer: usize) {
        let (c, s) = self.rotation();
        for &bond in &self.layers[layer] {
            apply_bond_rotation(psi, bond, c, s);
        }
    }

    pub fn apply_layer_inverse(&self, psi: &mut [C64], layer: usize) {
        let (c, s) = self.rotation();
        for &bond in &self.layers[layer] {
            apply_bond_rotation(psi, bond, c, -s);
        }
    }

    /// Applies `U_Trotter(tau)`.
    pub fn apply_step(&self, state: &mut PureState) -> Result<()> {
        state.ensure_qubits(self.num_qubits())?;
        self.step_raw(state.amplitudes_mut());
        Ok(())
    }

    /// Applies `U_Trotter(tau)^dagger`.
    pub fn apply_step_inverse(&self, state: &mut PureState) -> Result<()> {
        state.ensure_qubits(self.num_qubits())?;
        self.step_inverse_raw(state.amplitudes_mut());
        Ok(())
    }

    pub(crate) fn step_raw(&self, psi: &mut [C64]) {
        for k in 0..self.layers.len() {
            self.apply_layer(psi, k);
        }
    }

    pub(crate) fn step_inverse_raw(&self, psi: &mut [C64]) {
        for k in (0..self.layers.len()).rev() {
            self.apply_layer_inverse(psi, k);
        }
    }

    pub fn evolve(&self, state: &PureState, n_steps: usize) -> Result<PureState> {
        let mut out = state.clone();
        self.evolve_in_place(&mut out, n_steps)?;
        Ok(out)
    }

    pub fn evolve_in_place(&self, state: &mut PureState, n_steps: usize) -> Result<()> {
        state.ensure_qubits(self.num_qubits())?;
        for _ in 0..n_steps {
            self.step_raw(state.amplitudes_mut());
        }
        Ok(())
    }
}

pub fn apply_trotter_step(state: &PureState, schedule: &TrotterSchedule) -> Result<PureState> {
    schedule.evolve(state, 1)
}

pub fn evolve(state: &PureState, schedule: &TrotterSchedule, n_steps: usize) -> Result<PureState> {
    schedule.evolve(state, n_steps)
}

/// `|<psi| U^-n A U^n |psi>|^2`, evaluated as the echo circuit: forward
/// evolution, the observable gate, backward evolution and the overlap with
/// the initial state.
pub fn survival_probability(
    psi: &PureState,
    schedule: &TrotterSchedule,
    n_steps: usize,
    obs: &PauliObservable,
) -> Result<f64> {
    obs.ensure_unitary()?;
    let mut phi = schedule.evolve(psi, n_steps)?;
    obs.apply_in_place(phi.amplitudes_mut());
    for _ in 0..n_steps {
        schedule.step_inverse_raw(phi.amplitudes_mut());
    }
    Ok(psi.inner(&phi).norm_sqr().min(1.0))
}
