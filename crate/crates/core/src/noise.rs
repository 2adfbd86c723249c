//! Single-qubit noise channels and their stochastic unravelings.
//!
//! Noise acts on every qubit after every gate layer, idle or not. Pauli
//! channels are sampled as error patterns `(x_mask, z_mask)` so that a
//! pattern can be drawn once and replayed; global phases are dropped
//! because only probabilities are ever read out.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)`.
    Depolarizing,
    /// `(1-p) rho + p Z rho Z`.
    PhaseDamping,
    /// Kraus pair `M0 = diag(1, sqrt(1-p))`, `M1 = sqrt(p) |0><1|`.
    AmplitudeDamping,
}

/// Where noise sits relative to each inverse layer of the backward circuit.
/// Forward noise always follows its layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackwardPlacement {
    /// Noise precedes each inverse layer, which makes the echo amplitude the
    /// overlap of two independent noisy forward evolutions.
    #[default]
    BeforeLayer,
    /// Noise follows each inverse layer, as in the plain mirrored circuit.
    AfterLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub p: f64,
    #[serde(default)]
    pub backward: BackwardPlacement,
    #[serde(default)]
    pub measurement_error: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, p: f64) -> Result<Self> {
        let m = NoiseModel {
            kind,
            p,
            backward: BackwardPlacement::BeforeLayer,
            measurement_error: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        Self::new(NoiseKind::Depolarizing, p)
    }

    pub fn noiseless() -> Self {
        NoiseModel {
            kind: NoiseKind::Depolarizing,
            p: 0.0,
            backward: BackwardPlacement::BeforeLayer,
            measurement_error: 0.0,
        }
    }

    pub fn with_measurement_error(mut self, p_m: f64) -> Result<Self> {
        self.measurement_error = p_m;
        self.validate()?;
        Ok(self)
    }

    pub fn with_backward(mut self, placement: BackwardPlacement) -> Self {
        self.backward = placement;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::param("p", format!("must lie in [0, 1), got {}", self.p)));
        }
        if !(0.0..1.0).contains(&self.measurement_error) {
            return Err(Error::param(
                "measurement_error",
                format!("must lie in [0, 1), got {}", self.measurement_error),
            ));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p == 0.0
    }

    /// Whether every Kraus operator is proportional to a unitary.
    pub fn is_pauli_channel(&self) -> bool {
        self.kind != NoiseKind::AmplitudeDamping
    }

    /// Kraus operators of the single-qubit channel.
    pub fn kraus(&self) -> Vec<[[C64; 2]; 2]> {
        let p = self.p;
        let z = C64::new(0.0, 0.0);
        let r = |x: f64| C64::new(x, 0.0);
        let i = C64::new(0.0, 1.0);
        match self.kind {
            NoiseKind::Depolarizing => {
                let a = (1.0 - p).sqrt();
                let b = (p / 3.0).sqrt();
                vec![
                    [[r(a), z], [z, r(a)]],
                    [[z, r(b)], [r(b), z]],
                    [[z, -i * b], [i * b, z]],
                    [[r(b), z], [z, r(-b)]],
                ]
            }
            NoiseKind::PhaseDamping => {
                let a = (1.0 - p).sqrt();
                let b = p.sqrt();
                vec![[[r(a), z], [z, r(a)]], [[r(b), z], [z, r(-b)]]]
            }
            NoiseKind::AmplitudeDamping => vec![[[r(1.0), z], [z, r((1.0 - p).sqrt())]], [[z, r(p.sqrt())], [z, z]]],
        }
    }
}

/// A Pauli error pattern `X^x Z^z`, up to a global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PauliError {
    pub x: usize,
    pub z: usize,
}

impl PauliError {
    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn apply(&self, psi: &mut [C64]) {
        if self.z != 0 {
            for (b, a) in psi.iter_mut().enumerate() {
                if (b & self.z).count_ones() % 2 == 1 {
                    *a = -*a;
                }
            }
        }
        if self.x != 0 {
            for b in 0..psi.len() {
                let c = b ^ self.x;
                if b < c {
                    psi.swap(b, c);
                }
            }
        }
    }
}

/// Draws one layer of Pauli-channel errors on `n` qubits, consuming exactly
/// one uniform variate per qubit.
pub fn sample_pauli_layer<R: Rng + ?Sized>(n: usize, model: &NoiseModel, rng: &mut R) -> PauliError {
    let mut e = PauliError::default();
    let p = model.p;
    for q in 0..n {
        let u: f64 = rng.random();
        if u >= p {
            continue;
        }
        let bit = 1usize << q;
        match model.kind {
            NoiseKind::Depolarizing => match ((3.0 * u / p) as usize).min(2) {
                0 => e.x |= bit,
                1 => {
                    e.x |= bit;
                    e.z |= bit;
                }
                _ => e.z |= bit,
            },
            NoiseKind::PhaseDamping => e.z |= bit,
            NoiseKind::AmplitudeDamping => {
                unreachable!("amplitude damping has no state-independent error pattern")
            }
        }
    }
    e
}

/// One amplitude-damping unraveling step on every qubit of a normalized
/// state. Returns the number of jumps.
///
/// The outcome is distributed exactly as measuring the Kraus pair on qubits
/// `0, 1, ..., n-1` in turn, but a single pass decides the common case where
/// no qubit jumps: the probability that qubits `start..k` all stay put is
/// `S_k = sum_b |psi_b|^2 (1-p)^{popcount(b & [start, k))}`, and one uniform
/// variate locates the first jump (if any) against these partial sums.
pub fn apply_amplitude_damping_layer<R: Rng + ?Sized>(psi: &mut [C64], n: usize, p: f64, rng: &mut R) -> usize {
    if p == 0.0 {
        return 0;
    }
    let stay_weight: Vec<f64> = (0..=n).map(|k| (1.0 - p).powi(k as i32)).collect();
    let keep_amp: Vec<f64> = stay_weight.iter().map(|w| w.sqrt()).collect();
    let mut jumps = 0;
    let mut start = 0;
    while start < n {
        let range = ((1usize << n) - 1) & !((1usize << start) - 1);
        let (mut total, mut none) = (0.0, 0.0);
        for (b, a) in psi.iter().enumerate() {
            let w = a.norm_sqr();
            total += w;
            none += w * stay_weight[(b & range).count_ones() as usize];
        }
        let u: f64 = rng.random::<f64>() * total;
        let first_jump = if u < none {
            None
        } else {
            // Partial sums S_k for k in start+1..n, only needed once a jump
            // is known to happen.
            let mut stay = vec![0.0; n + 1];
            for (b, a) in psi.iter().enumerate() {
                let w = a.norm_sqr();
                let mut k = 0;
                for q in start..n {
                    k += b >> q & 1;
                    stay[q + 1] += w * stay_weight[k];
                }
            }
            (start..n).find(|&q| u >= stay[q + 1])
        };
        let damped_end = first_jump.unwrap_or(n);
        let damp_mask = ((1usize << damped_end) - 1) & range;
        for (b, a) in psi.iter_mut().enumerate() {
            *a *= keep_amp[(b & damp_mask).count_ones() as usize];
        }
        if let Some(q) = first_jump {
            jumps += 1;
            let bit = 1usize << q;
            for b in 0..psi.len() {
                if b & bit == 0 {
                    psi[b] = psi[b | bit];
                    psi[b | bit] = C64::new(0.0, 0.0);
                }
            }
        }
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|a| *a /= norm);
        start = damped_end + 1;
    }
    jumps
}

/// One stochastic noise layer on all `n` qubits of a normalized state.
pub fn apply_noise_layer<R: Rng + ?Sized>(psi: &mut [C64], n: usize, model: &NoiseModel, rng: &mut R) {
    match model.kind {
        NoiseKind::AmplitudeDamping => {
            apply_amplitude_damping_layer(psi, n, model.p, rng);
        }
        _ => sample_pauli_layer(n, model, rng).apply(psi),
    }
}

/// Emulates a measured survival probability from `shots` binary outcomes.
/// Readout errors on `n` qubits scale the success probability by
/// `(1 - p_m)^n`.
pub fn sample_shots<R: Rng + ?Sized>(probability: f64, shots: u64, p_m: f64, n: usize, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Err(Error::param("shots", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::param(
            "probability",
            format!("must lie in [0, 1], got {probability}"),
        ));
    }
    if !(0.0..1.0).contains(&p_m) {
        return Err(Error::param("p_m", format!("must lie in [0, 1), got {p_m}")));
    }
    let success = probability * (1.0 - p_m).powi(n as i32);
    let dist = Binomial::new(shots, success).map_err(|e| Error::param("probability", e.to_string()))?;
    Ok(dist.sample(rng) as f64 / shots as f64)
}
