//! Magnus expansion of the piecewise-constant Trotter drive.
//!
//! Over one period the drive holds `B_j` for a time `h_j`, with
//! `tau = sum_j h_j`. Writing `U(tau) = exp(-i tau H_eff)`, the first three
//! terms of `H_eff` reduce to finite commutator sums because every integrand
//! is constant on each segment:
//!
//! ```text
//! Omega_0 = (1/tau) sum_j h_j B_j
//! Omega_1 = 1/(2 i tau) sum_{a>b} h_a h_b [B_a, B_b]
//! Omega_2 = -1/(6 tau) [ sum_{a>b>c} h_a h_b h_c ([B_a,[B_b,B_c]] + [B_c,[B_b,B_a]])
//!                      + sum_{a>c} (h_a^2 h_c / 2) [B_a,[B_a,B_c]]
//!                      + sum_{a>b} (h_a h_b^2 / 2) [B_b,[B_b,B_a]] ]
//! ```
//!
//! The two-index sums in `Omega_2` come from the parts of the ordered
//! region `t1 > t2 > t3` where two times share a segment; terms with all
//! three times in one segment vanish. For the XY drive `B_j = Gamma H_j`
//! and `h_j = tau / Gamma`, so `Omega_0 = H_XY`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ed::{sector_basis, sector_dimension, sector_labels, EdLimits, SectorSpectrum};
use crate::error::{Error, Result};
use crate::model::{Observable, SpinHamiltonian};
use crate::sparse::CsrMatrix;
use crate::state::{PureState, C64};
use crate::trotter::TrotterSchedule;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDrive {
    segments: Vec<(CsrMatrix, f64)>,
}

impl PiecewiseDrive {
    /// Segments `(B_j, h_j)` in time order.
    pub fn new(segments: Vec<(CsrMatrix, f64)>) -> Result<Self> {
        let dim = segments
            .first()
            .ok_or_else(|| Error::param("segments", "need at least one segment"))?
            .0
            .dim();
        for (b, h) in &segments {
            if b.dim() != dim {
                return Err(Error::param("segments", "operators differ in dimension"));
            }
            if !(*h > 0.0 && h.is_finite()) {
                return Err(Error::param("segments", format!("duration {h} is not positive")));
            }
        }
        Ok(PiecewiseDrive { segments })
    }

    /// The Trotter drive of `h` with period `tau`, restricted to the span of
    /// `basis` (a sorted list of basis states closed under the Hamiltonian).
    pub fn xy_trotter(h: &SpinHamiltonian, tau: f64, basis: &[usize]) -> Result<Self> {
        let groups = h.lattice().groups().len();
        let segments = (0..groups)
            .map(|g| {
                let op = group_operator(h, g, basis).scaled(C64::new(groups as f64, 0.0));
                (op, tau / groups as f64)
            })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[(CsrMatrix, f64)] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.segments[0].0.dim()
    }

    pub fn period(&self) -> f64 {
        self.segments.iter().map(|s| s.1).sum()
    }

    /// Index of the segment active at time `t` in `[0, period)`.
    pub fn segment_at(&self, t: f64) -> usize {
        let mut end = 0.0;
        for (j, (_, h)) in self.segments.iter().enumerate() {
            end += h;
            if t < end {
                return j;
            }
        }
        self.segments.len() - 1
    }
}

/// `H_g` of color group `g` restricted to `basis`.
pub fn group_operator(h: &SpinHamiltonian, g: usize, basis: &[usize]) -> CsrMatrix {
    let terms = h.group_terms(g);
    let mut entries = Vec::new();
    for (col, &b) in basis.iter().enumerate() {
        for t in &terms {
            let mask = t.bond.mask();
            let pair = b & mask;
            if pair != 0 && pair != mask {
                let row = basis
                    .binary_search(&(b ^ mask))
                    .expect("basis is closed under flip-flops");
                entries.push((row, col, C64::new(0.5 * t.coefficient, 0.0)));
            }
        }
    }
    CsrMatrix::from_triplets(basis.len(), entries)
}

/// `Omega_k` for `k` in 0..=2.
pub fn magnus_term(drive: &PiecewiseDrive, k: usize) -> Result<CsrMatrix> {
    let seg = drive.segments();
    let tau = drive.period();
    let dim = drive.dim();
    let re = |x: f64| C64::new(x, 0.0);
    let one = re(1.0);
    match k {
        0 => Ok(seg
            .iter()
            .fold(CsrMatrix::zeros(dim), |acc, (b, h)| acc.add_scaled(one, b, re(h / tau)))),
        1 => {
            let mut acc = CsrMatrix::zeros(dim);
            for a in 0..seg.len() {
                for b in 0..a {
                    let c = seg[a].0.commutator(&seg[b].0);
                    acc = acc.add_scaled(one, &c, re(seg[a].1 * seg[b].1));
                }
            }
            // 1 / (2 i tau) = -i / (2 tau)
            Ok(acc.scaled(C64::new(0.0, -1.0 / (2.0 * tau))))
        }
        2 => {
            let mut acc = CsrMatrix::zeros(dim);
            let comm = |x: usize, y: usize| seg[x].0.commutator(&seg[y].0);
            for a in 0..seg.len() {
                for b in 0..a {
                    let ab = comm(a, b);
                    let ba_half = re(seg[a].1 * seg[b].1 * seg[b].1 / 2.0);
                    let aab = seg[a].0.commutator(&ab);
                    let bba = seg[b].0.commutator(&ab.scaled(re(-1.0)));
                    acc = acc.add_scaled(one, &aab, re(seg[a].1 * seg[a].1 * seg[b].1 / 2.0));
                    acc = acc.add_scaled(one, &bba, ba_half);
                    for c in 0..b {
                        let h3 = re(seg[a].1 * seg[b].1 * seg[c].1);
                        let t1 = seg[a].0.commutator(&comm(b, c));
                        let t2 = seg[c].0.commutator(&ab.scaled(re(-1.0)));
                        acc = acc.add_scaled(one, &t1.add_scaled(one, &t2, one), h3);
                    }
                }
            }
            Ok(acc.scaled(re(-1.0 / (6.0 * tau))))
        }
        k => Err(Error::UnsupportedMagnusOrder(k)),
    }
}

/// `H_Magnus^(n) = Omega_0 + ... + Omega_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    pub order: usize,
    pub tau: f64,
    pub matrix: CsrMatrix,
}

impl EffectiveHamiltonian {
    pub fn new(drive: &PiecewiseDrive, order: usize) -> Result<Self> {
        if order > 2 {
            return Err(Error::UnsupportedMagnusOrder(order));
        }
        let one = C64::new(1.0, 0.0);
        let mut matrix = CsrMatrix::zeros(drive.dim());
        for k in 0..=order {
            matrix = matrix.add_scaled(one, &magnus_term(drive, k)?, one);
        }
        Ok(EffectiveHamiltonian {
            order,
            tau: drive.period(),
            matrix,
        })
    }
}

/// Spectra of `H_Magnus^(order)` for the Trotter drive of `h`, one per
/// magnetization sector.
pub fn magnus_spectra(h: &SpinHamiltonian, tau: f64, order: usize, limits: &EdLimits) -> Result<Vec<SectorSpectrum>> {
    if order > 2 {
        return Err(Error::UnsupportedMagnusOrder(order));
    }
    let n = h.num_qubits();
    for mz in sector_labels(n) {
        let dim = sector_dimension(n, mz)?;
        if dim > limits.max_dim || (dim > limits.large_dim && !limits.allow_large) {
            return Err(Error::SectorTooLarge {
                mz,
                dim,
                cap: if limits.allow_large {
                    limits.max_dim
                } else {
                    limits.large_dim
                },
                hint: "use a smaller lattice such as 4x3",
            });
        }
    }
    sector_labels(n)
        .into_par_iter()
        .map(|mz| {
            let basis = sector_basis(n, mz)?;
            let drive = PiecewiseDrive::xy_trotter(h, tau, &basis)?;
            let heff = EffectiveHamiltonian::new(&drive, order)?;
            Ok(SectorSpectrum::from_hermitian(mz, n, basis, heff.matrix.to_dense()))
        })
        .collect()
}

/// Stroboscopic comparison of Floquet and truncated-Magnus dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSeries {
    pub tau: f64,
    pub order: usize,
    pub times: Vec<f64>,
    pub floquet: Vec<f64>,
    pub magnus: Vec<f64>,
    pub deviation: Vec<f64>,
}

impl DeviationSeries {
    pub fn max_deviation(&self) -> f64 {
        self.deviation.iter().copied().fold(0.0, f64::max)
    }
}

/// `|<A>_Floquet - <A>_Magnus|` at `t = m tau` for `m tau <= t_max`.
pub fn floquet_vs_magnus_deviation(
    psi: &PureState,
    obs: &Observable,
    schedule: &TrotterSchedule,
    order: usize,
    t_max: f64,
    limits: &EdLimits,
) -> Result<DeviationSeries> {
    if !(0.0..=1e3 / schedule.coupling().abs()).contains(&t_max) {
        return Err(Error::param("t_max", "must lie in [0, 1000/J]"));
    }
    psi.ensure_qubits(schedule.num_qubits())?;
    let h = SpinHamiltonian::xy(schedule.lattice(), schedule.coupling())?;
    let spectra = magnus_spectra(&h, schedule.tau(), order, limits)?;
    deviation_from_spectra(psi, obs, schedule, order, t_max, &spectra)
}

/// As [`floquet_vs_magnus_deviation`] with precomputed Magnus spectra.
pub fn deviation_from_spectra(
    psi: &PureState,
    obs: &Observable,
    schedule: &TrotterSchedule,
    order: usize,
    t_max: f64,
    spectra: &[SectorSpectrum],
) -> Result<DeviationSeries> {
    let tau = schedule.tau();
    let steps = (t_max / tau + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=steps).map(|m| m as f64 * tau).collect();

    let mut floquet = Vec::with_capacity(times.len());
    let mut cur = psi.clone();
    for m in 0..=steps {
        if m > 0 {
            schedule.apply_step(&mut cur)?;
        }
        floquet.push(obs.expectation(&cur));
    }

    let magnus: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let mut out = vec![C64::new(0.0, 0.0); psi.dim()];
            for s in spectra {
                s.evolve_accumulate(psi.amplitudes(), t, &mut out);
            }
            obs.expectation(&PureState::from_amplitudes(out).expect("full-space vector"))
        })
        .collect();

    let deviation = floquet.iter().zip(&magnus).map(|(a, b)| (a - b).abs()).collect();
    Ok(DeviationSeries {
        tau,
        order,
        times,
        floquet,
        magnus,
        deviation,
    })
}

/// Driving frequency for a Trotter step `tau`.
pub fn omega_of_tau(tau: f64) -> f64 {
    2.0 * PI / tau
}
