//! Exact diagonalization in fixed-magnetization sectors and the ensembles
//! built from it: diagonal, sharp microcanonical and Gaussian-broadened
//! microcanonical.
//!
//! A sector is labelled by the eigenvalue `m_z` of `sum_i sigma^z_i`, so it
//! holds the basis states with `(N - m_z) / 2` spins down.

use std::cmp::Ordering;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::model::{Observable, SpinHamiltonian};
use crate::state::{PureState, C64};

/// Relative width below which eigenvalues count as degenerate, in units of `|J|`.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Limits on dense sector diagonalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdLimits {
    /// Hard upper bound on the sector dimension.
    pub max_dim: usize,
    /// Sectors above this dimension need `allow_large`.
    pub large_dim: usize,
    pub allow_large: bool,
}

impl Default for EdLimits {
    fn default() -> Self {
        EdLimits {
            max_dim: 16_000,
            large_dim: 1_000,
            allow_large: false,
        }
    }
}

impl EdLimits {
    pub fn allowing_large() -> Self {
        EdLimits {
            allow_large: true,
            ..Self::default()
        }
    }

    fn check(&self, mz: i32, dim: usize) -> Result<()> {
        if dim > self.max_dim {
            return Err(Error::SectorTooLarge {
                mz,
                dim,
                cap: self.max_dim,
                hint: "use a smaller lattice such as 4x3",
            });
        }
        if dim > self.large_dim && !self.allow_large {
            return Err(Error::SectorTooLarge {
                mz,
                dim,
                cap: self.large_dim,
                hint: "use a smaller lattice such as 4x3 or enable large sectors explicitly",
            });
        }
        Ok(())
    }
}

/// All `m_z` values available on `n` qubits, from `-n` to `n` in steps of 2.
pub fn sector_labels(n: usize) -> Vec<i32> {
    (0..=n).map(|k| n as i32 - 2 * k as i32).rev().collect()
}

fn down_count(n: usize, mz: i32) -> Result<usize> {
    let n_i = n as i32;
    if mz.abs() > n_i || (n_i - mz) % 2 != 0 {
        return Err(Error::param("m_z", format!("{mz} is not a magnetization of {n} spins")));
    }
    Ok(((n_i - mz) / 2) as usize)
}

pub fn sector_dimension(n: usize, mz: i32) -> Result<usize> {
    let k = down_count(n, mz)?;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    Ok(c as usize)
}

/// Basis states of the sector in ascending order.
pub fn sector_basis(n: usize, mz: i32) -> Result<Vec<usize>> {
    let k = down_count(n, mz)?;
    if k == 0 {
        return Ok(vec![0]);
    }
    let mut out = Vec::with_capacity(sector_dimension(n, mz)?);
    // Gosper's hack enumerates k-bit patterns in increasing order.
    let mut v: usize = (1 << k) - 1;
    let limit = 1usize << n;
    while v < limit {
        out.push(v);
        let t = v | (v - 1);
        v = (t + 1) | (((!t & (t + 1)) - 1) >> (v.trailing_zeros() + 1));
    }
    Ok(out)
}

/// The Hamiltonian restricted to one sector (real symmetric).
pub fn sector_matrix(h: &SpinHamiltonian, basis: &[usize]) -> DMatrix<f64> {
    let d = basis.len();
    let mut m = DMatrix::zeros(d, d);
    for (col, &b) in basis.iter().enumerate() {
        for t in h.terms() {
            let mask = t.bond.mask();
            let pair = b & mask;
            if pair != 0 && pair != mask {
                let row = basis.binary_search(&(b ^ mask)).expect("flip-flop stays in sector");
                m[(row, col)] += 0.5 * t.coefficient;
            }
        }
    }
    m
}

/// Full `2^N` Hamiltonian matrix, for small reference calculations.
pub fn dense_hamiltonian(h: &SpinHamiltonian) -> DMatrix<f64> {
    let dim = 1usize << h.num_qubits();
    let all: Vec<usize> = (0..dim).collect();
    sector_matrix(h, &all)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorSpectrum {
    pub mz: i32,
    pub num_qubits: usize,
    pub basis: Vec<usize>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]` in the sector basis.
    pub eigenvectors: DMatrix<C64>,
}

impl SectorSpectrum {
    pub fn from_real(mz: i32, num_qubits: usize, basis: Vec<usize>, m: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(m);
        let order = ascending_order(eig.eigenvalues.as_slice());
        let d = basis.len();
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(d, d, |r, c| C64::new(eig.eigenvectors[(r, order[c])], 0.0));
        SectorSpectrum {
            mz,
            num_qubits,
            basis,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn from_hermitian(mz: i32, num_qubits: usize, basis: Vec<usize>, m: DMatrix<C64>) -> Self {
        let eig = SymmetricEigen::new(m);
        let order = ascending_order(eig.eigenvalues.as_slice());
        let d = basis.len();
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
        SectorSpectrum {
            mz,
            num_qubits,
            basis,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `V diag(E) V^dagger`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, e) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*e);
        }
        scaled * v.adjoint()
    }

    /// Sector components of a full-space vector.
    pub fn project(&self, psi: &[C64]) -> Vec<C64> {
        self.basis.iter().map(|&b| psi[b]).collect()
    }

    /// `<k|psi>` for every eigenvector.
    pub fn overlaps(&self, psi: &[C64]) -> Vec<C64> {
        let local = nalgebra::DVector::from_vec(self.project(psi));
        (self.eigenvectors.adjoint() * local).data.into()
    }

    /// Adds `sum_k coeffs[k] |k>` to the full-space vector `out`.
    pub fn accumulate(&self, coeffs: &[C64], out: &mut [C64]) {
        let c = nalgebra::DVector::from_column_slice(coeffs);
        let local = &self.eigenvectors * c;
        for (i, &b) in self.basis.iter().enumerate() {
            out[b] += local[i];
        }
    }

    /// Eigenvector `k` embedded in the full space.
    pub fn eigenstate(&self, k: usize) -> PureState {
        let mut v = vec![C64::new(0.0, 0.0); 1 << self.num_qubits];
        for (i, &b) in self.basis.iter().enumerate() {
            v[b] = self.eigenvectors[(i, k)];
        }
        PureState::from_amplitudes(v).expect("power-of-two length")
    }

    /// `<k|A|k>` for every eigenstate.
    pub fn eigenstate_expectations(&self, obs: &Observable) -> Vec<f64> {
        (0..self.dim())
            .into_par_iter()
            .map(|k| obs.expectation(&self.eigenstate(k)))
            .collect()
    }

    /// Adds the sector part of `exp(-i H t) psi` to `out`.
    pub fn evolve_accumulate(&self, psi: &[C64], t: f64, out: &mut [C64]) {
        let mut c = self.overlaps(psi);
        for (ck, e) in c.iter_mut().zip(&self.eigenvalues) {
            *ck *= C64::from_polar(1.0, -e * t);
        }
        self.accumulate(&c, out);
    }
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    order
}

pub fn diagonalize_sector(h: &SpinHamiltonian, mz: i32) -> Result<SectorSpectrum> {
    diagonalize_sector_with(h, mz, &EdLimits::default())
}

pub fn diagonalize_sector_with(h: &SpinHamiltonian, mz: i32, limits: &EdLimits) -> Result<SectorSpectrum> {
    let n = h.num_qubits();
    limits.check(mz, sector_dimension(n, mz)?)?;
    let basis = sector_basis(n, mz)?;
    let m = sector_matrix(h, &basis);
    Ok(SectorSpectrum::from_real(mz, n, basis, m))
}

/// Spectra of every sector, ordered by `m_z`.
pub fn full_spectrum(h: &SpinHamiltonian, limits: &EdLimits) -> Result<Vec<SectorSpectrum>> {
    let n = h.num_qubits();
    for mz in sector_labels(n) {
        limits.check(mz, sector_dimension(n, mz)?)?;
    }
    sector_labels(n)
        .into_par_iter()
        .map(|mz| diagonalize_sector_with(h, mz, limits))
        .collect()
}

/// Result of a diagonal-ensemble evaluation together with the weight of
/// the initial state in each sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalEnsemble {
    pub value: f64,
    pub sector_weights: Vec<(i32, f64)>,
}

/// `sum_c <psi| P_c A P_c |psi>` over the eigenspaces `P_c` of the full
/// Hamiltonian. Eigenvalues closer than `tolerance` (absolute) are merged,
/// including across sectors, which resolves the observable inside
/// degenerate eigenspaces.
pub fn diagonal_ensemble(
    psi: &PureState,
    obs: &Observable,
    spectra: &[SectorSpectrum],
    tolerance: f64,
) -> Result<DiagonalEnsemble> {
    let n = psi.num_qubits();
    let amps = psi.amplitudes();
    let overlaps: Vec<Vec<C64>> = spectra.iter().map(|s| s.overlaps(amps)).collect();
    let sector_weights: Vec<(i32, f64)> = spectra
        .iter()
        .zip(&overlaps)
        .map(|(s, c)| (s.mz, c.iter().map(|x| x.norm_sqr()).sum()))
        .collect();
    let covered: f64 = sector_weights.iter().map(|w| w.1).sum();
    if (covered - psi.norm_sqr()).abs() > 1e-9 {
        return Err(Error::param(
            "spectra",
            format!("sectors cover only {covered:.6} of the state's weight"),
        ));
    }

    // (energy, sector, eigen index), sorted by energy
    let mut levels: Vec<(f64, usize, usize)> = spectra
        .iter()
        .enumerate()
        .flat_map(|(s, sp)| sp.eigenvalues.iter().enumerate().map(move |(k, &e)| (e, s, k)))
        .collect();
    levels.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    let mut clusters: Vec<&[(f64, usize, usize)]> = Vec::new();
    let mut start = 0;
    for i in 1..=levels.len() {
        if i == levels.len() || levels[i].0 - levels[i - 1].0 > tolerance {
            clusters.push(&levels[start..i]);
            start = i;
        }
    }

    let dim = 1usize << n;
    let value = clusters
        .par_iter()
        .map(|cluster| {
            if let [(_, s, k)] = cluster {
                let c = overlaps[*s][*k];
                if c.norm_sqr() == 0.0 {
                    return 0.0;
                }
                return c.norm_sqr() * obs.expectation(&spectra[*s].eigenstate(*k));
            }
            let mut phi = vec![C64::new(0.0, 0.0); dim];
            for &(_, s, k) in cluster.iter() {
                let mut coeffs = vec![C64::new(0.0, 0.0); spectra[s].dim()];
                coeffs[k] = overlaps[s][k];
                spectra[s].accumulate(&coeffs, &mut phi);
            }
            let a_phi = obs.apply(&phi, n);
            phi.iter().zip(&a_phi).map(|(x, y)| (x.conj() * y).re).sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(DiagonalEnsemble { value, sector_weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Diagonal,
    Microcanonical,
    Broadened,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleQuery {
    pub kind: EnsembleKind,
    #[serde(default)]
    pub energy: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Sectors to average over; all supplied spectra when absent.
    #[serde(default)]
    pub sectors: Option<Vec<i32>>,
}

impl EnsembleQuery {
    pub fn validate(&self) -> Result<()> {
        if self.kind != EnsembleKind::Diagonal {
            match self.delta {
                Some(d) if d > 0.0 && d.is_finite() => {}
                _ => return Err(Error::param("delta", "must be positive for microcanonical ensembles")),
            }
            if !self.energy.is_some_and(f64::is_finite) {
                return Err(Error::param("energy", "required for microcanonical ensembles"));
            }
        }
        Ok(())
    }

    /// Evaluates the query. `psi` is only used by the diagonal ensemble.
    pub fn evaluate(
        &self,
        psi: &PureState,
        obs: &Observable,
        spectra: &[SectorSpectrum],
        coupling: f64,
    ) -> Result<f64> {
        self.validate()?;
        let selected: Vec<SectorSpectrum> = match &self.sectors {
            None => spectra.to_vec(),
            Some(list) => spectra.iter().filter(|s| list.contains(&s.mz)).cloned().collect(),
        };
        match self.kind {
            EnsembleKind::Diagonal => {
                Ok(diagonal_ensemble(psi, obs, &selected, DEGENERACY_TOLERANCE * coupling.abs())?.value)
            }
            kind => {
                let energy = self.energy.unwrap_or_default();
                let delta = self.delta.unwrap_or_default();
                let (energies, values) = eigenstate_table(&selected, obs);
                microcanonical_from_table(&energies, &values, energy, delta, kind)
            }
        }
    }
}

/// Eigenvalues and eigenstate expectations across `spectra`.
pub fn eigenstate_table(spectra: &[SectorSpectrum], obs: &Observable) -> (Vec<f64>, Vec<f64>) {
    let mut energies = Vec::new();
    let mut values = Vec::new();
    for s in spectra {
        energies.extend_from_slice(&s.eigenvalues);
        values.extend(s.eigenstate_expectations(obs));
    }
    (energies, values)
}

pub fn microcanonical(
    energy: f64,
    delta: f64,
    obs: &Observable,
    spectrum: &SectorSpectrum,
    kind: EnsembleKind,
) -> Result<f64> {
    let values = spectrum.eigenstate_expectations(obs);
    microcanonical_from_table(&spectrum.eigenvalues, &values, energy, delta, kind)
}

/// Sharp: mean of `values` over `|E_k - energy| < delta / 2`. Broadened:
/// mean weighted by `exp(-(E_k - energy)^2 / (2 delta^2))`.
pub fn microcanonical_from_table(
    energies: &[f64],
    values: &[f64],
    energy: f64,
    delta: f64,
    kind: EnsembleKind,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", "must be positive"));
    }
    if energies.is_empty() {
        return Err(Error::param("spectrum", "no eigenvalues supplied"));
    }
    let nearest = || {
        energies
            .iter()
            .copied()
            .min_by(|a, b| {
                (a - energy)
                    .abs()
                    .partial_cmp(&(b - energy).abs())
                    .unwrap_or(Ordering::Equal)
            })
            .unwrap_or(f64::NAN)
    };
    match kind {
        EnsembleKind::Microcanonical => {
            let (mut sum, mut count) = (0.0, 0usize);
            for (e, v) in energies.iter().zip(values) {
                if (e - energy).abs() < delta / 2.0 {
                    sum += v;
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::EmptyWindow {
                    energy,
                    half_width: delta / 2.0,
                    nearest: nearest(),
                });
            }
            Ok(sum / count as f64)
        }
        EnsembleKind::Broadened => {
            let e0 = nearest();
            let log_w = |e: f64| -((e - energy).powi(2) - (e0 - energy).powi(2)) / (2.0 * delta * delta);
            let (mut num, mut den) = (0.0, 0.0);
            for (e, v) in energies.iter().zip(values) {
                let w = log_w(*e).exp();
                num += w * v;
                den += w;
            }
            Ok(num / den)
        }
        EnsembleKind::Diagonal => Err(Error::param("kind", "diagonal ensemble needs a state")),
    }
}

/// Sorted eigenvalues of the dense full-space Hamiltonian.
pub fn full_space_eigenvalues(h: &SpinHamiltonian) -> Result<Vec<f64>> {
    if h.num_qubits() > 12 {
        return Err(Error::QubitCapExceeded {
            requested: h.num_qubits(),
            cap: 12,
        });
    }
    let mut e: Vec<f64> = SymmetricEigen::new(dense_hamiltonian(h))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(e)
}

// Cache file layout (little endian):
//   b"XYSP", u32 version, u32 rows, u32 cols, f64 J, i32 m_z, u64 dim,
//   u8 kind (0 real, 1 complex), u64 basis[dim], f64 eigenvalues[dim],
//   eigenvectors column-major as f64 (real) or (f64, f64) pairs (complex),
//   then the SHA-256 of everything before it.
const CACHE_MAGIC: &[u8; 4] = b"XYSP";
const CACHE_VERSION: u32 = 1;

pub fn cache_file_name(lattice: &Lattice, coupling: f64, mz: i32) -> String {
    format!(
        "xy_{}x{}_J{:016x}_mz{}.spec",
        lattice.rows(),
        lattice.cols(),
        coupling.to_bits(),
        mz
    )
}

pub fn write_spectrum(path: &Path, lattice: &Lattice, coupling: f64, s: &SectorSpectrum) -> Result<()> {
    let real = s.eigenvectors.iter().all(|z| z.im == 0.0);
    let mut buf = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(lattice.rows() as u32).to_le_bytes());
    buf.extend_from_slice(&(lattice.cols() as u32).to_le_bytes());
    buf.extend_from_slice(&coupling.to_le_bytes());
    buf.extend_from_slice(&s.mz.to_le_bytes());
    buf.extend_from_slice(&(s.dim() as u64).to_le_bytes());
    buf.push(if real { 0 } else { 1 });
    for &b in &s.basis {
        buf.extend_from_slice(&(b as u64).to_le_bytes());
    }
    for e in &s.eigenvalues {
        buf.extend_from_slice(&e.to_le_bytes());
    }
    for z in s.eigenvectors.iter() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        if !real {
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    let tmp = path.with_extension("tmp");
    fs::File::create(&tmp)?.write_all(&buf)?;
    fs::rename(tmp, path)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        let bytes = self
            .data
            .get(self.pos..end)
            .ok_or_else(|| Error::Cache("file truncated".into()))?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice of length K"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn read_spectrum(path: &Path, lattice: &Lattice, coupling: f64, mz: i32) -> Result<SectorSpectrum> {
    let mut raw = Vec::new();
    fs::File::open(path)?.read_to_end(&mut raw)?;
    if raw.len() < 32 + 4 {
        return Err(Error::Cache("file truncated".into()));
    }
    let (body, digest) = raw.split_at(raw.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Cache("checksum mismatch".into()));
    }
    let mut c = Cursor { data: body, pos: 0 };
    if &c.take::<4>()? != CACHE_MAGIC {
        return Err(Error::Cache("bad magic bytes".into()));
    }
    let version = c.u32()?;
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported version {version}")));
    }
    let rows = c.u32()? as usize;
    let cols = c.u32()? as usize;
    let j = c.f64()?;
    let file_mz = i32::from_le_bytes(c.take()?);
    if rows != lattice.rows() || cols != lattice.cols() || j.to_bits() != coupling.to_bits() || file_mz != mz {
        return Err(Error::Cache("key does not match the request".into()));
    }
    let dim = c.u64()? as usize;
    let complex = match c.take::<1>()?[0] {
        0 => false,
        1 => true,
        k => return Err(Error::Cache(format!("unknown kind byte {k}"))),
    };
    let basis = (0..dim)
        .map(|_| c.u64().map(|b| b as usize))
        .collect::<Result<Vec<_>>>()?;
    let eigenvalues = (0..dim).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        let re = c.f64()?;
        let im = if complex { c.f64()? } else { 0.0 };
        entries.push(C64::new(re, im));
    }
    if c.pos != body.len() {
        return Err(Error::Cache("trailing bytes".into()));
    }
    Ok(SectorSpectrum {
        mz,
        num_qubits: lattice.num_sites(),
        basis,
        eigenvalues,
        eigenvectors: DMatrix::from_vec(dim, dim, entries),
    })
}

/// Diagonalizes a sector, reusing a cached spectrum from `dir` when one
/// with a matching key exists. Unreadable cache files are recomputed.
pub fn cached_sector(dir: &Path, h: &SpinHamiltonian, mz: i32, limits: &EdLimits) -> Result<SectorSpectrum> {
    let path: PathBuf = dir.join(cache_file_name(h.lattice(), h.coupling(), mz));
    if path.exists() {
        if let Ok(s) = read_spectrum(&path, h.lattice(), h.coupling(), mz) {
            return Ok(s);
        }
    }
    let s = diagonalize_sector_with(h, mz, limits)?;
    fs::create_dir_all(dir)?;
    write_spectrum(&path, h.lattice(), h.coupling(), &s)?;
    Ok(s)
}
