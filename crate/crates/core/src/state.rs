//! Dense pure states over `2^N` computational basis states.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// `|0...0>`, every spin pointing along +z.
    pub fn zero(num_qubits: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        PureState { num_qubits, amplitudes }
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut s = Self::zero(num_qubits);
        s.amplitudes[0] = C64::new(0.0, 0.0);
        s.amplitudes[index] = C64::new(1.0, 0.0);
        s
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::param(
                "amplitudes",
                format!("length {len} is not a power of two"),
            ));
        }
        Ok(PureState {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Product state with single-qubit amplitudes `(a0_i, a1_i)` on qubit `i`.
    pub fn product(factors: &[(C64, C64)]) -> Self {
        let mut amplitudes = Vec::with_capacity(1 << factors.len());
        amplitudes.push(C64::new(1.0, 0.0));
        for (q, &(a0, a1)) in factors.iter().enumerate() {
            let half = 1usize << q;
            amplitudes.resize(2 * half, C64::new(0.0, 0.0));
            for k in 0..half {
                let v = amplitudes[k];
                amplitudes[k] = v * a0;
                amplitudes[k | half] = v * a1;
            }
        }
        PureState {
            num_qubits: factors.len(),
            amplitudes,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm and returns the norm before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        }
        n
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn ensure_qubits(&self, expected: usize) -> Result<()> {
        if self.num_qubits != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.num_qubits,
            });
        }
        Ok(())
    }

    /// `<sum_i sigma^z_i>`.
    pub fn total_z(&self) -> f64 {
        let n = self.num_qubits as i64;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(b, a)| a.norm_sqr() * (n - 2 * b.count_ones() as i64) as f64)
            .sum()
    }

    /// Probability that qubit `q` is in `|1>`.
    pub fn excitation(&self, q: usize) -> f64 {
        let mask = 1usize << q;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(b, _)| b & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn max_abs_diff(&self, other: &PureState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_state_ordering() {
        let zero = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let one = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        // qubit 0 in |1>, qubit 1 in |0>, qubit 2 in |1>  ->  index 0b101
        let s = PureState::product(&[one, zero, one]);
        assert_eq!(s.num_qubits(), 3);
        assert_eq!(s.amplitudes()[0b101], C64::new(1.0, 0.0));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert!((s.total_z() - (-1.0)).abs() < 1e-15);
        assert!((s.excitation(0) - 1.0).abs() < 1e-15);
        assert!(s.excitation(1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_length() {
        assert!(PureState::from_amplitudes(vec![C64::new(1.0, 0.0); 3]).is_err());
        assert!(PureState::from_amplitudes(vec![C64::new(1.0, 0.0); 4]).is_ok());
    }
}
