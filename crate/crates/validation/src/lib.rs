//! Dense reference computations shared by the acceptance runs.

use nalgebra::DMatrix;
use prethermal::magnus::{magnus_term, PiecewiseDrive};
use prethermal::sparse::CsrMatrix;
use prethermal::{Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M = DMatrix<C64>;

pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> M {
    let a = M::from_fn(dim, dim, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Piecewise-constant drive of random Hermitian `dim x dim` generators with
/// segment lengths in [0.1, 1.1).
pub fn random_drive(dim: usize, segments: usize, seed: u64) -> Result<(Vec<(M, f64)>, PiecewiseDrive)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dense: Vec<(M, f64)> = (0..segments)
        .map(|_| (random_hermitian(dim, &mut rng), 0.1 + rng.random::<f64>()))
        .collect();
    let drive = PiecewiseDrive::new(dense.iter().map(|(m, h)| (CsrMatrix::from_dense(m), *h)).collect())?;
    Ok((dense, drive))
}

pub fn comm(a: &M, b: &M) -> M {
    a * b - b * a
}

pub fn max_abs(m: &M) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
const GL: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Composite quadrature nodes on `[0, upper]` with the drive breakpoints as
/// panel edges, so every panel integrates a polynomial exactly.
fn nodes(breaks: &[f64], upper: f64) -> Vec<(f64, f64)> {
    let mut edges: Vec<f64> = breaks.iter().copied().filter(|&b| b < upper).collect();
    edges.push(upper);
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        for (x, wt) in GL {
            out.push((0.5 * (lo + hi) + 0.5 * (hi - lo) * x, 0.5 * (hi - lo) * wt));
        }
    }
    out
}

/// Nested time integrals of the first two Magnus corrections evaluated by
/// quadrature instead of closed forms.
pub struct Quadrature {
    dense: Vec<(M, f64)>,
    breaks: Vec<f64>,
    tau: f64,
}

impl Quadrature {
    pub fn new(dense: Vec<(M, f64)>) -> Self {
        let mut breaks = vec![0.0];
        for (_, h) in &dense {
            breaks.push(breaks.last().unwrap() + h);
        }
        let tau = breaks.pop().unwrap();
        Quadrature { dense, breaks, tau }
    }

    fn h(&self, t: f64) -> &M {
        let k = self.breaks.iter().rposition(|&b| b <= t).unwrap();
        &self.dense[k].0
    }

    fn dim(&self) -> usize {
        self.dense[0].0.nrows()
    }

    pub fn omega1(&self) -> M {
        let mut acc = M::zeros(self.dim(), self.dim());
        for (t1, w1) in nodes(&self.breaks, self.tau) {
            for (t2, w2) in nodes(&self.breaks, t1) {
                acc += comm(self.h(t1), self.h(t2)) * C64::new(w1 * w2, 0.0);
            }
        }
        acc * C64::new(0.0, -1.0 / (2.0 * self.tau))
    }

    pub fn omega2(&self) -> M {
        let mut acc = M::zeros(self.dim(), self.dim());
        for (t1, w1) in nodes(&self.breaks, self.tau) {
            for (t2, w2) in nodes(&self.breaks, t1) {
                for (t3, w3) in nodes(&self.breaks, t2) {
                    let (a, b, c) = (self.h(t1), self.h(t2), self.h(t3));
                    let term = comm(a, &comm(b, c)) + comm(c, &comm(b, a));
                    acc += term * C64::new(w1 * w2 * w3, 0.0);
                }
            }
        }
        acc * C64::new(-1.0 / (6.0 * self.tau), 0.0)
    }
}

/// Largest entrywise gap between the closed-form and quadrature values of
/// the first and second Magnus corrections on a random 3-qubit drive.
pub fn quadrature_gaps(segments: usize, seed: u64) -> Result<(f64, f64)> {
    let (dense, drive) = random_drive(8, segments, seed)?;
    let q = Quadrature::new(dense);
    let d1 = max_abs(&(magnus_term(&drive, 1)?.to_dense() - q.omega1()));
    let d2 = max_abs(&(magnus_term(&drive, 2)?.to_dense() - q.omega2()));
    Ok((d1, d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use prethermal::magnus::EffectiveHamiltonian;

    #[test]
    fn commuting_drive_has_no_corrections() {
        let a = M::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-0.5, 0.0),
        ]));
        let q = Quadrature::new(vec![(a.clone(), 0.3), (a * C64::new(2.0, 0.0), 0.7)]);
        assert!(max_abs(&q.omega1()) < 1e-14);
        assert!(max_abs(&q.omega2()) < 1e-14);
    }

    #[test]
    fn closed_forms_match_quadrature_on_random_drives() {
        for (seed, segments) in [(1, 2), (2, 3), (3, 4), (4, 5)] {
            let (d1, d2) = quadrature_gaps(segments, seed).unwrap();
            assert!(d1 < 1e-8, "seed {seed}: omega1 off by {d1}");
            assert!(d2 < 1e-8, "seed {seed}: omega2 off by {d2}");
        }
    }

    // BCH error scaling of the truncated generators
    fn expm_hermitian(h: &M, t: f64) -> M {
        let eig = h.clone().symmetric_eigen();
        let phases = M::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -t * e)));
        &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
    }

    fn spectral_norm(m: &M) -> f64 {
        m.clone().singular_values().max()
    }

    /// Error of `exp(-i tau H^(order))` against the exact period propagator for
    /// the drive `scale * segments`, at a sequence of halved periods.
    fn bch_errors(dense: &[(M, f64)], order: usize) -> Vec<f64> {
        (0..4)
            .map(|k| {
                let s = 0.2 / 2f64.powi(k);
                let scaled: Vec<(M, f64)> = dense.iter().map(|(m, h)| (m.clone(), h * s)).collect();
                let mut u = M::identity(8, 8);
                for (m, h) in &scaled {
                    u = expm_hermitian(m, *h) * u;
                }
                let drive =
                    PiecewiseDrive::new(scaled.iter().map(|(m, h)| (CsrMatrix::from_dense(m), *h)).collect()).unwrap();
                let heff = EffectiveHamiltonian::new(&drive, order).unwrap().matrix.to_dense();
                spectral_norm(&(u - expm_hermitian(&heff, drive.period())))
            })
            .collect()
    }

    #[test]
    fn truncation_error_scales_with_order() {
        let (dense, _) = random_drive(8, 4, 11).unwrap();
        for order in 0..=2 {
            let errs = bch_errors(&dense, order);
            for w in errs.windows(2) {
                // generator error O(tau^(order+1)), propagator error one power higher
                let slope = (w[0] / w[1]).log2();
                assert!(slope > order as f64 + 1.8, "order {order}: slope {slope} from {errs:?}");
            }
        }
    }
}
