//! Survival-probability rescaling and its error budget.
//!
//! A noisy echo `L_A` is divided by the noisy echo of the identity `L_1`,
//! which estimates the no-error weight `q^2` of the forward circuit. Both
//! are estimated from independent trajectory ensembles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectories::{mean_and_stderr, TrajectoryEnsemble};

/// Below this identity echo the rescaled value is flagged as unreliable.
pub const RELIABILITY_CUTOFF: f64 = 0.01;

/// Default multiple of the stderr below which a magnitude counts as zero.
pub const DEFAULT_SIGN_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(mean: f64, stderr: f64) -> Self {
        Estimate { mean, stderr }
    }

    pub fn exact(mean: f64) -> Self {
        Estimate { mean, stderr: 0.0 }
    }
}

impl From<&TrajectoryEnsemble> for Estimate {
    fn from(e: &TrajectoryEnsemble) -> Self {
        Estimate::new(e.mean, e.stderr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    pub mean: f64,
    pub stderr: f64,
    /// False when the identity echo is below [`RELIABILITY_CUTOFF`].
    pub reliable: bool,
}

/// `L_A / L_1` with first-order propagation of both (independent) errors.
pub fn rescale(l_a: Estimate, l_id: Estimate) -> Result<Rescaled> {
    if !(l_id.mean > 0.0) {
        return Err(Error::NonPositiveDenominator(l_id.mean));
    }
    let mean = l_a.mean / l_id.mean;
    let rel = (l_a.stderr / l_id.mean).powi(2) + (mean * l_id.stderr / l_id.mean).powi(2);
    Ok(Rescaled {
        mean: mean.max(0.0),
        stderr: rel.sqrt(),
        reliable: l_id.mean >= RELIABILITY_CUTOFF,
    })
}

/// Mitigation error `s = rescaled - L_A`.
pub fn mitigation_error_s(rescaled: f64, l_true: f64) -> f64 {
    rescaled - l_true
}

/// Noisy echoes `(L_A, L_1)` for a state `q |psi_t><psi_t| + (1-q) 1/2^N`
/// and a Pauli observable with noiseless echo `l_true`.
pub fn global_depolarizing_echoes(l_true: f64, q: f64, n: usize) -> (f64, f64) {
    let mixed = (1.0 - q * q) * 0.5f64.powi(n as i32);
    (q * q * l_true + mixed, q * q + mixed)
}

/// Bias of the rescaled echo under global depolarizing noise. Always
/// nonnegative since `l_true <= 1`.
pub fn global_depolarizing_bias(l_true: f64, q: f64, n: usize) -> f64 {
    let q2 = q * q;
    (1.0 - l_true) * (1.0 - q2) / (q2 * 2f64.powi(n as i32) + 1.0 - q2)
}

/// Sides of the rescaling error bound `|L_noisy/q^2 - L_true| <= rhs`.
pub fn bound_sides(q: f64, r: f64, l_noisy: f64, l_true: f64) -> (f64, f64) {
    let lhs = (l_noisy / (q * q) - l_true).abs();
    let x = r / q;
    (lhs, (1.0 - q).powi(2) * x * x + 2.0 * (1.0 - q) * x)
}

/// Checks the rescaling error bound, allowing for rounding.
pub fn bound_check(q: f64, r: f64, l_noisy: f64, l_true: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param("q", "must lie in (0, 1]"));
    }
    let (lhs, rhs) = bound_sides(q, r, l_noisy, l_true);
    if lhs > rhs + 1e-10 * (1.0 + rhs) {
        return Err(Error::BoundViolation {
            q,
            r,
            l_noisy,
            l_true,
            lhs,
            rhs,
        });
    }
    Ok(())
}

/// Largest layer count `D` with `(1-p)^{ND} > C / 2^N`. `n = None` is the
/// thermodynamic limit.
pub fn max_depth(n: Option<usize>, p: f64, c: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must lie in (0, 1)"));
    }
    if !(c > 0.0) {
        return Err(Error::param("C", "must be positive"));
    }
    let per_layer = (1.0 / (1.0 - p)).ln();
    let bound = match n {
        Some(n) => (n as f64 * 2f64.ln() + (1.0 / c).ln()) / (n as f64 * per_layer),
        None => 2f64.ln() / per_layer,
    };
    Ok(bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub n: usize,
    pub depth: usize,
    pub p: f64,
    pub p_m: f64,
    /// Target statistical error relative to the signal.
    pub epsilon: f64,
    pub shots: f64,
}

/// Shots needed to resolve the echo at depth `D`:
/// `(1-p)^{-2ND} (1-p_m)^{-2N} / epsilon^2`, rounded up.
pub fn sample_budget(n: usize, depth: usize, p: f64, p_m: f64, epsilon: f64) -> Result<SampleBudget> {
    for (name, v) in [("p", p), ("p_m", p_m)] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::param(name, "must lie in [0, 1)"));
        }
    }
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    let log_shots = -2.0 * (n * depth) as f64 * (1.0 - p).ln() - 2.0 * n as f64 * (1.0 - p_m).ln() - 2.0 * epsilon.ln();
    Ok(SampleBudget {
        n,
        depth,
        p,
        p_m,
        epsilon,
        shots: log_shots.exp().ceil().max(1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedSeries {
    pub values: Vec<f64>,
    /// Indices of the first point after each sign change.
    pub flips: Vec<usize>,
    /// Magnitude minima where a flip would be smoother but the magnitude
    /// stayed above threshold; the sign was kept.
    pub ambiguous: Vec<usize>,
}

/// Recovers signed expectations from magnitudes `|<A>(t_k)|` assuming a
/// smooth signal.
///
/// At each interior magnitude minimum `k` three sign patterns for
/// `(k-1, k, k+1)` are compared: no flip, flip before `k`, flip after `k`.
/// The one with the smallest second difference wins, but a flip is only
/// applied when `|<A>(t_k)|` is within `threshold * stderr[k]` of zero.
pub fn track_sign(magnitudes: &[f64], stderrs: &[f64], initial: f64, threshold: f64) -> Result<SignedSeries> {
    if initial == 0.0 || !initial.is_finite() {
        return Err(Error::UndefinedInitialSign);
    }
    if stderrs.len() != magnitudes.len() {
        return Err(Error::DimensionMismatch {
            expected: magnitudes.len(),
            found: stderrs.len(),
        });
    }
    let m = magnitudes;
    let mut sign = initial.signum();
    let mut signs = vec![sign; m.len()];
    let mut flips = Vec::new();
    let mut ambiguous = Vec::new();
    let mut k = 1;
    while k + 1 < m.len() {
        if !(m[k] < m[k - 1] && m[k] <= m[k + 1]) {
            signs[k] = sign;
            k += 1;
            continue;
        }
        let keep = (m[k - 1] - 2.0 * m[k] + m[k + 1]).abs();
        let before = (m[k - 1] + 2.0 * m[k] - m[k + 1]).abs();
        let after = (m[k - 1] - 2.0 * m[k] - m[k + 1]).abs();
        let flip_best = before.min(after);
        if flip_best < keep {
            if m[k] <= threshold * stderrs[k] {
                let at = if before < after { k } else { k + 1 };
                signs[k] = if at == k { -sign } else { sign };
                sign = -sign;
                flips.push(at);
            } else {
                ambiguous.push(k);
                signs[k] = sign;
            }
        } else {
            signs[k] = sign;
        }
        k += 1;
    }
    for s in signs.iter_mut().skip(k) {
        *s = sign;
    }
    Ok(SignedSeries {
        values: m.iter().zip(&signs).map(|(v, s)| v * s).collect(),
        flips,
        ambiguous,
    })
}

/// One row of a mitigation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationRecord {
    /// Stroboscopic time in units of `1/J`.
    pub t: f64,
    /// Layers in the echo circuit.
    pub depth: usize,
    pub l_id: Estimate,
    pub l_a: Estimate,
    pub rescaled: Rescaled,
    /// Mitigation error against a noiseless reference, when one is given.
    pub s: Option<f64>,
}

impl MitigationRecord {
    pub fn new(t: f64, depth: usize, l_a: Estimate, l_id: Estimate, reference: Option<f64>) -> Result<Self> {
        let rescaled = rescale(l_a, l_id)?;
        Ok(MitigationRecord {
            t,
            depth,
            l_id,
            l_a,
            rescaled,
            s: reference.map(|r| mitigation_error_s(rescaled.mean, r)),
        })
    }
}

/// Root mean square of `s` over records whose depth lies within
/// `half_width` of each record's depth.
pub fn moving_rms(depths: &[usize], s: &[f64], half_width: usize) -> Vec<f64> {
    depths
        .iter()
        .map(|&d| {
            let (sum, count) = depths
                .iter()
                .zip(s)
                .filter(|(&e, _)| e.abs_diff(d) <= half_width)
                .fold((0.0, 0usize), |(acc, c), (_, v)| (acc + v * v, c + 1));
            (sum / count as f64).sqrt()
        })
        .collect()
}

/// Time average over steps of `L_A / L_1`, with the stderr propagated to
/// first order from per-trajectory outcomes.
///
/// `l_a[n]` and `l_id[n]` hold outcomes for step `n`; the same trajectory
/// index is shared across steps, which the propagation accounts for. The
/// two ensembles are independent of each other.
pub fn time_averaged_rescale(l_a: &[TrajectoryEnsemble], l_id: &[TrajectoryEnsemble]) -> Result<Rescaled> {
    if l_a.len() != l_id.len() || l_a.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: l_a.len().max(1),
            found: l_id.len(),
        });
    }
    let outcomes = |e: &TrajectoryEnsemble| -> Result<Vec<f64>> {
        e.outcomes
            .clone()
            .ok_or_else(|| Error::param("outcomes", "per-trajectory outcomes are required"))
    };
    let steps = l_a.len() as f64;
    let mut mean = 0.0;
    let mut reliable = true;
    let mut infl_a: Vec<f64> = Vec::new();
    let mut infl_id: Vec<f64> = Vec::new();
    for (a, b) in l_a.iter().zip(l_id) {
        if !(b.mean > 0.0) {
            return Err(Error::NonPositiveDenominator(b.mean));
        }
        reliable &= b.mean >= RELIABILITY_CUTOFF;
        let ratio = a.mean / b.mean;
        mean += ratio / steps;
        let (xa, xb) = (outcomes(a)?, outcomes(b)?);
        if infl_a.is_empty() {
            infl_a = vec![0.0; xa.len()];
            infl_id = vec![0.0; xb.len()];
        }
        if xa.len() != infl_a.len() || xb.len() != infl_id.len() {
            return Err(Error::param("outcomes", "trajectory counts differ between steps"));
        }
        for (acc, x) in infl_a.iter_mut().zip(&xa) {
            *acc += x / (b.mean * steps);
        }
        for (acc, x) in infl_id.iter_mut().zip(&xb) {
            *acc -= ratio * x / (b.mean * steps);
        }
    }
    let (_, se_a) = mean_and_stderr(&infl_a);
    let (_, se_id) = mean_and_stderr(&infl_id);
    Ok(Rescaled {
        mean: mean.max(0.0),
        stderr: (se_a * se_a + se_id * se_id).sqrt(),
        reliable,
    })
}
