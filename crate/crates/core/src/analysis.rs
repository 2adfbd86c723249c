//! Floquet time averages, plateau detection and the noise-heating model.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Observable;
use crate::state::PureState;
use crate::trotter::TrotterSchedule;

/// Default plateau tolerance.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Default end of the plateau search window, in units of `1/J`.
pub const DEFAULT_T_CAP: f64 = 1e3;

/// Above this many stroboscopic points plateau starts are searched on a
/// thinned grid.
pub const EXACT_SEARCH_LIMIT: usize = 10_000;

/// Instantaneous values `<A>(m tau)` and their running averages
/// `(1/(m+1)) sum_{n<=m} <A>(n tau)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAverageSeries {
    pub tau: f64,
    /// Operator norm of the observable, used for tolerances.
    pub norm: f64,
    pub instantaneous: Vec<f64>,
    pub running: Vec<f64>,
}

impl TimeAverageSeries {
    pub fn from_instantaneous(tau: f64, norm: f64, instantaneous: Vec<f64>) -> Self {
        let mut running = Vec::with_capacity(instantaneous.len());
        let mut sum = 0.0;
        for (m, v) in instantaneous.iter().enumerate() {
            sum += v;
            running.push(sum / (m + 1) as f64);
        }
        TimeAverageSeries {
            tau,
            norm,
            instantaneous,
            running,
        }
    }

    pub fn len(&self) -> usize {
        self.running.len()
    }

    pub fn is_empty(&self) -> bool {
        self.running.is_empty()
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.tau
    }

    /// Running average at the last stroboscopic time not after `t`.
    pub fn running_at(&self, t: f64) -> Option<f64> {
        let m = (t / self.tau + 1e-9).floor() as usize;
        self.running.get(m).copied()
    }
}

/// Running averages up to `m_max` steps from a single forward sweep.
pub fn floquet_time_average(
    psi: &PureState,
    obs: &Observable,
    schedule: &TrotterSchedule,
    m_max: usize,
) -> Result<TimeAverageSeries> {
    psi.ensure_qubits(schedule.num_qubits())?;
    obs.validate_for(schedule.num_qubits())?;
    let mut cur = psi.clone();
    let mut values = Vec::with_capacity(m_max + 1);
    values.push(obs.expectation(&cur));
    for _ in 0..m_max {
        schedule.apply_step(&mut cur)?;
        values.push(obs.expectation(&cur));
    }
    Ok(TimeAverageSeries::from_instantaneous(
        schedule.tau(),
        obs.norm(schedule.num_qubits()),
        values,
    ))
}

/// Number of steps needed for a series to reach `t_cap`.
pub fn steps_to_cap(tau: f64, t_cap: f64) -> usize {
    (t_cap / tau + 1e-9).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauReport {
    pub found: bool,
    pub t1: f64,
    pub t2: f64,
    pub epsilon: f64,
    /// Running average at `t1`.
    pub value: f64,
    pub truncated_at_cap: bool,
    /// Indices of the window `[start, end)` in the series.
    pub start: usize,
    pub end: usize,
}

impl PlateauReport {
    fn not_found(epsilon: f64) -> Self {
        PlateauReport {
            found: false,
            t1: f64::NAN,
            t2: f64::NAN,
            epsilon,
            value: f64::NAN,
            truncated_at_cap: false,
            start: 0,
            end: 0,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.t2 / self.t1
    }
}

/// Plateau starts examined by the search.
fn start_grid(m: usize) -> Vec<usize> {
    if m <= EXACT_SEARCH_LIMIT {
        return (1..m).collect();
    }
    let mut grid: Vec<usize> = (1..=EXACT_SEARCH_LIMIT / 10).collect();
    let mut a = EXACT_SEARCH_LIMIT / 10;
    loop {
        a = ((a as f64 * 1.001).ceil() as usize).max(a + 1);
        if a >= m {
            break;
        }
        grid.push(a);
    }
    grid
}

/// For each start, the largest end such that `[start, end)` satisfies the
/// tolerance and `end <= m`.
fn maximal_ends(values: &[f64], starts: &[usize], m: usize, tol: f64) -> Vec<usize> {
    let mut ends = Vec::with_capacity(starts.len());
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut b = 0;
    for &a in starts {
        if b < a {
            b = a;
            maxq.clear();
            minq.clear();
        }
        while maxq.front().is_some_and(|&i| i < a) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&i| i < a) {
            minq.pop_front();
        }
        while b < m {
            let v = values[b];
            let hi = maxq.front().map_or(v, |&i| values[i].max(v));
            let lo = minq.front().map_or(v, |&i| values[i].min(v));
            if hi - lo > tol {
                break;
            }
            while maxq.back().is_some_and(|&i| values[i] <= v) {
                maxq.pop_back();
            }
            maxq.push_back(b);
            while minq.back().is_some_and(|&i| values[i] >= v) {
                minq.pop_back();
            }
            minq.push_back(b);
            b += 1;
        }
        ends.push(b);
    }
    ends
}

/// Sparse table for range maxima.
struct RangeMax {
    table: Vec<Vec<f64>>,
}

impl RangeMax {
    fn new(values: Vec<f64>) -> Self {
        let mut table = vec![values];
        let mut width = 1;
        while 2 * width <= table[0].len() {
            let prev = table.last().expect("nonempty");
            let next = (0..prev.len() - width).map(|i| prev[i].max(prev[i + width])).collect();
            table.push(next);
            width *= 2;
        }
        RangeMax { table }
    }

    /// Maximum over `lo..=hi`.
    fn query(&self, lo: usize, hi: usize) -> f64 {
        let k = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
        self.table[k][lo].max(self.table[k][hi + 1 - (1 << k)])
    }
}

/// Every locally maximal plateau of the running average with `t2 <= t_cap`,
/// ordered by start time.
///
/// Windows are stroboscopic index intervals `[a, b)` with `a >= 1` and at
/// least two points. For each start only its longest admissible window can
/// be locally maximal; it is kept when no overlapping admissible window has
/// a strictly larger `t2 / t1`.
pub fn all_plateaus(series: &TimeAverageSeries, epsilon: f64, t_cap: f64) -> Result<Vec<PlateauReport>> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    let m = steps_to_cap(series.tau, t_cap).min(series.len());
    if m < 3 {
        return Ok(Vec::new());
    }
    let tol = epsilon * series.norm;
    let values = &series.running;
    let starts = start_grid(m);
    let ends = maximal_ends(values, &starts, m, tol);
    let ratio: Vec<f64> = starts
        .iter()
        .zip(&ends)
        .map(|(&a, &b)| {
            if b - a >= 2 {
                b as f64 / a as f64
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let rmq = RangeMax::new(ratio.clone());
    let cap_reached = steps_to_cap(series.tau, t_cap) <= series.len();

    let mut out = Vec::new();
    for i in 0..starts.len() {
        if ratio[i] == f64::NEG_INFINITY {
            continue;
        }
        let (a, b) = (starts[i], ends[i]);
        // Overlapping starts: those below b whose own window reaches past a.
        let lo = ends.partition_point(|&e| e <= a);
        let hi = starts.partition_point(|&s| s < b) - 1;
        if rmq.query(lo, hi) > ratio[i] {
            continue;
        }
        out.push(PlateauReport {
            found: true,
            t1: series.time(a),
            t2: series.time(b),
            epsilon,
            value: values[a],
            truncated_at_cap: b == m && cap_reached,
            start: a,
            end: b,
        });
    }
    Ok(out)
}

/// The locally maximal plateau with the largest `t2 / t1` (earliest on
/// ties), or a report with `found == false`.
pub fn detect_plateau(series: &TimeAverageSeries, epsilon: f64, t_cap: f64) -> Result<PlateauReport> {
    let all = all_plateaus(series, epsilon, t_cap)?;
    let mut best: Option<PlateauReport> = None;
    for p in all {
        if best.as_ref().is_none_or(|b| p.ratio() > b.ratio()) {
            best = Some(p);
        }
    }
    Ok(best.unwrap_or_else(|| PlateauReport::not_found(epsilon)))
}

/// Plateau value `<A>_{t1}` of the prethermal plateau.
pub fn solve_pevp(
    psi: &PureState,
    obs: &Observable,
    schedule: &TrotterSchedule,
    epsilon: f64,
    t_cap: f64,
) -> Result<f64> {
    let m = steps_to_cap(schedule.tau(), t_cap);
    let series = floquet_time_average(psi, obs, schedule, m)?;
    let report = detect_plateau(&series, epsilon, t_cap)?;
    if !report.found {
        return Err(Error::NoPlateau);
    }
    Ok(report.value)
}

/// Plateau summary for one drive period in a multi-frequency scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauDiagnostic {
    pub tau: f64,
    pub plateau: PlateauReport,
    /// Whether the plateau value is within tolerance of the
    /// infinite-temperature value.
    pub at_infinite_temperature: bool,
}

/// Evidence for the prethermal character of plateaus across drive periods.
/// The criteria are asymptotic, so this is a report rather than a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrethermalDiagnostics {
    pub entries: Vec<TauDiagnostic>,
    /// Least-squares slope of `ln(t2/t1)` against `1/tau` over plateaus
    /// away from infinite temperature; `None` with fewer than two.
    pub log_ratio_slope: Option<f64>,
    /// `t1` of those plateaus, ordered by decreasing `tau`.
    pub t1_trend: Vec<f64>,
}

pub fn prethermal_diagnostics(
    psi: &PureState,
    obs: &Observable,
    schedules: &[TrotterSchedule],
    epsilon: f64,
    t_cap: f64,
) -> Result<PrethermalDiagnostics> {
    let mut entries = schedules
        .par_iter()
        .map(|s| {
            let series = floquet_time_average(psi, obs, s, steps_to_cap(s.tau(), t_cap))?;
            let plateau = detect_plateau(&series, epsilon, t_cap)?;
            let inf = obs.infinite_temperature_value(s.num_qubits());
            let at_infinite_temperature = plateau.found && (plateau.value - inf).abs() <= epsilon * series.norm;
            Ok(TauDiagnostic {
                tau: s.tau(),
                plateau,
                at_infinite_temperature,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| b.tau.partial_cmp(&a.tau).unwrap_or(std::cmp::Ordering::Equal));
    let pre: Vec<&TauDiagnostic> = entries
        .iter()
        .filter(|e| e.plateau.found && !e.at_infinite_temperature)
        .collect();
    let log_ratio_slope = if pre.len() >= 2 {
        let xs: Vec<f64> = pre.iter().map(|e| 1.0 / e.tau).collect();
        let ys: Vec<f64> = pre.iter().map(|e| e.plateau.ratio().ln()).collect();
        Some(linear_fit(&xs, &ys).0)
    } else {
        None
    };
    let t1_trend = pre.iter().map(|e| e.plateau.t1).collect();
    Ok(PrethermalDiagnostics {
        entries,
        log_ratio_slope,
        t1_trend,
    })
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Mean energy after `depth` noisy layers in the random-walk heating model:
/// `sinh(g E / (N sigma^2)) = sinh(g E0 / (N sigma^2)) exp(-p g^2 D / sigma^2)`.
pub fn heating_model_energy(e0: f64, g: f64, sigma: f64, n: usize, p: f64, depth: f64) -> Result<f64> {
    if !(g > 0.0) || !(sigma > 0.0) {
        return Err(Error::param("g, sigma", "must be positive"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must lie in (0, 1)"));
    }
    let s2 = sigma * sigma;
    let a = g / (n as f64 * s2);
    let b = p * g * g / s2;
    Ok(heating_curve(e0, a, b, depth))
}

/// `E(D) = asinh(sinh(a E0) exp(-b D)) / a`, continuous in `a -> 0`.
fn heating_curve(e0: f64, a: f64, b: f64, depth: f64) -> f64 {
    let decay = (-b * depth).exp();
    if a * e0.abs() < 1e-8 {
        return e0 * decay;
    }
    ((a * e0).sinh() * decay).asinh() / a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingFit {
    /// `g / (N sigma^2)`.
    pub a: f64,
    /// `p g^2 / sigma^2`.
    pub b: f64,
    /// Recovered step size, when `a > 0`.
    pub g: Option<f64>,
    pub sigma: Option<f64>,
    pub rms_residual: f64,
}

impl HeatingFit {
    pub fn energy(&self, e0: f64, depth: f64) -> f64 {
        heating_curve(e0, self.a, self.b, depth)
    }
}

fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares fit of the heating model to `(depth, energy)` samples with
/// known start energy `e0`, `n` qubits and error rate `p`.
pub fn fit_heating_model(samples: &[(f64, f64)], e0: f64, n: usize, p: f64) -> Result<HeatingFit> {
    if samples.len() < 2 {
        return Err(Error::param("samples", "need at least two points"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must lie in (0, 1)"));
    }
    if e0 == 0.0 {
        return Err(Error::param("e0", "a zero start energy does not constrain the model"));
    }
    let max_d = samples.iter().map(|s| s.0).fold(0.0, f64::max).max(1.0);
    let sse = |a: f64, b: f64| -> f64 {
        samples
            .iter()
            .map(|&(d, e)| (heating_curve(e0, a, b, d) - e).powi(2))
            .sum()
    };
    let a_hi = 20.0 / e0.abs();
    let b_hi = 50.0 / max_d;
    let best_b = |a: f64| golden_min(0.0, b_hi, |b| sse(a, b));
    let a = golden_min(0.0, a_hi, |a| sse(a, best_b(a)));
    let b = best_b(a);
    let rms_residual = (sse(a, b) / samples.len() as f64).sqrt();
    let (g, sigma) = if a > 1e-12 && b > 0.0 {
        let g = b / (p * n as f64 * a);
        (Some(g), Some((g / (n as f64 * a)).sqrt()))
    } else {
        (None, None)
    };
    Ok(HeatingFit {
        a,
        b,
        g,
        sigma,
        rms_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::model::ProductStateSpec;
    use proptest::prelude::*;

    fn series(values: Vec<f64>) -> TimeAverageSeries {
        // treat the given values as the running averages directly
        TimeAverageSeries {
            tau: 1.0,
            norm: 1.0,
            instantaneous: values.clone(),
            running: values,
        }
    }

    /// Every locally maximal window by exhaustive search.
    fn brute_force(values: &[f64], m: usize, tol: f64) -> Vec<(usize, usize)> {
        let ok = |a: usize, b: usize| {
            let w = &values[a..b];
            let hi = w.iter().copied().fold(f64::MIN, f64::max);
            let lo = w.iter().copied().fold(f64::MAX, f64::min);
            hi - lo <= tol
        };
        let mut valid = Vec::new();
        for a in 1..m {
            for b in a + 2..=m {
                if ok(a, b) {
                    valid.push((a, b));
                }
            }
        }
        let mut out: Vec<(usize, usize)> = valid
            .iter()
            .copied()
            .filter(|&(a, b)| {
                let r = b as f64 / a as f64;
                !valid.iter().any(|&(c, d)| c < b && a < d && d as f64 / c as f64 > r)
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn running_average_matches_direct_sums() {
        let values: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin()).collect();
        let s = TimeAverageSeries::from_instantaneous(0.5, 1.0, values.clone());
        for m in 0..50 {
            let direct = values[..=m].iter().sum::<f64>() / (m + 1) as f64;
            assert!((s.running[m] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_steps_gives_initial_expectation() {
        let lat = Lattice::new(2, 2).unwrap();
        let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0).unwrap();
        let psi = ProductStateSpec::x_plus().state(&lat);
        let s = floquet_time_average(&psi, &Observable::InplaneMagnetization, &sched, 0).unwrap();
        assert_eq!(s.running, vec![1.25]);
    }

    #[test]
    fn eigenstate_gives_constant_series() {
        let lat = Lattice::new(2, 2).unwrap();
        let sched = TrotterSchedule::from_omega(&lat, 1.0, 3.0).unwrap();
        let s = floquet_time_average(&PureState::zero(4), &Observable::InplaneMagnetization, &sched, 30).unwrap();
        assert!(s.running.iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn constant_series_spans_the_search_window() {
        let s = series(vec![0.3; 101]);
        let p = detect_plateau(&s, 0.05, 100.0).unwrap();
        assert!(p.found && p.truncated_at_cap);
        assert_eq!((p.t1, p.t2), (1.0, 100.0));
        assert_eq!(p.value, 0.3);
        assert_eq!(all_plateaus(&s, 0.05, 100.0).unwrap().len(), 1);
    }

    #[test]
    fn short_series_is_not_truncated() {
        let s = series(vec![0.3; 20]);
        let p = detect_plateau(&s, 0.05, 100.0).unwrap();
        assert!(p.found && !p.truncated_at_cap);
        assert_eq!(p.end, 20);
    }

    #[test]
    fn steep_ramp_has_no_plateau() {
        let s = series((0..40).map(|k| k as f64).collect());
        assert!(!detect_plateau(&s, 0.05, 40.0).unwrap().found);
    }

    #[test]
    fn uniform_ramp_prefers_the_earliest_window() {
        // drop of 0.02 per step with tolerance 0.05: windows of three points
        let s = series((0..60).map(|k| 1.0 - 0.02 * k as f64).collect());
        let p = detect_plateau(&s, 0.05, 60.0).unwrap();
        assert_eq!((p.start, p.end), (1, 4));
        let all: Vec<_> = all_plateaus(&s, 0.05, 60.0)
            .unwrap()
            .iter()
            .map(|p| (p.start, p.end))
            .collect();
        assert_eq!(all, brute_force(&s.running, 60, 0.05));
    }

    #[test]
    fn reported_window_satisfies_tolerance() {
        let values: Vec<f64> = (0..300).map(|k| 0.5 + 0.3 * (-(k as f64) / 40.0).exp()).collect();
        let s = series(values);
        let p = detect_plateau(&s, 0.05, 300.0).unwrap();
        let w = &s.running[p.start..p.end];
        let spread = w.iter().copied().fold(f64::MIN, f64::max) - w.iter().copied().fold(f64::MAX, f64::min);
        assert!(spread <= 0.05);
    }

    #[test]
    fn thinned_grid_still_finds_long_plateaus() {
        let values: Vec<f64> = (0..30_001)
            .map(|k| if k < 50 { 1.0 - k as f64 * 0.01 } else { 0.5 })
            .collect();
        let s = series(values);
        let p = detect_plateau(&s, 0.05, 30_000.0).unwrap();
        assert!(p.found && p.truncated_at_cap);
        assert!(p.t1 <= 50.0);
    }

    #[test]
    fn pevp_of_eigenstate() {
        let lat = Lattice::new(2, 2).unwrap();
        let sched = TrotterSchedule::from_omega(&lat, 1.0, 8.0).unwrap();
        let v = solve_pevp(
            &PureState::zero(4),
            &Observable::InplaneMagnetization,
            &sched,
            0.05,
            50.0,
        )
        .unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn heating_model_limits() {
        assert_eq!(heating_model_energy(0.0, 1.0, 1.0, 12, 0.01, 50.0).unwrap(), 0.0);
        let mut prev = f64::NEG_INFINITY;
        for d in [0.0, 10.0, 100.0, 1000.0, 1e5] {
            let e = heating_model_energy(-6.0, 0.5, 1.0, 12, 0.01, d).unwrap();
            assert!(e > prev && e <= 0.0);
            prev = e;
        }
        assert!(prev.abs() < 1e-6);
        assert!(heating_model_energy(-1.0, 0.0, 1.0, 12, 0.01, 1.0).is_err());
    }

    #[test]
    fn heating_model_linear_regime() {
        let (g, sigma, n, p) = (0.2, 1.0, 12, 0.01);
        let e0 = 0.04 * n as f64 * sigma * sigma / g; // g E0 / (N sigma^2) = 0.04
        for d in [5.0, 50.0, 500.0] {
            let e = heating_model_energy(e0, g, sigma, n, p, d).unwrap();
            let lin = e0 * (-p * g * g * d / (sigma * sigma)).exp();
            assert!((e / lin - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn heating_fit_recovers_parameters() {
        let (g, sigma, n, p, e0) = (0.8, 0.9, 12, 0.003, -5.0);
        let samples: Vec<(f64, f64)> = (0..20)
            .map(|k| {
                let d = 40.0 * k as f64;
                (d, heating_model_energy(e0, g, sigma, n, p, d).unwrap())
            })
            .collect();
        let fit = fit_heating_model(&samples, e0, n, p).unwrap();
        assert!(fit.rms_residual < 1e-6);
        assert!((fit.g.unwrap() / g - 1.0).abs() < 0.02, "{fit:?}");
        assert!((fit.sigma.unwrap() / sigma - 1.0).abs() < 0.02, "{fit:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn search_matches_brute_force(values in prop::collection::vec(0.0f64..1.0, 3..40), eps in 0.05f64..0.6) {
            let m = values.len();
            let s = series(values);
            let got: Vec<_> = all_plateaus(&s, eps, m as f64).unwrap().iter().map(|p| (p.start, p.end)).collect();
            prop_assert_eq!(got, brute_force(&s.running, m, eps));
        }

        #[test]
        fn reports_satisfy_the_tolerance(values in prop::collection::vec(0.0f64..1.0, 3..60), eps in 0.05f64..0.6) {
            let m = values.len();
            let s = series(values);
            for p in all_plateaus(&s, eps, m as f64).unwrap() {
                let w = &s.running[p.start..p.end];
                let spread = w.iter().copied().fold(f64::MIN, f64::max) - w.iter().copied().fold(f64::MAX, f64::min);
                prop_assert!(spread <= eps * s.norm);
            }
        }
    }
}
