//! Synchronisation diagnostics: observed frequencies from zero crossings,
//! the Kuramoto order parameter, the two cost functionals, and
//! Arnold-tongue sweeps.

use alloc::vec::Vec;

use crate::dynsys::{integrate, NetworkSpec, OscillatorParams, Tolerances, Trajectory};
use crate::parallel::Parallelism;
use crate::{Error, Result, WORST_COST};

/// Interpolated times at which `x − mean` changes sign, looking only at
/// samples from index `start` on.
pub fn zero_crossings(t: &[f64], x: &[f64], mean: f64, start: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for i in start..x.len().saturating_sub(1) {
        let (a, b) = (x[i] - mean, x[i + 1] - mean);
        if a.is_sign_negative() != b.is_sign_negative() {
            out.push(t[i] - a * (t[i + 1] - t[i]) / (b - a));
        }
    }
    out
}

/// Observed angular frequency of a sampled signal.
///
/// Crossings of `x − ⟨x⟩`, with `⟨x⟩` the mean of the whole series, are
/// located after dropping the leading `transient_fraction` of samples.
/// With crossing times `t_1 … t_m` in an observation window of length `T`,
/// `Ω = π(m − 1)/(t_m − t_1)` when the crossings span at least half the
/// window, and the plain count `Ω = πm/T` otherwise (an oscillation that
/// dies out, or a few crossings of noise near a fixed point).
pub fn frequency_from_series(t: &[f64], x: &[f64], transient_fraction: f64) -> Result<f64> {
    if t.len() != x.len() {
        return Err(Error::Dimension { expected: t.len(), got: x.len() });
    }
    if x.is_empty() {
        return Err(Error::TooFewCrossings(0));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let start = (transient_fraction.clamp(0.0, 1.0) * x.len() as f64) as usize;
    let tc = zero_crossings(t, x, mean, start);
    let m = tc.len();
    if m < 2 || !(tc[m - 1] > tc[0]) {
        return Err(Error::TooFewCrossings(m));
    }
    let window = t[t.len() - 1] - t[start.min(t.len() - 1)];
    let span = tc[m - 1] - tc[0];
    if span >= 0.5 * window {
        Ok(core::f64::consts::PI * (m - 1) as f64 / span)
    } else {
        Ok(core::f64::consts::PI * m as f64 / window)
    }
}

/// Observed frequency of oscillator `i` of a trajectory.
pub fn observed_frequency(traj: &Trajectory, oscillator: usize, transient_fraction: f64) -> Result<f64> {
    if traj.diverged {
        return Err(Error::Diverged);
    }
    if oscillator >= traj.oscillators() {
        return Err(Error::Dimension { expected: traj.oscillators(), got: oscillator });
    }
    frequency_from_series(&traj.t, &traj.x(oscillator), transient_fraction)
}

/// Transient discarded before frequency counting.
pub const DEFAULT_TRANSIENT: f64 = 0.1;

/// `(Ω0, Ω1)`, with a channel that never crosses its mean read as `Ω = 0`.
/// `None` if the trajectory diverged.
pub fn frequency_pair(traj: &Trajectory, transient_fraction: f64) -> Option<(f64, f64)> {
    if traj.diverged {
        return None;
    }
    let w = |i| match observed_frequency(traj, i, transient_fraction) {
        Ok(w) => Some(w),
        Err(Error::TooFewCrossings(_)) => Some(0.0),
        Err(_) => None,
    };
    Some((w(0)?, w(1)?))
}

/// `|Ω0 − Ω1|`; diverged or non-finite runs cost [`WORST_COST`].
pub fn cost_sync(traj: &Trajectory, transient_fraction: f64) -> f64 {
    match frequency_pair(traj, transient_fraction) {
        Some((w0, w1)) if (w0 - w1).is_finite() => (w0 - w1).abs(),
        _ => WORST_COST,
    }
}

/// `exp(−|Ω0 − Ω1|)`, which penalises synchronisation; diverged runs cost
/// [`WORST_COST`].
pub fn cost_desync(traj: &Trajectory, transient_fraction: f64) -> f64 {
    match cost_sync(traj, transient_fraction) {
        d if d >= WORST_COST => WORST_COST,
        d => libm::exp(-d),
    }
}

/// Unwraps a phase series in place so consecutive samples differ by at
/// most π.
pub fn unwrap_phase(phase: &mut [f64]) {
    use core::f64::consts::PI;
    let mut offset = 0.0;
    for i in 1..phase.len() {
        let raw = phase[i] + offset;
        let mut d = raw - phase[i - 1];
        while d > PI {
            offset -= 2.0 * PI;
            d -= 2.0 * PI;
        }
        while d < -PI {
            offset += 2.0 * PI;
            d += 2.0 * PI;
        }
        phase[i] = phase[i - 1] + d;
    }
}

/// `r(t) = |(1/N) Σ_j e^{iφ_j(t)}|` from per-oscillator phases.
pub fn order_from_phases(phases: &[Vec<f64>]) -> Vec<f64> {
    let n = phases.len() as f64;
    let len = phases.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|j| {
            let (mut re, mut im) = (0.0, 0.0);
            for p in phases {
                re += libm::cos(p[j]);
                im += libm::sin(p[j]);
            }
            (libm::sqrt(re * re + im * im) / n).min(1.0)
        })
        .collect()
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    (m, libm::sqrt(var))
}

/// The slice with `fraction` of samples removed from each end.
pub fn trim_edges(v: &[f64], fraction: f64) -> &[f64] {
    let cut = (fraction * v.len() as f64) as usize;
    if 2 * cut >= v.len() {
        return &v[0..0];
    }
    &v[cut..v.len() - cut]
}

/// Fraction cut from each end of an analytic-signal series before taking
/// statistics. The FFT-based transform rings at the window edges.
pub const EDGE_TRIM: f64 = 0.05;

/// Mean and standard deviation of `r` over the final `tail` fraction of
/// the series after the [`EDGE_TRIM`] cut.
pub fn order_tail_stats(r: &[f64], tail: f64) -> (f64, f64) {
    let core = trim_edges(r, EDGE_TRIM);
    let from = core.len() - ((tail.clamp(0.0, 1.0) * core.len() as f64) as usize).min(core.len());
    mean_std(&core[from..])
}

/// Unwrapped continuous phase of every oscillator.
#[cfg(feature = "std")]
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub t: Vec<f64>,
    pub phases: Vec<Vec<f64>>,
}

/// Analytic signal of the mean-removed series via a full-window FFT:
/// negative frequencies zeroed, positive ones doubled.
#[cfg(feature = "std")]
pub fn analytic_signal(x: &[f64]) -> Vec<rustfft::num_complex::Complex64> {
    use rustfft::num_complex::Complex64;
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
    let mut planner = rustfft::FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (i, z) in buf.iter_mut().enumerate().skip(1) {
        if i < half || (i == half && n % 2 == 1) {
            *z *= 2.0;
        } else if i > half {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    buf
}

/// Phases from the analytic signal of each oscillator's position.
#[cfg(feature = "std")]
pub fn phase_series(traj: &Trajectory) -> Result<PhaseSeries> {
    if traj.diverged {
        return Err(Error::Diverged);
    }
    let mut phases = Vec::with_capacity(traj.oscillators());
    for i in 0..traj.oscillators() {
        let x = traj.x(i);
        let (_, sd) = mean_std(&x);
        if !(sd > 1e-12) {
            return Err(Error::DegenerateSignal(i));
        }
        let mut ph: Vec<f64> = analytic_signal(&x).iter().map(|z| z.im.atan2(z.re)).collect();
        unwrap_phase(&mut ph);
        phases.push(ph);
    }
    Ok(PhaseSeries { t: traj.t.clone(), phases })
}

/// Kuramoto order parameter `r(t)` of a trajectory with `N ≥ 2`.
#[cfg(feature = "std")]
pub fn kuramoto_order(traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.oscillators() < 2 {
        return Err(Error::Dimension { expected: 2, got: traj.oscillators() });
    }
    Ok(order_from_phases(&phase_series(traj)?.phases))
}

/// Fixed parts of an uncontrolled pair used by a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetup {
    pub omega0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub init: [f64; 4],
    pub t0: f64,
    pub tn: f64,
    pub n: usize,
    pub tol: Tolerances,
    pub transient: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub delta_omega: f64,
    pub c: f64,
    /// `Ω1 − Ω0`; NaN if the run diverged.
    pub delta_big_omega: f64,
    pub synchronized: bool,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Row-major over `(c, Δω)`: all detunings for the first `c`, then the next.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn get(&self, delta_omega: f64, c: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| (p.delta_omega - delta_omega).abs() < 1e-12 && (p.c - c).abs() < 1e-12)
    }
}

/// Integrates the uncontrolled pair at one `(Δω, c)` and measures `Ω1 − Ω0`.
pub fn sweep_point(setup: &SweepSetup, delta_omega: f64, c: f64) -> SweepPoint {
    let osc = |omega| OscillatorParams { omega, alpha: setup.alpha, beta: setup.beta };
    let spec = NetworkSpec::diffusive_pair(osc(setup.omega0), osc(setup.omega0 + delta_omega), c);
    let failed = SweepPoint { delta_omega, c, delta_big_omega: f64::NAN, synchronized: false, diverged: true };
    let Ok(traj) = integrate(&spec, &setup.init, setup.t0, setup.tn, setup.n, &setup.tol) else {
        return failed;
    };
    match frequency_pair(&traj, setup.transient) {
        Some((w0, w1)) => {
            let d = w1 - w0;
            SweepPoint { delta_omega, c, delta_big_omega: d, synchronized: d.abs() < setup.threshold, diverged: false }
        }
        None => failed,
    }
}

/// Sweeps every `(Δω, c)` pair. Output order is fixed regardless of `par`.
pub fn arnold_sweep<P: Parallelism>(setup: &SweepSetup, delta_omegas: &[f64], cs: &[f64], par: &P) -> SweepResult {
    let grid: Vec<(f64, f64)> = cs.iter().flat_map(|&c| delta_omegas.iter().map(move |&d| (d, c))).collect();
    SweepResult { points: par.map(&grid, |&(d, c)| sweep_point(setup, d, c)) }
}

/// `n` points symmetric about zero on `[−half, half]`, with an exact zero
/// in the middle when `n` is odd.
pub fn symmetric_range(half: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..n)
            .map(|i| {
                let num = 2 * i as i64 - (n as i64 - 1);
                num as f64 / (n - 1) as f64 * half
            })
            .collect(),
    }
}
