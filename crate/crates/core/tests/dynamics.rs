use std::f64::consts::PI;

use proptest::prelude::*;
use synctrl_core::analysis::{
    cost_desync, cost_sync, frequency_from_series, kuramoto_order, mean_std, observed_frequency, order_from_phases,
    phase_series, trim_edges, DEFAULT_TRANSIENT,
};
use synctrl_core::dynsys::{
    dopri5, integrate, network_rhs, vdp_rhs, Control, NetworkSpec, OscillatorParams, Tolerances, Trajectory,
};
use synctrl_core::expr::{parse, PrimitiveSet};

fn osc(omega: f64) -> OscillatorParams {
    OscillatorParams { omega, alpha: 0.1, beta: 1.0 }
}

fn tol(eps: f64) -> Tolerances {
    Tolerances { abs: eps, rel: eps, ..Tolerances::default() }
}

#[test]
fn vdp_rhs_examples() {
    let p = OscillatorParams { omega: 1.0, alpha: 0.1, beta: 1.0 };
    assert_eq!(vdp_rhs(0.0, 0.0, &p), 0.0);
    assert_eq!(vdp_rhs(1.0, 1.0, &p), -1.0);
    let h = OscillatorParams { omega: 1.3, alpha: 0.0, beta: 1.0 };
    for (x, v) in [(0.3, -2.0), (-1.5, 0.7), (4.0, 4.0)] {
        assert_eq!(vdp_rhs(x, v, &h), -1.3 * 1.3 * x);
    }
}

#[test]
fn network_rhs_matches_averaging_substitution() {
    // with u = -k·ẋ0 the pair must read ẍ0 = −ω0²x0 + a0ẋ0 − b x0²ẋ0 + c0ẋ1, and
    // ẍ1 = −ω1²x1 + a1ẋ1 − b x1²ẋ1 + c1ẋ0
    let (alpha, beta, c, k) = (0.1, 1.0, 0.022, 0.7);
    let ps = PrimitiveSet::two_oscillator_default();
    let ctl = Control::on_velocities(parse("-(k*x0d)", &ps).unwrap(), vec![k]);
    let spec = NetworkSpec::diffusive_pair(osc(1.1), osc(1.2), c).with_control(Some(ctl));
    let (a0, a1, b, c0, c1) = (alpha - c - k, alpha - c, alpha * beta, c, c - k);
    for state in [[0.3, -0.2, 1.1, 0.4], [-1.7, 2.2, 0.05, -0.9]] {
        let mut out = [0.0; 4];
        assert!(network_rhs(&spec, &state, 0.0, &mut out));
        let [x0, v0, x1, v1] = state;
        let want0 = -1.21 * x0 + a0 * v0 - b * x0 * x0 * v0 + c0 * v1;
        let want1 = -1.44 * x1 + a1 * v1 - b * x1 * x1 * v1 + c1 * v0;
        assert!((out[1] - want0).abs() < 1e-14 && (out[3] - want1).abs() < 1e-14, "{out:?}");
        assert_eq!((out[0], out[2]), (v0, v1));
    }

    let free = NetworkSpec::diffusive_pair(osc(1.1), osc(1.2), 0.0);
    let mut out = [0.0; 4];
    network_rhs(&free, &[0.4, 0.5, -0.3, 0.2], 0.0, &mut out);
    assert_eq!(out[1], vdp_rhs(0.4, 0.5, &osc(1.1)));
    assert_eq!(out[3], vdp_rhs(-0.3, 0.2, &osc(1.2)));

    let coupled = NetworkSpec::diffusive_pair(osc(1.0), osc(1.0), 0.3);
    let s = [0.4, 0.5, 0.4, 0.5];
    network_rhs(&coupled, &s, 0.0, &mut out);
    assert_eq!(out[1], vdp_rhs(0.4, 0.5, &osc(1.0)));
}

#[test]
fn non_finite_control_flags_divergence() {
    let ps = PrimitiveSet::two_oscillator_default();
    let ctl = Control::on_velocities(parse("exp(exp(exp(x0d*1000)))", &ps).unwrap(), vec![1.0]);
    let spec = NetworkSpec::diffusive_pair(osc(1.0), osc(1.0), 0.0).with_control(Some(ctl));
    let traj = integrate(&spec, &[1.0, 1.0, 0.0, 0.0], 0.0, 10.0, 100, &Tolerances::default()).unwrap();
    assert!(traj.diverged);
}

fn harmonic_error(eps: f64) -> f64 {
    let tr = dopri5(
        |_, y, dy| {
            dy[0] = y[1];
            dy[1] = -y[0];
            true
        },
        &[1.0, 0.0],
        0.0,
        20.0,
        400,
        &tol(eps),
    )
    .unwrap();
    (0..tr.len())
        .map(|j| {
            let s = tr.sample(j);
            (s[0] - tr.t[j].cos()).abs().max((s[1] + tr.t[j].sin()).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn dopri5_error_follows_tolerance() {
    let errs: Vec<f64> = [1e-5, 1e-7, 1e-9, 1e-11].iter().map(|&e| harmonic_error(e)).collect();
    for (e, eps) in errs.iter().zip([1e-5, 1e-7, 1e-9, 1e-11]) {
        assert!(*e < 200.0 * eps, "{errs:?}");
    }
    for w in errs.windows(2) {
        // a fifth-order method with step ∝ tol^(1/5) gains ~ tol per decade
        assert!(w[1] < w[0] / 10.0, "{errs:?}");
    }
}

#[test]
fn dopri5_time_reversal() {
    let spec = NetworkSpec::diffusive_pair(osc(1.3), osc(1.4), 0.05);
    let y0 = [1.0, 0.0, -0.5, 0.3];
    let f = |_: f64, y: &[f64], dy: &mut [f64]| network_rhs(&spec, y, 0.0, dy);
    let fwd = dopri5(f, &y0, 0.0, 30.0, 10, &tol(1e-11)).unwrap();
    let end = fwd.sample(fwd.len() - 1).to_vec();
    let back = dopri5(f, &end, 30.0, 0.0, 10, &tol(1e-11)).unwrap();
    assert_eq!(back.t[back.len() - 1], 0.0);
    let start = back.sample(back.len() - 1);
    for (a, b) in start.iter().zip(y0) {
        assert!((a - b).abs() < 1e-7, "{start:?}");
    }
}

#[test]
fn swapping_oscillators_swaps_trajectories_bitwise() {
    let a = NetworkSpec::diffusive_pair(osc(1.386), osc(1.426), 0.022);
    let b = NetworkSpec::diffusive_pair(osc(1.426), osc(1.386), 0.022);
    let ta = integrate(&a, &[1.0, 0.2, -0.4, 0.0], 0.0, 200.0, 2000, &Tolerances::default()).unwrap();
    let tb = integrate(&b, &[-0.4, 0.0, 1.0, 0.2], 0.0, 200.0, 2000, &Tolerances::default()).unwrap();
    assert_eq!(ta.t, tb.t);
    for j in 0..ta.len() {
        let (p, q) = (ta.sample(j), tb.sample(j));
        assert_eq!([p[0], p[1], p[2], p[3]].map(f64::to_bits), [q[2], q[3], q[0], q[1]].map(f64::to_bits), "sample {j}");
    }
}

#[test]
fn zero_control_matches_uncontrolled_bitwise() {
    let ps = PrimitiveSet::two_oscillator_default();
    let base = NetworkSpec::diffusive_pair(osc(1.386), osc(1.426), 0.022);
    let zero = base.clone().with_control(Some(Control::on_velocities(parse("0", &ps).unwrap(), vec![1.0])));
    let init = [1.0, 0.0, 1.0, 0.0];
    let a = integrate(&base, &init, 0.0, 300.0, 3000, &Tolerances::default()).unwrap();
    let b = integrate(&zero, &init, 0.0, 300.0, 3000, &Tolerances::default()).unwrap();
    assert_eq!(a.states.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.states.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

fn single_vdp(omega: f64, periods: f64, n: usize) -> Trajectory {
    let p = osc(omega);
    dopri5(
        |_, y, dy| {
            dy[0] = y[1];
            dy[1] = vdp_rhs(y[0], y[1], &p);
            true
        },
        &[0.5, 0.0],
        0.0,
        periods * 2.0 * PI / omega,
        n,
        &tol(1e-10),
    )
    .unwrap()
}

// period from upward crossings of x = 0, located by bisection on the
// dense samples' linear interpolant
fn poincare_frequency(t: &[f64], x: &[f64], skip: usize) -> f64 {
    let ups: Vec<f64> = (skip..x.len() - 1)
        .filter(|&i| x[i] < 0.0 && x[i + 1] >= 0.0)
        .map(|i| {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if x[i] + mid * (x[i + 1] - x[i]) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            t[i] + lo * (t[i + 1] - t[i])
        })
        .collect();
    2.0 * PI * (ups.len() - 1) as f64 / (ups[ups.len() - 1] - ups[0])
}

#[test]
fn vdp_limit_cycle_amplitude_and_frequency() {
    let omega = 4.0f64.ln();
    let tr = single_vdp(omega, 400.0, 400 * 64);
    let x: Vec<f64> = (0..tr.len()).map(|j| tr.sample(j)[0]).collect();
    let tail = &x[x.len() / 2..];
    let amp = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // weakly nonlinear limit cycle: amplitude 2/√β up to O(ε²)
    assert!((amp - 2.0).abs() < 0.01, "{amp}");

    // Lindstedt: ω(1 − ε²/16) with ε = α/ω
    let eps = 0.1 / omega;
    let lindstedt = omega * (1.0 - eps * eps / 16.0);
    let w = frequency_from_series(&tr.t, &x, 0.5).unwrap();
    let wp = poincare_frequency(&tr.t, &x, x.len() / 2);
    assert!((w - lindstedt).abs() < 1e-4 * omega, "{w} vs {lindstedt}");
    assert!((w - wp).abs() < 1e-5 * omega, "{w} vs {wp}");
}

fn sinusoid_pair(w0: f64, w1: f64, n: usize, tn: f64) -> Trajectory {
    let t: Vec<f64> = (0..=n).map(|j| tn * j as f64 / n as f64).collect();
    let mut states = Vec::with_capacity(4 * (n + 1));
    for &s in &t {
        states.extend_from_slice(&[(w0 * s).cos(), -w0 * (w0 * s).sin(), (w1 * s + 0.3).cos(), -w1 * (w1 * s + 0.3).sin()]);
    }
    Trajectory { t, states, dim: 4, diverged: false }
}

#[test]
fn kuramoto_invariants() {
    let locked = sinusoid_pair(1.0, 1.0, 8192, 200.0 * PI);
    let r = kuramoto_order(&locked).unwrap();
    assert!(r.iter().all(|&v| (0.0..=1.0).contains(&v)));
    let (m, sd) = mean_std(trim_edges(&r, 0.05));
    // constant phase offset 0.3: r = |cos(0.15)|
    assert!((m - (0.15f64).cos()).abs() < 1e-3 && sd < 1e-3, "{m} {sd}");

    let drifting = sinusoid_pair(1.0, 1.3, 8192, 200.0 * PI);
    let r = kuramoto_order(&drifting).unwrap();
    let (m, sd) = mean_std(trim_edges(&r, 0.05));
    // r = |cos(Δφ/2)| with Δφ uniform: mean 2/π
    assert!((m - 2.0 / PI).abs() < 0.02 && sd > 0.2, "{m} {sd}");

    let ph = phase_series(&locked).unwrap();
    let p = &ph.phases[0];
    let slope = (p[7000] - p[1000]) / (ph.t[7000] - ph.t[1000]);
    assert!((slope - 1.0).abs() < 1e-3, "{slope}");

    let flat = Trajectory { t: vec![0.0, 1.0, 2.0], states: vec![1.0; 12], dim: 4, diverged: false };
    assert!(kuramoto_order(&flat).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_parameter_bounds(ph in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 20), 2..6)) {
        for r in order_from_phases(&ph) {
            prop_assert!((0.0..=1.0).contains(&r));
        }
        let same: Vec<Vec<f64>> = vec![ph[0].clone(); ph.len()];
        for r in order_from_phases(&same) {
            prop_assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn desync_cost_is_exp_of_sync_cost(w1 in 0.8f64..1.6) {
        let tr = sinusoid_pair(1.2, w1, 6000, 300.0);
        let s = cost_sync(&tr, DEFAULT_TRANSIENT);
        let d = cost_desync(&tr, DEFAULT_TRANSIENT);
        prop_assert!((d - (-s).exp()).abs() < 1e-15);
        let w0 = observed_frequency(&tr, 0, DEFAULT_TRANSIENT).unwrap();
        prop_assert!((w0 - 1.2).abs() < 1e-3);
    }
}
