//! Van der Pol oscillator networks and their numerical integration.
//!
//! A network of `N` oscillators obeys
//!
//! ```text
//! ẍ_i = −ω_i² x_i + α_i ẋ_i (1 − β_i x_i²) + c1 Σ_j κ_ij x_j + c2 Σ_j ε_ij ẋ_j + u(ẋ)
//! ```
//!
//! where the optional control `u` is a global actuator added identically to
//! every oscillator. Integration uses the Dormand–Prince 5(4) pair with
//! Hairer's continuous extension, sampled on a uniform output grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::expr::{ExpressionTree, Node};
use crate::math::sqrt;
use crate::{Error, Result};

/// Parameters of one oscillator `ẍ = −ω²x + αẋ(1 − βx²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Acceleration of a single uncoupled van der Pol oscillator.
#[inline]
pub fn vdp_rhs(x: f64, v: f64, p: &OscillatorParams) -> f64 {
    -p.omega * p.omega * x + p.alpha * v * (1.0 - p.beta * x * x)
}

/// A control law `u` with its constant values. Terminal `i` of the tree
/// reads the velocity of oscillator `inputs[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    pub tree: ExpressionTree,
    pub constants: Vec<f64>,
    pub inputs: Vec<usize>,
}

impl Control {
    /// Control over `(ẋ0, ẋ1)`, the usual argument set for a pair.
    pub fn on_velocities(tree: ExpressionTree, constants: Vec<f64>) -> Self {
        Self { tree, constants, inputs: vec![0, 1] }
    }
}

/// `N` coupled oscillators with position coupling `c1·κ`, velocity
/// coupling `c2·ε` and an optional global control.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub params: Vec<OscillatorParams>,
    pub c1: f64,
    pub c2: f64,
    /// Row-major `N×N`.
    pub kappa: Vec<f64>,
    /// Row-major `N×N`.
    pub epsilon: Vec<f64>,
    pub control: Option<Control>,
}

impl NetworkSpec {
    /// Two oscillators with diffusive velocity coupling `c(ẋ_j − ẋ_i)`.
    pub fn diffusive_pair(p0: OscillatorParams, p1: OscillatorParams, c: f64) -> Self {
        Self {
            params: vec![p0, p1],
            c1: 0.0,
            c2: c,
            kappa: vec![0.0; 4],
            epsilon: vec![-1.0, 1.0, 1.0, -1.0],
            control: None,
        }
    }

    pub fn with_control(mut self, control: Option<Control>) -> Self {
        self.control = control;
        self
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.params.len();
        if n == 0 {
            return Err(Error::InvalidConfig("network has no oscillators".into()));
        }
        if self.kappa.len() != n * n {
            return Err(Error::Dimension { expected: n * n, got: self.kappa.len() });
        }
        if self.epsilon.len() != n * n {
            return Err(Error::Dimension { expected: n * n, got: self.epsilon.len() });
        }
        for p in &self.params {
            if !(p.alpha > 0.0 && p.beta > 0.0) && !(p.alpha == 0.0) {
                return Err(Error::InvalidConfig("oscillator needs α, β > 0 (or α = 0)".into()));
            }
        }
        if let Some(ctl) = &self.control {
            if let Some(&bad) = ctl.inputs.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidConfig(alloc::format!("control input {bad} out of range")));
            }
            for node in ctl.tree.nodes() {
                match *node {
                    Node::Var(i) if i as usize >= ctl.inputs.len() => {
                        return Err(Error::UnboundSymbol(alloc::format!("variable #{i}")))
                    }
                    Node::Const(i) if i as usize >= ctl.constants.len() => {
                        return Err(Error::UnboundSymbol(alloc::format!("constant #{i}")))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// Writes `d/dt (x_i, ẋ_i)` into `out`. Returns `false` if anything is
/// non-finite (the control overflowed, typically).
pub fn network_rhs(spec: &NetworkSpec, state: &[f64], _t: f64, out: &mut [f64]) -> bool {
    let n = spec.params.len();
    let u = match &spec.control {
        Some(ctl) => {
            let mut vars = [0.0f64; 8];
            let u = if ctl.inputs.len() <= vars.len() {
                for (slot, &osc) in vars.iter_mut().zip(&ctl.inputs) {
                    *slot = state[2 * osc + 1];
                }
                ctl.tree.eval_unchecked(&vars[..ctl.inputs.len()], &ctl.constants)
            } else {
                let vars: Vec<f64> = ctl.inputs.iter().map(|&osc| state[2 * osc + 1]).collect();
                ctl.tree.eval_unchecked(&vars, &ctl.constants)
            };
            if !u.is_finite() {
                return false;
            }
            u
        }
        None => 0.0,
    };
    let mut ok = true;
    for i in 0..n {
        let (x, v) = (state[2 * i], state[2 * i + 1]);
        let mut a = vdp_rhs(x, v, &spec.params[i]);
        if spec.c1 != 0.0 {
            let mut s = 0.0;
            for j in 0..n {
                s += spec.kappa[i * n + j] * state[2 * j];
            }
            a += spec.c1 * s;
        }
        if spec.c2 != 0.0 {
            let mut s = 0.0;
            for j in 0..n {
                s += spec.epsilon[i * n + j] * state[2 * j + 1];
            }
            a += spec.c2 * s;
        }
        a += u;
        out[2 * i] = v;
        out[2 * i + 1] = a;
        ok &= a.is_finite() && v.is_finite();
    }
    ok
}

/// Integration tolerances and safety limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
    /// Accepted plus rejected steps before the run is declared diverged.
    pub max_steps: usize,
    /// States beyond this magnitude count as diverged.
    pub max_state: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: 1e-8, rel: 1e-8, max_steps: 5_000_000, max_state: 1e8 }
    }
}

/// Uniformly sampled state history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Sample times; `n + 1` values unless the run diverged.
    pub t: Vec<f64>,
    /// Row-major samples of width `dim`: `x_0, ẋ_0, x_1, ẋ_1, …`.
    pub states: Vec<f64>,
    pub dim: usize,
    pub diverged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn oscillators(&self) -> usize {
        self.dim / 2
    }

    pub fn sample(&self, j: usize) -> &[f64] {
        &self.states[j * self.dim..(j + 1) * self.dim]
    }

    /// Position series of oscillator `i`.
    pub fn x(&self, i: usize) -> Vec<f64> {
        self.states.iter().skip(2 * i).step_by(self.dim).copied().collect()
    }

    /// Velocity series of oscillator `i`.
    pub fn v(&self, i: usize) -> Vec<f64> {
        self.states.iter().skip(2 * i + 1).step_by(self.dim).copied().collect()
    }
}

/// Integrates the network from `init` over `[t0, tn]`, sampling `n + 1`
/// uniformly spaced points.
pub fn integrate(spec: &NetworkSpec, init: &[f64], t0: f64, tn: f64, n: usize, tol: &Tolerances) -> Result<Trajectory> {
    spec.validate()?;
    if init.len() != 2 * spec.len() {
        return Err(Error::Dimension { expected: 2 * spec.len(), got: init.len() });
    }
    dopri5(|t, y, dy| network_rhs(spec, y, t, dy), init, t0, tn, n, tol)
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dormand–Prince integration of `ẏ = f(t, y)` with dense output on the
/// uniform grid `t0 + j(tn − t0)/n`. `f` returns `false` on a non-finite
/// evaluation, which ends the run as diverged. `tn < t0` integrates
/// backwards.
pub fn dopri5<F>(mut f: F, y0: &[f64], t0: f64, tn: f64, n: usize, tol: &Tolerances) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> bool,
{
    if n < 1 || !(tn != t0) || !t0.is_finite() || !tn.is_finite() {
        return Err(Error::InvalidConfig("integration needs t0 ≠ tn and n ≥ 1".into()));
    }
    let dim = y0.len();
    let span = tn - t0;
    let dir = span.signum();
    let grid = |j: usize| if j == n { tn } else { t0 + span * (j as f64) / (n as f64) };

    let mut out = Trajectory { t: Vec::with_capacity(n + 1), states: Vec::with_capacity((n + 1) * dim), dim, diverged: false };
    out.t.push(t0);
    out.states.extend_from_slice(y0);
    if !y0.iter().all(|v| v.is_finite()) {
        out.diverged = true;
        return Ok(out);
    }

    let mut y = y0.to_vec();
    let mut k = [(); 7].map(|_| vec![0.0; dim]);
    let mut ytmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    let mut err_terms = vec![0.0; dim];
    let mut rcont = [(); 5].map(|_| vec![0.0; dim]);

    if !f(t0, &y, &mut k[0]) {
        out.diverged = true;
        return Ok(out);
    }

    let mut t = t0;
    let mut h = initial_step(&mut f, t0, &y, &k[0], dir, span.abs(), tol, &mut ytmp, &mut ynew);
    let mut facold: f64 = 1e-4;
    let mut next = 1usize;
    let mut steps = 0usize;
    let mut reject = false;

    while next <= n {
        steps += 1;
        if steps > tol.max_steps || h.abs() <= 1e-14 * t.abs().max(1.0) || !h.is_finite() {
            out.diverged = true;
            return Ok(out);
        }
        if (t + h - tn) * dir > 0.0 {
            h = tn - t;
        }

        for i in 0..dim {
            ytmp[i] = y[i] + h * A21 * k[0][i];
        }
        let mut ok = f(t + C2 * h, &ytmp, &mut k[1]);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        ok &= f(t + C3 * h, &ytmp, &mut k[2]);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        ok &= f(t + C4 * h, &ytmp, &mut k[3]);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        ok &= f(t + C5 * h, &ytmp, &mut k[4]);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        ok &= f(t + h, &ytmp, &mut k[5]);
        for i in 0..dim {
            ynew[i] = y[i] + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        ok &= f(t + h, &ynew, &mut k[6]);

        let err = if ok {
            for i in 0..dim {
                let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sk = tol.abs + tol.rel * y[i].abs().max(ynew[i].abs());
                err_terms[i] = (e / sk) * (e / sk);
            }
            // order-independent sum, so relabelling oscillators is exact
            err_terms.sort_by(f64::total_cmp);
            sqrt(err_terms.iter().sum::<f64>() / dim as f64)
        } else {
            f64::INFINITY
        };

        if !err.is_finite() {
            // a failed evaluation: retry smaller before giving up
            h *= 0.1;
            reject = true;
            continue;
        }

        let fac11 = crate::math::pow(err, 0.17);
        if err <= 1.0 {
            let fac = (fac11 / crate::math::pow(facold, 0.04) / 0.9).clamp(0.2, 10.0);
            facold = err.max(1e-4);
            for i in 0..dim {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k[6][i] - bspl;
                rcont[4][i] = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
            }
            let t_new = t + h;
            while next <= n && (grid(next) - t_new) * dir <= 0.0 {
                let tg = grid(next);
                let th = (tg - t) / h;
                let th1 = 1.0 - th;
                out.t.push(tg);
                for i in 0..dim {
                    let v = if next == n && tg == t_new {
                        ynew[i]
                    } else {
                        rcont[0][i] + th * (rcont[1][i] + th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])))
                    };
                    out.states.push(v);
                }
                next += 1;
            }
            t = t_new;
            core::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            if y.iter().any(|v| !v.is_finite() || v.abs() > tol.max_state) {
                out.diverged = true;
                return Ok(out);
            }
            let mut hnew = h / fac;
            if reject {
                hnew = if dir > 0.0 { hnew.min(h) } else { hnew.max(h) };
            }
            reject = false;
            h = hnew;
        } else {
            h /= (fac11 / 0.9).min(5.0);
            reject = true;
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    f: &mut F,
    t0: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    span: f64,
    tol: &Tolerances,
    y1: &mut [f64],
    f1: &mut [f64],
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]) -> bool,
{
    let dim = y.len() as f64;
    let (mut dnf, mut dny) = (0.0, 0.0);
    for i in 0..y.len() {
        let sk = tol.abs + tol.rel * y[i].abs();
        dnf += (f0[i] / sk) * (f0[i] / sk);
        dny += (y[i] / sk) * (y[i] / sk);
    }
    let (dnf, dny) = (sqrt(dnf / dim), sqrt(dny / dim));
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * dny / dnf };
    h = h.min(span);
    for i in 0..y.len() {
        y1[i] = y[i] + dir * h * f0[i];
    }
    if !f(t0 + dir * h, y1, f1) {
        return dir * h * 1e-3;
    }
    let mut der2 = 0.0;
    for i in 0..y.len() {
        let sk = tol.abs + tol.rel * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
    }
    let der2 = sqrt(der2 / dim) / h;
    let der12 = der2.max(dnf);
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { crate::math::pow(0.01 / der12, 0.2) };
    dir * (100.0 * h).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, PrimitiveSet};

    fn p(omega: f64, alpha: f64) -> OscillatorParams {
        OscillatorParams { omega, alpha, beta: 1.0 }
    }

    #[test]
    fn vdp_values() {
        assert_eq!(vdp_rhs(0.0, 0.0, &p(1.0, 0.1)), 0.0);
        assert_eq!(vdp_rhs(1.0, 1.0, &p(1.0, 0.1)), -1.0);
        for (x, v) in [(0.3, -2.0), (1.7, 0.4)] {
            assert_eq!(vdp_rhs(x, v, &p(1.3, 0.0)), -1.3 * 1.3 * x);
        }
    }

    #[test]
    fn decoupled_pair_matches_single() {
        let spec = NetworkSpec::diffusive_pair(p(1.0, 0.1), p(1.2, 0.1), 0.0);
        let s = [0.5, -0.2, 1.1, 0.3];
        let mut d = [0.0; 4];
        assert!(network_rhs(&spec, &s, 0.0, &mut d));
        assert_eq!(d[1], vdp_rhs(0.5, -0.2, &spec.params[0]));
        assert_eq!(d[3], vdp_rhs(1.1, 0.3, &spec.params[1]));
    }

    #[test]
    fn equal_states_cancel_coupling() {
        let spec = NetworkSpec::diffusive_pair(p(1.0, 0.1), p(1.0, 0.1), 0.3);
        let s = [0.5, -0.2, 0.5, -0.2];
        let mut d = [0.0; 4];
        network_rhs(&spec, &s, 0.0, &mut d);
        assert_eq!(d[1], vdp_rhs(0.5, -0.2, &spec.params[0]));
    }

    #[test]
    fn control_expands_to_effective_gains() {
        // with u = −k ẋ0: ẍ0 = … + (α − c − k) ẋ0 − αβ x0² ẋ0 + c ẋ1
        let ps = PrimitiveSet::two_oscillator_default();
        let (alpha, c, k) = (0.1, 0.022, 1.0);
        let ctl = Control::on_velocities(parse("-k*x0d", &ps).unwrap(), vec![k]);
        let spec = NetworkSpec::diffusive_pair(p(1.3, alpha), p(1.4, alpha), c).with_control(Some(ctl));
        let s = [0.7, 0.9, -0.4, 1.3];
        let mut d = [0.0; 4];
        network_rhs(&spec, &s, 0.0, &mut d);
        let (a0, a1, b, c0, c1) = (alpha - c - k, alpha - c, alpha, c, c - k);
        let want0 = -1.3 * 1.3 * 0.7 + a0 * 0.9 - b * 0.49 * 0.9 + c0 * 1.3;
        let want1 = -1.4 * 1.4 * -0.4 + a1 * 1.3 - b * 0.16 * 1.3 + c1 * 0.9;
        assert!((d[1] - want0).abs() < 1e-14);
        assert!((d[3] - want1).abs() < 1e-14);
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let w = 1.7;
        let spec = NetworkSpec { params: vec![p(w, 0.0)], c1: 0.0, c2: 0.0, kappa: vec![0.0], epsilon: vec![0.0], control: None };
        let periods = 100.0;
        let tn = periods * 2.0 * core::f64::consts::PI / w;
        let tol = Tolerances { abs: 1e-9, rel: 1e-9, ..Default::default() };
        let tr = integrate(&spec, &[1.0, 0.0], 0.0, tn, 5000, &tol).unwrap();
        assert!(!tr.diverged);
        assert_eq!(tr.len(), 5001);
        for (j, &t) in tr.t.iter().enumerate() {
            assert!((tr.sample(j)[0] - libm::cos(w * t)).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn overflowing_control_diverges() {
        let ps = PrimitiveSet::two_oscillator_default();
        let ctl = Control::on_velocities(parse("exp(exp(exp(x0d)))", &ps).unwrap(), vec![]);
        let spec = NetworkSpec::diffusive_pair(p(1.0, 0.1), p(1.0, 0.1), 0.0).with_control(Some(ctl));
        let tr = integrate(&spec, &[1.0, 5.0, 1.0, 0.0], 0.0, 100.0, 100, &Tolerances::default()).unwrap();
        assert!(tr.diverged);
        assert!(tr.len() < 101);
    }

    #[test]
    fn unbound_control_symbol_is_an_error() {
        let ps = PrimitiveSet::two_oscillator_default();
        let ctl = Control::on_velocities(parse("k*x0d", &ps).unwrap(), vec![]);
        let spec = NetworkSpec::diffusive_pair(p(1.0, 0.1), p(1.0, 0.1), 0.0).with_control(Some(ctl));
        assert!(matches!(
            integrate(&spec, &[1.0, 0.0, 1.0, 0.0], 0.0, 1.0, 10, &Tolerances::default()),
            Err(Error::UnboundSymbol(_))
        ));
    }
}
