//! Newton correction and pseudo-arclength continuation of the stationary
//! states of the averaged system.
//!
//! The engine works on `n` unknowns and `n − 1` equations. Branches in one
//! parameter use `(R0, R1, ΔΘ, p)`; contour lines in the `(c, k)` plane use
//! `(R0, R1, ΔΘ, c, k)` with a level equation appended. ΔΘ is carried
//! unwrapped while tracing and reported wrapped to (−π, π].

use alloc::vec;
use alloc::vec::Vec;

use crate::averaging::{
    derive_params, residual_parameter_derivatives, stationary_jacobian, stationary_residual, AveragedParams,
    AveragedState, PhaseConvention,
};
use crate::linalg::{dot, norm, norm_inf, project_onto_null_space, solve, Matrix};
use crate::math::{asin, sqrt};
use crate::{Error, Result};

/// Newton iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Residual ∞-norm bound.
    pub tol: f64,
    /// Bound on the next Newton step, relative to `1 + ‖x‖∞`. Near a
    /// vanishing amplitude the residual alone does not pin the state.
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: 1e-10, step_tol: 1e-13, max_iter: 25 }
    }
}

/// Outcome of a converged Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    /// Residual evaluations, the last one being the converged check.
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Damped Newton on a square system. `eval` returns the residual and its
/// Jacobian; iterates for which `admissible` is false are rejected by step
/// halving. Converged when the residual ∞-norm is below `cfg.tol` and the
/// next step would be below `cfg.step_tol`; that last step is still applied.
pub fn newton_solve<F, D>(x0: &[f64], mut eval: F, admissible: D, cfg: &NewtonConfig) -> Result<NewtonReport>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, Matrix)>,
    D: Fn(&[f64]) -> bool,
{
    let mut x = x0.to_vec();
    if !admissible(&x) {
        return Err(Error::NoConvergence);
    }
    let (mut f, mut j) = eval(&x).map_err(domain_to_noconv)?;
    for iter in 1..=cfg.max_iter {
        let fnorm = norm_inf(&f);
        if !fnorm.is_finite() {
            return Err(Error::NoConvergence);
        }
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let delta = solve(&j, &neg);
        if fnorm < cfg.tol {
            let small = match &delta {
                Ok(d) => norm_inf(d) <= cfg.step_tol * (1.0 + norm_inf(&x)),
                Err(_) => true,
            };
            if small {
                // the last step is below tolerance but still sharpens the
                // state where the branch is nearly parallel to an axis
                if let Ok(d) = &delta {
                    let polished: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + b).collect();
                    if admissible(&polished) {
                        x = polished;
                    }
                }
                return Ok(NewtonReport { x, iterations: iter, residual_norm: fnorm });
            }
        }
        let delta = delta?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            if admissible(&trial) {
                if let Ok((ft, jt)) = eval(&trial) {
                    let tn = norm_inf(&ft);
                    if tn.is_finite() && (tn < fnorm || tn < cfg.tol) {
                        accepted = Some((trial, ft, jt));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        let Some((xn, fnew, jnew)) = accepted else {
            return Err(Error::NoConvergence);
        };
        x = xn;
        f = fnew;
        j = jnew;
    }
    Err(Error::NoConvergence)
}

fn domain_to_noconv(e: Error) -> Error {
    match e {
        Error::ZeroAmplitude => Error::NoConvergence,
        e => e,
    }
}

/// A converged stationary state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corrected {
    pub state: AveragedState,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Amplitudes below this are treated as the trivial solution, where the
/// phase is undefined and residuals vanish trivially.
pub const TRIVIAL_AMPLITUDE: f64 = 1e-6;

fn admissible_amplitudes(y: &[f64]) -> bool {
    y[0] > TRIVIAL_AMPLITUDE && y[1] > TRIVIAL_AMPLITUDE && y.iter().all(|v| v.is_finite())
}

/// Newton correction of a stationary state at fixed parameters.
pub fn newton_correct(
    guess: &AveragedState,
    p: &AveragedParams,
    conv: PhaseConvention,
    cfg: &NewtonConfig,
) -> Result<Corrected> {
    let rep = newton_solve(
        &guess.as_array(),
        |x| {
            let s = AveragedState::from_slice(x);
            Ok((stationary_residual(&s, p, conv)?.to_vec(), stationary_jacobian(&s, p, conv)?))
        },
        admissible_amplitudes,
        cfg,
    )?;
    Ok(Corrected { state: AveragedState::from_slice(&rep.x), iterations: rep.iterations, residual_norm: rep.residual_norm })
}

/// The controlled pair's fixed data: everything except `c` and `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSystem {
    pub alpha: f64,
    pub beta: f64,
    pub delta_omega: f64,
    pub convention: PhaseConvention,
}

impl PairSystem {
    pub fn params(&self, c: f64, k: f64) -> AveragedParams {
        derive_params(self.alpha, self.beta, c, k, 0.0, self.delta_omega)
    }

    /// Residual and full 3×5 Jacobian over `(R0, R1, ΔΘ, c, k)`.
    fn full(&self, s: &AveragedState, c: f64, k: f64) -> Result<([f64; 3], Matrix)> {
        let p = self.params(c, k);
        let f = stationary_residual(s, &p, self.convention)?;
        let js = stationary_jacobian(s, &p, self.convention)?;
        let (dc, dk) = residual_parameter_derivatives(s, self.convention)?;
        let mut j = Matrix::zeros(3, 5);
        for i in 0..3 {
            for col in 0..3 {
                j[(i, col)] = js[(i, col)];
            }
            j[(i, 3)] = dc[i];
            j[(i, 4)] = dk[i];
        }
        Ok((f, j))
    }
}

/// Continuation parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameter {
    C,
    K,
}

/// Why a trace stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the end of the parameter range (the last point lies on it).
    ParameterBound,
    /// Step size underflowed at a turning point.
    Fold,
    /// Step size underflowed with no turning point in sight.
    NoSolution,
    /// The branch ran into `R0 = 0` or `R1 = 0`, the trivial solution.
    AmplitudeCollapse,
    /// Tangent computation failed (singular bordered Jacobian).
    NewtonFailure,
    MaxPoints,
}

impl Termination {
    pub fn tag(self) -> &'static str {
        match self {
            Termination::ParameterBound => "parameter_bound",
            Termination::Fold => "fold",
            Termination::NoSolution => "no_solution",
            Termination::AmplitudeCollapse => "amplitude_collapse",
            Termination::NewtonFailure => "newton_failure",
            Termination::MaxPoints => "max_points",
        }
    }
}

/// Step control for pseudo-arclength tracing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub newton: NewtonConfig,
    pub ds_init: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub grow: f64,
    pub max_points: usize,
    /// Amplitude below which a stalled branch counts as collapsed.
    pub collapse_tol: f64,
    /// A converged point with an amplitude below this ends the branch as
    /// collapsed straight away.
    pub collapse_floor: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            newton: NewtonConfig::default(),
            ds_init: 1e-3,
            ds_min: 1e-10,
            ds_max: 5e-2,
            grow: 1.3,
            max_points: 20_000,
            collapse_tol: 1e-2,
            collapse_floor: 1e-5,
        }
    }
}

/// Which way to start along the active parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

struct RawPoint {
    y: Vec<f64>,
    t: Vec<f64>,
    residual: f64,
    s: f64,
}

struct RawPath {
    points: Vec<RawPoint>,
    folds: Vec<usize>,
    termination: Termination,
}

struct Bound {
    index: usize,
    lo: f64,
    hi: f64,
}

/// Pseudo-arclength predictor–corrector on `eval: y ↦ (F, J)` with
/// `F ∈ R^{n−1}`. `watch` is the coordinate used for orientation and fold
/// detection.
fn trace<F>(eval: F, y0: Vec<f64>, watch: usize, dir: f64, bounds: &[Bound], cfg: &StepConfig) -> Result<RawPath>
where
    F: Fn(&[f64]) -> Result<(Vec<f64>, Matrix)>,
{
    let n = y0.len();
    let (f0, j0) = eval(&y0)?;
    let mut t = initial_tangent(&j0, watch, n);
    if t[watch] * dir < 0.0 {
        t.iter_mut().for_each(|v| *v = -*v);
    }
    let mut points = vec![RawPoint { y: y0, t: t.clone(), residual: norm_inf(&f0), s: 0.0 }];
    let mut folds = Vec::new();

    // already on a bound and heading out of the range
    for b in bounds {
        let y = &points[0].y;
        if (y[b.index] >= b.hi && t[b.index] > 0.0) || (y[b.index] <= b.lo && t[b.index] < 0.0) {
            return Ok(RawPath { points, folds, termination: Termination::ParameterBound });
        }
    }

    let mut ds = cfg.ds_init;
    loop {
        if points.len() >= cfg.max_points {
            return Ok(RawPath { points, folds, termination: Termination::MaxPoints });
        }
        let last = points.last().expect("non-empty");
        let y = last.y.clone();
        let t_prev = last.t.clone();
        let mut step = None;
        while ds >= cfg.ds_min {
            let z0: Vec<f64> = y.iter().zip(&t_prev).map(|(a, b)| a + ds * b).collect();
            let corrected = newton_solve(
                &z0,
                |z| {
                    let (mut f, j) = eval(z)?;
                    let d: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
                    f.push(dot(&t_prev, &d) - ds);
                    Ok((f, j.with_row(&t_prev)))
                },
                admissible_amplitudes,
                &cfg.newton,
            );
            if let Ok(rep) = corrected {
                let d: Vec<f64> = rep.x.iter().zip(&y).map(|(a, b)| a - b).collect();
                if norm(&d) < 2.0 * ds {
                    step = Some(rep);
                    break;
                }
            }
            ds *= 0.5;
        }
        let Some(rep) = step else {
            let last = points.last().expect("non-empty");
            let termination = if last.y[0].min(last.y[1]) < cfg.collapse_tol {
                Termination::AmplitudeCollapse
            } else if last.t[watch].abs() < 1e-2 || folds.last().is_some_and(|&i| i + 3 >= points.len()) {
                Termination::Fold
            } else {
                Termination::NoSolution
            };
            return Ok(RawPath { points, folds, termination });
        };
        let z = rep.x;

        if let Some(b) = bounds.iter().find(|b| z[b.index] > b.hi || z[b.index] < b.lo) {
            let target = if z[b.index] > b.hi { b.hi } else { b.lo };
            let frac = (target - y[b.index]) / (z[b.index] - y[b.index]);
            let guess: Vec<f64> = y.iter().zip(&z).map(|(a, c)| a + frac * (c - a)).collect();
            let idx = b.index;
            let landed = newton_solve(
                &guess,
                |w| {
                    let (mut f, j) = eval(w)?;
                    f.push(w[idx] - target);
                    let mut e = vec![0.0; n];
                    e[idx] = 1.0;
                    Ok((f, j.with_row(&e)))
                },
                admissible_amplitudes,
                &cfg.newton,
            );
            if let Ok(w) = landed {
                let mut w = w.x;
                w[idx] = target;
                let (f, _) = eval(&w)?;
                let s = points.last().expect("non-empty").s + norm(&diff(&w, &y));
                points.push(RawPoint { y: w, t: t_prev, residual: norm_inf(&f), s });
            }
            return Ok(RawPath { points, folds, termination: Termination::ParameterBound });
        }

        let (f, j) = eval(&z)?;
        let mut rhs = vec![0.0; n];
        rhs[n - 1] = 1.0;
        let s = points.last().expect("non-empty").s + norm(&diff(&z, &y));
        let t_new = match solve(&j.with_row(&t_prev), &rhs) {
            Ok(v) => {
                let nv = norm(&v);
                v.into_iter().map(|x| x / nv).collect::<Vec<_>>()
            }
            Err(_) => {
                let termination = if z[0].min(z[1]) < cfg.collapse_tol {
                    Termination::AmplitudeCollapse
                } else {
                    Termination::NewtonFailure
                };
                points.push(RawPoint { y: z, t: t_prev, residual: norm_inf(&f), s });
                return Ok(RawPath { points, folds, termination });
            }
        };
        if t_new[watch] * t_prev[watch] < 0.0 {
            folds.push(points.len());
        }
        let collapsed = z[0].min(z[1]) < cfg.collapse_floor;
        points.push(RawPoint { y: z, t: t_new, residual: norm_inf(&f), s });
        if collapsed {
            return Ok(RawPath { points, folds, termination: Termination::AmplitudeCollapse });
        }
        if rep.iterations <= 4 {
            ds = (ds * cfg.grow).min(cfg.ds_max);
        }
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Unit tangent from the null space of `j`. Projects the `watch` axis
/// first; this also works where `j` is rank deficient, as at the uncoupled
/// start `k = c = Δω = 0`.
fn initial_tangent(j: &Matrix, watch: usize, n: usize) -> Vec<f64> {
    let mut best: Vec<f64> = vec![0.0; n];
    let mut best_norm = 0.0;
    let order = core::iter::once(watch).chain((0..n).filter(|&i| i != watch));
    for i in order {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let p = project_onto_null_space(j, &e);
        let pn = norm(&p);
        if pn > 1e-6 {
            return p.into_iter().map(|v| v / pn).collect();
        }
        if pn > best_norm {
            best_norm = pn;
            best = p;
        }
    }
    let nb = norm(&best).max(f64::MIN_POSITIVE);
    best.into_iter().map(|v| v / nb).collect()
}

/// A point on a traced branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub state: AveragedState,
    pub param: f64,
    /// Unit tangent over `(R0, R1, ΔΘ, param)`.
    pub tangent: [f64; 4],
    pub residual_norm: f64,
    pub arclength: f64,
}

/// A traced solution branch in one parameter, the other held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub active: Parameter,
    /// Value of the parameter that is not varied.
    pub fixed: f64,
    pub points: Vec<BranchPoint>,
    /// Indices of points just past a turning point in the active parameter.
    pub folds: Vec<usize>,
    pub termination: Termination,
}

impl Branch {
    /// Smallest and largest active-parameter value reached.
    pub fn param_extent(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.param), hi.max(p.param)))
    }
}

fn branch_eval(sys: PairSystem, active: Parameter, fixed: f64) -> impl Fn(&[f64]) -> Result<(Vec<f64>, Matrix)> {
    move |y: &[f64]| {
        let s = AveragedState::from_slice(y);
        let (c, k) = match active {
            Parameter::C => (y[3], fixed),
            Parameter::K => (fixed, y[3]),
        };
        let (f, full) = sys.full(&s, c, k)?;
        let pcol = if active == Parameter::C { 3 } else { 4 };
        let mut j = Matrix::zeros(3, 4);
        for i in 0..3 {
            for col in 0..3 {
                j[(i, col)] = full[(i, col)];
            }
            j[(i, 3)] = full[(i, pcol)];
        }
        Ok((f.to_vec(), j))
    }
}

/// Traces the stationary branch through `start` at `(c, k)`, varying
/// `active` within `range` and starting in `direction`. The start is
/// Newton-corrected first.
#[allow(clippy::too_many_arguments)]
pub fn continue_branch(
    sys: &PairSystem,
    start: &AveragedState,
    c: f64,
    k: f64,
    active: Parameter,
    range: (f64, f64),
    direction: Direction,
    cfg: &StepConfig,
) -> Result<Branch> {
    let start = newton_correct(start, &sys.params(c, k), sys.convention, &cfg.newton)?.state;
    let (param, fixed) = match active {
        Parameter::C => (c, k),
        Parameter::K => (k, c),
    };
    let y0 = vec![start.r0, start.r1, start.dtheta, param];
    let bounds = [Bound { index: 3, lo: range.0, hi: range.1 }];
    let raw = trace(branch_eval(*sys, active, fixed), y0, 3, direction.sign(), &bounds, cfg)?;
    let points = raw
        .points
        .into_iter()
        .map(|p| BranchPoint {
            state: AveragedState::from_slice(&p.y).wrapped(),
            param: p.y[3],
            tangent: [p.t[0], p.t[1], p.t[2], p.t[3]],
            residual_norm: p.residual,
            arclength: p.s,
        })
        .collect();
    Ok(Branch { active, fixed, points, folds: raw.folds, termination: raw.termination })
}

/// Component of the stationary state held at a level along a contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    R0,
    R1,
    DTheta,
}

impl Component {
    fn index(self) -> usize {
        match self {
            Component::R0 => 0,
            Component::R1 => 1,
            Component::DTheta => 2,
        }
    }

    pub fn of(self, s: &AveragedState) -> f64 {
        s.as_array()[self.index()]
    }

    pub fn tag(self) -> &'static str {
        match self {
            Component::R0 => "R0",
            Component::R1 => "R1",
            Component::DTheta => "dtheta",
        }
    }
}

/// Rectangle in the `(c, k)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneRange {
    pub c: (f64, f64),
    pub k: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    pub c: f64,
    pub k: f64,
    pub state: AveragedState,
    pub residual_norm: f64,
    pub arclength: f64,
}

/// Level line of one state component in the `(c, k)` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub component: Component,
    pub level: f64,
    pub points: Vec<ContourPoint>,
    pub termination: Termination,
}

fn contour_eval(sys: PairSystem, component: Component, level: f64) -> impl Fn(&[f64]) -> Result<(Vec<f64>, Matrix)> {
    move |y: &[f64]| {
        let s = AveragedState::from_slice(y);
        let (f, j) = sys.full(&s, y[3], y[4])?;
        let mut f = f.to_vec();
        f.push(y[component.index()] - level);
        let mut e = [0.0; 5];
        e[component.index()] = 1.0;
        Ok((f, j.with_row(&e)))
    }
}

/// Finds `k` (at fixed `c`) and the state with `component = level`,
/// starting from a guess.
pub fn locate_level(
    sys: &PairSystem,
    component: Component,
    level: f64,
    c: f64,
    guess: &AveragedState,
    k_guess: f64,
    cfg: &NewtonConfig,
) -> Result<(AveragedState, f64)> {
    let eval = contour_eval(*sys, component, level);
    let rep = newton_solve(
        &[guess.r0, guess.r1, guess.dtheta, k_guess],
        |x| {
            let (f, j) = eval(&[x[0], x[1], x[2], c, x[3]])?;
            let mut jr = Matrix::zeros(4, 4);
            for i in 0..4 {
                for col in 0..3 {
                    jr[(i, col)] = j[(i, col)];
                }
                jr[(i, 3)] = j[(i, 4)];
            }
            Ok((f, jr))
        },
        admissible_amplitudes,
        cfg,
    )?;
    Ok((AveragedState::from_slice(&rep.x[..3]), rep.x[3]))
}

/// Traces the level line `component = level` through `(start, c, k)`,
/// starting with `c` moving in `direction`. An inexact start is first
/// moved onto the level line at fixed `c`.
#[allow(clippy::too_many_arguments)]
pub fn trace_contour(
    sys: &PairSystem,
    component: Component,
    level: f64,
    start: &AveragedState,
    c: f64,
    k: f64,
    plane: PlaneRange,
    direction: Direction,
    cfg: &StepConfig,
) -> Result<Contour> {
    let (s0, k0) = locate_level(sys, component, level, c, start, k, &cfg.newton)?;
    let y0 = vec![s0.r0, s0.r1, s0.dtheta, c, k0];
    let bounds = [Bound { index: 3, lo: plane.c.0, hi: plane.c.1 }, Bound { index: 4, lo: plane.k.0, hi: plane.k.1 }];
    let raw = trace(contour_eval(*sys, component, level), y0, 3, direction.sign(), &bounds, cfg)?;
    let points = raw
        .points
        .into_iter()
        .map(|p| ContourPoint {
            c: p.y[3],
            k: p.y[4],
            state: AveragedState::from_slice(&p.y[..3]).wrapped(),
            residual_norm: p.residual,
            arclength: p.s,
        })
        .collect();
    Ok(Contour { component, level, points, termination: raw.termination })
}

/// How to obtain a starting point for a branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedStrategy {
    /// Symmetric root of the `k = 0` system near `ΔΘ = 0`.
    InPhase,
    /// Symmetric root near `ΔΘ = π`.
    AntiPhase,
    /// Newton from an explicit guess.
    Guess(AveragedState),
    /// Grid of Newton starts; the root with the largest `R1` (then `R0`).
    Multistart,
}

/// Produces a converged stationary state at `(c, k)`.
///
/// The symmetric seeds start from the exact `k = 0` symmetric root of the
/// derived convention, `sinΔΘ = Δω/(2c)`, `R² = 4(α − c + 2c·cosΔΘ)/b`,
/// reducing to `R = 2√((α − k)/b)`, `ΔΘ ∈ {0, π}` when `c = 0`.
pub fn seed_branch(sys: &PairSystem, c: f64, k: f64, strategy: SeedStrategy, cfg: &NewtonConfig) -> Result<AveragedState> {
    use core::f64::consts::PI;
    let p = sys.params(c, k);
    let guess = match strategy {
        SeedStrategy::Guess(s) => s,
        SeedStrategy::Multistart => {
            return stationary_states(sys, c, k, cfg).into_iter().next().ok_or(Error::NoConvergence);
        }
        SeedStrategy::InPhase | SeedStrategy::AntiPhase => {
            let anti = strategy == SeedStrategy::AntiPhase;
            let ratio = if c > 0.0 { sys.delta_omega / (2.0 * c) } else { 0.0 };
            let base = if ratio.abs() <= 1.0 { asin(ratio) } else { 0.0 };
            let dtheta = if anti { PI - base } else { base };
            let a = sys.alpha - c - k / 2.0 + 2.0 * c * crate::math::cos(dtheta);
            let r = if a > 0.0 { 2.0 * sqrt(a / p.b) } else { 0.1 };
            AveragedState::new(r, r, dtheta)
        }
    };
    Ok(newton_correct(&guess, &p, sys.convention, cfg)?.state.wrapped())
}

/// Distinct nontrivial stationary states at `(c, k)` from a grid of Newton
/// starts, sorted by descending `R1`, then descending `R0`.
pub fn stationary_states(sys: &PairSystem, c: f64, k: f64, cfg: &NewtonConfig) -> Vec<AveragedState> {
    let p = sys.params(c, k);
    let mut roots: Vec<AveragedState> = Vec::new();
    let amps: Vec<f64> = (0..8).map(|i| 0.1 + 2.9 * i as f64 / 7.0).collect();
    for &r0 in &amps {
        for &r1 in &amps {
            for i in 0..7 {
                let th = -3.0 + i as f64;
                let Ok(sol) = newton_correct(&AveragedState::new(r0, r1, th), &p, sys.convention, cfg) else {
                    continue;
                };
                let s = sol.state.wrapped();
                let dup = roots.iter().any(|q| {
                    (q.r0 - s.r0).abs() < 1e-6
                        && (q.r1 - s.r1).abs() < 1e-6
                        && crate::math::wrap_angle(q.dtheta - s.dtheta).abs() < 1e-6
                });
                if !dup {
                    roots.push(s);
                }
            }
        }
    }
    roots.sort_by(|a, b| b.r1.total_cmp(&a.r1).then(b.r0.total_cmp(&a.r0)));
    roots
}

/// Scans `active` over `n` evenly spaced values of `range` and returns the
/// first value with a stationary state, with that state (largest `R1`).
#[allow(clippy::too_many_arguments)]
pub fn scan_for_seed(
    sys: &PairSystem,
    active: Parameter,
    fixed: f64,
    range: (f64, f64),
    n: usize,
    cfg: &NewtonConfig,
) -> Option<(f64, AveragedState)> {
    let n = n.max(2);
    (0..n).find_map(|i| {
        let v = range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64;
        let (c, k) = match active {
            Parameter::C => (v, fixed),
            Parameter::K => (fixed, v),
        };
        stationary_states(sys, c, k, cfg).into_iter().next().map(|s| (v, s))
    })
}
