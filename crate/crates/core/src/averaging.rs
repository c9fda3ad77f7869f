//! Averaged amplitude/phase equations of the controlled oscillator pair.
//!
//! With the control `u = −k·ẋ0` added to both oscillators, the pair
//!
//! ```text
//! ẍ0 = −ω0²x0 + αẋ0(1 − βx0²) + c(ẋ1 − ẋ0) − kẋ0
//! ẍ1 = −ω1²x1 + αẋ1(1 − βx1²) + c(ẋ0 − ẋ1) − kẋ0
//! ```
//!
//! is again a directly coupled van der Pol pair
//!
//! ```text
//! ẍ0 = −ω0²x0 + a0ẋ0 − b x0²ẋ0 + c0ẋ1,   a0 = α − c − k, b = αβ, c0 = c
//! ẍ1 = −ω1²x1 + a1ẋ1 − b x1²ẋ1 + c1ẋ0,   a1 = α − c,     c1 = c − k
//! ```
//!
//! Writing `x_j = A_j e^{iωt} + c.c.` with slow complex amplitudes
//! `A_j = R_j e^{iΘ_j}`, detunings `Δ_j = ω_j − ω`, and averaging over one
//! fast period gives four real equations:
//!
//! ```text
//! Ṙ0 = a0/2 R0 − b/8 R0³ + c0 R1 cos(Θ1 − Θ0)
//! Ṙ1 = a1/2 R1 − b/8 R1³ + c1 R0 cos(Θ0 − Θ1)
//! Θ̇0 = −Δ0 + c0 (R1/R0) sin(Θ1 − Θ0)
//! Θ̇1 = −Δ1 + c1 (R0/R1) sin(Θ0 − Θ1)
//! ```
//!
//! Only `ΔΘ = Θ0 − Θ1` enters stationarity, through an Adler-type phase
//! equation. The reference frequency ω drops out.

use crate::linalg::Matrix;
use crate::math::{cos, sin};
use crate::{Error, Result};

/// Coefficients of the averaged system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedParams {
    pub a0: f64,
    pub a1: f64,
    pub b: f64,
    pub c0: f64,
    pub c1: f64,
    /// Detuning `ω1 − ω0`.
    pub delta_omega: f64,
}

/// Substitutes the controlled pair's parameters.
pub fn derive_params(alpha: f64, beta: f64, c: f64, k: f64, omega0: f64, omega1: f64) -> AveragedParams {
    AveragedParams {
        a0: alpha - c - k,
        a1: alpha - c,
        b: alpha * beta,
        c0: c,
        c1: c - k,
        delta_omega: omega1 - omega0,
    }
}

/// Stationary amplitudes and phase difference `ΔΘ = Θ0 − Θ1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedState {
    pub r0: f64,
    pub r1: f64,
    pub dtheta: f64,
}

impl AveragedState {
    pub fn new(r0: f64, r1: f64, dtheta: f64) -> Self {
        Self { r0, r1, dtheta }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.r0, self.r1, self.dtheta]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self { r0: v[0], r1: v[1], dtheta: v[2] }
    }

    /// Same state with `ΔΘ` wrapped into (−π, π].
    pub fn wrapped(&self) -> Self {
        Self { dtheta: crate::math::wrap_angle(self.dtheta), ..*self }
    }

    fn check(&self) -> Result<()> {
        if self.r0 > 0.0 && self.r1 > 0.0 {
            Ok(())
        } else {
            Err(Error::ZeroAmplitude)
        }
    }
}

/// Sign convention of the stationary phase equation.
///
/// `Derived` is `0 = −Δω + (c0R1/R0 + c1R0/R1) sinΔΘ`, which is exactly
/// `Θ̇1 − Θ̇0` of the four-equation flow. `Printed` flips the sign of the
/// `c1` term. The reference branch diagrams (fold near `k ≈ 0.04` at
/// `c = 0.022`, `Δω = 0.015`) follow this form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    Derived,
    #[default]
    Printed,
}

impl PhaseConvention {
    fn sign(self) -> f64 {
        match self {
            PhaseConvention::Derived => 1.0,
            PhaseConvention::Printed => -1.0,
        }
    }
}

/// Right-hand side `(Ṙ0, Ṙ1, Θ̇0, Θ̇1)` of the averaged flow.
pub fn averaged_flow(
    r0: f64,
    r1: f64,
    theta0: f64,
    theta1: f64,
    p: &AveragedParams,
    delta0: f64,
    delta1: f64,
) -> Result<[f64; 4]> {
    if !(r0 > 0.0 && r1 > 0.0) {
        return Err(Error::ZeroAmplitude);
    }
    let d10 = theta1 - theta0;
    Ok([
        p.a0 / 2.0 * r0 - p.b / 8.0 * r0 * r0 * r0 + p.c0 * r1 * cos(d10),
        p.a1 / 2.0 * r1 - p.b / 8.0 * r1 * r1 * r1 + p.c1 * r0 * cos(-d10),
        -delta0 + p.c0 * (r1 / r0) * sin(d10),
        -delta1 + p.c1 * (r0 / r1) * sin(-d10),
    ])
}

/// Stationarity residuals: the two amplitude equations and the phase
/// difference equation.
pub fn stationary_residual(s: &AveragedState, p: &AveragedParams, conv: PhaseConvention) -> Result<[f64; 3]> {
    s.check()?;
    let (r0, r1) = (s.r0, s.r1);
    let (sn, cs) = (sin(s.dtheta), cos(s.dtheta));
    let g = conv.sign();
    Ok([
        p.a0 / 2.0 * r0 - p.b / 8.0 * r0 * r0 * r0 + p.c0 * r1 * cs,
        p.a1 / 2.0 * r1 - p.b / 8.0 * r1 * r1 * r1 + p.c1 * r0 * cs,
        -p.delta_omega + (p.c0 * r1 / r0 + g * p.c1 * r0 / r1) * sn,
    ])
}

/// Partial derivatives of [`stationary_residual`] with respect to
/// `(R0, R1, ΔΘ)`.
pub fn stationary_jacobian(s: &AveragedState, p: &AveragedParams, conv: PhaseConvention) -> Result<Matrix> {
    s.check()?;
    let (r0, r1) = (s.r0, s.r1);
    let (sn, cs) = (sin(s.dtheta), cos(s.dtheta));
    let g = conv.sign();
    let mut j = Matrix::zeros(3, 3);
    j[(0, 0)] = p.a0 / 2.0 - 3.0 * p.b / 8.0 * r0 * r0;
    j[(0, 1)] = p.c0 * cs;
    j[(0, 2)] = -p.c0 * r1 * sn;
    j[(1, 0)] = p.c1 * cs;
    j[(1, 1)] = p.a1 / 2.0 - 3.0 * p.b / 8.0 * r1 * r1;
    j[(1, 2)] = -p.c1 * r0 * sn;
    j[(2, 0)] = (-p.c0 * r1 / (r0 * r0) + g * p.c1 / r1) * sn;
    j[(2, 1)] = (p.c0 / r0 - g * p.c1 * r0 / (r1 * r1)) * sn;
    j[(2, 2)] = (p.c0 * r1 / r0 + g * p.c1 * r0 / r1) * cs;
    Ok(j)
}

/// Derivatives of the residual with respect to the coupling `c` and the
/// control gain `k` (they do not depend on the other parameters).
pub fn residual_parameter_derivatives(s: &AveragedState, conv: PhaseConvention) -> Result<([f64; 3], [f64; 3])> {
    s.check()?;
    let (r0, r1) = (s.r0, s.r1);
    let (sn, cs) = (sin(s.dtheta), cos(s.dtheta));
    let g = conv.sign();
    // c enters a0, a1 with −1 and c0, c1 with +1; k enters a0, c1 with −1
    let d_c = [-r0 / 2.0 + r1 * cs, -r1 / 2.0 + r0 * cs, (r1 / r0 + g * r0 / r1) * sn];
    let d_k = [-r0 / 2.0, -r0 * cs, -g * (r0 / r1) * sn];
    Ok((d_c, d_k))
}

/// Adler criterion: a stationary phase difference exists iff
/// `|Δω| ≤ |c0R1/R0 + c1R0/R1|`.
pub fn adler_sync_exists(p: &AveragedParams, r0: f64, r1: f64) -> bool {
    let coupling = p.c0 * r1 / r0 + p.c1 * r0 / r1;
    p.delta_omega.abs() <= coupling.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_at_sync_setup() {
        let p = derive_params(0.1, 1.0, 0.022, 1.0, 1.0, 1.0);
        assert!((p.a0 + 0.922).abs() < 1e-15);
        assert!((p.a1 - 0.078).abs() < 1e-15);
        assert!((p.b - 0.1).abs() < 1e-15);
        assert_eq!(p.c0, 0.022);
        assert!((p.c1 + 0.978).abs() < 1e-15);

        let p = derive_params(0.1, 1.0, 0.05, 0.0, 1.0, 1.2);
        assert_eq!((p.a0, p.c0), (p.a1, p.c1));
        let p = derive_params(0.1, 1.0, 0.0, 0.03, 1.0, 1.0);
        assert_eq!((p.c0, p.c1), (0.0, -0.03));
    }

    #[test]
    fn uncoupled_root() {
        let p = derive_params(0.1, 1.0, 0.0, 0.0, 1.0, 1.0);
        let r = stationary_residual(&AveragedState::new(2.0, 2.0, 0.0), &p, PhaseConvention::Derived).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn no_nontrivial_root_beyond_alpha() {
        let p = derive_params(0.1, 1.0, 0.0, 0.1, 1.0, 1.0);
        for r0 in [0.01, 0.5, 1.0, 2.0, 3.0] {
            let r = stationary_residual(&AveragedState::new(r0, 2.0, 0.0), &p, PhaseConvention::Printed).unwrap();
            assert!(r[0].abs() > 0.0);
        }
    }

    #[test]
    fn pitchfork_slope() {
        let p = derive_params(0.1, 1.0, 0.0, 0.04, 1.0, 1.0);
        let r0 = 2.0 * ((0.1 - 0.04) / 0.1f64).sqrt();
        let j = stationary_jacobian(&AveragedState::new(r0, 2.0, 0.0), &p, PhaseConvention::Derived).unwrap();
        assert_eq!(j[(0, 0)], p.a0 / 2.0 - 3.0 * p.b / 8.0 * r0 * r0);
    }

    #[test]
    fn symmetric_flow() {
        let p = derive_params(0.1, 1.0, 0.03, 0.0, 1.0, 1.0);
        let f = averaged_flow(1.5, 1.5, 0.2, 0.2, &p, 0.01, 0.01).unwrap();
        assert_eq!(f[0], f[1]);
        assert_eq!(f[2], f[3]);
    }

    #[test]
    fn zero_amplitude_rejected() {
        let p = derive_params(0.1, 1.0, 0.03, 0.0, 1.0, 1.0);
        assert_eq!(averaged_flow(0.0, 1.0, 0.0, 0.0, &p, 0.0, 0.0), Err(Error::ZeroAmplitude));
        let s = AveragedState::new(1.0, 0.0, 0.0);
        assert_eq!(stationary_residual(&s, &p, PhaseConvention::Derived), Err(Error::ZeroAmplitude));
    }

    #[test]
    fn adler_criterion() {
        let mut p = derive_params(0.1, 1.0, 0.0, 0.0, 1.0, 1.0);
        assert!(adler_sync_exists(&p, 1.0, 2.0));
        p.delta_omega = 0.01;
        assert!(!adler_sync_exists(&p, 1.0, 2.0));
        let p = derive_params(0.1, 1.0, 0.022, 0.0, 1.0, 1.015);
        assert!(adler_sync_exists(&p, 2.0, 2.0));
    }
}
