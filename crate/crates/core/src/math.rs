//! Elementary functions routed through `libm`, so results do not depend on
//! the platform libm or on whether `std` is enabled.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn asin(x: f64) -> f64 {
    libm::asin(x)
}

#[inline]
pub(crate) fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Wraps an angle into (−π, π].
pub(crate) fn wrap_angle(a: f64) -> f64 {
    use core::f64::consts::PI;
    let mut w = libm::fmod(a + PI, 2.0 * PI);
    if w <= 0.0 {
        w += 2.0 * PI;
    }
    w - PI
}
