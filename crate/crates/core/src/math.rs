//! `no_std` float helpers backed by `libm`.

pub use core::f64::consts::PI;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

/// Angle of `(x, y)` mapped into `[base, base + 2π)`.
pub fn angle_from(x: f64, y: f64, base: f64) -> f64 {
    wrap_from(atan2(y, x), base)
}

/// Maps `theta` into `[base, base + 2π)`.
pub fn wrap_from(theta: f64, base: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta - base;
    t -= two_pi * libm::floor(t / two_pi);
    if t >= two_pi {
        t -= two_pi;
    }
    base + t
}

pub fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |m, x| m.max(abs(x)))
}
