//! Overflow-free complex `tan` and principal `arctan`.
//!
//! `tan` is evaluated from the real/imaginary split for moderate `|Im z|` and
//! from the exact exponential form `i (1 - q) / (1 + q)`, `q = e^{2iz}`, once
//! `|Im z|` exceeds [`Y_ASYM`]. Neither path forms `cosh` or `sinh` of a large
//! argument, so no finite input overflows.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::error::{Error, Result};

/// A point of the plane. Orbit code never stores non-finite values; a pole
/// hit is reported as [`PoleHit`] instead.
pub type ComplexValue = Complex64;

/// Above this `|Im z|` the exponential form is used. The discarded
/// correction `e^{-2|y|}` is below one ulp of 1 here.
pub const Y_ASYM: f64 = 18.0;

/// `|tan z|` beyond this is treated as a pole hit.
pub const POLE_BLOWUP: f64 = 1e12;

/// Distance from `±i` inside which `arctan` reports a branch point.
pub const BRANCH_TOL: f64 = 1e-14;

/// `tan z` exceeded [`POLE_BLOWUP`] in modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("tan evaluated within the pole blow-up range")]
pub struct PoleHit;

/// `sinh a` and `cosh a` for `a >= 0` from a single `expm1`.
#[inline]
fn sinh_cosh_nonneg(a: f64) -> (f64, f64) {
    let e = a.exp_m1();
    let ep1 = e + 1.0;
    (0.5 * (e + e / ep1), 0.5 * (ep1 + 1.0 / ep1))
}

/// Complex tangent on the whole plane.
///
/// For `|y| <= Y_ASYM` this uses
/// `tan(x+iy) = (sin x cos x + i sinh y cosh y) / (cos^2 x + sinh^2 y)`,
/// which is the familiar `(sin 2x + i sinh 2y) / (cos 2x + cosh 2y)` with
/// numerator and denominator halved; the halved denominator is a sum of
/// squares and does not cancel next to the poles `pi/2 + k pi`.
///
/// The function is odd bit-for-bit: every intermediate is computed from
/// `|y|` and the sign is applied afterwards.
#[inline]
pub fn stable_tan(z: ComplexValue) -> std::result::Result<ComplexValue, PoleHit> {
    let (x, y) = (z.re, z.im);
    let sign = if y.is_sign_negative() { -1.0 } else { 1.0 };
    let a = y.abs();
    let w = if a <= Y_ASYM {
        let (s, c) = x.sin_cos();
        let (sh, ch) = sinh_cosh_nonneg(a);
        let den = c * c + sh * sh;
        Complex64::new(s * c / den, sign * sh * ch / den)
    } else {
        // q = e^{2iz} in the upper half-plane, e^{-2iz} in the lower one.
        let mag = (-2.0 * a).exp();
        let (s2, c2) = (2.0 * x).sin_cos();
        let q = Complex64::new(mag * c2, sign * mag * s2);
        let ratio = (Complex64::new(1.0, 0.0) - q) / (Complex64::new(1.0, 0.0) + q);
        Complex64::new(-sign * ratio.im, sign * ratio.re)
    };
    if !(w.re.is_finite() && w.im.is_finite()) || w.norm_sqr() > POLE_BLOWUP * POLE_BLOWUP {
        return Err(PoleHit);
    }
    Ok(w)
}

/// Principal complex arctangent, `(1/2i) log((1 + iw) / (1 - iw))`.
///
/// On the cuts `{iy : |y| > 1}` the real part is `+pi/2` regardless of the
/// sign of zero in `Re w`, so `Re(arctan) ∈ (-pi/2, pi/2]`.
pub fn stable_arctan(w: ComplexValue) -> Result<ComplexValue> {
    let i = Complex64::i();
    if (w - i).norm() < BRANCH_TOL {
        return Err(Error::BranchPoint(1.0));
    }
    if (w + i).norm() < BRANCH_TOL {
        return Err(Error::BranchPoint(-1.0));
    }
    if w.re == 0.0 && w.im.abs() > 1.0 {
        let y = w.im;
        return Ok(Complex64::new(FRAC_PI_2, 0.5 * ((y + 1.0) / (y - 1.0)).ln()));
    }
    let iw = i * w;
    let one = Complex64::new(1.0, 0.0);
    let r = ((one + iw) / (one - iw)).ln();
    // r / (2i)
    Ok(Complex64::new(0.5 * r.im, -0.5 * r.re))
}
