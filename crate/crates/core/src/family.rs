//! The maps `f(z) = lambda + m pi + z + tan z`, their fixed and critical
//! points in closed form, and the regime selected by the common multiplier
//! `2 + lambda^2` of all fixed points.

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, PI};
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complex::{stable_arctan, stable_tan, ComplexValue, PoleHit};
use crate::error::{Error, Result};

/// `asinh(1) = ln(1 + sqrt 2)`, the height of every critical point.
pub const CRITICAL_HEIGHT: f64 = 0.881_373_587_019_543;

/// Tolerance for recognizing `lambda = i`.
pub const BAKER_TOL: f64 = 1e-14;

/// Tolerance for `| |2 + lambda^2| - 1 |` on the indifferent circle.
pub const CIRCLE_TOL: f64 = 1e-12;

/// The rotation number of an indifferent multiplier `e^{2 pi i alpha}`.
///
/// Rational versus irrational cannot be read off a float, so the caller
/// declares which one it means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alpha {
    Rational {
        p: i64,
        q: u64,
    },
    /// A bounded-type irrational, given by its value.
    BoundedType {
        value: f64,
    },
}

impl Alpha {
    /// `p/q` in lowest terms.
    pub fn rational(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidScenario("alpha denominator is zero".into()));
        }
        let g = gcd(p.unsigned_abs(), q).max(1);
        Ok(Alpha::Rational {
            p: p / g as i64,
            q: q / g,
        })
    }

    /// The golden mean `(sqrt 5 - 1) / 2`, continued fraction `[0; 1, 1, ...]`.
    pub fn golden() -> Self {
        Alpha::BoundedType {
            value: (5f64.sqrt() - 1.0) / 2.0,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Alpha::Rational { p, q } => p as f64 / q as f64,
            Alpha::BoundedType { value } => value,
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Rational { p, q } => write!(f, "{p}/{q}"),
            Alpha::BoundedType { value } => write!(f, "{value}"),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    /// Accepts `p/q` or `golden`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("golden") {
            return Ok(Alpha::golden());
        }
        let bad = || Error::InvalidScenario(format!("alpha must be P/Q or golden, got {s:?}"));
        let (p, q) = s.split_once('/').ok_or_else(bad)?;
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        Alpha::rational(p, q)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Dynamical regime of the base map, decided by the multiplier `2 + lambda^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum Regime {
    /// `|2 + lambda^2| < 1`.
    Attracting,
    /// `lambda = i`: no fixed points, lower Baker domains.
    BakerI,
    /// Multiplier `e^{2 pi i p/q}`.
    Parabolic {
        p: i64,
        q: u64,
    },
    /// Multiplier `e^{2 pi i alpha}`, alpha a declared bounded-type irrational.
    Siegel {
        alpha: f64,
    },
    Other,
}

impl Regime {
    /// Number of steps in one petal cycle of a parabolic fixed point.
    pub fn petal_period(&self) -> Option<usize> {
        match *self {
            Regime::Parabolic { q, .. } => Some(q as usize),
            _ => None,
        }
    }

    pub fn alpha(&self) -> Option<Alpha> {
        match *self {
            Regime::Parabolic { p, q } => Some(Alpha::Rational { p, q }),
            Regime::Siegel { alpha } => Some(Alpha::BoundedType { value: alpha }),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Attracting => "Attracting",
            Regime::BakerI => "BakerI",
            Regime::Parabolic { .. } => "Parabolic",
            Regime::Siegel { .. } => "Siegel",
            Regime::Other => "Other",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Parabolic { p, q } => write!(f, "Parabolic({p}/{q})"),
            Regime::Siegel { alpha } => write!(f, "Siegel({alpha})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Classify `lambda` (with `Im lambda > 0`) by its multiplier.
///
/// On the unit circle the caller must declare alpha; a declared alpha that
/// does not reproduce the multiplier is rejected.
pub fn classify_regime(lambda: ComplexValue, declared_alpha: Option<Alpha>) -> Result<Regime> {
    if lambda.im <= 0.0 || lambda.im.is_nan() {
        return Err(Error::NonPositiveImaginary(lambda.im));
    }
    if (lambda - Complex64::i()).norm() < BAKER_TOL {
        return Ok(Regime::BakerI);
    }
    let mult = multiplier(lambda);
    let r = mult.norm();
    if r < 1.0 - CIRCLE_TOL {
        return Ok(Regime::Attracting);
    }
    if (r - 1.0).abs() >= CIRCLE_TOL {
        return Ok(Regime::Other);
    }
    let alpha = declared_alpha.ok_or(Error::AmbiguousRegime)?;
    let (s, c) = (2.0 * PI * alpha.value()).sin_cos();
    let mismatch = (Complex64::new(c, s) - mult).norm();
    if mismatch > 1e-10 {
        return Err(Error::AlphaMismatch {
            alpha: alpha.value(),
            mismatch,
        });
    }
    Ok(match alpha {
        Alpha::Rational { p, q } => Regime::Parabolic { p, q },
        Alpha::BoundedType { value } => Regime::Siegel { alpha: value },
    })
}

/// The multiplier `2 + lambda^2` shared by every fixed point.
pub fn multiplier(lambda: ComplexValue) -> ComplexValue {
    lambda * lambda + 2.0
}

/// The square root of `e^{2 pi i alpha} - 2` in the upper half-plane.
pub fn lambda_from_alpha(alpha: f64) -> ComplexValue {
    let (s, c) = (2.0 * PI * alpha).sin_cos();
    let l = Complex64::new(c - 2.0, s).sqrt();
    if l.im < 0.0 {
        -l
    } else {
        l
    }
}

/// Move `(lambda, m)` into the upper half-plane using the conjugacy
/// `f_{-lambda}(z) = -f_lambda(-z)`; the shift `m pi` flips with it.
pub fn normalize_lambda(lambda: ComplexValue, m: i64) -> Result<(ComplexValue, i64)> {
    if lambda.im > 0.0 {
        Ok((lambda, m))
    } else if lambda.im < 0.0 {
        Ok((-lambda, -m))
    } else {
        Err(Error::NonPositiveImaginary(lambda.im))
    }
}

/// Parameters of `f_{lambda + m pi}` together with the regime of `f_lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "MapParamsRaw", into = "MapParamsRaw")]
pub struct MapParams {
    lambda: ComplexValue,
    m: i64,
    regime: Regime,
    offset: ComplexValue,
}

impl MapParams {
    /// Build from `lambda` with `Im lambda > 0`.
    pub fn new(lambda: ComplexValue, m: i64, declared_alpha: Option<Alpha>) -> Result<Self> {
        let regime = classify_regime(lambda, declared_alpha)?;
        Ok(Self::with_regime(lambda, m, regime))
    }

    /// `lambda` determined by alpha through `2 + lambda^2 = e^{2 pi i alpha}`.
    pub fn from_alpha(alpha: Alpha, m: i64) -> Result<Self> {
        Self::new(lambda_from_alpha(alpha.value()), m, Some(alpha))
    }

    /// Trust a regime computed elsewhere.
    pub fn with_regime(lambda: ComplexValue, m: i64, regime: Regime) -> Self {
        let offset = lambda + m as f64 * PI;
        Self {
            lambda,
            m,
            regime,
            offset,
        }
    }

    pub fn lambda(&self) -> ComplexValue {
        self.lambda
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `lambda + m pi`.
    pub fn offset(&self) -> ComplexValue {
        self.offset
    }

    /// The same `lambda` with `m` replaced.
    pub fn with_shift(&self, m: i64) -> Self {
        Self::with_regime(self.lambda, m, self.regime)
    }

    /// Fixed points of the base map `f_lambda`.
    pub fn lattice(&self) -> Result<FixedPointLattice> {
        FixedPointLattice::new(self.lambda)
    }

    #[inline]
    pub fn eval(&self, z: ComplexValue) -> std::result::Result<ComplexValue, PoleHit> {
        let t = stable_tan(z)?;
        Ok(self.offset + z + t)
    }
}

#[derive(Serialize, Deserialize)]
struct MapParamsRaw {
    lambda: ComplexValue,
    m: i64,
    regime: Regime,
}

impl From<MapParamsRaw> for MapParams {
    fn from(r: MapParamsRaw) -> Self {
        MapParams::with_regime(r.lambda, r.m, r.regime)
    }
}

impl From<MapParams> for MapParamsRaw {
    fn from(p: MapParams) -> Self {
        MapParamsRaw {
            lambda: p.lambda,
            m: p.m,
            regime: p.regime,
        }
    }
}

/// `f_{lambda + m pi}(z)`.
#[inline]
pub fn eval_map(p: &MapParams, z: ComplexValue) -> std::result::Result<ComplexValue, PoleHit> {
    p.eval(z)
}

/// `f'(z) = 1 + sec^2 z = 2 + tan^2 z`, independent of `lambda` and `m`.
#[inline]
pub fn eval_derivative(z: ComplexValue) -> std::result::Result<ComplexValue, PoleHit> {
    let t = stable_tan(z)?;
    Ok(t * t + 2.0)
}

/// `f''(z) = 2 tan z (1 + tan^2 z)`.
pub fn eval_second_derivative(z: ComplexValue) -> std::result::Result<ComplexValue, PoleHit> {
    let t = stable_tan(z)?;
    Ok(t * (t * t + 1.0) * 2.0)
}

/// The fixed points `z0 + k pi` of `f_lambda`, all sharing one multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointLattice {
    /// Principal solution of `tan z = -lambda`.
    pub base: ComplexValue,
    pub multiplier: ComplexValue,
}

impl FixedPointLattice {
    pub fn new(lambda: ComplexValue) -> Result<Self> {
        if (lambda - Complex64::i()).norm() < BAKER_TOL {
            return Err(Error::NoFixedPoints);
        }
        let base = stable_arctan(-lambda).map_err(|e| match e {
            Error::BranchPoint(_) => Error::NoFixedPoints,
            other => other,
        })?;
        Ok(Self {
            base,
            multiplier: multiplier(lambda),
        })
    }

    #[inline]
    pub fn point(&self, k: i64) -> ComplexValue {
        self.base + k as f64 * PI
    }

    /// Lattice index whose fixed point has the nearest real part.
    #[inline]
    pub fn nearest_index(&self, w: ComplexValue) -> i64 {
        let x = (w.re - self.base.re) * FRAC_1_PI;
        // Round half away from zero through truncating casts, which stay
        // inline on targets without a rounding instruction.
        if x >= 0.0 {
            (x + 0.5) as i64
        } else {
            -((0.5 - x) as i64)
        }
    }
}

/// `arctan(-lambda) + k pi` for each `k` in the range.
pub fn fixed_points(lambda: ComplexValue, k_range: RangeInclusive<i64>) -> Result<Vec<ComplexValue>> {
    let lattice = FixedPointLattice::new(lambda)?;
    Ok(k_range.map(|k| lattice.point(k)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfPlane {
    Upper,
    Lower,
}

impl HalfPlane {
    pub fn sign(self) -> f64 {
        match self {
            HalfPlane::Upper => 1.0,
            HalfPlane::Lower => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalData {
    pub k: i64,
    pub point: ComplexValue,
    pub value: ComplexValue,
    pub half_plane: HalfPlane,
}

/// `pi/2 + k pi ± i asinh(1)`.
pub fn critical_point(k: i64, half: HalfPlane) -> ComplexValue {
    Complex64::new(FRAC_PI_2 + k as f64 * PI, half.sign() * CRITICAL_HEIGHT)
}

/// Closed-form critical value `(lambda + m pi) + pi/2 + k pi ± i (asinh 1 + sqrt 2)`.
pub fn critical_value(p: &MapParams, k: i64, half: HalfPlane) -> ComplexValue {
    p.offset()
        + Complex64::new(
            FRAC_PI_2 + k as f64 * PI,
            half.sign() * (CRITICAL_HEIGHT + std::f64::consts::SQRT_2),
        )
}

/// Critical points with their values, lower half-plane first for each `k`.
pub fn critical_points(p: &MapParams, k_range: RangeInclusive<i64>) -> Vec<CriticalData> {
    k_range
        .flat_map(|k| {
            [HalfPlane::Lower, HalfPlane::Upper].map(|half| CriticalData {
                k,
                point: critical_point(k, half),
                value: critical_value(p, k, half),
                half_plane: half,
            })
        })
        .collect()
}

pub fn critical_values(p: &MapParams, k_range: RangeInclusive<i64>) -> Vec<ComplexValue> {
    critical_points(p, k_range).into_iter().map(|c| c.value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn i_sqrt2() -> Complex64 {
        c(0.0, 2f64.sqrt())
    }

    fn attracting(m: i64) -> MapParams {
        MapParams::new(i_sqrt2(), m, None).unwrap()
    }

    #[test]
    fn critical_height_is_asinh_one() {
        assert!((CRITICAL_HEIGHT - 1f64.asinh()).abs() < 1e-16);
        assert!((CRITICAL_HEIGHT - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-15);
    }

    #[test]
    fn eval_map_examples() {
        let baker = MapParams::new(Complex64::i(), 0, None).unwrap();
        assert_eq!(eval_map(&baker, c(0.0, 0.0)).unwrap(), Complex64::i());
        let shifted = baker.with_shift(1);
        assert!((eval_map(&shifted, c(0.0, 0.0)).unwrap() - c(PI, 1.0)).norm() < 1e-15);

        let z = critical_point(0, HalfPlane::Lower);
        let fz = eval_map(&attracting(0), z).unwrap();
        assert!((fz - z).norm() < 1e-12, "residual {}", (fz - z).norm());
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(eval_derivative(c(0.0, 0.0)).unwrap(), c(2.0, 0.0));
        for k in -3..=3 {
            for half in [HalfPlane::Lower, HalfPlane::Upper] {
                let d = eval_derivative(critical_point(k, half)).unwrap();
                assert!(d.norm() < 1e-12, "k={k} {half:?}: {d}");
            }
        }
        let lambda = c(0.3, 1.4);
        for z in fixed_points(lambda, -3..=3).unwrap() {
            let d = eval_derivative(z).unwrap();
            assert!((d - multiplier(lambda)).norm() < 1e-10);
        }
    }

    #[test]
    fn fixed_point_examples() {
        let pts = fixed_points(i_sqrt2(), 0..=1).unwrap();
        assert!((pts[0] - c(FRAC_PI_2, -CRITICAL_HEIGHT)).norm() < 1e-14);
        assert!((pts[1] - pts[0] - PI).norm() < 1e-15);
        assert_eq!(fixed_points(Complex64::i(), 0..=0), Err(Error::NoFixedPoints));
    }

    #[test]
    fn lattice_points_are_fixed_and_in_lower_half() {
        for lambda in [i_sqrt2(), c(0.3, 1.2), c(-0.7, 0.4), lambda_from_alpha(0.125)] {
            let p = MapParams::with_regime(lambda, 0, Regime::Other);
            let lat = p.lattice().unwrap();
            assert!(lat.base.im < 0.0);
            for k in -20..=20 {
                let z = lat.point(k);
                assert!((p.eval(z).unwrap() - z).norm() < 1e-10, "lambda={lambda} k={k}");
            }
        }
    }

    #[test]
    fn critical_value_examples() {
        let p = MapParams::new(Complex64::i(), 0, None).unwrap();
        let up = critical_value(&p, 0, HalfPlane::Upper);
        let expect = c(FRAC_PI_2, 1.0 + 2.295_587_1);
        assert!((up - expect).norm() < 1e-7);
        // Oracle: evaluate the map at the critical point.
        let direct = p.eval(critical_point(0, HalfPlane::Upper)).unwrap();
        assert!((direct - up).norm() < 1e-12);

        for cd in critical_points(&attracting(2), -4..=4) {
            assert!((attracting(2).eval(cd.point).unwrap() - cd.value).norm() < 1e-12);
        }
    }

    #[test]
    fn superattracting_coincidence() {
        let p = attracting(0);
        let fp = p.lattice().unwrap().point(0);
        let cp = critical_point(0, HalfPlane::Lower);
        assert!((fp - cp).norm() < 1e-14);
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(i_sqrt2(), None).unwrap(), Regime::Attracting);
        assert_eq!(classify_regime(Complex64::i(), None).unwrap(), Regime::BakerI);
        let l = lambda_from_alpha(0.125);
        let a = Alpha::rational(1, 8).unwrap();
        assert_eq!(classify_regime(l, Some(a)).unwrap(), Regime::Parabolic { p: 1, q: 8 });
        assert_eq!(classify_regime(l, None), Err(Error::AmbiguousRegime));
        let g = lambda_from_alpha(Alpha::golden().value());
        assert!(matches!(
            classify_regime(g, Some(Alpha::golden())).unwrap(),
            Regime::Siegel { .. }
        ));
        assert!(matches!(classify_regime(g, Some(a)), Err(Error::AlphaMismatch { .. })));
        assert_eq!(classify_regime(c(0.0, 3.0), None).unwrap(), Regime::Other);
        assert!(classify_regime(c(1.0, 0.0), None).is_err());
    }

    #[test]
    fn lambda_from_alpha_examples() {
        let l = lambda_from_alpha(0.125);
        let s2 = 2f64.sqrt();
        let caption = (c(-4.0 + s2, s2) * 2.0).sqrt() / 2.0;
        assert!((l - caption).norm() < 1e-15, "{l} vs {caption}");
        assert!((l - c(0.30061, 1.17612)).norm() < 1e-5);
        // Oracle: square it and compare with e^{i pi/4} - 2.
        let target = c((PI / 4.0).cos() - 2.0, (PI / 4.0).sin());
        assert!((l * l - target).norm() < 1e-14);

        assert!((lambda_from_alpha(0.0) - Complex64::i()).norm() < 1e-15);

        let g = lambda_from_alpha(Alpha::golden().value());
        assert!(g.im > 0.0);
        assert!((multiplier(g).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!("2/16".parse::<Alpha>().unwrap(), Alpha::Rational { p: 1, q: 8 });
        assert_eq!("golden".parse::<Alpha>().unwrap(), Alpha::golden());
        assert!("1/0".parse::<Alpha>().is_err());
        assert!("0.5".parse::<Alpha>().is_err());
    }

    #[test]
    fn normalization_flips_shift() {
        assert_eq!(normalize_lambda(c(0.2, -1.0), 3).unwrap(), (c(-0.2, 1.0), -3));
        assert!(normalize_lambda(c(0.2, 0.0), 1).is_err());
    }

    proptest! {
        #[test]
        fn lattices_step_by_pi(re in -2.0f64..2.0, im in 0.05f64..3.0, k in -10i64..10) {
            let lambda = c(re, im);
            prop_assume!((lambda - Complex64::i()).norm() > 1e-3);
            let pts = fixed_points(lambda, k..=k + 1).unwrap();
            prop_assert!((pts[1].re - pts[0].re - PI).abs() < 1e-12);
            let a = critical_point(k, HalfPlane::Lower);
            let b = critical_point(k + 1, HalfPlane::Lower);
            prop_assert!((b.re - a.re - PI).abs() < 1e-12);
        }

        #[test]
        fn multiplier_is_constant_on_the_lattice(re in -2.0f64..2.0, im in 0.05f64..3.0) {
            let lambda = c(re, im);
            prop_assume!((lambda - Complex64::i()).norm() > 1e-2);
            let lat = FixedPointLattice::new(lambda).unwrap();
            let d0 = eval_derivative(lat.point(0)).unwrap();
            for k in -5..=5 {
                let d = eval_derivative(lat.point(k)).unwrap();
                prop_assert!((d - d0).norm() < 1e-10 * d0.norm().max(1.0));
            }
        }

        #[test]
        fn conjugacy_between_lambda_and_minus_lambda(
            re in -2.0f64..2.0, im in 0.05f64..3.0, x in -3.0f64..3.0, y in -3.0f64..3.0,
        ) {
            let lambda = c(re, im);
            let z = c(x, y);
            let f = MapParams::with_regime(lambda, 0, Regime::Other);
            let g = MapParams::with_regime(-lambda, 0, Regime::Other);
            if let (Ok(a), Ok(b)) = (g.eval(z), f.eval(-z)) {
                prop_assert!((a + b).norm() < 1e-12 * a.norm().max(1.0));
            }
        }

        #[test]
        fn critical_fixed_coincidence_iff_zero_multiplier(re in -1.0f64..1.0, im in 0.05f64..3.0) {
            let lambda = c(re, im);
            prop_assume!((lambda - Complex64::i()).norm() > 1e-2);
            let fp = FixedPointLattice::new(lambda).unwrap().base;
            let cp = critical_point(0, HalfPlane::Lower);
            let coincide = (0..=0).chain(-2..=2).any(|k| (fp + k as f64 * PI - cp).norm() < 1e-9);
            prop_assert_eq!(coincide, multiplier(lambda).norm() < 1e-9);
        }
    }
}
