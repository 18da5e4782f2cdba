//! Orbit iteration for `f_{lambda + m pi}` with the drift `n m pi` removed,
//! terminal-behavior classification, preimage search and rotation numbers.
//!
//! `f^n_{lambda + m pi}(z) = n m pi + f^n_lambda(z)`, so subtracting the
//! trend from the raw orbit yields an orbit of the base map `f_lambda`.
//! Every classification rule looks only at that detrended sequence.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complex::ComplexValue;
use crate::error::{Error, Result};
use crate::family::{eval_derivative, eval_second_derivative, FixedPointLattice, MapParams, Regime};

/// A bounded orbit further than this from its seed is not Siegel-bounded.
pub const SIEGEL_BOUND: f64 = PI;

/// A Siegel-bounded orbit must come back this close to its seed.
pub const RECURRENCE_TOL: f64 = 1e-3;

/// Converged preimages closer than this are the same root.
pub const PREIMAGE_DEDUP_TOL: f64 = 1e-8;

/// Residual `|f(w) - target|` a preimage must reach.
pub const PREIMAGE_RESIDUAL_TOL: f64 = 1e-9;

/// Minimum distance an orbit keeps from the center for [`rotation_number`].
pub const CENTER_CLEARANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationBudget {
    pub max_iter: usize,
    pub escape_im_up: f64,
    pub escape_im_down: f64,
    /// Attracting regime: distance to a lattice point. Parabolic regime:
    /// distance of the petal-cycle average to a lattice point.
    pub converge_tol: f64,
    /// Consecutive steps a convergence or descent rule must hold.
    pub detrend_window: usize,
}

impl Default for IterationBudget {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            escape_im_up: 50.0,
            escape_im_down: -50.0,
            converge_tol: 1e-9,
            detrend_window: 25,
        }
    }
}

impl IterationBudget {
    /// Defaults tuned to the speed of each regime's dynamics.
    ///
    /// Parabolic orbits approach their fixed point like `n^{-1/q}`, so
    /// convergence is judged on petal-cycle averages with a looser
    /// tolerance. Lower Baker orbits of `f_i` sink like `-ln(n)/2`, so the
    /// descent threshold sits at `-4`.
    pub fn for_regime(regime: &Regime) -> Self {
        let base = Self::default();
        match regime {
            Regime::Attracting | Regime::Other => base,
            Regime::BakerI => Self {
                max_iter: 20_000,
                escape_im_down: -4.0,
                ..base
            },
            Regime::Parabolic { .. } => Self {
                max_iter: 100_000,
                converge_tol: 1e-3,
                ..base
            },
            Regime::Siegel { .. } => Self {
                max_iter: 100_000,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidBudget(msg.to_string()));
        if self.max_iter < 1 {
            return bad("max_iter must be at least 1");
        }
        if self.escape_im_up.is_nan() || self.escape_im_up <= 0.0 {
            return bad("escape_im_up must be positive");
        }
        if self.escape_im_down.is_nan() || self.escape_im_down >= 0.0 {
            return bad("escape_im_down must be negative");
        }
        if self.converge_tol.is_nan() || self.converge_tol <= 0.0 {
            return bad("converge_tol must be positive");
        }
        if self.detrend_window < 1 {
            return bad("detrend_window must be at least 1");
        }
        Ok(())
    }
}

/// Terminal behavior of one orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum OrbitStatus {
    /// Settled on the attracting fixed point `z0 + k pi`.
    ConvergedInterior {
        k: i64,
    },
    /// Climbed into the primary Baker domain.
    EscapedUpPrimary,
    /// Sinking inside a lower Baker domain of `f_i`.
    EscapedDownBaker,
    /// Captured by the parabolic fixed point `z0 + k pi`.
    ParabolicBoundary {
        k: i64,
    },
    /// Bounded and recurrent for the whole budget.
    SiegelBounded,
    /// `tan` blew up at this step.
    PoleAdjacent {
        step: usize,
    },
    Undetermined,
}

impl OrbitStatus {
    pub fn lattice_index(&self) -> Option<i64> {
        match *self {
            OrbitStatus::ConvergedInterior { k } | OrbitStatus::ParabolicBoundary { k } => Some(k),
            _ => None,
        }
    }
}

/// A recorded orbit. `detrended[n] = raw[n] - n m pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub raw: Vec<ComplexValue>,
    pub detrended: Vec<ComplexValue>,
    pub status: OrbitStatus,
    pub steps_used: usize,
}

impl OrbitTrace {
    pub fn last_detrended(&self) -> ComplexValue {
        *self.detrended.last().expect("trace holds at least the seed")
    }
}

/// `n m pi`, rounded once.
#[inline]
pub fn trend(n: usize, m: i64) -> f64 {
    (n as i64 * m) as f64 * PI
}

/// Streaming form of the classification rules, fed one detrended point at a
/// time. [`iterate`] runs it online to stop early; [`classify`] replays it
/// over a stored trace, so both always agree.
#[derive(Debug, Clone)]
pub struct OrbitClassifier {
    regime: Regime,
    lattice: Option<FixedPointLattice>,
    budget: IterationBudget,
    period: usize,
    // Last `period + 1` points as a ring; `ring_sum` holds the newest `period`.
    ring: Vec<ComplexValue>,
    ring_head: usize,
    ring_len: usize,
    ring_sum: ComplexValue,
    streak: usize,
    streak_k: i64,
    descent: usize,
    prev_im: f64,
    re_history: Vec<f64>,
    scratch: Vec<f64>,
    track_recurrence: bool,
    seed: ComplexValue,
    // Squared distances from the seed.
    max_excursion: f64,
    min_return: f64,
    seen: usize,
}

impl OrbitClassifier {
    pub fn new(regime: Regime, lattice: Option<FixedPointLattice>, budget: IterationBudget) -> Self {
        let period = regime.petal_period().unwrap_or(1).max(1);
        Self {
            regime,
            lattice,
            budget,
            period,
            ring: vec![Complex64::new(0.0, 0.0); period + 1],
            ring_head: 0,
            ring_len: 0,
            ring_sum: Complex64::new(0.0, 0.0),
            streak: 0,
            streak_k: 0,
            descent: 0,
            prev_im: f64::INFINITY,
            re_history: Vec::new(),
            scratch: Vec::new(),
            track_recurrence: matches!(regime, Regime::Siegel { .. }),
            seed: Complex64::new(0.0, 0.0),
            max_excursion: 0.0,
            min_return: f64::INFINITY,
            seen: 0,
        }
    }

    pub fn for_params(p: &MapParams, budget: IterationBudget) -> Self {
        Self::new(p.regime(), p.lattice().ok(), budget)
    }

    pub fn reset(&mut self) {
        self.ring_head = 0;
        self.ring_len = 0;
        self.ring_sum = Complex64::new(0.0, 0.0);
        self.streak = 0;
        self.descent = 0;
        self.prev_im = f64::INFINITY;
        self.re_history.clear();
        self.max_excursion = 0.0;
        self.min_return = f64::INFINITY;
        self.seen = 0;
    }

    /// Feed the next detrended point; returns a status once a rule fires.
    pub fn push(&mut self, w: ComplexValue) -> Option<OrbitStatus> {
        if self.seen == 0 {
            self.seed = w;
        } else if self.track_recurrence {
            let d2 = (w - self.seed).norm_sqr();
            self.max_excursion = self.max_excursion.max(d2);
            self.min_return = self.min_return.min(d2);
        }
        self.seen += 1;
        self.re_history.push(w.re);

        if w.im > self.budget.escape_im_up {
            return Some(OrbitStatus::EscapedUpPrimary);
        }
        if let Some(status) = self.convergence_rule(w) {
            return Some(status);
        }
        if let Some(status) = self.descent_rule(w) {
            return Some(status);
        }
        self.prev_im = w.im;
        None
    }

    /// Status once the budget is exhausted without any rule firing.
    pub fn finish(&self) -> OrbitStatus {
        let bounded_recurrent = self.seen > 1
            && self.max_excursion <= SIEGEL_BOUND * SIEGEL_BOUND
            && self.min_return <= RECURRENCE_TOL * RECURRENCE_TOL;
        if self.track_recurrence && bounded_recurrent {
            OrbitStatus::SiegelBounded
        } else {
            OrbitStatus::Undetermined
        }
    }

    fn bump_streak(&mut self, hit: bool, k: i64) -> bool {
        if hit {
            if self.streak > 0 && self.streak_k == k {
                self.streak += 1;
            } else {
                self.streak = 1;
                self.streak_k = k;
            }
        } else {
            self.streak = 0;
        }
        self.streak >= self.budget.detrend_window
    }

    fn convergence_rule(&mut self, w: ComplexValue) -> Option<OrbitStatus> {
        let lattice = self.lattice?;
        match self.regime {
            Regime::Attracting => {
                let k = lattice.nearest_index(w);
                let tol = self.budget.converge_tol;
                let hit = (w - lattice.point(k)).norm_sqr() < tol * tol;
                self.bump_streak(hit, k).then_some(OrbitStatus::ConvergedInterior { k })
            }
            Regime::Parabolic { .. } => {
                let q = self.period;
                let size = q + 1;
                // Slot about to be overwritten holds w_{n-q-1}; the one after
                // it holds w_{n-q}, which leaves the sum.
                let leaving = self.ring[(self.ring_head + 1) % size];
                self.ring[self.ring_head] = w;
                self.ring_head = (self.ring_head + 1) % size;
                self.ring_len += 1;
                self.ring_sum += w;
                if self.ring_len > q {
                    self.ring_sum -= leaving;
                }
                if self.ring_len < size {
                    return None;
                }
                let oldest = self.ring[self.ring_head];
                // Average over one petal cycle cancels the rotation about the
                // fixed point; the f^q subsequence must also be approaching it.
                let avg = self.ring_sum / q as f64;
                let k = lattice.nearest_index(avg);
                let zk = lattice.point(k);
                let tol = self.budget.converge_tol;
                let hit = (avg - zk).norm_sqr() < tol * tol && (w - zk).norm_sqr() < (oldest - zk).norm_sqr();
                self.bump_streak(hit, k).then_some(OrbitStatus::ParabolicBoundary { k })
            }
            _ => None,
        }
    }

    fn descent_rule(&mut self, w: ComplexValue) -> Option<OrbitStatus> {
        if w.im < self.budget.escape_im_down && w.im < self.prev_im {
            self.descent += 1;
        } else {
            self.descent = 0;
        }
        let window = self.budget.detrend_window;
        if self.descent < window || !self.descent.is_multiple_of(window) {
            return None;
        }
        // Re must stay within a width-pi window about the running median.
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.re_history);
        let mid = self.scratch.len() / 2;
        let (_, median, _) = self.scratch.select_nth_unstable_by(mid, f64::total_cmp);
        let median = *median;
        let confined = self.re_history.iter().all(|&x| (x - median).abs() <= FRAC_PI_2);
        confined.then_some(OrbitStatus::EscapedDownBaker)
    }
}

/// Iterate `f_{lambda + m pi}` from `z0` until a classification rule fires
/// or the budget runs out, recording raw and detrended points.
pub fn iterate(p: &MapParams, z0: ComplexValue, b: &IterationBudget) -> OrbitTrace {
    let mut cls = OrbitClassifier::for_params(p, *b);
    let mut raw = vec![z0];
    let mut detrended = vec![z0];
    let mut status = cls.push(z0);
    let mut z = z0;
    let mut steps = 0;
    while status.is_none() && steps < b.max_iter {
        steps += 1;
        z = match p.eval(z) {
            Ok(v) => v,
            Err(_) => {
                status = Some(OrbitStatus::PoleAdjacent { step: steps });
                break;
            }
        };
        let w = z - trend(steps, p.m());
        raw.push(z);
        detrended.push(w);
        status = cls.push(w);
    }
    OrbitTrace {
        raw,
        detrended,
        status: status.unwrap_or_else(|| cls.finish()),
        steps_used: steps,
    }
}

/// Same rules as [`iterate`] without recording the orbit. `cls` is reset
/// and reused so grid workers avoid reallocating.
pub fn orbit_status(
    p: &MapParams,
    z0: ComplexValue,
    b: &IterationBudget,
    cls: &mut OrbitClassifier,
) -> (OrbitStatus, usize) {
    cls.reset();
    if let Some(s) = cls.push(z0) {
        return (s, 0);
    }
    let mut z = z0;
    for n in 1..=b.max_iter {
        z = match p.eval(z) {
            Ok(v) => v,
            Err(_) => return (OrbitStatus::PoleAdjacent { step: n }, n),
        };
        if let Some(s) = cls.push(z - trend(n, p.m())) {
            return (s, n);
        }
    }
    (cls.finish(), b.max_iter)
}

/// Exactly `n` steps of the raw orbit, seed included.
pub fn raw_orbit(p: &MapParams, z0: ComplexValue, n: usize) -> Result<Vec<ComplexValue>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(z0);
    let mut z = z0;
    for step in 1..=n {
        z = p.eval(z).map_err(|_| Error::Incomparable { step })?;
        out.push(z);
    }
    Ok(out)
}

/// `raw[n] - n m pi` for a whole raw orbit.
pub fn detrend(raw: &[ComplexValue], m: i64) -> Vec<ComplexValue> {
    raw.iter().enumerate().map(|(n, z)| z - trend(n, m)).collect()
}

/// Re-derive the status of a stored trace from its detrended points alone.
pub fn classify(t: &OrbitTrace, r: &Regime, fpl: Option<&FixedPointLattice>, b: &IterationBudget) -> OrbitStatus {
    if let OrbitStatus::PoleAdjacent { .. } = t.status {
        return t.status;
    }
    let mut cls = OrbitClassifier::new(*r, fpl.copied(), *b);
    for &w in &t.detrended {
        if let Some(s) = cls.push(w) {
            return s;
        }
    }
    if t.detrended.len() > b.max_iter {
        cls.finish()
    } else {
        OrbitStatus::Undetermined
    }
}

/// `|f^n_{lambda + m pi}(z0) - n m pi - f^n_lambda(z0)|` from two separate
/// iterations.
pub fn verify_conjugacy(lambda: ComplexValue, m: i64, z0: ComplexValue, n: usize) -> Result<f64> {
    let shifted = MapParams::with_regime(lambda, m, Regime::Other);
    let base = shifted.with_shift(0);
    let a = *raw_orbit(&shifted, z0, n)?.last().unwrap();
    let b = *raw_orbit(&base, z0, n)?.last().unwrap();
    Ok((a - trend(n, m) - b).norm())
}

/// Which of the `|m|` grand-orbit families a convergent orbit belongs to:
/// the lattice index of its limit, reduced mod `|m|`.
pub fn residue_class(t: &OrbitTrace, fpl: &FixedPointLattice, m: i64) -> Result<i64> {
    if m == 0 {
        return Err(Error::NotApplicable("residue classes need m != 0".into()));
    }
    if t.status.lattice_index().is_none() {
        return Err(Error::NotApplicable(format!(
            "orbit status {:?} is not convergent",
            t.status
        )));
    }
    let x = (t.last_detrended().re - fpl.base.re) / PI;
    let j = x.round();
    if (x - j).abs() > 0.25 {
        return Err(Error::NotApplicable(format!(
            "limit is {:.3} lattice steps off the lattice",
            x - j
        )));
    }
    Ok((j as i64).rem_euclid(m.abs()))
}

/// Axis-aligned rectangle in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn contains(&self, z: ComplexValue) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn around(center: ComplexValue, half_width: f64) -> Self {
        Self {
            re_min: center.re - half_width,
            re_max: center.re + half_width,
            im_min: center.im - half_width,
            im_max: center.im + half_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preimage {
    pub point: ComplexValue,
    /// 2 at a critical point, 1 otherwise.
    pub local_degree: u32,
}

fn newton_root(p: &MapParams, target: ComplexValue, mut w: ComplexValue) -> Option<ComplexValue> {
    for _ in 0..80 {
        let g = p.eval(w).ok()? - target;
        let d = eval_derivative(w).ok()?;
        if d.norm() == 0.0 {
            return None;
        }
        let step = g / d;
        w -= step;
        if !(w.re.is_finite() && w.im.is_finite()) || w.norm() > 1e6 {
            return None;
        }
        if step.norm() <= 1e-15 * w.norm().max(1.0) {
            break;
        }
    }
    ((p.eval(w).ok()? - target).norm() < PREIMAGE_RESIDUAL_TOL).then_some(w)
}

/// Snap a converged root onto a nearby critical point when it is a double
/// root there; Newton only converges linearly onto those.
fn polish_multiple(p: &MapParams, target: ComplexValue, w: ComplexValue) -> Preimage {
    let simple = Preimage {
        point: w,
        local_degree: 1,
    };
    if eval_derivative(w).map_or(true, |d| d.norm() > 1e-4) {
        return simple;
    }
    let mut c = w;
    for _ in 0..40 {
        let (Ok(d1), Ok(d2)) = (eval_derivative(c), eval_second_derivative(c)) else {
            return simple;
        };
        if d2.norm() == 0.0 {
            return simple;
        }
        c -= d1 / d2;
    }
    let close = (c - w).norm() < 1e-4;
    let root = p.eval(c).is_ok_and(|f| (f - target).norm() < PREIMAGE_RESIDUAL_TOL);
    let nondegenerate = eval_second_derivative(c).is_ok_and(|d2| d2.norm() > 1e-8);
    if close && root && nondegenerate {
        Preimage {
            point: c,
            local_degree: 2,
        }
    } else {
        simple
    }
}

/// Solutions of `f_{lambda + m pi}(w) = target` inside `rect`, found by
/// Newton's method from a `seeds x seeds` grid of starting points.
/// Divergent starts are dropped; roots are merged at [`PREIMAGE_DEDUP_TOL`].
pub fn preimages(p: &MapParams, target: ComplexValue, rect: &Rect, seeds: usize) -> Vec<Preimage> {
    let mut found: Vec<Preimage> = Vec::new();
    let n = seeds.max(1);
    for j in 0..n {
        for i in 0..n {
            let seed = Complex64::new(
                rect.re_min + (i as f64 + 0.5) / n as f64 * (rect.re_max - rect.re_min),
                rect.im_min + (j as f64 + 0.5) / n as f64 * (rect.im_max - rect.im_min),
            );
            let Some(w) = newton_root(p, target, seed) else {
                continue;
            };
            if !rect.contains(w) {
                continue;
            }
            let root = polish_multiple(p, target, w);
            match found
                .iter_mut()
                .find(|r| (r.point - root.point).norm() < PREIMAGE_DEDUP_TOL)
            {
                Some(r) => r.local_degree = r.local_degree.max(root.local_degree),
                None => found.push(root),
            }
        }
    }
    found.sort_by(|a, b| {
        a.point
            .re
            .total_cmp(&b.point.re)
            .then(a.point.im.total_cmp(&b.point.im))
    });
    found
}

/// Mean turning angle of the detrended orbit about `center`, in turns,
/// reduced to `[0, 1)`.
pub fn rotation_number(t: &OrbitTrace, center: ComplexValue) -> Result<f64> {
    if !matches!(
        t.status,
        OrbitStatus::SiegelBounded | OrbitStatus::ParabolicBoundary { .. }
    ) {
        return Err(Error::NotApplicable(format!(
            "orbit status {:?} is not bounded",
            t.status
        )));
    }
    if t.detrended.len() < 2 {
        return Err(Error::NotApplicable("orbit has a single point".into()));
    }
    if t.detrended.iter().any(|w| (w - center).norm() < CENTER_CLEARANCE) {
        return Err(Error::NotApplicable("orbit touches the center".into()));
    }
    let total: f64 = t
        .detrended
        .windows(2)
        .map(|w| ((w[1] - center) / (w[0] - center)).arg())
        .sum();
    let turns = total / (2.0 * PI) / (t.detrended.len() - 1) as f64;
    Ok(turns.rem_euclid(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{critical_point, Alpha, HalfPlane};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn attracting(m: i64) -> MapParams {
        MapParams::new(c(0.0, 2f64.sqrt()), m, None).unwrap()
    }

    fn baker(m: i64) -> MapParams {
        MapParams::new(Complex64::i(), m, None).unwrap()
    }

    fn parabolic(m: i64) -> MapParams {
        MapParams::from_alpha(Alpha::rational(1, 8).unwrap(), m).unwrap()
    }

    fn siegel(m: i64) -> MapParams {
        MapParams::from_alpha(Alpha::golden(), m).unwrap()
    }

    fn lower_crit(k: i64) -> Complex64 {
        critical_point(k, HalfPlane::Lower)
    }

    #[test]
    fn budget_validation() {
        assert!(IterationBudget::default().validate().is_ok());
        let bad = IterationBudget {
            converge_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IterationBudget {
            escape_im_down: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IterationBudget {
            max_iter: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn upper_half_plane_seed_escapes_up() {
        let p = baker(0);
        let t = iterate(&p, c(0.0, 2.0), &IterationBudget::default());
        assert_eq!(t.status, OrbitStatus::EscapedUpPrimary);
        assert!(t.raw.windows(2).all(|w| w[1].im > w[0].im));
    }

    #[test]
    fn shifted_critical_orbit_detrends_to_superattracting_point() {
        let p = attracting(1);
        let t = iterate(&p, lower_crit(0), &IterationBudget::default());
        assert_eq!(t.status, OrbitStatus::ConvergedInterior { k: 0 });
        // Oracle: iterate the base map directly.
        let base = raw_orbit(&p.with_shift(0), lower_crit(0), t.steps_used).unwrap();
        for (w, v) in t.detrended.iter().zip(&base) {
            assert!((w - v).norm() < 1e-12);
        }
        let fp = p.lattice().unwrap().point(0);
        assert!((t.last_detrended() - fp).norm() < 1e-12);
        assert!((t.raw.last().unwrap() - fp).re > 0.9 * PI * t.steps_used as f64);
    }

    #[test]
    fn lower_baker_seed_sinks() {
        let p = baker(1);
        let b = IterationBudget::for_regime(&p.regime());
        let t = iterate(&p, c(FRAC_PI_2, -2.0), &b);
        assert_eq!(t.status, OrbitStatus::EscapedDownBaker);
        assert!(t.raw.last().unwrap().im < b.escape_im_down);
        let tail = &t.raw[t.raw.len() - 100..];
        assert!(tail.windows(2).all(|w| w[1].im < w[0].im));
    }

    #[test]
    fn pole_hit_is_reported_with_step() {
        let p = attracting(0);
        let t = iterate(&p, c(FRAC_PI_2, 0.0), &IterationBudget::default());
        assert_eq!(t.status, OrbitStatus::PoleAdjacent { step: 1 });
        assert_eq!(t.raw.len(), 1);
    }

    #[test]
    fn conjugacy_examples() {
        let r = verify_conjugacy(c(0.3, 1.1), 2, c(0.4, -0.2), 1).unwrap();
        assert!(r < 1e-14, "{r}");

        let lambda = c(0.0, 2f64.sqrt());
        let z0 = c(-1.0, -1.0);
        let r = verify_conjugacy(lambda, 1, z0, 20).unwrap();
        let f20 = *raw_orbit(&attracting(1), z0, 20).unwrap().last().unwrap();
        assert!(r < 1e-9 * (1.0 + f20.norm()), "{r}");

        let p = parabolic(2);
        let z0 = p.lattice().unwrap().point(0) + c(0.01, 0.02);
        let r = verify_conjugacy(p.lambda(), 2, z0, 100).unwrap();
        let f100 = *raw_orbit(&p, z0, 100).unwrap().last().unwrap();
        assert!(r / (1.0 + f100.norm()) < 1e-8);
    }

    #[test]
    fn conjugacy_reports_poles() {
        let err = verify_conjugacy(c(0.0, 1.5), 1, c(FRAC_PI_2, 0.0), 5).unwrap_err();
        assert_eq!(err, Error::Incomparable { step: 1 });
    }

    #[test]
    fn classify_examples() {
        let p = attracting(0);
        let b = IterationBudget::default();
        let lat = p.lattice().unwrap();
        let t = iterate(&p, lower_crit(0), &b);
        assert_eq!(
            classify(&t, &p.regime(), Some(&lat), &b),
            OrbitStatus::ConvergedInterior { k: 0 }
        );

        let p = baker(0);
        let t = iterate(&p, c(0.0, 2.0), &b);
        assert_eq!(classify(&t, &p.regime(), None, &b), OrbitStatus::EscapedUpPrimary);

        let p = parabolic(0);
        let b = IterationBudget::for_regime(&p.regime());
        let lat = p.lattice().unwrap();
        let t = iterate(&p, lower_crit(0), &b);
        let status = classify(&t, &p.regime(), Some(&lat), &b);
        assert!(matches!(status, OrbitStatus::ParabolicBoundary { .. }), "{status:?}");
        assert_eq!(status, t.status);
        let k = status.lattice_index().unwrap();
        assert!((t.last_detrended() - lat.point(k)).norm() < 0.3);
    }

    #[test]
    fn classification_ignores_the_shift() {
        let p = attracting(3);
        let b = IterationBudget::default();
        let lat = p.lattice().unwrap();
        let t = iterate(&p, c(1.3, -1.1), &b);
        for m in [-2, 0, 5] {
            let q = p.with_shift(m);
            assert_eq!(classify(&t, &q.regime(), Some(&lat), &b), t.status);
        }
    }

    #[test]
    fn residue_classes_split_grand_orbits() {
        let p = attracting(2);
        let b = IterationBudget::default();
        let lat = p.lattice().unwrap();
        let seed_v = lower_crit(0) + c(0.2, -0.1);
        let seed_vpi = seed_v + PI;
        let t0 = iterate(&p, seed_v, &b);
        let t1 = iterate(&p, seed_vpi, &b);
        assert_eq!(residue_class(&t0, &lat, 2).unwrap(), 0);
        assert_eq!(residue_class(&t1, &lat, 2).unwrap(), 1);

        let image = p.eval(seed_v).unwrap();
        assert_eq!(residue_class(&iterate(&p, image, &b), &lat, 2).unwrap(), 0);
        let shifted = iterate(&p, seed_v + 2.0 * PI, &b);
        assert_eq!(residue_class(&shifted, &lat, 2).unwrap(), 0);

        let up = iterate(&p, c(0.0, 2.0), &b);
        assert!(matches!(residue_class(&up, &lat, 2), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn superattracting_point_is_a_double_preimage() {
        let p = attracting(1);
        let z0 = p.lattice().unwrap().point(0);
        let roots = preimages(&p, z0 + PI, &Rect::around(z0, 0.4), 12);
        assert_eq!(roots.len(), 1, "{roots:?}");
        assert_eq!(roots[0].local_degree, 2);
        assert!((roots[0].point - z0).norm() < 1e-12);
        // Oracle for the multiplicity: f'' does not vanish there.
        assert!(eval_second_derivative(z0).unwrap().norm() > 1.0);
    }

    #[test]
    fn generic_target_has_two_nearby_preimages() {
        let p = attracting(1);
        let z0 = p.lattice().unwrap().point(0);
        let s = z0 + c(0.15, 0.1);
        let target = p.eval(s).unwrap();
        let roots = preimages(&p, target, &Rect::around(z0, 0.4), 16);
        assert_eq!(roots.len(), 2, "{roots:?}");
        assert!(roots.iter().any(|r| (r.point - s).norm() < 1e-9));
        for r in &roots {
            assert_eq!(r.local_degree, 1);
            assert!((p.eval(r.point).unwrap() - target).norm() < PREIMAGE_RESIDUAL_TOL);
        }
    }

    #[test]
    fn golden_rotation_number() {
        let p = siegel(1);
        let lat = p.lattice().unwrap();
        let z0 = lat.point(0);
        let alpha = Alpha::golden().value();
        // Oracle: the linear model w -> z0 + e^{2 pi i alpha}(w - z0).
        let rot = Complex64::from_polar(1.0, 2.0 * PI * alpha);
        let mut model = vec![z0 + 0.02];
        for _ in 0..10_000 {
            let w = *model.last().unwrap();
            model.push(z0 + rot * (w - z0));
        }
        let model_trace = OrbitTrace {
            raw: model.clone(),
            detrended: model,
            status: OrbitStatus::SiegelBounded,
            steps_used: 10_000,
        };
        assert!((rotation_number(&model_trace, z0).unwrap() - alpha).abs() < 1e-12);

        let b = IterationBudget::for_regime(&p.regime());
        let t = iterate(&p, z0 + 0.02, &b);
        assert_eq!(t.status, OrbitStatus::SiegelBounded);
        assert_eq!(t.steps_used, 100_000);
        let est = rotation_number(&t, z0).unwrap();
        assert!((est - alpha).abs() < 1e-3, "{est}");
    }

    #[test]
    fn rotation_number_rejects_center_seed() {
        let p = siegel(0);
        let z0 = p.lattice().unwrap().point(0);
        let b = IterationBudget {
            max_iter: 1000,
            ..IterationBudget::for_regime(&p.regime())
        };
        let t = iterate(&p, z0, &b);
        assert_eq!(t.status, OrbitStatus::SiegelBounded);
        assert!(matches!(rotation_number(&t, z0), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn parabolic_rotation_number_is_one_eighth() {
        let p = parabolic(0);
        let lat = p.lattice().unwrap();
        let b = IterationBudget::for_regime(&p.regime());
        let t = iterate(&p, lower_crit(0), &b);
        let k = t.status.lattice_index().unwrap();
        let est = rotation_number(&t, lat.point(k)).unwrap();
        assert!((est - 0.125).abs() < 1e-2, "{est}");
        // Oracle: after the transient the orbit closes up every 8 steps far
        // better than it does after 1 step.
        let n = t.detrended.len() - 9;
        let w = &t.detrended;
        assert!((w[n + 8] - w[n]).norm() < 0.05 * (w[n + 1] - w[n]).norm());
    }

    #[test]
    fn superattracting_convergence_is_quadratic() {
        let p = attracting(0);
        let fp = p.lattice().unwrap().point(0);
        let orbit = raw_orbit(&p, fp + c(0.08, -0.05), 8).unwrap();
        let errs: Vec<f64> = orbit.iter().map(|w| (w - fp).norm()).collect();
        let mut worst: f64 = 0.0;
        for e in errs.windows(2).filter(|e| e[0] < 0.1 && e[0] > 1e-7) {
            worst = worst.max(e[1] / (e[0] * e[0]));
        }
        assert!(worst.is_finite() && worst < 3.0, "C = {worst}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn conjugacy_residual_is_small(
            lre in -1.0f64..1.0, lim in 0.3f64..2.0,
            m in prop::sample::select(vec![-3i64, -2, -1, 1, 2, 3]),
            x in -3.0f64..3.0, y in -2.0f64..2.0,
        ) {
            let lambda = c(lre, lim);
            let z0 = c(x, y);
            let p = MapParams::with_regime(lambda, m, Regime::Other);
            if let Ok(r) = verify_conjugacy(lambda, m, z0, 30) {
                let f30 = *raw_orbit(&p, z0, 30).unwrap().last().unwrap();
                prop_assert!(r < 1e-8 * (1.0 + f30.norm()));
            }
        }

        #[test]
        fn detrended_orbits_commute_with_pi_translation(x in -3.0f64..3.0, y in -2.0f64..2.0) {
            let p = attracting(2);
            let z0 = c(x, y);
            if let (Ok(a), Ok(b)) = (raw_orbit(&p, z0, 20), raw_orbit(&p, z0 + PI, 20)) {
                let (a, b) = (detrend(&a, 2), detrend(&b, 2));
                for (u, v) in a.iter().zip(&b) {
                    // Skip once the orbit has left for the primary domain and
                    // is dominated by rounding of large numbers.
                    if u.im > 10.0 { break; }
                    prop_assert!((v - u - PI).norm() < 1e-9 * (1.0 + u.norm()));
                }
            }
        }

        #[test]
        fn preimages_map_back(sx in -0.3f64..0.3, sy in -0.3f64..0.3) {
            let p = attracting(1);
            let z0 = p.lattice().unwrap().point(0);
            let target = p.eval(z0 + c(sx, sy)).unwrap();
            for r in preimages(&p, target, &Rect::around(z0, 0.5), 8) {
                prop_assert!((p.eval(r.point).unwrap() - target).norm() < PREIMAGE_RESIDUAL_TOL);
            }
        }
    }
}
