//! Scenario harness: each theorem about the shifted family becomes a set of
//! named numerical checks with measured values, tolerances and verdicts.
//!
//! Escaping is judged on raw orbits. Geometry (limits, boundary distances,
//! rotation) is judged on detrended orbits, folded by multiples of `pi` into
//! the scenario's grid window.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::complex::ComplexValue;
use crate::error::{Error, Result};
use crate::family::{critical_point, Alpha, FixedPointLattice, HalfPlane, MapParams, Regime};
use crate::orbit::{
    detrend, iterate, preimages, raw_orbit, residue_class, rotation_number, verify_conjugacy, IterationBudget,
    OrbitStatus, OrbitTrace, Rect,
};
use crate::plane::{
    boundary_distance, classify_grid, connected_components, CellTag, ClassifiedGrid, ComponentLabeling, GridSpec,
    NO_COMPONENT,
};

/// Steps iterated past the classification point for tail checks.
pub const TAIL: usize = 200;

/// Newton starts per axis for preimage counts.
pub const PREIMAGE_SEEDS: usize = 48;

/// Radius and separation of the seed pairs used for the Siegel drift check.
pub const PAIR_RADIUS: f64 = 0.01;
pub const PAIR_SEPARATION: f64 = 1e-4;
pub const PAIR_COUNT: usize = 8;
pub const PAIR_DRIFT: f64 = 0.2;

/// Relative tolerance of the conjugacy residual.
pub const CONJUGACY_TOL: f64 = 1e-8;
pub const CONJUGACY_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem4,
}

/// How a seed point is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Seed {
    Point {
        re: f64,
        im: f64,
    },
    /// `pi/2 + k pi - i asinh(1)`.
    LowerCritical {
        k: i64,
    },
    /// Fixed point `z0 + k pi` plus an offset.
    FixedPointOffset {
        k: i64,
        re: f64,
        im: f64,
    },
    /// Center of the first lower-Baker cell entered from a non-Baker cell,
    /// scanning the grid row nearest `im` from the left.
    ScanRow {
        im: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Minimum boundary distance for orbits that stay inside.
    pub delta_interior: f64,
    /// Boundary distance counted as touching the boundary.
    pub eps_boundary: f64,
    pub eps_track: f64,
    pub rot_tol: f64,
}

impl Tolerances {
    /// Grid-scaled defaults: 2 and 3 cell diagonals.
    pub fn for_grid(grid: &GridSpec, eps_track: f64) -> Self {
        let d = grid.cell_diagonal();
        Self {
            delta_interior: 2.0 * d,
            eps_boundary: 3.0 * d,
            eps_track,
            rot_tol: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.delta_interior, self.eps_boundary, self.eps_track, self.rot_tol];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!(
                "tolerances must be positive and finite: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub theorem: Theorem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Alpha>,
    pub m: i64,
    pub seeds: Vec<Seed>,
    /// Budget for the scenario orbits.
    pub budget: IterationBudget,
    pub grid: GridSpec,
    /// Budget for classifying the grid cells.
    pub grid_budget: IterationBudget,
    pub tolerances: Tolerances,
}

fn sqrt2() -> f64 {
    2f64.sqrt()
}

impl ScenarioSpec {
    /// `lambda = i sqrt 2` with a window covering `V, ..., V + (|m|-1) pi`.
    pub fn theorem1(m: i64) -> Self {
        let cols = m.unsigned_abs().max(1) as usize;
        let lattice = FixedPointLattice::new(Complex64::new(0.0, sqrt2())).expect("fixed points exist");
        let z0 = lattice.point(0);
        let grid = GridSpec {
            re_min: z0.re - FRAC_PI_2,
            re_max: z0.re + FRAC_PI_2 + (cols - 1) as f64 * PI,
            im_min: z0.im - 1.5,
            im_max: z0.im + 0.8,
            nx: 160 * cols,
            ny: 150,
        };
        let mut seeds: Vec<Seed> = (0..cols as i64).map(|k| Seed::LowerCritical { k }).collect();
        seeds.push(Seed::FixedPointOffset {
            k: 0,
            re: 0.25,
            im: -0.1,
        });
        Self {
            name: format!("theorem1-m{m}"),
            theorem: Theorem::Theorem1,
            lambda: Some([0.0, sqrt2()]),
            alpha: None,
            m,
            seeds,
            budget: IterationBudget::default(),
            grid,
            grid_budget: IterationBudget::default(),
            tolerances: Tolerances::for_grid(&grid, 1e-6),
        }
    }

    /// `lambda = i`, seed found on the row `Im z = -2`.
    pub fn theorem2(m: i64) -> Self {
        let grid = GridSpec {
            re_min: -0.5,
            re_max: PI + 0.5,
            im_min: -4.5,
            im_max: -0.05,
            nx: 240,
            ny: 240,
        };
        let budget = IterationBudget::for_regime(&Regime::BakerI);
        Self {
            name: format!("theorem2-m{m}"),
            theorem: Theorem::Theorem2,
            lambda: Some([0.0, 1.0]),
            alpha: None,
            m,
            seeds: vec![Seed::ScanRow { im: -2.0 }],
            budget,
            grid,
            grid_budget: budget,
            tolerances: Tolerances::for_grid(&grid, 1e-6),
        }
    }

    /// Parabolic regime with the lower critical orbit as seed.
    pub fn theorem3(alpha: Alpha, m: i64) -> Self {
        let lambda = crate::family::lambda_from_alpha(alpha.value());
        let z0 = FixedPointLattice::new(lambda).expect("fixed points exist").point(0);
        let grid = GridSpec {
            re_min: z0.re - 1.6,
            re_max: z0.re + 1.6,
            im_min: z0.im - 1.6,
            im_max: z0.im + 1.6,
            nx: 400,
            ny: 400,
        };
        let budget = IterationBudget::for_regime(&Regime::Parabolic { p: 0, q: 1 });
        Self {
            name: format!("theorem3-alpha{}-m{m}", alpha.to_string().replace('/', "_")),
            theorem: Theorem::Theorem3,
            lambda: None,
            alpha: Some(alpha),
            m,
            seeds: vec![Seed::LowerCritical { k: 0 }],
            budget,
            grid,
            grid_budget: IterationBudget {
                max_iter: 20_000,
                ..budget
            },
            tolerances: Tolerances::for_grid(&grid, 5e-2),
        }
    }

    /// Golden-mean Siegel regime with a seed near the center.
    pub fn theorem4(m: i64) -> Self {
        let alpha = Alpha::golden();
        let lambda = crate::family::lambda_from_alpha(alpha.value());
        let z0 = FixedPointLattice::new(lambda).expect("fixed points exist").point(0);
        let grid = GridSpec {
            re_min: z0.re - 0.6,
            re_max: z0.re + 0.6,
            im_min: z0.im - 0.6,
            im_max: z0.im + 0.6,
            nx: 120,
            ny: 120,
        };
        let budget = IterationBudget::for_regime(&Regime::Siegel { alpha: alpha.value() });
        Self {
            name: format!("theorem4-m{m}"),
            theorem: Theorem::Theorem4,
            lambda: None,
            alpha: Some(alpha),
            m,
            seeds: vec![Seed::FixedPointOffset {
                k: 0,
                re: 0.05,
                im: 0.0,
            }],
            budget,
            grid,
            grid_budget: IterationBudget {
                max_iter: 20_000,
                ..budget
            },
            tolerances: Tolerances::for_grid(&grid, 1e-6),
        }
    }

    /// One scenario per theorem, all with `m = 1`.
    pub fn defaults() -> Vec<Self> {
        vec![
            Self::theorem1(1),
            Self::theorem2(1),
            Self::theorem3(Alpha::rational(1, 8).expect("nonzero q"), 1),
            Self::theorem4(1),
        ]
    }

    pub fn params(&self) -> Result<MapParams> {
        match (self.lambda, self.alpha) {
            (Some([re, im]), alpha) => MapParams::new(Complex64::new(re, im), self.m, alpha),
            (None, Some(alpha)) => MapParams::from_alpha(alpha, self.m),
            (None, None) => Err(Error::InvalidScenario(format!("{}: needs lambda or alpha", self.name))),
        }
    }

    /// Everything that can be checked without iterating.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidScenario(format!("{}: m must be nonzero", self.name)));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidScenario(format!("{}: empty seed set", self.name)));
        }
        self.tolerances.validate()?;
        self.budget.validate()?;
        self.grid_budget.validate()?;
        self.grid.validate()?;
        self.params()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Fail beats inconclusive beats pass.
    pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Self {
        let mut out = Verdict::Pass;
        for v in verdicts {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub clause: String,
    pub measured: Value,
    pub tolerance: Value,
    pub verdict: Verdict,
}

impl Check {
    fn new(name: &str, clause: &str, measured: Value, tolerance: Value, verdict: Verdict) -> Self {
        Self {
            name: name.into(),
            clause: clause.into(),
            measured,
            tolerance,
            verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub name: String,
    pub theorem: Theorem,
    pub lambda: [f64; 2],
    pub m: i64,
    pub regime: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Alpha>,
    pub window: GridSpec,
    pub budget: IterationBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seeds: Vec<[f64; 2]>,
    pub budget: IterationBudget,
    pub grid_budget: IterationBudget,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub scenario: ScenarioEcho,
    pub checks: Vec<Check>,
    pub overall: Verdict,
    pub provenance: Provenance,
}

impl TheoremReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn pt(z: ComplexValue) -> [f64; 2] {
    [z.re, z.im]
}

fn pts(zs: &[ComplexValue]) -> Vec<[f64; 2]> {
    zs.iter().copied().map(pt).collect()
}

/// Grid, labeling and map shared by the checks of one scenario.
struct Context<'a> {
    spec: &'a ScenarioSpec,
    p: MapParams,
    grid: ClassifiedGrid,
    labels: ComponentLabeling,
}

impl<'a> Context<'a> {
    fn build(spec: &'a ScenarioSpec, expected: impl Fn(&Regime) -> bool, what: &str) -> Result<Self> {
        spec.validate()?;
        let p = spec.params()?;
        if !expected(&p.regime()) {
            return Err(Error::Precondition(format!(
                "{}: {what} requires a different regime, got {}",
                spec.name,
                p.regime()
            )));
        }
        let grid = classify_grid(&p, &spec.grid, &spec.grid_budget, None)?;
        let labels = connected_components(&grid);
        Ok(Self { spec, p, grid, labels })
    }

    fn lattice(&self) -> Result<FixedPointLattice> {
        self.p.lattice()
    }

    fn resolve(&self, seed: &Seed) -> Result<ComplexValue> {
        match *seed {
            Seed::Point { re, im } => Ok(Complex64::new(re, im)),
            Seed::LowerCritical { k } => Ok(critical_point(k, HalfPlane::Lower)),
            Seed::FixedPointOffset { k, re, im } => Ok(self.lattice()?.point(k) + Complex64::new(re, im)),
            Seed::ScanRow { im } => {
                let g = &self.grid.spec;
                let j = g.cell_index(Complex64::new(g.re_min, im)).1.clamp(0, g.ny as i64 - 1);
                let baker = |i: usize| self.grid.tag(i, j as usize) == CellTag::EscapedDownBaker;
                (1..g.nx)
                    .find(|&i| baker(i) && !baker(i - 1))
                    .map(|i| g.center(i as i64, j))
                    .ok_or_else(|| Error::Precondition(format!("no lower-Baker cell on row Im = {im}")))
            }
        }
    }

    fn seeds(&self) -> Result<Vec<ComplexValue>> {
        self.spec.seeds.iter().map(|s| self.resolve(s)).collect()
    }

    /// Translate by a multiple of `pi` toward the window center.
    fn fold(&self, w: ComplexValue) -> (ComplexValue, i64) {
        let g = &self.grid.spec;
        let center = 0.5 * (g.re_min + g.re_max);
        let s = ((w.re - center) / PI).round();
        (w - s * PI, s as i64)
    }

    /// Component of the folded point, if its cell is labeled.
    fn component_at(&self, w: ComplexValue) -> Option<u32> {
        let (f, _) = self.fold(w);
        self.labels.label_at(f).filter(|&id| id != NO_COMPONENT)
    }

    /// Boundary distance of the folded point to the edge of its own
    /// component. Unlabeled cells count as boundary (0); points outside the
    /// window give `None`.
    fn boundary_distance(&self, w: ComplexValue) -> Option<f64> {
        let (f, _) = self.fold(w);
        let id = self.labels.label_at(f)?;
        if id == NO_COMPONENT {
            return Some(0.0);
        }
        boundary_distance(&self.labels, f, id).ok()
    }

    /// Distance from `z` to the nearest cell center of component `id`.
    fn distance_to_component(&self, z: ComplexValue, id: u32) -> f64 {
        let g = &self.grid.spec;
        let mut best = f64::INFINITY;
        for (idx, &l) in self.labels.labels.iter().enumerate() {
            if l == id {
                let c = g.center((idx % g.nx) as i64, (idx / g.nx) as i64);
                best = best.min((c - z).norm());
            }
        }
        best
    }

    fn window_rect(&self) -> Rect {
        let g = &self.grid.spec;
        Rect {
            re_min: g.re_min,
            re_max: g.re_max,
            im_min: g.im_min,
            im_max: g.im_max,
        }
    }

    /// Preimages of `target` inside the window lying in component `id`,
    /// returned with the multiplicity total.
    fn preimages_in(&self, target: ComplexValue, id: u32) -> (Vec<ComplexValue>, u32) {
        let roots = preimages(&self.p, target, &self.window_rect(), PREIMAGE_SEEDS);
        let inside: Vec<_> = roots
            .into_iter()
            .filter(|r| self.labels.label_at(r.point) == Some(id))
            .collect();
        let total = inside.iter().map(|r| r.local_degree).sum();
        (inside.iter().map(|r| r.point).collect(), total)
    }

    fn report(&self, seeds: &[ComplexValue], checks: Vec<Check>) -> TheoremReport {
        let s = self.spec;
        TheoremReport {
            scenario: ScenarioEcho {
                name: s.name.clone(),
                theorem: s.theorem,
                lambda: pt(self.p.lambda()),
                m: s.m,
                regime: self.p.regime().to_string(),
                alpha: s.alpha.or_else(|| self.p.regime().alpha()),
                window: s.grid,
                budget: s.budget,
            },
            overall: Verdict::combine(checks.iter().map(|c| c.verdict)),
            checks,
            provenance: Provenance {
                seeds: pts(seeds),
                budget: s.budget,
                grid_budget: s.grid_budget,
                tolerances: s.tolerances,
            },
        }
    }
}

/// Verdict for checks that need every seed to reach `ok` statuses.
fn status_gate(statuses: &[OrbitStatus], ok: impl Fn(&OrbitStatus) -> bool) -> Option<Verdict> {
    if statuses.iter().all(&ok) {
        None
    } else if statuses.iter().all(|s| ok(s) || *s == OrbitStatus::Undetermined) {
        Some(Verdict::Inconclusive)
    } else {
        Some(Verdict::Fail)
    }
}

fn names(statuses: &[OrbitStatus]) -> Vec<String> {
    statuses.iter().map(|s| format!("{s:?}")).collect()
}

/// Index from which `seq` is strictly increasing to the end.
fn increasing_from(seq: &[f64]) -> usize {
    let mut start = seq.len().saturating_sub(1);
    while start > 0 && seq[start - 1] < seq[start] {
        start -= 1;
    }
    start
}

/// A seed iterated to classification and then `TAIL` more steps.
struct SeedRun {
    seed: ComplexValue,
    trace: OrbitTrace,
    raw: Vec<ComplexValue>,
    det: Vec<ComplexValue>,
}

fn run_seed(p: &MapParams, seed: ComplexValue, b: &IterationBudget, total: Option<usize>) -> Result<SeedRun> {
    let trace = iterate(p, seed, b);
    let n = total.unwrap_or(trace.steps_used + TAIL);
    let raw = match raw_orbit(p, seed, n) {
        Ok(raw) => raw,
        Err(Error::Incomparable { step }) => trace.raw[..step.min(trace.raw.len())].to_vec(),
        Err(e) => return Err(e),
    };
    let det = detrend(&raw, p.m());
    Ok(SeedRun { seed, trace, raw, det })
}

fn degree_check(ctx: &Context, s: ComplexValue, home: Option<u32>, expected: u32, name: &str, clause: &str) -> Check {
    let tol = json!({ "expected_multiplicity": expected });
    let Some(id) = home.filter(|&id| ctx.labels.label_at(s) == Some(id)) else {
        let measured = json!({ "target_preimage": pt(s), "error": "sample point not in the seed's component" });
        return Check::new(name, clause, measured, tol, Verdict::Inconclusive);
    };
    let target = match ctx.p.eval(s) {
        Ok(t) => t,
        Err(_) => {
            return Check::new(
                name,
                clause,
                json!({ "error": "pole at sample point" }),
                tol,
                Verdict::Inconclusive,
            )
        }
    };
    let (roots, total) = ctx.preimages_in(target, id);
    let measured = json!({
        "sample": pt(s),
        "target": pt(target),
        "preimages": pts(&roots),
        "multiplicity": total,
    });
    Check::new(name, clause, measured, tol, Verdict::from_bool(total == expected))
}

/// Attracting regime: escaping wandering domains that stay away from their
/// boundaries.
pub fn run_theorem1(s: &ScenarioSpec) -> Result<TheoremReport> {
    let ctx = Context::build(s, |r| *r == Regime::Attracting, "theorem 1")?;
    let tol = &s.tolerances;
    let lattice = ctx.lattice()?;
    let seeds = ctx.seeds()?;
    let runs: Vec<SeedRun> = seeds
        .iter()
        .map(|&z| run_seed(&ctx.p, z, &s.budget, None))
        .collect::<Result<_>>()?;
    let statuses: Vec<OrbitStatus> = runs.iter().map(|r| r.trace.status).collect();
    let gate = status_gate(&statuses, |st| matches!(st, OrbitStatus::ConvergedInterior { .. }));
    let mut checks = Vec::new();

    // T1a: |raw| increasing over the tail.
    let monotone: Vec<(usize, usize)> = runs
        .iter()
        .map(|r| {
            let abs: Vec<f64> = r.raw.iter().map(|z| z.norm()).collect();
            (increasing_from(&abs), abs.len())
        })
        .collect();
    let ok = monotone.iter().all(|&(from, len)| len > TAIL && from + TAIL < len);
    checks.push(Check::new(
        "T1a",
        "escaping: |f^n(z)| increases monotonically beyond some N",
        json!({ "statuses": names(&statuses), "monotone_from_and_length": monotone }),
        json!({ "tail_steps": TAIL }),
        gate.unwrap_or(Verdict::from_bool(ok)),
    ));

    // T1b: detrended orbit tracks a lattice point.
    let residuals: Vec<f64> = runs
        .iter()
        .map(|r| match r.trace.status.lattice_index() {
            Some(k) => (r.det.last().unwrap() - lattice.point(k)).norm(),
            None => f64::INFINITY,
        })
        .collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    checks.push(Check::new(
        "T1b",
        "tracking: |f^n(z) - n m pi - (z0 + j pi)| -> 0",
        json!({ "residuals": residuals, "max": worst }),
        json!(tol.eps_track),
        gate.unwrap_or(Verdict::from_bool(worst < tol.eps_track)),
    ));

    // T1c: the tail keeps a positive distance from the component boundary.
    let tail_min = runs
        .iter()
        .flat_map(|r| r.det[r.det.len().saturating_sub(TAIL)..].iter())
        .filter_map(|&w| ctx.boundary_distance(w))
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::new(
        "T1c",
        "boundary: the forward orbit stays away from the boundary",
        json!({ "tail_min_boundary_distance": tail_min, "cell_diagonal": s.grid.cell_diagonal() }),
        json!(tol.delta_interior),
        gate.unwrap_or(Verdict::from_bool(tail_min >= tol.delta_interior)),
    ));

    // T1d: f maps V onto its image as a degree-2 proper map.
    let z0 = lattice.point(0);
    checks.push(degree_check(
        &ctx,
        z0 + Complex64::from_polar(0.2, 0.7),
        ctx.labels.label_at(z0),
        2,
        "T1d",
        "degree 2: a generic target in f(V) has exactly 2 preimages in V",
    ));

    // T1e: one residue class per translate V + j pi, j < |m|.
    let mut classes: Vec<i64> = runs
        .iter()
        .filter_map(|r| residue_class(&r.trace, &lattice, s.m).ok())
        .collect();
    classes.sort_unstable();
    classes.dedup();
    let want = s.m.unsigned_abs() as usize;
    checks.push(Check::new(
        "T1e",
        "grand orbits: seeds in V, V + pi, ..., V + (|m|-1) pi give |m| disjoint grand orbits",
        json!({ "residue_classes": classes }),
        json!({ "distinct_classes": want }),
        gate.unwrap_or(Verdict::from_bool(classes.len() == want)),
    ));

    Ok(ctx.report(&seeds, checks))
}

/// `lambda = i`: wandering domains escaping downward inside vertical strips.
pub fn run_theorem2(s: &ScenarioSpec) -> Result<TheoremReport> {
    let ctx = Context::build(s, |r| *r == Regime::BakerI, "theorem 2")?;
    let tol = &s.tolerances;
    let seeds = ctx.seeds()?;
    let runs: Vec<SeedRun> = seeds
        .iter()
        .map(|&z| run_seed(&ctx.p, z, &s.budget, None))
        .collect::<Result<_>>()?;
    let statuses: Vec<OrbitStatus> = runs.iter().map(|r| r.trace.status).collect();
    if let Some((r, st)) = runs
        .iter()
        .zip(&statuses)
        .find(|(_, st)| **st == OrbitStatus::EscapedUpPrimary)
    {
        return Err(Error::Precondition(format!(
            "seed {} is not a wandering-domain seed: {st:?}",
            r.seed
        )));
    }
    let gate = status_gate(&statuses, |st| *st == OrbitStatus::EscapedDownBaker);
    let mut checks = Vec::new();

    // T2a: Im of the raw orbit sinks below the threshold, decreasing on the tail.
    let min_im = runs
        .iter()
        .flat_map(|r| r.raw.iter())
        .map(|z| z.im)
        .fold(f64::INFINITY, f64::min);
    let tail_decreasing = runs.iter().all(|r| {
        let neg: Vec<f64> = r.raw.iter().map(|z| -z.im).collect();
        r.raw.len() > TAIL && increasing_from(&neg) + TAIL < neg.len()
    });
    checks.push(Check::new(
        "T2a",
        "Im f^n(z) -> -infinity",
        json!({ "statuses": names(&statuses), "min_im": min_im, "tail_decreasing": tail_decreasing }),
        json!({ "escape_im_down": s.budget.escape_im_down }),
        gate.unwrap_or(Verdict::from_bool(min_im < s.budget.escape_im_down && tail_decreasing)),
    ));

    // T2b: detrended real parts stay in a window of width pi.
    let widths: Vec<f64> = runs
        .iter()
        .map(|r| {
            let (lo, hi) = r.det.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| {
                (lo.min(w.re), hi.max(w.re))
            });
            hi - lo
        })
        .collect();
    let width = widths.iter().copied().fold(0.0, f64::max);
    let allowed = PI + 2.0 * s.grid.dx();
    checks.push(Check::new(
        "T2b",
        "the real parts of the wandering domain are bounded",
        json!({ "re_width": width }),
        json!(allowed),
        gate.unwrap_or(Verdict::from_bool(width <= allowed)),
    ));

    // T2c: the orbit comes close to the boundary.
    let dists: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| r.det.iter().filter_map(|&w| ctx.boundary_distance(w)).collect())
        .collect();
    let min = dists.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let tail_min = dists
        .iter()
        .flat_map(|d| d[d.len() / 2..].iter())
        .copied()
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::new(
        "T2c",
        "liminf dist(f^n(z), boundary) = 0",
        json!({
            "min_boundary_distance": min,
            "second_half_min": tail_min,
            "points_in_window": dists.iter().map(Vec::len).sum::<usize>(),
        }),
        json!(tol.eps_boundary),
        gate.unwrap_or(Verdict::from_bool(min < tol.eps_boundary)),
    ));

    // T2d: degree 2 on the lower Baker component.
    let home = ctx.labels.label_at(seeds[0]);
    checks.push(degree_check(
        &ctx,
        seeds[0] + 0.2,
        home,
        2,
        "T2d",
        "degree 2: a generic target in f(W) has exactly 2 preimages in W",
    ));

    Ok(ctx.report(&seeds, checks))
}

/// Averages of `q` consecutive points, one per window position.
fn cycle_averages(w: &[ComplexValue], q: usize) -> Vec<ComplexValue> {
    w.windows(q)
        .map(|c| c.iter().sum::<ComplexValue>() / q as f64)
        .collect()
}

/// Parabolic regime: orbits converge to a boundary fixed point.
pub fn run_theorem3(s: &ScenarioSpec) -> Result<TheoremReport> {
    let ctx = Context::build(s, |r| matches!(r, Regime::Parabolic { .. }), "theorem 3")?;
    let tol = &s.tolerances;
    let lattice = ctx.lattice()?;
    let q = ctx.p.regime().petal_period().unwrap_or(1);
    let seeds = ctx.seeds()?;
    let runs: Vec<SeedRun> = seeds
        .iter()
        .map(|&z| run_seed(&ctx.p, z, &s.budget, Some(s.budget.max_iter)))
        .collect::<Result<_>>()?;
    let statuses: Vec<OrbitStatus> = runs.iter().map(|r| r.trace.status).collect();
    let gate = status_gate(&statuses, |st| matches!(st, OrbitStatus::ParabolicBoundary { .. }));
    let mut checks = Vec::new();

    // T3a: the petal-cycle average converges to a lattice point on the
    // boundary of the component holding the tail.
    let mut limit_errors = Vec::new();
    let mut boundary_gaps = Vec::new();
    for r in &runs {
        let k = r
            .trace
            .status
            .lattice_index()
            .unwrap_or_else(|| lattice.nearest_index(*r.det.last().unwrap()));
        let zk = lattice.point(k);
        let avg = cycle_averages(&r.det[r.det.len() - q..], q)[0];
        limit_errors.push((avg - zk).norm());
        let home = r.det.iter().rev().find_map(|&w| {
            ctx.component_at(w).filter(|&id| {
                matches!(
                    ctx.labels.components[id as usize].tag,
                    CellTag::ParabolicBoundary { .. }
                )
            })
        });
        let gap = match home {
            Some(id) => {
                let (fz, _) = ctx.fold(zk);
                if ctx.labels.label_at(fz) == Some(id) {
                    boundary_distance(&ctx.labels, fz, id).unwrap_or(f64::INFINITY)
                } else {
                    ctx.distance_to_component(fz, id)
                }
            }
            None => f64::INFINITY,
        };
        boundary_gaps.push(gap);
    }
    let two_diag = 2.0 * s.grid.cell_diagonal();
    let ok = limit_errors.iter().all(|&e| e < tol.eps_track) && boundary_gaps.iter().all(|&g| g < two_diag);
    checks.push(Check::new(
        "T3a",
        "the detrended orbit converges to a fixed point on the boundary",
        json!({ "statuses": names(&statuses), "limit_error": limit_errors, "limit_to_component": boundary_gaps }),
        json!({ "limit": tol.eps_track, "on_boundary": two_diag }),
        gate.unwrap_or(Verdict::from_bool(ok)),
    ));

    // T3b: Im of the raw orbit settles; measured on petal-cycle averages
    // over the last tenth of the run.
    let mut osc = Vec::new();
    let mut raw_osc = Vec::new();
    let mut im_offsets = Vec::new();
    for r in &runs {
        let tail = &r.raw[r.raw.len() - (r.raw.len() / 10).max(q + 1)..];
        let spread = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            hi - lo
        };
        let avgs = cycle_averages(tail, q);
        osc.push(spread(&mut avgs.iter().map(|z| z.im)));
        raw_osc.push(spread(&mut tail.iter().map(|z| z.im)));
        let k = r.trace.status.lattice_index().unwrap_or(0);
        im_offsets.push((avgs.last().unwrap().im - lattice.point(k).im).abs());
    }
    let ok = osc.iter().chain(&im_offsets).all(|&x| x < tol.eps_track);
    checks.push(Check::new(
        "T3b",
        "Im f^n(z) tends to a finite point",
        json!({ "cycle_average_oscillation": osc, "raw_oscillation": raw_osc, "limit_minus_im_z0": im_offsets }),
        json!(tol.eps_track),
        gate.unwrap_or(Verdict::from_bool(ok)),
    ));

    // T3c: the orbit approaches the boundary.
    let min = runs
        .iter()
        .flat_map(|r| r.det.iter())
        .filter_map(|&w| ctx.boundary_distance(w))
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::new(
        "T3c",
        "the forward orbit converges to the boundary",
        json!({ "min_boundary_distance": min }),
        json!(tol.eps_boundary),
        gate.unwrap_or(Verdict::from_bool(min < tol.eps_boundary)),
    ));

    // T3d: conjugacy residual along the seed orbit.
    let mut rel = Vec::new();
    for r in &runs {
        let n = CONJUGACY_STEPS.min(r.raw.len() - 1);
        let scale = 1.0 + r.raw[n].norm();
        rel.push(
            verify_conjugacy(ctx.p.lambda(), s.m, r.seed, n)
                .map(|x| x / scale)
                .unwrap_or(f64::INFINITY),
        );
    }
    let worst = rel.iter().copied().fold(0.0, f64::max);
    checks.push(Check::new(
        "T3d",
        "f^n_{lambda + m pi}(z) = n m pi + f^n_lambda(z)",
        json!({ "relative_residual": rel, "steps": CONJUGACY_STEPS }),
        json!(CONJUGACY_TOL),
        Verdict::from_bool(worst < CONJUGACY_TOL),
    ));

    Ok(ctx.report(&seeds, checks))
}

/// Siegel regime: bounded-type rotation domains.
pub fn run_theorem4(s: &ScenarioSpec) -> Result<TheoremReport> {
    let ctx = Context::build(s, |r| matches!(r, Regime::Siegel { .. }), "theorem 4")?;
    let tol = &s.tolerances;
    let lattice = ctx.lattice()?;
    let z0 = lattice.point(0);
    let alpha = ctx.p.regime().alpha().map(|a| a.value()).unwrap_or(f64::NAN);
    let seeds = ctx.seeds()?;
    let traces: Vec<OrbitTrace> = seeds.iter().map(|&z| iterate(&ctx.p, z, &s.budget)).collect();
    let statuses: Vec<OrbitStatus> = traces.iter().map(|t| t.status).collect();
    let gate = status_gate(&statuses, |st| *st == OrbitStatus::SiegelBounded);
    let mut checks = Vec::new();

    // T4a: bounded orbit that keeps clear of the boundary.
    let centers: Vec<ComplexValue> = traces
        .iter()
        .map(|t| lattice.point(lattice.nearest_index(t.detrended[0])))
        .collect();
    let excursion = traces
        .iter()
        .zip(&centers)
        .flat_map(|(t, c)| t.detrended.iter().map(move |w| (w - c).norm()))
        .fold(0.0, f64::max);
    let min = traces
        .iter()
        .flat_map(|t| t.detrended.iter())
        .filter_map(|&w| ctx.boundary_distance(w))
        .fold(f64::INFINITY, f64::min);
    let steps: Vec<usize> = traces.iter().map(|t| t.steps_used).collect();
    checks.push(Check::new(
        "T4a",
        "the forward orbit stays bounded and away from the boundary",
        json!({ "statuses": names(&statuses), "steps": steps, "max_excursion": excursion, "min_boundary_distance": min }),
        json!({ "delta_interior": tol.delta_interior }),
        gate.unwrap_or(Verdict::from_bool(min >= tol.delta_interior)),
    ));

    // T4b: rotation number of the seed orbits.
    let mut rotation = Vec::new();
    let mut verdicts = Vec::new();
    for (t, c) in traces.iter().zip(&centers) {
        match rotation_number(t, *c) {
            Ok(rho) => {
                rotation.push(json!(rho));
                verdicts.push(Verdict::from_bool((rho - alpha).abs() < tol.rot_tol));
            }
            Err(e) => {
                rotation.push(json!(e.to_string()));
                verdicts.push(Verdict::Inconclusive);
            }
        }
    }
    checks.push(Check::new(
        "T4b",
        "the dynamics on the domain is a rotation by alpha",
        json!({ "rotation_number": rotation, "alpha": alpha }),
        json!(tol.rot_tol),
        gate.unwrap_or(Verdict::combine(verdicts)),
    ));

    // T4c: separation of nearby pairs stays within a band.
    let mut ratios = Vec::new();
    let mut pair_ok = true;
    for j in 0..PAIR_COUNT {
        let theta = 2.0 * PI * j as f64 / PAIR_COUNT as f64;
        let a = z0 + Complex64::from_polar(PAIR_RADIUS, theta);
        let b = a + Complex64::from_polar(PAIR_SEPARATION, theta + 1.0);
        let (Ok(u), Ok(v)) = (
            raw_orbit(&ctx.p, a, s.budget.max_iter),
            raw_orbit(&ctx.p, b, s.budget.max_iter),
        ) else {
            pair_ok = false;
            continue;
        };
        let d0 = (b - a).norm();
        let (lo, hi) = u.iter().zip(&v).fold((f64::INFINITY, 0.0f64), |(lo, hi), (x, y)| {
            let r = (x - y).norm() / d0;
            (lo.min(r), hi.max(r))
        });
        pair_ok &= lo >= 1.0 - PAIR_DRIFT && hi <= 1.0 + PAIR_DRIFT;
        ratios.push([lo, hi]);
    }
    checks.push(Check::new(
        "T4c",
        "dist(f^n(z), f^n(z')) = dist(z, z') for the hyperbolic metric",
        json!({ "min_max_ratio": ratios, "radius": PAIR_RADIUS, "separation": PAIR_SEPARATION }),
        json!([1.0 - PAIR_DRIFT, 1.0 + PAIR_DRIFT]),
        Verdict::from_bool(pair_ok && ratios.len() == PAIR_COUNT),
    ));

    // T4d: one preimage in W of a target in W_1.
    checks.push(degree_check(
        &ctx,
        z0 + Complex64::from_polar(0.05, 0.9),
        ctx.labels.label_at(z0),
        1,
        "T4d",
        "f: W -> W_1 is one-one",
    ));

    // T4e: no critical point lies inside the rotation domain.
    let disc = ctx.labels.label_at(z0);
    let mut entries = Vec::new();
    let mut interior = false;
    for k in 0..s.m.unsigned_abs().max(1) as i64 {
        for half in [HalfPlane::Lower, HalfPlane::Upper] {
            let c = critical_point(k, half);
            let st = iterate(&ctx.p, c, &s.budget).status;
            let depth = match (st, ctx.component_at(c)) {
                (OrbitStatus::SiegelBounded, Some(id)) if Some(id) == disc => ctx.boundary_distance(c).unwrap_or(0.0),
                _ => 0.0,
            };
            let inside = matches!(st, OrbitStatus::ConvergedInterior { .. })
                || (st == OrbitStatus::SiegelBounded && depth >= tol.delta_interior);
            interior |= inside;
            entries.push(json!({ "point": pt(c), "status": format!("{st:?}"), "depth_in_domain": depth }));
        }
    }
    checks.push(Check::new(
        "T4e",
        "all critical points are in the Julia set",
        json!(entries),
        json!({ "max_depth": tol.delta_interior }),
        Verdict::from_bool(!interior),
    ));

    Ok(ctx.report(&seeds, checks))
}

pub fn run_scenario(s: &ScenarioSpec) -> Result<TheoremReport> {
    match s.theorem {
        Theorem::Theorem1 => run_theorem1(s),
        Theorem::Theorem2 => run_theorem2(s),
        Theorem::Theorem3 => run_theorem3(s),
        Theorem::Theorem4 => run_theorem4(s),
    }
}

/// Validate every spec before running any of them.
pub fn run_all(specs: &[ScenarioSpec]) -> Result<Vec<TheoremReport>> {
    for s in specs {
        s.validate()?;
    }
    specs.iter().map(run_scenario).collect()
}

pub fn write_report(r: &TheoremReport) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(r).map_err(|e| Error::Precondition(format!("serialize report: {e}")))?;
    out.push(b'\n');
    Ok(out)
}
