//! Numerical dynamics of the transcendental family `f(z) = lambda + z + tan z`
//! and its shifts by integer multiples of `pi`.
//!
//! The crate is organized bottom-up:
//!
//! * [`complex`]: overflow-free `tan` and `arctan` on the whole plane.
//! * [`family`]: the maps, their closed-form fixed and critical points,
//!   and the multiplier regime.
//! * [`orbit`]: iteration with built-in detrending, orbit classification,
//!   preimage search and rotation numbers.
//! * [`plane`]: classified grids, connected components, boundary distances
//!   and PPM/PGM output.
//! * [`verify`]: scenario runners producing JSON reports for the four
//!   wandering-domain regimes.

pub mod complex;
pub mod error;
pub mod family;
pub mod orbit;
pub mod plane;
pub mod verify;

pub use complex::{stable_arctan, stable_tan, ComplexValue, PoleHit};
pub use error::{Error, Result};
pub use family::{
    classify_regime, critical_points, critical_values, eval_derivative, eval_map, fixed_points, lambda_from_alpha,
    Alpha, CriticalData, FixedPointLattice, HalfPlane, MapParams, Regime,
};
pub use orbit::{
    classify, iterate, preimages, residue_class, rotation_number, verify_conjugacy, IterationBudget, OrbitStatus,
    OrbitTrace, Preimage, Rect,
};
pub use plane::{
    boundary_distance, classify_grid, connected_components, render_pgm, render_ppm, CellTag, ClassifiedGrid,
    ComponentLabeling, GridSpec, Palette,
};
pub use verify::{
    run_all, run_scenario, run_theorem1, run_theorem2, run_theorem3, run_theorem4, write_report, ScenarioSpec,
    TheoremReport, Verdict,
};
