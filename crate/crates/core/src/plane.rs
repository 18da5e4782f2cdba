//! Classified grids over rectangles of the plane, their connected
//! components, grid-based boundary distances and PPM/PGM output.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::ComplexValue;
use crate::error::{Error, Result};
use crate::family::MapParams;
use crate::orbit::{orbit_status, IterationBudget, OrbitClassifier, OrbitStatus};

/// Label of cells that belong to no component (undetermined or pole cells).
pub const NO_COMPONENT: u32 = u32::MAX;

/// Minimum share of translated cells whose tags must agree for a grid to
/// count as pi-invariant.
pub const TRANSLATION_AGREEMENT: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = Self {
            re_min,
            re_max,
            im_min,
            im_max,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidGrid("window bounds must be finite".into()));
        }
        if !(self.re_min < self.re_max && self.im_min < self.im_max) {
            return Err(Error::InvalidGrid("window must have positive width and height".into()));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidGrid("need at least 2 cells per axis".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.re_max - self.re_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_max - self.im_min) / self.ny as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.dx().hypot(self.dy())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Center of cell `(i, j)`; row `j = 0` is the top of the window.
    /// Indices outside the grid give the centers of virtual cells.
    pub fn center(&self, i: i64, j: i64) -> ComplexValue {
        Complex64::new(
            self.re_min + (i as f64 + 0.5) * self.dx(),
            self.im_max - (j as f64 + 0.5) * self.dy(),
        )
    }

    /// Cell containing `z` by floor, possibly outside the grid.
    pub fn cell_index(&self, z: ComplexValue) -> (i64, i64) {
        (
            ((z.re - self.re_min) / self.dx()).floor() as i64,
            ((self.im_max - z.im) / self.dy()).floor() as i64,
        )
    }

    pub fn in_grid(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny
    }

    /// Cell containing `z`, if it lies in the window.
    pub fn cell_of(&self, z: ComplexValue) -> Option<(usize, usize)> {
        let (i, j) = self.cell_index(z);
        // The closed upper/right edges belong to the last cell.
        let i = if z.re == self.re_max { i - 1 } else { i };
        let j = if z.im == self.im_min { j - 1 } else { j };
        self.in_grid(i, j).then_some((i as usize, j as usize))
    }

    pub fn contains(&self, z: ComplexValue) -> bool {
        self.cell_of(z).is_some()
    }

    pub fn translated(&self, dre: f64) -> Self {
        Self {
            re_min: self.re_min + dre,
            re_max: self.re_max + dre,
            ..*self
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{}",
            self.re_min, self.re_max, self.im_min, self.im_max, self.nx, self.ny
        )
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `"RE0,RE1,IM0,IM1,NX,NY"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(Error::InvalidGrid(format!("expected RE0,RE1,IM0,IM1,NX,NY, got {s:?}")));
        }
        let real = |t: &str| t.parse::<f64>().map_err(|e| Error::InvalidGrid(format!("{t:?}: {e}")));
        let count = |t: &str| {
            t.parse::<usize>()
                .map_err(|e| Error::InvalidGrid(format!("{t:?}: {e}")))
        };
        Self::new(
            real(parts[0])?,
            real(parts[1])?,
            real(parts[2])?,
            real(parts[3])?,
            count(parts[4])?,
            count(parts[5])?,
        )
    }
}

/// Per-cell classification, with the lattice index where one applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum CellTag {
    ConvergedInterior { k: i64 },
    EscapedUpPrimary,
    EscapedDownBaker,
    ParabolicBoundary { k: i64 },
    SiegelBounded,
    PoleAdjacent,
    Undetermined,
}

impl CellTag {
    pub fn lattice_index(&self) -> Option<i64> {
        match *self {
            CellTag::ConvergedInterior { k } | CellTag::ParabolicBoundary { k } => Some(k),
            _ => None,
        }
    }

    /// Whether cells with this tag take part in component labeling.
    pub fn is_labeled(&self) -> bool {
        !matches!(self, CellTag::PoleAdjacent | CellTag::Undetermined)
    }

    /// Tag expected at `z + shift pi` for a cell tagged `self` at `z`.
    pub fn shifted(&self, shift: i64) -> Self {
        match *self {
            CellTag::ConvergedInterior { k } => CellTag::ConvergedInterior { k: k + shift },
            CellTag::ParabolicBoundary { k } => CellTag::ParabolicBoundary { k: k + shift },
            other => other,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CellTag::ConvergedInterior { .. } => "ConvergedInterior",
            CellTag::EscapedUpPrimary => "EscapedUpPrimary",
            CellTag::EscapedDownBaker => "EscapedDownBaker",
            CellTag::ParabolicBoundary { .. } => "ParabolicBoundary",
            CellTag::SiegelBounded => "SiegelBounded",
            CellTag::PoleAdjacent => "PoleAdjacent",
            CellTag::Undetermined => "Undetermined",
        }
    }
}

impl From<OrbitStatus> for CellTag {
    fn from(s: OrbitStatus) -> Self {
        match s {
            OrbitStatus::ConvergedInterior { k } => CellTag::ConvergedInterior { k },
            OrbitStatus::EscapedUpPrimary => CellTag::EscapedUpPrimary,
            OrbitStatus::EscapedDownBaker => CellTag::EscapedDownBaker,
            OrbitStatus::ParabolicBoundary { k } => CellTag::ParabolicBoundary { k },
            OrbitStatus::SiegelBounded => CellTag::SiegelBounded,
            OrbitStatus::PoleAdjacent { .. } => CellTag::PoleAdjacent,
            OrbitStatus::Undetermined => CellTag::Undetermined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedGrid {
    pub spec: GridSpec,
    pub params: MapParams,
    pub budget: IterationBudget,
    /// Row-major, row 0 at the top.
    pub cells: Vec<CellTag>,
}

impl ClassifiedGrid {
    pub fn tag(&self, i: usize, j: usize) -> CellTag {
        self.cells[j * self.spec.nx + i]
    }

    pub fn tag_at(&self, z: ComplexValue) -> Option<CellTag> {
        self.spec.cell_of(z).map(|(i, j)| self.tag(i, j))
    }

    pub fn count(&self, pred: impl Fn(&CellTag) -> bool) -> usize {
        self.cells.iter().filter(|t| pred(t)).count()
    }
}

/// Classify every cell center of `g`. `workers` bounds the thread count;
/// `None` uses the global rayon pool. The result does not depend on it.
pub fn classify_grid(
    p: &MapParams,
    g: &GridSpec,
    b: &IterationBudget,
    workers: Option<usize>,
) -> Result<ClassifiedGrid> {
    g.validate()?;
    b.validate()?;
    let run = || -> Vec<CellTag> {
        (0..g.len())
            .into_par_iter()
            .with_min_len(64)
            .map_init(
                || OrbitClassifier::for_params(p, *b),
                |cls, idx| {
                    let z = g.center((idx % g.nx) as i64, (idx / g.nx) as i64);
                    CellTag::from(orbit_status(p, z, b, cls).0)
                },
            )
            .collect()
    };
    let cells = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(ClassifiedGrid {
        spec: *g,
        params: *p,
        budget: *b,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: u32,
    pub tag: CellTag,
    pub cells: usize,
    pub centroid: ComplexValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentLabeling {
    pub spec: GridSpec,
    /// Row-major component id per cell, [`NO_COMPONENT`] for unlabeled cells.
    pub labels: Vec<u32>,
    pub components: Vec<Component>,
}

impl ComponentLabeling {
    pub fn label(&self, i: usize, j: usize) -> u32 {
        self.labels[j * self.spec.nx + i]
    }

    pub fn label_at(&self, z: ComplexValue) -> Option<u32> {
        self.spec.cell_of(z).map(|(i, j)| self.label(i, j))
    }

    pub fn component(&self, id: u32) -> Option<&Component> {
        self.components.get(id as usize)
    }

    fn label_or_outside(&self, i: i64, j: i64) -> Option<u32> {
        self.spec.in_grid(i, j).then(|| self.label(i as usize, j as usize))
    }
}

/// 4-connected components of equal tags (lattice index included), with ids
/// assigned in scan order.
pub fn connected_components(cg: &ClassifiedGrid) -> ComponentLabeling {
    let (nx, ny) = (cg.spec.nx, cg.spec.ny);
    let mut labels = vec![NO_COMPONENT; nx * ny];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..nx * ny {
        let tag = cg.cells[start];
        if labels[start] != NO_COMPONENT || !tag.is_labeled() {
            continue;
        }
        let id = components.len() as u32;
        labels[start] = id;
        queue.push_back(start);
        let (mut cells, mut sum) = (0usize, Complex64::new(0.0, 0.0));
        while let Some(idx) = queue.pop_front() {
            let (i, j) = (idx % nx, idx / nx);
            cells += 1;
            sum += cg.spec.center(i as i64, j as i64);
            let neighbors = [
                (i > 0).then(|| idx - 1),
                (i + 1 < nx).then(|| idx + 1),
                (j > 0).then(|| idx - nx),
                (j + 1 < ny).then(|| idx + nx),
            ];
            for n in neighbors.into_iter().flatten() {
                if labels[n] == NO_COMPONENT && cg.cells[n] == tag {
                    labels[n] = id;
                    queue.push_back(n);
                }
            }
        }
        components.push(Component {
            id,
            tag,
            cells,
            centroid: sum / cells as f64,
        });
    }
    ComponentLabeling {
        spec: cg.spec,
        labels,
        components,
    }
}

/// Distance from `pt` to the nearest cell center outside component `id`,
/// less one cell diagonal. Cells beyond the window edge count as outside,
/// so the estimate never looks past the window.
pub fn boundary_distance(cl: &ComponentLabeling, pt: ComplexValue, id: u32) -> Result<f64> {
    let spec = &cl.spec;
    let Some((ci, cj)) = spec.cell_of(pt) else {
        return Err(Error::OutsideGrid { re: pt.re, im: pt.im });
    };
    if cl.label(ci, cj) != id {
        return Err(Error::NotInComponent {
            re: pt.re,
            im: pt.im,
            id,
        });
    }
    let (ci, cj) = (ci as i64, cj as i64);
    let step = spec.dx().min(spec.dy());
    let mut best = f64::INFINITY;
    for r in 1i64.. {
        // Every cell in ring r is at least (r - 1) cell widths from pt.
        if (r - 1) as f64 * step > best {
            break;
        }
        let mut visit = |i: i64, j: i64| {
            if cl.label_or_outside(i, j) != Some(id) {
                best = best.min((spec.center(i, j) - pt).norm());
            }
        };
        for d in -r..=r {
            visit(ci + d, cj - r);
            visit(ci + d, cj + r);
        }
        for d in -r + 1..r {
            visit(ci - r, cj + d);
            visit(ci + r, cj + d);
        }
    }
    Ok((best - spec.cell_diagonal()).max(0.0))
}

/// Share of comparable cells whose tag at `z + pi` matches the tag at `z`
/// (lattice index advanced by one). Cells that are unlabeled or touch a
/// differently tagged neighbor are skipped on either side. Returns
/// `(agreeing, compared)`.
pub fn translation_agreement(cg: &ClassifiedGrid) -> (usize, usize) {
    let spec = &cg.spec;
    let interior = |i: i64, j: i64| -> Option<CellTag> {
        if !spec.in_grid(i, j) {
            return None;
        }
        let t = cg.tag(i as usize, j as usize);
        if !t.is_labeled() {
            return None;
        }
        let same = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
            .into_iter()
            .filter(|&(a, b)| spec.in_grid(a, b))
            .all(|(a, b)| cg.tag(a as usize, b as usize) == t);
        same.then_some(t)
    };
    let (mut agree, mut total) = (0, 0);
    for j in 0..spec.ny as i64 {
        for i in 0..spec.nx as i64 {
            let z = spec.center(i, j);
            let (ti, tj) = spec.cell_index(z + PI);
            let (Some(a), Some(b)) = (interior(i, j), interior(ti, tj)) else {
                continue;
            };
            total += 1;
            if a.shifted(1) == b {
                agree += 1;
            }
        }
    }
    (agree, total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    /// Fixed colors per tag; interior and parabolic cells cycle through
    /// shades by lattice index.
    #[default]
    Classic,
    /// Black for Julia-side tags, white for everything else.
    Mono,
}

impl Palette {
    pub fn rgb(&self, tag: CellTag) -> [u8; 3] {
        const CYCLE: [[u8; 3]; 4] = [[0, 0, 0], [24, 24, 24], [48, 48, 48], [12, 12, 36]];
        let shade = |base: [u8; 3], k: i64| {
            let d = CYCLE[k.rem_euclid(CYCLE.len() as i64) as usize];
            [
                base[0].saturating_sub(d[0]),
                base[1].saturating_sub(d[1]),
                base[2].saturating_sub(d[2]),
            ]
        };
        match self {
            Palette::Classic => match tag {
                CellTag::ConvergedInterior { k } => shade([64, 160, 255], k),
                CellTag::EscapedUpPrimary => [250, 230, 160],
                CellTag::EscapedDownBaker => [120, 200, 120],
                CellTag::ParabolicBoundary { k } => shade([230, 80, 80], k),
                CellTag::SiegelBounded => [170, 110, 220],
                CellTag::PoleAdjacent => [255, 255, 255],
                CellTag::Undetermined => [20, 20, 20],
            },
            Palette::Mono => match tag {
                CellTag::PoleAdjacent | CellTag::Undetermined => [0, 0, 0],
                _ => [255, 255, 255],
            },
        }
    }
}

impl FromStr for Palette {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(Palette::Classic),
            "mono" => Ok(Palette::Mono),
            other => Err(Error::Precondition(format!("unknown palette {other:?}"))),
        }
    }
}

/// Binary PPM (P6) of the grid, one pixel per cell.
pub fn render_ppm(cg: &ClassifiedGrid, palette: Palette) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", cg.spec.nx, cg.spec.ny);
    let mut out = Vec::with_capacity(header.len() + 3 * cg.cells.len());
    out.extend_from_slice(header.as_bytes());
    for &tag in &cg.cells {
        out.extend_from_slice(&palette.rgb(tag));
    }
    out
}

/// Binary PGM (P5) of lattice indices: `k mod 255 + 1` for cells carrying
/// an index, 0 elsewhere.
pub fn render_pgm(cg: &ClassifiedGrid) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", cg.spec.nx, cg.spec.ny);
    let mut out = Vec::with_capacity(header.len() + cg.cells.len());
    out.extend_from_slice(header.as_bytes());
    out.extend(
        cg.cells
            .iter()
            .map(|t| t.lattice_index().map_or(0, |k| (k.rem_euclid(255) + 1) as u8)),
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub m: i64,
    pub regime: String,
    pub window: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    pub budget: IterationBudget,
    pub palette: Palette,
}

pub fn grid_metadata(cg: &ClassifiedGrid, palette: Palette) -> GridMetadata {
    let s = &cg.spec;
    GridMetadata {
        lambda_re: cg.params.lambda().re,
        lambda_im: cg.params.lambda().im,
        m: cg.params.m(),
        regime: cg.params.regime().to_string(),
        window: [s.re_min, s.re_max, s.im_min, s.im_max],
        nx: s.nx,
        ny: s.ny,
        budget: cg.budget,
        palette,
    }
}
