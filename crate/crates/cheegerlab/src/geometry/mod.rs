//! Grids, masks, shapes, and measure-geometric primitives.
//!
//! All solvers in this crate work on a [`Grid2D`] (uniform square cells over
//! an axis-aligned box) together with a [`DomainMask`] marking which cells
//! belong to the domain. Masks are produced by rasterizing a [`ShapeSpec`]
//! at cell centers.

mod edt;
mod pgm;
mod shape;

pub use pgm::{
    field_to_pgm_string, load_mask_pgm, mask_to_pgm_string, parse_mask_pgm, save_field_pgm,
    save_mask_pgm,
};
pub use shape::ShapeSpec;

use crate::{Error, Result};

/// Uniform grid of square cells covering `[ox, ox + nx*h] x [oy, oy + ny*h]`.
///
/// Cell `(i, j)` has center `(ox + (i + 1/2) h, oy + (j + 1/2) h)`; indices
/// are zero-based with `i` along x and `j` along y.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    h: f64,
    origin: (f64, f64),
}

impl Grid2D {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Cell spacing (side length of every cell).
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    /// Physical extent `(nx * h, ny * h)`.
    pub fn extent(&self) -> (f64, f64) {
        (self.nx as f64 * self.h, self.ny as f64 * self.h)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin.0 + (i as f64 + 0.5) * self.h,
            self.origin.1 + (j as f64 + 0.5) * self.h,
        )
    }

    /// Area of one cell, `h^2`.
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub(crate) fn with_spacing(&self, h: f64, origin: (f64, f64)) -> Grid2D {
        Grid2D {
            nx: self.nx,
            ny: self.ny,
            h,
            origin,
        }
    }
}

/// Relative tolerance for the square-cell check in [`make_grid`].
const SQUARE_CELL_RTOL: f64 = 1e-12;

/// Build a uniform square-cell grid with `nx x ny` cells over a box of the
/// given extent anchored at the origin.
///
/// The two implied spacings `extent.0 / nx` and `extent.1 / ny` must agree to
/// relative precision `1e-12`; rectangular cells are rejected.
pub fn make_grid(nx: usize, ny: usize, extent: (f64, f64)) -> Result<Grid2D> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidInput("grid dimensions must be positive".into()));
    }
    if !(extent.0.is_finite() && extent.1.is_finite()) || extent.0 <= 0.0 || extent.1 <= 0.0 {
        return Err(Error::InvalidInput("grid extent must be positive and finite".into()));
    }
    let hx = extent.0 / nx as f64;
    let hy = extent.1 / ny as f64;
    if (hx - hy).abs() > SQUARE_CELL_RTOL * hx.max(hy) {
        return Err(Error::AnisotropicGrid { hx, hy });
    }
    Ok(Grid2D {
        nx,
        ny,
        h: hx,
        origin: (0.0, 0.0),
    })
}

/// Scale a grid's spacing (and origin) by `t > 0`, keeping the cell layout.
///
/// This realizes the dilation `x -> t x` of whatever domain a mask on this
/// grid represents.
pub fn rescale_spacing(grid: &Grid2D, t: f64) -> Result<Grid2D> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "rescale factor must be positive and finite, got {t}"
        )));
    }
    Ok(grid.with_spacing(grid.h * t, (grid.origin.0 * t, grid.origin.1 * t)))
}

/// Boolean cell-center occupancy mask over a grid's cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainMask {
    nx: usize,
    ny: usize,
    cells: Vec<bool>,
}

impl DomainMask {
    /// All-false mask with the grid's dimensions.
    pub fn empty(grid: &Grid2D) -> DomainMask {
        DomainMask {
            nx: grid.nx,
            ny: grid.ny,
            cells: vec![false; grid.nx * grid.ny],
        }
    }

    /// Build from a per-cell predicate over `(i, j)`.
    pub fn from_fn(grid: &Grid2D, mut f: impl FnMut(usize, usize) -> bool) -> DomainMask {
        let mut mask = DomainMask::empty(grid);
        for j in 0..mask.ny {
            for i in 0..mask.nx {
                let v = f(i, j);
                mask.cells[j * mask.nx + i] = v;
            }
        }
        mask
    }

    pub(crate) fn from_raw(nx: usize, ny: usize, cells: Vec<bool>) -> DomainMask {
        assert_eq!(cells.len(), nx * ny);
        DomainMask { nx, ny, cells }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.nx + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.cells[j * self.nx + i] = v;
    }

    /// True cell `(i, j)` lookup tolerating out-of-range indices (exterior
    /// counts as false).
    #[inline]
    pub fn get_signed(&self, i: isize, j: isize) -> bool {
        if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
            return false;
        }
        self.cells[j as usize * self.nx + i as usize]
    }

    pub fn count_true(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// Row-major slice of the raw cell flags.
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    /// Indices `(i, j)` of all true cells in row-major order.
    pub fn true_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.cells[j * self.nx + i] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// True iff every true cell of `self` is also true in `other`.
    pub fn is_subset_of(&self, other: &DomainMask) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(&a, &b)| !a || b)
    }

    /// Checks that the mask dimensions match the grid.
    pub fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        if self.nx != grid.nx || self.ny != grid.ny {
            return Err(Error::GridMismatch(format!(
                "mask is {}x{}, grid is {}x{}",
                self.nx, self.ny, grid.nx, grid.ny
            )));
        }
        Ok(())
    }
}

/// Which discrete perimeter a measurement uses.
///
/// `Anisotropic` counts boundary faces (the L1 / city-block perimeter, exact
/// for axis-aligned sets). `Isotropic` approximates the Euclidean perimeter:
/// each jump face is weighted by the component of the estimated unit normal
/// along the face direction, where the normal comes from central differences
/// of a 3x3 box-averaged indicator, averaged over the two cells sharing the
/// face. On a straight edge of any orientation the weighted face densities
/// sum to the Euclidean length per unit run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerimeterMode {
    Anisotropic,
    Isotropic,
}

impl std::fmt::Display for PerimeterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PerimeterMode::Anisotropic => write!(f, "anisotropic"),
            PerimeterMode::Isotropic => write!(f, "isotropic"),
        }
    }
}

/// Perimeter and area of the true region of a mask.
///
/// Area is exact cell counting (`count * h^2`). Perimeter depends on the
/// mode; see [`PerimeterMode`]. Grid-exterior cells count as false, so a mask
/// touching the grid edge still pays for those boundary faces.
pub fn perimeter_area(mask: &DomainMask, grid: &Grid2D, mode: PerimeterMode) -> Result<(f64, f64)> {
    mask.check_grid(grid)?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let area = mask.count_true() as f64 * grid.cell_area();
    let perimeter = match mode {
        PerimeterMode::Anisotropic => anisotropic_perimeter(mask, grid),
        PerimeterMode::Isotropic => isotropic_perimeter(mask, grid),
    };
    Ok((perimeter, area))
}

fn anisotropic_perimeter(mask: &DomainMask, grid: &Grid2D) -> f64 {
    let mut faces = 0usize;
    for j in 0..mask.ny {
        for i in 0..mask.nx {
            if !mask.get(i, j) {
                continue;
            }
            let (i, j) = (i as isize, j as isize);
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                if !mask.get_signed(i + di, j + dj) {
                    faces += 1;
                }
            }
        }
    }
    faces as f64 * grid.h
}

/// Half-width of the box average used for normal estimation.
const NORMAL_BLUR_RADIUS: isize = 1;

fn isotropic_perimeter(mask: &DomainMask, grid: &Grid2D) -> f64 {
    // Box-average the indicator (zero outside the grid) on a lattice padded
    // by two cells so faces on the grid boundary see smooth values too.
    let pad = 2isize;
    let wx = mask.nx as isize + 2 * pad;
    let wy = mask.ny as isize + 2 * pad;
    let r = NORMAL_BLUR_RADIUS;
    let norm = ((2 * r + 1) * (2 * r + 1)) as f64;
    let mut blur = vec![0.0f64; (wx * wy) as usize];
    for jj in 0..wy {
        for ii in 0..wx {
            let mut s = 0.0;
            for dj in -r..=r {
                for di in -r..=r {
                    if mask.get_signed(ii - pad + di, jj - pad + dj) {
                        s += 1.0;
                    }
                }
            }
            blur[(jj * wx + ii) as usize] = s / norm;
        }
    }
    let b = |i: isize, j: isize| blur[((j + pad) * wx + (i + pad)) as usize];

    let mut perim = 0.0;
    // x-faces between cells (i, j) and (i+1, j); i = -1 .. nx-1.
    for j in 0..mask.ny as isize {
        for i in -1..mask.nx as isize {
            if mask.get_signed(i, j) == mask.get_signed(i + 1, j) {
                continue;
            }
            let gx = b(i + 1, j) - b(i, j);
            let gy = 0.25 * (b(i, j + 1) - b(i, j - 1) + b(i + 1, j + 1) - b(i + 1, j - 1));
            perim += grid.h * face_weight(gx, gy);
        }
    }
    // y-faces between cells (i, j) and (i, j+1); j = -1 .. ny-1.
    for j in -1..mask.ny as isize {
        for i in 0..mask.nx as isize {
            if mask.get_signed(i, j) == mask.get_signed(i, j + 1) {
                continue;
            }
            let gy = b(i, j + 1) - b(i, j);
            let gx = 0.25 * (b(i + 1, j) - b(i - 1, j) + b(i + 1, j + 1) - b(i - 1, j + 1));
            perim += grid.h * face_weight(gy, gx);
        }
    }
    perim
}

/// |normal component along the face direction| for a jump face, from the
/// blurred-indicator gradient (`gn` normal to the face, `gt` transverse).
fn face_weight(gn: f64, gt: f64) -> f64 {
    let norm = (gn * gn + gt * gt).sqrt();
    if norm == 0.0 {
        1.0
    } else {
        gn.abs() / norm
    }
}

/// Exact Euclidean distance from each true cell's center to the boundary of
/// the nearest false-or-exterior cell, as `h * (sqrt(d2_cells) - 1/2)` where
/// `d2_cells` is the exact squared center-to-center cell distance. False
/// cells get 0.
pub fn distance_map(mask: &DomainMask, grid: &Grid2D) -> Result<Vec<f64>> {
    mask.check_grid(grid)?;
    let d2 = edt::squared_distance_to_false(mask);
    Ok(d2
        .iter()
        .zip(mask.cells.iter())
        .map(|(&d2, &inside)| {
            if inside {
                grid.h * (d2.sqrt() - 0.5)
            } else {
                0.0
            }
        })
        .collect())
}

/// Inradius of the true region: the largest distance-map value.
///
/// Converges to the inradius of the underlying shape as `h -> 0`; for a
/// rasterized mask the value is exact up to the half-cell boundary
/// convention of [`distance_map`].
pub fn inradius(mask: &DomainMask, grid: &Grid2D) -> Result<f64> {
    mask.check_grid(grid)?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let d2 = edt::squared_distance_to_false(mask);
    let max_d2 = d2
        .iter()
        .zip(mask.cells.iter())
        .filter(|(_, &inside)| inside)
        .map(|(&d2, _)| d2)
        .fold(0.0f64, f64::max);
    Ok(grid.h * (max_d2.sqrt() - 0.5))
}

/// Inner parallel body: keep the cells whose distance-map value is >= `r`.
/// `erode(mask, grid, 0)` is the identity; the result may be empty.
pub fn erode(mask: &DomainMask, grid: &Grid2D, r: f64) -> Result<DomainMask> {
    mask.check_grid(grid)?;
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidInput(format!(
            "erosion radius must be >= 0 and finite, got {r}"
        )));
    }
    let d2 = edt::squared_distance_to_false(mask);
    // Keep iff h * (sqrt(d2) - 1/2) >= r, i.e. d2 >= (r/h + 1/2)^2.
    let thr = r / grid.h + 0.5;
    let thr2 = thr * thr;
    let cells = d2
        .iter()
        .zip(mask.cells.iter())
        .map(|(&d2, &inside)| inside && d2 >= thr2)
        .collect();
    Ok(DomainMask {
        nx: mask.nx,
        ny: mask.ny,
        cells,
    })
}

/// Rasterize a shape onto a grid by cell-center containment.
///
/// The shape's bounding box must lie inside the grid extent (a shape exactly
/// filling the box is allowed). Single-cell punctures are cleared after the
/// base fill. A rasterization with zero true cells is an error.
pub fn rasterize(shape: &ShapeSpec, grid: &Grid2D) -> Result<DomainMask> {
    shape.validate()?;
    let (lo, hi) = shape.bounding_box();
    let (ox, oy) = grid.origin;
    let (ex, ey) = grid.extent();
    let tol = 1e-9 * grid.h.max(1.0);
    if lo.0 < ox - tol || lo.1 < oy - tol || hi.0 > ox + ex + tol || hi.1 > oy + ey + tol {
        return Err(Error::ShapeEscapesDomain);
    }
    let mut mask = DomainMask::from_fn(grid, |i, j| {
        let (x, y) = grid.cell_center(i, j);
        shape.contains(x, y)
    });
    for &(hx, hy) in shape.puncture_points() {
        let i = ((hx - ox) / grid.h).floor();
        let j = ((hy - oy) / grid.h).floor();
        if i >= 0.0 && j >= 0.0 && (i as usize) < grid.nx && (j as usize) < grid.ny {
            mask.set(i as usize, j as usize, false);
        }
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(mask)
}
