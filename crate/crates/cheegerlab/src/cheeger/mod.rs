//! Cheeger constant h of a masked domain: the infimum of perimeter over
//! area among subsets, the p = 1 endpoint of the eigenvalue family.
//!
//! Three routes are provided. [`cheeger_dinkelbach`] runs a ratio iteration
//! on a convex total-variation relaxation: given the current estimate h_k
//! it minimizes `TV(u) - h_k * area(u)` over fields `0 <= u <= 1` supported
//! on the mask, thresholds the minimizer over a ladder of superlevel sets,
//! and re-scores every candidate with the reporting perimeter, so the
//! returned constant is always achieved by an explicit subset.
//! [`cheeger_bruteforce`] enumerates every subset of a small mask exactly
//! (anisotropic perimeter), serving as an independent oracle for the
//! relaxation. [`cheeger_convex_oracle`] evaluates the analytic constants
//! of disks and rectangles for validation against Euclidean values.

mod pdhg;

use crate::eigensolver::SolverOptions;
use crate::geometry::{perimeter_area, DomainMask, Grid2D, PerimeterMode, ShapeSpec};
use crate::{Error, Result};
use pdhg::PdhgState;
use std::fmt::Write as _;

/// Outcome of a Cheeger computation.
#[derive(Debug, Clone)]
pub struct CheegerResult {
    /// The constant, units 1/length; always the ratio of the returned set.
    pub h: f64,
    /// A subset of the input mask achieving `h`.
    pub cheeger_set: DomainMask,
    /// Total inner iterations (primal-dual steps, or subsets enumerated).
    pub iterations: usize,
    /// Perimeter flavor the constant is measured in.
    pub mode: PerimeterMode,
    /// Accepted ratio estimates, strictly decreasing from the full-set
    /// ratio down to `h`.
    pub history: Vec<f64>,
}

/// Inner iterations run between threshold sweeps.
const CHUNK: usize = 250;
/// Chunks without an accepted improvement after which, with the primal
/// iterate also settled, the iteration is declared converged. Four chunks
/// equal one default inner pass of the ratio iteration.
const STALL_CHUNKS: usize = 4;
/// Hard stall bound: no improvement for this many chunks ends the
/// iteration even if the primal field is still drifting.
const HARD_STALL_CHUNKS: usize = 12;
/// Mean absolute primal change per cell below which the inner relaxation
/// counts as settled.
const SETTLED_CHANGE: f64 = 1e-8;

/// Largest mask the exhaustive oracle accepts (2^20 subsets).
const BRUTEFORCE_LIMIT: usize = 20;

/// Cheeger constant by ratio iteration on the total-variation relaxation.
///
/// `opts.max_iterations` is the total primal-dual iteration budget across
/// all ratio steps; `opts.tolerance` is the relative improvement below
/// which a candidate does not count as progress. The result's `history`
/// starts at the full-mask ratio and decreases strictly; its final entry
/// is the returned `h`, which the returned set reproduces exactly under
/// [`perimeter_area`] in the same mode.
pub fn cheeger_dinkelbach(
    mask: &DomainMask,
    grid: &Grid2D,
    mode: PerimeterMode,
    opts: &SolverOptions,
) -> Result<CheegerResult> {
    let mut warm = CheegerWarmState::new();
    cheeger_dinkelbach_warm(mask, grid, mode, opts, &mut warm)
}

/// Reusable solver state for repeated Cheeger calls on nearby masks, as in
/// annealing loops. Opaque; create once and pass to
/// [`cheeger_dinkelbach_warm`].
#[derive(Debug, Clone, Default)]
pub struct CheegerWarmState {
    inner: Option<PdhgState>,
}

impl CheegerWarmState {
    pub fn new() -> Self {
        CheegerWarmState::default()
    }
}

/// [`cheeger_dinkelbach`] with caller-owned warm state: the primal and dual
/// fields persist across calls, which shortens the inner relaxation when
/// consecutive masks differ by a few cells.
pub fn cheeger_dinkelbach_warm(
    mask: &DomainMask,
    grid: &Grid2D,
    mode: PerimeterMode,
    opts: &SolverOptions,
    warm: &mut CheegerWarmState,
) -> Result<CheegerResult> {
    mask.check_grid(grid)?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let nx = grid.nx();
    let ny = grid.ny();
    let cells = mask.cells();

    let (per0, area0) = perimeter_area(mask, grid, mode)?;
    let mut h_best = per0 / area0;
    let mut best_set = mask.clone();
    let mut history = vec![h_best];

    let state = match warm.inner.as_mut() {
        Some(s) if s.nx == nx && s.ny == ny => {
            s.clamp_to_mask(cells);
            s
        }
        _ => warm.inner.insert(PdhgState::new(nx, ny, cells)),
    };

    let mut iterations = 0usize;
    let mut stall = 0usize;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let mu = h_best * grid.h();
        let step = CHUNK.min(opts.max_iterations - iterations);
        let change = state.run(cells, mode, mu, step);
        iterations += step;
        if let Some((ratio, set)) = best_threshold_set(&state.u, mask, grid, mode)? {
            if ratio < h_best * (1.0 - opts.tolerance) {
                h_best = ratio;
                best_set = set;
                history.push(ratio);
                stall = 0;
                continue;
            }
        }
        stall += 1;
        if (stall >= STALL_CHUNKS && change <= SETTLED_CHANGE) || stall >= HARD_STALL_CHUNKS {
            converged = true;
            break;
        }
    }
    if !converged && stall < STALL_CHUNKS {
        return Err(Error::NonConvergence {
            context: format!("ratio iteration still improving after {iterations} inner iterations"),
            best: h_best,
        });
    }

    Ok(CheegerResult {
        h: h_best,
        cheeger_set: best_set,
        iterations,
        mode,
        history,
    })
}

/// Scores the superlevel sets of `u` over the ladder {0.01, ..., 0.99} with
/// the reporting perimeter and returns the best (ratio, set), or None when
/// every level is empty. Superlevel sets are nested, so levels with equal
/// cell counts are the same set and are scored once.
fn best_threshold_set(
    u: &[f64],
    mask: &DomainMask,
    grid: &Grid2D,
    mode: PerimeterMode,
) -> Result<Option<(f64, DomainMask)>> {
    let nx = grid.nx();
    let cells = mask.cells();
    // Histogram of mask-cell values by percent bin; suffix sums give the
    // superlevel counts for every ladder level in one pass.
    let mut hist = [0usize; 101];
    for (k, &v) in u.iter().enumerate() {
        if cells[k] {
            let bin = ((v * 100.0).floor() as usize).min(100);
            hist[bin] += 1;
        }
    }
    let mut suffix = [0usize; 102];
    for b in (0..=100).rev() {
        suffix[b] = suffix[b + 1] + hist[b];
    }

    let mut best: Option<(f64, DomainMask)> = None;
    let mut last_count = usize::MAX;
    for level in 1..=99usize {
        let count = suffix[level];
        if count == 0 {
            break;
        }
        if count == last_count {
            continue;
        }
        last_count = count;
        let t = level as f64 * 0.01;
        let set = DomainMask::from_fn(grid, |i, j| cells[j * nx + i] && u[j * nx + i] >= t);
        let (per, area) = perimeter_area(&set, grid, mode)?;
        let ratio = per / area;
        if best.as_ref().is_none_or(|(b, _)| ratio < *b) {
            best = Some((ratio, set));
        }
    }
    Ok(best)
}

/// Exact discrete Cheeger constant by exhaustive enumeration, for masks of
/// at most [`BRUTEFORCE_LIMIT`] cells. Perimeter is face counting
/// (anisotropic), for which the enumeration is exact. Ties are broken by
/// smaller area, then by lexicographic cell order.
pub fn cheeger_bruteforce(mask: &DomainMask, grid: &Grid2D) -> Result<CheegerResult> {
    mask.check_grid(grid)?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let nx = grid.nx();
    let ny = grid.ny();
    let h = grid.h();
    let cells = mask.cells();
    let idx: Vec<usize> = (0..cells.len()).filter(|&k| cells[k]).collect();
    let n = idx.len();
    if n > BRUTEFORCE_LIMIT {
        return Err(Error::OracleBound {
            cells: n,
            limit: BRUTEFORCE_LIMIT,
        });
    }

    // Map each chosen cell to its bit, then list the right/up neighbor bits
    // so internal faces are counted once per subset.
    let mut bit_of = vec![usize::MAX; cells.len()];
    for (b, &k) in idx.iter().enumerate() {
        bit_of[k] = b;
    }
    let mut nbr: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (b, &k) in idx.iter().enumerate() {
        let i = k % nx;
        let j = k / nx;
        if i + 1 < nx && bit_of[k + 1] != usize::MAX {
            nbr[b].push(bit_of[k + 1]);
        }
        if j + 1 < ny && bit_of[k + nx] != usize::MAX {
            nbr[b].push(bit_of[k + nx]);
        }
    }

    let mut best_ratio = f64::INFINITY;
    let mut best_bits: u32 = 0;
    let total: u32 = 1u32 << n;
    for s in 1..total {
        let count = s.count_ones() as usize;
        let mut internal = 0usize;
        let mut rest = s;
        while rest != 0 {
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            for &o in &nbr[b] {
                if s & (1u32 << o) != 0 {
                    internal += 1;
                }
            }
        }
        let per = h * (4 * count - 2 * internal) as f64;
        let area = h * h * count as f64;
        let ratio = per / area;
        if ratio < best_ratio
            || (ratio == best_ratio && better_tie(s, best_bits))
        {
            best_ratio = ratio;
            best_bits = s;
        }
    }

    let set = DomainMask::from_fn(grid, |i, j| {
        let b = bit_of[j * nx + i];
        b != usize::MAX && best_bits & (1u32 << b) != 0
    });
    Ok(CheegerResult {
        h: best_ratio,
        cheeger_set: set,
        iterations: (total - 1) as usize,
        mode: PerimeterMode::Anisotropic,
        history: vec![best_ratio],
    })
}

/// Tie order for equal ratios: fewer cells first, then the subset whose
/// cell list comes first lexicographically (at the first bit where the two
/// differ, the subset containing it precedes).
fn better_tie(candidate: u32, incumbent: u32) -> bool {
    let ca = candidate.count_ones();
    let cb = incumbent.count_ones();
    if ca != cb {
        return ca < cb;
    }
    let diff = candidate ^ incumbent;
    if diff == 0 {
        return false;
    }
    let first = diff.trailing_zeros();
    candidate & (1u32 << first) != 0
}

/// Analytic Cheeger constants of convex calibration shapes.
///
/// A disk of radius R gives 2/R (the disk is its own optimal subset). An
/// a-by-b rectangle gives 1/r* where r* solves (a-2r)(b-2r) = pi r^2 in
/// (0, min(a,b)/2): the optimal subset is the rectangle with corners
/// rounded at radius r*. Other shapes are rejected.
pub fn cheeger_convex_oracle(shape: &ShapeSpec) -> Result<f64> {
    match shape {
        ShapeSpec::Disk { r, .. } => {
            if !(r.is_finite() && *r > 0.0) {
                return Err(Error::InvalidInput(format!("disk radius {r} must be positive")));
            }
            Ok(2.0 / r)
        }
        ShapeSpec::Rect { w, h, .. } => {
            if !(w.is_finite() && h.is_finite() && *w > 0.0 && *h > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "rectangle sides {w} x {h} must be positive"
                )));
            }
            Ok(1.0 / rect_rounding_radius(*w, *h))
        }
        other => Err(Error::InvalidInput(format!(
            "convex oracle supports disk and rectangle shapes, got {other:?}"
        ))),
    }
}

/// Root of (a-2r)(b-2r) = pi r^2 in (0, min(a,b)/2) by bisection to 1e-12.
fn rect_rounding_radius(a: f64, b: f64) -> f64 {
    let g = |r: f64| (a - 2.0 * r) * (b - 2.0 * r) - std::f64::consts::PI * r * r;
    let mut lo = 0.0_f64;
    let mut hi = 0.5 * a.min(b);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Serializes a ratio history as CSV with an `iteration,h[1/length]`
/// header, one row per accepted estimate.
pub fn history_to_csv_string(history: &[f64]) -> String {
    let mut out = String::from("iteration,h[1/length]\n");
    for (i, v) in history.iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, rasterize};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full_square_4x4() -> (Grid2D, DomainMask) {
        let grid = make_grid(4, 4, (1.0, 1.0)).unwrap();
        let mask = DomainMask::from_fn(&grid, |_, _| true);
        (grid, mask)
    }

    #[test]
    fn bruteforce_full_square_is_four() {
        let (grid, mask) = full_square_4x4();
        let r = cheeger_bruteforce(&mask, &grid).unwrap();
        assert_relative_eq!(r.h, 4.0, max_relative = 1e-12);
        assert_eq!(r.cheeger_set.count_true(), 16);
        assert_eq!(r.iterations, (1 << 16) - 1);
    }

    #[test]
    fn bruteforce_single_cell() {
        let grid = make_grid(4, 4, (1.0, 1.0)).unwrap();
        let mask = DomainMask::from_fn(&grid, |i, j| i == 1 && j == 2);
        let r = cheeger_bruteforce(&mask, &grid).unwrap();
        assert_relative_eq!(r.h, 16.0, max_relative = 1e-12);
    }

    #[test]
    fn bruteforce_rejects_large_masks() {
        let grid = make_grid(5, 5, (1.0, 1.0)).unwrap();
        let mask = DomainMask::from_fn(&grid, |i, j| j * 5 + i < 21);
        match cheeger_bruteforce(&mask, &grid) {
            Err(Error::OracleBound { cells, limit }) => {
                assert_eq!(cells, 21);
                assert_eq!(limit, 20);
            }
            other => panic!("expected oracle bound error, got {other:?}"),
        }
    }

    #[test]
    fn dinkelbach_matches_bruteforce_on_small_masks() {
        let grid = make_grid(4, 4, (1.0, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let opts = SolverOptions::default();
        let mut tried = 0;
        while tried < 6 {
            let mask = DomainMask::from_fn(&grid, |_, _| rng.gen_bool(0.6));
            if mask.is_empty() {
                continue;
            }
            tried += 1;
            let exact = cheeger_bruteforce(&mask, &grid).unwrap();
            let relaxed =
                cheeger_dinkelbach(&mask, &grid, PerimeterMode::Anisotropic, &opts).unwrap();
            assert_relative_eq!(relaxed.h, exact.h, max_relative = 1e-6);
        }
    }

    #[test]
    fn dinkelbach_full_square_anisotropic_is_exactly_four() {
        let (grid, mask) = full_square_4x4();
        let opts = SolverOptions::default();
        let r = cheeger_dinkelbach(&mask, &grid, PerimeterMode::Anisotropic, &opts).unwrap();
        assert_relative_eq!(r.h, 4.0, max_relative = 1e-12);
        assert_eq!(r.cheeger_set.count_true(), 16);
    }

    #[test]
    fn dinkelbach_disk_isotropic_and_certificate() {
        let grid = make_grid(64, 64, (1.0, 1.0)).unwrap();
        let mask = rasterize(
            &ShapeSpec::Disk {
                cx: 0.5,
                cy: 0.5,
                r: 0.4,
            },
            &grid,
        )
        .unwrap();
        let opts = SolverOptions::default();
        let r = cheeger_dinkelbach(&mask, &grid, PerimeterMode::Isotropic, &opts).unwrap();
        // The disk is its own optimal subset: h = 2/R, here 5. Rasterization
        // and the isotropic stencil cost a few percent at this resolution.
        assert_relative_eq!(r.h, 5.0, max_relative = 0.05);
        assert!(r.cheeger_set.is_subset_of(&mask));
        // History decreases strictly and ends at the reported constant.
        for pair in r.history.windows(2) {
            assert!(pair[1] < pair[0]);
        }
        assert_eq!(*r.history.last().unwrap(), r.h);
        // The returned set reproduces the constant bit for bit.
        let (per, area) = perimeter_area(&r.cheeger_set, &grid, r.mode).unwrap();
        assert_relative_eq!(per / area, r.h, max_relative = 1e-9);
    }

    #[test]
    fn dinkelbach_rejects_empty_mask() {
        let grid = make_grid(8, 8, (1.0, 1.0)).unwrap();
        let mask = DomainMask::empty(&grid);
        let opts = SolverOptions::default();
        assert!(matches!(
            cheeger_dinkelbach(&mask, &grid, PerimeterMode::Isotropic, &opts),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn convex_oracle_disk_and_square() {
        let disk = ShapeSpec::Disk {
            cx: 0.0,
            cy: 0.0,
            r: 1.0,
        };
        assert_relative_eq!(cheeger_convex_oracle(&disk).unwrap(), 2.0, max_relative = 1e-12);
        let square = ShapeSpec::Rect {
            x: 0.0,
            y: 0.0,
            w: 1.0,
            h: 1.0,
        };
        let expect = 2.0 + std::f64::consts::PI.sqrt();
        assert_relative_eq!(cheeger_convex_oracle(&square).unwrap(), expect, max_relative = 1e-9);
    }

    #[test]
    fn convex_oracle_thin_rectangle_satisfies_defining_equation() {
        let rect = ShapeSpec::Rect {
            x: 0.0,
            y: 0.0,
            w: 1.0,
            h: 0.05,
        };
        let h = cheeger_convex_oracle(&rect).unwrap();
        let r = 1.0 / h;
        let residual = (1.0 - 2.0 * r) * (0.05 - 2.0 * r) - std::f64::consts::PI * r * r;
        assert!(residual.abs() < 1e-9, "residual {residual}");
        assert!(h > 40.0 && h < 43.0, "h = {h}");
    }

    #[test]
    fn convex_oracle_rejects_other_shapes() {
        let poly = ShapeSpec::Polygon {
            vertices: vec![(0.0, 0.0), (1.0, 0.0), (0.5, 1.0)],
        };
        assert!(cheeger_convex_oracle(&poly).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        /// Every subset of A is a subset of B, so the exhaustive infimum
        /// can only grow when the mask shrinks.
        #[test]
        fn bruteforce_subset_monotonicity(bits_b in 1u16..u16::MAX, keep in 0u16..u16::MAX) {
            let bits_a = bits_b & keep;
            prop_assume!(bits_a != 0);
            let grid = make_grid(4, 4, (1.0, 1.0)).unwrap();
            let b = DomainMask::from_fn(&grid, |i, j| bits_b & (1 << (j * 4 + i)) != 0);
            let a = DomainMask::from_fn(&grid, |i, j| bits_a & (1 << (j * 4 + i)) != 0);
            let hb = cheeger_bruteforce(&b, &grid).unwrap().h;
            let ha = cheeger_bruteforce(&a, &grid).unwrap().h;
            prop_assert!(ha >= hb - 1e-12);
        }
    }
}
