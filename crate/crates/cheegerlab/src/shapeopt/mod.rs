//! Shape optimization of the ratio F_{p,q} over masks and parametric
//! families.
//!
//! The underlying problem, maximize lambda_q subject to lambda_p = 1 inside
//! a design region D, is scale invariant: optimizing the dimensionless
//! ratio F and rescaling once at the end is equivalent to carrying the
//! constraint through the search. [`optimize_mask`] runs simulated
//! annealing over boundary cell flips with warm-started solvers and then
//! applies [`rescale_to_constraint`] so the reported domain satisfies
//! lambda_p = 1. [`optimize_parametric`] searches one-parameter families
//! (rectangles, ellipses, stadiums by aspect ratio) with a golden-section
//! scan, rebuilding a tight grid per aspect so thin shapes stay resolved.
//! [`puncture_experiment`] evaluates F on a disk with n single-cell holes
//! placed by a low-discrepancy sequence, the construction showing that
//! F_{infinity,q} is unbounded over open sets.

use crate::cheeger::{cheeger_dinkelbach_warm, CheegerWarmState};
use crate::eigensolver::{principal_eigen, principal_eigen_warm, SolverOptions};
use crate::geometry::{inradius, rasterize, rescale_spacing, DomainMask, Grid2D, PerimeterMode, ShapeSpec};
use crate::ratio::ratio_f;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

/// Knobs for the annealing chain in [`optimize_mask`].
#[derive(Debug, Clone)]
pub struct AnnealOptions {
    /// Number of proposal steps.
    pub steps: usize,
    /// Metropolis temperature at step 1; 0 gives pure descent.
    pub initial_temperature: f64,
    /// Geometric cooling factor per step, in (0, 1).
    pub cooling: f64,
    /// Cells flipped per proposal.
    pub flip_batch: usize,
    /// Seed for the proposal and acceptance stream.
    pub seed: u64,
    /// Keep only the largest connected component of each proposal.
    pub connectivity_repair: bool,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        AnnealOptions {
            steps: 2000,
            initial_temperature: 0.05,
            cooling: 0.995,
            flip_batch: 8,
            seed: 0,
            connectivity_repair: false,
        }
    }
}

impl AnnealOptions {
    fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::InvalidInput(format!(
                "cooling factor must lie in (0, 1), got {}",
                self.cooling
            )));
        }
        if self.flip_batch == 0 {
            return Err(Error::InvalidInput("flip batch size must be >= 1".into()));
        }
        if !(self.initial_temperature >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "initial temperature must be >= 0, got {}",
                self.initial_temperature
            )));
        }
        Ok(())
    }
}

/// One annealing step in the run record. `f` is the best ratio seen up to
/// and including this step, so the column is non-increasing by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub step: usize,
    /// Best-so-far value of F after this step.
    pub f: f64,
    /// Whether this step's proposal was accepted by the Metropolis rule.
    pub accepted: bool,
    pub temperature: f64,
}

/// Outcome of [`optimize_mask`].
#[derive(Debug, Clone)]
pub struct ShapeOptResult {
    /// Mask with the smallest evaluated F.
    pub best_mask: DomainMask,
    pub best_f: f64,
    /// Per-step record; entry 0 is the initial evaluation.
    pub trace: Vec<TraceEntry>,
    /// Dilation factor normalizing the p-eigenvalue to 1.
    pub rescale_t: f64,
    /// Grid with spacing scaled by `rescale_t`; `best_mask` on this grid is
    /// the constraint-normalized domain.
    pub rescaled_grid: Grid2D,
    /// Re-solved eigenvalue on the rescaled grid; 1 up to solver error for
    /// finite p, and exactly the placeholder 1 when p is infinite (the
    /// rescale step does not apply there).
    pub final_lambda_p: f64,
    /// True when at least one step ran and no proposal was ever accepted;
    /// the result is then just the evaluated initial mask.
    pub degenerate: bool,
}

/// Dilation factor `t = lambda_p(mask)^{1/p}` and the grid rescaled by it,
/// so that the mask on the returned grid has `lambda_p = 1` (the eigenvalue
/// scales as `t^{-p}` under dilation by `t`).
///
/// With `strict` the containment reading of the constraint is enforced:
/// the rescaled domain must not grow (`t <= 1`), otherwise the call fails
/// rather than report a domain escaping the design region.
pub fn rescale_to_constraint(
    mask: &DomainMask,
    grid: &Grid2D,
    p: f64,
    opts: &SolverOptions,
    strict: bool,
) -> Result<(f64, Grid2D)> {
    let lambda = principal_eigen(mask, grid, p, opts)?.lambda;
    let t = lambda.powf(1.0 / p);
    if strict && t > 1.0 {
        return Err(Error::RescaleEscapes(t));
    }
    Ok((t, rescale_spacing(grid, t)?))
}

/// Ratio evaluations with persistent warm state: the previous minimizer
/// field seeds the next eigenvalue solve and the primal-dual fields carry
/// across Cheeger calls, which is what makes thousands of annealing
/// evaluations affordable.
struct RatioEvaluator<'a> {
    grid: &'a Grid2D,
    p: f64,
    q: f64,
    solver: &'a SolverOptions,
    warm_p: Option<Vec<f64>>,
    warm_q: Option<Vec<f64>>,
    cheeger: CheegerWarmState,
}

impl<'a> RatioEvaluator<'a> {
    fn new(grid: &'a Grid2D, p: f64, q: f64, solver: &'a SolverOptions) -> Self {
        RatioEvaluator {
            grid,
            p,
            q,
            solver,
            warm_p: None,
            warm_q: None,
            cheeger: CheegerWarmState::new(),
        }
    }

    fn f(&mut self, mask: &DomainMask) -> Result<f64> {
        let root_q = self.root(mask, false)?;
        let root_p = self.root(mask, true)?;
        Ok(root_p / root_q)
    }

    fn root(&mut self, mask: &DomainMask, numerator: bool) -> Result<f64> {
        let e = if numerator { self.p } else { self.q };
        if e == 1.0 {
            // A budget-exhausted ratio iteration still carries its best
            // certificate, a valid upper bound, which is all the Metropolis
            // comparison needs.
            match cheeger_dinkelbach_warm(
                mask,
                self.grid,
                PerimeterMode::Isotropic,
                self.solver,
                &mut self.cheeger,
            ) {
                Ok(r) => Ok(r.h),
                Err(Error::NonConvergence { best, .. }) => Ok(best),
                Err(e) => Err(e),
            }
        } else if e.is_infinite() {
            Ok(1.0 / inradius(mask, self.grid)?)
        } else {
            let warm = if numerator {
                &mut self.warm_p
            } else {
                &mut self.warm_q
            };
            let result = match warm.as_deref() {
                Some(start) => principal_eigen_warm(mask, self.grid, e, self.solver, start)?,
                None => principal_eigen(mask, self.grid, e, self.solver)?,
            };
            *warm = Some(result.eigenfunction.values().to_vec());
            Ok(result.lambda.powf(1.0 / e))
        }
    }
}

/// Simulated annealing over masks inside the design region `d_spec`.
///
/// Each step flips up to `flip_batch` boundary-adjacent cells (growing into
/// the design region or shrinking the mask), optionally keeps only the
/// largest component, evaluates F with warm-started solvers, and accepts by
/// the Metropolis rule at the current temperature. The chain is
/// deterministic for a given seed. The best-seen mask is rescaled at the
/// end so its p-eigenvalue is 1 (skipped for p = infinity).
///
/// `initial` seeds the chain with a caller mask (clipped to the design
/// region); otherwise a pseudo-random blob inside the region is used.
pub fn optimize_mask(
    d_spec: &ShapeSpec,
    grid: &Grid2D,
    p: f64,
    q: f64,
    initial: Option<&DomainMask>,
    anneal: &AnnealOptions,
    solver: &SolverOptions,
) -> Result<ShapeOptResult> {
    anneal.validate()?;
    if !(q >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "exponents must lie in [1, inf], got q = {q}"
        )));
    }
    if !(q < p) {
        return Err(Error::Regime { p, q });
    }
    let design = rasterize(d_spec, grid)?;
    if design.is_empty() {
        return Err(Error::EmptyMask);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(anneal.seed);
    let mut current = match initial {
        Some(m) => {
            m.check_grid(grid)?;
            let clipped = intersect(m, &design);
            if clipped.is_empty() {
                return Err(Error::EmptyMask);
            }
            clipped
        }
        None => seed_blob(&design, &mut rng),
    };

    let mut eval = RatioEvaluator::new(grid, p, q, solver);
    let mut current_f = eval.f(&current)?;
    let mut best_mask = current.clone();
    let mut best_f = current_f;
    let mut trace = Vec::with_capacity(anneal.steps + 1);
    trace.push(TraceEntry {
        step: 0,
        f: best_f,
        accepted: true,
        temperature: anneal.initial_temperature,
    });

    let mut temperature = anneal.initial_temperature;
    let mut any_accepted = false;
    for step in 1..=anneal.steps {
        let mut accepted = false;
        if let Some(candidate) = propose(
            &current,
            &design,
            anneal.flip_batch,
            anneal.connectivity_repair,
            &mut rng,
        ) {
            let f_new = eval.f(&candidate)?;
            let rise = f_new - current_f;
            let admit = rise <= 0.0
                || (temperature > 0.0 && rng.gen::<f64>() < (-rise / temperature).exp());
            if admit {
                current = candidate;
                current_f = f_new;
                accepted = true;
                any_accepted = true;
                if f_new < best_f {
                    best_f = f_new;
                    best_mask = current.clone();
                }
            }
        }
        trace.push(TraceEntry {
            step,
            f: best_f,
            accepted,
            temperature,
        });
        temperature *= anneal.cooling;
    }

    let (rescale_t, rescaled_grid, final_lambda_p) = if p.is_finite() {
        let (t, scaled) = rescale_to_constraint(&best_mask, grid, p, solver, false)?;
        let lambda = principal_eigen(&best_mask, &scaled, p, solver)?.lambda;
        (t, scaled, lambda)
    } else {
        (1.0, grid.clone(), 1.0)
    };

    Ok(ShapeOptResult {
        best_mask,
        best_f,
        trace,
        rescale_t,
        rescaled_grid,
        final_lambda_p,
        degenerate: anneal.steps > 0 && !any_accepted,
    })
}

fn intersect(a: &DomainMask, b: &DomainMask) -> DomainMask {
    let cells = a
        .cells()
        .iter()
        .zip(b.cells())
        .map(|(&x, &y)| x && y)
        .collect();
    DomainMask::from_raw(a.nx(), a.ny(), cells)
}

/// Deterministic starting blob: a disk in index space around a random cell
/// of the design region, clipped to the region.
fn seed_blob(design: &DomainMask, rng: &mut ChaCha8Rng) -> DomainMask {
    let centers = design.true_cells();
    let (ci, cj) = centers[rng.gen_range(0..centers.len())];
    let r_cells = (0.15 + 0.15 * rng.gen::<f64>()) * design.nx().min(design.ny()) as f64;
    let r2 = r_cells * r_cells;
    let (nx, ny) = (design.nx(), design.ny());
    let cells = design
        .cells()
        .iter()
        .enumerate()
        .map(|(k, &in_design)| {
            let di = (k % nx) as f64 - ci as f64;
            let dj = (k / nx) as f64 - cj as f64;
            in_design && di * di + dj * dj <= r2
        })
        .collect();
    let blob = DomainMask::from_raw(nx, ny, cells);
    if blob.is_empty() {
        design.clone()
    } else {
        blob
    }
}

/// One annealing proposal: flip up to `batch` cells sampled from the
/// current boundary layers (interior-adjacent exterior cells to grow,
/// exterior-adjacent interior cells to shrink). Returns None when no legal
/// flip exists or the result would be empty.
fn propose(
    current: &DomainMask,
    design: &DomainMask,
    batch: usize,
    repair: bool,
    rng: &mut ChaCha8Rng,
) -> Option<DomainMask> {
    let (nx, ny) = (current.nx(), current.ny());
    let mut adds = Vec::new();
    let mut removes = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if current.get(i, j) {
                if touches_complement(current, i, j) {
                    removes.push((i, j));
                }
            } else if design.get(i, j) && touches_mask(current, i, j) {
                adds.push((i, j));
            }
        }
    }
    if adds.is_empty() && removes.is_empty() {
        return None;
    }

    let mut candidate = current.clone();
    let mut flips = 0usize;
    for _ in 0..batch {
        let grow = if adds.is_empty() {
            false
        } else if removes.is_empty() {
            true
        } else {
            rng.gen_bool(0.5)
        };
        let list = if grow { &adds } else { &removes };
        let (i, j) = list[rng.gen_range(0..list.len())];
        if candidate.get(i, j) != grow {
            candidate.set(i, j, grow);
            flips += 1;
        }
    }
    if flips == 0 {
        return None;
    }
    if repair {
        candidate = largest_component(&candidate);
    }
    if candidate.is_empty() {
        None
    } else {
        Some(candidate)
    }
}

/// True when any 4-neighbor of `(i, j)` is false or outside the grid.
fn touches_complement(mask: &DomainMask, i: usize, j: usize) -> bool {
    let (i, j) = (i as isize, j as isize);
    !(mask.get_signed(i - 1, j)
        && mask.get_signed(i + 1, j)
        && mask.get_signed(i, j - 1)
        && mask.get_signed(i, j + 1))
}

/// True when any 4-neighbor of `(i, j)` is a true cell.
fn touches_mask(mask: &DomainMask, i: usize, j: usize) -> bool {
    let (i, j) = (i as isize, j as isize);
    mask.get_signed(i - 1, j)
        || mask.get_signed(i + 1, j)
        || mask.get_signed(i, j - 1)
        || mask.get_signed(i, j + 1)
}

/// Largest 4-connected component of the mask (ties broken by first seed in
/// row-major order).
fn largest_component(mask: &DomainMask) -> DomainMask {
    let (nx, ny) = (mask.nx(), mask.ny());
    let cells = mask.cells();
    let mut label = vec![usize::MAX; cells.len()];
    let mut best_label = usize::MAX;
    let mut best_size = 0usize;
    let mut next = 0usize;
    let mut stack = Vec::new();
    for start in 0..cells.len() {
        if !cells[start] || label[start] != usize::MAX {
            continue;
        }
        let id = next;
        next += 1;
        let mut size = 0usize;
        stack.push(start);
        label[start] = id;
        while let Some(k) = stack.pop() {
            size += 1;
            let (i, j) = (k % nx, k / nx);
            let mut visit = |n: usize| {
                if cells[n] && label[n] == usize::MAX {
                    label[n] = id;
                    stack.push(n);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < nx {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - nx);
            }
            if j + 1 < ny {
                visit(k + nx);
            }
        }
        if size > best_size {
            best_size = size;
            best_label = id;
        }
    }
    let kept = label.iter().map(|&l| l == best_label).collect();
    DomainMask::from_raw(nx, ny, kept)
}

/// One-parameter shape families searched by [`optimize_parametric`]; the
/// parameter is the aspect ratio (height over width) in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParametricFamily {
    /// Rectangles 1 x a.
    RectangleAspect,
    /// Ellipses with axes 1 x a.
    EllipseAspect,
    /// Stadiums of length 1 and height a.
    StadiumAspect,
}

/// Outcome of a parametric search.
#[derive(Debug, Clone)]
pub struct ParametricResult {
    /// Aspect with the smallest sampled F.
    pub best_param: f64,
    pub best_f: f64,
    /// Evaluated (aspect, F) pairs: the requested even samples plus every
    /// golden-section probe, sorted by aspect.
    pub samples: Vec<(f64, f64)>,
}

/// Minimizes F over a one-parameter family by golden-section search on the
/// aspect in `range`, after seeding the curve with `samples` even
/// evaluations for plotting.
///
/// Each aspect gets its own grid: the cell budget of the caller's grid is
/// redistributed so the thin direction keeps as many cells as the budget
/// allows (thickness resolution scales with the square root of the
/// aspect). The evaluated aspect is the grid-quantized one, which is what
/// the returned samples record.
pub fn optimize_parametric(
    family: ParametricFamily,
    p: f64,
    q: f64,
    range: (f64, f64),
    samples: usize,
    grid: &Grid2D,
    opts: &SolverOptions,
) -> Result<ParametricResult> {
    let (lo, hi) = range;
    if !(lo > 0.0 && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "aspect range must satisfy 0 < lo < hi <= 1, got ({lo}, {hi})"
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 curve samples, got {samples}"
        )));
    }
    if !(q >= 1.0) || !(q <= p) {
        return Err(Error::Regime { p, q });
    }

    let budget = (grid.nx() * grid.ny()) as f64;
    let mut evaluated: Vec<(f64, f64)> = Vec::new();
    let mut eval = |aspect: f64| -> Result<f64> {
        let (g, mask, actual) = family_instance(family, aspect, budget)?;
        if let Some(&(_, f)) = evaluated.iter().find(|(a, _)| *a == actual) {
            return Ok(f);
        }
        let f = ratio_f(&mask, &g, p, q, opts)?.f;
        evaluated.push((actual, f));
        Ok(f)
    };

    for k in 0..samples {
        let a = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
        eval(a)?;
    }

    // Golden-section refinement; the objective is cheap to probe at this
    // resolution and close to unimodal over the aspect families.
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > 0.02 * (hi - lo) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }

    evaluated.sort_by(|x, y| x.0.total_cmp(&y.0));
    let &(best_param, best_f) = evaluated
        .iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("at least the curve samples were evaluated");
    Ok(ParametricResult {
        best_param,
        best_f,
        samples: evaluated,
    })
}

/// Builds the grid and mask realizing one family member at the given
/// aspect, within a fixed total cell budget. Returns the grid-quantized
/// aspect actually realized.
fn family_instance(
    family: ParametricFamily,
    aspect: f64,
    cell_budget: f64,
) -> Result<(Grid2D, DomainMask, f64)> {
    let nt = ((cell_budget * aspect).sqrt().round() as usize).max(8);
    let nx = ((nt as f64 / aspect).round() as usize).max(nt);
    let actual = nt as f64 / nx as f64;
    let grid = crate::geometry::make_grid(nx, nt, (1.0, actual))?;
    let h = grid.h();
    let mask = match family {
        ParametricFamily::RectangleAspect => DomainMask::from_fn(&grid, |_, _| true),
        ParametricFamily::EllipseAspect => {
            let (rx, ry) = (0.5, actual / 2.0);
            DomainMask::from_fn(&grid, |i, j| {
                let x = (i as f64 + 0.5) * h - 0.5;
                let y = (j as f64 + 0.5) * h - ry;
                (x / rx).powi(2) + (y / ry).powi(2) <= 1.0
            })
        }
        ParametricFamily::StadiumAspect => {
            rasterize(&ShapeSpec::stadium(0.5, actual / 2.0, 1.0, actual), &grid)?
        }
    };
    Ok((grid, mask, actual))
}

/// F on the unit disk with `n` single-cell punctures for each requested n,
/// with punctures drawn from a Halton sequence offset by `seed` and reused
/// as nested prefixes (the n = 20 holes contain the n = 5 ones).
///
/// The regime is q <= 2 <= p, where adding point holes shrinks the inradius
/// while barely moving the denominator, so the series grows with n.
/// Punctures landing in the same cell deduplicate by construction. The
/// grid must be large enough to contain the radius-1 disk.
pub fn puncture_experiment(
    n_list: &[i64],
    p: f64,
    q: f64,
    grid: &Grid2D,
    seed: u64,
) -> Result<Vec<(i64, f64)>> {
    if !(q >= 1.0 && q <= 2.0 && p >= 2.0) {
        return Err(Error::InvalidInput(format!(
            "puncture experiment needs q <= 2 <= p, got p = {p}, q = {q}"
        )));
    }
    if let Some(&bad) = n_list.iter().find(|&&n| n < 0) {
        return Err(Error::InvalidInput(format!(
            "puncture counts must be >= 0, got {bad}"
        )));
    }
    let (w, hgt) = grid.extent();
    let (cx, cy) = (w / 2.0, hgt / 2.0);
    let max_n = n_list.iter().copied().max().unwrap_or(0) as usize;

    // Halton (2, 3) points in the concentric radius-0.95 disk, so every
    // puncture stays interior; the seed offsets the sequence start.
    let mut points = Vec::with_capacity(max_n);
    let mut index = (seed % 1024) as usize + 1;
    while points.len() < max_n {
        let x = (2.0 * halton(index, 2) - 1.0) * 0.95;
        let y = (2.0 * halton(index, 3) - 1.0) * 0.95;
        index += 1;
        if x * x + y * y <= 0.95 * 0.95 {
            points.push((cx + x, cy + y));
        }
    }

    let opts = SolverOptions::default();
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let shape = ShapeSpec::Punctured {
            base: Box::new(ShapeSpec::Disk { cx, cy, r: 1.0 }),
            holes: points[..n as usize].to_vec(),
        };
        let mask = rasterize(&shape, grid)?;
        let report = ratio_f(&mask, grid, p, q, &opts)?;
        out.push((n, report.f));
    }
    Ok(out)
}

/// Radical-inverse (van der Corput) value of `index` in the given base.
pub(crate) fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Serializes an annealing trace as CSV with header
/// `step,F,accepted,temperature`.
pub fn trace_to_csv_string(trace: &[TraceEntry]) -> String {
    let mut out = String::from("step,F,accepted,temperature\n");
    for t in trace {
        let _ = writeln!(out, "{},{},{},{}", t.step, t.f, t.accepted, t.temperature);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_grid;
    use approx::assert_relative_eq;

    fn unit_square_spec() -> ShapeSpec {
        ShapeSpec::Rect {
            x: 0.0,
            y: 0.0,
            w: 1.0,
            h: 1.0,
        }
    }

    #[test]
    fn rescale_normalizes_the_eigenvalue() {
        let grid = make_grid(32, 32, (1.0, 1.0)).unwrap();
        let mask = DomainMask::from_fn(&grid, |_, _| true);
        let opts = SolverOptions::default();
        let (t, scaled) = rescale_to_constraint(&mask, &grid, 2.0, &opts, false).unwrap();
        // The unit square has lambda_2 near 2 pi^2, so t > 1 here.
        assert!(t > 1.0);
        let lambda = principal_eigen(&mask, &scaled, 2.0, &opts).unwrap().lambda;
        assert!((lambda - 1.0).abs() <= 0.01, "lambda = {lambda}");
        // The strict containment reading rejects exactly this case.
        match rescale_to_constraint(&mask, &grid, 2.0, &opts, true) {
            Err(Error::RescaleEscapes(bad)) => assert_relative_eq!(bad, t),
            other => panic!("expected escape error, got {other:?}"),
        }
    }

    #[test]
    fn rescale_accepts_shrinking_domains_under_strict_flag() {
        // A 10 x 10 square has lambda_2 about 0.2, so t < 1.
        let grid = make_grid(32, 32, (10.0, 10.0)).unwrap();
        let mask = DomainMask::from_fn(&grid, |_, _| true);
        let opts = SolverOptions::default();
        let (t, _) = rescale_to_constraint(&mask, &grid, 2.0, &opts, true).unwrap();
        assert!(t < 1.0);
    }

    #[test]
    fn annealing_is_deterministic_and_monotone() {
        let grid = make_grid(24, 24, (1.0, 1.0)).unwrap();
        let anneal = AnnealOptions {
            steps: 40,
            flip_batch: 4,
            seed: 3,
            ..AnnealOptions::default()
        };
        let solver = SolverOptions::default();
        let spec = unit_square_spec();
        let a = optimize_mask(&spec, &grid, 2.0, 1.0, None, &anneal, &solver).unwrap();
        let b = optimize_mask(&spec, &grid, 2.0, 1.0, None, &anneal, &solver).unwrap();
        assert_eq!(a.best_f.to_bits(), b.best_f.to_bits());
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.best_mask, b.best_mask);
        for pair in a.trace.windows(2) {
            assert!(pair[1].f <= pair[0].f);
        }
        // Every best-so-far value respects the general lower bound q/p.
        assert!(a.trace.iter().all(|t| t.f >= 0.5));
        assert!((a.final_lambda_p - 1.0).abs() <= 0.01);
    }

    #[test]
    fn zero_steps_reports_the_initial_mask() {
        let grid = make_grid(48, 48, (1.0, 1.0)).unwrap();
        let disk = rasterize(
            &ShapeSpec::Disk {
                cx: 0.5,
                cy: 0.5,
                r: 0.4,
            },
            &grid,
        )
        .unwrap();
        let anneal = AnnealOptions {
            steps: 0,
            ..AnnealOptions::default()
        };
        let solver = SolverOptions::default();
        let result = optimize_mask(
            &unit_square_spec(),
            &grid,
            2.0,
            1.0,
            Some(&disk),
            &anneal,
            &solver,
        )
        .unwrap();
        assert_eq!(result.best_mask, disk);
        assert!(!result.degenerate);
        let direct = ratio_f(&disk, &grid, 2.0, 1.0, &solver).unwrap();
        assert_relative_eq!(result.best_f, direct.f, max_relative = 1e-12);
    }

    #[test]
    fn single_cell_design_region_degenerates() {
        // The only cell cannot be removed (the mask would be empty) and
        // nothing can be added, so every step passes with no proposal.
        let grid = make_grid(8, 8, (1.0, 1.0)).unwrap();
        let cell = ShapeSpec::Rect {
            x: 3.0 / 8.0 + 1e-3,
            y: 3.0 / 8.0 + 1e-3,
            w: 1.0 / 8.0 - 2e-3,
            h: 1.0 / 8.0 - 2e-3,
        };
        let anneal = AnnealOptions {
            steps: 5,
            ..AnnealOptions::default()
        };
        let solver = SolverOptions::default();
        let result = optimize_mask(&cell, &grid, 2.0, 1.0, None, &anneal, &solver).unwrap();
        assert!(result.degenerate);
        assert_eq!(result.best_mask.count_true(), 1);
        assert!(result.trace.iter().skip(1).all(|t| !t.accepted));
    }

    #[test]
    fn inverted_regime_and_bad_options_are_rejected() {
        let grid = make_grid(8, 8, (1.0, 1.0)).unwrap();
        let solver = SolverOptions::default();
        let anneal = AnnealOptions::default();
        assert!(matches!(
            optimize_mask(&unit_square_spec(), &grid, 1.0, 2.0, None, &anneal, &solver),
            Err(Error::Regime { .. })
        ));
        let bad = AnnealOptions {
            cooling: 1.5,
            ..AnnealOptions::default()
        };
        assert!(optimize_mask(&unit_square_spec(), &grid, 2.0, 1.0, None, &bad, &solver).is_err());
    }

    #[test]
    fn connectivity_repair_keeps_one_component() {
        let grid = make_grid(6, 6, (1.0, 1.0)).unwrap();
        let mut mask = DomainMask::empty(&grid);
        // Two components: a 2x2 block and a far corner cell.
        for (i, j) in [(1usize, 1usize), (2, 1), (1, 2), (2, 2), (5, 5)] {
            mask.set(i, j, true);
        }
        let repaired = largest_component(&mask);
        assert_eq!(repaired.count_true(), 4);
        assert!(!repaired.get(5, 5));
    }

    #[test]
    fn rectangle_family_prefers_the_square_end() {
        let grid = make_grid(80, 80, (1.0, 1.0)).unwrap();
        let opts = SolverOptions::default();
        let result = optimize_parametric(
            ParametricFamily::RectangleAspect,
            2.0,
            1.0,
            (0.4, 1.0),
            3,
            &grid,
            &opts,
        )
        .unwrap();
        // Among rectangles the square minimizes F and thin slabs raise it.
        assert!(result.best_param > 0.85, "best at {}", result.best_param);
        let first = result.samples.first().unwrap();
        let last = result.samples.last().unwrap();
        assert!(first.1 > last.1, "{:?} vs {:?}", first, last);
        assert_relative_eq!(last.1, 1.178, max_relative = 0.03);
    }

    #[test]
    fn parametric_search_validates_inputs() {
        let grid = make_grid(32, 32, (1.0, 1.0)).unwrap();
        let opts = SolverOptions::default();
        for bad_range in [(0.0, 0.5), (0.5, 0.2), (0.5, 1.5)] {
            assert!(optimize_parametric(
                ParametricFamily::RectangleAspect,
                2.0,
                1.0,
                bad_range,
                3,
                &grid,
                &opts,
            )
            .is_err());
        }
    }

    #[test]
    fn punctures_raise_the_ratio() {
        let grid = make_grid(96, 96, (2.2, 2.2)).unwrap();
        let series =
            puncture_experiment(&[0, 6, 24], f64::INFINITY, 1.0, &grid, 0).unwrap();
        assert_eq!(series.len(), 3);
        // Unpunctured disk: inradius 1 and isoperimetric constant 2.
        assert_relative_eq!(series[0].1, 0.5, max_relative = 0.05);
        assert!(series[1].1 > series[0].1);
        assert!(series[2].1 > series[1].1);
    }

    #[test]
    fn puncture_preconditions_are_enforced() {
        let grid = make_grid(32, 32, (2.2, 2.2)).unwrap();
        assert!(puncture_experiment(&[-1], f64::INFINITY, 1.0, &grid, 0).is_err());
        assert!(puncture_experiment(&[3], f64::INFINITY, 3.0, &grid, 0).is_err());
        assert!(puncture_experiment(&[3], 1.5, 1.0, &grid, 0).is_err());
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let trace = vec![
            TraceEntry {
                step: 0,
                f: 1.25,
                accepted: true,
                temperature: 0.05,
            },
            TraceEntry {
                step: 1,
                f: 1.2,
                accepted: true,
                temperature: 0.0495,
            },
        ];
        let csv = trace_to_csv_string(&trace);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,F,accepted,temperature");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "0,1.25,true,0.05");
    }
}
