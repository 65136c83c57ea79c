//! Independent p = 2 cross-check path: inverse power iteration on the
//! standard five-point discrete Laplacian, with a conjugate-gradient inner
//! solver.
//!
//! The quadratic Dirichlet form of the extended forward-difference lattice
//! expands into exactly this operator, so the two routes must agree; the
//! descent solver is validated against this one in tests.

use crate::error::{Error, Result};
use crate::geometry::{DomainMask, Grid2D};

use super::ScalarField;

/// Applies the five-point Laplacian restricted to mask cells, with zero
/// Dirichlet values outside the mask and outside the grid.
fn apply_laplacian(mask: &DomainMask, nx: usize, ny: usize, h: f64, x: &[f64], out: &mut [f64]) {
    let inv_h2 = 1.0 / (h * h);
    let cells = mask.cells();
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if !cells[k] {
                out[k] = 0.0;
                continue;
            }
            let mut acc = 4.0 * x[k];
            if i > 0 && cells[k - 1] {
                acc -= x[k - 1];
            }
            if i + 1 < nx && cells[k + 1] {
                acc -= x[k + 1];
            }
            if j > 0 && cells[k - nx] {
                acc -= x[k - nx];
            }
            if j + 1 < ny && cells[k + nx] {
                acc -= x[k + nx];
            }
            out[k] = acc * inv_h2;
        }
    }
}

fn masked_dot(mask: &DomainMask, a: &[f64], b: &[f64]) -> f64 {
    mask.cells()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&inside, (x, y))| if inside { x * y } else { 0.0 })
        .sum()
}

/// Conjugate gradients for the masked five-point system `L x = rhs`.
fn conjugate_gradient(
    mask: &DomainMask,
    nx: usize,
    ny: usize,
    h: f64,
    rhs: &[f64],
    rel_tol: f64,
) -> Result<Vec<f64>> {
    let n = nx * ny;
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    for (k, &inside) in mask.cells().iter().enumerate() {
        if !inside {
            r[k] = 0.0;
        }
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let rhs_norm = masked_dot(mask, &r, &r).sqrt();
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let mut rr = rhs_norm * rhs_norm;
    let budget = 20 * n + 200;
    for _ in 0..budget {
        apply_laplacian(mask, nx, ny, h, &p, &mut ap);
        let pap = masked_dot(mask, &p, &ap);
        if pap <= 0.0 {
            return Err(Error::NonConvergence {
                context: "conjugate gradients lost positive definiteness".into(),
                best: rr.sqrt(),
            });
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = masked_dot(mask, &r, &r);
        if rr_new.sqrt() <= rel_tol * rhs_norm {
            return Ok(x);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(Error::NonConvergence {
        context: "conjugate gradients exhausted the iteration budget".into(),
        best: rr.sqrt(),
    })
}

/// Smallest eigenvalue of the masked five-point Laplacian by inverse power
/// iteration: repeatedly solve `L y = x`, renormalize, and read off the
/// Rayleigh quotient. Returns the eigenvalue and the normalized
/// eigenfunction.
pub fn eigen2_inverse_power(
    mask: &DomainMask,
    grid: &Grid2D,
    tol: f64,
    max_outer: usize,
) -> Result<(f64, ScalarField)> {
    mask.check_grid(grid)?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let nx = grid.nx();
    let ny = grid.ny();
    let h = grid.h();
    let n = nx * ny;
    let mut x: Vec<f64> = mask
        .cells()
        .iter()
        .map(|&inside| if inside { 1.0 } else { 0.0 })
        .collect();
    let norm = masked_dot(mask, &x, &x).sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
    let mut lambda = f64::INFINITY;
    let mut ax = vec![0.0; n];
    for _ in 0..max_outer {
        let y = conjugate_gradient(mask, nx, ny, h, &x, 1e-12)?;
        let norm = masked_dot(mask, &y, &y).sqrt();
        if norm == 0.0 {
            return Err(Error::NonConvergence {
                context: "inverse power iteration produced a null vector".into(),
                best: lambda,
            });
        }
        for (k, v) in x.iter_mut().enumerate() {
            *v = y[k] / norm;
        }
        apply_laplacian(mask, nx, ny, h, &x, &mut ax);
        let new_lambda = masked_dot(mask, &x, &ax) / masked_dot(mask, &x, &x);
        let done = (new_lambda - lambda).abs() <= tol * new_lambda.abs();
        lambda = new_lambda;
        if done {
            // Principal eigenfunctions of this operator have one sign.
            let total: f64 = x.iter().sum();
            if total < 0.0 {
                for v in x.iter_mut() {
                    *v = -*v;
                }
            }
            let h2 = h * h;
            let l2 = (h2 * masked_dot(mask, &x, &x)).sqrt();
            for v in x.iter_mut() {
                *v /= l2;
            }
            let field = ScalarField::from_parts(grid.clone(), mask.clone(), x);
            return Ok((lambda, field));
        }
    }
    Err(Error::NonConvergence {
        context: "inverse power iteration exhausted the outer budget".into(),
        best: lambda,
    })
}

/// Solves the p = 2 torsion system `L w = 1` on the mask by conjugate
/// gradients; the independent oracle for the descent-based torsion solver.
pub fn poisson_unit_load(mask: &DomainMask, grid: &Grid2D, rel_tol: f64) -> Result<ScalarField> {
    mask.check_grid(grid)?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let rhs: Vec<f64> = mask
        .cells()
        .iter()
        .map(|&inside| if inside { 1.0 } else { 0.0 })
        .collect();
    let w = conjugate_gradient(mask, grid.nx(), grid.ny(), grid.h(), &rhs, rel_tol)?;
    Ok(ScalarField::from_parts(grid.clone(), mask.clone(), w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_grid;
    use approx::assert_relative_eq;

    #[test]
    fn five_point_eigenvalue_matches_closed_form_on_full_square() {
        let n = 24;
        let grid = make_grid(n, n, (1.0, 1.0)).unwrap();
        let mask = DomainMask::from_fn(&grid, |_, _| true);
        let (lambda, field) = eigen2_inverse_power(&mask, &grid, 1e-12, 300).unwrap();
        let h = grid.h();
        let expect =
            8.0 / (h * h) * (std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin().powi(2);
        assert_relative_eq!(lambda, expect, max_relative = 1e-9);
        assert!(field.values().iter().all(|v| *v >= -1e-12));
    }

    #[test]
    fn gram_identity_links_operator_and_energy() {
        // h^2 <L u, u> must equal the extended-lattice Dirichlet energy.
        let grid = make_grid(10, 10, (1.0, 1.0)).unwrap();
        let mask = DomainMask::from_fn(&grid, |i, j| (i + 2 * j) % 3 != 0 || i > 4);
        let values: Vec<f64> = mask
            .cells()
            .iter()
            .enumerate()
            .map(|(k, &inside)| if inside { ((k % 13) as f64) - 5.0 } else { 0.0 })
            .collect();
        let mut lu = vec![0.0; 100];
        apply_laplacian(&mask, 10, 10, grid.h(), &values, &mut lu);
        let h2 = grid.h() * grid.h();
        let quad = h2 * masked_dot(&mask, &lu, &values);
        let energy = super::super::dirichlet_energy(&values, 10, 10, grid.h(), 2.0, 0.0, 1.0);
        assert_relative_eq!(quad, energy, max_relative = 1e-11);
    }

    #[test]
    fn poisson_solution_is_positive_inside() {
        let grid = make_grid(16, 16, (1.0, 1.0)).unwrap();
        let mask = DomainMask::from_fn(&grid, |i, j| i >= 2 && i < 14 && j >= 3 && j < 13);
        let w = poisson_unit_load(&mask, &grid, 1e-12).unwrap();
        for (v, &inside) in w.values().iter().zip(mask.cells()) {
            if inside {
                assert!(*v > 0.0);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }
}
