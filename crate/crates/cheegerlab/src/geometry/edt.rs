//! Exact Euclidean distance transform on the cell lattice.
//!
//! Distances are squared center-to-center distances in cell units to the
//! nearest false cell, where everything outside the grid also counts as
//! false. The transform is the classic two-pass scheme: a linear sweep per
//! row for the horizontal part, then a lower-envelope-of-parabolas pass per
//! column. All produced values are exact integers representable in f64.

use super::DomainMask;

/// Squared distance (cell units) from each cell center to the nearest
/// false-or-exterior cell center. False cells get 0.
pub fn squared_distance_to_false(mask: &DomainMask) -> Vec<f64> {
    let nx = mask.nx();
    let ny = mask.ny();
    let mut g = vec![0.0f64; nx * ny];

    // Row pass: squared distance to the nearest false cell in the same row,
    // with the virtual exterior columns at i = -1 and i = nx folded in.
    for j in 0..ny {
        let row = &mut g[j * nx..(j + 1) * nx];
        // Distance in cells to the nearest false cell scanning left, seeded
        // by the exterior column.
        let mut d = 0usize;
        for i in 0..nx {
            d = if mask.get(i, j) { d + 1 } else { 0 };
            row[i] = (d * d) as f64;
        }
        let mut d = 0usize;
        for i in (0..nx).rev() {
            d = if mask.get(i, j) { d + 1 } else { 0 };
            let dd = (d * d) as f64;
            if dd < row[i] {
                row[i] = dd;
            }
        }
    }

    // Column pass: lower envelope of the parabolas j' -> g(i,j') + (j-j')^2,
    // then the vertical exterior rows folded in.
    let mut out = vec![0.0f64; nx * ny];
    let mut f = vec![0.0f64; ny];
    let mut v = vec![0usize; ny];
    let mut z = vec![0.0f64; ny + 1];
    for i in 0..nx {
        for j in 0..ny {
            f[j] = g[j * nx + i];
        }
        let mut k = 0usize;
        v[0] = 0;
        z[0] = f64::NEG_INFINITY;
        z[1] = f64::INFINITY;
        for q in 1..ny {
            let fq = f[q] + (q * q) as f64;
            loop {
                let p = v[k];
                let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
                if s <= z[k] {
                    if k == 0 {
                        v[0] = q;
                        z[1] = f64::INFINITY;
                        break;
                    }
                    k -= 1;
                } else {
                    k += 1;
                    v[k] = q;
                    z[k] = s;
                    z[k + 1] = f64::INFINITY;
                    break;
                }
            }
        }
        let mut k = 0usize;
        for j in 0..ny {
            while z[k + 1] < j as f64 {
                k += 1;
            }
            let p = v[k];
            let dj = j as f64 - p as f64;
            let mut d2 = dj * dj + f[p];
            // Exterior rows at j = -1 and j = ny.
            let below = ((j + 1) * (j + 1)) as f64;
            let above = ((ny - j) * (ny - j)) as f64;
            if below < d2 {
                d2 = below;
            }
            if above < d2 {
                d2 = above;
            }
            out[j * nx + i] = d2;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, DomainMask};

    fn naive(mask: &DomainMask) -> Vec<f64> {
        let nx = mask.nx() as isize;
        let ny = mask.ny() as isize;
        let mut out = vec![0.0f64; (nx * ny) as usize];
        for j in 0..ny {
            for i in 0..nx {
                if !mask.get(i as usize, j as usize) {
                    continue;
                }
                // Nearest false cell inside the grid.
                let mut best = f64::INFINITY;
                for jj in 0..ny {
                    for ii in 0..nx {
                        if !mask.get(ii as usize, jj as usize) {
                            let d2 = ((i - ii) * (i - ii) + (j - jj) * (j - jj)) as f64;
                            if d2 < best {
                                best = d2;
                            }
                        }
                    }
                }
                // Exterior in the four straight directions dominates any
                // diagonal exterior cell.
                best = best
                    .min(((i + 1) * (i + 1)) as f64)
                    .min(((nx - i) * (nx - i)) as f64)
                    .min(((j + 1) * (j + 1)) as f64)
                    .min(((ny - j) * (ny - j)) as f64);
                out[(j * nx + i) as usize] = best;
            }
        }
        out
    }

    #[test]
    fn matches_naive_on_patterned_masks() {
        let grid = make_grid(17, 11, (1.7, 1.1)).unwrap();
        for salt in 0..8u64 {
            let mask = DomainMask::from_fn(&grid, |i, j| {
                // Deterministic scatter pattern.
                let x = (i as u64)
                    .wrapping_mul(2654435761)
                    .wrapping_add((j as u64).wrapping_mul(40503))
                    .wrapping_add(salt.wrapping_mul(97));
                (x >> 7) % 5 != 0
            });
            assert_eq!(squared_distance_to_false(&mask), naive(&mask), "salt {salt}");
        }
    }

    #[test]
    fn all_true_block_distances() {
        let grid = make_grid(5, 5, (1.0, 1.0)).unwrap();
        let mask = DomainMask::from_fn(&grid, |_, _| true);
        let d2 = squared_distance_to_false(&mask);
        // Center cell of a 5x5 all-true block: nearest exterior center is 3
        // cells away.
        assert_eq!(d2[2 * 5 + 2], 9.0);
        assert_eq!(d2[0], 1.0);
    }
}
