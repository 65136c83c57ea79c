//! Scalar field serialization: 16-bit portable graymaps with the value
//! range recorded in header comments, and cell-center CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

use super::ScalarField;

/// Renders the field as a plain portable graymap (magic `P2`, maxval 65535)
/// with linear quantization. Header comments record the grid geometry and
/// the value range so the quantization is invertible.
pub fn field_to_pgm_string(field: &ScalarField) -> String {
    let grid = field.grid();
    let nx = grid.nx();
    let ny = grid.ny();
    let values = field.values();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(*v);
        max = max.max(*v);
    }
    let span = max - min;
    let mut out = String::new();
    out.push_str("P2\n");
    let (ox, oy) = grid.origin();
    let _ = writeln!(
        out,
        "# nx={} ny={} h={} ox={} oy={}",
        nx,
        ny,
        grid.h(),
        ox,
        oy
    );
    let _ = writeln!(out, "# min={min} max={max}");
    let _ = writeln!(out, "{nx} {ny}");
    out.push_str("65535\n");
    for j in (0..ny).rev() {
        let mut first = true;
        for i in 0..nx {
            let v = values[j * nx + i];
            let q = if span > 0.0 {
                ((v - min) / span * 65535.0).round() as u32
            } else {
                0
            };
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{q}");
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Writes [`field_to_pgm_string`] to a file.
pub fn save_field_pgm(field: &ScalarField, path: &Path) -> Result<()> {
    std::fs::write(path, field_to_pgm_string(field))?;
    Ok(())
}

/// Renders the field as CSV rows of cell centers, one `x,y,value` row per
/// cell. Coordinates carry length units; the value column is problem
/// specific, so the header names it plainly.
pub fn field_to_csv_string(field: &ScalarField) -> String {
    let grid = field.grid();
    let nx = grid.nx();
    let ny = grid.ny();
    let mut out = String::from("x[length],y[length],value\n");
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = grid.cell_center(i, j);
            let _ = writeln!(out, "{x},{y},{}", field.values()[j * nx + i]);
        }
    }
    out
}

/// Writes [`field_to_csv_string`] to a file.
pub fn save_field_csv(field: &ScalarField, path: &Path) -> Result<()> {
    std::fs::write(path, field_to_csv_string(field))?;
    Ok(())
}
