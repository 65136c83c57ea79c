//! Plain-text graymap (PGM, magic `P2`) I/O for masks, with the grid encoded
//! in key=value header comments.

use std::fmt::Write as _;
use std::path::Path;

use super::{DomainMask, Grid2D};
use crate::{Error, Result};

/// Serialize a mask as a plain PGM (maxval 1). The grid is stored in a
/// comment line `# nx=.. ny=.. h=.. ox=.. oy=..`; rows are written top row
/// (largest `j`) first, as image viewers expect.
pub fn mask_to_pgm_string(mask: &DomainMask, grid: &Grid2D) -> String {
    let mut s = String::new();
    s.push_str("P2\n");
    let (ox, oy) = grid.origin();
    writeln!(
        s,
        "# nx={} ny={} h={} ox={} oy={}",
        grid.nx(),
        grid.ny(),
        grid.h(),
        ox,
        oy
    )
    .unwrap();
    writeln!(s, "{} {}", mask.nx(), mask.ny()).unwrap();
    s.push_str("1\n");
    for j in (0..mask.ny()).rev() {
        for i in 0..mask.nx() {
            if i > 0 {
                s.push(' ');
            }
            s.push(if mask.get(i, j) { '1' } else { '0' });
        }
        s.push('\n');
    }
    s
}

/// Parse a plain PGM produced by [`mask_to_pgm_string`] (any maxval >= 1 is
/// accepted; nonzero samples are true). Returns the mask and, when the grid
/// comment is present, the grid.
pub fn parse_mask_pgm(text: &str) -> Result<(DomainMask, Option<Grid2D>)> {
    let mut grid_line = None;
    let mut tokens: Vec<&str> = Vec::new();
    for line in text.lines() {
        if let Some(comment) = line.strip_prefix('#') {
            if comment.contains("nx=") {
                grid_line = Some(comment.trim().to_string());
            }
            continue;
        }
        tokens.extend(line.split_whitespace());
    }
    if tokens.first() != Some(&"P2") {
        return Err(Error::Parse("expected magic P2".into()));
    }
    if tokens.len() < 4 {
        return Err(Error::Parse("truncated graymap header".into()));
    }
    let nx: usize = tokens[1]
        .parse()
        .map_err(|_| Error::Parse(format!("bad width {}", tokens[1])))?;
    let ny: usize = tokens[2]
        .parse()
        .map_err(|_| Error::Parse(format!("bad height {}", tokens[2])))?;
    let maxval: u32 = tokens[3]
        .parse()
        .map_err(|_| Error::Parse(format!("bad maxval {}", tokens[3])))?;
    if maxval == 0 {
        return Err(Error::Parse("maxval must be >= 1".into()));
    }
    let samples = &tokens[4..];
    if samples.len() != nx * ny {
        return Err(Error::Parse(format!(
            "expected {} samples, got {}",
            nx * ny,
            samples.len()
        )));
    }
    let mut cells = vec![false; nx * ny];
    for (k, tok) in samples.iter().enumerate() {
        let v: u32 = tok
            .parse()
            .map_err(|_| Error::Parse(format!("bad sample {tok}")))?;
        if v > maxval {
            return Err(Error::Parse(format!("sample {v} exceeds maxval {maxval}")));
        }
        // Stored top row first.
        let i = k % nx;
        let j = ny - 1 - k / nx;
        cells[j * nx + i] = v != 0;
    }
    let mask = DomainMask::from_raw(nx, ny, cells);
    let grid = match grid_line {
        Some(line) => Some(parse_grid_comment(&line, nx, ny)?),
        None => None,
    };
    Ok((mask, grid))
}

fn parse_grid_comment(line: &str, nx: usize, ny: usize) -> Result<Grid2D> {
    let mut h = None;
    let mut ox = 0.0;
    let mut oy = 0.0;
    let mut hdr_nx = None;
    let mut hdr_ny = None;
    for part in line.split_whitespace() {
        if let Some((key, value)) = part.split_once('=') {
            match key {
                "h" => h = Some(parse_f64(value)?),
                "ox" => ox = parse_f64(value)?,
                "oy" => oy = parse_f64(value)?,
                "nx" => hdr_nx = Some(parse_usize(value)?),
                "ny" => hdr_ny = Some(parse_usize(value)?),
                _ => {}
            }
        }
    }
    let h = h.ok_or_else(|| Error::Parse("grid comment missing h=".into()))?;
    if hdr_nx.is_some_and(|v| v != nx) || hdr_ny.is_some_and(|v| v != ny) {
        return Err(Error::Parse("grid comment dimensions disagree with raster".into()));
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::Parse(format!("bad spacing h={h}")));
    }
    let grid = super::make_grid(nx, ny, (h * nx as f64, h * ny as f64))?;
    Ok(grid.with_spacing(h, (ox, oy)))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad float {s}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad integer {s}")))
}

/// Serialize a scalar field as a plain PGM (maxval 255), normalized so the
/// largest magnitude maps to 255; negative values clamp to 0. The grid
/// comment matches [`mask_to_pgm_string`].
pub fn field_to_pgm_string(values: &[f64], grid: &Grid2D) -> Result<String> {
    let (nx, ny) = (grid.nx(), grid.ny());
    if values.len() != nx * ny {
        return Err(Error::GridMismatch(format!(
            "field has {} values, grid has {} cells",
            values.len(),
            nx * ny
        )));
    }
    let peak = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let scale = if peak > 0.0 { 255.0 / peak } else { 0.0 };
    let mut s = String::new();
    s.push_str("P2\n");
    let (ox, oy) = grid.origin();
    writeln!(s, "# nx={nx} ny={ny} h={} ox={ox} oy={oy}", grid.h()).unwrap();
    writeln!(s, "{nx} {ny}").unwrap();
    s.push_str("255\n");
    for j in (0..ny).rev() {
        for i in 0..nx {
            if i > 0 {
                s.push(' ');
            }
            let level = (values[j * nx + i] * scale).round().clamp(0.0, 255.0);
            let _ = write!(s, "{}", level as u32);
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn save_field_pgm(values: &[f64], grid: &Grid2D, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, field_to_pgm_string(values, grid)?)?;
    Ok(())
}

pub fn save_mask_pgm(mask: &DomainMask, grid: &Grid2D, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mask_to_pgm_string(mask, grid))?;
    Ok(())
}

pub fn load_mask_pgm(path: impl AsRef<Path>) -> Result<(DomainMask, Option<Grid2D>)> {
    let text = std::fs::read_to_string(path)?;
    parse_mask_pgm(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, rasterize, ShapeSpec};

    #[test]
    fn mask_round_trip() {
        let grid = make_grid(20, 12, (2.0, 1.2)).unwrap();
        let mask = rasterize(
            &ShapeSpec::Disk {
                cx: 1.0,
                cy: 0.6,
                r: 0.5,
            },
            &grid,
        )
        .unwrap();
        let text = mask_to_pgm_string(&mask, &grid);
        let (back, g) = parse_mask_pgm(&text).unwrap();
        assert_eq!(back, mask);
        let g = g.unwrap();
        assert_eq!(g.nx(), 20);
        assert_eq!(g.ny(), 12);
        assert_eq!(g.h(), grid.h());
    }

    #[test]
    fn rejects_bad_magic_and_counts() {
        assert!(parse_mask_pgm("P5\n2 2\n1\n0 0 0 1\n").is_err());
        assert!(parse_mask_pgm("P2\n2 2\n1\n0 0 0\n").is_err());
        assert!(parse_mask_pgm("P2\n2 2\n1\n0 0 0 7\n").is_err());
        assert!(parse_mask_pgm("P2\n2 2\n0\n0 0 0 0\n").is_err());
    }

    #[test]
    fn orientation_is_top_row_first() {
        let grid = make_grid(2, 2, (1.0, 1.0)).unwrap();
        let mut mask = crate::geometry::DomainMask::empty(&grid);
        mask.set(0, 1, true); // top-left cell
        let text = mask_to_pgm_string(&mask, &grid);
        let data: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(3)
            .collect();
        assert_eq!(data, vec!["1 0", "0 0"]);
    }
}
