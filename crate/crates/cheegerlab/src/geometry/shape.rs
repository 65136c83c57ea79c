//! Shape descriptions rasterized onto grids.

use crate::{Error, Result};

/// Geometric shape in physical coordinates. Rasterization tests cell-center
/// containment; `Punctured` additionally clears the single cell containing
/// each hole point (punctures have zero continuum measure, so `contains`
/// delegates to the base shape).
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    Disk {
        cx: f64,
        cy: f64,
        r: f64,
    },
    Rect {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
    },
    /// Simple polygon, even-odd containment rule, vertices in order.
    Polygon {
        vertices: Vec<(f64, f64)>,
    },
    Union(Vec<ShapeSpec>),
    Difference(Box<ShapeSpec>, Box<ShapeSpec>),
    Punctured {
        base: Box<ShapeSpec>,
        holes: Vec<(f64, f64)>,
    },
}

impl ShapeSpec {
    /// L-shaped unit region: the unit square minus its upper-right quadrant.
    pub fn lshape_unit() -> ShapeSpec {
        ShapeSpec::Polygon {
            vertices: vec![
                (0.0, 0.0),
                (1.0, 0.0),
                (1.0, 0.5),
                (0.5, 0.5),
                (0.5, 1.0),
                (0.0, 1.0),
            ],
        }
    }

    /// Annulus (ring) as a difference of concentric disks.
    pub fn annulus(cx: f64, cy: f64, r_outer: f64, r_inner: f64) -> ShapeSpec {
        ShapeSpec::Difference(
            Box::new(ShapeSpec::Disk { cx, cy, r: r_outer }),
            Box::new(ShapeSpec::Disk { cx, cy, r: r_inner }),
        )
    }

    /// Stadium: a rectangle of the given height capped by half-disks, total
    /// length `len`, centered at `(cx, cy)`.
    pub fn stadium(cx: f64, cy: f64, len: f64, height: f64) -> ShapeSpec {
        let r = height / 2.0;
        let body = len - height;
        if body <= 0.0 {
            return ShapeSpec::Disk { cx, cy, r };
        }
        ShapeSpec::Union(vec![
            ShapeSpec::Rect {
                x: cx - body / 2.0,
                y: cy - r,
                w: body,
                h: height,
            },
            ShapeSpec::Disk {
                cx: cx - body / 2.0,
                cy,
                r,
            },
            ShapeSpec::Disk {
                cx: cx + body / 2.0,
                cy,
                r,
            },
        ])
    }

    /// Axis-aligned ellipse approximated by a polygon (64 vertices).
    pub fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64) -> ShapeSpec {
        let n = 64;
        let vertices = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (cx + rx * t.cos(), cy + ry * t.sin())
            })
            .collect();
        ShapeSpec::Polygon { vertices }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            ShapeSpec::Disk { cx, cy, r } => {
                let dx = x - cx;
                let dy = y - cy;
                dx * dx + dy * dy <= r * r
            }
            ShapeSpec::Rect { x: x0, y: y0, w, h } => {
                x >= *x0 && x <= x0 + w && y >= *y0 && y <= y0 + h
            }
            ShapeSpec::Polygon { vertices } => point_in_polygon(vertices, x, y),
            ShapeSpec::Union(parts) => parts.iter().any(|s| s.contains(x, y)),
            ShapeSpec::Difference(base, cut) => base.contains(x, y) && !cut.contains(x, y),
            ShapeSpec::Punctured { base, .. } => base.contains(x, y),
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> ((f64, f64), (f64, f64)) {
        match self {
            ShapeSpec::Disk { cx, cy, r } => ((cx - r, cy - r), (cx + r, cy + r)),
            ShapeSpec::Rect { x, y, w, h } => ((*x, *y), (x + w, y + h)),
            ShapeSpec::Polygon { vertices } => {
                let mut lo = (f64::INFINITY, f64::INFINITY);
                let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for &(x, y) in vertices {
                    lo.0 = lo.0.min(x);
                    lo.1 = lo.1.min(y);
                    hi.0 = hi.0.max(x);
                    hi.1 = hi.1.max(y);
                }
                (lo, hi)
            }
            ShapeSpec::Union(parts) => {
                let mut lo = (f64::INFINITY, f64::INFINITY);
                let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for part in parts {
                    let (plo, phi) = part.bounding_box();
                    lo.0 = lo.0.min(plo.0);
                    lo.1 = lo.1.min(plo.1);
                    hi.0 = hi.0.max(phi.0);
                    hi.1 = hi.1.max(phi.1);
                }
                (lo, hi)
            }
            ShapeSpec::Difference(base, _) => base.bounding_box(),
            ShapeSpec::Punctured { base, .. } => base.bounding_box(),
        }
    }

    /// Hole points of the outermost `Punctured` wrapper, if any.
    pub(crate) fn puncture_points(&self) -> &[(f64, f64)] {
        match self {
            ShapeSpec::Punctured { holes, .. } => holes,
            _ => &[],
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            ShapeSpec::Disk { r, .. } => {
                if !r.is_finite() || *r <= 0.0 {
                    return Err(Error::InvalidInput(format!("disk radius must be positive, got {r}")));
                }
            }
            ShapeSpec::Rect { w, h, .. } => {
                if !(w.is_finite() && h.is_finite()) || *w <= 0.0 || *h <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "rectangle sides must be positive, got {w} x {h}"
                    )));
                }
            }
            ShapeSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidInput(
                        "polygon needs at least 3 vertices".into(),
                    ));
                }
                if vertices.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(Error::InvalidInput("polygon vertices must be finite".into()));
                }
            }
            ShapeSpec::Union(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidInput("union of no shapes".into()));
                }
                for p in parts {
                    p.validate()?;
                }
            }
            ShapeSpec::Difference(base, cut) => {
                base.validate()?;
                cut.validate()?;
            }
            ShapeSpec::Punctured { base, holes } => {
                base.validate()?;
                if holes.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(Error::InvalidInput("puncture points must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

fn point_in_polygon(vertices: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let (mut xj, mut yj) = vertices[n - 1];
    for &(xi, yi) in vertices {
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        xj = xi;
        yj = yi;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_containment() {
        let tri = ShapeSpec::Polygon {
            vertices: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
        };
        assert!(tri.contains(0.2, 0.2));
        assert!(!tri.contains(0.8, 0.8));
        assert!(!tri.contains(-0.1, 0.5));
    }

    #[test]
    fn union_and_difference() {
        let ann = ShapeSpec::annulus(0.5, 0.5, 0.4, 0.2);
        assert!(ann.contains(0.5, 0.8));
        assert!(!ann.contains(0.5, 0.5));
        let stad = ShapeSpec::stadium(0.5, 0.5, 0.8, 0.4);
        assert!(stad.contains(0.15, 0.5));
        assert!(stad.contains(0.5, 0.65));
        assert!(!stad.contains(0.12, 0.68));
    }

    #[test]
    fn validation_rejects_degenerate_shapes() {
        assert!(ShapeSpec::Disk { cx: 0.0, cy: 0.0, r: 0.0 }.validate().is_err());
        assert!(ShapeSpec::Rect { x: 0.0, y: 0.0, w: -1.0, h: 1.0 }.validate().is_err());
        assert!(ShapeSpec::Polygon { vertices: vec![(0.0, 0.0), (1.0, 0.0)] }
            .validate()
            .is_err());
        assert!(ShapeSpec::Union(vec![]).validate().is_err());
    }

    #[test]
    fn ellipse_bbox() {
        let e = ShapeSpec::ellipse(0.5, 0.5, 0.4, 0.2);
        let (lo, hi) = e.bounding_box();
        assert!((lo.0 - 0.1).abs() < 1e-9 && (hi.0 - 0.9).abs() < 1e-9);
        assert!(lo.1 > 0.29 && hi.1 < 0.71);
    }
}
