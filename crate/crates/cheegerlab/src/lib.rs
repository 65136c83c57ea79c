//! Numerical laboratory for first p-Laplacian eigenvalues, Cheeger constants,
//! torsion functions, and generalized Cheeger ratios on rasterized planar
//! domains, plus a simulated-annealing shape optimizer over those quantities.
//!
//! The crate is organized around a small set of geometric primitives
//! ([`geometry::Grid2D`], [`geometry::DomainMask`]) shared by every solver:
//!
//! * [`geometry`] — grids, shape rasterization, perimeter/area, exact
//!   Euclidean distance transform, inradius, erosion, graymap I/O.
//! * [`eigensolver`] — discrete Rayleigh quotients, the principal
//!   p-Laplacian eigenvalue on masks and intervals, p-torsion functions,
//!   and the torsion-based gamma distance between domains.
//! * [`cheeger`] — the Cheeger constant by Dinkelbach ratio iteration over a
//!   total-variation relaxation, an exhaustive small-mask oracle, and a
//!   closed-form oracle for disks and rectangles.
//! * [`ratio`] — the one-dimensional eigenvalue constant pi_p, the dispatch
//!   lambda_root covering p in [1, inf], the generalized ratio
//!   F_{p,q} = lambda_p^{1/p} / lambda_q^{1/q}, and inequality checking.
//! * [`shapeopt`] — constraint rescaling, simulated annealing over masks,
//!   a parametric 1-D family optimizer, and the puncture experiment.
//! * [`harness`] — experiment configs, the verification battery, parameter
//!   sweeps, and the command-line driver.

mod error;
pub mod cheeger;
pub mod eigensolver;
pub mod geometry;
pub mod harness;
pub mod ratio;
pub mod shapeopt;

pub use error::{Error, Result};
