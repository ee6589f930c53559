//! Lowest Robin eigenvalue of a triangle in the attractive regime (α < 0).
//!
//! The crate is split along the numerical pipeline:
//!
//! * [`geometry`]: the `(a, c, S)` family of triangles of fixed area, the affine
//!   identification with the equilateral triangle, angles and perimeters.
//! * [`equilateral`]: the closed-form ground state of the equilateral triangle
//!   and the threshold functions derived from it.
//! * [`trial`]: the transformed quadratic form and the three trial-function
//!   upper bounds with their certification predicates.
//! * [`fem`]: an independent P1 finite-element eigenvalue oracle.
//! * [`scan`]: grid scans, verification suites and CSV/SVG output.

pub mod equilateral;
pub mod error;
pub mod fem;
pub mod field;
pub mod geometry;
pub mod quadrature;
pub mod roots;
pub mod scan;
pub mod sparse;
pub mod trial;

pub use error::{Error, Result};
pub use geometry::{Point, TriangleGeometry, TriangleParams};
