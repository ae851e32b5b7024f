//! Twistor-space charts, contact forms, gluing maps and the real structure
//! for rotating circle symmetries over Kähler data, computed on truncated
//! power series, together with the verification suite that checks every
//! desk-checkable identity of the construction.
//!
//! Module map:
//! - [`series`]: truncated multivariate power series (the scalar ring);
//! - [`exterior`]: forms, vector fields, chart maps, d/wedge/contraction/pullback;
//! - [`kahler`]: validated potential input and its derived geometry;
//! - [`construction`]: the two bundle halves, contact forms, gluing, real structure;
//! - [`models`]: built-in geometries and the two projective model spaces used
//!   as independent oracles;
//! - [`verify`]: spec parsing, the check suite, machine-readable reports.

// Index-matched loops mirror the tensor formulas; keep them literal.
#![allow(clippy::needless_range_loop)]

pub mod construction;
pub mod exterior;
pub mod kahler;
pub mod linalg;
pub mod models;
pub mod sampling;
pub mod series;
pub mod verify;

pub use series::{Point, Series, SeriesError, VarSet, C64};
