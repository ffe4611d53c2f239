//! Exact construction and certification of piecewise-affine homeomorphisms
//! of the unit square that squeeze almost all area through a thin set.
//!
//! * [`exact`]: rational scalars, points, matrices, affine maps, convex polygons.
//! * [`pwa`]: conforming meshes, piecewise-affine maps, validation, energy,
//!   overlay-based sup-distances and the metric `d`.
//! * [`block`]: the strip building block `φ_n`, its witness set and exact
//!   verification of every identity and bound it satisfies.
//! * [`densify`]: the density pipeline producing maps in `A_n` close to a
//!   given boundary-identity homeomorphism.

pub mod block;
pub mod densify;
pub mod exact;
pub mod pwa;

pub use exact::{q, AffineMap2, ConvexPolygon, Mat2, Point2, Rational};
pub use pwa::{CellSet, Mesh, PwaMap};
