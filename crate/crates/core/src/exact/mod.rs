//! Exact scalar and planar primitives.

mod geom;
mod rational;

pub(crate) use geom::{bbox_of, strip_collinear, winding_turns};
pub use geom::{convex_clip, orient, AffineMap2, ConvexPolygon, GeomError, Mat2, Point2};
pub use rational::{q, ParseRationalError, Rational};
