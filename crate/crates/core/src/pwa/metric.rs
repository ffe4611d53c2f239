//! Sup-distances between piecewise-affine maps and the metric `d`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::overlay::intersect_cells;
use super::{validate_homeomorphism, PwaError, PwaMap};
use crate::exact::{ConvexPolygon, Rational};

/// Bits of precision for rational enclosures of square roots.
pub const SQRT_BITS: u32 = 64;

/// A sup-norm, stored through its exact square.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupNorm {
    pub squared: Rational,
}

impl SupNorm {
    pub fn zero() -> Self {
        SupNorm { squared: Rational::zero() }
    }

    /// Certified upper bound on the norm itself (exact when rational).
    pub fn upper(&self) -> Rational {
        self.squared.sqrt_bounds(SQRT_BITS).1
    }

    pub fn lower(&self) -> Rational {
        self.squared.sqrt_bounds(SQRT_BITS).0
    }

    /// Decimal rendering with 12 digits.
    pub fn decimal(&self) -> String {
        self.upper().to_decimal_string(12)
    }

    /// `self < bound`, decided on squares.
    pub fn below(&self, bound: &Rational) -> bool {
        !bound.is_negative() && self.squared < bound * bound
    }

    pub fn max(self, other: SupNorm) -> SupNorm {
        if other.squared > self.squared {
            other
        } else {
            self
        }
    }
}

/// Exact `sup |f - g|` over the common domain. On each cell of the overlay
/// `f - g` is affine, so the Euclidean norm peaks at an overlay vertex.
pub fn sup_distance(f: &PwaMap, g: &PwaMap) -> Result<SupNorm, PwaError> {
    if f.mesh().domain() != g.mesh().domain() {
        return Err(PwaError::DomainMismatch);
    }
    let pieces = intersect_cells(f.mesh(), g.mesh());
    let best = pieces
        .par_iter()
        .map(|(i, j, poly): &(usize, usize, ConvexPolygon)| {
            poly.vertices().iter().map(|v| f.map(*i).apply(v).dist_sq(&g.map(*j).apply(v))).max().unwrap_or_else(Rational::zero)
        })
        .reduce(Rational::zero, |a, b| a.max(b));
    Ok(SupNorm { squared: best })
}

/// The three summands of `d(f, g)` and their certified total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sup_forward: SupNorm,
    pub sup_inverse: SupNorm,
    pub var_f: Rational,
    pub var_g: Rational,
    /// `|1/(M - Var f) - 1/(M - Var g)|`, exact.
    pub variation_term: Rational,
    /// Upper bound on `d(f, g)`; exact when both sup-norms are rational.
    pub d_value: Rational,
    /// Lower bound on `d(f, g)`.
    pub d_lower: Rational,
}

impl MetricReport {
    pub fn from_parts(sup_forward: SupNorm, sup_inverse: SupNorm, var_f: Rational, var_g: Rational, bound: &Rational) -> Self {
        let variation_term = ((bound - &var_f).recip().expect("Var < M") - (bound - &var_g).recip().expect("Var < M")).abs();
        let d_value = sup_forward.upper() + sup_inverse.upper() + &variation_term;
        let d_lower = sup_forward.lower() + sup_inverse.lower() + &variation_term;
        MetricReport { sup_forward, sup_inverse, var_f, var_g, variation_term, d_value, d_lower }
    }

    pub fn decimal(&self) -> String {
        self.d_value.to_decimal_string(12)
    }
}

fn check_member(f: &PwaMap, bound: &Rational) -> Result<Rational, PwaError> {
    if *f.mesh().domain() != ConvexPolygon::unit_square() {
        return Err(PwaError::DomainMismatch);
    }
    let report = validate_homeomorphism(f);
    if !report.is_valid() {
        return Err(PwaError::NotHomeomorphism(report.failures.join("; ")));
    }
    if !f.is_identity_on_boundary()? {
        return Err(PwaError::BoundaryNotIdentity);
    }
    let var = f.energy();
    if var >= *bound {
        return Err(PwaError::OutsideSpace { var: var.to_string(), bound: bound.to_string() });
    }
    Ok(var)
}

/// `d(f, g) = ‖f − g‖∞ + ‖f⁻¹ − g⁻¹‖∞ + |1/(M − Var f) − 1/(M − Var g)|`
/// for boundary-identity homeomorphisms of the unit square with
/// variation below `bound`.
pub fn metric_d(f: &PwaMap, g: &PwaMap, bound: &Rational) -> Result<MetricReport, PwaError> {
    let var_f = check_member(f, bound)?;
    let var_g = check_member(g, bound)?;
    let sup_forward = sup_distance(f, g)?;
    let sup_inverse = sup_distance(&f.inverse()?, &g.inverse()?)?;
    Ok(MetricReport::from_parts(sup_forward, sup_inverse, var_f, var_g, bound))
}
