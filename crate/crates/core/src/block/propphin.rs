//! Transplanting a block into an axis-parallel square.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::build::witness;
use super::{BlockError, BlockSpec, PeriodicBlock};
use crate::exact::{AffineMap2, ConvexPolygon, GeomError, Mat2, Point2, Rational};
use crate::pwa::{CellSet, PwaError, PwaMap};

/// The search tries `k ≤ SEARCH_CAP_SLOPE·n + SEARCH_CAP_OFFSET`.
pub const SEARCH_CAP_SLOPE: u32 = 4;
pub const SEARCH_CAP_OFFSET: u32 = 16;

/// `[x₀, x₀ + s] × [y₀, y₀ + s]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Square {
    pub origin: Point2,
    pub side: Rational,
}

impl Square {
    pub fn new(origin: Point2, side: Rational) -> Result<Self, GeomError> {
        if !side.is_positive() {
            return Err(GeomError::InvalidPolygon(format!("square side {side} is not positive")));
        }
        Ok(Square { origin, side })
    }

    pub fn unit() -> Self {
        Square { origin: Point2::origin(), side: Rational::one() }
    }

    pub fn area(&self) -> Rational {
        &self.side * &self.side
    }

    pub fn polygon(&self) -> ConvexPolygon {
        let far = self.origin.add(&Point2::new(self.side.clone(), self.side.clone()));
        ConvexPolygon::rect(&self.origin.x, &self.origin.y, &far.x, &far.y).expect("positive side")
    }

    /// `x ↦ (x − origin)/side`, onto the unit square.
    pub fn to_unit(&self) -> AffineMap2 {
        let inv = self.side.recip().expect("positive side");
        AffineMap2::scale_translate(&inv, self.origin.scale(&-&inv))
    }

    pub fn from_unit(&self) -> AffineMap2 {
        AffineMap2::scale_translate(&self.side, self.origin.clone())
    }
}

/// The three transplant conditions, evaluated exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropphinReport {
    pub n: u64,
    pub k: u32,
    pub var_phi: Rational,
    pub var_block: Rational,
    /// `|Var(φ_N) − Var(φ)| ≤ Var(φ)/n`.
    pub variation_holds: bool,
    /// `φ_N = φ` on the boundary of the square.
    pub boundary_holds: bool,
    /// `Area(F)/Area(Q)`.
    pub area_ratio: Rational,
    /// `Area(φ_N(F))/Area(φ(Q))`.
    pub image_ratio: Rational,
    pub measures_hold: bool,
}

impl PropphinReport {
    pub fn holds(&self) -> bool {
        self.variation_holds && self.boundary_holds && self.measures_hold
    }
}

/// A block placed in a square: `x ↦ s·φ_N((x − c)/s) + L c + t` for the
/// affine map `φ(x) = L x + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transplant {
    pub block: Arc<PeriodicBlock>,
    pub square: Square,
    pub phi: AffineMap2,
    pub report: PropphinReport,
}

impl Transplant {
    /// Domain-side placement, square to unit square.
    pub fn pre(&self) -> AffineMap2 {
        self.square.to_unit()
    }

    /// Image-side placement, `v ↦ s v + L c + t`.
    pub fn post(&self) -> AffineMap2 {
        let shift = self.phi.apply(&self.square.origin);
        AffineMap2::scale_translate(&self.square.side, shift)
    }

    pub fn energy(&self) -> Rational {
        self.block.energy() * self.square.area()
    }

    pub fn witness_area(&self) -> Rational {
        self.block.witness_area() * self.square.area()
    }

    pub fn witness_image_area(&self) -> Rational {
        self.block.witness_image_area() * self.square.area()
    }

    /// The explicit map on the square and its witness cells.
    pub fn to_pwa(&self, cap: u128) -> Result<(PwaMap, CellSet), BlockError> {
        let unit = self.block.materialize(cap)?;
        let f = witness(&unit)?;
        let phi = unit.conjugate(&self.pre(), &self.post())?;
        let f = CellSet::new(f.indices().to_vec(), phi.mesh())?;
        Ok((phi, f))
    }

    pub fn evaluate(&self, p: &Point2) -> Result<Point2, PwaError> {
        let u = self.block.evaluate(&self.pre().apply(p))?;
        Ok(self.post().apply(&u))
    }

    pub fn inverse_evaluate(&self, p: &Point2) -> Result<Point2, PwaError> {
        let u = self.post().invert()?.apply(p);
        Ok(self.square.from_unit().apply(&self.block.inverse_evaluate(&u)?))
    }
}

fn assess(block: &PeriodicBlock, phi: &AffineMap2, square: &Square, n: u64) -> PropphinReport {
    let s2 = square.area();
    let var_phi = phi.linear.norm_l1() * &s2;
    let var_block = block.energy() * &s2;
    let variation_holds = (&var_block - &var_phi).abs() * Rational::from(n) <= var_phi;
    let probe = Transplant {
        block: Arc::new(block.clone()),
        square: square.clone(),
        phi: phi.clone(),
        report: PropphinReport {
            n,
            k: 0,
            var_phi: Rational::zero(),
            var_block: Rational::zero(),
            variation_holds: false,
            boundary_holds: false,
            area_ratio: Rational::zero(),
            image_ratio: Rational::zero(),
            measures_hold: false,
        },
    };
    // pinned strips give φ_N = L on ∂Q; the placement must turn L into φ
    let placed = probe.post().compose(&AffineMap2::linear(phi.linear.clone()).compose(&probe.pre()));
    let boundary_holds = block.validate_strip().is_ok() && placed == *phi;
    let area_ratio = block.witness_area() * &s2 / &s2;
    let image_ratio = block.witness_image_area() * &s2 / (phi.linear.det() * &s2);
    let inv_n = Rational::new(1, n as i64);
    let measures_hold = area_ratio < inv_n && image_ratio > Rational::one() - &inv_n;
    PropphinReport { n, k: block.spec().k, var_phi, var_block, variation_holds, boundary_holds, area_ratio, image_ratio, measures_hold }
}

/// Smallest `k ≥ 2` whose block, placed in `square` with boundary values
/// `phi`, satisfies all three items for `n`.
pub fn propphin(phi: &AffineMap2, square: &Square, n: u64) -> Result<Transplant, BlockError> {
    if n == 0 || n > i64::MAX as u64 {
        return Err(BlockError::InvalidSpec(format!("n = {n}")));
    }
    if !phi.linear.det().is_positive() {
        return Err(BlockError::InvalidSpec(format!("det = {} is not positive", phi.linear.det())));
    }
    let cap = (SEARCH_CAP_SLOPE as u64 * n + SEARCH_CAP_OFFSET as u64).min(u32::MAX as u64) as u32;
    for k in 2..=cap {
        let block = PeriodicBlock::new(BlockSpec::new(phi.linear.clone(), k)?)?;
        let report = assess(&block, phi, square, n);
        if report.holds() {
            return Ok(Transplant { block: Arc::new(block), square: square.clone(), phi: phi.clone(), report });
        }
    }
    Err(BlockError::SearchFailed { n, cap })
}

/// The block found by [`propphin`] for a linear map on the unit square; the
/// items are scale invariant, so it serves every square.
pub fn search_block(linear: &Mat2, n: u64) -> Result<Transplant, BlockError> {
    propphin(&AffineMap2::linear(linear.clone()), &Square::unit(), n)
}
