//! The strip building block `φ_n` for a linear map `A` with `det A > 0`.
//!
//! With `n = k²`, the unit square is cut into `n²` horizontal strips of
//! height `1/n²`. Each strip holds a thin rectangle `R′` (height `1/n^{5/2}`)
//! on which the block stretches vertically by `k − 1`, a rectangle `R″`
//! above it that is squeezed to compensate, and four triangles on either
//! side. The block agrees with `A` on every strip boundary, so it is pinned
//! to `A` on the boundary of the square, while almost all of its image area
//! comes from the `R′` strips.

mod build;
mod layout;
mod periodic;
mod propphin;

pub use build::{build_block, check_concentration, verify_block, BlockReport, BlockResult, BlockResultJson, Concentration};
pub use layout::{build_tiling, CellKind, CELLS_PER_STRIP};
pub use periodic::PeriodicBlock;
pub use propphin::{propphin, search_block, PropphinReport, Square, Transplant, SEARCH_CAP_OFFSET, SEARCH_CAP_SLOPE};

use serde::{Deserialize, Serialize};

use crate::exact::{GeomError, Mat2, Rational};
use crate::pwa::PwaError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BlockError {
    #[error("invalid block spec: {0}")]
    InvalidSpec(String),
    #[error("{identity} failed: {detail}")]
    Identity { identity: &'static str, detail: String },
    #[error("parameter search failed: no k <= {cap} works for n = {n}")]
    SearchFailed { n: u64, cap: u32 },
    #[error("{cells} cells exceed the materialization cap of {cap}")]
    TooLarge { cells: u128, cap: u128 },
    #[error(transparent)]
    Pwa(#[from] PwaError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

fn identity_failed(identity: &'static str, detail: impl Into<String>) -> BlockError {
    BlockError::Identity { identity, detail: detail.into() }
}

/// A linear map `A` with positive determinant and the parameter `k`
/// (`n = k²`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockSpec {
    pub a: Mat2,
    pub k: u32,
}

impl BlockSpec {
    pub fn new(a: Mat2, k: u32) -> Result<Self, BlockError> {
        let spec = BlockSpec { a, k };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), BlockError> {
        if self.k < 2 {
            return Err(BlockError::InvalidSpec(format!("k = {} < 2", self.k)));
        }
        if !self.a.det().is_positive() {
            return Err(BlockError::InvalidSpec(format!("det A = {} is not positive", self.a.det())));
        }
        Ok(())
    }

    /// `n = k²`.
    pub fn n(&self) -> u64 {
        u64::from(self.k).pow(2)
    }

    /// Number of strips, `n² = k⁴`.
    pub fn strips(&self) -> u64 {
        u64::from(self.k).pow(4)
    }

    pub fn k_rational(&self) -> Rational {
        Rational::from(self.k)
    }

    /// `A′ = (a, (k−1)b; c, (k−1)d)`, the map on `R′`.
    pub fn a_prime(&self) -> Mat2 {
        let s = Rational::from(self.k - 1);
        Mat2::new(self.a.a.clone(), &self.a.b * &s, self.a.c.clone(), &self.a.d * &s)
    }

    /// Gradient on `R″`: `(a, b/(k−1); c, d/(k−1))`.
    pub fn r_double_gradient(&self) -> Mat2 {
        let s = Rational::new(1, i64::from(self.k) - 1);
        Mat2::new(self.a.a.clone(), &self.a.b * &s, self.a.c.clone(), &self.a.d * &s)
    }

    /// Common first column on `T₂` and `T₃`: `(a, c) + (1/n − 2/n^{3/2})(b, d)`.
    fn t_column(&self) -> (Rational, Rational) {
        let k = self.k_rational();
        let shift = (k.clone() - Rational::from(2)) / k.pow(3);
        (&self.a.a + &self.a.b * &shift, &self.a.c + &self.a.d * &shift)
    }

    /// Displayed gradient on `T₂`.
    pub fn t2_gradient(&self) -> Mat2 {
        let (x, y) = self.t_column();
        let p = self.a_prime();
        Mat2::new(x, p.b, y, p.d)
    }

    /// Displayed gradient on `T₃`.
    pub fn t3_gradient(&self) -> Mat2 {
        let (x, y) = self.t_column();
        let r = self.r_double_gradient();
        Mat2::new(x, r.b, y, r.d)
    }

    /// `|F| = (1 − 2/n)/k`.
    pub fn witness_area_formula(&self) -> Rational {
        let n = Rational::from(self.n());
        (Rational::one() - Rational::from(2) / n) / self.k_rational()
    }

    /// `|φ_n(F)| = (1 − 2/n)(1 − 1/k) det A`.
    pub fn witness_image_formula(&self) -> Rational {
        let n = Rational::from(self.n());
        let k = self.k_rational();
        (Rational::one() - Rational::from(2) / n) * (Rational::one() - k.recip().expect("k > 0")) * self.a.det()
    }

    /// `(1 − 2/n)|A|₁`, the energy of `φ_n` and of `A` on the `R′ ∪ R″` copies.
    pub fn rect_energy_formula(&self) -> Rational {
        let n = Rational::from(self.n());
        (Rational::one() - Rational::from(2) / n) * self.a.norm_l1()
    }
}
