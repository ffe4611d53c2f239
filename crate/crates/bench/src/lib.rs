//! Fixtures shared by the benchmarks.

use pahomeo::{q, Mat2, Point2, Rational};

/// A matrix with mixed signs and non-trivial denominators.
pub fn skew_matrix() -> Mat2 {
    Mat2::new(q(3, 4), q(-1, 5), q(2, 7), q(9, 8))
}

/// `count` rational points of the unit square on a scrambled grid.
pub fn points(count: i64) -> Vec<Point2> {
    let den = 1009;
    (0..count).map(|i| Point2::new(q(i * 37 % den, den), q(i * 91 % den, den))).collect()
}

/// A long alternating sum, the typical shape of an energy total.
pub fn harmonic_like(terms: i64) -> Rational {
    (1..=terms).map(|i| q(if i % 2 == 0 { -1 } else { 1 }, i * i + 1)).sum()
}
