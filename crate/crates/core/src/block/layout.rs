//! Geometry of the strip tiling.
//!
//! Vertices come in rows of four at `x = 0, w, 1−w, 1` with `w = 1/n`.
//! Row `2i` sits at the bottom of strip `i` (`y = i·h`), row `2i + 1` at the
//! top of its `R′` (`y = i·h + h′`), so strip `i` uses vertices
//! `8i .. 8i + 12`. Cells are listed strip by strip in [`CellKind`] order.

use super::{BlockError, BlockSpec};
use crate::exact::{ConvexPolygon, Point2, Rational};
use crate::pwa::Mesh;

pub const CELLS_PER_STRIP: usize = 10;

/// Position of a cell within its strip. Primed variants are the mirror
/// images under `x ↦ 1 − x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    RPrime,
    RDouble,
    T1,
    T2,
    T3,
    T4,
    T1m,
    T2m,
    T3m,
    T4m,
}

impl CellKind {
    pub const ALL: [CellKind; CELLS_PER_STRIP] = [
        CellKind::RPrime,
        CellKind::RDouble,
        CellKind::T1,
        CellKind::T2,
        CellKind::T3,
        CellKind::T4,
        CellKind::T1m,
        CellKind::T2m,
        CellKind::T3m,
        CellKind::T4m,
    ];

    pub fn of(cell: usize) -> CellKind {
        Self::ALL[cell % CELLS_PER_STRIP]
    }

    pub fn local(self) -> usize {
        self as usize
    }

    pub fn is_t2(self) -> bool {
        matches!(self, CellKind::T2 | CellKind::T2m)
    }

    pub fn is_t3(self) -> bool {
        matches!(self, CellKind::T3 | CellKind::T3m)
    }

    pub fn is_rect(self) -> bool {
        matches!(self, CellKind::RPrime | CellKind::RDouble)
    }
}

/// `w = 1/n`, `h = 1/n²`, `h′ = 1/n^{5/2}` for `n = k²`.
#[derive(Debug, Clone)]
pub(crate) struct Dims {
    pub w: Rational,
    pub h: Rational,
    pub hp: Rational,
}

impl Dims {
    pub fn new(k: u32) -> Self {
        let k = Rational::from(k);
        let one = Rational::one();
        Dims { w: (&one / &k.pow(2)), h: (&one / &k.pow(4)), hp: (&one / &k.pow(5)) }
    }

    /// The four vertices of a row at height `y`.
    pub fn row(&self, y: &Rational) -> [Point2; 4] {
        let one = Rational::one();
        [Rational::zero(), self.w.clone(), &one - &self.w, one].map(|x| Point2::new(x, y.clone()))
    }
}

/// Cells of the strip whose vertices start at `base`.
pub(crate) fn strip_cells(base: usize) -> [Vec<usize>; CELLS_PER_STRIP] {
    let b = |j: usize| base + j;
    let m = |j: usize| base + 4 + j;
    let u = |j: usize| base + 8 + j;
    [
        vec![b(1), b(2), m(2), m(1)],
        vec![m(1), m(2), u(2), u(1)],
        vec![b(0), b(1), m(0)],
        vec![m(0), b(1), m(1)],
        vec![m(0), m(1), u(1)],
        vec![m(0), u(1), u(0)],
        vec![m(3), b(2), b(3)],
        vec![m(2), b(2), m(3)],
        vec![u(2), m(2), m(3)],
        vec![u(3), u(2), m(3)],
    ]
}

/// Local indices of the two vertices where the block departs from `A`:
/// `(w, h′)` and `(1 − w, h′)`.
pub(crate) const BENT: [usize; 2] = [5, 6];

/// Vertices and cells of `strips` stacked strips starting at `y = 0`.
pub(crate) fn strip_stack(dims: &Dims, strips: u64) -> (Vec<Point2>, Vec<Vec<usize>>) {
    let strips = strips as usize;
    let mut vertices = Vec::with_capacity(8 * strips + 4);
    for i in 0..strips {
        let y = &dims.h * &Rational::from(i as u64);
        vertices.extend(dims.row(&y));
        vertices.extend(dims.row(&(&y + &dims.hp)));
    }
    vertices.extend(dims.row(&(&dims.h * &Rational::from(strips as u64))));
    let cells = (0..strips).flat_map(|i| strip_cells(8 * i)).collect();
    (vertices, cells)
}

/// The tiling of the unit square for parameter `k`: `10·k⁴` cells.
pub fn build_tiling(k: u32) -> Result<Mesh, BlockError> {
    if k < 2 {
        return Err(BlockError::InvalidSpec(format!("k = {k} < 2")));
    }
    let spec_k = BlockSpec { a: crate::exact::Mat2::identity(), k };
    let (vertices, cells) = strip_stack(&Dims::new(k), spec_k.strips());
    Ok(Mesh::new(vertices, cells, ConvexPolygon::unit_square())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    #[test]
    fn k2_has_160_cells_of_total_area_one() {
        let m = build_tiling(2).unwrap();
        assert_eq!(m.cell_count(), 160);
        let total: Rational = m.polygons().iter().map(|p| p.area()).sum();
        assert_eq!(total, q(1, 1));
    }

    #[test]
    fn r_prime_height_at_n16() {
        let m = build_tiling(4).unwrap();
        let (lo, hi) = m.polygon(0).bbox();
        assert_eq!(&hi.y - &lo.y, q(1, 1024));
        assert_eq!((lo.x, hi.x), (q(1, 16), q(15, 16)));
    }

    #[test]
    fn t1_at_n4() {
        let m = build_tiling(2).unwrap();
        let t1 = m.polygon(CellKind::T1.local());
        let want = ConvexPolygon::triangle(Point2::from_ints(0, 0), Point2::new(q(1, 4), q(0, 1)), Point2::new(q(0, 1), q(1, 32))).unwrap();
        assert_eq!(*t1, want);
    }

    #[test]
    fn strips_are_translates() {
        let m = build_tiling(2).unwrap();
        let h = q(1, 16);
        for c in 0..m.cell_count() {
            let i = (c / CELLS_PER_STRIP) as i64;
            let base = m.polygon(c % CELLS_PER_STRIP);
            let shifted: Vec<Point2> = base.vertices().iter().map(|p| Point2::new(p.x.clone(), &p.y + &h * Rational::from(i))).collect();
            assert_eq!(m.polygon(c).vertices(), &shifted[..]);
        }
    }

    #[test]
    fn rejects_k1() {
        assert!(build_tiling(1).is_err());
    }
}
