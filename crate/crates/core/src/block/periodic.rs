//! The block stored as one strip plus a strip count.
//!
//! Strip `i` is the base strip shifted up by `i·h` in the domain and by
//! `i·h·(b, d)` in the image, so every quantity the verification needs is a
//! per-strip value times `k⁴` or a max over the base strip. This keeps large
//! parameters, where the explicit mesh has `10·k⁴` cells, cheap.

use rayon::prelude::*;

use super::layout::{strip_stack, Dims, BENT};
use super::{identity_failed, BlockError, BlockSpec, CellKind, CELLS_PER_STRIP};
use crate::exact::{AffineMap2, ConvexPolygon, Mat2, Point2, Rational};
use crate::pwa::{validate_homeomorphism, Mesh, PwaError, PwaMap};

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicBlock {
    spec: BlockSpec,
    dims: Dims,
    strip: PwaMap,
    strip_inverse: PwaMap,
}

impl PartialEq for Dims {
    fn eq(&self, o: &Self) -> bool {
        self.w == o.w && self.h == o.h && self.hp == o.hp
    }
}

impl PeriodicBlock {
    pub fn new(spec: BlockSpec) -> Result<Self, BlockError> {
        spec.check()?;
        let dims = Dims::new(spec.k);
        let (vertices, cells) = strip_stack(&dims, 1);
        let domain = ConvexPolygon::rect(&Rational::zero(), &Rational::zero(), &Rational::one(), &dims.h)?;
        let a_prime = spec.a_prime();
        let values: Vec<Point2> =
            vertices.iter().enumerate().map(|(i, v)| if BENT.contains(&i) { a_prime.apply(v) } else { spec.a.apply(v) }).collect();
        let maps = cells
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if CellKind::of(c) == CellKind::RPrime {
                    Ok(AffineMap2::linear(a_prime.clone()))
                } else {
                    AffineMap2::from_three_points(
                        [&vertices[cell[0]], &vertices[cell[1]], &vertices[cell[2]]],
                        [&values[cell[0]], &values[cell[1]], &values[cell[2]]],
                    )
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let strip = PwaMap::new(Mesh::new(vertices, cells, domain)?, maps)?;
        let strip_inverse = strip.inverse()?;
        Ok(PeriodicBlock { spec, dims, strip, strip_inverse })
    }

    pub fn spec(&self) -> &BlockSpec {
        &self.spec
    }

    /// The base strip `[0,1] × [0,h]` as a map of its own.
    pub fn strip(&self) -> &PwaMap {
        &self.strip
    }

    pub fn strips(&self) -> u64 {
        self.spec.strips()
    }

    pub fn strip_height(&self) -> &Rational {
        &self.dims.h
    }

    /// Cells of the explicit block, `10·k⁴`.
    pub fn cell_count(&self) -> u128 {
        u128::from(self.strips()) * CELLS_PER_STRIP as u128
    }

    fn count(&self) -> Rational {
        Rational::from(self.strips())
    }

    pub fn gradient(&self, kind: CellKind) -> &Mat2 {
        &self.strip.map(kind.local()).linear
    }

    /// Total energy, `k⁴` times the strip energy.
    pub fn energy(&self) -> Rational {
        self.strip.energy() * self.count()
    }

    /// Energy on the `R′ ∪ R″` copies.
    pub fn rect_energy(&self) -> Rational {
        (self.strip.cell_energy(CellKind::RPrime.local()) + self.strip.cell_energy(CellKind::RDouble.local())) * self.count()
    }

    /// `|F|`: total area of the `R′` copies.
    pub fn witness_area(&self) -> Rational {
        self.strip.mesh().cell_area(CellKind::RPrime.local()) * self.count()
    }

    /// `|φ(F)|`.
    pub fn witness_image_area(&self) -> Rational {
        self.witness_area() * self.gradient(CellKind::RPrime).det()
    }

    /// `𝔼(φ on F)`.
    pub fn witness_energy(&self) -> Rational {
        self.strip.cell_energy(CellKind::RPrime.local()) * self.count()
    }

    /// Largest `|∇φ|₁` over the cells of the given kinds.
    pub fn max_gradient_norm(&self, pick: impl Fn(CellKind) -> bool) -> Rational {
        CellKind::ALL.iter().filter(|k| pick(**k)).map(|k| self.gradient(*k).norm_l1()).max().unwrap_or_else(Rational::zero)
    }

    fn vertex_deviations(&self) -> Vec<Point2> {
        let values = self.strip.vertex_values().expect("strip is continuous");
        self.strip.mesh().vertices().iter().zip(values).map(|(v, fv)| fv.sub(&self.spec.a.apply(v))).collect()
    }

    /// `max |φ(v) − A v|²` over all vertices; by periodicity, over the strip.
    pub fn deviation_sq(&self) -> Rational {
        self.vertex_deviations().iter().map(Point2::norm_sq).max().unwrap_or_else(Rational::zero)
    }

    /// `max |A⁻¹(φ(v) − A v)|²`, the vertex maximum of `|φ⁻¹ − A⁻¹|²` on
    /// the image.
    pub fn inverse_deviation_sq(&self) -> Rational {
        let inv = self.spec.a.inverse().expect("det A > 0");
        self.vertex_deviations().iter().map(|d| inv.apply(d).norm_sq()).max().unwrap_or_else(Rational::zero)
    }

    /// Checks that the strip is a homeomorphism onto `A(strip)` that agrees
    /// with `A` on the strip boundary. Stacking translates of such a strip
    /// gives a homeomorphism of the square that agrees with `A` on its
    /// boundary.
    pub fn validate_strip(&self) -> Result<(), BlockError> {
        let report = validate_homeomorphism(&self.strip);
        if !report.is_valid() {
            return Err(identity_failed("strip homeomorphism", report.failures.join("; ")));
        }
        for (i, d) in self.vertex_deviations().iter().enumerate() {
            if !BENT.contains(&i) && !d.norm_sq().is_zero() {
                return Err(identity_failed("pinned boundary", format!("strip vertex {i} moves off A")));
            }
        }
        let pinned = self.strip.mesh().domain().map(&AffineMap2::linear(self.spec.a.clone()))?;
        if report.image_domain.as_ref() != Some(&pinned) {
            return Err(identity_failed("pinned boundary", "strip image is not A(strip)"));
        }
        Ok(())
    }

    /// `i·h·(b, d)`, the image shift of strip `i`.
    fn image_shift(&self, i: u64) -> Point2 {
        self.spec.a.col_y().scale(&(&self.dims.h * &Rational::from(i)))
    }

    /// The affine map of a cell kind on strip `i`.
    pub fn map_in_strip(&self, kind: CellKind, i: u64) -> AffineMap2 {
        let m = self.strip.map(kind.local());
        let down = Point2::new(Rational::zero(), -(&self.dims.h * &Rational::from(i)));
        let t = m.apply(&down).add(&self.image_shift(i));
        AffineMap2::new(m.linear.clone(), t)
    }

    /// The explicit `10·k⁴`-cell map, refused above `cap` cells.
    pub fn materialize(&self, cap: u128) -> Result<PwaMap, BlockError> {
        if self.cell_count() > cap {
            return Err(BlockError::TooLarge { cells: self.cell_count(), cap });
        }
        let (vertices, cells) = strip_stack(&self.dims, self.strips());
        let mesh = Mesh::from_trusted(vertices, cells, ConvexPolygon::unit_square())?;
        let maps: Vec<AffineMap2> =
            (0..self.strips()).into_par_iter().flat_map_iter(|i| CellKind::ALL.iter().map(move |k| self.map_in_strip(*k, i))).collect();
        Ok(PwaMap::new(mesh, maps)?)
    }

    fn strip_index(&self, t: &Rational) -> u64 {
        let i = (t / &self.dims.h).floor();
        let i: i128 = i.try_into().unwrap_or(i128::MAX);
        i.clamp(0, self.strips() as i128 - 1) as u64
    }

    pub fn evaluate(&self, p: &Point2) -> Result<Point2, PwaError> {
        if !ConvexPolygon::unit_square().contains(p) {
            return Err(PwaError::OutsideDomain(p.clone()));
        }
        let i = self.strip_index(&p.y);
        let local = Point2::new(p.x.clone(), &p.y - &self.dims.h * &Rational::from(i));
        Ok(self.strip.evaluate(&local)?.add(&self.image_shift(i)))
    }

    pub fn inverse_evaluate(&self, p: &Point2) -> Result<Point2, PwaError> {
        let pre = self.spec.a.inverse()?.apply(p);
        if !ConvexPolygon::unit_square().contains(&pre) {
            return Err(PwaError::OutsideDomain(p.clone()));
        }
        let i = self.strip_index(&pre.y);
        let local = p.sub(&self.image_shift(i));
        let x = self.strip_inverse.evaluate(&local)?;
        Ok(Point2::new(x.x, x.y + &self.dims.h * &Rational::from(i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    fn block(a: Mat2, k: u32) -> PeriodicBlock {
        PeriodicBlock::new(BlockSpec::new(a, k).unwrap()).unwrap()
    }

    #[test]
    fn periodic_sums_match_explicit() {
        for (a, k) in [(Mat2::identity(), 2), (Mat2::from_ints(2, 1, 1, 1), 3), (Mat2::new(q(1, 2), q(-3, 4), q(1, 3), q(5, 2)), 4)] {
            let b = block(a, k);
            let phi = b.materialize(1 << 20).unwrap();
            assert_eq!(phi.energy(), b.energy());
            let f = crate::pwa::CellSet::new((0..b.strips() as usize).map(|i| i * CELLS_PER_STRIP).collect(), phi.mesh()).unwrap();
            assert_eq!(phi.area_of(&f).unwrap(), b.witness_area());
            assert_eq!(phi.image_area_of(&f).unwrap(), b.witness_image_area());
        }
    }

    #[test]
    fn strip_is_pinned_homeomorphism() {
        block(Mat2::from_ints(3, 0, 1, 1), 5).validate_strip().unwrap();
    }

    #[test]
    fn evaluation_matches_explicit_and_inverts() {
        let b = block(Mat2::from_ints(2, 1, 1, 1), 2);
        let phi = b.materialize(1 << 20).unwrap();
        for (x, y) in [(q(1, 3), q(1, 7)), (q(0, 1), q(1, 1)), (q(1, 5), q(1, 100)), (q(9, 10), q(33, 64))] {
            let p = Point2::new(x, y);
            let v = b.evaluate(&p).unwrap();
            assert_eq!(v, phi.evaluate(&p).unwrap());
            assert_eq!(b.inverse_evaluate(&v).unwrap(), p);
        }
        assert!(b.evaluate(&Point2::from_ints(2, 0)).is_err());
    }

    #[test]
    fn deviation_sits_at_the_bent_vertices() {
        let b = block(Mat2::identity(), 4);
        // (k − 2)·h′ in the y direction
        assert_eq!(b.deviation_sq(), (q(2, 1) / Rational::from(4u32).pow(5)).pow(2));
        assert_eq!(b.inverse_deviation_sq(), b.deviation_sq());
    }

    #[test]
    fn materialize_respects_cap() {
        assert!(matches!(block(Mat2::identity(), 3).materialize(100), Err(BlockError::TooLarge { .. })));
    }
}
