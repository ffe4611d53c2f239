//! Planar points, 2x2 matrices, affine maps and convex polygons over [`Rational`].

use std::fmt;

use serde::{Deserialize, Serialize};

use super::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeomError {
    #[error("non-invertible affine map")]
    NonInvertible,
    #[error("degenerate source triangle")]
    DegenerateTriangle,
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: Rational,
    pub y: Rational,
}

impl Point2 {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point2 { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Point2::new(x.into(), y.into())
    }

    pub fn origin() -> Self {
        Point2::default()
    }

    pub fn add(&self, o: &Point2) -> Point2 {
        Point2::new(&self.x + &o.x, &self.y + &o.y)
    }

    pub fn sub(&self, o: &Point2) -> Point2 {
        Point2::new(&self.x - &o.x, &self.y - &o.y)
    }

    pub fn scale(&self, s: &Rational) -> Point2 {
        Point2::new(&self.x * s, &self.y * s)
    }

    pub fn midpoint(&self, o: &Point2) -> Point2 {
        let half = Rational::new(1, 2);
        Point2::new((&self.x + &o.x) * &half, (&self.y + &o.y) * &half)
    }

    pub fn norm_sq(&self) -> Rational {
        &self.x * &self.x + &self.y * &self.y
    }

    pub fn dist_sq(&self, o: &Point2) -> Rational {
        self.sub(o).norm_sq()
    }
}

impl fmt::Debug for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Twice the signed area of `(a, b, c)`; positive for a left turn.
pub fn orient(a: &Point2, b: &Point2, c: &Point2) -> Rational {
    let ab = b.sub(a);
    let ac = c.sub(a);
    &ab.x * &ac.y - &ab.y * &ac.x
}

/// Row-major `[[a, b], [c, d]]`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
}

impl Mat2 {
    pub fn new(a: Rational, b: Rational, c: Rational, d: Rational) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn identity() -> Self {
        Mat2::from_ints(1, 0, 0, 1)
    }

    /// The coordinate swap `(x, y) -> (y, x)`.
    pub fn swap() -> Self {
        Mat2::from_ints(0, 1, 1, 0)
    }

    pub fn scalar(s: Rational) -> Self {
        Mat2::new(s.clone(), Rational::zero(), Rational::zero(), s)
    }

    pub fn det(&self) -> Rational {
        &self.a * &self.d - &self.b * &self.c
    }

    /// Entrywise l1 norm `|a| + |b| + |c| + |d|`.
    pub fn norm_l1(&self) -> Rational {
        self.a.abs() + self.b.abs() + self.c.abs() + self.d.abs()
    }

    pub fn apply(&self, p: &Point2) -> Point2 {
        Point2::new(&self.a * &p.x + &self.b * &p.y, &self.c * &p.x + &self.d * &p.y)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            &self.a * &o.a + &self.b * &o.c,
            &self.a * &o.b + &self.b * &o.d,
            &self.c * &o.a + &self.d * &o.c,
            &self.c * &o.b + &self.d * &o.d,
        )
    }

    pub fn scale(&self, s: &Rational) -> Mat2 {
        Mat2::new(&self.a * s, &self.b * s, &self.c * s, &self.d * s)
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a.clone(), self.c.clone(), self.b.clone(), self.d.clone())
    }

    pub fn inverse(&self) -> Result<Mat2, GeomError> {
        let det = self.det();
        let inv = det.recip().ok_or(GeomError::NonInvertible)?;
        Ok(Mat2::new(&self.d * &inv, -(&self.b * &inv), -(&self.c * &inv), &self.a * &inv))
    }

    /// First column, the image of `(1, 0)`.
    pub fn col_x(&self) -> Point2 {
        Point2::new(self.a.clone(), self.c.clone())
    }

    /// Second column, the image of `(0, 1)`.
    pub fn col_y(&self) -> Point2 {
        Point2::new(self.b.clone(), self.d.clone())
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// `p -> linear * p + translation`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AffineMap2 {
    pub linear: Mat2,
    pub translation: Point2,
}

impl AffineMap2 {
    pub fn new(linear: Mat2, translation: Point2) -> Self {
        AffineMap2 { linear, translation }
    }

    pub fn identity() -> Self {
        AffineMap2::linear(Mat2::identity())
    }

    pub fn linear(linear: Mat2) -> Self {
        AffineMap2::new(linear, Point2::origin())
    }

    pub fn translation(t: Point2) -> Self {
        AffineMap2::new(Mat2::identity(), t)
    }

    /// `p -> s * p + t`.
    pub fn scale_translate(s: &Rational, t: Point2) -> Self {
        AffineMap2::new(Mat2::scalar(s.clone()), t)
    }

    pub fn apply(&self, p: &Point2) -> Point2 {
        self.linear.apply(p).add(&self.translation)
    }

    pub fn invert(&self) -> Result<AffineMap2, GeomError> {
        let inv = self.linear.inverse()?;
        let t = inv.apply(&self.translation);
        Ok(AffineMap2::new(inv, Point2::new(-t.x, -t.y)))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap2) -> AffineMap2 {
        AffineMap2::new(self.linear.mul(&inner.linear), self.apply(&inner.translation))
    }

    /// The unique affine map with `src[i] -> dst[i]`.
    pub fn from_three_points(src: [&Point2; 3], dst: [&Point2; 3]) -> Result<AffineMap2, GeomError> {
        let u = src[1].sub(src[0]);
        let v = src[2].sub(src[0]);
        let basis = Mat2::new(u.x, v.x, u.y, v.y);
        let inv = basis.inverse().map_err(|_| GeomError::DegenerateTriangle)?;
        let du = dst[1].sub(dst[0]);
        let dv = dst[2].sub(dst[0]);
        let images = Mat2::new(du.x, dv.x, du.y, dv.y);
        let linear = images.mul(&inv);
        let translation = dst[0].sub(&linear.apply(src[0]));
        Ok(AffineMap2::new(linear, translation))
    }
}

impl fmt::Debug for AffineMap2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} + {:?}", self.linear, self.translation)
    }
}

/// A strictly convex polygon, counterclockwise, starting at its
/// lexicographically smallest vertex.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Validates and canonicalizes a counterclockwise vertex list.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeomError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeomError::InvalidPolygon(format!("{n} vertices")));
        }
        for i in 0..n {
            let (a, b, c) = (&vertices[i], &vertices[(i + 1) % n], &vertices[(i + 2) % n]);
            if !orient(a, b, c).is_positive() {
                return Err(GeomError::InvalidPolygon(format!("not strictly convex counterclockwise at {b:?}")));
            }
        }
        let mut poly = ConvexPolygon { vertices };
        // A locally convex closed polyline can still wind more than once.
        let turns = winding_turns(&poly.vertices);
        if turns != 1 {
            return Err(GeomError::InvalidPolygon(format!("winds {turns} times")));
        }
        poly.canonicalize();
        Ok(poly)
    }

    /// Accepts either orientation and drops collinear and repeated points.
    pub fn from_points(points: &[Point2]) -> Result<Self, GeomError> {
        let mut pts = strip_collinear(points);
        if pts.len() >= 3 && signed_area2(&pts).is_negative() {
            pts.reverse();
        }
        ConvexPolygon::new(pts)
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: &Rational, y0: &Rational, x1: &Rational, y1: &Rational) -> Result<Self, GeomError> {
        ConvexPolygon::new(vec![
            Point2::new(x0.clone(), y0.clone()),
            Point2::new(x1.clone(), y0.clone()),
            Point2::new(x1.clone(), y1.clone()),
            Point2::new(x0.clone(), y1.clone()),
        ])
    }

    pub fn unit_square() -> Self {
        ConvexPolygon::rect(&Rational::zero(), &Rational::zero(), &Rational::one(), &Rational::one()).expect("unit square")
    }

    pub fn triangle(a: Point2, b: Point2, c: Point2) -> Result<Self, GeomError> {
        ConvexPolygon::from_points(&[a, b, c])
    }

    fn canonicalize(&mut self) {
        let start = self.vertices.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
        self.vertices.rotate_left(start);
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Point2, &Point2)> {
        let n = self.vertices.len();
        (0..n).map(move |i| (&self.vertices[i], &self.vertices[(i + 1) % n]))
    }

    /// Shoelace area.
    pub fn area(&self) -> Rational {
        signed_area2(&self.vertices) * Rational::new(1, 2)
    }

    /// Largest squared distance between two vertices.
    pub fn squared_diameter(&self) -> Rational {
        let mut best = Rational::zero();
        for (i, p) in self.vertices.iter().enumerate() {
            for q in &self.vertices[i + 1..] {
                let d = p.dist_sq(q);
                if d > best {
                    best = d;
                }
            }
        }
        best
    }

    /// Closed containment.
    pub fn contains(&self, p: &Point2) -> bool {
        self.edges().all(|(a, b)| !orient(a, b, p).is_negative())
    }

    pub fn contains_polygon(&self, other: &ConvexPolygon) -> bool {
        other.vertices.iter().all(|v| self.contains(v))
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        bbox_of(self.vertices.iter())
    }

    /// Image under an affine map with nonzero determinant; orientation is
    /// restored when the map reverses it.
    pub fn map(&self, f: &AffineMap2) -> Result<ConvexPolygon, GeomError> {
        let pts: Vec<Point2> = self.vertices.iter().map(|p| f.apply(p)).collect();
        ConvexPolygon::from_points(&pts)
    }

    /// Fan triangulation from the first vertex.
    pub fn fan_triangles(&self) -> Vec<ConvexPolygon> {
        let v = &self.vertices;
        (1..v.len() - 1)
            .map(|i| ConvexPolygon::triangle(v[0].clone(), v[i].clone(), v[i + 1].clone()).expect("fan of a strictly convex polygon"))
            .collect()
    }

    /// Positive-area intersection, clipping `self` against each edge of `clip`.
    pub fn clip(&self, clip: &ConvexPolygon) -> Option<ConvexPolygon> {
        let mut out: Vec<Point2> = self.vertices.clone();
        for (a, b) in clip.edges() {
            if out.is_empty() {
                return None;
            }
            let input = std::mem::take(&mut out);
            let side: Vec<Rational> = input.iter().map(|p| orient(a, b, p)).collect();
            let n = input.len();
            for i in 0..n {
                let j = (i + 1) % n;
                let (p, sp) = (&input[i], &side[i]);
                let (r, sr) = (&input[j], &side[j]);
                if !sp.is_negative() {
                    out.push(p.clone());
                }
                if (sp.is_positive() && sr.is_negative()) || (sp.is_negative() && sr.is_positive()) {
                    let t = sp / &(sp - sr);
                    let d = r.sub(p);
                    out.push(p.add(&d.scale(&t)));
                }
            }
        }
        let pts = strip_collinear(&out);
        if pts.len() < 3 {
            return None;
        }
        ConvexPolygon::new(pts).ok()
    }
}

/// Standalone wrapper kept for call sites that read better as a function.
pub fn convex_clip(subject: &ConvexPolygon, clip: &ConvexPolygon) -> Option<ConvexPolygon> {
    subject.clip(clip)
}

impl fmt::Debug for ConvexPolygon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.vertices.iter()).finish()
    }
}

pub(crate) fn signed_area2(pts: &[Point2]) -> Rational {
    let n = pts.len();
    let mut s = Rational::zero();
    for i in 0..n {
        let (p, r) = (&pts[i], &pts[(i + 1) % n]);
        s += &p.x * &r.y - &r.x * &p.y;
    }
    s
}

pub(crate) fn bbox_of<'a>(mut it: impl Iterator<Item = &'a Point2>) -> (Point2, Point2) {
    let first = it.next().expect("nonempty point set").clone();
    let (mut lo, mut hi) = (first.clone(), first);
    for p in it {
        if p.x < lo.x {
            lo.x = p.x.clone();
        }
        if p.y < lo.y {
            lo.y = p.y.clone();
        }
        if p.x > hi.x {
            hi.x = p.x.clone();
        }
        if p.y > hi.y {
            hi.y = p.y.clone();
        }
    }
    (lo, hi)
}

/// Number of full turns made by the edge directions of a closed polyline
/// whose consecutive edges all turn left or go straight.
pub(crate) fn winding_turns(pts: &[Point2]) -> usize {
    let n = pts.len();
    let upper = |d: &Point2| d.y.is_positive() || (d.y.is_zero() && d.x.is_positive());
    let dirs: Vec<Point2> = (0..n).map(|i| pts[(i + 1) % n].sub(&pts[i])).collect();
    (0..n).filter(|&i| !upper(&dirs[i]) && upper(&dirs[(i + 1) % n])).count()
}

/// Removes repeated consecutive points and collinear middle points.
pub(crate) fn strip_collinear(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = Vec::with_capacity(points.len());
    for p in points {
        if pts.last() != Some(p) {
            pts.push(p.clone());
        }
    }
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    let mut changed = true;
    while changed && pts.len() >= 3 {
        changed = false;
        let n = pts.len();
        for i in 0..n {
            let (a, b, c) = (&pts[(i + n - 1) % n], &pts[i], &pts[(i + 1) % n]);
            if orient(a, b, c).is_zero() {
                pts.remove(i);
                changed = true;
                break;
            }
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::q;

    fn p(x: Rational, y: Rational) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn norms_and_determinants() {
        assert_eq!(Mat2::identity().norm_l1(), q(2, 1));
        assert_eq!(Mat2::from_ints(2, 1, 1, 1).norm_l1(), q(5, 1));
        assert_eq!(Mat2::from_ints(1, 0, 0, 3).norm_l1(), q(4, 1));
        assert_eq!(Mat2::identity().det(), q(1, 1));
        assert_eq!(Mat2::from_ints(2, 1, 1, 1).det(), q(1, 1));
        assert_eq!(Mat2::from_ints(1, 2, 2, 4).det(), q(0, 1));
    }

    #[test]
    fn polygon_areas() {
        assert_eq!(ConvexPolygon::unit_square().area(), q(1, 1));
        let t1 = ConvexPolygon::triangle(Point2::origin(), p(q(1, 4), q(0, 1)), p(q(0, 1), q(1, 16))).unwrap();
        assert_eq!(t1.area(), q(1, 128));
        let r = ConvexPolygon::rect(&q(1, 4), &q(0, 1), &q(3, 4), &q(1, 32)).unwrap();
        assert_eq!(r.area(), q(1, 64));
    }

    #[test]
    fn affine_examples() {
        let pt = p(q(1, 3), q(1, 7));
        assert_eq!(AffineMap2::identity().apply(&pt), pt);
        let m = AffineMap2::linear(Mat2::from_ints(2, 1, 1, 1));
        assert_eq!(m.apply(&Point2::from_ints(1, 0)), Point2::from_ints(2, 1));
        // (0, 1) goes to the second column (b, d)
        assert_eq!(m.apply(&Point2::from_ints(0, 1)), Point2::from_ints(1, 1));
    }

    #[test]
    fn inverses() {
        assert_eq!(AffineMap2::identity().invert().unwrap(), AffineMap2::identity());
        let t = AffineMap2::translation(Point2::from_ints(1, 2));
        assert_eq!(t.invert().unwrap(), AffineMap2::translation(Point2::from_ints(-1, -2)));
        let m = AffineMap2::linear(Mat2::from_ints(2, 1, 1, 1));
        assert_eq!(m.invert().unwrap().linear, Mat2::from_ints(1, -1, -1, 2));
        let s = AffineMap2::linear(Mat2::from_ints(1, 2, 2, 4));
        assert_eq!(s.invert().unwrap_err().to_string(), "non-invertible affine map");
    }

    #[test]
    fn three_point_maps() {
        let o = Point2::origin();
        let e1 = Point2::from_ints(1, 0);
        let e2 = Point2::from_ints(0, 1);
        let id = AffineMap2::from_three_points([&o, &e1, &e2], [&o, &e1, &e2]).unwrap();
        assert_eq!(id, AffineMap2::identity());
        let m = AffineMap2::from_three_points([&o, &e1, &e2], [&o, &Point2::from_ints(2, 1), &Point2::from_ints(1, 1)]).unwrap();
        assert_eq!(m, AffineMap2::linear(Mat2::from_ints(2, 1, 1, 1)));
        let err = AffineMap2::from_three_points([&o, &e1, &Point2::from_ints(2, 0)], [&o, &e1, &e2]);
        assert_eq!(err.unwrap_err().to_string(), "degenerate source triangle");
    }

    #[test]
    fn clipping() {
        let sq = ConvexPolygon::unit_square();
        assert_eq!(sq.clip(&sq), Some(sq.clone()));
        let far = ConvexPolygon::rect(&q(2, 1), &q(0, 1), &q(3, 1), &q(1, 1)).unwrap();
        assert_eq!(sq.clip(&far), None);
        let touching = ConvexPolygon::rect(&q(1, 1), &q(0, 1), &q(2, 1), &q(1, 1)).unwrap();
        assert_eq!(sq.clip(&touching), None);
        let half = ConvexPolygon::rect(&q(1, 2), &q(1, 2), &q(3, 2), &q(3, 2)).unwrap();
        let expect = ConvexPolygon::rect(&q(1, 2), &q(1, 2), &q(1, 1), &q(1, 1)).unwrap();
        assert_eq!(sq.clip(&half), Some(expect));
    }

    #[test]
    fn diameters() {
        assert_eq!(ConvexPolygon::unit_square().squared_diameter(), q(2, 1));
        let t = ConvexPolygon::triangle(Point2::origin(), Point2::from_ints(1, 0), Point2::from_ints(0, 1)).unwrap();
        assert_eq!(t.squared_diameter(), q(2, 1));
        let r = ConvexPolygon::rect(&q(0, 1), &q(0, 1), &q(1, 1), &q(1, 16)).unwrap();
        assert_eq!(r.squared_diameter(), q(257, 256));
    }

    #[test]
    fn canonical_start_and_validation() {
        let a =
            ConvexPolygon::new(vec![Point2::from_ints(1, 1), Point2::from_ints(0, 1), Point2::from_ints(0, 0), Point2::from_ints(1, 0)])
                .unwrap();
        assert_eq!(a, ConvexPolygon::unit_square());
        assert_eq!(a.vertices()[0], Point2::origin());
        let cw = ConvexPolygon::new(vec![Point2::from_ints(0, 0), Point2::from_ints(0, 1), Point2::from_ints(1, 0)]);
        assert!(cw.is_err());
        let collinear =
            ConvexPolygon::new(vec![Point2::from_ints(0, 0), Point2::from_ints(1, 0), Point2::from_ints(2, 0), Point2::from_ints(0, 1)]);
        assert!(collinear.is_err());
    }
}
