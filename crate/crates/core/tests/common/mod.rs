#![allow(dead_code)]

use pahomeo::densify::{densify_with, identity_map, sample_homeomorphism, DensifyOptions, DensifySpec};
use pahomeo::{q, AffineMap2, ConvexPolygon, Mat2, Mesh, Point2, PwaMap, Rational};
use rand::Rng;

fn m(a: (i64, i64), b: (i64, i64), c: (i64, i64), d: (i64, i64)) -> Mat2 {
    Mat2::new(q(a.0, a.1), q(b.0, b.1), q(c.0, c.1), q(d.0, d.1))
}

/// Twenty matrices with positive determinant.
pub fn block_matrices() -> Vec<Mat2> {
    let list = vec![
        Mat2::identity(),
        Mat2::from_ints(2, 1, 1, 1),
        Mat2::from_ints(1, 3, 0, 1),
        Mat2::from_ints(3, 0, 1, 1),
        Mat2::from_ints(0, -1, 1, 0),
        Mat2::from_ints(-1, 2, -3, 1),
        Mat2::from_ints(5, -2, 3, 4),
        Mat2::from_ints(1, 0, 0, 7),
        m((1, 2), (0, 1), (0, 1), (2, 3)),
        m((3, 4), (-1, 5), (2, 7), (9, 8)),
        m((-5, 3), (1, 2), (-4, 1), (1, 9)),
        m((1, 10), (3, 1), (-2, 1), (1, 7)),
        m((7, 3), (7, 3), (-1, 11), (2, 5)),
        m((0, 1), (1, 3), (-6, 5), (1, 1)),
        m((2, 1), (-1, 2), (1, 3), (4, 1)),
        m((13, 7), (2, 9), (1, 4), (1, 6)),
        m((1, 1), (-11, 4), (1, 8), (1, 1)),
        m((-1, 1), (-1, 3), (3, 2), (-1, 5)),
        m((9, 2), (1, 100), (-1, 100), (1, 20)),
        m((1, 1000), (-1, 1), (1, 1), (5, 7)),
    ];
    assert!(list.iter().all(|a| a.det().is_positive()));
    list
}

/// Ten matrices with `|b| + |d| > |a| + |c|`.
pub fn bd_dominant() -> Vec<Mat2> {
    let list = vec![
        Mat2::from_ints(1, 3, 0, 1),
        Mat2::from_ints(1, 2, 0, 2),
        Mat2::from_ints(0, -1, 1, 3),
        Mat2::from_ints(1, 1, -1, 4),
        Mat2::from_ints(2, -3, 1, 5),
        m((1, 2), (1, 1), (0, 1), (3, 2)),
        m((1, 3), (-2, 1), (1, 4), (5, 3)),
        m((-1, 5), (4, 1), (-1, 2), (2, 1)),
        m((3, 7), (1, 1), (1, 9), (9, 4)),
        m((1, 1), (5, 2), (1, 3), (7, 3)),
    ];
    assert!(list.iter().all(|a| a.det().is_positive() && a.b.abs() + a.d.abs() > a.a.abs() + a.c.abs()));
    list
}

/// `S A S` for the matrices above: first column dominant.
pub fn ac_dominant() -> Vec<Mat2> {
    bd_dominant().iter().map(|a| Mat2::swap().mul(a).mul(&Mat2::swap())).collect()
}

pub fn affine_maps() -> Vec<AffineMap2> {
    vec![
        AffineMap2::identity(),
        AffineMap2::new(Mat2::from_ints(2, 1, 1, 1), Point2::new(q(1, 3), q(-1, 2))),
        AffineMap2::new(Mat2::from_ints(3, 0, 1, 1), Point2::from_ints(5, -7)),
        AffineMap2::new(m((1, 2), (-1, 3), (1, 4), (2, 1)), Point2::new(q(0, 1), q(9, 10))),
        AffineMap2::new(Mat2::from_ints(0, -1, 1, 0), Point2::new(q(-3, 8), q(1, 1))),
    ]
}

pub fn squares() -> Vec<(Point2, Rational)> {
    vec![(Point2::origin(), q(1, 1)), (Point2::new(q(1, 4), q(1, 2)), q(1, 8)), (Point2::new(q(-3, 1), q(7, 5)), q(5, 2))]
}

/// Fan of eight triangles with the centre sent to `c`.
pub fn pinwheel(c: Point2) -> PwaMap {
    let h = q(1, 2);
    let ring: Vec<Point2> = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)]
        .iter()
        .map(|&(x, y)| Point2::new(&h * Rational::from_integer(x), &h * Rational::from_integer(y)))
        .collect();
    let centre = Point2::new(h.clone(), h.clone());
    let mut vertices = ring.clone();
    vertices.push(centre.clone());
    let cells: Vec<Vec<usize>> = (0..8).map(|i| vec![i, (i + 1) % 8, 8]).collect();
    let maps = (0..8)
        .map(|i| AffineMap2::from_three_points([&ring[i], &ring[(i + 1) % 8], &centre], [&ring[i], &ring[(i + 1) % 8], &c]).unwrap())
        .collect();
    PwaMap::new(Mesh::new(vertices, cells, ConvexPolygon::unit_square()).unwrap(), maps).unwrap()
}

/// Explicit output of a tiny densify run (forced `k = 3`).
pub fn small_densified(g: &PwaMap) -> PwaMap {
    let spec = DensifySpec { g: g.clone(), n: 1, epsilon: q(16, 1), bound: q(6, 1) };
    let r = densify_with(&spec, &DensifyOptions { force_k: Some(3), force_m: Some(3) }).unwrap();
    r.f.materialize(1 << 20).unwrap().0
}

/// Five boundary-identity homeomorphisms of the unit square.
pub fn map_pool() -> Vec<PwaMap> {
    vec![
        identity_map(),
        sample_homeomorphism(),
        pinwheel(Point2::new(q(2, 5), q(1, 3))),
        pinwheel(Point2::new(q(1, 2), q(3, 4))),
        small_densified(&sample_homeomorphism()),
    ]
}

/// A random point of the closed unit square with dyadic or odd denominators.
pub fn random_point(rng: &mut impl Rng) -> Point2 {
    let den = if rng.gen_bool(0.5) { 1 << 20 } else { rng.gen_range(1..2000) * 2 + 1 };
    Point2::new(q(rng.gen_range(0..=den), den), q(rng.gen_range(0..=den), den))
}
