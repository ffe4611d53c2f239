//! Dyadic square packings of convex cells.
//!
//! Squares of side `s = 2^{−q}` sit on the grid anchored at the origin. A
//! grid square fits in a convex polygon iff its four corners do, so per grid
//! row the fitting squares form one run `i_lo .. i_hi`. Between vertex
//! heights both sides of the polygon are single edges and the run ends are
//! floors of linear functions of the row index, which [`floor_sum`] adds up
//! in logarithmic time. Rows that cross a vertex height are counted
//! directly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{ConvexPolygon, Point2, Rational};

/// `Σ_{i=0}^{n−1} ⌊(a·i + b)/m⌋` for `m > 0` and any signs of `a`, `b`.
pub fn floor_sum(n: &BigInt, m: &BigInt, a: &BigInt, b: &BigInt) -> BigInt {
    assert!(m.is_positive(), "modulus must be positive");
    if !n.is_positive() {
        return BigInt::zero();
    }
    let two = BigInt::from(2);
    let mut ans = BigInt::zero();
    let (mut n, mut m, mut a, mut b) = (n.clone(), m.clone(), a.clone(), b.clone());
    if a.is_negative() {
        let a2 = a.mod_floor(&m);
        ans -= &n * (&n - 1) / &two * ((&a2 - &a) / &m);
        a = a2;
    }
    if b.is_negative() {
        let b2 = b.mod_floor(&m);
        ans -= &n * ((&b2 - &b) / &m);
        b = b2;
    }
    loop {
        if a >= m {
            ans += &n * (&n - 1) / &two * (&a / &m);
            a %= &m;
        }
        if b >= m {
            ans += &n * (&b / &m);
            b %= &m;
        }
        let y_max = &a * &n + &b;
        if y_max < m {
            break;
        }
        n = &y_max / &m;
        b = &y_max % &m;
        std::mem::swap(&mut m, &mut a);
    }
    ans
}

/// The grid squares of side `2^{−q}` inside a convex cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquarePacking {
    pub q: u32,
    pub side: Rational,
    pub count: u64,
    /// `count · side²`.
    pub covered: Rational,
}

impl SquarePacking {
    /// Count at a given level.
    pub fn at_level(poly: &ConvexPolygon, q: u32) -> Self {
        let side = side_of(q);
        let count = count_squares(poly, q).to_u64().expect("square count fits in u64");
        let covered = Rational::from(count) * &side * &side;
        SquarePacking { q, side, count, covered }
    }

    /// Run of squares `[i s, (i+1) s] × [j s, (j+1) s]` in row `j`.
    pub fn row(&self, poly: &ConvexPolygon, j: &BigInt) -> Option<(BigInt, BigInt)> {
        row_run(poly, &self.side, j)
    }

    /// Grid indices `(i, j)` of a packed square containing `p`, if any.
    pub fn locate(&self, poly: &ConvexPolygon, p: &Point2) -> Option<(BigInt, BigInt)> {
        let fi = (&p.x / &self.side).floor();
        let fj = (&p.y / &self.side).floor();
        for j in [fj.clone(), &fj - 1] {
            if let Some((lo, hi)) = self.row(poly, &j) {
                for i in [fi.clone(), &fi - 1] {
                    if lo <= i && i < hi {
                        let sq = square_at(&self.side, &i, &j);
                        if sq.contains(p) {
                            return Some((i, j));
                        }
                    }
                }
            }
        }
        None
    }

    /// Lower-left corner of grid square `(i, j)`.
    pub fn corner(&self, i: &BigInt, j: &BigInt) -> Point2 {
        Point2::new(Rational::from(i.clone()) * &self.side, Rational::from(j.clone()) * &self.side)
    }

    /// All squares as `(i, j)`, row by row. Meant for small packings.
    pub fn squares(&self, poly: &ConvexPolygon) -> Vec<(BigInt, BigInt)> {
        let (lo, hi) = poly.bbox();
        let j0 = (&lo.y / &self.side).floor();
        let j1 = (&hi.y / &self.side).ceil();
        let mut out = Vec::new();
        let mut j = j0;
        while j < j1 {
            if let Some((a, b)) = self.row(poly, &j) {
                let mut i = a;
                while i < b {
                    out.push((i.clone(), j.clone()));
                    i += 1;
                }
            }
            j += 1;
        }
        out
    }
}

pub(crate) fn side_of(q: u32) -> Rational {
    Rational::from_bigints(BigInt::one(), BigInt::one() << q as usize)
}

fn square_at(side: &Rational, i: &BigInt, j: &BigInt) -> ConvexPolygon {
    let x0 = Rational::from(i.clone()) * side;
    let y0 = Rational::from(j.clone()) * side;
    ConvexPolygon::rect(&x0, &y0, &(&x0 + side), &(&y0 + side)).expect("positive side")
}

/// Horizontal cross-section `[x_left, x_right]` at height `y`.
fn cross_section(poly: &ConvexPolygon, y: &Rational) -> Option<(Rational, Rational)> {
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    let mut push = |x: Rational| {
        if lo.as_ref().is_none_or(|l| x < *l) {
            lo = Some(x.clone());
        }
        if hi.as_ref().is_none_or(|h| x > *h) {
            hi = Some(x);
        }
    };
    for (p, q) in poly.edges() {
        let (ymin, ymax) = if p.y <= q.y { (&p.y, &q.y) } else { (&q.y, &p.y) };
        if y < ymin || y > ymax {
            continue;
        }
        if p.y == q.y {
            push(p.x.clone());
            push(q.x.clone());
        } else {
            push(&p.x + (y - &p.y) * (&q.x - &p.x) / (&q.y - &p.y));
        }
    }
    Some((lo?, hi?))
}

/// The run of fitting squares in row `j`, by direct evaluation.
fn row_run(poly: &ConvexPolygon, side: &Rational, j: &BigInt) -> Option<(BigInt, BigInt)> {
    let y0 = Rational::from(j.clone()) * side;
    let y1 = &y0 + side;
    let (l0, r0) = cross_section(poly, &y0)?;
    let (l1, r1) = cross_section(poly, &y1)?;
    let lo = (l0.max(l1) / side).ceil();
    let hi = (r0.min(r1) / side).floor();
    (lo < hi).then_some((lo, hi))
}

/// `x = α + β y` along the edge `p → q` (not horizontal).
fn edge_line(p: &Point2, q: &Point2) -> (Rational, Rational) {
    let beta = (&q.x - &p.x) / (&q.y - &p.y);
    (&p.x - &p.y * &beta, beta)
}

/// The left and right edges over the open band `(y_lo, y_hi)`.
fn band_sides(poly: &ConvexPolygon, y_lo: &Rational, y_hi: &Rational) -> ((Rational, Rational), (Rational, Rational)) {
    let mid = (y_lo + y_hi) / Rational::from(2);
    let mut sides: Vec<(Rational, (Rational, Rational))> = poly
        .edges()
        .filter(|(p, q)| (p.y < mid && mid < q.y) || (q.y < mid && mid < p.y))
        .map(|(p, q)| {
            let line = edge_line(p, q);
            (&line.0 + &line.1 * &mid, line)
        })
        .collect();
    assert_eq!(sides.len(), 2, "a convex polygon meets a horizontal line twice");
    sides.sort_by(|a, b| a.0.cmp(&b.0));
    let right = sides.pop().expect("two sides").1;
    let left = sides.pop().expect("two sides").1;
    (left, right)
}

/// `(P, C, D)` with `x = (P j + C)/D` for `x = β j + c`, `D > 0`.
fn as_fraction(beta: &Rational, c: &Rational) -> (BigInt, BigInt, BigInt) {
    let d = beta.denom().lcm(&c.denom());
    let p = beta.numer() * (&d / beta.denom());
    let cc = c.numer() * (&d / c.denom());
    (p, cc, d)
}

/// `Σ_{j=a}^{b} ⌊β j + c⌋`.
fn sum_floor_linear(beta: &Rational, c: &Rational, a: &BigInt, b: &BigInt) -> BigInt {
    if b < a {
        return BigInt::zero();
    }
    let (p, cc, d) = as_fraction(beta, c);
    floor_sum(&(b - a + 1), &d, &p, &(&p * a + cc))
}

/// Number of fitting squares of side `2^{−q}`.
pub fn count_squares(poly: &ConvexPolygon, q: u32) -> BigInt {
    let s = side_of(q);
    let mut levels: Vec<Rational> = poly.vertices().iter().map(|v| v.y.clone()).collect();
    levels.sort();
    levels.dedup();
    let scale = Rational::from_bigints(BigInt::one() << q as usize, BigInt::one());
    let mut total = BigInt::zero();

    // rows crossing an interior vertex height
    let mut crossing: Vec<BigInt> = levels[1..levels.len() - 1]
        .iter()
        .filter(|y| !(*y * &scale).is_integer())
        .map(|y| (y * &scale).floor())
        .filter(|j| {
            let y0 = Rational::from(j.clone()) * &s;
            y0 >= levels[0] && &y0 + &s <= *levels.last().expect("nonempty")
        })
        .collect();
    crossing.dedup();
    for j in &crossing {
        if let Some((lo, hi)) = row_run(poly, &s, j) {
            total += hi - lo;
        }
    }

    for w in levels.windows(2) {
        let (y_lo, y_hi) = (&w[0], &w[1]);
        let j_a = (y_lo * &scale).ceil();
        let j_b: BigInt = (y_hi * &scale).floor() - 1;
        if j_b < j_a {
            continue;
        }
        let ((al, bl), (ar, br)) = band_sides(poly, y_lo, y_hi);
        // in grid units, left end max(L(y0), L(y1)) and right end
        // min(R(y0), R(y1)) pick the row top or bottom by slope sign
        let el = if bl.is_positive() { Rational::one() } else { Rational::zero() };
        let er = if br.is_negative() { Rational::one() } else { Rational::zero() };
        let cl = &al * &scale + &bl * &el;
        let cr = &ar * &scale + &br * &er;
        // width (br − bl) j + (cr − cl) must reach one grid unit
        let u = &br - &bl;
        let v = &cr - &cl;
        let need = Rational::one() - &v;
        let (mut a, mut b) = (j_a, j_b);
        if u.is_zero() {
            if v < Rational::one() {
                continue;
            }
        } else if u.is_positive() {
            a = a.max((&need / &u).ceil());
        } else {
            b = b.min((&need / &u).floor());
        }
        if b < a {
            continue;
        }
        let right = sum_floor_linear(&br, &cr, &a, &b);
        let left = sum_floor_linear(&-&bl, &-&cl, &a, &b);
        total += right + left;
    }
    total
}

/// Smallest dyadic level whose packing covers `(1 − 1/m)·|T|`. Coarser
/// levels with `s² > |T|` cannot hold a square and are skipped.
pub fn pack_squares(poly: &ConvexPolygon, m: u64) -> SquarePacking {
    let area = poly.area();
    assert!(area.is_positive(), "positive area");
    let target = (Rational::one() - Rational::new(1, m.max(1) as i64)) * &area;
    let mut q = 0;
    while side_of(q).pow(2) > area {
        q += 1;
    }
    loop {
        let packing = SquarePacking::at_level(poly, q);
        if packing.covered >= target {
            return packing;
        }
        q += 1;
    }
}

/// Reference count by testing every grid square's corners.
pub fn count_squares_brute(poly: &ConvexPolygon, q: u32) -> u64 {
    let s = side_of(q);
    let (lo, hi) = poly.bbox();
    let (i0, i1) = ((&lo.x / &s).floor(), (&hi.x / &s).ceil());
    let (j0, j1) = ((&lo.y / &s).floor(), (&hi.y / &s).ceil());
    let mut count = 0;
    let mut j = j0;
    while j < j1 {
        let mut i = i0.clone();
        while i < i1 {
            let sq = square_at(&s, &i, &j);
            if sq.vertices().iter().all(|c| poly.contains(c)) {
                count += 1;
            }
            i += 1;
        }
        j += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_floor_sum(n: i64, m: i64, a: i64, b: i64) -> i64 {
        (0..n).map(|i| Integer::div_floor(&(a * i + b), &m)).sum()
    }

    #[test]
    fn floor_sum_matches_brute() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let (n, m) = (rng.gen_range(0..40), rng.gen_range(1..30));
            let (a, b) = (rng.gen_range(-60..60), rng.gen_range(-200..200));
            let got = floor_sum(&BigInt::from(n), &BigInt::from(m), &BigInt::from(a), &BigInt::from(b));
            assert_eq!(got, BigInt::from(brute_floor_sum(n, m, a, b)), "{n} {m} {a} {b}");
        }
    }

    fn tri(p: [(i64, i64); 3], den: i64) -> ConvexPolygon {
        let pts: Vec<Point2> = p.iter().map(|&(x, y)| Point2::new(q(x, den), q(y, den))).collect();
        ConvexPolygon::from_points(&pts).unwrap()
    }

    #[test]
    fn counting_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 300 {
            let p = [0, 1, 2].map(|_| (rng.gen_range(-50..150), rng.gen_range(-50..150)));
            let t = match ConvexPolygon::from_points(&p.iter().map(|&(x, y)| Point2::new(q(x, 97), q(y, 89))).collect::<Vec<_>>()) {
                Ok(t) if t.len() == 3 => t,
                _ => continue,
            };
            for level in 0..6 {
                assert_eq!(count_squares(&t, level), BigInt::from(count_squares_brute(&t, level)), "{t:?} q={level}");
            }
            checked += 1;
        }
    }

    #[test]
    fn counting_handles_grid_aligned_vertices() {
        let t = tri([(0, 0), (8, 0), (0, 8)], 8);
        for level in 0..7 {
            assert_eq!(count_squares(&t, level), BigInt::from(count_squares_brute(&t, level)));
        }
        let quad = ConvexPolygon::from_points(&[
            Point2::new(q(1, 10), q(0, 1)),
            Point2::new(q(1, 1), q(1, 7)),
            Point2::new(q(4, 5), q(1, 1)),
            Point2::new(q(0, 1), q(3, 5)),
        ])
        .unwrap();
        for level in 0..6 {
            assert_eq!(count_squares(&quad, level), BigInt::from(count_squares_brute(&quad, level)));
        }
    }

    #[test]
    fn right_triangle_m2() {
        let t = tri([(0, 0), (1, 0), (0, 1)], 1);
        let p = pack_squares(&t, 2);
        // [0, 1/2]² touches the hypotenuse and already covers 1/4
        assert_eq!((p.q, p.count, p.covered.clone()), (1, 1, q(1, 4)));
        assert_eq!(SquarePacking::at_level(&t, 2).count, 6);
        assert!(p.covered <= t.area());
    }

    #[test]
    fn coverage_within_bounds() {
        let shapes = [tri([(0, 0), (5, 1), (2, 7)], 9), tri([(1, 1), (30, 2), (3, 4)], 31), tri([(0, 0), (1, 0), (0, 1)], 64)];
        for t in &shapes {
            for m in [3, 10, 50] {
                let p = pack_squares(t, m);
                let lower = (Rational::one() - Rational::new(1, m as i64)) * t.area();
                assert!(p.covered >= lower && p.covered <= t.area());
            }
        }
    }

    #[test]
    fn squares_are_inside_and_disjoint() {
        let t = tri([(0, 0), (5, 1), (2, 7)], 9);
        let p = pack_squares(&t, 10);
        let sq = p.squares(&t);
        assert_eq!(sq.len() as u64, p.count);
        for (i, j) in &sq {
            assert!(square_at(&p.side, i, j).vertices().iter().all(|c| t.contains(c)));
        }
        let mut uniq = sq.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), sq.len());
        let inside = p.corner(&sq[0].0, &sq[0].1).add(&Point2::new(&p.side / Rational::from(2), &p.side / Rational::from(3)));
        assert_eq!(p.locate(&t, &inside), Some(sq[0].clone()));
    }
}
