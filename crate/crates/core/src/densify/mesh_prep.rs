//! Triangulation, diameter-driven refinement and the choice of `m`.

use crate::exact::{Point2, Rational};
use crate::pwa::{red_refine, Mesh, PwaError, PwaMap};

use super::DensifyError;

/// The same map over a triangulation of its mesh. Cells without
/// straight-angle vertices are fanned from their first vertex; cells with
/// them are fanned from their centroid so every listed vertex stays a
/// triangle corner.
pub fn triangulate_affine_mesh(g: &PwaMap) -> Result<PwaMap, PwaError> {
    let mesh = g.mesh();
    if mesh.cells().iter().all(|c| c.len() == 3) {
        return Ok(g.clone());
    }
    let mut vertices = mesh.vertices().to_vec();
    let mut cells = Vec::new();
    let mut parents = Vec::new();
    for (ci, cell) in mesh.cells().iter().enumerate() {
        if cell.len() == 3 {
            cells.push(cell.clone());
            parents.push(ci);
        } else if cell.len() == mesh.polygon(ci).len() {
            for t in 1..cell.len() - 1 {
                cells.push(vec![cell[0], cell[t], cell[t + 1]]);
                parents.push(ci);
            }
        } else {
            let poly = mesh.polygon(ci);
            let inv = Rational::new(1, poly.len() as i64);
            let sum = poly.vertices().iter().fold(Point2::origin(), |acc, p| acc.add(p));
            vertices.push(sum.scale(&inv));
            let c = vertices.len() - 1;
            for t in 0..cell.len() {
                cells.push(vec![cell[t], cell[(t + 1) % cell.len()], c]);
                parents.push(ci);
            }
        }
    }
    let tri = Mesh::new(vertices, cells, mesh.domain().clone())?;
    g.refined(tri, |i| parents[i])
}

fn fine_enough(g: &PwaMap, bound_sq: &Rational) -> bool {
    (0..g.mesh().cell_count()).all(|i| {
        let poly = g.mesh().polygon(i);
        if poly.squared_diameter() >= *bound_sq {
            return false;
        }
        let m = g.map(i);
        let img: Vec<Point2> = poly.vertices().iter().map(|v| m.apply(v)).collect();
        let mut d = Rational::zero();
        for a in 0..img.len() {
            for b in a + 1..img.len() {
                d = d.max(img[a].dist_sq(&img[b]));
            }
        }
        d < *bound_sq
    })
}

/// Red-refines until every cell and its image have diameter below `ε/8`.
/// Returns the refined map and the number of rounds.
pub fn refine_for_diameter(g: &PwaMap, epsilon: &Rational) -> Result<(PwaMap, u32), PwaError> {
    let bound = epsilon / Rational::from(8);
    let bound_sq = &bound * &bound;
    let mut cur = g.clone();
    let mut rounds = 0;
    while !fine_enough(&cur, &bound_sq) {
        let mesh = red_refine(cur.mesh())?;
        cur = cur.refined(mesh, |i| i / 4)?;
        rounds += 1;
    }
    Ok((cur, rounds))
}

pub const M_CAP: u64 = 1_000_000;

/// Smallest `m > 2n` such that for `C = 1 ± 1/m`: `C·V < M` and
/// `|1/(M − V_f) − 1/(M − C·V)| < ε/2`, with `V = Var(g)` and `V_f` the
/// target variation.
pub fn choose_m(var_g: &Rational, f_var_target: &Rational, epsilon: &Rational, bound: &Rational, n: u64) -> Result<u64, DensifyError> {
    if var_g >= bound || f_var_target >= bound {
        return Err(DensifyError::Input(format!("variation {var_g} is not below M = {bound}")));
    }
    let half = epsilon / Rational::from(2);
    let base = (bound - f_var_target).recip().expect("V < M");
    for m in (2 * n + 1)..=M_CAP {
        let step = Rational::new(1, m as i64);
        let ok = [Rational::one() - &step, Rational::one() + &step].iter().all(|c| {
            let cv = c * var_g;
            cv < *bound && (&base - (bound - &cv).recip().expect("CV < M")).abs() < half
        });
        if ok {
            return Ok(m);
        }
    }
    Err(DensifyError::Input("variation too close to M".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, AffineMap2, ConvexPolygon, Mat2};

    fn unit_quad() -> PwaMap {
        PwaMap::single_cell(ConvexPolygon::unit_square(), AffineMap2::identity())
    }

    #[test]
    fn quad_becomes_two_triangles() {
        let t = triangulate_affine_mesh(&unit_quad()).unwrap();
        assert_eq!(t.mesh().cell_count(), 2);
        assert_eq!(t.energy(), q(2, 1));
        let again = triangulate_affine_mesh(&t).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn straight_angle_cells_use_centroid() {
        // a square cell with a T-vertex at the middle of its bottom edge,
        // next to two small squares below
        let v = vec![
            Point2::from_ints(0, 0),
            Point2::from_ints(2, 0),
            Point2::from_ints(2, 2),
            Point2::from_ints(0, 2),
            Point2::from_ints(1, 0),
        ];
        let dom = ConvexPolygon::rect(&q(0, 1), &q(0, 1), &q(2, 1), &q(2, 1)).unwrap();
        let mesh = Mesh::new(v, vec![vec![0, 4, 1, 2, 3]], dom).unwrap();
        let g = PwaMap::new(mesh, vec![AffineMap2::linear(Mat2::from_ints(2, 1, 0, 1))]).unwrap();
        let t = triangulate_affine_mesh(&g).unwrap();
        assert_eq!(t.mesh().cell_count(), 5);
        assert_eq!(t.energy(), g.energy());
    }

    #[test]
    fn refinement_rounds() {
        let g = triangulate_affine_mesh(&unit_quad()).unwrap();
        assert_eq!(refine_for_diameter(&g, &q(16, 1)).unwrap().1, 0);
        let (r, rounds) = refine_for_diameter(&g, &q(1, 1)).unwrap();
        assert_eq!(rounds, 4);
        assert_eq!(r.mesh().cell_count(), 2 * 4usize.pow(4));
        assert_eq!(r.energy(), q(2, 1));
    }

    #[test]
    fn choose_m_examples() {
        let v = q(2, 1);
        assert_eq!(choose_m(&v, &v, &q(1, 1), &q(4, 1), 3).unwrap(), 7);
        for n in [1, 3, 10] {
            let m = choose_m(&v, &v, &q(1, 4), &q(4, 1), n).unwrap();
            assert!(m > 2 * n);
            assert!(choose_m(&v, &v, &q(1, 1), &q(4, 1), n).unwrap() <= m);
        }
        assert!(choose_m(&q(4, 1), &q(4, 1), &q(1, 1), &q(4, 1), 3).is_err());
    }
}
