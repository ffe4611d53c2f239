use std::collections::HashMap;

use super::spatial::Rect;
use super::PwaError;
use crate::exact::{orient, strip_collinear, winding_turns, ConvexPolygon, Point2, Rational};

/// A conforming complex of convex cells tiling a convex domain.
///
/// Cells are counterclockwise vertex-index lists. A cell may list extra
/// vertices in the interior of one of its edges (a straight angle) so that
/// neighbours split along that edge still share whole edges.
#[derive(Clone)]
pub struct Mesh {
    vertices: Vec<Point2>,
    cells: Vec<Vec<usize>>,
    domain: ConvexPolygon,
    polygons: Vec<ConvexPolygon>,
    rects: Vec<Rect>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.cells == other.cells && self.domain == other.domain
    }
}

impl std::fmt::Debug for Mesh {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mesh")
            .field("vertices", &self.vertices.len())
            .field("cells", &self.cells.len())
            .field("domain", &self.domain)
            .finish()
    }
}

fn invalid(msg: impl Into<String>) -> PwaError {
    PwaError::InvalidMesh(msg.into())
}

impl Mesh {
    /// Builds and validates a mesh: distinct vertices, convex counterclockwise
    /// cells, every interior edge shared with exactly one opposite edge, every
    /// other edge on the domain boundary, and cell areas summing to the domain
    /// area. Together these rule out overlapping cells.
    pub fn new(vertices: Vec<Point2>, cells: Vec<Vec<usize>>, domain: ConvexPolygon) -> Result<Self, PwaError> {
        let mut seen: HashMap<&Point2, usize> = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if let Some(j) = seen.insert(v, i) {
                return Err(invalid(format!("vertices {j} and {i} coincide at {v:?}")));
            }
        }
        drop(seen);
        let mut polygons = Vec::with_capacity(cells.len());
        for (ci, cell) in cells.iter().enumerate() {
            polygons.push(cell_polygon(&vertices, cell).map_err(|m| invalid(format!("cell {ci}: {m}")))?);
        }
        let mesh = Mesh::assemble(vertices, cells, domain, polygons);
        mesh.check_edges()?;
        let total: Rational = mesh.polygons.iter().map(|p| p.area()).sum();
        if total != mesh.domain.area() {
            return Err(invalid(format!("cell areas sum to {total}, domain area is {}", mesh.domain.area())));
        }
        Ok(mesh)
    }

    fn assemble(vertices: Vec<Point2>, cells: Vec<Vec<usize>>, domain: ConvexPolygon, polygons: Vec<ConvexPolygon>) -> Self {
        let rects = polygons.iter().map(|p| Rect::of_points(p.vertices().iter())).collect();
        Mesh { vertices, cells, domain, polygons, rects }
    }

    fn check_edges(&self) -> Result<(), PwaError> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.cells.len() * 4);
        for (ci, cell) in self.cells.iter().enumerate() {
            for (u, v) in cell_edges(cell) {
                if let Some(other) = directed.insert((u, v), ci) {
                    return Err(invalid(format!("edge ({u}, {v}) used by cells {other} and {ci}")));
                }
            }
        }
        let domain_edges: Vec<(&Point2, &Point2)> = self.domain.edges().collect();
        for (&(u, v), &ci) in &directed {
            if directed.contains_key(&(v, u)) {
                continue;
            }
            let (pu, pv) = (&self.vertices[u], &self.vertices[v]);
            let dir = pv.sub(pu);
            let on_boundary = domain_edges.iter().any(|(a, b)| {
                let e = b.sub(a);
                orient(a, b, pu).is_zero() && orient(a, b, pv).is_zero() && (&dir.x * &e.x + &dir.y * &e.y).is_positive()
            });
            if !on_boundary || !self.domain.contains(pu) || !self.domain.contains(pv) {
                return Err(invalid(format!("edge ({u}, {v}) of cell {ci} is neither shared nor on the domain boundary")));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &[usize] {
        &self.cells[i]
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn domain(&self) -> &ConvexPolygon {
        &self.domain
    }

    /// The cell's geometry with straight-angle vertices removed.
    pub fn polygon(&self, i: usize) -> &ConvexPolygon {
        &self.polygons[i]
    }

    pub fn polygons(&self) -> &[ConvexPolygon] {
        &self.polygons
    }

    pub(crate) fn rect(&self, i: usize) -> &Rect {
        &self.rects[i]
    }

    pub(crate) fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn cell_area(&self, i: usize) -> Rational {
        self.polygons[i].area()
    }

    /// Directed boundary edges `(u, v)`, i.e. edges with no opposite twin.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut directed: HashMap<(usize, usize), ()> = HashMap::with_capacity(self.cells.len() * 4);
        for cell in &self.cells {
            for e in cell_edges(cell) {
                directed.insert(e, ());
            }
        }
        let mut out: Vec<(usize, usize)> = directed.keys().filter(|(u, v)| !directed.contains_key(&(*v, *u))).copied().collect();
        out.sort_unstable();
        out
    }

    /// Boundary vertices in counterclockwise order, starting from the
    /// smallest index.
    pub fn boundary_cycle(&self) -> Result<Vec<usize>, PwaError> {
        let edges = self.boundary_edges();
        let next: HashMap<usize, usize> = edges.iter().copied().collect();
        if next.len() != edges.len() {
            return Err(invalid("boundary vertex with two outgoing edges"));
        }
        let start = edges.first().map(|e| e.0).ok_or_else(|| invalid("empty boundary"))?;
        let mut cycle = vec![start];
        let mut cur = next[&start];
        while cur != start {
            cycle.push(cur);
            if cycle.len() > edges.len() {
                return Err(invalid("boundary does not close"));
            }
            cur = *next.get(&cur).ok_or_else(|| invalid("boundary does not close"))?;
        }
        if cycle.len() != edges.len() {
            return Err(invalid("boundary consists of several cycles"));
        }
        Ok(cycle)
    }

    /// Indices of cells whose closure contains `p`.
    pub fn locate_all(&self, p: &Point2) -> Vec<usize> {
        let r = Rect::point(p);
        (0..self.cells.len()).filter(|&i| self.rects[i].overlaps(&r) && self.polygons[i].contains(p)).collect()
    }

    /// First cell (by index) whose closure contains `p`.
    pub fn locate(&self, p: &Point2) -> Option<usize> {
        let r = Rect::point(p);
        (0..self.cells.len()).find(|&i| self.rects[i].overlaps(&r) && self.polygons[i].contains(p))
    }

    /// Applies `f` to every vertex, reversing cell orientation when asked.
    pub(crate) fn map_vertices(&self, f: impl Fn(&Point2) -> Point2, reverse: bool, domain: ConvexPolygon) -> Result<Mesh, PwaError> {
        let vertices: Vec<Point2> = self.vertices.iter().map(f).collect();
        let cells: Vec<Vec<usize>> =
            if reverse { self.cells.iter().map(|c| c.iter().rev().copied().collect()).collect() } else { self.cells.clone() };
        Mesh::new(vertices, cells, domain)
    }

    /// Pairs of cells whose intersection has positive area; empty for a
    /// valid mesh. Exhaustive over bounding-box candidates.
    pub fn overlapping_pairs(&self) -> Vec<(usize, usize)> {
        let index = super::BoxIndex::new(self.rects.clone());
        let mut out = Vec::new();
        for i in 0..self.cells.len() {
            for j in index.query(&self.rects[i]) {
                if j > i && self.polygons[i].clip(&self.polygons[j]).is_some() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Subdivision built by trusted constructors that already guarantee the
    /// invariants; still checked in debug builds.
    pub(crate) fn from_trusted(vertices: Vec<Point2>, cells: Vec<Vec<usize>>, domain: ConvexPolygon) -> Result<Self, PwaError> {
        if cfg!(debug_assertions) {
            return Mesh::new(vertices, cells, domain);
        }
        let mut polygons = Vec::with_capacity(cells.len());
        for (ci, cell) in cells.iter().enumerate() {
            polygons.push(cell_polygon(&vertices, cell).map_err(|m| invalid(format!("cell {ci}: {m}")))?);
        }
        Ok(Mesh::assemble(vertices, cells, domain, polygons))
    }
}

pub(crate) fn cell_edges(cell: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let n = cell.len();
    (0..n).map(move |i| (cell[i], cell[(i + 1) % n]))
}

/// Geometry of a cell: convex, counterclockwise, straight angles allowed
/// only when the walk keeps going forward.
fn cell_polygon(vertices: &[Point2], cell: &[usize]) -> Result<ConvexPolygon, String> {
    let n = cell.len();
    if n < 3 {
        return Err(format!("{n} vertices"));
    }
    if let Some(&bad) = cell.iter().find(|&&i| i >= vertices.len()) {
        return Err(format!("vertex index {bad} out of range"));
    }
    let mut sorted = cell.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != n {
        return Err("repeated vertex".into());
    }
    let pts: Vec<Point2> = cell.iter().map(|&i| vertices[i].clone()).collect();
    for i in 0..n {
        let (a, b, c) = (&pts[i], &pts[(i + 1) % n], &pts[(i + 2) % n]);
        let o = orient(a, b, c);
        if o.is_negative() {
            return Err(format!("clockwise turn at {b:?}"));
        }
        if o.is_zero() {
            let (d1, d2) = (b.sub(a), c.sub(b));
            if !(&d1.x * &d2.x + &d1.y * &d2.y).is_positive() {
                return Err(format!("backtracking at {b:?}"));
            }
        }
    }
    if winding_turns(&pts) != 1 {
        return Err("winds more than once".into());
    }
    ConvexPolygon::new(strip_collinear(&pts)).map_err(|e| e.to_string())
}

/// Red refinement: each triangle is split into four similar triangles
/// through its edge midpoints. Children of cell `c` are cells `4c..4c+4`,
/// corner children first and the middle triangle last.
pub fn red_refine(mesh: &Mesh) -> Result<Mesh, PwaError> {
    if let Some(bad) = mesh.cells.iter().position(|c| c.len() != 3) {
        return Err(PwaError::NotTriangle(bad));
    }
    let mut vertices = mesh.vertices.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(mesh.cells.len() * 2);
    let mut midpoint = |u: usize, v: usize, vertices: &mut Vec<Point2>| -> usize {
        let key = (u.min(v), u.max(v));
        *mid.entry(key).or_insert_with(|| {
            let m = vertices[u].midpoint(&vertices[v]);
            vertices.push(m);
            vertices.len() - 1
        })
    };
    let mut cells = Vec::with_capacity(mesh.cells.len() * 4);
    for cell in &mesh.cells {
        let (a, b, c) = (cell[0], cell[1], cell[2]);
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        cells.push(vec![a, ab, ca]);
        cells.push(vec![ab, b, bc]);
        cells.push(vec![ca, bc, c]);
        cells.push(vec![ab, bc, ca]);
    }
    Mesh::from_trusted(vertices, cells, mesh.domain.clone())
}
