use rayon::prelude::*;

use super::mesh::Mesh;
use super::{CellSet, PwaError};
use crate::exact::{AffineMap2, ConvexPolygon, Point2, Rational};

/// A mesh with one affine map per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PwaMap {
    mesh: Mesh,
    maps: Vec<AffineMap2>,
}

impl PwaMap {
    pub fn new(mesh: Mesh, maps: Vec<AffineMap2>) -> Result<Self, PwaError> {
        if maps.len() != mesh.cell_count() {
            return Err(PwaError::MapCountMismatch { maps: maps.len(), cells: mesh.cell_count() });
        }
        Ok(PwaMap { mesh, maps })
    }

    /// The identity on `mesh`.
    pub fn identity(mesh: Mesh) -> Self {
        let maps = vec![AffineMap2::identity(); mesh.cell_count()];
        PwaMap { mesh, maps }
    }

    /// A single affine map on a one-cell mesh of `domain`.
    pub fn single_cell(domain: ConvexPolygon, map: AffineMap2) -> Self {
        let vertices = domain.vertices().to_vec();
        let cell = (0..vertices.len()).collect();
        let mesh = Mesh::new(vertices, vec![cell], domain).expect("a convex polygon is a one-cell mesh");
        PwaMap { mesh, maps: vec![map] }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn maps(&self) -> &[AffineMap2] {
        &self.maps
    }

    pub fn map(&self, cell: usize) -> &AffineMap2 {
        &self.maps[cell]
    }

    pub fn into_parts(self) -> (Mesh, Vec<AffineMap2>) {
        (self.mesh, self.maps)
    }

    /// `Σ area(cell) · |∇f|₁`, which equals the variation of a piecewise
    /// affine map.
    pub fn energy(&self) -> Rational {
        (0..self.maps.len()).into_par_iter().map(|i| self.cell_energy(i)).reduce(Rational::zero, |a, b| a + b)
    }

    pub fn cell_energy(&self, i: usize) -> Rational {
        self.mesh.cell_area(i) * self.maps[i].linear.norm_l1()
    }

    pub fn energy_on(&self, region: &CellSet) -> Result<Rational, PwaError> {
        region.check_owner(&self.mesh)?;
        Ok(region.indices().iter().map(|&i| self.cell_energy(i)).sum())
    }

    pub fn area_of(&self, region: &CellSet) -> Result<Rational, PwaError> {
        region.check_owner(&self.mesh)?;
        Ok(region.indices().iter().map(|&i| self.mesh.cell_area(i)).sum())
    }

    /// Measure of the image; cells of a homeomorphism have disjoint images.
    pub fn image_area_of(&self, region: &CellSet) -> Result<Rational, PwaError> {
        region.check_owner(&self.mesh)?;
        Ok(region.indices().iter().map(|&i| self.mesh.cell_area(i) * self.maps[i].linear.det()).sum())
    }

    pub fn evaluate(&self, p: &Point2) -> Result<Point2, PwaError> {
        let cell = self.mesh.locate(p).ok_or_else(|| PwaError::OutsideDomain(p.clone()))?;
        Ok(self.maps[cell].apply(p))
    }

    /// Image of every mesh vertex; fails if incident cells disagree.
    pub fn vertex_values(&self) -> Result<Vec<Point2>, PwaError> {
        let mut values: Vec<Option<Point2>> = vec![None; self.mesh.vertices().len()];
        for (ci, cell) in self.mesh.cells().iter().enumerate() {
            for &v in cell {
                let img = self.maps[ci].apply(&self.mesh.vertices()[v]);
                match &values[v] {
                    None => values[v] = Some(img),
                    Some(prev) if *prev == img => {}
                    Some(_) => return Err(PwaError::NotHomeomorphism(format!("discontinuous at vertex {v} (cell {ci})"))),
                }
            }
        }
        values.into_iter().enumerate().map(|(i, v)| v.ok_or_else(|| PwaError::InvalidMesh(format!("vertex {i} is in no cell")))).collect()
    }

    /// The inverse homeomorphism over the image mesh.
    pub fn inverse(&self) -> Result<PwaMap, PwaError> {
        let report = super::validate_homeomorphism(self);
        let image_domain = match (report.is_valid(), report.image_domain) {
            (true, Some(d)) => d,
            _ => return Err(PwaError::NotHomeomorphism(report.failures.join("; "))),
        };
        let values = self.vertex_values()?;
        let mesh = Mesh::from_trusted(values, self.mesh.cells().to_vec(), image_domain)?;
        let maps = self.maps.iter().map(|m| m.invert()).collect::<Result<Vec<_>, _>>()?;
        PwaMap::new(mesh, maps)
    }

    /// `post ∘ f ∘ pre` on the mesh pulled back through `pre`.
    pub fn conjugate(&self, pre: &AffineMap2, post: &AffineMap2) -> Result<PwaMap, PwaError> {
        let pre_inv = pre.invert()?;
        post.invert()?;
        let reverse = pre.linear.det().is_negative();
        let domain = self.mesh.domain().map(&pre_inv)?;
        let mesh = self.mesh.map_vertices(|p| pre_inv.apply(p), reverse, domain)?;
        let maps = self.maps.iter().map(|m| post.compose(&m.compose(pre))).collect();
        PwaMap::new(mesh, maps)
    }

    /// True when every boundary vertex is fixed, i.e. `f|∂ = Id`.
    pub fn is_identity_on_boundary(&self) -> Result<bool, PwaError> {
        let values = self.vertex_values()?;
        Ok(self.mesh.boundary_edges().iter().all(|&(u, _)| values[u] == self.mesh.vertices()[u]))
    }

    /// Image polygon of one cell.
    pub fn image_polygon(&self, cell: usize) -> Result<ConvexPolygon, PwaError> {
        Ok(self.mesh.polygon(cell).map(&self.maps[cell])?)
    }

    /// Re-expresses the map over a mesh refining this one, given the parent
    /// of every new cell.
    pub fn refined(&self, mesh: Mesh, parent: impl Fn(usize) -> usize) -> Result<PwaMap, PwaError> {
        let maps = (0..mesh.cell_count()).map(|i| self.maps[parent(i)].clone()).collect();
        PwaMap::new(mesh, maps)
    }
}
