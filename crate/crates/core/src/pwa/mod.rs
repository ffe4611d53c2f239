//! Conforming convex-cell meshes and piecewise-affine maps over them.

mod json;
mod map;
mod mesh;
mod metric;
mod overlay;
mod spatial;
mod validate;

pub use json::{MeshJson, PwaMapJson};
pub use map::PwaMap;
pub use mesh::{red_refine, Mesh};
pub use metric::{metric_d, sup_distance, MetricReport, SupNorm};
pub use overlay::{overlay, overlay_with_sources, Overlay};
pub use validate::{validate_homeomorphism, Check, ValidationReport};

pub(crate) use overlay::conform_cells;
pub(crate) use spatial::BoxIndex;

use crate::exact::{ConvexPolygon, GeomError, Point2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PwaError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("{maps} maps for {cells} cells")]
    MapCountMismatch { maps: usize, cells: usize },
    #[error("cell index {index} is foreign to a mesh with {cells} cells")]
    ForeignCells { index: usize, cells: usize },
    #[error("cell {0} is not a triangle")]
    NotTriangle(usize),
    #[error("domain mismatch")]
    DomainMismatch,
    #[error("point {0:?} outside the domain")]
    OutsideDomain(Point2),
    #[error("not a homeomorphism: {0}")]
    NotHomeomorphism(String),
    #[error("boundary trace is not the identity")]
    BoundaryNotIdentity,
    #[error("outside space X: variation {var} >= M = {bound}")]
    OutsideSpace { var: String, bound: String },
    #[error("json: {0}")]
    Json(String),
}

/// A set of cells of one mesh, e.g. the witness set of a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    indices: Vec<usize>,
    owner_cells: usize,
}

impl CellSet {
    /// Sorts and deduplicates `indices`; every index must be a cell of `mesh`.
    pub fn new(mut indices: Vec<usize>, mesh: &Mesh) -> Result<Self, PwaError> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= mesh.cell_count()) {
            return Err(PwaError::ForeignCells { index: bad, cells: mesh.cell_count() });
        }
        Ok(CellSet { indices, owner_cells: mesh.cell_count() })
    }

    pub fn all(mesh: &Mesh) -> Self {
        CellSet { indices: (0..mesh.cell_count()).collect(), owner_cells: mesh.cell_count() }
    }

    pub fn empty(mesh: &Mesh) -> Self {
        CellSet { indices: Vec::new(), owner_cells: mesh.cell_count() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub(crate) fn check_owner(&self, mesh: &Mesh) -> Result<(), PwaError> {
        if self.owner_cells != mesh.cell_count() {
            let index = self.indices.iter().copied().find(|&i| i >= mesh.cell_count()).unwrap_or(0);
            return Err(PwaError::ForeignCells { index, cells: mesh.cell_count() });
        }
        Ok(())
    }
}

/// Fan triangulation of every cell in `region`; areas are preserved exactly.
pub fn split_to_triangles(mesh: &Mesh, region: &CellSet) -> Result<Vec<ConvexPolygon>, PwaError> {
    region.check_owner(mesh)?;
    Ok(region.indices.iter().flat_map(|&i| mesh.polygon(i).fan_triangles()).collect())
}
