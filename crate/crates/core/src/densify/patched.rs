//! A base map with blocks substituted into packed squares.
//!
//! Every packed square of a base cell carries the same block (scaled to the
//! square and placed so that it agrees with the cell's affine map on the
//! square boundary). Blocks are stored once per distinct linear part, so
//! energies, witness measures and sup-distances to the base map are sums
//! and maxima over a handful of templates and per-cell square counts.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pack::{count_squares, side_of, SquarePacking};
use super::DensifyError;
use crate::block::{BlockSpec, PeriodicBlock, CELLS_PER_STRIP};
use crate::exact::{AffineMap2, ConvexPolygon, Mat2, Point2, Rational};
use crate::pwa::{conform_cells, validate_homeomorphism, CellSet, Mesh, PwaError, PwaMap, PwaMapJson};

/// The block used in every square of cells with linear part `linear`.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub linear: Mat2,
    pub block: Arc<PeriodicBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub cell: usize,
    pub template: usize,
    pub packing: SquarePacking,
}

#[derive(Debug, Clone)]
pub struct PatchedMap {
    base: PwaMap,
    templates: Vec<Template>,
    patches: Vec<Patch>,
    patch_of: Vec<Option<usize>>,
    base_inverse: OnceLock<PwaMap>,
}

impl PartialEq for PatchedMap {
    fn eq(&self, o: &Self) -> bool {
        self.base == o.base && self.templates == o.templates && self.patches == o.patches
    }
}

fn invalid(msg: impl Into<String>) -> DensifyError {
    DensifyError::Postcondition(msg.into())
}

impl PatchedMap {
    pub fn new(base: PwaMap, templates: Vec<Template>, patches: Vec<Patch>) -> Result<Self, DensifyError> {
        let mut patch_of = vec![None; base.mesh().cell_count()];
        for (pi, p) in patches.iter().enumerate() {
            let slot = patch_of.get_mut(p.cell).ok_or_else(|| invalid(format!("patch {pi} names cell {}", p.cell)))?;
            if slot.replace(pi).is_some() {
                return Err(invalid(format!("cell {} patched twice", p.cell)));
            }
            let t = templates.get(p.template).ok_or_else(|| invalid(format!("patch {pi} names template {}", p.template)))?;
            if t.linear != base.map(p.cell).linear {
                return Err(invalid(format!("template {} does not match cell {}", p.template, p.cell)));
            }
        }
        Ok(PatchedMap { base, templates, patches, patch_of, base_inverse: OnceLock::new() })
    }

    pub fn base(&self) -> &PwaMap {
        &self.base
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn square_count(&self) -> u128 {
        self.patches.iter().map(|p| u128::from(p.packing.count)).sum()
    }

    /// Cells of the explicit map, not counting the pieces the square
    /// boundaries cut out of base cells.
    pub fn block_cell_count(&self) -> u128 {
        self.patches.iter().map(|p| u128::from(p.packing.count) * self.templates[p.template].block.cell_count()).sum()
    }

    fn sum_over_patches(&self, per_unit: impl Fn(&Patch, &Template) -> Rational + Sync) -> Rational {
        self.patches.par_iter().map(|p| &p.packing.covered * per_unit(p, &self.templates[p.template])).reduce(Rational::zero, |a, b| a + b)
    }

    /// `Var(g) − Σ |Q|·|L|₁ + Σ |Q|·𝔼(block)`.
    pub fn energy(&self) -> Rational {
        self.base.energy() - self.sum_over_patches(|_, t| t.linear.norm_l1()) + self.sum_over_patches(|_, t| t.block.energy())
    }

    /// Energy summed over the two parts separately: the base map off the
    /// squares and the blocks on them.
    pub fn energy_by_parts(&self) -> (Rational, Rational) {
        let outside: Rational = (0..self.base.mesh().cell_count())
            .into_par_iter()
            .map(|c| {
                let covered = self.patch_of[c].map(|p| self.patches[p].packing.covered.clone()).unwrap_or_else(Rational::zero);
                (self.base.mesh().cell_area(c) - covered) * self.base.map(c).linear.norm_l1()
            })
            .reduce(Rational::zero, |a, b| a + b);
        (outside, self.sum_over_patches(|_, t| t.block.energy()))
    }

    /// `|F|`, the `R′` strips of every block.
    pub fn witness_area(&self) -> Rational {
        self.sum_over_patches(|_, t| t.block.witness_area())
    }

    pub fn witness_image_area(&self) -> Rational {
        self.sum_over_patches(|_, t| t.block.witness_image_area())
    }

    /// Total area of the packed squares.
    pub fn covered_area(&self) -> Rational {
        self.sum_over_patches(|_, _| Rational::one())
    }

    fn max_over_patches(&self, per_unit: impl Fn(&PeriodicBlock) -> Rational + Sync) -> Rational {
        let per_template: Vec<Rational> = self.templates.iter().map(|t| per_unit(&t.block)).collect();
        self.patches
            .iter()
            .filter(|p| p.packing.count > 0)
            .map(|p| &per_template[p.template] * &p.packing.side * &p.packing.side)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// `‖f − g‖∞²`. The map refines the base mesh, so the overlay of the two
    /// meshes is the map's own mesh and `f − g` peaks at one of its
    /// vertices; off the squares it vanishes, and on a square of side `s`
    /// it is `s` times the block's deviation from its linear part.
    pub fn sup_forward_sq(&self) -> Rational {
        self.max_over_patches(PeriodicBlock::deviation_sq)
    }

    /// `‖f⁻¹ − g⁻¹‖∞²`: on the image of a square, `f⁻¹ − g⁻¹ = −L⁻¹(f − g)∘f⁻¹`.
    pub fn sup_inverse_sq(&self) -> Rational {
        self.max_over_patches(PeriodicBlock::inverse_deviation_sq)
    }

    /// Checks that the composite is a homeomorphism of the unit square that
    /// is the identity on the boundary: the base map is one; every template
    /// strip is a homeomorphism pinned to its linear part; every patch uses
    /// the template of its cell; and the recorded squares lie in their cell,
    /// one run per grid row, as many as recorded.
    pub fn validate(&self) -> Result<(), DensifyError> {
        if *self.base.mesh().domain() != ConvexPolygon::unit_square() {
            return Err(invalid("base domain is not the unit square"));
        }
        let report = validate_homeomorphism(&self.base);
        if !report.is_valid() {
            return Err(invalid(format!("base map: {}", report.failures.join("; "))));
        }
        if !self.base.is_identity_on_boundary()? {
            return Err(invalid("base map is not the identity on the boundary"));
        }
        for (ti, t) in self.templates.iter().enumerate() {
            t.block.validate_strip().map_err(|e| invalid(format!("template {ti}: {e}")))?;
            if t.block.spec().a != t.linear {
                return Err(invalid(format!("template {ti} is built for another matrix")));
            }
        }
        self.patches.par_iter().enumerate().try_for_each(|(pi, p)| self.check_patch(pi, p))
    }

    fn check_patch(&self, pi: usize, p: &Patch) -> Result<(), DensifyError> {
        let poly = self.base.mesh().polygon(p.cell);
        if p.packing.side != side_of(p.packing.q)
            || p.packing.covered != Rational::from(p.packing.count) * &p.packing.side * &p.packing.side
        {
            return Err(invalid(format!("patch {pi}: inconsistent packing record")));
        }
        let (lo, hi) = poly.bbox();
        let s = &p.packing.side;
        let mut j = (&lo.y / s).floor();
        let j_end = (&hi.y / s).ceil();
        let mut total = BigInt::from(0);
        while j < j_end {
            if let Some((a, b)) = p.packing.row(poly, &j) {
                for i in [&a, &(&b - 1)] {
                    let c = p.packing.corner(i, &j);
                    let corners = [
                        c.clone(),
                        c.add(&Point2::new(s.clone(), Rational::zero())),
                        c.add(&Point2::new(s.clone(), s.clone())),
                        c.add(&Point2::new(Rational::zero(), s.clone())),
                    ];
                    if !corners.iter().all(|v| poly.contains(v)) {
                        return Err(invalid(format!("patch {pi}: square ({i}, {j}) leaves cell {}", p.cell)));
                    }
                }
                total += b - a;
            }
            j += 1;
        }
        if total != BigInt::from(p.packing.count) || count_squares(poly, p.packing.q) != total {
            return Err(invalid(format!("patch {pi}: {total} squares found, {} recorded", p.packing.count)));
        }
        Ok(())
    }

    fn base_inverse(&self) -> Result<&PwaMap, PwaError> {
        if let Some(inv) = self.base_inverse.get() {
            return Ok(inv);
        }
        let inv = self.base.inverse()?;
        Ok(self.base_inverse.get_or_init(|| inv))
    }

    pub fn evaluate(&self, p: &Point2) -> Result<Point2, PwaError> {
        let c = self.base.mesh().locate(p).ok_or_else(|| PwaError::OutsideDomain(p.clone()))?;
        let g = self.base.map(c);
        if let Some(pi) = self.patch_of[c] {
            let patch = &self.patches[pi];
            if let Some((i, j)) = patch.packing.locate(self.base.mesh().polygon(c), p) {
                let s = &patch.packing.side;
                let corner = patch.packing.corner(&i, &j);
                let u = p.sub(&corner).scale(&s.recip().expect("positive side"));
                let v = self.templates[patch.template].block.evaluate(&u)?;
                return Ok(v.scale(s).add(&g.apply(&corner)));
            }
        }
        Ok(g.apply(p))
    }

    pub fn inverse_evaluate(&self, y: &Point2) -> Result<Point2, PwaError> {
        let inv = self.base_inverse()?;
        let c = inv.mesh().locate(y).ok_or_else(|| PwaError::OutsideDomain(y.clone()))?;
        let x = inv.map(c).apply(y);
        if let Some(pi) = self.patch_of[c] {
            let patch = &self.patches[pi];
            if let Some((i, j)) = patch.packing.locate(self.base.mesh().polygon(c), &x) {
                let s = &patch.packing.side;
                let corner = patch.packing.corner(&i, &j);
                let u = y.sub(&self.base.map(c).apply(&corner)).scale(&s.recip().expect("positive side"));
                let w = self.templates[patch.template].block.inverse_evaluate(&u)?;
                return Ok(corner.add(&w.scale(s)));
            }
        }
        Ok(x)
    }

    /// The explicit map and witness cells. Base cells with squares are cut
    /// along the grid; cut pieces keep the base map, packed squares receive
    /// the scaled block, and edges are then split at every vertex lying on
    /// them. Refused when the blocks alone exceed `cap` cells.
    pub fn materialize(&self, cap: u128) -> Result<(PwaMap, CellSet), DensifyError> {
        let cells_needed = self.block_cell_count() + self.base.mesh().cell_count() as u128;
        if cells_needed > cap {
            return Err(DensifyError::TooLarge { cells: cells_needed, cap });
        }
        let units: Vec<PwaMap> = self.templates.iter().map(|t| t.block.materialize(cap)).collect::<Result<_, _>>()?;
        let mut ids: HashMap<Point2, usize> = HashMap::new();
        let mut vertices: Vec<Point2> = Vec::new();
        let mut cells: Vec<Vec<usize>> = Vec::new();
        let mut maps: Vec<AffineMap2> = Vec::new();
        let mut witness: Vec<usize> = Vec::new();
        let mut add_cell = |pts: &[Point2], map: AffineMap2, cells: &mut Vec<Vec<usize>>| {
            let cell = pts
                .iter()
                .map(|p| {
                    *ids.entry(p.clone()).or_insert_with(|| {
                        vertices.push(p.clone());
                        vertices.len() - 1
                    })
                })
                .collect();
            cells.push(cell);
            maps.push(map);
        };
        let mesh = self.base.mesh();
        for c in 0..mesh.cell_count() {
            let g = self.base.map(c);
            let Some(pi) = self.patch_of[c] else {
                let pts: Vec<Point2> = mesh.cell(c).iter().map(|&v| mesh.vertices()[v].clone()).collect();
                add_cell(&pts, g.clone(), &mut cells);
                continue;
            };
            let patch = &self.patches[pi];
            let poly = mesh.polygon(c);
            let s = &patch.packing.side;
            let (lo, hi) = poly.bbox();
            let (i0, i1) = ((&lo.x / s).floor(), (&hi.x / s).ceil());
            let mut j = (&lo.y / s).floor();
            let j1 = (&hi.y / s).ceil();
            while j < j1 {
                let run = patch.packing.row(poly, &j);
                let mut i = i0.clone();
                while i < i1 {
                    let corner = patch.packing.corner(&i, &j);
                    let far = corner.add(&Point2::new(s.clone(), s.clone()));
                    let packed = run.as_ref().is_some_and(|(a, b)| *a <= i && i < *b);
                    if packed {
                        let unit = &units[patch.template];
                        let place = AffineMap2::scale_translate(s, corner.clone());
                        let pre = place.invert().expect("positive side");
                        let post = AffineMap2::scale_translate(s, g.apply(&corner));
                        for (bc, cell) in unit.mesh().cells().iter().enumerate() {
                            let pts: Vec<Point2> = cell.iter().map(|&v| place.apply(&unit.mesh().vertices()[v])).collect();
                            if bc % CELLS_PER_STRIP == 0 {
                                witness.push(cells.len());
                            }
                            add_cell(&pts, post.compose(&unit.map(bc).compose(&pre)), &mut cells);
                        }
                    } else if let Some(piece) = poly.clip(&ConvexPolygon::rect(&corner.x, &corner.y, &far.x, &far.y).expect("square")) {
                        add_cell(piece.vertices(), g.clone(), &mut cells);
                    }
                    i += 1;
                }
                j += 1;
            }
        }
        let cells = conform_cells(&vertices, cells);
        let mesh = Mesh::new(vertices, cells, mesh.domain().clone())?;
        let f = PwaMap::new(mesh, maps)?;
        let w = CellSet::new(witness, f.mesh())?;
        Ok((f, w))
    }

    pub fn to_json_value(&self) -> PatchedMapJson {
        PatchedMapJson {
            base: PwaMapJson::from(&self.base),
            templates: self.templates.iter().map(|t| TemplateJson { linear: t.linear.clone(), k: t.block.spec().k }).collect(),
            patches: self
                .patches
                .iter()
                .map(|p| PatchJson { cell: p.cell, template: p.template, q: p.packing.q, count: p.packing.count })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateJson {
    pub linear: Mat2,
    pub k: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchJson {
    pub cell: usize,
    pub template: usize,
    pub q: u32,
    pub count: u64,
}

/// `{"base": PwaMap-JSON, "templates": [{"linear", "k"}], "patches": [{"cell", "template", "q", "count"}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchedMapJson {
    pub base: PwaMapJson,
    pub templates: Vec<TemplateJson>,
    pub patches: Vec<PatchJson>,
}

impl PatchedMapJson {
    /// Rebuilds the composite; square counts are recomputed and must match.
    pub fn into_patched(self) -> Result<PatchedMap, DensifyError> {
        let base = self.base.into_map()?;
        let templates = self
            .templates
            .into_iter()
            .map(|t| {
                let block = PeriodicBlock::new(BlockSpec::new(t.linear.clone(), t.k)?)?;
                Ok(Template { linear: t.linear, block: Arc::new(block) })
            })
            .collect::<Result<Vec<_>, DensifyError>>()?;
        let patches = self
            .patches
            .into_iter()
            .map(|p| {
                if p.cell >= base.mesh().cell_count() {
                    return Err(DensifyError::Input(format!("patch names cell {}", p.cell)));
                }
                let packing = SquarePacking::at_level(base.mesh().polygon(p.cell), p.q);
                if packing.count != p.count {
                    return Err(DensifyError::Input(format!(
                        "cell {}: {} squares at level {}, {} recorded",
                        p.cell, packing.count, p.q, p.count
                    )));
                }
                Ok(Patch { cell: p.cell, template: p.template, packing })
            })
            .collect::<Result<Vec<_>, _>>()?;
        PatchedMap::new(base, templates, patches).map_err(|e| match e {
            DensifyError::Postcondition(m) => DensifyError::Input(m),
            e => e,
        })
    }
}
