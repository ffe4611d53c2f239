//! The density pipeline: from a boundary-identity homeomorphism `g` of the
//! unit square to a nearby map in `A_n`.
//!
//! `g` is triangulated and refined until cells and their images are small,
//! each triangle is packed with dyadic squares up to a `1 − 1/m` fraction of
//! its area, and each square receives a block matching `g` on its boundary.
//! The witness set is the union of the blocks' `R′` strips.

mod mesh_prep;
mod pack;
mod patched;

pub use mesh_prep::{choose_m, refine_for_diameter, triangulate_affine_mesh, M_CAP};
pub use pack::{count_squares, count_squares_brute, floor_sum, pack_squares, SquarePacking};
pub use patched::{Patch, PatchJson, PatchedMap, PatchedMapJson, Template, TemplateJson};

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::{search_block, BlockError, BlockSpec, PeriodicBlock};
use crate::exact::{AffineMap2, ConvexPolygon, Mat2, Point2, Rational};
use crate::pwa::{split_to_triangles, validate_homeomorphism, CellSet, Mesh, MetricReport, PwaError, PwaMap, SupNorm};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DensifyError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("pipeline postcondition violated: {0}")]
    Postcondition(String),
    #[error("{cells} cells exceed the materialization cap of {cap}")]
    TooLarge { cells: u128, cap: u128 },
    #[error(transparent)]
    Pwa(#[from] PwaError),
    #[error(transparent)]
    Block(#[from] BlockError),
}

/// Input of [`densify`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensifySpec {
    pub g: PwaMap,
    pub n: u64,
    pub epsilon: Rational,
    pub bound: Rational,
}

/// Exact bookkeeping of a densify run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "area_F")]
    pub area_f: Rational,
    #[serde(rename = "image_area_F")]
    pub image_area_f: Rational,
    pub var_f: Rational,
    pub var_g: Rational,
    pub sup_forward_sq: Rational,
    pub sup_inverse_sq: Rational,
    pub variation_term: Rational,
    /// `|F| < 1/n` and `|f(F)| > 1 − 1/n`.
    #[serde(rename = "in_A_n")]
    pub in_a_n: bool,
    /// `|Var f − Var g| ≤ Var(g)/m`.
    pub variation_holds: bool,
    /// Each summand of `d(g, f)` under its budget `ε/4`, `ε/4`, `ε/2`.
    pub budgets_hold: bool,
    /// Certified upper bound on `d(g, f)`.
    pub d_bound: Rational,
    pub d_holds: bool,
}

impl Certificate {
    pub fn passes(&self) -> bool {
        self.in_a_n && self.variation_holds && self.budgets_hold && self.d_holds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensifyResult {
    pub f: PatchedMap,
    pub m: u64,
    pub rounds: u32,
    pub n: u64,
    pub epsilon: Rational,
    pub bound: Rational,
    pub certificate: Certificate,
    pub metric: MetricReport,
}

/// Knobs for tests and small demonstrations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DensifyOptions {
    /// Use this block parameter in every square instead of searching. The
    /// result then need not lie in `A_n`, so postconditions are not
    /// enforced; the certificate is still exact.
    pub force_k: Option<u32>,
    /// Use this `m` instead of [`choose_m`].
    pub force_m: Option<u64>,
}

fn check_input(g: &PwaMap, bound: &Rational) -> Result<Rational, DensifyError> {
    if *g.mesh().domain() != ConvexPolygon::unit_square() {
        return Err(DensifyError::Input("g is not defined on the unit square".into()));
    }
    let report = validate_homeomorphism(g);
    if !report.is_valid() {
        return Err(DensifyError::Input(format!("g is not a homeomorphism: {}", report.failures.join("; "))));
    }
    if !g.is_identity_on_boundary()? {
        return Err(DensifyError::Input("g is not the identity on the boundary".into()));
    }
    let var = g.energy();
    if var >= *bound {
        return Err(DensifyError::Input(format!("Var(g) = {var} is not below M = {bound}")));
    }
    Ok(var)
}

pub fn densify(spec: &DensifySpec) -> Result<DensifyResult, DensifyError> {
    densify_with(spec, &DensifyOptions::default())
}

pub fn densify_with(spec: &DensifySpec, opts: &DensifyOptions) -> Result<DensifyResult, DensifyError> {
    if spec.n == 0 {
        return Err(DensifyError::Input("n must be positive".into()));
    }
    if !spec.epsilon.is_positive() {
        return Err(DensifyError::Input("epsilon must be positive".into()));
    }
    if spec.bound <= Rational::from(2) {
        return Err(DensifyError::Input(format!("M = {} must exceed 2", spec.bound)));
    }
    let var_g = check_input(&spec.g, &spec.bound)?;
    let tri = triangulate_affine_mesh(&spec.g)?;
    let (base, rounds) = refine_for_diameter(&tri, &spec.epsilon)?;
    let m = match opts.force_m {
        Some(m) => m,
        None => choose_m(&var_g, &var_g, &spec.epsilon, &spec.bound, spec.n)?,
    };

    let mesh = base.mesh();
    let packings: Vec<SquarePacking> = (0..mesh.cell_count()).into_par_iter().map(|c| pack_squares(mesh.polygon(c), m)).collect();

    let mut template_of: HashMap<Mat2, usize> = HashMap::new();
    let mut linears: Vec<Mat2> = Vec::new();
    let mut patches = Vec::new();
    for (c, packing) in packings.into_iter().enumerate() {
        if packing.count == 0 {
            continue;
        }
        let linear = base.map(c).linear.clone();
        let t = *template_of.entry(linear.clone()).or_insert_with(|| {
            linears.push(linear);
            linears.len() - 1
        });
        patches.push(Patch { cell: c, template: t, packing });
    }
    let templates = linears
        .into_par_iter()
        .map(|linear| {
            let block = match opts.force_k {
                Some(k) => PeriodicBlock::new(BlockSpec::new(linear.clone(), k)?)?,
                None => Arc::try_unwrap(search_block(&linear, m)?.block).unwrap_or_else(|b| (*b).clone()),
            };
            Ok(Template { linear, block: Arc::new(block) })
        })
        .collect::<Result<Vec<_>, BlockError>>()?;
    let f = PatchedMap::new(base, templates, patches)?;
    f.validate()?;

    let (certificate, metric) = certify_patched(&f, spec.n, m, &spec.epsilon, &spec.bound)?;
    if opts.force_k.is_none() && !certificate.passes() {
        return Err(DensifyError::Postcondition(format!("{certificate:?}")));
    }
    Ok(DensifyResult { f, m, rounds, n: spec.n, epsilon: spec.epsilon.clone(), bound: spec.bound.clone(), certificate, metric })
}

/// Exact certificate of a composite map against its own base map.
pub fn certify_patched(
    f: &PatchedMap,
    n: u64,
    m: u64,
    epsilon: &Rational,
    bound: &Rational,
) -> Result<(Certificate, MetricReport), DensifyError> {
    let var_g = f.base().energy();
    let var_f = f.energy();
    if var_f >= *bound {
        return Err(DensifyError::Postcondition(format!("Var(f) = {var_f} is not below M = {bound}")));
    }
    let area_f = f.witness_area();
    let image_area_f = f.witness_image_area();
    let inv_n = Rational::new(1, n as i64);
    let in_a_n = area_f < inv_n && image_area_f > Rational::one() - &inv_n;
    let variation_holds = (&var_f - &var_g).abs() * Rational::from(m) <= var_g;
    let sup_forward = SupNorm { squared: f.sup_forward_sq() };
    let sup_inverse = SupNorm { squared: f.sup_inverse_sq() };
    let metric = MetricReport::from_parts(sup_forward, sup_inverse, var_g.clone(), var_f.clone(), bound);
    let quarter = epsilon / Rational::from(4);
    let budgets_hold =
        metric.sup_forward.below(&quarter) && metric.sup_inverse.below(&quarter) && metric.variation_term < epsilon / Rational::from(2);
    let d_holds = metric.d_value < *epsilon;
    let certificate = Certificate {
        area_f,
        image_area_f,
        var_f,
        var_g,
        sup_forward_sq: metric.sup_forward.squared.clone(),
        sup_inverse_sq: metric.sup_inverse.squared.clone(),
        variation_term: metric.variation_term.clone(),
        in_a_n,
        variation_holds,
        budgets_hold,
        d_bound: metric.d_value.clone(),
        d_holds,
    };
    Ok((certificate, metric))
}

/// `A_n` membership of an explicit map with witness `E`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnCertificate {
    pub n: u64,
    pub area: Rational,
    pub image_area: Rational,
    #[serde(rename = "in_A_n")]
    pub in_a_n: bool,
    /// `E` as disjoint open triangles.
    #[serde(skip)]
    pub triangles: Vec<ConvexPolygon>,
}

pub fn certify_an(f: &PwaMap, e: &CellSet, n: u64) -> Result<AnCertificate, PwaError> {
    let area = f.area_of(e)?;
    let image_area = f.image_area_of(e)?;
    let inv_n = Rational::new(1, n.max(1) as i64);
    let in_a_n = area < inv_n && image_area > Rational::one() - &inv_n;
    let triangles = split_to_triangles(f.mesh(), e)?;
    Ok(AnCertificate { n, area, image_area, in_a_n, triangles })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoRow {
    pub n: u64,
    pub m: u64,
    pub area: Rational,
    pub image_area: Rational,
    pub holds: bool,
}

pub const DEMO_MAX_DEPTH: u32 = 8;

/// Runs the pipeline from `g` at `n = 2^k` for `k = 1..=depth`.
pub fn nested_demo(g: &PwaMap, bound: &Rational, depth: u32, epsilon: &Rational) -> Result<Vec<DemoRow>, DensifyError> {
    if depth > DEMO_MAX_DEPTH {
        return Err(DensifyError::Input(format!("depth {depth} exceeds {DEMO_MAX_DEPTH}")));
    }
    (1..=depth)
        .map(|k| {
            let n = 1u64 << k;
            let r = densify(&DensifySpec { g: g.clone(), n, epsilon: epsilon.clone(), bound: bound.clone() })?;
            let inv = Rational::new(1, n as i64);
            let c = &r.certificate;
            let holds = c.area_f < inv && c.image_area_f > Rational::one() - &inv;
            Ok(DemoRow { n, m: r.m, area: c.area_f.clone(), image_area: c.image_area_f.clone(), holds })
        })
        .collect()
}

/// The identity on the unit square split along its diagonal.
pub fn identity_map() -> PwaMap {
    let v = vec![Point2::from_ints(0, 0), Point2::from_ints(1, 0), Point2::from_ints(1, 1), Point2::from_ints(0, 1)];
    let mesh = Mesh::new(v, vec![vec![0, 1, 2], vec![0, 2, 3]], ConvexPolygon::unit_square()).expect("valid mesh");
    PwaMap::identity(mesh)
}

/// Eight triangles fanned from the centre, which moves to `(3/5, 2/5)`;
/// corners and edge midpoints stay fixed.
pub fn sample_homeomorphism() -> PwaMap {
    let h = Rational::new(1, 2);
    let (z, o) = (Rational::zero(), Rational::one());
    let ring = vec![
        Point2::new(z.clone(), z.clone()),
        Point2::new(h.clone(), z.clone()),
        Point2::new(o.clone(), z.clone()),
        Point2::new(o.clone(), h.clone()),
        Point2::new(o.clone(), o.clone()),
        Point2::new(h.clone(), o.clone()),
        Point2::new(z.clone(), o.clone()),
        Point2::new(z.clone(), h.clone()),
    ];
    let centre = Point2::new(h.clone(), h.clone());
    let moved = Point2::new(Rational::new(3, 5), Rational::new(2, 5));
    let mut vertices = ring.clone();
    vertices.push(centre.clone());
    let cells: Vec<Vec<usize>> = (0..8).map(|i| vec![i, (i + 1) % 8, 8]).collect();
    let maps = (0..8)
        .map(|i| {
            let (a, b) = (&ring[i], &ring[(i + 1) % 8]);
            AffineMap2::from_three_points([a, b, &centre], [a, b, &moved]).expect("nondegenerate")
        })
        .collect();
    let mesh = Mesh::new(vertices, cells, ConvexPolygon::unit_square()).expect("valid mesh");
    PwaMap::new(mesh, maps).expect("one map per cell")
}

/// `{"f": …, "F": …, "m": int, "certificate": {…}}`. In the compact form
/// `f` is a [`PatchedMapJson`] and `F` lists the strip-local cells forming
/// the witness in every block; in the explicit form both are plain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensifyJson {
    pub f: serde_json::Value,
    #[serde(rename = "F")]
    pub witness: serde_json::Value,
    pub m: u64,
    pub n: u64,
    pub epsilon: Rational,
    #[serde(rename = "M")]
    pub bound: Rational,
    pub certificate: Certificate,
}

impl DensifyResult {
    pub fn to_json_compact(&self) -> String {
        let j = DensifyJson {
            f: serde_json::to_value(self.f.to_json_value()).expect("serializable"),
            witness: serde_json::json!({ "strip_cells": [0] }),
            m: self.m,
            n: self.n,
            epsilon: self.epsilon.clone(),
            bound: self.bound.clone(),
            certificate: self.certificate.clone(),
        };
        serde_json::to_string(&j).expect("serializable")
    }

    pub fn to_json_explicit(&self, cap: u128) -> Result<String, DensifyError> {
        let (f, w) = self.f.materialize(cap)?;
        let j = DensifyJson {
            f: serde_json::to_value(crate::pwa::PwaMapJson::from(&f)).expect("serializable"),
            witness: serde_json::to_value(w.indices()).expect("serializable"),
            m: self.m,
            n: self.n,
            epsilon: self.epsilon.clone(),
            bound: self.bound.clone(),
            certificate: self.certificate.clone(),
        };
        Ok(serde_json::to_string(&j).expect("serializable"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;
    use crate::pwa::metric_d;

    #[test]
    fn sample_is_valid() {
        let g = sample_homeomorphism();
        assert!(validate_homeomorphism(&g).is_valid());
        assert!(g.is_identity_on_boundary().unwrap());
        assert!(g.energy() < q(4, 1));
    }

    #[test]
    fn identity_certificate_fails_membership() {
        let id = identity_map();
        let c = certify_an(&id, &CellSet::new(vec![0], id.mesh()).unwrap(), 2).unwrap();
        assert!(!c.in_a_n);
        let e = certify_an(&id, &CellSet::empty(id.mesh()), 2).unwrap();
        assert!(!e.in_a_n && e.area == Rational::zero());
    }

    #[test]
    fn small_run_matches_materialization() {
        for g in [identity_map(), sample_homeomorphism()] {
            let spec = DensifySpec { g: g.clone(), n: 1, epsilon: q(16, 1), bound: q(4, 1) };
            let r = densify_with(&spec, &DensifyOptions { force_k: Some(3), force_m: Some(3) }).unwrap();
            let (f, w) = r.f.materialize(1 << 20).unwrap();
            assert!(validate_homeomorphism(&f).is_valid());
            assert!(f.is_identity_on_boundary().unwrap());
            assert_eq!(f.energy(), r.certificate.var_f);
            let (outside, inside) = r.f.energy_by_parts();
            assert_eq!(outside + inside, r.certificate.var_f);
            assert_eq!(f.area_of(&w).unwrap(), r.certificate.area_f);
            assert_eq!(f.image_area_of(&w).unwrap(), r.certificate.image_area_f);
            let d = metric_d(&g, &f, &q(4, 1)).unwrap();
            assert!(d.sup_forward.squared.is_positive() && d.variation_term.is_positive());
            assert_eq!(d.sup_forward.squared, r.certificate.sup_forward_sq);
            assert_eq!(d.sup_inverse.squared, r.certificate.sup_inverse_sq);
            for (x, y) in [(q(1, 3), q(1, 5)), (q(7, 9), q(2, 11)), (q(1, 2), q(1, 2)), (q(0, 1), q(1, 1))] {
                let p = Point2::new(x, y);
                let v = r.f.evaluate(&p).unwrap();
                assert_eq!(v, f.evaluate(&p).unwrap());
                assert_eq!(r.f.inverse_evaluate(&v).unwrap(), p);
            }
        }
    }

    #[test]
    fn identity_pipeline_n3() {
        let spec = DensifySpec { g: identity_map(), n: 3, epsilon: q(1, 2), bound: q(4, 1) };
        let r = densify(&spec).unwrap();
        assert!(r.certificate.passes());
        assert!(r.certificate.area_f < q(1, 3));
        let json = r.to_json_compact();
        let back: DensifyJson = serde_json::from_str(&json).unwrap();
        let f: PatchedMapJson = serde_json::from_value(back.f).unwrap();
        assert_eq!(f.into_patched().unwrap(), r.f);
    }

    #[test]
    fn rejects_bad_specs() {
        let id = identity_map();
        let mk = |n, eps: Rational, m: Rational| DensifySpec { g: id.clone(), n, epsilon: eps, bound: m };
        assert!(matches!(densify(&mk(3, q(1, 2), q(2, 1))), Err(DensifyError::Input(_))));
        assert!(matches!(densify(&mk(0, q(1, 2), q(4, 1))), Err(DensifyError::Input(_))));
        assert!(matches!(densify(&mk(3, q(0, 1), q(4, 1))), Err(DensifyError::Input(_))));
        assert!(nested_demo(&id, &q(4, 1), 9, &q(1, 1)).is_err());
        assert!(nested_demo(&id, &q(4, 1), 0, &q(1, 1)).unwrap().is_empty());
    }
}
