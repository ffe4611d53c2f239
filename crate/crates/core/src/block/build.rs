//! The explicit block, its witness set and exact verification.

use serde::{Deserialize, Serialize};

use super::layout::{strip_stack, Dims};
use super::{identity_failed, BlockError, BlockSpec, CellKind, PeriodicBlock, CELLS_PER_STRIP};
use crate::exact::{ConvexPolygon, Mat2, Rational};
use crate::pwa::{validate_homeomorphism, CellSet, PwaError, PwaMap, PwaMapJson};

/// Largest explicit block built on request (`k = 25` has 3.9M cells).
pub const EXPLICIT_CAP: u128 = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockResult {
    pub spec: BlockSpec,
    pub phi: PwaMap,
    /// The `R′` copies, one per strip.
    pub f: CellSet,
    pub report: BlockReport,
}

/// Every quantity is recomputed from the explicit map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockReport {
    pub k: u32,
    pub n: u64,
    pub energy_phi: Rational,
    pub energy_psi: Rational,
    /// `(1 + 2/k)·𝔼(ψ)`.
    pub energy_bound: Rational,
    pub bound_holds: bool,
    /// `𝔼(φ)` and `𝔼(ψ)` on the `R′ ∪ R″` copies.
    pub rect_energy_phi: Rational,
    pub rect_energy_psi: Rational,
    pub rect_energy_holds: bool,
    /// `max |∇φ|₁ / |A|₁` over `T₂` cells and their mirrors.
    pub t2_max_ratio: Rational,
    pub t2_bound_holds: bool,
    /// Same over `T₃` cells and their mirrors.
    pub t3_max_ratio: Rational,
    pub t3_bound_holds: bool,
    #[serde(rename = "area_F")]
    pub area_f: Rational,
    #[serde(rename = "image_area_F")]
    pub image_area_f: Rational,
    /// Both measures equal their closed forms and `|F| < 1/k`.
    pub measures_hold: bool,
    /// Whether `|φ(F)| ≥ (1 − 1/(2n))(1 − 1/k) det A`.
    /// The construction gives `(1 − 2/n)` instead, so this is expected false.
    pub half_n_bound_holds: bool,
    #[serde(rename = "energy_on_F")]
    pub energy_on_f: Rational,
    /// `(1/2 − 1/k)·𝔼(ψ)`.
    pub concentration_threshold: Rational,
    pub concentration_holds: bool,
}

/// The witness set of an explicit block: cell `10·i` of every strip.
pub fn witness(phi: &PwaMap) -> Result<CellSet, PwaError> {
    CellSet::new((0..phi.mesh().cell_count()).step_by(CELLS_PER_STRIP).collect(), phi.mesh())
}

pub fn build_block(spec: &BlockSpec) -> Result<BlockResult, BlockError> {
    let phi = PeriodicBlock::new(spec.clone())?.materialize(EXPLICIT_CAP)?;
    let f = witness(&phi)?;
    let report = verify_parts(spec, &phi, &f)?;
    Ok(BlockResult { spec: spec.clone(), phi, f, report })
}

pub fn verify_block(result: &BlockResult) -> Result<BlockReport, BlockError> {
    verify_parts(&result.spec, &result.phi, &result.f)
}

fn expected_gradient(spec: &BlockSpec, kind: CellKind) -> Option<Mat2> {
    match kind {
        CellKind::RPrime => Some(spec.a_prime()),
        CellKind::RDouble => Some(spec.r_double_gradient()),
        CellKind::T1 | CellKind::T4 | CellKind::T1m | CellKind::T4m => Some(spec.a.clone()),
        CellKind::T2 => Some(spec.t2_gradient()),
        CellKind::T3 => Some(spec.t3_gradient()),
        CellKind::T2m | CellKind::T3m => None,
    }
}

fn verify_parts(spec: &BlockSpec, phi: &PwaMap, f: &CellSet) -> Result<BlockReport, BlockError> {
    spec.check()?;
    let k = spec.k_rational();
    let mesh = phi.mesh();
    let (vertices, cells) = strip_stack(&Dims::new(spec.k), spec.strips());
    if mesh.vertices() != &vertices[..] || mesh.cells() != &cells[..] || *mesh.domain() != ConvexPolygon::unit_square() {
        return Err(identity_failed("tiling", "mesh is not the strip tiling for this k"));
    }

    let validation = validate_homeomorphism(phi);
    if !validation.is_valid() {
        return Err(identity_failed("homeomorphism", validation.failures.join("; ")));
    }
    let values = phi.vertex_values()?;
    if let Some((u, _)) = mesh.boundary_edges().into_iter().find(|&(u, _)| values[u] != spec.a.apply(&mesh.vertices()[u])) {
        return Err(identity_failed("boundary", format!("vertex {u} is not mapped by A")));
    }
    if *f != witness(phi)? {
        return Err(identity_failed("witness set", "F is not the set of R' copies"));
    }
    for (c, m) in phi.maps().iter().enumerate() {
        if let Some(want) = expected_gradient(spec, CellKind::of(c)) {
            if m.linear != want {
                return Err(identity_failed("gradients", format!("cell {c} ({:?}) has gradient {:?}", CellKind::of(c), m.linear)));
            }
        }
    }

    let norm_a = spec.a.norm_l1();
    let of_kind = |pick: fn(CellKind) -> bool| (0..mesh.cell_count()).filter(move |&c| pick(CellKind::of(c)));

    let rect_energy_phi: Rational = of_kind(CellKind::is_rect).map(|c| phi.cell_energy(c)).sum();
    let rect_energy_psi: Rational = of_kind(CellKind::is_rect).map(|c| mesh.cell_area(c) * &norm_a).sum();
    let rect_energy_holds = rect_energy_phi == rect_energy_psi && rect_energy_phi == spec.rect_energy_formula();
    if !rect_energy_holds {
        return Err(identity_failed("rectangle energy", format!("{rect_energy_phi} vs {rect_energy_psi} vs {}", spec.rect_energy_formula())));
    }

    let max_ratio = |pick: fn(CellKind) -> bool| -> Rational {
        of_kind(pick).map(|c| phi.map(c).linear.norm_l1()).max().unwrap_or_else(Rational::zero) / &norm_a
    };
    let t2_max_ratio = max_ratio(CellKind::is_t2);
    let t2_bound_holds = t2_max_ratio <= k;
    if !t2_bound_holds {
        return Err(identity_failed("T2 bound", format!("ratio {t2_max_ratio} > {k}")));
    }
    let t3_max_ratio = max_ratio(CellKind::is_t3);
    let t3_bound_holds = t3_max_ratio <= Rational::from(2);
    if !t3_bound_holds {
        return Err(identity_failed("T3 bound", format!("ratio {t3_max_ratio} > 2")));
    }

    let energy_phi = phi.energy();
    let energy_psi: Rational = (0..mesh.cell_count()).map(|c| mesh.cell_area(c)).sum::<Rational>() * &norm_a;
    let energy_bound = (Rational::one() + Rational::from(2) / &k) * &energy_psi;
    let bound_holds = energy_phi <= energy_bound;
    if !bound_holds {
        return Err(identity_failed("energy bound", format!("{energy_phi} > {energy_bound}")));
    }

    let area_f = phi.area_of(f)?;
    let image_area_f = phi.image_area_of(f)?;
    let measures_hold =
        area_f == spec.witness_area_formula() && image_area_f == spec.witness_image_formula() && area_f < k.recip().expect("k > 0");
    if !measures_hold {
        return Err(identity_failed("witness measures", format!("|F| = {area_f}, |phi(F)| = {image_area_f}")));
    }
    let n = Rational::from(spec.n());
    let weak =
        (Rational::one() - (Rational::from(2) * &n).recip().expect("n > 0")) * (Rational::one() - k.recip().expect("k > 0")) * spec.a.det();
    let half_n_bound_holds = image_area_f >= weak;

    let energy_on_f = phi.energy_on(f)?;
    let concentration_threshold = (Rational::new(1, 2) - k.recip().expect("k > 0")) * &energy_psi;
    let concentration_holds = energy_on_f > concentration_threshold;

    Ok(BlockReport {
        k: spec.k,
        n: spec.n(),
        energy_phi,
        energy_psi,
        energy_bound,
        bound_holds,
        rect_energy_phi,
        rect_energy_psi,
        rect_energy_holds,
        t2_max_ratio,
        t2_bound_holds,
        t3_max_ratio,
        t3_bound_holds,
        area_f,
        image_area_f,
        measures_hold,
        half_n_bound_holds,
        energy_on_f,
        concentration_threshold,
        concentration_holds,
    })
}

/// Outcome of the concentration inequality `𝔼(φ on F) > (1/2 − 1/k)·𝔼(ψ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub holds: bool,
    /// Whether the coordinate-swapped construction was used.
    pub switched: bool,
    pub energy_on_f: Rational,
    pub threshold: Rational,
    /// `threshold − energy_on_f` when the inequality fails, else zero.
    pub deficit: Rational,
    /// The map and witness the inequality was checked on.
    #[serde(skip)]
    pub phi: Option<(PwaMap, CellSet)>,
}

/// Checks the concentration inequality. When the first column of `A`
/// dominates, the block is built for `S A S` and conjugated by the swap
/// `S(x, y) = (y, x)` on both sides, which turns its vertical strips into
/// horizontal ones and keeps the boundary values `A`.
pub fn check_concentration(spec: &BlockSpec) -> Result<Concentration, BlockError> {
    spec.check()?;
    let a = &spec.a;
    let switched = a.b.abs() + a.d.abs() < a.a.abs() + a.c.abs();
    let (phi, f) = if switched {
        let swap = crate::exact::AffineMap2::linear(Mat2::swap());
        let inner = BlockSpec::new(Mat2::swap().mul(a).mul(&Mat2::swap()), spec.k)?;
        let base = PeriodicBlock::new(inner)?.materialize(EXPLICIT_CAP)?;
        let f = witness(&base)?;
        let phi = base.conjugate(&swap, &swap)?;
        let f = CellSet::new(f.indices().to_vec(), phi.mesh())?;
        (phi, f)
    } else {
        let phi = PeriodicBlock::new(spec.clone())?.materialize(EXPLICIT_CAP)?;
        let f = witness(&phi)?;
        (phi, f)
    };
    let energy_on_f = phi.energy_on(&f)?;
    let threshold = (Rational::new(1, 2) - spec.k_rational().recip().expect("k > 0")) * phi.mesh().domain().area() * a.norm_l1();
    let holds = energy_on_f > threshold;
    let deficit = if holds { Rational::zero() } else { &threshold - &energy_on_f };
    Ok(Concentration { holds, switched, energy_on_f, threshold, deficit, phi: Some((phi, f)) })
}

/// `{"spec": …, "phi": PwaMap-JSON, "F": [indices], "report": {…}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockResultJson {
    pub spec: BlockSpec,
    pub phi: PwaMapJson,
    #[serde(rename = "F")]
    pub f: Vec<usize>,
    pub report: BlockReport,
}

impl BlockResult {
    pub fn to_json(&self) -> String {
        let j = BlockResultJson {
            spec: self.spec.clone(),
            phi: PwaMapJson::from(&self.phi),
            f: self.f.indices().to_vec(),
            report: self.report.clone(),
        };
        serde_json::to_string(&j).expect("serializable")
    }

    /// Parses a stored result; the stored report is kept as is, so callers
    /// compare it with a fresh [`verify_block`].
    pub fn from_json(s: &str) -> Result<BlockResult, BlockError> {
        let j: BlockResultJson = serde_json::from_str(s).map_err(|e| PwaError::Json(e.to_string()))?;
        let phi = j.phi.into_map()?;
        let f = CellSet::new(j.f, phi.mesh())?;
        Ok(BlockResult { spec: j.spec, phi, f, report: j.report })
    }
}
