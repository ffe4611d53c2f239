use std::collections::HashMap;

use super::mesh::cell_edges;
use super::PwaMap;
use crate::exact::{orient, strip_collinear, winding_turns, ConvexPolygon, Point2};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Outcome of [`validate_homeomorphism`], one entry per condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// All failure messages, prefixed by the check name.
    pub failures: Vec<String>,
    /// Image of the domain, when the boundary trace is a convex curve.
    pub image_domain: Option<ConvexPolygon>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const MAX_LISTED: usize = 16;

fn check(name: &'static str, failures: Vec<String>) -> Check {
    Check { name, passed: failures.is_empty(), failures }
}

/// Certifies an orientation-preserving homeomorphism onto a convex image:
/// positive determinants, agreement of neighbouring cells on shared edges,
/// and a boundary trace that runs once, counterclockwise, around a convex
/// curve. Local injectivity plus a degree-one boundary map give global
/// bijectivity.
pub fn validate_homeomorphism(f: &PwaMap) -> ValidationReport {
    let mesh = f.mesh();
    let mut orientation = Vec::new();
    for (i, m) in f.maps().iter().enumerate() {
        if !m.linear.det().is_positive() {
            orientation.push(format!("cell {i}: det = {}", m.linear.det()));
            if orientation.len() >= MAX_LISTED {
                break;
            }
        }
    }

    // continuity: the two cells on each interior edge agree at its endpoints
    let mut owner: HashMap<(usize, usize), usize> = HashMap::with_capacity(mesh.cell_count() * 4);
    for (ci, cell) in mesh.cells().iter().enumerate() {
        for e in cell_edges(cell) {
            owner.insert(e, ci);
        }
    }
    let mut continuity = Vec::new();
    let mut edges: Vec<(&(usize, usize), &usize)> = owner.iter().filter(|((u, v), _)| u < v).collect();
    edges.sort_unstable();
    for (&(u, v), &c1) in edges {
        if let Some(&c2) = owner.get(&(v, u)) {
            for w in [u, v] {
                let p = &mesh.vertices()[w];
                if f.map(c1).apply(p) != f.map(c2).apply(p) {
                    continuity.push(format!("edge ({u}, {v}) between cells {c1} and {c2}"));
                    break;
                }
            }
        }
        if continuity.len() >= MAX_LISTED {
            break;
        }
    }

    let mut vertex = Vec::new();
    if let Err(e) = f.vertex_values() {
        vertex.push(e.to_string());
    }

    let (boundary, image_domain) = if vertex.is_empty() { boundary_trace(f) } else { (vec!["vertex values undefined".to_string()], None) };

    let checks = vec![
        check("orientation", orientation),
        check("continuity", continuity),
        check("vertex-values", vertex),
        check("boundary", boundary),
    ];
    let failures = checks.iter().flat_map(|c| c.failures.iter().map(move |m| format!("{}: {m}", c.name))).collect();
    ValidationReport { checks, failures, image_domain }
}

fn boundary_trace(f: &PwaMap) -> (Vec<String>, Option<ConvexPolygon>) {
    let cycle = match f.mesh().boundary_cycle() {
        Ok(c) => c,
        Err(e) => return (vec![e.to_string()], None),
    };
    let values = f.vertex_values().expect("checked by caller");
    let imgs: Vec<Point2> = cycle.iter().map(|&v| values[v].clone()).collect();
    let n = imgs.len();
    let mut failures = Vec::new();
    for i in 0..n {
        let (a, b, c) = (&imgs[i], &imgs[(i + 1) % n], &imgs[(i + 2) % n]);
        if a == b {
            failures.push(format!("boundary vertices {} and {} collapse", cycle[i], cycle[(i + 1) % n]));
            continue;
        }
        let o = orient(a, b, c);
        if o.is_negative() {
            failures.push(format!("boundary image turns clockwise at vertex {}", cycle[(i + 1) % n]));
        } else if o.is_zero() {
            let (d1, d2) = (b.sub(a), c.sub(b));
            if !(&d1.x * &d2.x + &d1.y * &d2.y).is_positive() {
                failures.push(format!("boundary image folds back at vertex {}", cycle[(i + 1) % n]));
            }
        }
        if failures.len() >= MAX_LISTED {
            break;
        }
    }
    if failures.is_empty() {
        let turns = winding_turns(&imgs);
        if turns != 1 {
            failures.push(format!("boundary image winds {turns} times"));
        }
    }
    if !failures.is_empty() {
        return (failures, None);
    }
    match ConvexPolygon::new(strip_collinear(&imgs)) {
        Ok(p) => (failures, Some(p)),
        Err(e) => (vec![e.to_string()], None),
    }
}
