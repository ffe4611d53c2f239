use std::collections::HashMap;

use super::mesh::{cell_edges, Mesh};
use super::spatial::BoxIndex;
use super::PwaError;
use crate::exact::{ConvexPolygon, Point2, Rational};

/// Common refinement of two meshes plus, for every cell, the pair of
/// source cells it came from.
#[derive(Debug, Clone)]
pub struct Overlay {
    pub mesh: Mesh,
    pub sources: Vec<(usize, usize)>,
}

/// Positive-area pairwise intersections of cells of `m1` and `m2`, in
/// ascending `(i, j)` order.
pub(crate) fn intersect_cells(m1: &Mesh, m2: &Mesh) -> Vec<(usize, usize, ConvexPolygon)> {
    let index = BoxIndex::new(m2.rects().to_vec());
    let mut out = Vec::new();
    for i in 0..m1.cell_count() {
        for j in index.query(m1.rect(i)) {
            if let Some(p) = m1.polygon(i).clip(m2.polygon(j)) {
                out.push((i, j, p));
            }
        }
    }
    out
}

pub fn overlay_with_sources(m1: &Mesh, m2: &Mesh) -> Result<Overlay, PwaError> {
    if m1.domain() != m2.domain() {
        return Err(PwaError::DomainMismatch);
    }
    let pieces = intersect_cells(m1, m2);
    let mut ids: HashMap<Point2, usize> = HashMap::new();
    let mut vertices: Vec<Point2> = Vec::new();
    let mut cells = Vec::with_capacity(pieces.len());
    let mut sources = Vec::with_capacity(pieces.len());
    for (i, j, poly) in pieces {
        let cell = poly
            .vertices()
            .iter()
            .map(|p| {
                *ids.entry(p.clone()).or_insert_with(|| {
                    vertices.push(p.clone());
                    vertices.len() - 1
                })
            })
            .collect();
        cells.push(cell);
        sources.push((i, j));
    }
    let cells = conform_cells(&vertices, cells);
    let mesh = Mesh::new(vertices, cells, m1.domain().clone())?;
    Ok(Overlay { mesh, sources })
}

/// Common refinement of two meshes over the same domain.
pub fn overlay(m1: &Mesh, m2: &Mesh) -> Result<Mesh, PwaError> {
    Ok(overlay_with_sources(m1, m2)?.mesh)
}

/// Canonical key of the line through two distinct points: `(a, b, c)` with
/// `a x + b y = c` and the first nonzero of `(a, b)` equal to one.
fn line_key(p: &Point2, r: &Point2) -> (Rational, Rational, Rational) {
    let a = &r.y - &p.y;
    let b = &p.x - &r.x;
    let c = &a * &p.x + &b * &p.y;
    let lead = if a.is_zero() { b.clone() } else { a.clone() };
    let inv = lead.recip().expect("distinct points");
    (a * &inv, b * &inv, c * &inv)
}

/// Inserts into every cell edge the vertices that lie strictly inside it, so
/// that neighbouring cells share whole edges. A vertex inside an edge always
/// ends an edge of a neighbour on the same line, so grouping edge endpoints
/// by supporting line finds every such vertex.
pub(crate) fn conform_cells(vertices: &[Point2], cells: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut lines: HashMap<(Rational, Rational, Rational), Vec<usize>> = HashMap::new();
    let mut edge_line: HashMap<(usize, usize), (Rational, Rational, Rational)> = HashMap::new();
    for cell in &cells {
        for (u, v) in cell_edges(cell) {
            let key = (u.min(v), u.max(v));
            if edge_line.contains_key(&key) {
                continue;
            }
            let line = line_key(&vertices[u], &vertices[v]);
            let on = lines.entry(line.clone()).or_default();
            on.push(u);
            on.push(v);
            edge_line.insert(key, line);
        }
    }
    for on in lines.values_mut() {
        on.sort_unstable_by(|&a, &b| vertices[a].cmp(&vertices[b]));
        on.dedup();
    }
    cells
        .into_iter()
        .map(|cell| {
            let mut out = Vec::with_capacity(cell.len());
            for (u, v) in cell_edges(&cell) {
                out.push(u);
                let on = &lines[&edge_line[&(u.min(v), u.max(v))]];
                let pu = on.binary_search_by(|&w| vertices[w].cmp(&vertices[u])).expect("endpoint");
                let pv = on.binary_search_by(|&w| vertices[w].cmp(&vertices[v])).expect("endpoint");
                if pu < pv {
                    out.extend_from_slice(&on[pu + 1..pv]);
                } else if pv + 1 < pu {
                    out.extend(on[pv + 1..pu].iter().rev());
                }
            }
            out
        })
        .collect()
}
