//! Bucket grid over floating-point bounding boxes.
//!
//! Only used to prune candidate pairs; every decision is re-made exactly.
//! Boxes are padded so rounding in the `f64` conversion can never drop a
//! true candidate.

use crate::exact::{bbox_of, Point2};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn of_points<'a>(pts: impl Iterator<Item = &'a Point2>) -> Rect {
        let (lo, hi) = bbox_of(pts);
        let (x0, y0, x1, y1) = (lo.x.to_f64(), lo.y.to_f64(), hi.x.to_f64(), hi.y.to_f64());
        let pad = 1e-9 * (1.0 + x1.abs().max(y1.abs()).max(x0.abs()).max(y0.abs()));
        Rect { x0: x0 - pad, y0: y0 - pad, x1: x1 + pad, y1: y1 + pad }
    }

    pub fn point(p: &Point2) -> Rect {
        Rect::of_points(std::iter::once(p))
    }

    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x0 <= o.x1 && o.x0 <= self.x1 && self.y0 <= o.y1 && o.y0 <= self.y1
    }

    fn union(&self, o: &Rect) -> Rect {
        Rect { x0: self.x0.min(o.x0), y0: self.y0.min(o.y0), x1: self.x1.max(o.x1), y1: self.y1.max(o.y1) }
    }
}

pub(crate) struct BoxIndex {
    rects: Vec<Rect>,
    bounds: Rect,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl BoxIndex {
    pub fn new(rects: Vec<Rect>) -> Self {
        let bounds = rects.iter().fold(None, |acc: Option<Rect>, r| Some(acc.map_or(*r, |a| a.union(r)))).unwrap_or(Rect {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
        });
        let side = ((rects.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let (nx, ny) = (side, side);
        let mut index = BoxIndex { rects, bounds, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for i in 0..index.rects.len() {
            let r = index.rects[i];
            let (ax, ay, bx, by) = index.span(&r);
            for gy in ay..=by {
                for gx in ax..=bx {
                    index.buckets[gy * nx + gx].push(i as u32);
                }
            }
        }
        index
    }

    fn cell_coord(&self, v: f64, lo: f64, hi: f64, n: usize) -> usize {
        if hi <= lo {
            return 0;
        }
        let t = ((v - lo) / (hi - lo) * n as f64).floor();
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(n - 1)
        }
    }

    fn span(&self, r: &Rect) -> (usize, usize, usize, usize) {
        let b = &self.bounds;
        (
            self.cell_coord(r.x0, b.x0, b.x1, self.nx),
            self.cell_coord(r.y0, b.y0, b.y1, self.ny),
            self.cell_coord(r.x1, b.x0, b.x1, self.nx),
            self.cell_coord(r.y1, b.y0, b.y1, self.ny),
        )
    }

    /// Indices whose boxes overlap `r`, ascending, without duplicates.
    pub fn query(&self, r: &Rect) -> Vec<usize> {
        if !r.overlaps(&self.bounds) {
            return Vec::new();
        }
        let (ax, ay, bx, by) = self.span(r);
        let mut out: Vec<usize> = Vec::new();
        for gy in ay..=by {
            for gx in ax..=bx {
                for &i in &self.buckets[gy * self.nx + gx] {
                    if self.rects[i as usize].overlaps(r) {
                        out.push(i as usize);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
