//! JSON persistence. Every rational is a `"numerator/denominator"` string.

use serde::{Deserialize, Serialize};

use super::{Mesh, PwaError, PwaMap};
use crate::exact::{AffineMap2, ConvexPolygon, Mat2, Point2, Rational};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineJson {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
    pub tx: Rational,
    pub ty: Rational,
}

impl From<&AffineMap2> for AffineJson {
    fn from(m: &AffineMap2) -> Self {
        AffineJson {
            a: m.linear.a.clone(),
            b: m.linear.b.clone(),
            c: m.linear.c.clone(),
            d: m.linear.d.clone(),
            tx: m.translation.x.clone(),
            ty: m.translation.y.clone(),
        }
    }
}

impl From<AffineJson> for AffineMap2 {
    fn from(j: AffineJson) -> Self {
        AffineMap2::new(Mat2::new(j.a, j.b, j.c, j.d), Point2::new(j.tx, j.ty))
    }
}

pub(crate) fn point_json(p: &Point2) -> [Rational; 2] {
    [p.x.clone(), p.y.clone()]
}

fn polygon_json(p: &ConvexPolygon) -> Vec<[Rational; 2]> {
    p.vertices().iter().map(point_json).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshJson {
    pub vertices: Vec<[Rational; 2]>,
    pub cells: Vec<Vec<usize>>,
    pub domain: Vec<[Rational; 2]>,
}

impl From<&Mesh> for MeshJson {
    fn from(m: &Mesh) -> Self {
        MeshJson { vertices: m.vertices().iter().map(point_json).collect(), cells: m.cells().to_vec(), domain: polygon_json(m.domain()) }
    }
}

impl MeshJson {
    pub fn into_mesh(self) -> Result<Mesh, PwaError> {
        let vertices = self.vertices.into_iter().map(|[x, y]| Point2::new(x, y)).collect();
        let domain: Vec<Point2> = self.domain.into_iter().map(|[x, y]| Point2::new(x, y)).collect();
        Mesh::new(vertices, self.cells, ConvexPolygon::new(domain)?)
    }
}

/// `{"vertices": …, "cells": …, "maps": …, "domain": …}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwaMapJson {
    pub vertices: Vec<[Rational; 2]>,
    pub cells: Vec<Vec<usize>>,
    pub maps: Vec<AffineJson>,
    pub domain: Vec<[Rational; 2]>,
}

impl From<&PwaMap> for PwaMapJson {
    fn from(f: &PwaMap) -> Self {
        let m = MeshJson::from(f.mesh());
        PwaMapJson { vertices: m.vertices, cells: m.cells, maps: f.maps().iter().map(AffineJson::from).collect(), domain: m.domain }
    }
}

impl PwaMapJson {
    pub fn into_map(self) -> Result<PwaMap, PwaError> {
        let mesh = MeshJson { vertices: self.vertices, cells: self.cells, domain: self.domain }.into_mesh()?;
        PwaMap::new(mesh, self.maps.into_iter().map(AffineMap2::from).collect())
    }
}

impl PwaMap {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&PwaMapJson::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<PwaMap, PwaError> {
        let j: PwaMapJson = serde_json::from_str(s).map_err(|e| PwaError::Json(e.to_string()))?;
        j.into_map()
    }
}
