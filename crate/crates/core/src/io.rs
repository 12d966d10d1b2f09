//! JSON mesh documents.
//!
//! ```json
//! {
//!   "vertices": [[0, 0.0, 0.0], [1, 1.0, 0.0], [2, 0.5, 0.8]],
//!   "faces": [[0, 1, 2]],
//!   "edge_lengths": [[0, 1, 1.0], [1, 2, 0.94], [0, 2, 0.94]],
//!   "factors": [[0, 0.0], [1, 0.1], [2, -0.1]]
//! }
//! ```
//!
//! `vertices` entries are either a bare id or `[id, x, y]`; coordinates must
//! be given for every vertex or for none. `edge_lengths` and `factors` are
//! optional. Unknown fields are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::euclid::{
    induced_metric, signed_area, ConformalFactor, GeomError, PLMetric, PlanarCoords,
};
use crate::hyper::DiskCoords;
use crate::mesh::{Edge, MeshError, Triangulation, VertexId};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed mesh document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid mesh document: {0}")]
    Schema(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum VertexEntry {
    Id(u32),
    Point(u32, f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    vertices: Vec<VertexEntry>,
    faces: Vec<[u32; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge_lengths: Option<Vec<(u32, u32, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<(u32, f64)>>,
}

/// A validated mesh document.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDocument {
    pub triangulation: Triangulation,
    pub coords: Option<PlanarCoords>,
    pub lengths: Option<PLMetric>,
    pub factors: Option<ConformalFactor>,
}

impl MeshDocument {
    pub fn new(triangulation: Triangulation) -> Self {
        MeshDocument {
            triangulation,
            coords: None,
            lengths: None,
            factors: None,
        }
    }

    pub fn with_coords(mut self, coords: PlanarCoords) -> Self {
        self.coords = Some(coords);
        self
    }

    pub fn with_lengths(mut self, lengths: PLMetric) -> Self {
        self.lengths = Some(lengths);
        self
    }

    pub fn with_factors(mut self, factors: ConformalFactor) -> Self {
        self.factors = Some(factors);
        self
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let raw: RawMesh = serde_json::from_str(text)?;
        Self::from_raw(raw)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, IoError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| IoError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(&self.to_raw()).expect("mesh documents serialize");
        text.push('\n');
        text
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| IoError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Explicit edge lengths if present, otherwise the metric induced by the
    /// coordinates.
    pub fn metric(&self) -> Result<PLMetric, IoError> {
        match (&self.lengths, &self.coords) {
            (Some(l), _) => Ok(l.clone()),
            (None, Some(c)) => Ok(induced_metric(&self.triangulation, c)?),
            (None, None) => Err(IoError::Schema(
                "document has neither edge lengths nor coordinates".into(),
            )),
        }
    }

    /// Coordinates, checked to lie in the open unit disk.
    pub fn disk_coords(&self) -> Result<DiskCoords, IoError> {
        let coords = self
            .coords
            .as_ref()
            .ok_or_else(|| IoError::Schema("document has no coordinates".into()))?;
        Ok(DiskCoords::from_planar(coords)?)
    }

    fn from_raw(raw: RawMesh) -> Result<Self, IoError> {
        let faces: Vec<[VertexId; 3]> = raw.faces.iter().map(|f| f.map(VertexId)).collect();
        let mut tri = Triangulation::new(faces)?;

        let mut ids = BTreeSet::new();
        let mut positions = BTreeMap::new();
        for entry in &raw.vertices {
            let id = match *entry {
                VertexEntry::Id(id) => id,
                VertexEntry::Point(id, x, y) => {
                    if !(x.is_finite() && y.is_finite()) {
                        return Err(IoError::Schema(format!(
                            "vertex {id} has non-finite coordinates"
                        )));
                    }
                    positions.insert(VertexId(id), Complex64::new(x, y));
                    id
                }
            };
            if !ids.insert(VertexId(id)) {
                return Err(IoError::Schema(format!("vertex {id} listed twice")));
            }
        }
        let listed: Vec<VertexId> = ids.into_iter().collect();
        if listed != tri.vertices() {
            return Err(IoError::Schema(
                "vertex list does not match the vertices used by faces".into(),
            ));
        }
        let coords = match positions.len() {
            0 => None,
            n if n == listed.len() => Some(PlanarCoords::new(positions)),
            _ => {
                return Err(IoError::Schema(
                    "coordinates must be given for all vertices or none".into(),
                ))
            }
        };
        if let Some(c) = &coords {
            if c.signed_area(&tri.face(0)) < 0.0 {
                tri = tri.reversed();
            }
        }

        let lengths = match raw.edge_lengths {
            None => None,
            Some(rows) => {
                let mut map = BTreeMap::new();
                for (a, b, len) in rows {
                    let e = Edge::new(VertexId(a), VertexId(b));
                    if !tri.has_edge(e) {
                        return Err(IoError::Schema(format!(
                            "edge_lengths lists {e}, which is not an edge"
                        )));
                    }
                    if map.insert(e, len).is_some() {
                        return Err(IoError::Schema(format!("edge {e} listed twice")));
                    }
                }
                Some(PLMetric::new(&tri, map)?)
            }
        };

        let factors = match raw.factors {
            None => None,
            Some(rows) => {
                let mut map = BTreeMap::new();
                for (v, x) in rows {
                    let v = VertexId(v);
                    if !tri.contains(v) {
                        return Err(IoError::Schema(format!("factors lists unknown vertex {v}")));
                    }
                    if map.insert(v, x).is_some() {
                        return Err(IoError::Schema(format!("factor for {v} listed twice")));
                    }
                }
                if let Some(v) = tri.vertices().iter().find(|v| !map.contains_key(v)) {
                    return Err(IoError::Schema(format!("no factor for {v}")));
                }
                Some(ConformalFactor::new(map)?)
            }
        };

        Ok(MeshDocument {
            triangulation: tri,
            coords,
            lengths,
            factors,
        })
    }

    fn to_raw(&self) -> RawMesh {
        let tri = &self.triangulation;
        let vertices = tri
            .vertices()
            .iter()
            .map(|v| match self.coords.as_ref().and_then(|c| c.get(*v)) {
                Some(z) => VertexEntry::Point(v.0, z.re, z.im),
                None => VertexEntry::Id(v.0),
            })
            .collect();
        RawMesh {
            vertices,
            faces: tri.faces().iter().map(|f| f.map(|v| v.0)).collect(),
            edge_lengths: self.lengths.as_ref().map(|l| {
                l.iter()
                    .map(|(e, x)| {
                        let (a, b) = e.endpoints();
                        (a.0, b.0, x)
                    })
                    .collect()
            }),
            factors: self
                .factors
                .as_ref()
                .map(|u| u.iter().map(|(v, x)| (v.0, x)).collect()),
        }
    }
}

/// True when the first face of `coords` winds counterclockwise.
pub fn is_ccw(tri: &Triangulation, coords: &PlanarCoords) -> bool {
    let f = tri.face(0);
    signed_area(coords[f[0]], coords[f[1]], coords[f[2]]) > 0.0
}
