//! Combinatorial triangulations of disks.
//!
//! A [`Triangulation`] is built from a list of vertex triples and validated
//! once: every edge lies in one or two faces, face orientations agree across
//! shared edges, every vertex link is a single path or cycle, and the complex
//! has Euler characteristic one with a nonempty boundary. After construction
//! it is immutable.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Caller-supplied vertex label. Never renumbered by the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl From<u32> for VertexId {
    fn from(v: u32) -> Self {
        VertexId(v)
    }
}

/// Index into [`Triangulation::faces`].
pub type FaceId = usize;

/// Unordered vertex pair, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(VertexId, VertexId);

impl Edge {
    pub fn new(a: VertexId, b: VertexId) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn endpoints(self) -> (VertexId, VertexId) {
        (self.0, self.1)
    }

    pub fn contains(self, v: VertexId) -> bool {
        self.0 == v || self.1 == v
    }

    /// The endpoint that is not `v`, if `v` is an endpoint.
    pub fn other(self, v: VertexId) -> Option<VertexId> {
        if self.0 == v {
            Some(self.1)
        } else if self.1 == v {
            Some(self.0)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("empty face list")]
    Empty,
    #[error("face {face} repeats a vertex")]
    DegenerateFace { face: usize },
    #[error("faces {first} and {second} span the same vertices")]
    DuplicateFace { first: usize, second: usize },
    #[error("edge {edge} belongs to {count} faces")]
    NonManifold { edge: Edge, count: usize },
    #[error("not a disk: {0}")]
    NotADisk(String),
    #[error("inconsistent orientation at face {face}")]
    OrientationConflict { face: usize },
    #[error("vertex {0} lies on the boundary")]
    BoundaryVertex(VertexId),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("no face has all three vertices in the given set")]
    EmptyResult,
}

/// Validated triangulation of a closed disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    vertices: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    faces: Vec<[VertexId; 3]>,
    edges: BTreeMap<Edge, Vec<FaceId>>,
    // Per vertex (by dense index): neighbors in counterclockwise order. For
    // boundary vertices this is the link path from one boundary neighbor to
    // the other.
    links: Vec<Vec<VertexId>>,
    vertex_faces: Vec<Vec<FaceId>>,
    boundary: Vec<bool>,
}

fn directed_edges(f: &[VertexId; 3]) -> [(VertexId, VertexId); 3] {
    [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])]
}

impl Triangulation {
    /// Builds and validates a disk triangulation (`build_triangulation`).
    ///
    /// Faces are reoriented where needed so that all orientations agree with
    /// the first face. Repeated vertices in a face and duplicate faces are
    /// rejected, not repaired.
    pub fn new(faces: Vec<[VertexId; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let mut seen: HashMap<[VertexId; 3], usize> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::DegenerateFace { face: fi });
            }
            let mut key = *f;
            key.sort();
            if let Some(&first) = seen.get(&key) {
                return Err(MeshError::DuplicateFace { first, second: fi });
            }
            seen.insert(key, fi);
        }

        let mut edge_faces: BTreeMap<Edge, Vec<FaceId>> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for (a, b) in directed_edges(f) {
                edge_faces.entry(Edge::new(a, b)).or_default().push(fi);
            }
        }
        for (e, fs) in &edge_faces {
            if fs.len() > 2 {
                return Err(MeshError::NonManifold {
                    edge: *e,
                    count: fs.len(),
                });
            }
        }

        let faces = orient(&faces, &edge_faces)?;

        let vertex_set: BTreeSet<VertexId> = faces.iter().flatten().copied().collect();
        let vertices: Vec<VertexId> = vertex_set.into_iter().collect();
        let index: HashMap<VertexId, usize> =
            vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();

        let mut vertex_faces = vec![Vec::new(); vertices.len()];
        let mut link_next: Vec<HashMap<VertexId, VertexId>> = vec![HashMap::new(); vertices.len()];
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let v = f[k];
                let (a, b) = (f[(k + 1) % 3], f[(k + 2) % 3]);
                let vi = index[&v];
                vertex_faces[vi].push(fi);
                if link_next[vi].insert(a, b).is_some() {
                    return Err(MeshError::NotADisk(format!(
                        "vertex {v} has a non-manifold link"
                    )));
                }
            }
        }

        let mut links = Vec::with_capacity(vertices.len());
        let mut boundary = Vec::with_capacity(vertices.len());
        for (vi, next) in link_next.iter().enumerate() {
            let (link, is_boundary) = walk_link(next).ok_or_else(|| {
                MeshError::NotADisk(format!("vertex {} has a disconnected link", vertices[vi]))
            })?;
            links.push(link);
            boundary.push(is_boundary);
        }

        let tri = Triangulation {
            vertices,
            index,
            faces,
            edges: edge_faces,
            links,
            vertex_faces,
            boundary,
        };
        if tri.euler_characteristic() != 1 {
            return Err(MeshError::NotADisk(format!(
                "Euler characteristic {} != 1",
                tri.euler_characteristic()
            )));
        }
        if !tri.boundary.iter().any(|&b| b) {
            return Err(MeshError::NotADisk("no boundary".into()));
        }
        Ok(tri)
    }

    /// Convenience constructor from raw `u32` labels.
    pub fn from_indices(faces: &[[u32; 3]]) -> Result<Self, MeshError> {
        Self::new(
            faces
                .iter()
                .map(|f| [VertexId(f[0]), VertexId(f[1]), VertexId(f[2])])
                .collect(),
        )
    }

    /// Vertices in ascending id order.
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[VertexId; 3]] {
        &self.faces
    }

    pub fn face(&self, f: FaceId) -> [VertexId; 3] {
        self.faces[f]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.keys().copied()
    }

    /// Edges shared by two faces.
    pub fn interior_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges
            .iter()
            .filter(|(_, fs)| fs.len() == 2)
            .map(|(e, _)| *e)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges
            .iter()
            .filter(|(_, fs)| fs.len() == 1)
            .map(|(e, _)| *e)
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.edges.contains_key(&e)
    }

    /// Faces incident to `e`; empty if `e` is not an edge.
    pub fn edge_faces(&self, e: Edge) -> &[FaceId] {
        self.edges.get(&e).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The vertex opposite `e` in each incident face.
    pub fn opposite_vertices(&self, e: Edge) -> Vec<VertexId> {
        self.edge_faces(e)
            .iter()
            .map(|&f| {
                *self.faces[f]
                    .iter()
                    .find(|v| !e.contains(**v))
                    .expect("face contains its edge")
            })
            .collect()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.index.contains_key(&v)
    }

    /// Dense position of `v` in [`Triangulation::vertices`].
    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.index.get(&v).copied()
    }

    fn idx(&self, v: VertexId) -> usize {
        match self.index.get(&v) {
            Some(&i) => i,
            None => panic!("vertex {v} not in triangulation"),
        }
    }

    /// Panics if `v` is not a vertex.
    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.boundary[self.idx(v)]
    }

    pub fn is_interior(&self, v: VertexId) -> bool {
        !self.is_boundary(v)
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.links[self.idx(v)].len()
    }

    /// Neighbors of `v` in counterclockwise order.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.links[self.idx(v)]
    }

    pub fn faces_around(&self, v: VertexId) -> &[FaceId] {
        &self.vertex_faces[self.idx(v)]
    }

    pub fn interior_vertices(&self) -> Vec<VertexId> {
        self.vertices
            .iter()
            .zip(&self.boundary)
            .filter(|(_, &b)| !b)
            .map(|(v, _)| *v)
            .collect()
    }

    pub fn boundary_vertices(&self) -> Vec<VertexId> {
        self.vertices
            .iter()
            .zip(&self.boundary)
            .filter(|(_, &b)| b)
            .map(|(v, _)| *v)
            .collect()
    }

    /// Partition of the vertices into (interior, boundary).
    pub fn classify_boundary(&self) -> (BTreeSet<VertexId>, BTreeSet<VertexId>) {
        (
            self.interior_vertices().into_iter().collect(),
            self.boundary_vertices().into_iter().collect(),
        )
    }

    /// Boundary vertices in the order the boundary is traversed by the faces'
    /// orientation, starting at the smallest boundary id.
    pub fn boundary_cycle(&self) -> Vec<VertexId> {
        let mut next: HashMap<VertexId, VertexId> = HashMap::new();
        for e in self.boundary_edges() {
            let f = self.faces[self.edges[&e][0]];
            for (a, b) in directed_edges(&f) {
                if Edge::new(a, b) == e {
                    next.insert(a, b);
                }
            }
        }
        let Some(&start) = next.keys().min() else {
            return Vec::new();
        };
        let mut cycle = vec![start];
        let mut cur = next[&start];
        while cur != start {
            cycle.push(cur);
            cur = next[&cur];
        }
        cycle
    }

    /// The 1-ring neighborhood of an interior vertex.
    pub fn one_ring(&self, center: VertexId) -> Result<OneRing, MeshError> {
        let ci = self
            .index_of(center)
            .ok_or(MeshError::UnknownVertex(center))?;
        if self.boundary[ci] {
            return Err(MeshError::BoundaryVertex(center));
        }
        let faces = self.vertex_faces[ci]
            .iter()
            .map(|&f| self.faces[f])
            .collect();
        Ok(OneRing {
            center,
            neighbors: self.links[ci].clone(),
            complex: Triangulation::new(faces)?,
        })
    }

    /// The subcomplex generated by `set`: every face whose three vertices lie
    /// in `set`. The result must itself be a disk.
    pub fn subcomplex(&self, set: &BTreeSet<VertexId>) -> Result<Triangulation, MeshError> {
        if let Some(v) = set.iter().find(|v| !self.contains(**v)) {
            return Err(MeshError::UnknownVertex(*v));
        }
        let faces: Vec<_> = self
            .faces
            .iter()
            .filter(|f| f.iter().all(|v| set.contains(v)))
            .copied()
            .collect();
        if faces.is_empty() {
            return Err(MeshError::EmptyResult);
        }
        Triangulation::new(faces)
    }

    /// Same complex with every face orientation reversed.
    pub fn reversed(&self) -> Triangulation {
        Triangulation::new(self.faces.iter().map(|f| [f[0], f[2], f[1]]).collect())
            .expect("reversal preserves validity")
    }

    /// Combinatorial (edge-count) distance from `source` to every vertex.
    pub fn graph_distances(&self, source: VertexId) -> BTreeMap<VertexId, usize> {
        let mut dist = BTreeMap::new();
        if !self.contains(source) {
            return dist;
        }
        dist.insert(source, 0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            for &w in self.neighbors(v) {
                if !dist.contains_key(&w) {
                    dist.insert(w, d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Reorients faces so that every shared edge is traversed in opposite
/// directions by its two faces. Face 0 keeps its given orientation.
fn orient(
    faces: &[[VertexId; 3]],
    edge_faces: &BTreeMap<Edge, Vec<FaceId>>,
) -> Result<Vec<[VertexId; 3]>, MeshError> {
    let mut flip: Vec<Option<bool>> = vec![None; faces.len()];
    let oriented = |f: usize, flipped: bool| -> [VertexId; 3] {
        let t = faces[f];
        if flipped {
            [t[0], t[2], t[1]]
        } else {
            t
        }
    };
    flip[0] = Some(false);
    let mut queue = VecDeque::from([0usize]);
    while let Some(f) = queue.pop_front() {
        let tf = oriented(f, flip[f].unwrap());
        for (a, b) in directed_edges(&tf) {
            for &g in &edge_faces[&Edge::new(a, b)] {
                if g == f {
                    continue;
                }
                // g must traverse the shared edge as b -> a.
                let need = !directed_edges(&faces[g]).contains(&(b, a));
                match flip[g] {
                    None => {
                        flip[g] = Some(need);
                        queue.push_back(g);
                    }
                    Some(have) if have != need => {
                        return Err(MeshError::OrientationConflict { face: g });
                    }
                    Some(_) => {}
                }
            }
        }
    }
    if flip.iter().any(Option::is_none) {
        return Err(MeshError::NotADisk("faces are not edge-connected".into()));
    }
    Ok((0..faces.len())
        .map(|f| oriented(f, flip[f].unwrap()))
        .collect())
}

/// Walks a vertex link given as a successor map. Returns the ordered
/// neighbors and whether the link is a path (boundary vertex), or `None` if
/// the link is not a single path or cycle.
fn walk_link(next: &HashMap<VertexId, VertexId>) -> Option<(Vec<VertexId>, bool)> {
    let targets: HashSet<VertexId> = next.values().copied().collect();
    let mut starts: Vec<VertexId> = next
        .keys()
        .filter(|a| !targets.contains(a))
        .copied()
        .collect();
    starts.sort();
    match starts.len() {
        0 => {
            let start = *next.keys().min()?;
            let mut order = vec![start];
            let mut cur = next[&start];
            while cur != start {
                if order.len() > next.len() {
                    return None;
                }
                order.push(cur);
                cur = *next.get(&cur)?;
            }
            (order.len() == next.len()).then_some((order, false))
        }
        1 => {
            let mut order = vec![starts[0]];
            let mut cur = starts[0];
            while let Some(&n) = next.get(&cur) {
                order.push(n);
                cur = n;
                if order.len() > next.len() + 1 {
                    return None;
                }
            }
            (order.len() == next.len() + 1).then_some((order, true))
        }
        _ => None,
    }
}

/// The subcomplex generated by an interior vertex and its neighbors.
#[derive(Debug, Clone)]
pub struct OneRing {
    center: VertexId,
    neighbors: Vec<VertexId>,
    complex: Triangulation,
}

impl OneRing {
    pub fn center(&self) -> VertexId {
        self.center
    }

    /// Ring boundary vertices in counterclockwise cyclic order.
    pub fn neighbors(&self) -> &[VertexId] {
        &self.neighbors
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.complex
    }

    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }
}
