//! Euclidean PL metrics on a triangulation.
//!
//! Corner angles come from the law of cosines; everything else here
//! (curvature, cotangent weights, the metric-condition margins) is derived
//! from a [`CornerAngles`] table aligned with [`Triangulation::faces`].

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;
use std::ops::Index;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{Edge, FaceId, MeshError, Triangulation, VertexId};
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("side lengths {sides:?} violate the triangle inequality")]
    InvalidTriangle { sides: [f64; 3] },
    #[error("face {face:?} violates the triangle inequality after scaling")]
    TriangleInequalityViolated { face: [VertexId; 3] },
    #[error("no length for edge {0}")]
    MissingEdge(Edge),
    #[error("no value for vertex {0}")]
    MissingVertex(VertexId),
    #[error("edge {edge} has invalid length {length}")]
    BadLength { edge: Edge, length: f64 },
    #[error("vertex {vertex} has non-finite value {value}")]
    NonFinite { vertex: VertexId, value: f64 },
    #[error("face {0} is degenerate")]
    DegenerateFace(FaceId),
    #[error("metrics are not conformal: edge {edge} misses by {residual:e}")]
    NotConformal { edge: Edge, residual: f64 },
    #[error("metric is not flat: curvature {curvature:e} at {vertex}")]
    NotFlat { vertex: VertexId, curvature: f64 },
    #[error("development is inconsistent at {vertex} (mismatch {discrepancy:e})")]
    InconsistentDevelopment { vertex: VertexId, discrepancy: f64 },
    #[error("point with modulus {modulus} is outside the unit disk")]
    OutOfDisk { modulus: f64 },
    #[error("log map needs distinct points")]
    CoincidentPoints,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("claim ({claim}) failed: {detail}")]
    ClaimFailed { claim: u8, detail: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

pub(crate) fn triangle_ok(a: f64, b: f64, c: f64) -> bool {
    if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return false;
    }
    let slack = tol::TRIANGLE_REL * a.max(b).max(c);
    a <= b + c + slack && b <= a + c + slack && c <= a + b + slack
}

fn strict_triangle(a: f64, b: f64, c: f64) -> bool {
    a > 0.0 && b > 0.0 && c > 0.0 && a < b + c && b < a + c && c < a + b && (a + b + c).is_finite()
}

/// Angle between sides `a` and `b` of a triangle whose third side is `c`.
pub fn corner_angle(a: f64, b: f64, c: f64) -> Result<f64, GeomError> {
    if !triangle_ok(a, b, c) {
        return Err(GeomError::InvalidTriangle { sides: [a, b, c] });
    }
    let cos = ((a * a + b * b - c * c) / (2.0 * a * b)).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

/// Positive edge lengths on a triangulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLMetric {
    lengths: BTreeMap<Edge, f64>,
}

impl PLMetric {
    /// Validates coverage of every edge and the strict triangle inequality on
    /// every face.
    pub fn new(tri: &Triangulation, lengths: BTreeMap<Edge, f64>) -> Result<Self, GeomError> {
        let metric = PLMetric { lengths };
        metric.validate(tri)?;
        Ok(metric)
    }

    pub fn from_fn(tri: &Triangulation, mut f: impl FnMut(Edge) -> f64) -> Result<Self, GeomError> {
        Self::new(tri, tri.edges().map(|e| (e, f(e))).collect())
    }

    pub fn uniform(tri: &Triangulation, length: f64) -> Result<Self, GeomError> {
        Self::from_fn(tri, |_| length)
    }

    pub(crate) fn from_map_unchecked(lengths: BTreeMap<Edge, f64>) -> Self {
        PLMetric { lengths }
    }

    pub fn validate(&self, tri: &Triangulation) -> Result<(), GeomError> {
        for e in tri.edges() {
            match self.lengths.get(&e) {
                None => return Err(GeomError::MissingEdge(e)),
                Some(&l) if !(l > 0.0 && l.is_finite()) => {
                    return Err(GeomError::BadLength { edge: e, length: l })
                }
                _ => {}
            }
        }
        for f in tri.faces() {
            let [a, b, c] = self.face_lengths(f);
            if !strict_triangle(a, b, c) && !triangle_ok(a, b, c) {
                return Err(GeomError::InvalidTriangle { sides: [a, b, c] });
            }
        }
        Ok(())
    }

    pub fn get(&self, a: VertexId, b: VertexId) -> Option<f64> {
        self.lengths.get(&Edge::new(a, b)).copied()
    }

    /// Panics if the edge has no length.
    pub fn length(&self, e: Edge) -> f64 {
        self.lengths[&e]
    }

    /// Side lengths opposite each corner of `face`.
    pub fn face_lengths(&self, face: &[VertexId; 3]) -> [f64; 3] {
        let [i, j, k] = *face;
        [
            self.length(Edge::new(j, k)),
            self.length(Edge::new(k, i)),
            self.length(Edge::new(i, j)),
        ]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.lengths.iter().map(|(e, l)| (*e, *l))
    }

    pub fn scaled(&self, s: f64) -> PLMetric {
        PLMetric {
            lengths: self.lengths.iter().map(|(e, l)| (*e, l * s)).collect(),
        }
    }

    pub fn max_length(&self) -> f64 {
        self.lengths.values().copied().fold(0.0, f64::max)
    }
}

/// Per-vertex real values: a conformal factor `u` (or `u^h`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConformalFactor {
    values: BTreeMap<VertexId, f64>,
}

impl ConformalFactor {
    pub fn new(values: BTreeMap<VertexId, f64>) -> Result<Self, GeomError> {
        if let Some((v, x)) = values.iter().find(|(_, x)| !x.is_finite()) {
            return Err(GeomError::NonFinite {
                vertex: *v,
                value: *x,
            });
        }
        Ok(ConformalFactor { values })
    }

    pub fn constant(tri: &Triangulation, c: f64) -> Self {
        ConformalFactor {
            values: tri.vertices().iter().map(|v| (*v, c)).collect(),
        }
    }

    pub fn zeros(tri: &Triangulation) -> Self {
        Self::constant(tri, 0.0)
    }

    pub fn from_fn(
        tri: &Triangulation,
        mut f: impl FnMut(VertexId) -> f64,
    ) -> Result<Self, GeomError> {
        Self::new(tri.vertices().iter().map(|v| (*v, f(*v))).collect())
    }

    pub fn get(&self, v: VertexId) -> Option<f64> {
        self.values.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.values.iter().map(|(v, x)| (*v, *x))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.values().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// max - min over the given vertices.
    pub fn oscillation<'a>(&self, over: impl IntoIterator<Item = &'a VertexId>) -> f64 {
        let (lo, hi) = over
            .into_iter()
            .map(|v| self[*v])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x), hi.max(x))
            });
        if hi < lo {
            0.0
        } else {
            hi - lo
        }
    }

    /// Largest absolute difference on the vertices both factors define.
    pub fn max_abs_diff(&self, other: &ConformalFactor) -> f64 {
        self.values
            .iter()
            .filter_map(|(v, x)| other.get(*v).map(|y| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

impl Index<VertexId> for ConformalFactor {
    type Output = f64;

    fn index(&self, v: VertexId) -> &f64 {
        &self.values[&v]
    }
}

/// Vertex positions of a straight-line drawing in the plane.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarCoords {
    positions: BTreeMap<VertexId, Complex64>,
}

impl PlanarCoords {
    pub fn new(positions: BTreeMap<VertexId, Complex64>) -> Self {
        PlanarCoords { positions }
    }

    pub fn get(&self, v: VertexId) -> Option<Complex64> {
        self.positions.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, Complex64)> + '_ {
        self.positions.iter().map(|(v, z)| (*v, *z))
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Applies `f` to every position.
    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> PlanarCoords {
        PlanarCoords {
            positions: self.positions.iter().map(|(v, z)| (*v, f(*z))).collect(),
        }
    }

    /// Positions restricted to the vertices of `tri`.
    pub fn restrict(&self, tri: &Triangulation) -> PlanarCoords {
        PlanarCoords {
            positions: tri
                .vertices()
                .iter()
                .filter_map(|v| self.get(*v).map(|z| (*v, z)))
                .collect(),
        }
    }

    pub fn covers(&self, tri: &Triangulation) -> Result<(), GeomError> {
        match tri
            .vertices()
            .iter()
            .find(|v| !self.positions.contains_key(v))
        {
            Some(v) => Err(GeomError::MissingVertex(*v)),
            None => Ok(()),
        }
    }

    pub fn signed_area(&self, face: &[VertexId; 3]) -> f64 {
        signed_area(self[face[0]], self[face[1]], self[face[2]])
    }
}

impl Index<VertexId> for PlanarCoords {
    type Output = Complex64;

    fn index(&self, v: VertexId) -> &Complex64 {
        &self.positions[&v]
    }
}

/// Twice-normalized signed area: positive for a counterclockwise triple.
pub fn signed_area(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    0.5 * cross(b - a, c - a)
}

fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}

/// Center and radius of the circle through three non-collinear points.
pub fn circumcircle(a: Complex64, b: Complex64, c: Complex64) -> (Complex64, f64) {
    let (b, c) = (b - a, c - a);
    let d = 2.0 * cross(b, c);
    let (bn, cn) = (b.norm_sqr(), c.norm_sqr());
    let center = Complex64::new(c.im * bn - b.im * cn, b.re * cn - c.re * bn) / d;
    (center + a, center.norm())
}

/// Relative distance of `d` outside the circumcircle of `a, b, c`:
/// `(|d - center| - R) / R`. Negative iff `d` is strictly inside.
pub fn in_circle_margin(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    let (center, r) = circumcircle(a, b, c);
    ((d - center).norm() - r) / r
}

fn segments_intersect(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = cross(p2 - p1, q1 - p1);
    let d2 = cross(p2 - p1, q2 - p1);
    let d3 = cross(q2 - q1, p1 - q1);
    let d4 = cross(q2 - q1, p2 - q1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Complex64, b: Complex64, p: Complex64| {
        p.re >= a.re.min(b.re)
            && p.re <= a.re.max(b.re)
            && p.im >= a.im.min(b.im)
            && p.im <= a.im.max(b.im)
    };
    (d1 == 0.0 && on(p1, p2, q1))
        || (d2 == 0.0 && on(p1, p2, q2))
        || (d3 == 0.0 && on(q1, q2, p1))
        || (d4 == 0.0 && on(q1, q2, p2))
}

/// Corner angles of every face, aligned with [`Triangulation::faces`]:
/// `angles[f][k]` is the angle at corner `faces[f][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerAngles {
    angles: Vec<[f64; 3]>,
}

impl CornerAngles {
    pub(crate) fn from_faces(
        tri: &Triangulation,
        mut side_lengths: impl FnMut(&[VertexId; 3]) -> [f64; 3],
        angle: impl Fn(f64, f64, f64) -> Result<f64, GeomError>,
    ) -> Result<Self, GeomError> {
        let angles = tri
            .faces()
            .iter()
            .map(|f| {
                let [li, lj, lk] = side_lengths(f);
                Ok([angle(lj, lk, li)?, angle(lk, li, lj)?, angle(li, lj, lk)?])
            })
            .collect::<Result<_, GeomError>>()?;
        Ok(CornerAngles { angles })
    }

    pub fn face(&self, f: FaceId) -> [f64; 3] {
        self.angles[f]
    }

    /// Angle at `v` in face `f`. Panics if `v` is not a corner of `f`.
    pub fn at(&self, tri: &Triangulation, f: FaceId, v: VertexId) -> f64 {
        let k = tri
            .face(f)
            .iter()
            .position(|w| *w == v)
            .expect("vertex is a corner of the face");
        self.angles[f][k]
    }

    /// Sum of the corner angles incident to `v`.
    pub fn angle_sum(&self, tri: &Triangulation, v: VertexId) -> f64 {
        tri.faces_around(v)
            .iter()
            .map(|&f| self.at(tri, f, v))
            .sum()
    }

    pub fn curvature(&self, tri: &Triangulation) -> CurvatureVector {
        let values = tri
            .vertices()
            .iter()
            .map(|&v| {
                let full = if tri.is_boundary(v) { PI } else { 2.0 * PI };
                (v, full - self.angle_sum(tri, v))
            })
            .collect();
        CurvatureVector { values }
    }

    /// The angles opposite `e` in its incident faces.
    pub fn opposite_angles(&self, tri: &Triangulation, e: Edge) -> Vec<f64> {
        tri.edge_faces(e)
            .iter()
            .zip(tri.opposite_vertices(e))
            .map(|(&f, v)| self.at(tri, f, v))
            .collect()
    }

    pub fn cot_weights(&self, tri: &Triangulation) -> CotWeights {
        let values = tri
            .interior_edges()
            .map(|e| {
                let w: f64 = self
                    .opposite_angles(tri, e)
                    .iter()
                    .map(|t| 0.5 / t.tan())
                    .sum();
                (e, w)
            })
            .collect();
        CotWeights { values }
    }

    /// `pi - (sum of the two opposite angles)` for every interior edge.
    pub fn edge_delaunay_margins(&self, tri: &Triangulation) -> BTreeMap<Edge, f64> {
        tri.interior_edges()
            .map(|e| (e, PI - self.opposite_angles(tri, e).iter().sum::<f64>()))
            .collect()
    }

    pub fn min_angle(&self) -> f64 {
        self.angles
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_angle(&self) -> f64 {
        self.angles
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn corner_angles(tri: &Triangulation, l: &PLMetric) -> Result<CornerAngles, GeomError> {
    l.validate(tri)?;
    CornerAngles::from_faces(tri, |f| l.face_lengths(f), corner_angle)
}

/// Angle defect per vertex: `2pi` (interior) or `pi` (boundary) minus the
/// incident angle sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureVector {
    values: BTreeMap<VertexId, f64>,
}

impl CurvatureVector {
    pub fn get(&self, v: VertexId) -> Option<f64> {
        self.values.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.values.iter().map(|(v, k)| (*v, *k))
    }

    pub fn total(&self) -> f64 {
        self.values.values().sum()
    }

    pub fn max_abs_interior(&self, tri: &Triangulation) -> f64 {
        tri.interior_vertices()
            .iter()
            .map(|v| self.values[v].abs())
            .fold(0.0, f64::max)
    }
}

impl Index<VertexId> for CurvatureVector {
    type Output = f64;

    fn index(&self, v: VertexId) -> &f64 {
        &self.values[&v]
    }
}

/// Cotangent weight `1/2 (cot a + cot b)` per interior edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CotWeights {
    values: BTreeMap<Edge, f64>,
}

impl CotWeights {
    pub fn get(&self, e: Edge) -> Option<f64> {
        self.values.get(&e).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.values.iter().map(|(e, w)| (*e, *w))
    }

    pub fn min(&self) -> f64 {
        self.values.values().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Index<Edge> for CotWeights {
    type Output = f64;

    fn index(&self, e: Edge) -> &f64 {
        &self.values[&e]
    }
}

pub fn curvature_vector(tri: &Triangulation, l: &PLMetric) -> Result<CurvatureVector, GeomError> {
    Ok(corner_angles(tri, l)?.curvature(tri))
}

pub fn cot_weights(tri: &Triangulation, l: &PLMetric) -> Result<CotWeights, GeomError> {
    Ok(corner_angles(tri, l)?.cot_weights(tri))
}

/// Minimum over interior edges of `pi` minus the opposite-angle sum.
/// `+inf` when there is no interior edge.
pub fn delaunay_margin(tri: &Triangulation, l: &PLMetric) -> Result<f64, GeomError> {
    Ok(corner_angles(tri, l)?
        .edge_delaunay_margins(tri)
        .values()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// Delaunay in the angle form, with cocircular edges counted as Delaunay.
pub fn is_delaunay(tri: &Triangulation, l: &PLMetric) -> Result<bool, GeomError> {
    Ok(delaunay_margin(tri, l)? >= -tol::DELAUNAY)
}

/// Smallest corner angle.
pub fn nondegeneracy_margin(tri: &Triangulation, l: &PLMetric) -> Result<f64, GeomError> {
    Ok(corner_angles(tri, l)?.min_angle())
}

/// `pi/2` minus the largest corner angle.
pub fn acuteness_margin(tri: &Triangulation, l: &PLMetric) -> Result<f64, GeomError> {
    Ok(PI / 2.0 - corner_angles(tri, l)?.max_angle())
}

/// `l'_ij = exp((u_i + u_j)/2) * l_ij`.
pub fn apply_conformal(
    tri: &Triangulation,
    l: &PLMetric,
    u: &ConformalFactor,
) -> Result<PLMetric, GeomError> {
    let scaled = scale_lengths(tri, l, u)?;
    for f in tri.faces() {
        let [a, b, c] = scaled.face_lengths(f);
        if !strict_triangle(a, b, c) {
            return Err(GeomError::TriangleInequalityViolated { face: *f });
        }
    }
    Ok(scaled)
}

pub(crate) fn scale_lengths(
    tri: &Triangulation,
    l: &PLMetric,
    u: &ConformalFactor,
) -> Result<PLMetric, GeomError> {
    let mut lengths = BTreeMap::new();
    for e in tri.edges() {
        let (a, b) = e.endpoints();
        let ua = u.get(a).ok_or(GeomError::MissingVertex(a))?;
        let ub = u.get(b).ok_or(GeomError::MissingVertex(b))?;
        let le = l.get(a, b).ok_or(GeomError::MissingEdge(e))?;
        lengths.insert(e, ((ua + ub) / 2.0).exp() * le);
    }
    Ok(PLMetric::from_map_unchecked(lengths))
}

/// Solves `u_i + u_j = log_ratio(e)` face by face and checks the result on
/// every edge. Shared by the Euclidean and hyperbolic factor extraction.
pub(crate) fn factor_from_log_ratios(
    tri: &Triangulation,
    log_ratio: impl Fn(Edge) -> f64,
) -> Result<ConformalFactor, GeomError> {
    let ratios: BTreeMap<Edge, f64> = tri.edges().map(|e| (e, log_ratio(e))).collect();
    let mut sums: BTreeMap<VertexId, (f64, usize)> = BTreeMap::new();
    for &[i, j, k] in tri.faces() {
        let (aij, ajk, aki) = (
            ratios[&Edge::new(i, j)],
            ratios[&Edge::new(j, k)],
            ratios[&Edge::new(k, i)],
        );
        for (v, x) in [
            (i, aij + aki - ajk),
            (j, aij + ajk - aki),
            (k, ajk + aki - aij),
        ] {
            let entry = sums.entry(v).or_insert((0.0, 0));
            entry.0 += x / 2.0;
            entry.1 += 1;
        }
    }
    let u: BTreeMap<VertexId, f64> = sums
        .into_iter()
        .map(|(v, (s, n))| (v, s / n as f64))
        .collect();
    let mut worst: Option<(Edge, f64)> = None;
    for (e, a) in &ratios {
        let (i, j) = e.endpoints();
        let residual = (u[&i] + u[&j] - a).abs();
        if !residual.is_finite() || worst.is_none_or(|(_, r)| residual > r) {
            worst = Some((*e, residual));
        }
    }
    if let Some((edge, residual)) = worst {
        if !(residual <= tol::CONFORMAL) {
            return Err(GeomError::NotConformal { edge, residual });
        }
    }
    ConformalFactor::new(u)
}

/// The factor `u` with `l2 = u * l`, if the two metrics are conformal.
pub fn conformal_factor_between(
    tri: &Triangulation,
    l: &PLMetric,
    l2: &PLMetric,
) -> Result<ConformalFactor, GeomError> {
    l.validate(tri)?;
    l2.validate(tri)?;
    factor_from_log_ratios(tri, |e| 2.0 * (l2.length(e) / l.length(e)).ln())
}

/// Edge lengths `|z_i - z_j|` of a drawing.
pub fn induced_metric(tri: &Triangulation, coords: &PlanarCoords) -> Result<PLMetric, GeomError> {
    coords.covers(tri)?;
    for (fi, f) in tri.faces().iter().enumerate() {
        let [a, b, c] = [coords[f[0]], coords[f[1]], coords[f[2]]];
        let scale = (a - b).norm().max((b - c).norm()).max((c - a).norm());
        if signed_area(a, b, c).abs() <= tol::DEGENERATE_AREA_REL * scale * scale {
            return Err(GeomError::DegenerateFace(fi));
        }
    }
    let lengths = tri
        .edges()
        .map(|e| {
            let (a, b) = e.endpoints();
            (e, (coords[a] - coords[b]).norm())
        })
        .collect();
    PLMetric::new(tri, lengths)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbeddingFailure {
    MissingVertex,
    NonPositiveArea,
    AngleSum,
    BoundaryNotSimple,
    EdgeCrossing,
}

/// Outcome of [`is_geodesic_embedding`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub embedded: bool,
    pub failure: Option<EmbeddingFailure>,
    /// Smallest face area, normalized by the squared longest edge.
    pub min_area_ratio: f64,
    pub max_angle_sum_error: f64,
    pub boundary_simple: bool,
    /// First pair of crossing edges found in exhaustive mode.
    pub crossing: Option<(Edge, Edge)>,
    pub witness: Vec<VertexId>,
}

/// Local embedding test: positive face areas, angle sum `2pi` around every
/// interior vertex and a simple boundary polygon. With `exhaustive`, every
/// pair of vertex-disjoint edges is also tested for intersection.
pub fn is_geodesic_embedding(
    tri: &Triangulation,
    coords: &PlanarCoords,
    exhaustive: bool,
) -> EmbeddingReport {
    let mut report = EmbeddingReport {
        embedded: true,
        failure: None,
        min_area_ratio: f64::INFINITY,
        max_angle_sum_error: 0.0,
        boundary_simple: true,
        crossing: None,
        witness: Vec::new(),
    };
    let fail = |r: &mut EmbeddingReport, why: EmbeddingFailure, witness: Vec<VertexId>| {
        if r.embedded {
            r.embedded = false;
            r.failure = Some(why);
            r.witness = witness;
        }
    };
    if let Err(GeomError::MissingVertex(v)) = coords.covers(tri) {
        fail(&mut report, EmbeddingFailure::MissingVertex, vec![v]);
        return report;
    }

    let scale = tri
        .edges()
        .map(|e| {
            let (a, b) = e.endpoints();
            (coords[a] - coords[b]).norm()
        })
        .fold(0.0, f64::max);
    let mut angle_at = vec![[0.0f64; 3]; tri.num_faces()];
    for (fi, f) in tri.faces().iter().enumerate() {
        let z = [coords[f[0]], coords[f[1]], coords[f[2]]];
        let ratio = signed_area(z[0], z[1], z[2]) / (scale * scale);
        report.min_area_ratio = report.min_area_ratio.min(ratio);
        if !(ratio > tol::DEGENERATE_AREA_REL) {
            fail(&mut report, EmbeddingFailure::NonPositiveArea, f.to_vec());
        }
        for k in 0..3 {
            let (u, w) = (z[(k + 1) % 3] - z[k], z[(k + 2) % 3] - z[k]);
            angle_at[fi][k] = cross(u, w).abs().atan2(u.re * w.re + u.im * w.im);
        }
    }
    for v in tri.interior_vertices() {
        let sum: f64 = tri
            .faces_around(v)
            .iter()
            .map(|&f| {
                let k = tri.face(f).iter().position(|w| *w == v).unwrap();
                angle_at[f][k]
            })
            .sum();
        let err = (sum - 2.0 * PI).abs();
        report.max_angle_sum_error = report.max_angle_sum_error.max(err);
        if err > tol::EMBED_ANGLE {
            fail(&mut report, EmbeddingFailure::AngleSum, vec![v]);
        }
    }

    let cycle = tri.boundary_cycle();
    let n = cycle.len();
    'outer: for a in 0..n {
        for b in a + 1..n {
            if b == a + 1 || (a == 0 && b == n - 1) {
                continue;
            }
            let (p1, p2) = (coords[cycle[a]], coords[cycle[(a + 1) % n]]);
            let (q1, q2) = (coords[cycle[b]], coords[cycle[(b + 1) % n]]);
            if segments_intersect(p1, p2, q1, q2) {
                report.boundary_simple = false;
                fail(
                    &mut report,
                    EmbeddingFailure::BoundaryNotSimple,
                    vec![cycle[a], cycle[(a + 1) % n], cycle[b], cycle[(b + 1) % n]],
                );
                break 'outer;
            }
        }
    }

    if exhaustive {
        let edges: Vec<Edge> = tri.edges().collect();
        'pairs: for (x, e) in edges.iter().enumerate() {
            for f in &edges[x + 1..] {
                let ((a, b), (c, d)) = (e.endpoints(), f.endpoints());
                if a == c || a == d || b == c || b == d {
                    continue;
                }
                if segments_intersect(coords[a], coords[b], coords[c], coords[d]) {
                    report.crossing = Some((*e, *f));
                    fail(
                        &mut report,
                        EmbeddingFailure::EdgeCrossing,
                        vec![a, b, c, d],
                    );
                    break 'pairs;
                }
            }
        }
    }
    report
}

/// Circumcircle-form Delaunay test on a drawing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaunayReport {
    pub delaunay: bool,
    /// Minimum of [`in_circle_margin`] over interior edges (`+inf` if none).
    pub min_margin: f64,
    pub margins: BTreeMap<Edge, f64>,
    /// Edges whose margin lies within the cocircular band.
    pub cocircular: Vec<Edge>,
    pub witness: Option<Edge>,
}

/// For every interior edge, tests the vertex opposite in the second face
/// against the circumcircle of the first face.
pub fn circumcircle_delaunay(
    tri: &Triangulation,
    coords: &PlanarCoords,
) -> Result<DelaunayReport, GeomError> {
    coords.covers(tri)?;
    let mut margins = BTreeMap::new();
    for e in tri.interior_edges() {
        let faces = tri.edge_faces(e);
        let opp = tri.opposite_vertices(e);
        let f = tri.face(faces[0]);
        let m = in_circle_margin(coords[f[0]], coords[f[1]], coords[f[2]], coords[opp[1]]);
        margins.insert(e, m);
    }
    let (witness, min_margin) = margins
        .iter()
        .fold((None, f64::INFINITY), |(w, m), (e, x)| {
            if *x < m {
                (Some(*e), *x)
            } else {
                (w, m)
            }
        });
    let cocircular = margins
        .iter()
        .filter(|(_, m)| m.abs() <= tol::DELAUNAY)
        .map(|(e, _)| *e)
        .collect();
    let delaunay = min_margin >= -tol::DELAUNAY;
    Ok(DelaunayReport {
        delaunay,
        min_margin,
        margins,
        cocircular,
        witness: if delaunay { None } else { witness },
    })
}

/// Lays out a flat metric in the plane, breadth-first over faces from `root`.
/// `faces[root][0]` lands on the origin and `faces[root][1]` on the positive
/// real axis.
pub fn develop_flat_metric(
    tri: &Triangulation,
    l: &PLMetric,
    root: FaceId,
) -> Result<PlanarCoords, GeomError> {
    let angles = corner_angles(tri, l)?;
    let curvature = angles.curvature(tri);
    for v in tri.interior_vertices() {
        if curvature[v].abs() > tol::FLAT {
            return Err(GeomError::NotFlat {
                vertex: v,
                curvature: curvature[v],
            });
        }
    }
    let tolerance = tol::DEVELOP_REL * l.max_length();
    let mut pos: BTreeMap<VertexId, Complex64> = BTreeMap::new();
    let [a, b, c] = tri.face(root);
    pos.insert(a, Complex64::new(0.0, 0.0));
    pos.insert(b, Complex64::new(l.length(Edge::new(a, b)), 0.0));
    pos.insert(
        c,
        Complex64::from_polar(l.length(Edge::new(a, c)), angles.face(root)[0]),
    );

    let mut visited = vec![false; tri.num_faces()];
    visited[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(f) = queue.pop_front() {
        let face = tri.face(f);
        for k in 0..3 {
            let e = Edge::new(face[k], face[(k + 1) % 3]);
            for &g in tri.edge_faces(e) {
                if visited[g] {
                    continue;
                }
                visited[g] = true;
                queue.push_back(g);
                // Rotate g so its shared edge comes first: g = (p, q, r).
                let gf = tri.face(g);
                let s = (0..3).find(|&s| !e.contains(gf[(s + 2) % 3])).unwrap();
                let (p, q, r) = (gf[s], gf[(s + 1) % 3], gf[(s + 2) % 3]);
                let (zp, zq) = (pos[&p], pos[&q]);
                let dir = (zq - zp) / (zq - zp).norm();
                let zr =
                    zp + dir * Complex64::from_polar(l.length(Edge::new(p, r)), angles.face(g)[s]);
                match pos.get(&r) {
                    Some(&old) => {
                        let discrepancy = (old - zr).norm();
                        if discrepancy > tolerance {
                            return Err(GeomError::InconsistentDevelopment {
                                vertex: r,
                                discrepancy,
                            });
                        }
                    }
                    None => {
                        pos.insert(r, zr);
                    }
                }
            }
        }
    }
    Ok(PlanarCoords::new(pos))
}
