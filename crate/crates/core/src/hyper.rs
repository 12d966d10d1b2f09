//! Hyperbolic PL metrics and Poincaré-disk geometry.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::Index;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::euclid::{
    circumcircle_delaunay, corner_angles, factor_from_log_ratios, induced_metric,
    is_geodesic_embedding, triangle_ok, ConformalFactor, CornerAngles, CurvatureVector,
    DelaunayReport, GeomError, PLMetric, PlanarCoords,
};
use crate::mesh::{Edge, OneRing, Triangulation, VertexId};
use crate::tol;

fn check_disk(z: Complex64) -> Result<(), GeomError> {
    let modulus = z.norm();
    if modulus < 1.0 {
        Ok(())
    } else {
        Err(GeomError::OutOfDisk { modulus })
    }
}

/// Poincaré-disk distance, via `sinh^2(d/2) = |z-w|^2 / ((1-|z|^2)(1-|w|^2))`.
pub fn hyp_distance(z: Complex64, w: Complex64) -> Result<f64, GeomError> {
    check_disk(z)?;
    check_disk(w)?;
    let s = (z - w).norm() / ((1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr())).sqrt();
    Ok(2.0 * s.asinh())
}

/// The disk automorphism `z -> (z - z0) / (1 - conj(z0) z)`.
pub fn mobius_to_origin(z0: Complex64, z: Complex64) -> Result<Complex64, GeomError> {
    check_disk(z0)?;
    check_disk(z)?;
    Ok((z - z0) / (1.0 - z0.conj() * z))
}

/// Tangent vector at a base point, identified with a complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogVector {
    pub value: Complex64,
}

impl LogVector {
    pub fn arg(&self) -> f64 {
        self.value.arg()
    }

    pub fn norm(&self) -> f64 {
        self.value.norm()
    }
}

/// Inverse exponential map at `z0`.
pub fn log_map(z0: Complex64, z: Complex64) -> Result<LogVector, GeomError> {
    let w = mobius_to_origin(z0, z)?;
    if w == Complex64::new(0.0, 0.0) {
        return Err(GeomError::CoincidentPoints);
    }
    let d = hyp_distance(z0, z)?;
    Ok(LogVector {
        value: w / w.norm() * d,
    })
}

/// Vertex positions strictly inside the unit disk.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiskCoords {
    positions: BTreeMap<VertexId, Complex64>,
}

impl DiskCoords {
    pub fn new(positions: BTreeMap<VertexId, Complex64>) -> Result<Self, GeomError> {
        for z in positions.values() {
            check_disk(*z)?;
        }
        Ok(DiskCoords { positions })
    }

    pub fn from_planar(coords: &PlanarCoords) -> Result<Self, GeomError> {
        Self::new(coords.iter().collect())
    }

    pub fn to_planar(&self) -> PlanarCoords {
        PlanarCoords::new(self.positions.clone())
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

    /// Applies [`mobius_to_origin`] with base `z0` to every position.
    pub fn normalized_at(&self, z0: Complex64) -> Result<DiskCoords, GeomError> {
        let positions = self
            .positions
            .iter()
            .map(|(v, z)| Ok((*v, mobius_to_origin(z0, *z)?)))
            .collect::<Result<_, GeomError>>()?;
        Ok(DiskCoords { positions })
    }
}

impl Index<VertexId> for DiskCoords {
    type Output = Complex64;

    fn index(&self, v: VertexId) -> &Complex64 {
        &self.positions[&v]
    }
}

/// Hyperbolic edge lengths. Validity is the same side-inequality test as the
/// Euclidean case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypPLMetric(PLMetric);

impl HypPLMetric {
    pub fn new(tri: &Triangulation, lengths: BTreeMap<Edge, f64>) -> Result<Self, GeomError> {
        Ok(HypPLMetric(PLMetric::new(tri, lengths)?))
    }

    pub fn from_fn(tri: &Triangulation, f: impl FnMut(Edge) -> f64) -> Result<Self, GeomError> {
        Ok(HypPLMetric(PLMetric::from_fn(tri, f)?))
    }

    pub fn get(&self, a: VertexId, b: VertexId) -> Option<f64> {
        self.0.get(a, b)
    }

    pub fn length(&self, e: Edge) -> f64 {
        self.0.length(e)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.0.iter()
    }

    pub fn as_lengths(&self) -> &PLMetric {
        &self.0
    }
}

/// Hyperbolic angle between sides `a` and `b` opposite side `c`, from the
/// half-angle form `tan(C/2)^2 = sinh(s-a) sinh(s-b) / (sinh s sinh(s-c))`.
pub fn hyp_corner_angle(a: f64, b: f64, c: f64) -> Result<f64, GeomError> {
    if !triangle_ok(a, b, c) {
        return Err(GeomError::InvalidTriangle { sides: [a, b, c] });
    }
    let s = (a + b + c) / 2.0;
    let num = ((s - a).max(0.0)).sinh() * ((s - b).max(0.0)).sinh();
    let den = s.sinh() * ((s - c).max(0.0)).sinh();
    Ok(2.0 * num.sqrt().atan2(den.sqrt()))
}

pub fn hyp_corner_angles(tri: &Triangulation, lh: &HypPLMetric) -> Result<CornerAngles, GeomError> {
    lh.0.validate(tri)?;
    CornerAngles::from_faces(tri, |f| lh.0.face_lengths(f), hyp_corner_angle)
}

pub fn hyp_curvature_vector(
    tri: &Triangulation,
    lh: &HypPLMetric,
) -> Result<CurvatureVector, GeomError> {
    Ok(hyp_corner_angles(tri, lh)?.curvature(tri))
}

/// Hyperbolic distances along every edge.
pub fn induced_hyp_metric(
    tri: &Triangulation,
    coords: &DiskCoords,
) -> Result<HypPLMetric, GeomError> {
    let mut lengths = BTreeMap::new();
    for e in tri.edges() {
        let (a, b) = e.endpoints();
        let za = coords.get(a).ok_or(GeomError::MissingVertex(a))?;
        let zb = coords.get(b).ok_or(GeomError::MissingVertex(b))?;
        lengths.insert(e, hyp_distance(za, zb)?);
    }
    HypPLMetric::new(tri, lengths)
}

/// `sinh(l'/2) = exp((u_i + u_j)/2) sinh(l/2)`.
pub fn apply_hyp_conformal(
    tri: &Triangulation,
    lh: &HypPLMetric,
    uh: &ConformalFactor,
) -> Result<HypPLMetric, GeomError> {
    let mut lengths = BTreeMap::new();
    for e in tri.edges() {
        let (a, b) = e.endpoints();
        let ua = uh.get(a).ok_or(GeomError::MissingVertex(a))?;
        let ub = uh.get(b).ok_or(GeomError::MissingVertex(b))?;
        let l = lh.get(a, b).ok_or(GeomError::MissingEdge(e))?;
        lengths.insert(
            e,
            2.0 * (((ua + ub) / 2.0).exp() * (l / 2.0).sinh()).asinh(),
        );
    }
    let out = PLMetric::from_map_unchecked(lengths);
    for f in tri.faces() {
        let [a, b, c] = out.face_lengths(f);
        if !(a < b + c && b < a + c && c < a + b) {
            return Err(GeomError::TriangleInequalityViolated { face: *f });
        }
    }
    Ok(HypPLMetric(out))
}

/// The hyperbolic factor relating two hyperbolic metrics, if one exists.
pub fn hyp_factor_between(
    tri: &Triangulation,
    lh: &HypPLMetric,
    lh2: &HypPLMetric,
) -> Result<ConformalFactor, GeomError> {
    lh.0.validate(tri)?;
    lh2.0.validate(tri)?;
    factor_from_log_ratios(tri, |e| {
        2.0 * ((lh2.length(e) / 2.0).sinh().ln() - (lh.length(e) / 2.0).sinh().ln())
    })
}

/// Delaunay test on disk coordinates with Euclidean circumcircles.
pub fn is_hyp_delaunay(
    tri: &Triangulation,
    coords: &DiskCoords,
) -> Result<DelaunayReport, GeomError> {
    circumcircle_delaunay(tri, &coords.to_planar())
}

/// Which ring edges the length hypothesis applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HypothesisEdges {
    /// Only the spokes from the center.
    #[default]
    CenterIncident,
    /// Every edge of the ring.
    AllRingEdges,
}

/// Margins of the two claims behind the hyperbolic embedding of a 1-ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    /// `arg(v(z_{k+1}) / v(z_k))` for consecutive neighbors, in `(-pi, pi]`.
    pub args: Vec<f64>,
    /// `min_k min(arg_k, pi - arg_k)`; claim 1 holds when this is positive.
    pub min_arg_margin: f64,
    pub arg_sum: f64,
    /// `|arg_sum - 2pi|`.
    pub sum_error: f64,
    pub claim1: bool,
    pub claim2: bool,
    /// Hyperbolic angle sum at the center for the induced hyperbolic metric.
    pub hyp_angle_sum: Option<f64>,
    /// Smallest ratio slack `1 - l / ((1-|z0|^2) sin eps)` over the checked edges.
    pub hypothesis_margin: f64,
}

/// Evaluates claims (1) and (2) for a center `z0` and its neighbors in
/// counterclockwise order.
pub fn check_hyp_emb_claims(
    z0: Complex64,
    neighbors: &[Complex64],
) -> Result<ClaimReport, GeomError> {
    let logs = neighbors
        .iter()
        .map(|z| log_map(z0, *z))
        .collect::<Result<Vec<_>, _>>()?;
    let n = logs.len();
    let args: Vec<f64> = (0..n)
        .map(|k| (logs[(k + 1) % n].value * logs[k].value.conj()).arg())
        .collect();
    let min_arg_margin = args
        .iter()
        .map(|a| a.min(PI - a))
        .fold(f64::INFINITY, f64::min);
    let arg_sum: f64 = args.iter().sum();
    let sum_error = (arg_sum - 2.0 * PI).abs();
    Ok(ClaimReport {
        claim1: min_arg_margin > -tol::CLAIM_ARG_SLACK,
        claim2: sum_error <= tol::CLAIM_SUM,
        args,
        min_arg_margin,
        arg_sum,
        sum_error,
        hyp_angle_sum: None,
        hypothesis_margin: f64::NAN,
    })
}

/// Checks the hypothesis of the 1-ring lemma: a Euclidean geodesic embedding
/// with corner angles at least `eps` and short edges near the center.
/// Returns the smallest relative length slack.
pub fn check_hyp_emb_hypothesis(
    ring: &OneRing,
    coords: &DiskCoords,
    eps: f64,
    edges: HypothesisEdges,
) -> Result<f64, GeomError> {
    let tri = ring.triangulation();
    let planar = coords.to_planar().restrict(tri);
    planar.covers(tri)?;
    let report = is_geodesic_embedding(tri, &planar, false);
    if !report.embedded {
        return Err(GeomError::HypothesisViolated(format!(
            "ring is not a geodesic embedding ({:?})",
            report.failure
        )));
    }
    let l = induced_metric(tri, &planar)?;
    let min_angle = corner_angles(tri, &l)?.min_angle();
    if min_angle < eps {
        return Err(GeomError::HypothesisViolated(format!(
            "corner angle {min_angle} is below eps = {eps}"
        )));
    }
    let z0 = coords[ring.center()];
    let bound = (1.0 - z0.norm_sqr()) * eps.sin();
    let mut margin = f64::INFINITY;
    for e in tri.edges() {
        if edges == HypothesisEdges::CenterIncident && !e.contains(ring.center()) {
            continue;
        }
        let length = l.length(e);
        if !(length < bound) {
            return Err(GeomError::HypothesisViolated(format!(
                "edge {e} has length {length}, bound is {bound}"
            )));
        }
        margin = margin.min(1.0 - length / bound);
    }
    Ok(margin)
}

/// Reinterprets a 1-ring drawing in the disk as a hyperbolic geodesic
/// embedding, after checking the hypothesis and both claims.
pub fn induce_hyperbolic_embedding(
    ring: &OneRing,
    coords: &DiskCoords,
    eps: f64,
    edges: HypothesisEdges,
) -> Result<(DiskCoords, ClaimReport), GeomError> {
    let hypothesis_margin = check_hyp_emb_hypothesis(ring, coords, eps, edges)?;
    let tri = ring.triangulation();
    let z0 = coords[ring.center()];
    let neighbors: Vec<Complex64> = ring.neighbors().iter().map(|v| coords[*v]).collect();
    let mut report = check_hyp_emb_claims(z0, &neighbors)?;
    report.hypothesis_margin = hypothesis_margin;
    if !report.claim1 {
        return Err(GeomError::ClaimFailed {
            claim: 1,
            detail: format!("arg margin {:e}", report.min_arg_margin),
        });
    }
    if !report.claim2 {
        return Err(GeomError::ClaimFailed {
            claim: 2,
            detail: format!(
                "arg sum {} differs from 2pi by {:e}",
                report.arg_sum, report.sum_error
            ),
        });
    }
    let restricted = DiskCoords::new(coords.to_planar().restrict(tri).iter().collect())?;
    let lh = induced_hyp_metric(tri, &restricted)?;
    report.hyp_angle_sum = Some(hyp_corner_angles(tri, &lh)?.angle_sum(tri, ring.center()));
    Ok((restricted, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    fn hex_ring(center: Complex64, spoke: f64) -> (OneRing, DiskCoords) {
        let tri = Triangulation::from_indices(&[
            [0, 1, 2],
            [0, 2, 3],
            [0, 3, 4],
            [0, 4, 5],
            [0, 5, 6],
            [0, 6, 1],
        ])
        .unwrap();
        let ring = tri.one_ring(v(0)).unwrap();
        let mut pos = BTreeMap::from([(v(0), center)]);
        for k in 0..6 {
            pos.insert(
                v(k + 1),
                center + Complex64::from_polar(spoke, k as f64 * PI / 3.0),
            );
        }
        (ring, DiskCoords::new(pos).unwrap())
    }

    fn law_of_cosines(a: f64, b: f64, c: f64) -> f64 {
        ((a.cosh() * b.cosh() - c.cosh()) / (a.sinh() * b.sinh()))
            .clamp(-1.0, 1.0)
            .acos()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(hyp_distance(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            hyp_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap(),
            3f64.ln(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(2.0 * 0.5f64.atanh(), 3f64.ln(), epsilon = 1e-14);
        let (z, w) = (c(0.3, -0.2), c(-0.5, 0.6));
        let artanh = 2.0 * ((z - w) / (1.0 - z.conj() * w)).norm().atanh();
        assert_abs_diff_eq!(hyp_distance(z, w).unwrap(), artanh, epsilon = 1e-13);
        assert_eq!(hyp_distance(z, w).unwrap(), hyp_distance(w, z).unwrap());
        assert!(matches!(
            hyp_distance(c(1.0, 0.0), z),
            Err(GeomError::OutOfDisk { .. })
        ));
    }

    #[test]
    fn mobius_examples() {
        let z = c(0.3, 0.4);
        assert_eq!(mobius_to_origin(c(0.0, 0.0), z).unwrap(), z);
        assert_abs_diff_eq!(mobius_to_origin(z, z).unwrap().norm(), 0.0);
        let (a, b) = (c(-0.2, 0.7), c(0.5, 0.1));
        let before = hyp_distance(a, b).unwrap();
        let after = hyp_distance(
            mobius_to_origin(z, a).unwrap(),
            mobius_to_origin(z, b).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(before, after, epsilon = 1e-12);
    }

    #[test]
    fn log_map_examples() {
        let v1 = log_map(c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(v1.value.re, 3f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(v1.value.im, 0.0);
        let v2 = log_map(c(0.0, 0.0), c(0.0, 0.5)).unwrap();
        assert_abs_diff_eq!(v2.value.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v2.norm(), 3f64.ln(), epsilon = 1e-14);
        let (z0, z) = (c(0.4, -0.1), c(-0.3, 0.5));
        let v3 = log_map(z0, z).unwrap();
        assert_abs_diff_eq!(
            v3.arg(),
            ((z - z0) / (1.0 - z0.conj() * z)).arg(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(v3.norm(), hyp_distance(z0, z).unwrap(), epsilon = 1e-14);
        assert_eq!(log_map(z, z).unwrap_err(), GeomError::CoincidentPoints);
    }

    #[test]
    fn corner_angle_examples() {
        let eq = hyp_corner_angle(1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(eq, law_of_cosines(1.0, 1.0, 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(eq, 0.91880, epsilon = 1e-5);
        assert!(eq < PI / 3.0);
        assert!(eq < PI / 3.0);
        assert_abs_diff_eq!(
            hyp_corner_angle(1e-6, 1e-6, 1e-6).unwrap(),
            PI / 3.0,
            epsilon = 1e-9
        );
        for (a, b, cc) in [(0.3, 0.7, 0.8), (2.0, 3.0, 4.5), (0.01, 0.02, 0.025)] {
            let sum = hyp_corner_angle(b, cc, a).unwrap()
                + hyp_corner_angle(cc, a, b).unwrap()
                + hyp_corner_angle(a, b, cc).unwrap();
            assert!(sum < PI);
            assert_abs_diff_eq!(
                hyp_corner_angle(a, b, cc).unwrap(),
                law_of_cosines(a, b, cc),
                epsilon = 1e-9
            );
        }
        assert!(hyp_corner_angle(1.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn curvature_examples() {
        let (ring, coords) = hex_ring(c(0.0, 0.0), 0.3);
        let tri = ring.triangulation();
        let unit = HypPLMetric::from_fn(tri, |_| 1.0).unwrap();
        let k = hyp_curvature_vector(tri, &unit).unwrap();
        assert_abs_diff_eq!(
            k[v(0)],
            2.0 * PI - 6.0 * law_of_cosines(1.0, 1.0, 1.0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(k[v(0)], 0.77040, epsilon = 1e-5);
        assert!(k[v(0)] > 0.0);

        let induced = induced_hyp_metric(tri, &coords).unwrap();
        assert_abs_diff_eq!(
            hyp_curvature_vector(tri, &induced).unwrap()[v(0)],
            0.0,
            epsilon = 1e-9
        );
        let moved = induced_hyp_metric(tri, &coords.normalized_at(c(-0.6, 0.2)).unwrap()).unwrap();
        assert_abs_diff_eq!(
            hyp_curvature_vector(tri, &moved).unwrap()[v(0)],
            0.0,
            epsilon = 1e-9
        );

        let tiny = HypPLMetric::from_fn(tri, |_| 1e-5).unwrap();
        assert_abs_diff_eq!(
            hyp_curvature_vector(tri, &tiny).unwrap()[v(0)],
            0.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn induced_metric_examples() {
        let tri = Triangulation::from_indices(&[[0, 1, 2]]).unwrap();
        let coords = DiskCoords::new(BTreeMap::from([
            (v(0), c(0.0, 0.0)),
            (v(1), c(0.5, 0.0)),
            (v(2), c(0.0, 0.5)),
        ]))
        .unwrap();
        let lh = induced_hyp_metric(&tri, &coords).unwrap();
        assert_abs_diff_eq!(lh.get(v(0), v(1)).unwrap(), 3f64.ln(), epsilon = 1e-14);
        let moved = coords.normalized_at(c(0.2, -0.3)).unwrap();
        let lh2 = induced_hyp_metric(&tri, &moved).unwrap();
        for (e, x) in lh.iter() {
            assert_abs_diff_eq!(x, lh2.length(e), epsilon = 1e-12);
        }
        let rim = DiskCoords::new(BTreeMap::from([
            (v(0), c(0.0, 0.0)),
            (v(1), c(0.999999, 0.0)),
            (v(2), c(0.0, 0.5)),
        ]))
        .unwrap();
        assert!(
            induced_hyp_metric(&tri, &rim)
                .unwrap()
                .get(v(0), v(1))
                .unwrap()
                > 14.0
        );
        assert!(DiskCoords::new(BTreeMap::from([(v(0), c(1.0, 0.0))])).is_err());
    }

    #[test]
    fn hyp_conformal_examples() {
        let tri = Triangulation::from_indices(&[[0, 1, 2]]).unwrap();
        let base = 2.0 * 1f64.asinh();
        let lh = HypPLMetric::from_fn(&tri, |_| base).unwrap();
        assert_eq!(
            apply_hyp_conformal(&tri, &lh, &ConformalFactor::zeros(&tri)).unwrap(),
            lh
        );
        let u = ConformalFactor::constant(&tri, 2f64.ln());
        let out = apply_hyp_conformal(&tri, &lh, &u).unwrap();
        assert_abs_diff_eq!(
            out.get(v(0), v(1)).unwrap(),
            2.0 * 2f64.asinh(),
            epsilon = 1e-14
        );

        let u = ConformalFactor::new(BTreeMap::from([(v(0), 0.1), (v(1), -0.2), (v(2), 0.05)]))
            .unwrap();
        let out = apply_hyp_conformal(&tri, &lh, &u).unwrap();
        let back = hyp_factor_between(&tri, &lh, &out).unwrap();
        assert!(back.max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn hyp_factor_inconsistent() {
        let tri = Triangulation::from_indices(&[[0, 1, 2], [0, 2, 3]]).unwrap();
        let lh = HypPLMetric::from_fn(&tri, |e| if e == Edge::new(v(0), v(2)) { 1.2 } else { 1.0 })
            .unwrap();
        assert_eq!(hyp_factor_between(&tri, &lh, &lh).unwrap().sup_norm(), 0.0);
        let lh2 = HypPLMetric::from_fn(&tri, |e| match e {
            e if e == Edge::new(v(0), v(2)) => 1.2,
            e if e == Edge::new(v(0), v(1)) => 1.1,
            _ => 1.0,
        })
        .unwrap();
        assert!(matches!(
            hyp_factor_between(&tri, &lh, &lh2),
            Err(GeomError::NotConformal { .. })
        ));
    }

    #[test]
    fn hyp_delaunay_examples() {
        let tri = Triangulation::from_indices(&[[0, 1, 2], [0, 2, 3]]).unwrap();
        let square = DiskCoords::new(BTreeMap::from([
            (v(0), c(-0.3, -0.3)),
            (v(1), c(0.3, -0.3)),
            (v(2), c(0.3, 0.3)),
            (v(3), c(-0.3, 0.3)),
        ]))
        .unwrap();
        let r = is_hyp_delaunay(&tri, &square).unwrap();
        assert!(r.delaunay);
        assert_abs_diff_eq!(r.min_margin, 0.0, epsilon = 1e-12);
        let pushed = DiskCoords::from_planar(&square.to_planar().map(|z| {
            if z == c(-0.3, 0.3) {
                c(0.0, 0.1)
            } else {
                z
            }
        }))
        .unwrap();
        assert!(!is_hyp_delaunay(&tri, &pushed).unwrap().delaunay);
    }

    #[test]
    fn lemma_examples() {
        let eps = PI / 6.0;
        let (ring, coords) = hex_ring(c(0.0, 0.0), 0.1);
        let (_, report) =
            induce_hyperbolic_embedding(&ring, &coords, eps, HypothesisEdges::CenterIncident)
                .unwrap();
        assert!(report.claim1 && report.claim2);
        assert_abs_diff_eq!(report.arg_sum, 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(report.hyp_angle_sum.unwrap(), 2.0 * PI, epsilon = 1e-9);

        // The same ring moved so its center lands at 0.5, then shrunk to fit
        // the rescaled bound.
        let z0 = c(0.5, 0.0);
        let spoke = 0.9 * 0.75 * eps.sin();
        let (ring, coords) = hex_ring(z0, spoke);
        let (_, report) =
            induce_hyperbolic_embedding(&ring, &coords, eps, HypothesisEdges::CenterIncident)
                .unwrap();
        assert!(report.min_arg_margin > 0.0);
        assert!(report.sum_error < 1e-9);
        assert_abs_diff_eq!(report.hyp_angle_sum.unwrap(), 2.0 * PI, epsilon = 1e-9);

        let (ring, coords) = hex_ring(z0, 0.75 * eps.sin() * 1.1);
        assert!(matches!(
            induce_hyperbolic_embedding(&ring, &coords, eps, HypothesisEdges::CenterIncident),
            Err(GeomError::HypothesisViolated(_))
        ));
        // Angles of the regular ring are exactly pi/3.
        let (ring, coords) = hex_ring(c(0.0, 0.0), 0.1);
        assert!(matches!(
            induce_hyperbolic_embedding(
                &ring,
                &coords,
                PI / 3.0 + 0.01,
                HypothesisEdges::CenterIncident
            ),
            Err(GeomError::HypothesisViolated(_))
        ));
    }

    #[test]
    fn strict_mode_checks_rim_edges() {
        // Spokes short enough but an elongated rim edge: the ring is a
        // distorted hexagon with one long rim edge.
        let tri = Triangulation::from_indices(&[[0, 1, 2], [0, 2, 3], [0, 3, 1]]).unwrap();
        let ring = tri.one_ring(v(0)).unwrap();
        let spoke = 0.45;
        let mut pos = BTreeMap::from([(v(0), c(0.0, 0.0))]);
        for k in 0..3 {
            pos.insert(
                v(k + 1),
                Complex64::from_polar(spoke, k as f64 * 2.0 * PI / 3.0),
            );
        }
        let coords = DiskCoords::new(pos).unwrap();
        let eps = PI / 6.0 - 0.01;
        assert!(
            check_hyp_emb_hypothesis(&ring, &coords, eps, HypothesisEdges::CenterIncident).is_ok()
        );
        assert!(
            check_hyp_emb_hypothesis(&ring, &coords, eps, HypothesisEdges::AllRingEdges).is_err()
        );
    }
}
