//! Factor conversions between the Euclidean and hyperbolic settings, the
//! curvature differential and a Newton solver for prescribed curvature.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::euclid::{
    apply_conformal, conformal_factor_between, corner_angles, induced_metric, ConformalFactor,
    CurvatureVector, GeomError, PLMetric,
};
use crate::hyper::{hyp_factor_between, induced_hyp_metric, DiskCoords};
use crate::mesh::{Edge, Triangulation, VertexId};
use crate::tol;

fn disk_log_ratio(a: &DiskCoords, b: &DiskCoords, v: VertexId) -> Result<f64, GeomError> {
    let za = a.get(v).ok_or(GeomError::MissingVertex(v))?;
    let zb = b.get(v).ok_or(GeomError::MissingVertex(v))?;
    Ok(((1.0 - za.norm_sqr()) / (1.0 - zb.norm_sqr())).ln())
}

/// `u^h_i = u_i + ln((1 - |z_i|^2) / (1 - |z'_i|^2))`.
pub fn factor_e2h(
    u: &ConformalFactor,
    a: &DiskCoords,
    b: &DiskCoords,
) -> Result<ConformalFactor, GeomError> {
    ConformalFactor::new(
        u.iter()
            .map(|(v, x)| Ok((v, x + disk_log_ratio(a, b, v)?)))
            .collect::<Result<_, GeomError>>()?,
    )
}

/// Inverse of [`factor_e2h`].
pub fn factor_h2e(
    uh: &ConformalFactor,
    a: &DiskCoords,
    b: &DiskCoords,
) -> Result<ConformalFactor, GeomError> {
    ConformalFactor::new(
        uh.iter()
            .map(|(v, x)| Ok((v, x - disk_log_ratio(a, b, v)?)))
            .collect::<Result<_, GeomError>>()?,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhconfReport {
    pub euclidean: ConformalFactor,
    pub hyperbolic: ConformalFactor,
    /// Sup-norm gap between `hyperbolic` and `factor_e2h(euclidean)`.
    pub discrepancy: f64,
    pub passed: bool,
}

/// Extracts both factors from two drawings in the disk and compares the
/// hyperbolic one with the conversion formula.
pub fn verify_ehconf(
    tri: &Triangulation,
    a: &DiskCoords,
    b: &DiskCoords,
) -> Result<EhconfReport, GeomError> {
    let (pa, pb) = (a.to_planar(), b.to_planar());
    let euclidean =
        conformal_factor_between(tri, &induced_metric(tri, &pa)?, &induced_metric(tri, &pb)?)?;
    let hyperbolic = hyp_factor_between(
        tri,
        &induced_hyp_metric(tri, a)?,
        &induced_hyp_metric(tri, b)?,
    )?;
    let predicted = factor_e2h(&euclidean, a, b)?;
    let discrepancy = hyperbolic.max_abs_diff(&predicted);
    Ok(EhconfReport {
        passed: discrepancy < tol::EHCONF,
        euclidean,
        hyperbolic,
        discrepancy,
    })
}

/// Sparse matrix with rows and columns labelled by vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: Vec<VertexId>,
    cols: Vec<VertexId>,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SparseMatrix {
    pub fn rows(&self) -> &[VertexId] {
        &self.rows
    }

    pub fn cols(&self) -> &[VertexId] {
        &self.cols
    }

    /// Entry at `(row, col)`; zero when structurally absent or unlabelled.
    pub fn get(&self, row: VertexId, col: VertexId) -> f64 {
        let r = self.rows.binary_search(&row);
        let c = self.cols.binary_search(&col);
        match (r, c) {
            (Ok(r), Ok(c)) => self.entries.get(&(r, c)).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.entries
            .iter()
            .map(|((r, c), x)| (self.rows[*r], self.cols[*c], *x))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows.len(), self.cols.len());
        for ((r, c), x) in &self.entries {
            m[(*r, *c)] = *x;
        }
        m
    }
}

fn differential(
    tri: &Triangulation,
    l: &PLMetric,
    u: &ConformalFactor,
    all_columns: bool,
) -> Result<SparseMatrix, GeomError> {
    let scaled = apply_conformal(tri, l, u)?;
    let weights = corner_angles(tri, &scaled)?.cot_weights(tri);
    let rows = tri.interior_vertices();
    let cols = if all_columns {
        tri.vertices().to_vec()
    } else {
        rows.clone()
    };
    let mut entries = BTreeMap::new();
    for (r, &i) in rows.iter().enumerate() {
        let ci = cols.binary_search(&i).expect("interior vertex is a column");
        let mut diagonal = 0.0;
        for &j in tri.neighbors(i) {
            let w = weights[Edge::new(i, j)];
            diagonal += w;
            if let Ok(cj) = cols.binary_search(&j) {
                entries.insert((r, cj), -w);
            }
        }
        entries.insert((r, ci), diagonal);
    }
    Ok(SparseMatrix {
        rows,
        cols,
        entries,
    })
}

/// `dK_i/du_j` over interior rows and interior columns, evaluated on `u * l`.
pub fn curvature_jacobian(
    tri: &Triangulation,
    l: &PLMetric,
    u: &ConformalFactor,
) -> Result<SparseMatrix, GeomError> {
    differential(tri, l, u, false)
}

/// `dK_i/du_j` over interior rows and every vertex column.
pub fn curvature_differential(
    tri: &Triangulation,
    l: &PLMetric,
    u: &ConformalFactor,
) -> Result<SparseMatrix, GeomError> {
    differential(tri, l, u, true)
}

/// Target curvature at interior vertices and fixed factor values on the
/// boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTarget {
    pub interior: BTreeMap<VertexId, f64>,
    pub boundary: BTreeMap<VertexId, f64>,
}

impl CurvatureTarget {
    /// Zero interior curvature with the given boundary values.
    pub fn flat(tri: &Triangulation, boundary: BTreeMap<VertexId, f64>) -> Self {
        CurvatureTarget {
            interior: tri
                .interior_vertices()
                .into_iter()
                .map(|v| (v, 0.0))
                .collect(),
            boundary,
        }
    }

    fn check(&self, tri: &Triangulation) -> Result<(), SolveError> {
        for v in tri.interior_vertices() {
            if !self.interior.contains_key(&v) {
                return Err(SolveError::MissingTarget(v));
            }
        }
        for v in tri.boundary_vertices() {
            if !self.boundary.contains_key(&v) {
                return Err(SolveError::MissingTarget(v));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tolerance: 1e-10,
            max_iterations: 50,
            min_step: 2f64.powi(-20),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub residual_trace: Vec<f64>,
    pub delaunay_margin_trace: Vec<f64>,
    pub converged: bool,
    /// True when the harmonic extension was rejected and interior values
    /// started at zero.
    pub zero_start: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("no convergence after {} iterations (residual {:e})", .0.iterations, .0.final_residual)]
    NonConvergence(Box<SolveReport>),
    #[error("line search stalled at iteration {} (residual {:e})", .0.iterations, .0.final_residual)]
    LineSearchStall(Box<SolveReport>),
    #[error("singular Jacobian at iteration {}", .0.iterations)]
    SingularSystem(Box<SolveReport>),
    #[error("no target or boundary value for {0}")]
    MissingTarget(VertexId),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

impl SolveError {
    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            SolveError::NonConvergence(r)
            | SolveError::LineSearchStall(r)
            | SolveError::SingularSystem(r) => Some(r),
            _ => None,
        }
    }
}

fn solve_symmetric(m: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Some(chol.solve(rhs));
    }
    let x = m.lu().solve(rhs)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn with_interior(
    base: &BTreeMap<VertexId, f64>,
    interior: &[VertexId],
    x: &DVector<f64>,
) -> ConformalFactor {
    let mut values = base.clone();
    for (k, v) in interior.iter().enumerate() {
        values.insert(*v, x[k]);
    }
    ConformalFactor::new(values).unwrap_or_default()
}

/// Interior values of the cotangent-harmonic extension of the boundary data.
fn harmonic_start(
    tri: &Triangulation,
    l: &PLMetric,
    boundary: &BTreeMap<VertexId, f64>,
) -> Option<DVector<f64>> {
    let zero = ConformalFactor::zeros(tri);
    let d = curvature_differential(tri, l, &zero).ok()?;
    let interior = d.rows().to_vec();
    let mut lap = DMatrix::zeros(interior.len(), interior.len());
    let mut rhs = DVector::zeros(interior.len());
    for (i, j, w) in d.iter() {
        let r = interior.binary_search(&i).ok()?;
        match interior.binary_search(&j) {
            Ok(c) => lap[(r, c)] = w,
            Err(_) => rhs[r] -= w * boundary[&j],
        }
    }
    let x = solve_symmetric(lap, &rhs)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Newton iteration for `K(u * l) = target` at interior vertices with `u`
/// fixed on the boundary. Steps are halved until `u * l` is a valid metric.
pub fn newton_prescribed_curvature(
    tri: &Triangulation,
    l: &PLMetric,
    target: &CurvatureTarget,
    options: &NewtonOptions,
) -> Result<(ConformalFactor, SolveReport), SolveError> {
    l.validate(tri)?;
    target.check(tri)?;
    let interior = tri.interior_vertices();
    let base: BTreeMap<VertexId, f64> = tri
        .vertices()
        .iter()
        .map(|v| (*v, target.boundary.get(v).copied().unwrap_or(0.0)))
        .collect();
    let goal = DVector::from_iterator(interior.len(), interior.iter().map(|v| target.interior[v]));

    let mut report = SolveReport {
        iterations: 0,
        final_residual: f64::INFINITY,
        residual_trace: Vec::new(),
        delaunay_margin_trace: Vec::new(),
        converged: false,
        zero_start: false,
    };
    let mut x = match harmonic_start(tri, l, &base) {
        Some(x) if apply_conformal(tri, l, &with_interior(&base, &interior, &x)).is_ok() => x,
        _ => {
            report.zero_start = true;
            DVector::zeros(interior.len())
        }
    };

    let evaluate = |x: &DVector<f64>| -> Result<(DVector<f64>, f64), GeomError> {
        let u = with_interior(&base, &interior, x);
        let angles = corner_angles(tri, &apply_conformal(tri, l, &u)?)?;
        let k: CurvatureVector = angles.curvature(tri);
        let r = DVector::from_iterator(interior.len(), interior.iter().map(|v| k[*v])) - &goal;
        let margin = angles
            .edge_delaunay_margins(tri)
            .values()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Ok((r, margin))
    };

    let (mut residual, margin) = evaluate(&x)?;
    loop {
        let norm = residual.amax();
        report.final_residual = norm;
        report.residual_trace.push(norm);
        if report.delaunay_margin_trace.len() < report.residual_trace.len() {
            report.delaunay_margin_trace.push(margin);
        }
        if norm <= options.tolerance {
            report.converged = true;
            return Ok((with_interior(&base, &interior, &x), report));
        }
        if report.iterations >= options.max_iterations {
            return Err(SolveError::NonConvergence(Box::new(report)));
        }
        let jac = curvature_jacobian(tri, l, &with_interior(&base, &interior, &x))?.to_dense();
        let Some(step) = solve_symmetric(jac, &(-&residual)) else {
            return Err(SolveError::SingularSystem(Box::new(report)));
        };
        let mut t = 1.0;
        let next = loop {
            let trial = &x + &step * t;
            if let Ok(out) = evaluate(&trial) {
                break Some((trial, out));
            }
            t /= 2.0;
            if t < options.min_step {
                break None;
            }
        };
        report.iterations += 1;
        let Some((trial, (r, m))) = next else {
            return Err(SolveError::LineSearchStall(Box::new(report)));
        };
        x = trial;
        residual = r;
        report.delaunay_margin_trace.push(m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euclid::{curvature_vector, develop_flat_metric, PlanarCoords};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Two-ring hexagonal patch built by hand: center 0, ring 1..=6, ring 7..=18.
    fn hex2() -> (Triangulation, PlanarCoords) {
        let w = Complex64::from_polar(1.0, PI / 3.0);
        let mut points: Vec<Complex64> = Vec::new();
        for r in -2i32..=2 {
            for q in -2i32..=2 {
                if (q + r).abs() <= 2 {
                    points.push(q as f64 + w * r as f64);
                }
            }
        }
        points.sort_by(|a, b| {
            a.norm()
                .partial_cmp(&b.norm())
                .unwrap()
                .then(a.arg().partial_cmp(&b.arg()).unwrap())
        });
        let id = |z: Complex64| {
            points
                .iter()
                .position(|p| (p - z).norm() < 1e-9)
                .map(|k| k as u32)
        };
        let mut faces = Vec::new();
        for p in &points {
            for (a, b) in [(c(1.0, 0.0), w), (w, w - 1.0)] {
                if let (Some(i), Some(j), Some(k)) = (id(*p), id(p + a), id(p + b)) {
                    faces.push([i, j, k]);
                }
            }
        }
        let tri = Triangulation::from_indices(&faces).unwrap();
        let coords = PlanarCoords::new(
            points
                .iter()
                .enumerate()
                .map(|(k, z)| (v(k as u32), *z))
                .collect(),
        );
        (tri, coords)
    }

    #[test]
    fn hex2_counts() {
        let (tri, _) = hex2();
        assert_eq!(tri.num_vertices(), 19);
        assert_eq!(tri.num_faces(), 24);
    }

    #[test]
    fn e2h_examples() {
        let a = DiskCoords::new(BTreeMap::from([(v(0), c(0.0, 0.0))])).unwrap();
        let b = DiskCoords::new(BTreeMap::from([(v(0), c(0.5, 0.0))])).unwrap();
        let u = ConformalFactor::new(BTreeMap::from([(v(0), 0.0)])).unwrap();
        assert_eq!(factor_e2h(&u, &a, &a).unwrap(), u);
        assert_abs_diff_eq!(
            factor_e2h(&u, &a, &b).unwrap()[v(0)],
            (1.0f64 / 0.75).ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!((1.0f64 / 0.75).ln(), 0.287682, epsilon = 1e-6);
        let u = ConformalFactor::new(BTreeMap::from([(v(0), 0.37)])).unwrap();
        let round = factor_h2e(&factor_e2h(&u, &a, &b).unwrap(), &a, &b).unwrap();
        assert_abs_diff_eq!(round[v(0)], 0.37, epsilon = 1e-15);
    }

    #[test]
    fn ehconf_identity_and_mobius() {
        let (tri, coords) = hex2();
        let a = DiskCoords::from_planar(&coords.map(|z| z * 0.2 + c(0.1, -0.05))).unwrap();
        let same = verify_ehconf(&tri, &a, &a).unwrap();
        assert!(same.passed);
        assert_eq!(same.discrepancy, 0.0);
        assert_eq!(same.euclidean.sup_norm(), 0.0);

        let z0 = c(0.3, 0.2);
        let b = DiskCoords::from_planar(&a.to_planar().map(|z| (z - z0) / (1.0 - z0.conj() * z)))
            .unwrap();
        let report = verify_ehconf(&tri, &a, &b).unwrap();
        assert!(report.passed, "discrepancy {}", report.discrepancy);
        let spread = report.euclidean.oscillation(tri.vertices());
        assert!(spread > 1e-3);
        // |f(z) - f(w)| = sqrt(|f'(z)| |f'(w)|) |z - w| for a Möbius map f.
        for (w, x) in report.euclidean.iter() {
            let z = a[w];
            let derivative = (1.0 - z0.norm_sqr()) / (1.0 - z0.conj() * z).norm_sqr();
            assert_abs_diff_eq!(x, derivative.ln(), epsilon = 1e-10);
        }
        // Disk automorphisms are hyperbolic isometries.
        assert!(report.hyperbolic.sup_norm() < 1e-10);
    }

    #[test]
    fn ehconf_rejects_nonconformal() {
        let (tri, coords) = hex2();
        let a = DiskCoords::from_planar(&coords.map(|z| z * 0.2)).unwrap();
        let b = DiskCoords::from_planar(&a.to_planar().map(|z| {
            if z == c(0.0, 0.0) {
                c(0.03, 0.01)
            } else {
                z
            }
        }))
        .unwrap();
        assert!(matches!(
            verify_ehconf(&tri, &a, &b),
            Err(GeomError::NotConformal { .. })
        ));
    }

    #[test]
    fn jacobian_entries_on_hex() {
        let (tri, coords) = hex2();
        let l = induced_metric(&tri, &coords).unwrap();
        let zero = ConformalFactor::zeros(&tri);
        let j = curvature_jacobian(&tri, &l, &zero).unwrap();
        assert_eq!(j.rows().len(), 7);
        assert_abs_diff_eq!(j.get(v(0), v(0)), 2.0 * 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(j.get(v(0), v(1)), -1.0 / 3f64.sqrt(), epsilon = 1e-12);
        let d = j.to_dense();
        assert_abs_diff_eq!((&d - d.transpose()).amax(), 0.0, epsilon = 1e-14);
        let full = curvature_differential(&tri, &l, &zero).unwrap().to_dense();
        for r in 0..full.nrows() {
            assert_abs_diff_eq!(full.row(r).sum(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (tri, coords) = hex2();
        let l = induced_metric(&tri, &coords).unwrap();
        let u = ConformalFactor::from_fn(&tri, |w| 0.1 * (w.0 as f64).sin()).unwrap();
        let full = curvature_differential(&tri, &l, &u).unwrap();
        let h = 1e-6;
        for &col in tri.vertices() {
            let shift = |s: f64| {
                let u2 = ConformalFactor::from_fn(&tri, |w| u[w] + if w == col { s } else { 0.0 })
                    .unwrap();
                curvature_vector(&tri, &apply_conformal(&tri, &l, &u2).unwrap()).unwrap()
            };
            let (kp, km) = (shift(h), shift(-h));
            for &row in full.rows() {
                let fd = (kp[row] - km[row]) / (2.0 * h);
                let exact = full.get(row, col);
                assert!(
                    (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                    "{row} {col}: {fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn constant_boundary_gives_constant_solution() {
        let (tri, coords) = hex2();
        let l = induced_metric(&tri, &coords).unwrap();
        let boundary = tri
            .boundary_vertices()
            .into_iter()
            .map(|w| (w, 0.4))
            .collect();
        let (u, report) = newton_prescribed_curvature(
            &tri,
            &l,
            &CurvatureTarget::flat(&tri, boundary),
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 1);
        for (_, x) in u.iter() {
            assert_abs_diff_eq!(x, 0.4, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_boundary_bump() {
        let (tri, coords) = hex2();
        let l = induced_metric(&tri, &coords).unwrap();
        let bv = tri.boundary_vertices();
        let boundary = bv
            .iter()
            .map(|w| (*w, if *w == bv[0] { 2f64.ln() } else { 0.0 }))
            .collect();
        let (u, report) = newton_prescribed_curvature(
            &tri,
            &l,
            &CurvatureTarget::flat(&tri, boundary),
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(report.final_residual <= 1e-10);
        let interior_max = tri
            .interior_vertices()
            .iter()
            .map(|w| u[*w].abs())
            .fold(0.0, f64::max);
        assert!(interior_max > 1e-3);
        assert!(interior_max <= 2f64.ln());
        let scaled = apply_conformal(&tri, &l, &u).unwrap();
        let dev = develop_flat_metric(&tri, &scaled, 0).unwrap();
        let back = induced_metric(&tri, &dev).unwrap();
        for (e, x) in back.iter() {
            assert_abs_diff_eq!(x, scaled.length(e), epsilon = 1e-9);
        }
    }

    #[test]
    fn infeasible_target_fails() {
        let (tri, coords) = hex2();
        let l = induced_metric(&tri, &coords).unwrap();
        let boundary = tri
            .boundary_vertices()
            .into_iter()
            .map(|w| (w, 0.0))
            .collect();
        let mut target = CurvatureTarget::flat(&tri, boundary);
        // Curvature above 2pi would need a negative angle sum.
        target.interior.insert(v(0), 2.0 * PI + 0.5);
        let err =
            newton_prescribed_curvature(&tri, &l, &target, &NewtonOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            SolveError::NonConvergence(_)
                | SolveError::SingularSystem(_)
                | SolveError::LineSearchStall(_)
        ));
        assert!(err.report().is_some());
    }

    #[test]
    fn missing_boundary_value() {
        let (tri, coords) = hex2();
        let l = induced_metric(&tri, &coords).unwrap();
        let target = CurvatureTarget::flat(&tri, BTreeMap::new());
        assert!(matches!(
            newton_prescribed_curvature(&tri, &l, &target, &NewtonOptions::default()),
            Err(SolveError::MissingTarget(_))
        ));
    }
}
