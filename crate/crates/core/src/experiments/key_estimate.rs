use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::euclid::{
    corner_angles, induced_metric, signed_area, ConformalFactor, GeomError, PlanarCoords,
};
use crate::experiments::{
    delaunay_development, finish, gen_hex_disk, run_trials, solve_flat, values, Experiment,
    ExperimentConfig, ExperimentError, ExperimentReport, Outcome,
};
use crate::mesh::{Triangulation, VertexId};
use crate::tol;

/// `-ln(sin^3(eps) / 2)`.
pub fn key_constant(eps: f64) -> f64 {
    -(eps.sin().powi(3) / 2.0).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyEstimateOutcome {
    /// Largest `|phi(i)|` over the subcomplex.
    pub r: f64,
    /// Distance from the origin to the image of the subcomplex boundary.
    pub r_prime: f64,
    pub eps: f64,
    pub m: f64,
    /// `ln(r'/r) - m`.
    pub bound: f64,
    /// Vertices with `|phi'(i)| < r'/2`.
    pub checked: usize,
    /// `min (u_i - bound)` over the checked vertices.
    pub margin: f64,
    pub witness: Option<VertexId>,
}

fn segment_distance(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let t = (-(a * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (a + d * t).norm()
}

/// Evaluates `u_i >= ln(r'/r) - M` on the subcomplex generated by `t0`, with
/// the origin of `phi_prime` as the center of the disk `D_{r'}`.
pub fn evaluate_key_estimate(
    tri: &Triangulation,
    phi: &PlanarCoords,
    phi_prime: &PlanarCoords,
    u: &ConformalFactor,
    t0: &BTreeSet<VertexId>,
) -> Result<KeyEstimateOutcome, GeomError> {
    let sub = tri.subcomplex(t0)?;
    let l = induced_metric(tri, phi)?;
    let l2 = induced_metric(tri, phi_prime)?;
    let (a, a2) = (corner_angles(tri, &l)?, corner_angles(tri, &l2)?);
    for angles in [&a, &a2] {
        let delaunay = angles
            .edge_delaunay_margins(tri)
            .values()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if delaunay < -tol::DELAUNAY {
            return Err(GeomError::HypothesisViolated(format!(
                "metric is not Delaunay ({delaunay:e})"
            )));
        }
    }
    let eps = a.min_angle().min(a2.min_angle());

    let origin = Complex64::new(0.0, 0.0);
    let covered = sub.faces().iter().any(|f| {
        let [p, q, s] = f.map(|v| phi_prime[v]);
        signed_area(p, q, origin) >= 0.0
            && signed_area(q, s, origin) >= 0.0
            && signed_area(s, p, origin) >= 0.0
    });
    if !covered {
        return Err(GeomError::HypothesisViolated(
            "origin is outside the image of the subcomplex".into(),
        ));
    }

    let r = sub
        .vertices()
        .iter()
        .map(|v| phi[*v].norm())
        .fold(0.0, f64::max);
    let r_prime = sub
        .boundary_edges()
        .map(|e| {
            let (p, q) = e.endpoints();
            segment_distance(phi_prime[p], phi_prime[q])
        })
        .fold(f64::INFINITY, f64::min);
    let m = key_constant(eps);
    let bound = (r_prime / r).ln() - m;
    let mut margin = f64::INFINITY;
    let mut witness = None;
    let mut checked = 0;
    for &v in sub.vertices() {
        if phi_prime[v].norm() < r_prime / 2.0 {
            checked += 1;
            let slack = u[v] - bound;
            if slack < margin {
                margin = slack;
                witness = Some(v);
            }
        }
    }
    Ok(KeyEstimateOutcome {
        r,
        r_prime,
        eps,
        m,
        bound,
        checked,
        margin,
        witness,
    })
}

/// Hexagonal disks with `size` rings mapped by a discrete conformal Delaunay
/// embedding solved from smooth boundary data (a global offset plus three
/// Fourier modes of magnitude `amplitude / k`). The subcomplex is a random
/// hexagonal ball around the center, whose image is placed at the origin.
pub fn run_key_estimate(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    if config.size < 2 {
        return Err(ExperimentError::InvalidConfig(
            "size (rings) must be at least 2".into(),
        ));
    }
    let (tri, phi) = gen_hex_disk(config.size)?;
    let l = induced_metric(&tri, &phi).expect("hexagonal layout is nondegenerate");
    let center = VertexId(0);
    let distances = tri.graph_distances(center);
    let trials = run_trials(config.seed, config.trials, |rng, _| {
        let offset = rng.random_range(-1.0..1.0);
        let phases: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let boundary = tri
            .boundary_vertices()
            .into_iter()
            .map(|v| {
                let theta = phi[v].arg();
                let wave: f64 = phases
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        config.amplitude / (k + 1) as f64 * ((k + 1) as f64 * theta + p).cos()
                    })
                    .sum();
                (v, offset + wave)
            })
            .collect();
        let (u, _) = match solve_flat(&tri, &l, boundary) {
            Ok(s) => s,
            Err(e) => return Outcome::skip(format!("solve failed: {e}")),
        };
        let developed = match delaunay_development(&tri, &l, &u) {
            Ok((_, c)) => c,
            Err(reason) => return Outcome::skip(reason),
        };
        let spin = Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI);
        let anchor = developed[center];
        let phi_prime = developed.map(|z| spin * (z - anchor));

        let radius = rng.random_range(1..=config.size);
        let t0: BTreeSet<VertexId> = distances
            .iter()
            .filter(|(_, d)| **d <= radius)
            .map(|(v, _)| *v)
            .collect();
        let outcome = match evaluate_key_estimate(&tri, &phi, &phi_prime, &u, &t0) {
            Ok(o) => o,
            Err(e) => return Outcome::skip(e.to_string()),
        };
        let vals = values([
            ("t0_radius", radius as f64),
            ("r", outcome.r),
            ("r_prime", outcome.r_prime),
            ("eps", outcome.eps),
            ("M", outcome.m),
            ("bound", outcome.bound),
            ("checked", outcome.checked as f64),
            ("offset", offset),
        ]);
        let witness: Vec<VertexId> = outcome.witness.into_iter().collect();
        Outcome::check(outcome.margin, config.tolerance, vals, witness, || {
            format!(
                "u falls below ln(r'/r) - M = {} by {:e}",
                outcome.bound, -outcome.margin
            )
        })
    });
    finish(Experiment::KeyEstimate, config, trials, None)
}
