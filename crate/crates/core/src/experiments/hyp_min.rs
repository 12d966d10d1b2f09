use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::euclid::{corner_angles, induced_metric, PlanarCoords};
use crate::experiments::{
    delaunay_development, finish, gen_random_delaunay_disk, random_boundary, run_trials,
    solve_flat, values, Experiment, ExperimentConfig, ExperimentError, ExperimentReport, Outcome,
};
use crate::hyper::{
    check_hyp_emb_hypothesis, hyp_factor_between, induced_hyp_metric, DiskCoords, HypothesisEdges,
};
use crate::mesh::{OneRing, VertexId};

const PLACEMENT_ATTEMPTS: usize = 32;
const REGENERATE: usize = 50;
const EPS_SHRINK: f64 = 1e-9;

/// A uniform point in the disk of radius `radius`.
pub(crate) fn random_disk_point(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(
        radius * rng.random::<f64>().sqrt(),
        rng.random::<f64>() * 2.0 * PI,
    )
}

/// Moves a 1-ring drawing into the disk: center to a random `z0` with
/// `|z0| <= 0.9`, random rotation, and spokes scaled to a random fraction of
/// `(1 - |z0|^2) sin(eps)`.
pub(crate) fn place_ring(
    rng: &mut ChaCha8Rng,
    ring: &OneRing,
    drawing: &PlanarCoords,
    eps: f64,
    fraction: std::ops::Range<f64>,
) -> Option<DiskCoords> {
    let c = drawing[ring.center()];
    let spoke = ring
        .neighbors()
        .iter()
        .map(|v| (drawing[*v] - c).norm())
        .fold(0.0, f64::max);
    for _ in 0..PLACEMENT_ATTEMPTS {
        let z0 = random_disk_point(rng, 0.9);
        let target = (1.0 - z0.norm_sqr()) * eps.sin() * rng.random_range(fraction.clone());
        let rotation = Complex64::from_polar(target / spoke, rng.random::<f64>() * 2.0 * PI);
        let placed = drawing
            .restrict(ring.triangulation())
            .map(|z| z0 + rotation * (z - c));
        if let Ok(disk) = DiskCoords::from_planar(&placed) {
            return Some(disk);
        }
    }
    None
}

/// Random Delaunay 1-rings paired with a discrete conformal Delaunay copy,
/// both placed in the Poincaré disk under the 1-ring embedding hypothesis.
/// Checks `min(u^h_center, 0) >= min over the rim of min(u^h, 0)`, that
/// `u^h` is unchanged when both drawings are normalized to center 0, and that
/// identical drawings give `u^h = 0`.
pub fn run_hyp_min_principle(
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    if config.size < 7 {
        return Err(ExperimentError::InvalidConfig(
            "size (points per mesh) must be at least 7".into(),
        ));
    }
    let trials = run_trials(config.seed, config.trials, |rng, _| {
        let mut last = String::new();
        for _ in 0..REGENERATE {
            match attempt(rng, config) {
                Ok(outcome) => return outcome,
                Err(reason) => last = reason,
            }
        }
        Outcome::skip(format!(
            "no valid sample in {REGENERATE} draws; last: {last}"
        ))
    });
    finish(Experiment::HypMinPrinciple, config, trials, None)
}

/// One draw; `Err` means the side conditions failed and the draw is redone.
fn attempt(rng: &mut ChaCha8Rng, config: &ExperimentConfig) -> Result<Outcome, String> {
    let (tri, coords) =
        gen_random_delaunay_disk(config.size, rng.random()).map_err(|e| e.to_string())?;
    let interior = tri.interior_vertices();
    let center = interior[rng.random_range(0..interior.len())];
    let ring = tri.one_ring(center).expect("interior vertex");
    let rt = ring.triangulation();
    let a = coords.restrict(rt);
    let l = induced_metric(rt, &a).expect("Delaunay disks are nondegenerate");

    let boundary = random_boundary(rt, rng, config.amplitude);
    let (u, _) = solve_flat(rt, &l, boundary).map_err(|e| format!("solve failed: {e}"))?;
    let (_, b) = delaunay_development(rt, &l, &u)?;

    let mut placed = Vec::new();
    for drawing in [&a, &b] {
        let lengths = induced_metric(rt, drawing).expect("embedded drawing");
        let eps = corner_angles(rt, &lengths)
            .expect("valid metric")
            .min_angle()
            * (1.0 - EPS_SHRINK);
        let disk = place_ring(rng, &ring, drawing, eps, 0.1..0.95)
            .ok_or_else(|| "could not place the ring inside the disk".to_string())?;
        check_hyp_emb_hypothesis(&ring, &disk, eps, HypothesisEdges::CenterIncident)
            .map_err(|e| e.to_string())?;
        placed.push(disk);
    }
    let (da, db) = (&placed[0], &placed[1]);
    let la = induced_hyp_metric(rt, da).map_err(|e| e.to_string())?;
    let lb = induced_hyp_metric(rt, db).map_err(|e| e.to_string())?;
    let uh = match hyp_factor_between(rt, &la, &lb) {
        Ok(uh) => uh,
        Err(e) => {
            return Ok(Outcome::Fail {
                margin: f64::NEG_INFINITY,
                values: Default::default(),
                vertices: vec![center],
                detail: format!("hyperbolic factor extraction failed: {e}"),
            })
        }
    };
    let identical = hyp_factor_between(rt, &la, &la)
        .map(|z| z.sup_norm())
        .unwrap_or(f64::INFINITY);

    let normalized = da
        .normalized_at(da[center])
        .and_then(|na| Ok((na, db.normalized_at(db[center])?)))
        .and_then(|(na, nb)| {
            hyp_factor_between(
                rt,
                &induced_hyp_metric(rt, &na)?,
                &induced_hyp_metric(rt, &nb)?,
            )
        });
    let mobius = normalized
        .map(|n| n.max_abs_diff(&uh))
        .unwrap_or(f64::INFINITY);

    let (rim_min, rim_arg) = ring.neighbors().iter().map(|v| (uh[*v].min(0.0), *v)).fold(
        (f64::INFINITY, VertexId(0)),
        |acc, x| if x.0 < acc.0 { x } else { acc },
    );
    let margin = uh[center].min(0.0) - rim_min;
    let vals = values([
        ("degree", ring.degree() as f64),
        ("uh_center", uh[center]),
        ("rim_min", rim_min),
        ("mobius_invariance", mobius),
        ("identical_sup", identical),
        ("z0_a", da[center].norm()),
        ("z0_b", db[center].norm()),
    ]);
    if !(identical <= 1e-12) {
        return Ok(Outcome::Fail {
            margin: -identical,
            values: vals,
            vertices: vec![center],
            detail: format!("identical drawings gave |u^h| = {identical:e}"),
        });
    }
    if !(mobius <= config.tolerance) {
        return Ok(Outcome::Fail {
            margin: -mobius,
            values: vals,
            vertices: vec![center],
            detail: format!("normalizing at the center changed u^h by {mobius:e}"),
        });
    }
    Ok(Outcome::check(
        margin,
        config.tolerance,
        vals,
        vec![center, rim_arg],
        || {
            format!(
                "min(u^h, 0) at the center is below the rim minimum by {:e}",
                -margin
            )
        },
    ))
}
