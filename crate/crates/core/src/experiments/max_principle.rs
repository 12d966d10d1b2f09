use rand::Rng;

use crate::euclid::induced_metric;
use crate::experiments::{
    delaunay_development, finish, gen_hex_disk, random_boundary, run_trials, solve_flat, values,
    Experiment, ExperimentConfig, ExperimentError, ExperimentReport, Outcome,
};
use crate::mesh::VertexId;

fn max_abs<'a>(
    u: &crate::euclid::ConformalFactor,
    vs: impl IntoIterator<Item = &'a VertexId>,
) -> (f64, VertexId) {
    vs.into_iter()
        .map(|v| (u[*v].abs(), *v))
        .fold((f64::NEG_INFINITY, VertexId(0)), |a, b| {
            if b.0 > a.0 {
                b
            } else {
                a
            }
        })
}

/// Hexagonal disks with `rings` drawn from `3..=size` (or `size` when it is
/// smaller), random boundary factors and a flat solve. Checks that `max |u|`
/// is attained on the boundary globally and on every interior 1-ring, and that
/// constant boundary data gives a constant solution.
pub fn run_max_principle(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let low = config.size.min(3);
    let meshes = (low..=config.size)
        .map(gen_hex_disk)
        .collect::<Result<Vec<_>, _>>()?;
    let trials = run_trials(config.seed, config.trials, |rng, _| {
        let rings = rng.random_range(low..=config.size);
        let (tri, coords) = &meshes[rings - low];
        let l = induced_metric(tri, coords).expect("hexagonal layout is nondegenerate");
        let boundary = random_boundary(tri, rng, config.amplitude);

        let constant = if config.amplitude > 0.0 {
            rng.random_range(-config.amplitude..=config.amplitude)
        } else {
            0.0
        };
        let flat = tri
            .boundary_vertices()
            .into_iter()
            .map(|v| (v, constant))
            .collect();
        let constant_deviation = match solve_flat(tri, &l, flat) {
            Ok((u, _)) => u
                .iter()
                .map(|(_, x)| (x - constant).abs())
                .fold(0.0, f64::max),
            Err(e) => return Outcome::skip(format!("constant-boundary solve failed: {e}")),
        };

        let (u, report) = match solve_flat(tri, &l, boundary) {
            Ok(s) => s,
            Err(e) => return Outcome::skip(format!("solve failed: {e}")),
        };
        if let Err(reason) = delaunay_development(tri, &l, &u) {
            return Outcome::skip(reason);
        }

        let interior = tri.interior_vertices();
        let (bmax, _) = max_abs(&u, &tri.boundary_vertices());
        let (imax, iarg) = max_abs(&u, &interior);
        let mut margin = bmax - imax;
        let mut witness = vec![iarg];
        for &i in &interior {
            let (ring_max, _) = max_abs(&u, tri.neighbors(i));
            let m = ring_max - u[i].abs();
            if m < margin {
                margin = m;
                witness = vec![i];
            }
        }
        let constant_margin = 1e-10 - constant_deviation;
        let vals = values([
            ("rings", rings as f64),
            ("boundary_max", bmax),
            ("interior_max", imax),
            ("iterations", report.iterations as f64),
            ("constant_deviation", constant_deviation),
        ]);
        if constant_margin < 0.0 {
            return Outcome::Fail {
                margin: constant_margin,
                values: vals,
                vertices: vec![],
                detail: format!("constant boundary gave deviation {constant_deviation:e}"),
            };
        }
        Outcome::check(margin, config.tolerance, vals, witness.clone(), || {
            format!(
                "|u| at {} exceeds its boundary maximum by {:e}",
                witness[0], -margin
            )
        })
    });
    finish(Experiment::MaxPrinciple, config, trials, None)
}
