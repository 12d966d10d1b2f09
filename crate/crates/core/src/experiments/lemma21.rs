use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::euclid::{corner_angles, induced_metric, GeomError, PlanarCoords};
use crate::experiments::hyp_min::place_ring;
use crate::experiments::{
    finish, run_trials, values, Experiment, ExperimentConfig, ExperimentError, ExperimentReport,
    Outcome,
};
use crate::hyper::{induce_hyperbolic_embedding, HypothesisEdges};
use crate::mesh::{OneRing, Triangulation, VertexId};
use crate::tol;

const REGENERATE: usize = 1000;

/// A star-shaped ring of `degree` neighbors with angular gaps below `pi`.
fn random_ring(rng: &mut ChaCha8Rng, degree: usize) -> (OneRing, PlanarCoords) {
    let gaps: Vec<f64> = loop {
        let w: Vec<f64> = (0..degree).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = w.iter().sum();
        let gaps: Vec<f64> = w.iter().map(|x| x / total * 2.0 * PI).collect();
        if gaps.iter().all(|g| *g < 0.95 * PI) {
            break gaps;
        }
    };
    let offset = rng.random::<f64>() * 2.0 * PI;
    let mut theta = offset;
    let mut positions = vec![(VertexId(0), Complex64::new(0.0, 0.0))];
    for (k, g) in gaps.iter().enumerate() {
        positions.push((
            VertexId(k as u32 + 1),
            Complex64::from_polar(rng.random_range(0.3..1.0), theta),
        ));
        theta += g;
    }
    let faces: Vec<[u32; 3]> = (1..=degree as u32)
        .map(|k| [0, k, k % degree as u32 + 1])
        .collect();
    let tri = Triangulation::from_indices(&faces).expect("fan is a disk");
    let ring = tri.one_ring(VertexId(0)).expect("center is interior");
    (ring, PlanarCoords::new(positions.into_iter().collect()))
}

/// Random star-shaped 1-rings placed in the disk so the embedding hypothesis
/// holds with `eps` a random fraction of the smallest corner angle. Checks
/// both claims and that the hyperbolic angle sum at the center is `2 pi`.
/// `size` is the largest degree; hypothesis-violating samples are redrawn.
pub fn run_lemma21(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    if config.size < 3 {
        return Err(ExperimentError::InvalidConfig(
            "size (largest degree) must be at least 3".into(),
        ));
    }
    let trials = run_trials(config.seed, config.trials, |rng, _| {
        for _ in 0..REGENERATE {
            let degree = rng.random_range(3..=config.size);
            let (ring, drawing) = random_ring(rng, degree);
            let l = induced_metric(ring.triangulation(), &drawing).expect("star-shaped ring");
            let min_angle = corner_angles(ring.triangulation(), &l)
                .expect("valid metric")
                .min_angle();
            let eps = min_angle * rng.random_range(0.5..=1.0);
            let Some(disk) = place_ring(rng, &ring, &drawing, eps, 0.1..0.999) else {
                continue;
            };
            let report = match induce_hyperbolic_embedding(
                &ring,
                &disk,
                eps,
                HypothesisEdges::CenterIncident,
            ) {
                Ok((_, report)) => report,
                Err(GeomError::HypothesisViolated(_)) => continue,
                Err(e) => {
                    return Outcome::Fail {
                        margin: f64::NEG_INFINITY,
                        values: values([
                            ("degree", degree as f64),
                            ("z0", disk[ring.center()].norm()),
                        ]),
                        vertices: ring.neighbors().to_vec(),
                        detail: e.to_string(),
                    }
                }
            };
            let angle_error = report
                .hyp_angle_sum
                .map(|s| (s - 2.0 * PI).abs())
                .unwrap_or(f64::INFINITY);
            let vals = values([
                ("degree", degree as f64),
                ("eps", eps),
                ("z0", disk[ring.center()].norm()),
                ("arg_margin", report.min_arg_margin),
                ("sum_error", report.sum_error),
                ("hyp_angle_error", angle_error),
                ("hypothesis_margin", report.hypothesis_margin),
            ]);
            if !(angle_error <= 1e-9) {
                return Outcome::Fail {
                    margin: -angle_error,
                    values: vals,
                    vertices: vec![ring.center()],
                    detail: format!("hyperbolic angle sum misses 2pi by {angle_error:e}"),
                };
            }
            return Outcome::check(
                report.min_arg_margin,
                tol::CLAIM_ARG_SLACK,
                vals,
                ring.neighbors().to_vec(),
                || format!("claim 1 margin {:e}", report.min_arg_margin),
            );
        }
        Outcome::skip("no hypothesis-satisfying ring found")
    });
    finish(Experiment::Lemma21, config, trials, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::TrialStatus;

    #[test]
    fn small_run_passes() {
        let config = ExperimentConfig {
            trials: 300,
            ..Experiment::Lemma21.default_config()
        };
        let report = run_lemma21(&config).unwrap();
        assert_eq!(report.summary.passed, 300);
        for t in &report.trials {
            assert!(t.values["sum_error"] <= 1e-9);
            assert!(t.values["z0"] <= 0.9);
            assert!(t.values["hypothesis_margin"] > 0.0);
        }
    }

    #[test]
    fn deterministic() {
        let config = ExperimentConfig {
            trials: 20,
            seed: 7,
            ..Experiment::Lemma21.default_config()
        };
        let a = run_lemma21(&config).unwrap();
        assert_eq!(a.to_json(), run_lemma21(&config).unwrap().to_json());
        assert!(a.trials.iter().all(|t| t.status == TrialStatus::Pass));
    }
}
