use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::euclid::{conformal_factor_between, PLMetric};
use crate::experiments::{
    finish, run_trials, values, Experiment, ExperimentConfig, ExperimentError, ExperimentReport,
    Outcome,
};
use crate::mesh::{Edge, Triangulation, VertexId};

/// `4 ln(1 / sin eps)`.
pub fn gradient_bound(eps: f64) -> f64 {
    -4.0 * eps.sin().ln()
}

/// Three angles summing to `pi`, each at least `eps`, uniform on that simplex.
pub fn random_triangle_angles(rng: &mut ChaCha8Rng, eps: f64) -> [f64; 3] {
    let free = PI - 3.0 * eps;
    let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    [eps + free * a, eps + free * (b - a), eps + free * (1.0 - b)]
}

/// The single triangle `0 1 2` with two metrics built from corner angles
/// (at vertices 0, 1, 2) and scales, via the law of sines.
pub fn triangle_pair(
    first: [f64; 3],
    second: [f64; 3],
    scale_first: f64,
    scale_second: f64,
) -> (Triangulation, PLMetric, PLMetric) {
    let tri = Triangulation::from_indices(&[[0, 1, 2]]).expect("one triangle");
    let metric = |angles: [f64; 3], s: f64| {
        let map: BTreeMap<Edge, f64> = (0..3)
            .map(|k| {
                let e = Edge::new(VertexId((k as u32 + 1) % 3), VertexId((k as u32 + 2) % 3));
                (e, s * angles[k].sin())
            })
            .collect();
        PLMetric::new(&tri, map).expect("angles give a valid triangle")
    };
    let (a, b) = (metric(first, scale_first), metric(second, scale_second));
    (tri, a, b)
}

fn ratio_margin(l: &PLMetric, eps: f64) -> f64 {
    let s = eps.sin();
    let sides: Vec<f64> = l.iter().map(|(_, x)| x).collect();
    let mut margin = f64::INFINITY;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let r = sides[i] / sides[j];
                margin = margin.min(r - s).min(1.0 / s - r);
            }
        }
    }
    margin
}

/// Random pairs of triangles with every angle at least `eps` (any two
/// triangles are discrete conformal). Checks the side-ratio bounds
/// `sin eps <= l_ij / l_ik <= 1 / sin eps` and `|u_i - u_j| <= 4 ln(1/sin eps)`.
pub fn run_gradient_estimate(
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let trials = run_trials(config.seed, config.trials, |rng, _| {
        let eps = rng.random_range(0.02..PI / 3.0 - 0.02);
        let first = random_triangle_angles(rng, eps);
        let second = random_triangle_angles(rng, eps);
        let (tri, l, l2) = triangle_pair(
            first,
            second,
            rng.random_range(-2.0..2.0f64).exp(),
            rng.random_range(-2.0..2.0f64).exp(),
        );
        let u = match conformal_factor_between(&tri, &l, &l2) {
            Ok(u) => u,
            Err(e) => return Outcome::skip(e.to_string()),
        };
        let bound = gradient_bound(eps);
        let gap = tri
            .edges()
            .map(|e| {
                let (a, b) = e.endpoints();
                (u[a] - u[b]).abs()
            })
            .fold(0.0, f64::max);
        let ratio = ratio_margin(&l, eps).min(ratio_margin(&l2, eps));
        let margin = ratio.min(bound - gap);
        Outcome::check(
            margin,
            config.tolerance,
            values([
                ("eps", eps),
                ("bound", bound),
                ("max_gap", gap),
                ("tightness", gap / bound),
                ("ratio_margin", ratio),
            ]),
            tri.vertices().to_vec(),
            || format!("gap {gap} against bound {bound}, ratio margin {ratio:e}"),
        )
    });
    finish(Experiment::Gradient, config, trials, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bound_values() {
        assert_abs_diff_eq!(gradient_bound(PI / 6.0), 4.0 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(gradient_bound(PI / 6.0), 2.772589, epsilon = 1e-6);
    }

    #[test]
    fn equilateral_pair_has_no_gap() {
        let eq = [PI / 3.0; 3];
        let (tri, l, l2) = triangle_pair(eq, eq, 1.0, 2f64.exp());
        let u = conformal_factor_between(&tri, &l, &l2).unwrap();
        for (_, x) in u.iter() {
            assert_abs_diff_eq!(x, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn extreme_pair_is_tight() {
        let eps = 0.3;
        let (tri, l, l2) = triangle_pair(
            [PI / 2.0, eps, PI / 2.0 - eps],
            [eps, PI / 2.0, PI / 2.0 - eps],
            1.0,
            1.0,
        );
        let u = conformal_factor_between(&tri, &l, &l2).unwrap();
        let gap = u[VertexId(0)] - u[VertexId(1)];
        assert_abs_diff_eq!(gap, gradient_bound(eps), epsilon = 1e-12);
    }

    #[test]
    fn angles_respect_eps() {
        let mut rng = crate::experiments::trial_rng(1, 1);
        for _ in 0..100 {
            let a = random_triangle_angles(&mut rng, 0.4);
            assert!(a.iter().all(|x| *x >= 0.4 - 1e-15));
            assert_abs_diff_eq!(a.iter().sum::<f64>(), PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn run_passes() {
        let config = ExperimentConfig {
            trials: 500,
            ..Experiment::Gradient.default_config()
        };
        let report = run_gradient_estimate(&config).unwrap();
        assert_eq!(report.summary.passed, 500);
    }
}
