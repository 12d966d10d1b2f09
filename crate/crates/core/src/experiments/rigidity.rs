use crate::euclid::induced_metric;
use crate::experiments::{
    finish, gen_hex_disk, random_boundary, run_trials, solve_flat, values, Experiment,
    ExperimentConfig, ExperimentError, ExperimentReport, Outcome, Table, TrialStatus,
};
use crate::mesh::VertexId;

const SMALLEST: usize = 2;

/// Oscillation of `u` on the hexagonal ball of radius `rings / 2` around the
/// center, for hexagonal disks of `2..=size` rings with random boundary
/// factors of magnitude `amplitude` and a flat solve. `trials` runs per ring
/// count. Descriptive only: no trial fails.
pub fn run_rigidity_decay(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    if config.size < SMALLEST {
        return Err(ExperimentError::InvalidConfig(
            "size (largest ring count) must be at least 2".into(),
        ));
    }
    let meshes = (SMALLEST..=config.size)
        .map(|rings| {
            let (tri, coords) = gen_hex_disk(rings)?;
            let l = induced_metric(&tri, &coords).expect("hexagonal layout is nondegenerate");
            let inner: Vec<VertexId> = tri
                .graph_distances(VertexId(0))
                .into_iter()
                .filter(|(_, d)| *d <= rings / 2)
                .map(|(v, _)| v)
                .collect();
            Ok((tri, l, inner))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let per = config.trials;
    let trials = run_trials(config.seed, per * meshes.len(), |rng, index| {
        let rings = SMALLEST + index / per;
        let (tri, l, inner) = &meshes[rings - SMALLEST];
        let boundary = random_boundary(tri, rng, config.amplitude);
        match solve_flat(tri, l, boundary) {
            Ok((u, report)) => Outcome::Pass {
                margin: f64::NAN,
                values: values([
                    ("rings", rings as f64),
                    ("osc", u.oscillation(inner.iter())),
                    ("sup", u.sup_norm()),
                    ("iterations", report.iterations as f64),
                ]),
            },
            Err(e) => Outcome::skip(format!("solve failed: {e}")),
        }
    });

    let mut rows = Vec::new();
    for rings in SMALLEST..=config.size {
        let mut osc: Vec<f64> = trials
            .iter()
            .filter(|t| {
                t.status == TrialStatus::Pass && t.values.get("rings") == Some(&(rings as f64))
            })
            .filter_map(|t| t.values.get("osc").copied())
            .collect();
        if osc.is_empty() {
            rows.push(vec![rings as f64, 0.0, f64::NAN, f64::NAN, f64::NAN]);
            continue;
        }
        osc.sort_by(f64::total_cmp);
        let n = osc.len();
        let median = if n % 2 == 1 {
            osc[n / 2]
        } else {
            (osc[n / 2 - 1] + osc[n / 2]) / 2.0
        };
        let mean = osc.iter().sum::<f64>() / n as f64;
        rows.push(vec![rings as f64, n as f64, median, mean, osc[n - 1]]);
    }
    let table = Table {
        columns: ["rings", "trials", "median_osc", "mean_osc", "max_osc"]
            .map(String::from)
            .to_vec(),
        rows,
    };
    finish(Experiment::RigidityDecay, config, trials, Some(table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        let config = ExperimentConfig {
            trials: 4,
            size: 4,
            ..Experiment::RigidityDecay.default_config()
        };
        let report = run_rigidity_decay(&config).unwrap();
        assert_eq!(report.summary.total, 12);
        assert_eq!(report.summary.failed, 0);
        let table = report.table.as_ref().unwrap();
        assert_eq!(table.rows.len(), 3);
        for row in &table.rows {
            assert_eq!(row[1], 4.0);
            assert!(row[2] <= row[4] && row[2] >= 0.0);
        }
        let csv = report.table_csv().unwrap();
        assert!(csv.starts_with("rings,trials,median_osc,mean_osc,max_osc\n"));
    }

    #[test]
    fn zero_boundary_has_no_oscillation() {
        let config = ExperimentConfig {
            trials: 2,
            size: 3,
            amplitude: 0.0,
            ..Experiment::RigidityDecay.default_config()
        };
        let report = run_rigidity_decay(&config).unwrap();
        for row in &report.table.unwrap().rows {
            assert!(row[4] < 1e-12);
        }
    }
}
