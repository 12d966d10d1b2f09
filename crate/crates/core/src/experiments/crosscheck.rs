use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::euclid::{
    circumcircle_delaunay, corner_angles, induced_metric, GeomError, PlanarCoords,
};
use crate::mesh::{Edge, Triangulation};
use crate::tol;

/// Edge-by-edge comparison of the three Delaunay tests: opposite-angle sum,
/// cotangent-weight sign and empty circumcircle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateAgreement {
    pub edges: usize,
    /// Edges where at least one form sits inside its cocircular band.
    pub cocircular: usize,
    pub disagreements: Vec<Edge>,
}

impl PredicateAgreement {
    pub fn agree(&self) -> bool {
        self.disagreements.is_empty()
    }
}

fn class(x: f64, band: f64) -> Option<Ordering> {
    if x.abs() <= band {
        None
    } else {
        x.partial_cmp(&0.0)
    }
}

pub fn delaunay_forms_agree(
    tri: &Triangulation,
    coords: &PlanarCoords,
) -> Result<PredicateAgreement, GeomError> {
    let l = induced_metric(tri, coords)?;
    let angles = corner_angles(tri, &l)?;
    let angle_margins = angles.edge_delaunay_margins(tri);
    let weights = angles.cot_weights(tri);
    let circles = circumcircle_delaunay(tri, coords)?;
    let band = 1e3 * tol::DELAUNAY;
    let mut agreement = PredicateAgreement {
        edges: angle_margins.len(),
        cocircular: 0,
        disagreements: Vec::new(),
    };
    for (e, m) in angle_margins {
        let forms = [
            class(m, band),
            class(weights[e], band),
            class(circles.margins[&e], band),
        ];
        if forms.iter().any(Option::is_none) {
            agreement.cocircular += 1;
            if forms.iter().flatten().any(|c| *c == Ordering::Less) {
                agreement.disagreements.push(e);
            }
        } else if !(forms[0] == forms[1] && forms[1] == forms[2]) {
            agreement.disagreements.push(e);
        }
    }
    Ok(agreement)
}
