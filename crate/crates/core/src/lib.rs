//! Discrete conformal geometry on triangulated disks.
//!
//! Euclidean and hyperbolic PL metrics, Delaunay and embedding predicates,
//! Poincaré-disk conversions, a Newton solver for prescribed curvature and
//! randomized verifiers for the maximum principles and related estimates.

pub mod conformal;
pub mod euclid;
pub mod experiments;
pub mod hyper;
pub mod io;
pub mod mesh;
pub mod tol;

pub use conformal::{
    curvature_differential, curvature_jacobian, factor_e2h, factor_h2e,
    newton_prescribed_curvature, verify_ehconf, CurvatureTarget, EhconfReport, NewtonOptions,
    SolveError, SolveReport, SparseMatrix,
};
pub use euclid::{
    acuteness_margin, apply_conformal, circumcircle_delaunay, conformal_factor_between,
    corner_angle, corner_angles, cot_weights, curvature_vector, delaunay_margin,
    develop_flat_metric, induced_metric, is_delaunay, is_geodesic_embedding, nondegeneracy_margin,
    ConformalFactor, CornerAngles, CotWeights, CurvatureVector, DelaunayReport, EmbeddingReport,
    GeomError, PLMetric, PlanarCoords,
};
pub use hyper::{
    apply_hyp_conformal, hyp_corner_angle, hyp_curvature_vector, hyp_distance, hyp_factor_between,
    induce_hyperbolic_embedding, induced_hyp_metric, is_hyp_delaunay, log_map, mobius_to_origin,
    ClaimReport, DiskCoords, HypPLMetric, HypothesisEdges, LogVector,
};
pub use mesh::{Edge, FaceId, MeshError, OneRing, Triangulation, VertexId};
