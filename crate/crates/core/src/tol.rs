//! Numerical tolerances shared across the crate.

/// Relative slack in the triangle inequality, as a fraction of the longest side.
pub const TRIANGLE_REL: f64 = 1e-12;

/// Band around zero inside which a Delaunay margin (angle form, weight form or
/// circumcircle form) counts as cocircular, and therefore Delaunay.
pub const DELAUNAY: f64 = 1e-12;

/// Absolute tolerance on edge-wise consistency when extracting a conformal factor.
pub const CONFORMAL: f64 = 1e-9;

/// Interior curvature accepted as zero when developing a flat metric.
pub const FLAT: f64 = 1e-8;

/// Relative position mismatch tolerated when a vertex is reached twice during development.
pub const DEVELOP_REL: f64 = 1e-8;

/// Tolerance on the angle sum around an interior vertex in the embedding test.
pub const EMBED_ANGLE: f64 = 1e-8;

/// Faces with |signed area| below this fraction of (longest side)^2 are degenerate.
pub const DEGENERATE_AREA_REL: f64 = 1e-14;

/// Open-interval slack for the argument increments of the hyperbolic-embedding claims.
pub const CLAIM_ARG_SLACK: f64 = 1e-10;

/// Absolute tolerance for the argument sum 2*pi of the hyperbolic-embedding claims.
pub const CLAIM_SUM: f64 = 1e-9;

/// Sup-norm discrepancy accepted by the Euclidean/hyperbolic factor identity.
pub const EHCONF: f64 = 1e-9;
