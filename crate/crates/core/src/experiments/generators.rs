//! Mesh generators: hexagonal lattice disks and random Delaunay disks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::euclid::{circumcircle_delaunay, is_geodesic_embedding, PlanarCoords};
use crate::experiments::trial_rng;
use crate::mesh::{Triangulation, VertexId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("could not build a valid Delaunay disk after {attempts} attempts")]
    DegenerateSample { attempts: usize },
}

const ATTEMPTS: usize = 8;

fn hex_point(q: i64, r: i64) -> Complex64 {
    let w = Complex64::from_polar(1.0, PI / 3.0);
    q as f64 + w * r as f64
}

fn hex_norm(q: i64, r: i64) -> i64 {
    q.abs().max(r.abs()).max((q + r).abs())
}

/// Triangular-lattice disk with `rings` hexagonal layers and unit edges.
/// The center is vertex 0; ids then run ring by ring, counterclockwise from
/// the positive real axis.
pub fn gen_hex_disk(rings: usize) -> Result<(Triangulation, PlanarCoords), GenError> {
    if rings == 0 {
        return Err(GenError::InvalidSize(
            "a hexagonal disk needs at least one ring".into(),
        ));
    }
    let n = rings as i64;
    let mut cells: Vec<(i64, i64)> = Vec::new();
    for q in -n..=n {
        for r in -n..=n {
            if hex_norm(q, r) <= n {
                cells.push((q, r));
            }
        }
    }
    let angle = |(q, r): (i64, i64)| hex_point(q, r).arg().rem_euclid(2.0 * PI);
    cells.sort_by(|a, b| {
        hex_norm(a.0, a.1)
            .cmp(&hex_norm(b.0, b.1))
            .then(angle(*a).total_cmp(&angle(*b)))
    });
    let ids: HashMap<(i64, i64), VertexId> = cells
        .iter()
        .enumerate()
        .map(|(k, c)| (*c, VertexId(k as u32)))
        .collect();

    let mut faces = Vec::new();
    for (q, r) in (-n - 1..=n).flat_map(|q| (-n - 1..=n).map(move |r| (q, r))) {
        for tri in [
            [(q, r), (q + 1, r), (q, r + 1)],
            [(q + 1, r), (q + 1, r + 1), (q, r + 1)],
        ] {
            if let [Some(a), Some(b), Some(c)] = tri.map(|p| ids.get(&p).copied()) {
                faces.push([a, b, c]);
            }
        }
    }
    let tri = Triangulation::new(faces).expect("hexagonal disks are valid triangulations");
    let coords = PlanarCoords::new(
        cells
            .iter()
            .map(|&(q, r)| (ids[&(q, r)], hex_point(q, r)))
            .collect(),
    );
    Ok((tri, coords))
}

const GHOST: usize = usize::MAX;

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

/// Positive iff `d` is strictly inside the circumcircle of the
/// counterclockwise triangle `a, b, c`.
fn incircle(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    let (a, b, c) = (a - d, b - d, c - d);
    a.norm_sqr() * (b.re * c.im - c.re * b.im) - b.norm_sqr() * (a.re * c.im - c.re * a.im)
        + c.norm_sqr() * (a.re * b.im - b.re * a.im)
}

/// Bowyer-Watson insertion with ghost triangles. Real triangles are
/// counterclockwise; a ghost `[a, b, GHOST]` sits across the hull edge
/// `a -> b`, whose interior side is on the right.
struct Delaunay<'a> {
    points: &'a [Complex64],
    triangles: Vec<[usize; 3]>,
}

impl<'a> Delaunay<'a> {
    fn new(points: &'a [Complex64]) -> Option<Self> {
        let (a, b, c) = match orient(points[0], points[1], points[2]) {
            o if o > 0.0 => (0, 1, 2),
            o if o < 0.0 => (0, 2, 1),
            _ => return None,
        };
        Some(Delaunay {
            points,
            triangles: vec![[a, b, c], [b, a, GHOST], [c, b, GHOST], [a, c, GHOST]],
        })
    }

    fn in_circumdisk(&self, t: [usize; 3], p: Complex64) -> bool {
        let pts = self.points;
        if t[2] == GHOST {
            let (a, b) = (pts[t[0]], pts[t[1]]);
            let o = orient(a, b, p);
            if o != 0.0 {
                return o > 0.0;
            }
            let t = ((p - a) * (b - a).conj()).re / (b - a).norm_sqr();
            return t > 0.0 && t < 1.0;
        }
        incircle(pts[t[0]], pts[t[1]], pts[t[2]], p) > 0.0
    }

    fn insert(&mut self, k: usize) -> bool {
        let p = self.points[k];
        let (bad, keep): (Vec<[usize; 3]>, Vec<[usize; 3]>) = self
            .triangles
            .iter()
            .partition(|t| self.in_circumdisk(**t, p));
        if bad.is_empty() {
            return false;
        }
        let directed: BTreeSet<(usize, usize)> = bad
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .collect();
        self.triangles = keep;
        for &(u, v) in &directed {
            if directed.contains(&(v, u)) {
                continue;
            }
            let t = if u == GHOST {
                [v, k, GHOST]
            } else if v == GHOST {
                [k, u, GHOST]
            } else {
                [u, v, k]
            };
            if t[2] != GHOST
                && orient(self.points[t[0]], self.points[t[1]], self.points[t[2]]) <= 0.0
            {
                return false;
            }
            self.triangles.push(t);
        }
        true
    }

    fn real_triangles(&self) -> Vec<[usize; 3]> {
        self.triangles
            .iter()
            .filter(|t| t[2] != GHOST)
            .copied()
            .collect()
    }
}

/// Delaunay triangulation of a point set in general position, as index
/// triples. Returns `None` if the insertion hits a degenerate configuration.
pub fn delaunay_triangles(points: &[Complex64]) -> Option<Vec<[usize; 3]>> {
    if points.len() < 3 {
        return None;
    }
    let mut dt = Delaunay::new(points)?;
    for k in 3..points.len() {
        if !dt.insert(k) {
            return None;
        }
    }
    let mut out = dt.real_triangles();
    out.sort_unstable();
    Some(out)
}

fn fence_size(n: usize) -> usize {
    if n <= 6 {
        n
    } else {
        ((2.0 * (n as f64).sqrt()).round() as usize).max(6).min(n)
    }
}

fn sample_points(n: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Complex64>> {
    let m = fence_size(n);
    let offset = rng.random::<f64>() * 2.0 * PI;
    let mut points: Vec<Complex64> = (0..m)
        .map(|k| {
            Complex64::from_polar(
                rng.random_range(0.98..1.0),
                offset + 2.0 * PI * k as f64 / m as f64,
            )
        })
        .collect();
    let separation = 0.3 / (n as f64).sqrt();
    let mut misses = 0;
    while points.len() < n {
        let z = Complex64::from_polar(
            0.9 * rng.random::<f64>().sqrt(),
            rng.random::<f64>() * 2.0 * PI,
        );
        if points.iter().all(|p| (p - z).norm() >= separation) {
            points.push(z);
        } else {
            misses += 1;
            if misses > 100 * n {
                return None;
            }
        }
    }
    Some(points)
}

fn build_disk(points: &[Complex64]) -> Option<(Triangulation, PlanarCoords)> {
    let triangles = delaunay_triangles(points)?;
    let faces: Vec<[u32; 3]> = triangles.iter().map(|t| t.map(|k| k as u32)).collect();
    let tri = Triangulation::from_indices(&faces).ok()?;
    if tri.num_vertices() != points.len() {
        return None;
    }
    let coords = PlanarCoords::new(
        points
            .iter()
            .enumerate()
            .map(|(k, z)| (VertexId(k as u32), *z))
            .collect::<BTreeMap<_, _>>(),
    );
    if !is_geodesic_embedding(&tri, &coords, false).embedded {
        return None;
    }
    if !circumcircle_delaunay(&tri, &coords).ok()?.delaunay {
        return None;
    }
    Some((tri, coords))
}

/// Delaunay triangulation of `n` random points in the unit disk. About
/// `2 sqrt(n)` of them form a fence just inside the unit circle so the hull is
/// a round polygon; the rest are uniform in the disk of radius 0.9.
pub fn gen_random_delaunay_disk(
    n: usize,
    seed: u64,
) -> Result<(Triangulation, PlanarCoords), GenError> {
    if n < 3 {
        return Err(GenError::InvalidSize(
            "a random disk needs at least 3 points".into(),
        ));
    }
    for attempt in 0..ATTEMPTS {
        let mut rng = trial_rng(seed, attempt as u64);
        if let Some(mesh) = sample_points(n, &mut rng).as_deref().and_then(build_disk) {
            return Ok(mesh);
        }
    }
    Err(GenError::DegenerateSample { attempts: ATTEMPTS })
}
