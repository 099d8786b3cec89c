//! Brillouin-zone quadrature meshes.
//!
//! Points are kept in reduced coordinates `(a, b)` with `k = a G1 + b G2` and
//! `a, b` in `[0, 1)`; Cartesian momenta are produced on demand.

use super::{wedge, LatticeSpec, Vec2};
use crate::error::{Error, Result};
use crate::linalg::neumaier_sum;

/// Dyadic refinement around a set of momenta (typically Fermi points).
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    /// Cartesian momenta.
    pub centers: Vec<Vec2>,
    pub depth: u32,
}

/// Half-width, in units of the current cell size, of the square block that is
/// split at each refinement level.
const BLOCK_RADIUS: f64 = 6.0;

#[derive(Debug, Clone)]
pub struct BzMesh {
    reciprocal: [Vec2; 2],
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    base_n: usize,
    refinement: Option<(Vec<[f64; 2]>, u32)>,
}

fn min_image(d: f64) -> f64 {
    d - d.round()
}

fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

impl BzMesh {
    /// Uniform `n x n` midpoint mesh (nodes at `(i + 1/2) / n`), optionally
    /// refined dyadically around the given centers.
    pub fn new(lat: &LatticeSpec, n: usize, refine: Option<&Refinement>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("mesh size n must be >= 1".into()));
        }
        let reciprocal = lat.reciprocal_basis();
        let area = wedge(&reciprocal[0], &reciprocal[1]).abs();
        let depth = refine.map_or(0, |r| r.depth);
        let finest = area * (1.0 / (n as f64 * 2f64.powi(depth as i32))).powi(2);
        if !(finest >= 1e-300) {
            return Err(Error::WeightUnderflow { depth, weight: finest });
        }

        let inv = 1.0 / n as f64;
        let mut cells: Vec<([f64; 2], u32)> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                cells.push(([(i as f64 + 0.5) * inv, (j as f64 + 0.5) * inv], 0));
            }
        }

        let centers: Vec<[f64; 2]> = refine
            .map(|r| r.centers.iter().map(|k| lat.to_reduced(k)).collect())
            .unwrap_or_default();

        for level in 0..depth {
            let s = inv / 2f64.powi(level as i32);
            let reach = BLOCK_RADIUS * s;
            let mut next = Vec::with_capacity(cells.len() + 64 * centers.len());
            for &(c, lev) in &cells {
                let near = lev == level
                    && centers.iter().any(|z| {
                        min_image(c[0] - z[0]).abs() <= reach
                            && min_image(c[1] - z[1]).abs() <= reach
                    });
                if near {
                    let q = s / 4.0;
                    for (da, db) in [(-q, -q), (-q, q), (q, -q), (q, q)] {
                        next.push(([wrap_unit(c[0] + da), wrap_unit(c[1] + db)], lev + 1));
                    }
                } else {
                    next.push((c, lev));
                }
            }
            cells = next;
        }

        let base_w = area * inv * inv;
        let weights = cells.iter().map(|&(_, lev)| base_w / 4f64.powi(lev as i32)).collect();
        let points = cells.into_iter().map(|(c, _)| c).collect();
        Ok(Self {
            reciprocal,
            points,
            weights,
            base_n: n,
            refinement: refine.map(|_| (centers, depth)),
        })
    }

    /// The exact finite-torus momenta `k = (m1 / L) G1 + (m2 / L) G2`, each
    /// with weight `|B| / L^2`.
    pub fn torus(lat: &LatticeSpec) -> Self {
        let reciprocal = lat.reciprocal_basis();
        let area = wedge(&reciprocal[0], &reciprocal[1]).abs();
        let l = lat.size();
        let mut points = Vec::with_capacity(l * l);
        for m1 in 0..l {
            for m2 in 0..l {
                points.push([m1 as f64 / l as f64, m2 as f64 / l as f64]);
            }
        }
        let weights = vec![area / (l * l) as f64; l * l];
        Self { reciprocal, points, weights, base_n: l, refinement: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn base_n(&self) -> usize {
        self.base_n
    }

    pub fn depth(&self) -> u32 {
        self.refinement.as_ref().map_or(0, |r| r.1)
    }

    pub fn reciprocal_basis(&self) -> &[Vec2; 2] {
        &self.reciprocal
    }

    /// `|G1 ^ G2|`.
    pub fn bz_area(&self) -> f64 {
        wedge(&self.reciprocal[0], &self.reciprocal[1]).abs()
    }

    pub fn reduced(&self, i: usize) -> [f64; 2] {
        self.points[i]
    }

    pub fn point(&self, i: usize) -> Vec2 {
        let p = self.points[i];
        self.reciprocal[0] * p[0] + self.reciprocal[1] * p[1]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_sum(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied())
    }

    /// Cartesian momenta with their weights.
    pub fn iter(&self) -> impl Iterator<Item = (Vec2, f64)> + '_ {
        (0..self.len()).map(|i| (self.point(i), self.weights[i]))
    }

    /// Quadrature of `f` over the zone.
    pub fn integrate<F: Fn(Vec2) -> f64>(&self, f: F) -> f64 {
        neumaier_sum(self.iter().map(|(k, w)| w * f(k)))
    }
}
