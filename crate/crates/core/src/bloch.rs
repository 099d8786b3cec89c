//! Single-particle Bloch Hamiltonians, momentum-space current vertices and
//! spectral-gap measurements.
//!
//! A hopping list stores `H0(d)`, the amplitude of `psi+_{x,s} psi-_{y,s'}`
//! with `d = x - y` (in cells). The Bloch matrix is `H(k) = sum_d e^{i k.d} H0(d)`.
//! The position-offset gauge used for currents is
//! `H~(k)_{ss'} = sum_d e^{i k.(d + r_s - r_s')} H0_{ss'}(d)`, whose `k`
//! derivative weights every hopping by its geometric bond vector.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BzMesh, LatticeSpec, Vec2};
use crate::linalg::{eigvalsh, hermiticity_defect};
use crate::C64;

/// One term `H0(d)` of a hopping list.
#[derive(Debug, Clone, PartialEq)]
pub struct Hopping {
    pub cell: [i32; 2],
    pub matrix: DMatrix<C64>,
}

type BlochFn = Arc<dyn Fn(&Vec2) -> DMatrix<C64> + Send + Sync>;

#[derive(Clone)]
pub struct BlochHamiltonian {
    dim: usize,
    basis: [Vec2; 2],
    offsets: Vec<Vec2>,
    hoppings: Option<Vec<Hopping>>,
    func: Option<BlochFn>,
    spin_degeneracy: f64,
    symmetrization: f64,
    tag: String,
}

impl fmt::Debug for BlochHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlochHamiltonian")
            .field("tag", &self.tag)
            .field("dim", &self.dim)
            .field("hoppings", &self.hoppings.as_ref().map(Vec::len))
            .field("spin_degeneracy", &self.spin_degeneracy)
            .finish()
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn neg(cell: [i32; 2]) -> [i32; 2] {
    [-cell[0], -cell[1]]
}

fn honeycomb_geometry() -> ([Vec2; 2], Vec<Vec2>) {
    let lat = LatticeSpec::honeycomb(1, false).expect("valid preset");
    (*lat.basis(), lat.offsets().to_vec())
}

/// Nearest-neighbour honeycomb hoppings `-t psi+_A psi-_B` for the three bonds
/// `x -> x`, `x -> x - l1`, `x -> x - l2`, plus their conjugate partners.
fn honeycomb_nn(t: f64) -> Vec<Hopping> {
    let mut out = Vec::new();
    for cell in [[0, 0], [1, 0], [0, 1]] {
        let mut ab = DMatrix::zeros(2, 2);
        ab[(0, 1)] = c(-t, 0.0);
        out.push(Hopping { cell, matrix: ab.clone() });
        out.push(Hopping { cell: neg(cell), matrix: ab.adjoint() });
    }
    out
}

/// `Omega(k) = 1 + e^{-i k.l1} + e^{-i k.l2}`.
pub fn graphene_omega(k: &Vec2) -> C64 {
    let (basis, _) = honeycomb_geometry();
    c(1.0, 0.0) + C64::from_polar(1.0, -k.dot(&basis[0])) + C64::from_polar(1.0, -k.dot(&basis[1]))
}

impl BlochHamiltonian {
    /// Builds a model from a finite hopping list, enforcing the conjugate-pair
    /// condition `conj(H0_{ss'}(d)) = H0_{s's}(-d)`.
    ///
    /// Violations up to `1e-10` are symmetrized away and reported through
    /// [`Self::symmetrization_correction`]; larger ones are errors.
    pub fn from_hoppings(
        basis: [Vec2; 2],
        offsets: Vec<Vec2>,
        hoppings: Vec<Hopping>,
    ) -> Result<Self> {
        let dim = offsets.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("model needs at least one orbital".into()));
        }
        let mut by_cell: BTreeMap<[i32; 2], DMatrix<C64>> = BTreeMap::new();
        for h in hoppings {
            if h.matrix.nrows() != dim || h.matrix.ncols() != dim {
                return Err(Error::InvalidParameter(format!(
                    "hopping at {:?} has shape {}x{}, expected {dim}x{dim}",
                    h.cell,
                    h.matrix.nrows(),
                    h.matrix.ncols()
                )));
            }
            *by_cell.entry(h.cell).or_insert_with(|| DMatrix::zeros(dim, dim)) += h.matrix;
        }
        let mut worst = 0.0f64;
        let mut sym = BTreeMap::new();
        for (&cell, m) in &by_cell {
            let partner = by_cell.get(&neg(cell)).cloned().unwrap_or_else(|| DMatrix::zeros(dim, dim));
            let defect = m - partner.adjoint();
            let violation = defect.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            if violation > 1e-10 {
                return Err(Error::ConjugatePairViolation { cell, violation });
            }
            worst = worst.max(violation);
            sym.insert(cell, (m + partner.adjoint()) * c(0.5, 0.0));
        }
        let hoppings = sym
            .into_iter()
            .filter(|(_, m)| m.iter().any(|z| *z != C64::default()))
            .map(|(cell, matrix)| Hopping { cell, matrix })
            .collect();
        Ok(Self {
            dim,
            basis,
            offsets,
            hoppings: Some(hoppings),
            func: None,
            spin_degeneracy: 1.0,
            symmetrization: worst,
            tag: "custom".into(),
        })
    }

    /// Model on the orbital geometry of `lat` (spin copies are ignored).
    pub fn custom(lat: &LatticeSpec, hoppings: Vec<Hopping>) -> Result<Self> {
        let offsets = lat
            .offsets()
            .iter()
            .step_by(lat.spin_components())
            .copied()
            .collect();
        Self::from_hoppings(*lat.basis(), offsets, hoppings)
    }

    /// Pure function form. Such models have no analytic current vertex.
    pub fn from_fn<F>(dim: usize, basis: [Vec2; 2], offsets: Vec<Vec2>, f: F) -> Self
    where
        F: Fn(&Vec2) -> DMatrix<C64> + Send + Sync + 'static,
    {
        Self {
            dim,
            basis,
            offsets,
            hoppings: None,
            func: Some(Arc::new(f)),
            spin_degeneracy: 1.0,
            symmetrization: 0.0,
            tag: "function".into(),
        }
    }

    /// Nearest-neighbour graphene, one spin block, with spin degeneracy 2.
    pub fn graphene(t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("hopping t must be > 0, got {t}")));
        }
        let (basis, offsets) = honeycomb_geometry();
        Ok(Self::from_hoppings(basis, offsets, honeycomb_nn(t))?
            .with_spin_degeneracy(2.0)
            .with_tag("graphene"))
    }

    /// Haldane model: nearest-neighbour hopping `t1`, next-nearest-neighbour
    /// hopping `t2 e^{+-i phi}` (opposite chirality on the two sublattices) and
    /// staggered mass `+-m`. Spinless.
    pub fn haldane(t1: f64, t2: f64, phi: f64, m: f64) -> Result<Self> {
        if !(t1 > 0.0) {
            return Err(Error::InvalidParameter(format!("hopping t1 must be > 0, got {t1}")));
        }
        let (basis, offsets) = honeycomb_geometry();
        let mut hops = honeycomb_nn(t1);
        let mut onsite = DMatrix::zeros(2, 2);
        onsite[(0, 0)] = c(m, 0.0);
        onsite[(1, 1)] = c(-m, 0.0);
        hops.push(Hopping { cell: [0, 0], matrix: onsite });
        // l1, l2 - l1, -l2 are related by 120 degree rotations.
        for cell in [[1, 0], [-1, 1], [0, -1]] {
            let mut m = DMatrix::zeros(2, 2);
            m[(0, 0)] = C64::from_polar(t2, phi);
            m[(1, 1)] = C64::from_polar(t2, -phi);
            hops.push(Hopping { cell, matrix: m.clone() });
            hops.push(Hopping { cell: neg(cell), matrix: m.adjoint() });
        }
        Ok(Self::from_hoppings(basis, offsets, hops)?.with_tag("haldane"))
    }

    /// Momentum-independent model `H(k) = diag(levels)` with one orbital per
    /// level, all at the cell origin, on the unit square lattice.
    pub fn flat(levels: &[f64]) -> Result<Self> {
        let n = levels.len();
        let d = DMatrix::from_fn(n, n, |i, j| if i == j { c(levels[i], 0.0) } else { C64::default() });
        Self::from_hoppings(
            [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            vec![Vec2::zeros(); n],
            vec![Hopping { cell: [0, 0], matrix: d }],
        )
        .map(|h| h.with_tag("flat"))
    }

    pub fn with_spin_degeneracy(mut self, s: f64) -> Self {
        self.spin_degeneracy = s;
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[Vec2; 2] {
        &self.basis
    }

    pub fn offsets(&self) -> &[Vec2] {
        &self.offsets
    }

    pub fn hoppings(&self) -> Option<&[Hopping]> {
        self.hoppings.as_deref()
    }

    pub fn spin_degeneracy(&self) -> f64 {
        self.spin_degeneracy
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Largest conjugate-pair defect removed while building the model.
    pub fn symmetrization_correction(&self) -> f64 {
        self.symmetrization
    }

    /// Lattice with this model's orbital geometry.
    pub fn lattice(&self, size: usize, spinful: bool) -> Result<LatticeSpec> {
        LatticeSpec::new(self.basis, size, &self.offsets, if spinful { 2 } else { 1 })
    }

    /// Maximum hopping distance in cells (Chebyshev norm of `d`).
    pub fn hopping_range(&self) -> Option<i32> {
        self.hoppings
            .as_ref()
            .map(|h| h.iter().map(|t| t.cell[0].abs().max(t.cell[1].abs())).max().unwrap_or(0))
    }

    /// Cartesian displacement of the Bravais vector `d`.
    pub fn cell_vector(&self, cell: [i32; 2]) -> Vec2 {
        self.basis[0] * cell[0] as f64 + self.basis[1] * cell[1] as f64
    }

    /// Bond vector `(d + r_row) - r_col` of the matrix element `(row, col)` of
    /// `H0(d)`, pointing from the annihilated site to the created one.
    pub fn bond_vector(&self, cell: [i32; 2], row: usize, col: usize) -> Vec2 {
        self.cell_vector(cell) + self.offsets[row] - self.offsets[col]
    }

    /// `H(k)` in the periodic gauge.
    pub fn eval(&self, k: &Vec2) -> DMatrix<C64> {
        match (&self.hoppings, &self.func) {
            (Some(hops), _) => {
                let mut out = DMatrix::zeros(self.dim, self.dim);
                for h in hops {
                    let phase = C64::from_polar(1.0, k.dot(&self.cell_vector(h.cell)));
                    out += &h.matrix * phase;
                }
                out
            }
            (None, Some(f)) => f(k),
            (None, None) => unreachable!("model without hoppings or function"),
        }
    }

    /// Applies `f(bond) * e^{i k.bond} H0_{ss'}(d)` entrywise over the hopping list.
    fn offset_gauge_sum<F: Fn(&Vec2) -> C64>(&self, k: &Vec2, weight: F) -> Result<DMatrix<C64>> {
        let hops = self.hoppings.as_ref().ok_or(Error::NoHoppingList)?;
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for h in hops {
            for r in 0..self.dim {
                for s in 0..self.dim {
                    let amp = h.matrix[(r, s)];
                    if amp == C64::default() {
                        continue;
                    }
                    let b = self.bond_vector(h.cell, r, s);
                    out[(r, s)] += amp * C64::from_polar(1.0, k.dot(&b)) * weight(&b);
                }
            }
        }
        Ok(out)
    }

    /// `H~(k)` in the gauge whose phases include the orbital offsets.
    pub fn eval_offset_gauge(&self, k: &Vec2) -> Result<DMatrix<C64>> {
        self.offset_gauge_sum(k, |_| c(1.0, 0.0))
    }

    /// Current vertex `J_i(k) = d H~(k) / d k_i` (`direction` is 0 or 1),
    /// computed analytically by weighting each hopping with `i b_i`.
    pub fn current_vertex(&self, k: &Vec2, direction: usize) -> Result<DMatrix<C64>> {
        check_direction(direction)?;
        self.offset_gauge_sum(k, |b| c(0.0, b[direction]))
    }

    /// `d^2 H~(k) / d k_i d k_j`, each hopping weighted by `-b_i b_j`.
    pub fn vertex_second(&self, k: &Vec2, i: usize, j: usize) -> Result<DMatrix<C64>> {
        check_direction(i)?;
        check_direction(j)?;
        self.offset_gauge_sum(k, |b| c(-b[i] * b[j], 0.0))
    }

    /// Sorted eigenvalues of `H(k)`.
    pub fn energies(&self, k: &Vec2) -> Vec<f64> {
        eigvalsh(self.eval(k))
    }

    /// `||H - H^dagger||` (max entry) at `k`.
    pub fn hermiticity_defect(&self, k: &Vec2) -> f64 {
        hermiticity_defect(&self.eval(k))
    }
}

fn check_direction(d: usize) -> Result<()> {
    if d > 1 {
        return Err(Error::InvalidParameter(format!("direction must be 0 or 1, got {d}")));
    }
    Ok(())
}

/// Result of [`spectral_gap`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub delta_mu: f64,
    pub argmin_k: [f64; 2],
    pub mesh_n: usize,
}

fn distance_to_spectrum(h: &BlochHamiltonian, mu: f64, k: &Vec2) -> f64 {
    h.energies(k).iter().fold(f64::INFINITY, |a, e| a.min((e - mu).abs()))
}

/// `min_k dist(mu, spec H(k))` over the mesh, refined once around the argmin
/// with a 5x5 stencil at half the local spacing.
pub fn spectral_gap(h: &BlochHamiltonian, mu: f64, mesh: &BzMesh) -> Result<GapReport> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..mesh.len() {
        let d = distance_to_spectrum(h, mu, &mesh.point(i));
        if d < best.0 {
            best = (d, i);
        }
    }
    let g = mesh.reciprocal_basis();
    let centre = mesh.reduced(best.1);
    let half = (mesh.weight(best.1) / mesh.bz_area()).sqrt() / 2.0;
    let mut arg = mesh.point(best.1);
    let mut delta = best.0;
    for a in -2..=2 {
        for b in -2..=2 {
            let k = g[0] * (centre[0] + a as f64 * half) + g[1] * (centre[1] + b as f64 * half);
            let d = distance_to_spectrum(h, mu, &k);
            if d < delta {
                delta = d;
                arg = k;
            }
        }
    }
    Ok(GapReport { delta_mu: delta, argmin_k: [arg.x, arg.y], mesh_n: mesh.base_n() })
}

/// Number of dyadic pattern-search levels used to localise each Fermi point.
const FERMI_REFINE_LEVELS: u32 = 6;

/// Local minima of `dist(mu, spec H(k))` on the base grid of `mesh`, refined
/// by a dyadic pattern search and kept when below `tol`.
pub fn fermi_points(h: &BlochHamiltonian, mu: f64, mesh: &BzMesh, tol: f64) -> Result<Vec<Vec2>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be > 0".into()));
    }
    let n = mesh.base_n();
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    let g = *mesh.reciprocal_basis();
    let at = |a: f64, b: f64| g[0] * a + g[1] * b;
    let node = |i: usize| (i as f64 + 0.5) / n as f64;
    let grid: Vec<f64> = (0..n * n)
        .map(|idx| distance_to_spectrum(h, mu, &at(node(idx / n), node(idx % n))))
        .collect();
    let value = |i: i64, j: i64| {
        let (i, j) = (i.rem_euclid(n as i64) as usize, j.rem_euclid(n as i64) as usize);
        grid[i * n + j]
    };

    let mut found: Vec<([f64; 2], f64)> = Vec::new();
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            let v = value(i, j);
            let is_min = (-1..=1)
                .flat_map(|a| (-1..=1).map(move |b| (a, b)))
                .filter(|&(a, b)| (a, b) != (0, 0))
                .all(|(a, b)| v <= value(i + a, j + b));
            if !is_min {
                continue;
            }
            let mut p = [node(i as usize), node(j as usize)];
            let mut pv = v;
            let mut step = 0.5 / n as f64;
            for _ in 0..FERMI_REFINE_LEVELS {
                let mut next = (p, pv);
                for a in -1..=1 {
                    for b in -1..=1 {
                        let q = [p[0] + a as f64 * step, p[1] + b as f64 * step];
                        let d = distance_to_spectrum(h, mu, &at(q[0], q[1]));
                        if d < next.1 {
                            next = (q, d);
                        }
                    }
                }
                p = next.0;
                pv = next.1;
                step /= 2.0;
            }
            if pv >= tol {
                continue;
            }
            let p = [p[0] - p[0].floor(), p[1] - p[1].floor()];
            let dup = found.iter_mut().find(|(q, _)| {
                let da = (p[0] - q[0]) - (p[0] - q[0]).round();
                let db = (p[1] - q[1]) - (p[1] - q[1]).round();
                da.abs().max(db.abs()) < 2.0 / n as f64
            });
            match dup {
                Some(entry) if entry.1 <= pv => {}
                Some(entry) => *entry = (p, pv),
                None => found.push((p, pv)),
            }
        }
    }
    Ok(found.into_iter().map(|(p, _)| at(p[0], p[1])).collect())
}

/// Momentum `k` folded to the fundamental domain spanned by `G1, G2`.
pub fn fold_to_zone(lat: &LatticeSpec, k: &Vec2) -> Vec2 {
    let r = lat.to_reduced(k);
    lat.to_cartesian([r[0] - r[0].floor(), r[1] - r[1].floor()])
}

/// Distance between two momenta modulo the reciprocal lattice.
pub fn zone_distance(lat: &LatticeSpec, a: &Vec2, b: &Vec2) -> f64 {
    let r = lat.to_reduced(&(a - b));
    let g = lat.reciprocal_basis();
    let mut best = f64::INFINITY;
    for da in -1..=1 {
        for db in -1..=1 {
            let ra = r[0] - r[0].round() + da as f64;
            let rb = r[1] - r[1].round() + db as f64;
            best = best.min((g[0] * ra + g[1] * rb).norm());
        }
    }
    best
}
