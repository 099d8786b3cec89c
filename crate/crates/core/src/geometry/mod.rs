//! Periodic Bravais lattices, the honeycomb preset and torus metrics.

mod mesh;

pub use mesh::{BzMesh, Refinement};

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Vec2 = nalgebra::Vector2<f64>;

/// `a ^ b` for planar vectors.
pub fn wedge(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// A site of a finite periodic lattice: a cell `n1 l1 + n2 l2` with
/// `0 <= n_i < L` and an internal label (sublattice, spin, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub cell: [usize; 2],
    pub internal: usize,
}

/// An `L x L` periodic Bravais lattice with `N` internal labels per cell.
///
/// Internal labels are ordered `(orbital, spin)` with spin fastest, so for the
/// spinful honeycomb preset the order is `A-up, A-down, B-up, B-down`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    basis: [Vec2; 2],
    size: usize,
    offsets: Vec<Vec2>,
    spin_components: usize,
}

impl LatticeSpec {
    /// Builds a lattice from explicit basis vectors and per-orbital offsets.
    /// With `spin_components == 2` every orbital is duplicated for up and down.
    pub fn new(
        basis: [Vec2; 2],
        size: usize,
        orbital_offsets: &[Vec2],
        spin_components: usize,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("lattice size L must be >= 1".into()));
        }
        if orbital_offsets.is_empty() {
            return Err(Error::InvalidParameter("at least one orbital offset required".into()));
        }
        if !(1..=2).contains(&spin_components) {
            return Err(Error::InvalidParameter("spin_components must be 1 or 2".into()));
        }
        let area = wedge(&basis[0], &basis[1]).abs();
        if !(area > 1e-12) {
            return Err(Error::DegenerateBasis(area));
        }
        let offsets = orbital_offsets
            .iter()
            .flat_map(|o| std::iter::repeat_n(*o, spin_components))
            .collect();
        Ok(Self { basis, size, offsets, spin_components })
    }

    /// Honeycomb lattice as two triangular sublattices, `B = A + (1, 0)`.
    pub fn honeycomb(size: usize, spinful: bool) -> Result<Self> {
        let s = 3f64.sqrt() / 2.0;
        let basis = [Vec2::new(1.5, -s), Vec2::new(1.5, s)];
        Self::new(
            basis,
            size,
            &[Vec2::zeros(), Vec2::new(1.0, 0.0)],
            if spinful { 2 } else { 1 },
        )
    }

    /// Unit square lattice with one orbital per cell.
    pub fn square(size: usize) -> Result<Self> {
        Self::new([Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)], size, &[Vec2::zeros()], 1)
    }

    pub fn basis(&self) -> &[Vec2; 2] {
        &self.basis
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn offsets(&self) -> &[Vec2] {
        &self.offsets
    }

    pub fn n_internal(&self) -> usize {
        self.offsets.len()
    }

    pub fn spin_components(&self) -> usize {
        self.spin_components
    }

    pub fn n_orbitals(&self) -> usize {
        self.offsets.len() / self.spin_components
    }

    pub fn n_cells(&self) -> usize {
        self.size * self.size
    }

    pub fn n_sites(&self) -> usize {
        self.n_cells() * self.n_internal()
    }

    /// `|l1 ^ l2|`.
    pub fn cell_area(&self) -> f64 {
        wedge(&self.basis[0], &self.basis[1]).abs()
    }

    /// `G1, G2` with `G_i . l_j = 2 pi delta_ij`.
    pub fn reciprocal_basis(&self) -> [Vec2; 2] {
        dual_basis(&self.basis)
    }

    /// Cartesian position of the Bravais point `n1 l1 + n2 l2`.
    pub fn cell_position(&self, cell: [i64; 2]) -> Vec2 {
        self.basis[0] * cell[0] as f64 + self.basis[1] * cell[1] as f64
    }

    pub fn position(&self, site: Site) -> Vec2 {
        self.cell_position([site.cell[0] as i64, site.cell[1] as i64]) + self.offsets[site.internal]
    }

    /// Lexicographic `(cell, internal)` index, used as the fermionic mode order.
    pub fn site_index(&self, site: Site) -> usize {
        (site.cell[0] * self.size + site.cell[1]) * self.n_internal() + site.internal
    }

    pub fn site(&self, index: usize) -> Site {
        let n = self.n_internal();
        let cell = index / n;
        Site { cell: [cell / self.size, cell % self.size], internal: index % n }
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.n_sites()).map(|i| self.site(i))
    }

    /// Wraps an integer cell coordinate onto the torus.
    pub fn wrap_cell(&self, cell: [i64; 2]) -> [usize; 2] {
        let l = self.size as i64;
        [cell[0].rem_euclid(l) as usize, cell[1].rem_euclid(l) as usize]
    }

    /// Minimum Euclidean distance over the nine periodic images.
    pub fn torus_distance(&self, x: Site, y: Site) -> f64 {
        let d = self.position(y) - self.position(x);
        let l = self.size as f64;
        let mut best = f64::INFINITY;
        for a in -1..=1 {
            for b in -1..=1 {
                let image = d + self.basis[0] * (a as f64 * l) + self.basis[1] * (b as f64 * l);
                best = best.min(image.norm());
            }
        }
        best
    }

    /// Reduced coordinates `(k . l1, k . l2) / 2 pi` of a Cartesian momentum.
    pub fn to_reduced(&self, k: &Vec2) -> [f64; 2] {
        [k.dot(&self.basis[0]) / (2.0 * PI), k.dot(&self.basis[1]) / (2.0 * PI)]
    }

    pub fn to_cartesian(&self, reduced: [f64; 2]) -> Vec2 {
        let g = self.reciprocal_basis();
        g[0] * reduced[0] + g[1] * reduced[1]
    }
}

/// Solves `G_i . a_j = 2 pi delta_ij` in closed form. Applying it twice
/// returns the original basis.
pub fn dual_basis(a: &[Vec2; 2]) -> [Vec2; 2] {
    let w = wedge(&a[0], &a[1]);
    let s = 2.0 * PI / w;
    [Vec2::new(a[1].y, -a[1].x) * s, Vec2::new(-a[0].y, a[0].x) * s]
}

/// Honeycomb nearest-neighbour vectors from an A site to its three B
/// neighbours.
pub fn nearest_neighbor_vectors() -> [Vec2; 3] {
    let s = 3f64.sqrt() / 2.0;
    [Vec2::new(1.0, 0.0), Vec2::new(-0.5, s), Vec2::new(-0.5, -s)]
}

/// Graphene Fermi points `(2 pi / 3, +- 2 pi / (3 sqrt 3))`.
pub fn honeycomb_fermi_points() -> [Vec2; 2] {
    let kx = 2.0 * PI / 3.0;
    let ky = 2.0 * PI / (3.0 * 3f64.sqrt());
    [Vec2::new(kx, ky), Vec2::new(kx, -ky)]
}
