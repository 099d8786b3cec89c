//! Occupation-number basis and number-conserving operators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::C64;

/// Largest number of fermionic modes accepted.
pub const MAX_MODES: usize = 28;
/// Largest particle-number block materialised as a dense matrix.
pub const MAX_SECTOR_DIM: usize = 5000;

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Occupation bitstrings with exactly `particles` set bits, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    particles: usize,
    states: Vec<u32>,
}

impl Sector {
    fn new(n_modes: usize, particles: usize) -> Result<Self> {
        let dim = binomial(n_modes, particles);
        if dim > MAX_SECTOR_DIM {
            return Err(Error::SectorTooLarge(dim));
        }
        let mut states = Vec::with_capacity(dim);
        if particles == 0 {
            states.push(0);
        } else {
            // Gosper's hack enumerates k-subsets in increasing numeric order.
            let mut s: u64 = (1u64 << particles) - 1;
            while s < (1u64 << n_modes) {
                states.push(s as u32);
                let c = s & s.wrapping_neg();
                let r = s + c;
                s = (((r ^ s) >> 2) / c) | r;
            }
        }
        Ok(Self { particles, states })
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn index_of(&self, state: u32) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }
}

/// Fock space of `M` modes, restricted to a set of particle-number sectors.
///
/// Mode `m` is bit `m` of the occupation bitstring. Creation and annihilation
/// operators carry the sign `(-1)^(number of occupied modes below m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSpace {
    n_modes: usize,
    sectors: Vec<Sector>,
}

impl FockSpace {
    /// All sectors `N = 0..=M`.
    pub fn new(n_modes: usize) -> Result<Self> {
        Self::with_particle_numbers(n_modes, &(0..=n_modes).collect::<Vec<_>>())
    }

    pub fn with_particle_numbers(n_modes: usize, particles: &[usize]) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter("Fock space needs at least one mode".into()));
        }
        if n_modes > MAX_MODES {
            return Err(Error::TooManyModes(n_modes));
        }
        let mut numbers = particles.to_vec();
        numbers.sort_unstable();
        numbers.dedup();
        if let Some(&n) = numbers.iter().find(|&&n| n > n_modes) {
            return Err(Error::InvalidParameter(format!("{n} particles in {n_modes} modes")));
        }
        let sectors = numbers.into_iter().map(|n| Sector::new(n_modes, n)).collect::<Result<_>>()?;
        Ok(Self { n_modes, sectors })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn dim(&self) -> usize {
        self.sectors.iter().map(Sector::dim).sum()
    }

    /// True when every sector `0..=M` is present.
    pub fn is_complete(&self) -> bool {
        self.sectors.len() == self.n_modes + 1
    }
}

/// Sign of `psi+_to psi-_from` acting on `state`, with the resulting state.
#[inline]
pub fn hop(state: u32, to: usize, from: usize) -> Option<(f64, u32)> {
    if state & (1 << from) == 0 {
        return None;
    }
    let s1 = state ^ (1 << from);
    if s1 & (1 << to) != 0 {
        return None;
    }
    let below = |s: u32, m: usize| (s & ((1u32 << m) - 1)).count_ones();
    let parity = below(state, from) + below(s1, to);
    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, s1 | (1 << to)))
}

/// A particle-number-conserving operator stored as one dense block per sector.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    blocks: Vec<DMatrix<C64>>,
    hermitian: bool,
}

impl FockOperator {
    pub fn zeros(space: &FockSpace) -> Self {
        let blocks = space.sectors().iter().map(|s| DMatrix::zeros(s.dim(), s.dim())).collect();
        Self { blocks, hermitian: true }
    }

    /// `sum_t a_t psi+_{to_t} psi-_{from_t}`.
    pub fn one_body(space: &FockSpace, terms: impl IntoIterator<Item = (usize, usize, C64)> + Clone) -> Self {
        let mut op = Self::zeros(space);
        op.hermitian = false;
        for (sector, block) in space.sectors().iter().zip(op.blocks.iter_mut()) {
            for (col, &state) in sector.states().iter().enumerate() {
                for (to, from, amp) in terms.clone() {
                    if let Some((sign, out)) = hop(state, to, from) {
                        let row = sector.index_of(out).expect("hopping conserves particle number");
                        block[(row, col)] += amp * sign;
                    }
                }
            }
        }
        op
    }

    /// Operator diagonal in the occupation basis.
    pub fn diagonal(space: &FockSpace, f: impl Fn(u32) -> f64) -> Self {
        let blocks = space
            .sectors()
            .iter()
            .map(|s| DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(s.dim(), s.states().iter().map(|&x| C64::new(f(x), 0.0)))))
            .collect();
        Self { blocks, hermitian: true }
    }

    /// Marks the operator Hermitian after checking `||O - O+|| <= 1e-12`.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let defect = self.hermiticity_defect();
        if defect > 1e-12 {
            return Err(Error::InvalidParameter(format!("operator is not Hermitian (defect {defect:e})")));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    pub fn block(&self, sector: usize) -> &DMatrix<C64> {
        &self.blocks[sector]
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&DMatrix<C64>, &DMatrix<C64>) -> DMatrix<C64>) -> Self {
        assert_eq!(self.blocks.len(), other.blocks.len(), "operators on different spaces");
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect();
        Self { blocks, hermitian: false }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b - b * a)
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { blocks: self.blocks.iter().map(|b| b * z).collect(), hermitian: self.hermitian && z.im == 0.0 }
    }

    pub fn adjoint(&self) -> Self {
        Self { blocks: self.blocks.iter().map(|b| b.adjoint()).collect(), hermitian: self.hermitian }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.blocks.iter().map(linalg::hermiticity_defect).fold(0.0, f64::max)
    }

    /// Largest Frobenius norm over the sector blocks.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm()).fold(0.0, f64::max)
    }
}
