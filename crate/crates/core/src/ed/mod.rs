//! Exact diagonalization of interacting lattice fermions on small tori.
//!
//! Operators are stored block-diagonally over particle-number sectors. Modes
//! follow the lexicographic `(cell, sublattice, spin)` order of
//! [`crate::LatticeSpec::site_index`].

mod continuity;
mod fock;
mod model;
mod thermal;

pub use continuity::{continuity_check, continuity_check_corrupted, ContinuityReport};
pub use fock::{hop, FockOperator, FockSpace, Sector, MAX_MODES, MAX_SECTOR_DIM};
pub use model::{Boundary, DensityKernel, EdModel, HoppingTerm, KernelEntry};
pub use thermal::{
    check_matsubara, half_filling_check, lehmann_correlator, matsubara_correlator_ed, sigma_interacting, u_scan,
    wick_rotation_check, GibbsState, UScanPoint, WickComparison,
};
