//! Numerical core for two-dimensional tight-binding lattice models.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] builds Bravais lattices, reciprocal bases, Brillouin-zone
//!   quadrature meshes and torus distances.
//! * [`bloch`] builds Bloch Hamiltonians from hopping lists together with the
//!   analytic momentum-space current vertex, and measures spectral gaps.
//! * [`response`] evaluates the noninteracting current-current correlator,
//!   extracts conductivities through the Kubo zero-frequency limit and computes
//!   Chern numbers on a discretised Brillouin zone.
//! * [`ed`] performs exact diagonalization of interacting models on small tori.
//!
//! Units: `e = ħ = 1`, energies in units of the nearest-neighbour hopping, and
//! lengths in units of the nearest-neighbour bond length.

pub mod bloch;
pub mod ed;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod response;

pub use bloch::{fermi_points, spectral_gap, BlochHamiltonian, GapReport, Hopping};
pub use error::{Error, Result};
pub use geometry::{BzMesh, LatticeSpec, Refinement, Site, Vec2};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
pub use response::{Beta, ChernReport, ConductivityTensor, CorrelatorSeries, KuboTknnComparison, Units};
