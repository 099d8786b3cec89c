//! Benchmark fixtures shared by the criterion targets.

use kubo_core::geometry::honeycomb_fermi_points;
use kubo_core::{BlochHamiltonian, BzMesh, LatticeSpec, Refinement};

/// Haldane model in its topological phase.
pub fn haldane() -> BlochHamiltonian {
    BlochHamiltonian::haldane(1.0, 0.2, std::f64::consts::FRAC_PI_2, 0.0).expect("valid parameters")
}

/// Graphene mesh of base size `n` refined to `depth` around the Dirac points.
pub fn graphene_mesh(n: usize, depth: u32) -> BzMesh {
    let lat = LatticeSpec::honeycomb(1, false).expect("valid lattice");
    let refine = Refinement { centers: honeycomb_fermi_points().to_vec(), depth };
    BzMesh::new(&lat, n, Some(&refine)).expect("valid mesh")
}
