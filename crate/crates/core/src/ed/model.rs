//! Second-quantised lattice models on a finite torus (or open cluster).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fock::{FockOperator, FockSpace};
use crate::bloch::BlochHamiltonian;
use crate::error::{Error, Result};
use crate::geometry::{LatticeSpec, Site, Vec2};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// Hoppings and interactions that cross the cluster edge are dropped.
    Open,
}

/// One directed term `amplitude psi+_to psi-_from`; `bond` points from the
/// annihilated site to the created one.
#[derive(Debug, Clone, PartialEq)]
pub struct HoppingTerm {
    pub to: usize,
    pub from: usize,
    pub amplitude: C64,
    pub bond: Vec2,
}

/// `v_{ab}(d)` between internal labels `a` (cell `x`) and `b` (cell `x - d`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEntry {
    pub cell: [i32; 2],
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

/// Density-density interaction `V = sum_{x,y} (n_x - c) v(x - y) (n_y - c)`,
/// with `c = 1/2` when `half_filling_shift` is set and `0` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityKernel {
    entries: Vec<KernelEntry>,
    half_filling_shift: bool,
}

impl DensityKernel {
    /// Requires `v_{ab}(d) = v_{ba}(-d)` for every entry.
    pub fn new(entries: Vec<KernelEntry>, half_filling_shift: bool) -> Result<Self> {
        for e in &entries {
            if !e.value.is_finite() {
                return Err(Error::AsymmetricKernel(format!("non-finite value at {:?}", e.cell)));
            }
            let partner: f64 = entries
                .iter()
                .filter(|p| p.cell == [-e.cell[0], -e.cell[1]] && p.a == e.b && p.b == e.a)
                .map(|p| p.value)
                .sum();
            let own: f64 = entries
                .iter()
                .filter(|p| p.cell == e.cell && p.a == e.a && p.b == e.b)
                .map(|p| p.value)
                .sum();
            if (partner - own).abs() > 1e-12 * own.abs().max(1.0) {
                return Err(Error::AsymmetricKernel(format!(
                    "v_{}{}({:?}) = {own} but v_{}{}(-d) = {partner}",
                    e.a, e.b, e.cell, e.b, e.a
                )));
            }
        }
        Ok(Self { entries, half_filling_shift })
    }

    /// `sum_x (n_{x,up} - 1/2)(n_{x,down} - 1/2)` for `n_orbitals` spinful orbitals.
    pub fn hubbard(n_orbitals: usize) -> Self {
        let entries = (0..n_orbitals)
            .flat_map(|o| {
                [(2 * o, 2 * o + 1), (2 * o + 1, 2 * o)].map(|(a, b)| KernelEntry { cell: [0, 0], a, b, value: 0.5 })
            })
            .collect();
        Self { entries, half_filling_shift: true }
    }

    /// Spinless nearest-neighbour repulsion `sum_<xy> (n_x - 1/2)(n_y - 1/2)`
    /// on the honeycomb lattice, one unit per bond.
    pub fn honeycomb_nearest_neighbour() -> Self {
        let entries = [[0, 0], [1, 0], [0, 1]]
            .into_iter()
            .flat_map(|c: [i32; 2]| {
                [
                    KernelEntry { cell: c, a: 0, b: 1, value: 0.5 },
                    KernelEntry { cell: [-c[0], -c[1]], a: 1, b: 0, value: 0.5 },
                ]
            })
            .collect();
        Self { entries, half_filling_shift: true }
    }

    pub fn entries(&self) -> &[KernelEntry] {
        &self.entries
    }

    pub fn half_filling_shift(&self) -> bool {
        self.half_filling_shift
    }
}

/// Spec of an exact-diagonalization model: geometry, one-body terms and interaction.
#[derive(Debug, Clone)]
pub struct EdModel {
    lattice: LatticeSpec,
    boundary: Boundary,
    terms: Vec<HoppingTerm>,
    /// Symmetric mode-pair couplings of `V`.
    pair: DMatrix<f64>,
    shift: f64,
    u: f64,
    space: FockSpace,
    tag: String,
}

fn cell_target(lat: &LatticeSpec, boundary: Boundary, y: [usize; 2], d: [i32; 2]) -> Option<[usize; 2]> {
    let raw = [y[0] as i64 + d[0] as i64, y[1] as i64 + d[1] as i64];
    match boundary {
        Boundary::Periodic => Some(lat.wrap_cell(raw)),
        Boundary::Open => {
            let l = lat.size() as i64;
            (0..l).contains(&raw[0]).then_some(())?;
            (0..l).contains(&raw[1]).then_some(())?;
            Some([raw[0] as usize, raw[1] as usize])
        }
    }
}

impl EdModel {
    /// Builds `H_L = sum psi+ H0(x - y) psi- + U V` on an `L x L` lattice with
    /// the orbital geometry of `h`, spin-diagonal when `spinful`.
    ///
    /// `particles` restricts the Fock space to the listed sectors (all by default).
    pub fn new(
        h: &BlochHamiltonian,
        size: usize,
        spinful: bool,
        boundary: Boundary,
        kernel: Option<&DensityKernel>,
        u: f64,
        particles: Option<&[usize]>,
    ) -> Result<Self> {
        let hops = h.hoppings().ok_or(Error::NoHoppingList)?;
        let lat = h.lattice(size, spinful)?;
        let m = lat.n_sites();
        let space = match particles {
            Some(p) => FockSpace::with_particle_numbers(m, p)?,
            None => FockSpace::new(m)?,
        };
        let spins = lat.spin_components();
        let cells: Vec<[usize; 2]> = (0..size).flat_map(|a| (0..size).map(move |b| [a, b])).collect();

        let mut terms = Vec::new();
        for &y in &cells {
            for hop in hops {
                let Some(x) = cell_target(&lat, boundary, y, hop.cell) else { continue };
                for row in 0..h.dim() {
                    for col in 0..h.dim() {
                        let amp = hop.matrix[(row, col)];
                        if amp == C64::default() {
                            continue;
                        }
                        for s in 0..spins {
                            terms.push(HoppingTerm {
                                to: lat.site_index(Site { cell: x, internal: row * spins + s }),
                                from: lat.site_index(Site { cell: y, internal: col * spins + s }),
                                amplitude: amp,
                                bond: h.bond_vector(hop.cell, row, col),
                            });
                        }
                    }
                }
            }
        }

        let mut pair = DMatrix::zeros(m, m);
        let mut shift = 0.0;
        if let Some(k) = kernel {
            let n = lat.n_internal();
            if let Some(e) = k.entries().iter().find(|e| e.a >= n || e.b >= n) {
                return Err(Error::InvalidParameter(format!("kernel label ({}, {}) exceeds {n} internal labels", e.a, e.b)));
            }
            for &x in &cells {
                for e in k.entries() {
                    // v(x - y) with y = x - d.
                    let Some(y) = cell_target(&lat, boundary, x, [-e.cell[0], -e.cell[1]]) else { continue };
                    let i = lat.site_index(Site { cell: x, internal: e.a });
                    let j = lat.site_index(Site { cell: y, internal: e.b });
                    pair[(i, j)] += e.value;
                }
            }
            shift = if k.half_filling_shift() { 0.5 } else { 0.0 };
        }

        Ok(Self { lattice: lat, boundary, terms, pair, shift, u, space, tag: h.tag().to_string() })
    }

    /// Honeycomb Hubbard model: nearest-neighbour hopping `-t` plus
    /// `U sum (n_up - 1/2)(n_down - 1/2)`.
    pub fn hubbard(size: usize, t: f64, u: f64, particles: Option<&[usize]>) -> Result<Self> {
        let h = BlochHamiltonian::graphene(t)?;
        Self::new(&h, size, true, Boundary::Periodic, Some(&DensityKernel::hubbard(2)), u, particles)
    }

    /// Spinless model with an arbitrary density-density kernel.
    pub fn gapped(h: &BlochHamiltonian, kernel: &DensityKernel, u: f64, size: usize) -> Result<Self> {
        Self::new(h, size, false, Boundary::Periodic, Some(kernel), u, None)
    }

    /// Same geometry and terms with a different coupling.
    pub fn with_coupling(&self, u: f64) -> Self {
        Self { u, ..self.clone() }
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn n_modes(&self) -> usize {
        self.space.n_modes()
    }

    pub fn terms(&self) -> &[HoppingTerm] {
        &self.terms
    }

    pub fn coupling(&self) -> f64 {
        self.u
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// `A L^2`.
    pub fn volume(&self) -> f64 {
        self.lattice.cell_area() * self.lattice.n_cells() as f64
    }

    /// Cartesian position of each mode inside the fundamental cluster.
    pub fn mode_positions(&self) -> Vec<Vec2> {
        self.lattice.sites().map(|s| self.lattice.position(s)).collect()
    }

    /// Quadratic part `H_L^0`.
    pub fn kinetic(&self) -> FockOperator {
        FockOperator::one_body(&self.space, self.terms.iter().map(|t| (t.to, t.from, t.amplitude)))
    }

    /// Interaction `V_L` (without the factor `U`).
    pub fn interaction(&self) -> FockOperator {
        let m = self.n_modes();
        let (pair, c) = (&self.pair, self.shift);
        FockOperator::diagonal(&self.space, |s| {
            let n: Vec<f64> = (0..m).map(|i| ((s >> i) & 1) as f64 - c).collect();
            let mut v = 0.0;
            for i in 0..m {
                if n[i] == 0.0 {
                    continue;
                }
                for j in 0..m {
                    v += n[i] * pair[(i, j)] * n[j];
                }
            }
            v
        })
    }

    /// `H_L = H_L^0 + U V_L`, checked Hermitian.
    pub fn hamiltonian(&self) -> Result<FockOperator> {
        let mut h = self.kinetic();
        if self.u != 0.0 {
            h = h.add(&self.interaction().scale(C64::new(self.u, 0.0)));
        }
        h.into_hermitian()
    }

    pub fn number_operator(&self) -> FockOperator {
        FockOperator::diagonal(&self.space, |s| s.count_ones() as f64)
    }

    pub fn density(&self, mode: usize) -> FockOperator {
        FockOperator::diagonal(&self.space, |s| ((s >> mode) & 1) as f64)
    }

    /// `sum_m r_{m,i} n_m` with the positions of [`Self::mode_positions`]; only
    /// meaningful on open clusters.
    pub fn position_operator(&self, direction: usize) -> FockOperator {
        let r = self.mode_positions();
        FockOperator::diagonal(&self.space, |s| (0..self.n_modes()).filter(|&m| (s >> m) & 1 == 1).map(|m| r[m][direction]).sum())
    }

    /// `J_i = sum_t (-i b_i) a_t psi+_to psi-_from`, which equals `i[H, X_i]`
    /// on an open cluster.
    pub fn current(&self, direction: usize) -> Result<FockOperator> {
        check_direction(direction)?;
        FockOperator::one_body(
            &self.space,
            self.terms.iter().map(|t| (t.to, t.from, C64::new(0.0, -t.bond[direction]) * t.amplitude)),
        )
        .into_hermitian()
    }

    /// Bond representation of `[[H, X_i], X_j]`: every term weighted by `b_i b_j`.
    pub fn double_commutator(&self, i: usize, j: usize) -> Result<FockOperator> {
        check_direction(i)?;
        check_direction(j)?;
        FockOperator::one_body(
            &self.space,
            self.terms.iter().map(|t| (t.to, t.from, t.amplitude * (t.bond[i] * t.bond[j]))),
        )
        .into_hermitian()
    }
}

pub(crate) fn check_direction(d: usize) -> Result<()> {
    if d > 1 {
        return Err(Error::InvalidParameter(format!("direction must be 0 or 1, got {d}")));
    }
    Ok(())
}
