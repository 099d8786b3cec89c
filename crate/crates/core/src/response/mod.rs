//! Noninteracting linear response: the current-current bubble, the Kubo
//! zero-frequency limit, and Chern numbers.
//!
//! The correlator is normalised per unit area,
//!
//! ```text
//! K_ij(w) = s/(4 pi^2) sum_k w_k sum_{a,b} (f_b - f_a) / (i w + E_a - E_b) <a|J_i|b><b|J_j|a>
//! ```
//!
//! with `s` the spin degeneracy and mesh weights summing to the zone area, so
//! that on the finite torus it reduces to `(1 / A L^2) sum_k`.

mod chern;
mod fit;

pub use chern::{fhs_chern, kubo_vs_tknn, tknn_sigma12, ChernReport, KuboTknnComparison};
pub use fit::{kubo_sigma, kubo_sigma_with, Extrapolation, FitModel};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::BlochHamiltonian;
use crate::error::{Error, Result};
use crate::geometry::{BzMesh, Vec2};
use crate::linalg::{eigh, to_basis};
use crate::C64;

/// Inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn from_f64(beta: f64) -> Self {
        if beta.is_infinite() {
            Beta::Infinite
        } else {
            Beta::Finite(beta)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }

    /// Fermi function `1 / (e^{beta (e - mu)} + 1)`; a step at infinite beta.
    pub fn fermi(self, e: f64, mu: f64) -> f64 {
        match self {
            Beta::Infinite => {
                if e < mu {
                    1.0
                } else if e > mu {
                    0.0
                } else {
                    0.5
                }
            }
            Beta::Finite(b) => {
                let x = b * (e - mu);
                if x > 0.0 {
                    let y = (-x).exp();
                    y / (1.0 + y)
                } else {
                    1.0 / (1.0 + x.exp())
                }
            }
        }
    }
}

/// Units of a conductivity: natural (`e = hbar = 1`) or multiples of `e^2/h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Natural,
    E2OverH,
}

impl Units {
    /// Multiplier taking a natural-units value into these units.
    pub fn from_natural(self) -> f64 {
        match self {
            Units::Natural => 1.0,
            Units::E2OverH => 2.0 * PI,
        }
    }
}

pub type Mat2 = [[f64; 2]; 2];
pub type CMat2 = [[C64; 2]; 2];

/// A 2x2 conductivity tensor.
///
/// Values are held in natural units and presented in `units`, so unit
/// conversions round-trip exactly. The extrapolation record is always in
/// natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductivityTensor {
    natural: Mat2,
    natural_uncertainty: Mat2,
    pub units: Units,
    pub extrapolation: Option<Extrapolation>,
}

impl ConductivityTensor {
    pub fn new(natural: Mat2, uncertainty: Mat2, extrapolation: Option<Extrapolation>) -> Self {
        Self { natural, natural_uncertainty: uncertainty, units: Units::Natural, extrapolation }
    }

    pub fn to_units(&self, units: Units) -> Self {
        Self { units, ..self.clone() }
    }

    /// Tensor entries in `self.units`.
    pub fn sigma(&self) -> Mat2 {
        let f = self.units.from_natural();
        self.natural.map(|row| row.map(|x| x * f))
    }

    pub fn uncertainty(&self) -> Mat2 {
        let f = self.units.from_natural();
        self.natural_uncertainty.map(|row| row.map(|x| x * f))
    }

    pub fn natural(&self) -> Mat2 {
        self.natural
    }
}

/// `K_ij(w)` sampled on a frequency list whose first entry is `w = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSeries {
    pub omegas: Vec<f64>,
    pub values: Vec<CMat2>,
    pub beta: Beta,
    pub mesh_n: usize,
    pub model_tag: String,
}

impl CorrelatorSeries {
    pub fn value_at(&self, omega: f64) -> Option<&CMat2> {
        self.omegas.iter().position(|&w| w == omega).map(|i| &self.values[i])
    }
}

/// Default frequency grid, in units of the hopping.
pub const DEFAULT_OMEGAS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

/// Energy differences below this are treated as exact degeneracies.
const DEGENERACY_TOL: f64 = 1e-10;

/// Points handled per work unit; partial sums are reduced in index order.
const CHUNK: usize = 2048;

fn zero2() -> CMat2 {
    [[C64::default(); 2]; 2]
}

fn add2(a: &mut CMat2, b: &CMat2) {
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] += b[i][j];
        }
    }
}

/// Frequencies with `0` prepended (and not duplicated).
fn with_zero(omegas: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0];
    for &w in omegas {
        if !(w > 0.0) || !w.is_finite() {
            if w == 0.0 {
                continue;
            }
            return Err(Error::InvalidParameter(format!("frequencies must be positive, got {w}")));
        }
        out.push(w);
    }
    Ok(out)
}

struct PointResult {
    /// Per frequency.
    bubble: Vec<CMat2>,
    /// `sum_a f_a <a|J_i|a>`.
    current: [f64; 2],
}

fn point_bubble(
    h: &BlochHamiltonian,
    k: &Vec2,
    mu: f64,
    beta: Beta,
    omegas: &[f64],
) -> Result<PointResult> {
    let eig = eigh(h.eval_offset_gauge(k)?);
    let j = [
        to_basis(&h.current_vertex(k, 0)?, &eig.vectors),
        to_basis(&h.current_vertex(k, 1)?, &eig.vectors),
    ];
    let n = h.dim();
    let f: Vec<f64> = eig.values.iter().map(|&e| beta.fermi(e, mu)).collect();
    let mut bubble = vec![zero2(); omegas.len()];
    let mut current = [0.0; 2];
    for a in 0..n {
        for d in 0..2 {
            current[d] += f[a] * j[d][(a, a)].re;
        }
        for b in 0..n {
            let gap = eig.values[a] - eig.values[b];
            let degenerate = gap.abs() < DEGENERACY_TOL;
            if !degenerate && f[a] == f[b] {
                continue;
            }
            let mut m = zero2();
            for i in 0..2 {
                for jj in 0..2 {
                    m[i][jj] = j[i][(a, b)] * j[jj][(b, a)];
                }
            }
            for (slot, &w) in omegas.iter().enumerate() {
                let kernel = if degenerate {
                    match beta {
                        Beta::Finite(bv) if w == 0.0 => C64::new(bv * f[a] * (1.0 - f[a]), 0.0),
                        _ => continue,
                    }
                } else {
                    C64::new(f[b] - f[a], 0.0) / C64::new(gap, w)
                };
                for i in 0..2 {
                    for jj in 0..2 {
                        bubble[slot][i][jj] += kernel * m[i][jj];
                    }
                }
            }
        }
    }
    Ok(PointResult { bubble, current })
}

/// Weighted sum of per-point bubbles, plus the weighted mean current.
fn reduce_bubble(
    h: &BlochHamiltonian,
    mu: f64,
    beta: Beta,
    mesh: &BzMesh,
    omegas: &[f64],
) -> Result<(Vec<CMat2>, [f64; 2])> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let chunks: Vec<Result<(Vec<CMat2>, [f64; 2])>> = (0..mesh.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![zero2(); omegas.len()];
            let mut cur = [0.0; 2];
            for i in c * CHUNK..((c + 1) * CHUNK).min(mesh.len()) {
                let w = mesh.weight(i);
                let p = point_bubble(h, &mesh.point(i), mu, beta, omegas)?;
                for (a, b) in acc.iter_mut().zip(&p.bubble) {
                    for r in 0..2 {
                        for s in 0..2 {
                            a[r][s] += b[r][s] * w;
                        }
                    }
                }
                cur[0] += p.current[0] * w;
                cur[1] += p.current[1] * w;
            }
            Ok((acc, cur))
        })
        .collect();
    let mut total = vec![zero2(); omegas.len()];
    let mut current = [0.0; 2];
    for chunk in chunks {
        let (acc, cur) = chunk?;
        for (t, a) in total.iter_mut().zip(&acc) {
            add2(t, a);
        }
        current[0] += cur[0];
        current[1] += cur[1];
    }
    Ok((total, current))
}

/// The current-current bubble on a quadrature mesh, in the band (Lehmann)
/// representation. `w = 0` is prepended to `omegas`.
pub fn kubo_correlator_free(
    h: &BlochHamiltonian,
    mu: f64,
    beta: Beta,
    mesh: &BzMesh,
    omegas: &[f64],
) -> Result<CorrelatorSeries> {
    let omegas = with_zero(omegas)?;
    let (sums, _) = reduce_bubble(h, mu, beta, mesh, &omegas)?;
    let norm = h.spin_degeneracy() / (4.0 * PI * PI);
    let values = sums
        .into_iter()
        .map(|m| m.map(|row| row.map(|z| z * norm)))
        .collect();
    Ok(CorrelatorSeries {
        omegas,
        values,
        beta,
        mesh_n: mesh.base_n(),
        model_tag: h.tag().to_string(),
    })
}

/// The exact grand-canonical correlator of the free model on the `L x L`
/// torus (allowed momenta only), including the disconnected
/// `beta <J_i><J_j>` piece at `w = 0`.
pub fn torus_correlator_free(
    h: &BlochHamiltonian,
    size: usize,
    mu: f64,
    beta: Beta,
    omegas: &[f64],
) -> Result<CorrelatorSeries> {
    let lat = h.lattice(size, false)?;
    let mesh = BzMesh::torus(&lat);
    let omegas = with_zero(omegas)?;
    let (sums, current) = reduce_bubble(h, mu, beta, &mesh, &omegas)?;
    let s = h.spin_degeneracy();
    let norm = s / (4.0 * PI * PI);
    let mut values: Vec<CMat2> = sums
        .into_iter()
        .map(|m| m.map(|row| row.map(|z| z * norm)))
        .collect();
    if let Beta::Finite(b) = beta {
        // Total current <J> = s * sum_k sum_a f_a J_aa.
        let scale = s * (size * size) as f64 / mesh.bz_area();
        let jt = [current[0] * scale, current[1] * scale];
        let denom = lat.cell_area() * (size * size) as f64;
        for i in 0..2 {
            for j in 0..2 {
                values[0][i][j] += C64::new(b * jt[i] * jt[j] / denom, 0.0);
            }
        }
    }
    Ok(CorrelatorSeries {
        omegas,
        values,
        beta,
        mesh_n: size,
        model_tag: h.tag().to_string(),
    })
}

/// Single-particle spectrum of the free model on the `L x L` torus, sorted.
pub fn torus_spectrum(h: &BlochHamiltonian, size: usize) -> Result<Vec<f64>> {
    let lat = h.lattice(size, false)?;
    let mesh = BzMesh::torus(&lat);
    let mut out: Vec<f64> = (0..mesh.len()).flat_map(|i| h.energies(&mesh.point(i))).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Dense `d^2 H~ / dk_i dk_j`-weighted occupation sum, i.e. the free-fermion
/// expectation of the bond-resolved double commutator per unit area.
pub fn diamagnetic_free(
    h: &BlochHamiltonian,
    mu: f64,
    beta: Beta,
    mesh: &BzMesh,
) -> Result<Mat2> {
    let mut out = [[0.0; 2]; 2];
    for (k, w) in mesh.iter() {
        let eig = eigh(h.eval_offset_gauge(&k)?);
        for i in 0..2 {
            for j in 0..2 {
                let d: DMatrix<C64> = to_basis(&h.vertex_second(&k, i, j)?, &eig.vectors);
                for a in 0..h.dim() {
                    // [[H, X_i], X_j] maps to -d_i d_j H~.
                    out[i][j] -= w * beta.fermi(eig.values[a], mu) * d[(a, a)].re;
                }
            }
        }
    }
    let norm = h.spin_degeneracy() / (4.0 * PI * PI);
    Ok(out.map(|row| row.map(|x| x * norm)))
}
