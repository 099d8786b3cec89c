//! Gibbs states and Lehmann-representation response functions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fock::FockOperator;
use super::model::EdModel;
use crate::error::{Error, Result};
use crate::linalg::{eigh, to_basis};
use crate::response::{kubo_sigma_with, Beta, CMat2, ConductivityTensor, CorrelatorSeries, FitModel, Mat2};
use crate::C64;

/// Energy differences below this are treated as degenerate.
const DEGENERACY_TOL: f64 = 1e-10;

/// Eigen-decomposition of one particle-number block.
#[derive(Debug, Clone)]
struct SectorEigen {
    particles: usize,
    energies: DVector<f64>,
    vectors: DMatrix<C64>,
    weights: DVector<f64>,
}

/// `e^{-beta (H - mu N)} / Z` in the eigenbasis of `H`.
#[derive(Debug, Clone)]
pub struct GibbsState {
    sectors: Vec<SectorEigen>,
    beta: f64,
    mu: f64,
    log_z: f64,
}

impl GibbsState {
    pub fn new(h: &FockOperator, model: &EdModel, beta: f64, mu: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
        }
        if !model.space().is_complete() {
            return Err(Error::InvalidParameter("Gibbs state needs every particle-number sector".into()));
        }
        let mut sectors: Vec<SectorEigen> = model
            .space()
            .sectors()
            .iter()
            .zip(h.blocks())
            .map(|(s, b)| {
                let e = eigh(b.clone());
                SectorEigen { particles: s.particles(), energies: e.values, vectors: e.vectors, weights: DVector::zeros(0) }
            })
            .collect();
        let grand = |s: &SectorEigen, e: f64| e - mu * s.particles as f64;
        let k_min = sectors
            .iter()
            .flat_map(|s| s.energies.iter().map(move |&e| grand(s, e)))
            .fold(f64::INFINITY, f64::min);
        let mut z = 0.0;
        for s in &mut sectors {
            let n = s.particles as f64;
            s.weights = s.energies.map(|e| (-beta * (e - mu * n - k_min)).exp());
            z += s.weights.sum();
        }
        for s in &mut sectors {
            s.weights /= z;
        }
        Ok(Self { sectors, beta, mu, log_z: z.ln() - beta * k_min })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    pub fn weight_sum(&self) -> f64 {
        self.sectors.iter().map(|s| s.weights.sum()).sum()
    }

    /// All eigenvalues of `H`, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.sectors.iter().flat_map(|s| s.energies.iter().copied()).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Gap of `H - mu N` above its ground state, over all sectors.
    pub fn gap(&self) -> f64 {
        let mut k: Vec<f64> = self
            .sectors
            .iter()
            .flat_map(|s| s.energies.iter().map(move |&e| e - self.mu * s.particles as f64))
            .collect();
        k.sort_by(f64::total_cmp);
        k.iter().skip(1).map(|&x| x - k[0]).find(|&d| d > 1e-9).unwrap_or(0.0)
    }

    /// `Tr(rho O)`.
    pub fn expectation(&self, op: &FockOperator) -> C64 {
        self.sectors
            .iter()
            .zip(op.blocks())
            .map(|(s, b)| {
                let ob = to_basis(b, &s.vectors);
                (0..s.weights.len()).map(|m| ob[(m, m)] * s.weights[m]).sum::<C64>()
            })
            .sum()
    }

    fn in_eigenbasis(&self, op: &FockOperator) -> Vec<DMatrix<C64>> {
        self.sectors.iter().zip(op.blocks()).map(|(s, b)| to_basis(b, &s.vectors)).collect()
    }
}

/// Per-sector Lehmann sum `sum_mn g(p_m, p_n, E_m - E_n) (A)_mn (B)_nm`.
fn lehmann(
    state: &GibbsState,
    a: &[DMatrix<C64>],
    b: &[DMatrix<C64>],
    kernel: impl Fn(f64, f64, f64) -> C64,
) -> C64 {
    let mut total = C64::default();
    for (s, (am, bm)) in state.sectors.iter().zip(a.iter().zip(b)) {
        let d = s.energies.len();
        for m in 0..d {
            for n in 0..d {
                let mat = am[(m, n)] * bm[(n, m)];
                if mat == C64::default() {
                    continue;
                }
                total += kernel(s.weights[m], s.weights[n], s.energies[m] - s.energies[n]) * mat;
            }
        }
    }
    total
}

/// `K_ij(w) = (1/(A L^2)) sum_mn (p_n - p_m) / (iw + E_m - E_n) (J_i)_mn (J_j)_nm`,
/// with the `beta p_m` limit for degenerate pairs at `w = 0`. Any real `w` is
/// accepted; on the Matsubara grid this is the imaginary-time correlator.
fn correlator_at(state: &GibbsState, currents: &[Vec<DMatrix<C64>>; 2], omega: f64, volume: f64) -> CMat2 {
    let beta = state.beta;
    let mut k = [[C64::default(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let v = lehmann(state, &currents[i], &currents[j], |pm, pn, de| {
                if omega == 0.0 && de.abs() < DEGENERACY_TOL {
                    C64::new(beta * pm, 0.0)
                } else {
                    C64::new(pn - pm, 0.0) / C64::new(de, omega)
                }
            });
            k[i][j] = v / volume;
        }
    }
    k
}

/// Correlator series of an exactly diagonalised model at arbitrary real `w`
/// (`w = 0` is always included first).
pub fn lehmann_correlator(model: &EdModel, state: &GibbsState, omegas: &[f64]) -> Result<CorrelatorSeries> {
    let mut ws = vec![0.0];
    for &w in omegas {
        if !w.is_finite() {
            return Err(Error::InvalidParameter(format!("frequencies must be finite, got {w}")));
        }
        if !ws.contains(&w) {
            ws.push(w);
        }
    }
    let currents = [state.in_eigenbasis(&model.current(0)?), state.in_eigenbasis(&model.current(1)?)];
    let volume = model.volume();
    let values = ws.iter().map(|&w| correlator_at(state, &currents, w, volume)).collect();
    Ok(CorrelatorSeries {
        omegas: ws,
        values,
        beta: Beta::Finite(state.beta),
        mesh_n: model.lattice().size(),
        model_tag: format!("ed:{}", model.tag()),
    })
}

/// Checks `w in (2 pi / beta) Z` to relative precision `1e-9`.
pub fn check_matsubara(omega: f64, beta: f64) -> Result<()> {
    let n = omega * beta / (2.0 * PI);
    if (n - n.round()).abs() > 1e-9 * n.abs().max(1.0) {
        return Err(Error::OffGridFrequency { omega, beta });
    }
    Ok(())
}

/// `K_ij(w)` on Matsubara frequencies (`w = 0` included automatically).
pub fn matsubara_correlator_ed(model: &EdModel, beta: f64, mu: f64, omegas: &[f64]) -> Result<CorrelatorSeries> {
    for &w in omegas {
        check_matsubara(w, beta)?;
    }
    let h = model.hamiltonian()?;
    let state = GibbsState::new(&h, model, beta, mu)?;
    let nonzero: Vec<f64> = omegas.iter().copied().filter(|&w| w != 0.0).collect();
    lehmann_correlator(model, &state, &nonzero)
}

/// Conductivity of a gapped finite system: the analytic (no `w log w`) fit
/// applied to the Lehmann correlator at the requested frequencies.
pub fn sigma_interacting(model: &EdModel, beta: f64, mu: f64, omegas: &[f64]) -> Result<ConductivityTensor> {
    let h = model.hamiltonian()?;
    let state = GibbsState::new(&h, model, beta, mu)?;
    if state.gap() <= 1e-9 {
        return Err(Error::GaplessSpectrum);
    }
    kubo_sigma_with(&lehmann_correlator(model, &state, omegas)?, FitModel::Analytic)
}

/// `<N>/M`.
pub fn half_filling_check(model: &EdModel, beta: f64, mu: f64) -> Result<f64> {
    let h = model.hamiltonian()?;
    let state = GibbsState::new(&h, model, beta, mu)?;
    Ok(state.expectation(&model.number_operator()).re / model.n_modes() as f64)
}

/// Both sides of the real-time/imaginary-time identity at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WickComparison {
    pub omega: f64,
    pub t_max: f64,
    /// `-[K_ij(w) - K_ij(0)]/w` from the imaginary-time correlator.
    pub imaginary_time: Mat2,
    /// `(1/w)(i int_{-T}^0 e^{wt} <[J_i(t), J_j]> dt - <[[H, X_i], X_j]>) / (A L^2)`.
    pub real_time: Mat2,
    /// `|imaginary_time[j][i] - real_time[i][j]|`: with `J_i(t)` on the left of
    /// the commutator the real-time side reproduces the transpose.
    pub difference: Mat2,
    /// `e^{-w T}`.
    pub truncation: f64,
    /// Largest imaginary part discarded from either side.
    pub max_imaginary: f64,
}

pub fn wick_rotation_check(model: &EdModel, beta: f64, mu: f64, t_max: f64, omega: f64) -> Result<WickComparison> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("T_max must be positive, got {t_max}")));
    }
    let h = model.hamiltonian()?;
    let state = GibbsState::new(&h, model, beta, mu)?;
    let currents = [state.in_eigenbasis(&model.current(0)?), state.in_eigenbasis(&model.current(1)?)];
    let volume = model.volume();
    let k0 = correlator_at(&state, &currents, 0.0, volume);
    let kw = correlator_at(&state, &currents, omega, volume);

    let mut out = WickComparison {
        omega,
        t_max,
        imaginary_time: [[0.0; 2]; 2],
        real_time: [[0.0; 2]; 2],
        difference: [[0.0; 2]; 2],
        truncation: (-omega * t_max).exp(),
        max_imaginary: 0.0,
    };
    for i in 0..2 {
        for j in 0..2 {
            let lhs = -(kw[i][j] - k0[i][j]) / omega;
            // i int_{-T}^0 e^{(w + i D) t} dt = i (1 - e^{-(w + i D) T}) / (w + i D)
            let retarded = lehmann(&state, &currents[i], &currents[j], |pm, pn, de| {
                let z = C64::new(omega, de);
                C64::new(0.0, pm - pn) * (C64::new(1.0, 0.0) - (-z * t_max).exp()) / z
            });
            let dc = state.expectation(&model.double_commutator(i, j)?);
            let rhs = (retarded - dc) / (omega * volume);
            out.imaginary_time[i][j] = lhs.re;
            out.real_time[i][j] = rhs.re;
            out.max_imaginary = out.max_imaginary.max(lhs.im.abs()).max(rhs.im.abs());
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            out.difference[i][j] = (out.imaginary_time[j][i] - out.real_time[i][j]).abs();
        }
    }
    Ok(out)
}

/// One point of an interaction scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UScanPoint {
    pub size: usize,
    pub u: f64,
    pub sigma12: f64,
    /// `|sigma_12(U) - sigma_12(0)|` in natural units.
    pub deviation: f64,
}

/// `sigma_12(U)` for each `U` (and `U = 0` as reference) at fixed geometry.
pub fn u_scan(model: &EdModel, couplings: &[f64], beta: f64, mu: f64, omegas: &[f64]) -> Result<Vec<UScanPoint>> {
    let reference = sigma_interacting(&model.with_coupling(0.0), beta, mu, omegas)?.natural()[0][1];
    couplings
        .iter()
        .map(|&u| {
            let s = sigma_interacting(&model.with_coupling(u), beta, mu, omegas)?.natural()[0][1];
            Ok(UScanPoint { size: model.lattice().size(), u, sigma12: s, deviation: (s - reference).abs() })
        })
        .collect()
}
