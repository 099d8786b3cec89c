//! Chern numbers from link variables on a discretised Brillouin zone, and the
//! TKNN identification of the Hall conductivity.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{kubo_correlator_free, kubo_sigma, Beta, ConductivityTensor, Mat2, Units};
use crate::bloch::{spectral_gap, BlochHamiltonian};
use crate::error::{Error, Result};
use crate::geometry::{BzMesh, Vec2};
use crate::linalg::eigh;
use crate::C64;

/// Plaquette fluxes must stay this far inside `(-pi, pi]`.
const ADMISSIBILITY_MARGIN: f64 = 0.01;
/// Automatic mesh doublings on an admissibility violation.
const MAX_RETRIES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernReport {
    pub chern: i64,
    pub mesh_n: usize,
    pub max_abs_flux: f64,
    /// Flux sum over `2 pi` before rounding.
    pub raw: f64,
    pub bands_below_mu: usize,
    /// Per-band integers, when every band is isolated on the mesh.
    pub band_cherns: Option<Vec<i64>>,
    pub spin_degeneracy: f64,
}

struct FluxSum {
    raw: f64,
    max_abs: f64,
}

fn link(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Option<C64> {
    let det = (a.adjoint() * b).determinant();
    let norm = det.norm();
    if norm < 1e-12 {
        None
    } else {
        Some(det / norm)
    }
}

/// Sum of plaquette fluxes for the frames selected by `columns` at every node.
fn flux_sum(frames: &[DMatrix<C64>], n: usize) -> Option<FluxSum> {
    let at = |i: usize, j: usize| &frames[(i % n) * n + (j % n)];
    let mut raw = 0.0;
    let mut max_abs = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let u1 = link(at(i, j), at(i + 1, j))?;
            let u2 = link(at(i + 1, j), at(i + 1, j + 1))?;
            let u3 = link(at(i, j + 1), at(i + 1, j + 1))?;
            let u4 = link(at(i, j), at(i, j + 1))?;
            let f = (u1 * u2 * u3.conj() * u4.conj()).arg();
            max_abs = max_abs.max(f.abs());
            raw += f;
        }
    }
    Some(FluxSum { raw: raw / (2.0 * PI), max_abs })
}

fn eigen_frames(h: &BlochHamiltonian, n: usize) -> Vec<(Vec<f64>, DMatrix<C64>)> {
    let lat = h.lattice(1, false).expect("model geometry is valid");
    (0..n * n)
        .map(|idx| {
            let k: Vec2 = lat.to_cartesian([(idx / n) as f64 / n as f64, (idx % n) as f64 / n as f64]);
            let e = eigh(h.eval(&k));
            (e.values.iter().copied().collect(), e.vectors)
        })
        .collect()
}

fn chern_at(h: &BlochHamiltonian, mu: f64, n: usize) -> Result<ChernReport> {
    let nodes = eigen_frames(h, n);
    let occ = nodes[0].0.iter().filter(|&&e| e < mu).count();
    if nodes.iter().any(|(e, _)| e.iter().filter(|&&x| x < mu).count() != occ) {
        return Err(Error::Gapless { mu, delta: 0.0, mesh_n: n });
    }
    let frames: Vec<DMatrix<C64>> = nodes.iter().map(|(_, v)| v.columns(0, occ).into_owned()).collect();
    let sum = if occ == 0 {
        FluxSum { raw: 0.0, max_abs: 0.0 }
    } else {
        flux_sum(&frames, n).ok_or(Error::InadmissibleFlux { flux: f64::NAN, mesh_n: n })?
    };
    if sum.max_abs > PI - ADMISSIBILITY_MARGIN {
        return Err(Error::InadmissibleFlux { flux: sum.max_abs, mesh_n: n });
    }
    let chern = sum.raw.round();
    if (sum.raw - chern).abs() > 1e-6 {
        return Err(Error::NonIntegerChern(sum.raw));
    }

    let dim = h.dim();
    let isolated = nodes.iter().all(|(e, _)| e.windows(2).all(|p| p[1] - p[0] > 1e-8));
    let band_cherns = if isolated {
        (0..dim)
            .map(|b| {
                let f: Vec<DMatrix<C64>> = nodes.iter().map(|(_, v)| v.columns(b, 1).into_owned()).collect();
                flux_sum(&f, n).and_then(|s| {
                    let r = s.raw.round();
                    ((s.raw - r).abs() <= 1e-6 && s.max_abs <= PI - ADMISSIBILITY_MARGIN).then_some(r as i64)
                })
            })
            .collect()
    } else {
        None
    };

    Ok(ChernReport {
        chern: chern as i64,
        mesh_n: n,
        max_abs_flux: sum.max_abs,
        raw: sum.raw,
        bands_below_mu: occ,
        band_cherns,
        spin_degeneracy: h.spin_degeneracy(),
    })
}

/// Chern number of the bands below `mu` on an `n x n` grid of link variables.
///
/// The grid is doubled (at most twice) when a plaquette flux leaves the
/// admissible window.
pub fn fhs_chern(h: &BlochHamiltonian, mu: f64, n: usize) -> Result<ChernReport> {
    if n < 6 {
        return Err(Error::InvalidParameter(format!("Chern mesh must be >= 6, got {n}")));
    }
    let lat = h.lattice(1, false)?;
    let gap = spectral_gap(h, mu, &BzMesh::new(&lat, n, None)?)?;
    if !(gap.delta_mu > 1e-9) {
        return Err(Error::Gapless { mu, delta: gap.delta_mu, mesh_n: n });
    }
    let mut size = n;
    let mut last = None;
    for _ in 0..=MAX_RETRIES {
        match chern_at(h, mu, size) {
            Err(e @ Error::InadmissibleFlux { .. }) => {
                last = Some(e);
                size *= 2;
            }
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// `sigma_12 = -sigma_21 = s C e^2/h`, diagonal zero, exact.
pub fn tknn_sigma12(report: &ChernReport) -> ConductivityTensor {
    let s12 = report.spin_degeneracy * report.chern as f64 / (2.0 * PI);
    ConductivityTensor::new([[0.0, s12], [-s12, 0.0]], [[0.0; 2]; 2], None).to_units(Units::E2OverH)
}

/// Kubo and TKNN Hall conductivities computed independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KuboTknnComparison {
    pub kubo: ConductivityTensor,
    pub tknn: ConductivityTensor,
    pub chern: ChernReport,
    /// `|kubo - tknn|` per entry, in units of `e^2/h`.
    pub discrepancy: Mat2,
}

pub fn kubo_vs_tknn(
    h: &BlochHamiltonian,
    mu: f64,
    mesh: &BzMesh,
    omegas: &[f64],
    n: usize,
) -> Result<KuboTknnComparison> {
    let series = kubo_correlator_free(h, mu, Beta::Infinite, mesh, omegas)?;
    let kubo = kubo_sigma(&series)?.to_units(Units::E2OverH);
    let chern = fhs_chern(h, mu, n)?;
    let tknn = tknn_sigma12(&chern);
    let (a, b) = (kubo.sigma(), tknn.sigma());
    let discrepancy = [[(a[0][0] - b[0][0]).abs(), (a[0][1] - b[0][1]).abs()], [
        (a[1][0] - b[1][0]).abs(),
        (a[1][1] - b[1][1]).abs(),
    ]];
    Ok(KuboTknnComparison { kubo, tknn, chern, discrepancy })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_flat_model() {
        let h = BlochHamiltonian::flat(&[-1.0, 1.0]).unwrap();
        let r = fhs_chern(&h, 0.0, 12).unwrap();
        assert_eq!(r.chern, 0);
        assert_eq!(r.bands_below_mu, 1);
    }

    #[test]
    fn rejects_gapless_and_small_mesh() {
        let g = BlochHamiltonian::graphene(1.0).unwrap();
        assert!(matches!(fhs_chern(&g, 0.0, 30), Err(Error::Gapless { .. })));
        let f = BlochHamiltonian::flat(&[-1.0, 1.0]).unwrap();
        assert!(fhs_chern(&f, 0.0, 5).is_err());
    }

    #[test]
    fn haldane_topological_phase() {
        let h = BlochHamiltonian::haldane(1.0, 0.1, PI / 2.0, 0.0).unwrap();
        let r = fhs_chern(&h, 0.0, 24).unwrap();
        assert_eq!(r.chern.abs(), 1);
        let bands = r.band_cherns.clone().unwrap();
        assert_eq!(bands.iter().sum::<i64>(), 0);
        assert_eq!(bands[0], r.chern);
        let flipped = BlochHamiltonian::haldane(1.0, 0.1, -PI / 2.0, 0.0).unwrap();
        assert_eq!(fhs_chern(&flipped, 0.0, 24).unwrap().chern, -r.chern);
    }

    #[test]
    fn tknn_values() {
        let mut r = ChernReport {
            chern: 0,
            mesh_n: 12,
            max_abs_flux: 0.0,
            raw: 0.0,
            bands_below_mu: 1,
            band_cherns: None,
            spin_degeneracy: 1.0,
        };
        assert_eq!(tknn_sigma12(&r).sigma()[0][1], 0.0);
        r.chern = 1;
        assert!((tknn_sigma12(&r).sigma()[0][1] - 1.0).abs() < 1e-15);
        r.chern = -2;
        let t = tknn_sigma12(&r);
        assert!((t.sigma()[1][0] - 2.0).abs() < 1e-15);
        assert_eq!(t.uncertainty(), [[0.0; 2]; 2]);
        assert_eq!(t.sigma()[0][0], 0.0);
    }
}
