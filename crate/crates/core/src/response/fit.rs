//! Kubo zero-frequency limit by least-squares extrapolation of the
//! finite-frequency quotients `q(w) = -[K(w) - K(0)] / w`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ConductivityTensor, CorrelatorSeries, Mat2};
use crate::error::{Error, Result};

/// Model fitted to `q(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `sigma + c1 w log w + c2 w`, for gapless (Dirac) spectra.
    LogAware,
    /// `sigma + c2 w`, for gapped spectra.
    Analytic,
}

impl FitModel {
    fn columns(self, w: f64) -> Vec<f64> {
        match self {
            FitModel::LogAware => vec![1.0, w * w.ln(), w],
            FitModel::Analytic => vec![1.0, w],
        }
    }
}

/// Diagnostics of the zero-frequency extrapolation, in natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub model: FitModel,
    /// `(w, q_ij(w))` for every positive frequency of the series, ascending.
    pub quotients: Vec<(f64, Mat2)>,
    /// Frequencies that entered the fit.
    pub window: Vec<f64>,
    /// Coefficient of `w log w` (zero for [`FitModel::Analytic`]).
    pub log_coefficient: Mat2,
    pub log_uncertainty: Mat2,
    pub linear_coefficient: Mat2,
    /// Root-mean-square fit residual per entry.
    pub residual: Mat2,
    /// Largest `|Im q_ij|` seen.
    pub max_imaginary: f64,
}

/// [`kubo_sigma_with`] using the log-aware model.
pub fn kubo_sigma(series: &CorrelatorSeries) -> Result<ConductivityTensor> {
    kubo_sigma_with(series, FitModel::LogAware)
}

struct FitOutcome {
    coef: Vec<f64>,
    stderr: Vec<f64>,
    rms: f64,
}

fn least_squares(model: FitModel, ws: &[f64], ys: &[f64]) -> FitOutcome {
    let p = model.columns(1.0).len();
    let m = ws.len();
    let x = DMatrix::from_fn(m, p, |r, c| model.columns(ws[r])[c]);
    // Column scaling keeps the normal equations well conditioned.
    let scale: Vec<f64> = (0..p).map(|c| x.column(c).norm().max(f64::MIN_POSITIVE)).collect();
    let xs = DMatrix::from_fn(m, p, |r, c| x[(r, c)] / scale[c]);
    let y = DVector::from_column_slice(ys);
    let svd = xs.clone().svd(true, true);
    let beta = svd.solve(&y, 1e-14).expect("svd computed with u and v");
    let resid = &y - &xs * &beta;
    let rss = resid.norm_squared();
    let coef: Vec<f64> = (0..p).map(|c| beta[c] / scale[c]).collect();
    let stderr = if m > p {
        let s2 = rss / (m - p) as f64;
        let cov = (xs.transpose() * &xs)
            .try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(p, p, f64::INFINITY));
        (0..p).map(|c| (s2 * cov[(c, c)]).max(0.0).sqrt() / scale[c]).collect()
    } else {
        vec![0.0; p]
    };
    FitOutcome { coef, stderr, rms: (rss / m as f64).sqrt() }
}

/// Extrapolates `q(w) -> sigma` as `w -> 0+`.
///
/// The fit uses every frequency within two decades of the smallest one. The
/// reported uncertainty is the least-squares standard error of the intercept
/// (zero when the fit is exactly determined).
pub fn kubo_sigma_with(series: &CorrelatorSeries, model: FitModel) -> Result<ConductivityTensor> {
    let k0 = series
        .value_at(0.0)
        .ok_or_else(|| Error::InsufficientFrequencies("series lacks w = 0".into()))?;
    let mut positive: Vec<(f64, usize)> = series
        .omegas
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (w, i))
        .collect();
    positive.sort_by(|a, b| a.0.total_cmp(&b.0));
    if positive.len() < 3 {
        return Err(Error::InsufficientFrequencies(format!("{} positive", positive.len())));
    }
    let (w_min, w_max) = (positive[0].0, positive[positive.len() - 1].0);
    if w_max < 100.0 * w_min * (1.0 - 1e-12) {
        return Err(Error::InsufficientFrequencies(format!("span {w_min}..{w_max}")));
    }

    let mut max_imag = 0.0f64;
    let quotients: Vec<(f64, Mat2)> = positive
        .iter()
        .map(|&(w, idx)| {
            let kw = &series.values[idx];
            let mut q = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let z = -(kw[i][j] - k0[i][j]) / w;
                    max_imag = max_imag.max(z.im.abs());
                    q[i][j] = z.re;
                }
            }
            (w, q)
        })
        .collect();

    let window: Vec<(f64, Mat2)> = quotients
        .iter()
        .filter(|(w, _)| *w <= 100.0 * w_min * (1.0 + 1e-12))
        .copied()
        .collect();
    let ws: Vec<f64> = window.iter().map(|(w, _)| *w).collect();

    let mut sigma = [[0.0; 2]; 2];
    let mut unc = [[0.0; 2]; 2];
    let mut log_c = [[0.0; 2]; 2];
    let mut log_u = [[0.0; 2]; 2];
    let mut lin_c = [[0.0; 2]; 2];
    let mut resid = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let ys: Vec<f64> = window.iter().map(|(_, q)| q[i][j]).collect();
            let fit = least_squares(model, &ws, &ys);
            sigma[i][j] = fit.coef[0];
            unc[i][j] = fit.stderr[0];
            resid[i][j] = fit.rms;
            match model {
                FitModel::LogAware => {
                    log_c[i][j] = fit.coef[1];
                    log_u[i][j] = fit.stderr[1];
                    lin_c[i][j] = fit.coef[2];
                }
                FitModel::Analytic => lin_c[i][j] = fit.coef[1],
            }

            // Quotients should approach the limit monotonically; a reversal
            // larger than the noise level means the mesh or grid is too coarse.
            let all: Vec<f64> = quotients.iter().map(|(_, q)| q[i][j]).collect();
            let scale = all.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let tol = 10.0 * unc[i][j] + 1e-9 * scale + 1e-14;
            let diffs: Vec<f64> = all.windows(2).map(|p| p[1] - p[0]).collect();
            let up = diffs.iter().any(|&d| d > tol);
            let down = diffs.iter().any(|&d| d < -tol);
            if up && down {
                return Err(Error::NoConvergence { i, j });
            }
        }
    }

    Ok(ConductivityTensor::new(
        sigma,
        unc,
        Some(Extrapolation {
            model,
            quotients,
            window: ws,
            log_coefficient: log_c,
            log_uncertainty: log_u,
            linear_coefficient: lin_c,
            residual: resid,
            max_imaginary: max_imag,
        }),
    ))
}
