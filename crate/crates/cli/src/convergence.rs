//! Parameter sweeps for extrapolation audits.

use std::fmt;
use std::str::FromStr;

use crate::config::{Computation, RunConfig};
use crate::error::CliError;
use crate::run::{run, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Base mesh size (the Chern mesh for `chern`).
    MeshN,
    Beta,
    /// Linear system size of exact diagonalization.
    L,
    /// Smallest frequency; the whole grid is rescaled.
    OmegaMin,
    TMax,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::MeshN => "mesh_n",
            SweepParameter::Beta => "beta",
            SweepParameter::L => "L",
            SweepParameter::OmegaMin => "omega_min",
            SweepParameter::TMax => "T_max",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            SweepParameter::MeshN,
            SweepParameter::Beta,
            SweepParameter::L,
            SweepParameter::OmegaMin,
            SweepParameter::TMax,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| format!("unknown sweep parameter '{s}' (expected mesh_n, beta, L, omega_min or T_max)"))
    }
}

fn as_count(param: SweepParameter, v: f64) -> Result<usize, CliError> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(CliError::Config(format!("sweep {param}: {v} is not a positive integer")))
    }
}

/// `cfg` with `param` set to `value`.
pub fn with_parameter(cfg: &RunConfig, param: SweepParameter, value: f64) -> Result<RunConfig, CliError> {
    let mut c = cfg.clone();
    let n = &mut c.numerics;
    match param {
        SweepParameter::MeshN => {
            if cfg.computation == Some(Computation::Chern) {
                n.chern_n = as_count(param, value)?;
            } else {
                n.mesh_n = as_count(param, value)?;
            }
        }
        SweepParameter::Beta => n.beta = Some(value),
        SweepParameter::L => {
            let l = as_count(param, value)?;
            c.lattice.size = l;
            c.numerics.sizes = vec![l];
        }
        SweepParameter::OmegaMin => {
            let min = n.omegas.iter().copied().fold(f64::INFINITY, f64::min);
            n.omegas = n.omegas.iter().map(|w| w * value / min).collect();
        }
        SweepParameter::TMax => n.t_max = Some(value),
    }
    c.validate()?;
    Ok(c)
}

/// Reruns the computation for each value and tabulates the headline scalars
/// with their successive differences (`NaN` on the first row).
pub fn convergence_report(cfg: &RunConfig, param: SweepParameter, values: &[f64]) -> Result<Table, CliError> {
    if values.is_empty() {
        return Err(CliError::Config(format!("sweep {param}: no values")));
    }
    let mut names: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for &v in values {
        let result = run(&with_parameter(cfg, param, v)?)?;
        let these: Vec<String> = result.scalars.iter().map(|(n, _)| n.clone()).collect();
        match &names {
            Some(n) if *n != these => {
                return Err(CliError::Config(format!("sweep {param}: result shape changes at {v}")))
            }
            Some(_) => {}
            None => names = Some(these),
        }
        let mut row = vec![v];
        row.extend(result.scalars.iter().map(|(_, x)| *x));
        rows.push(row);
    }
    let names = names.expect("at least one value");
    let k = names.len();
    for r in 0..rows.len() {
        let deltas: Vec<f64> =
            (1..=k).map(|c| if r == 0 { f64::NAN } else { rows[r][c] - rows[r - 1][c] }).collect();
        rows[r].extend(deltas);
    }
    let mut header = vec![param.name().to_string()];
    header.extend(names.iter().cloned());
    header.extend(names.iter().map(|n| format!("delta_{n}")));
    Ok(Table { name: "convergence".into(), header, rows })
}
