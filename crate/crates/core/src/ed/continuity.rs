//! Lattice continuity equation `i[H, n_x] + div J_x = 0`.

use serde::{Deserialize, Serialize};

use super::fock::FockOperator;
use super::model::EdModel;
use crate::error::Result;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// `max_x || i[H, n_x] + div J_x ||`.
    pub max_residual: f64,
    /// Mode attaining the maximum.
    pub worst_mode: usize,
    /// `max_x || i[H, n_x] ||`, the scale of the identity.
    pub max_rate: f64,
}

/// Divergence of the bond currents at `mode`: the net outflow.
///
/// For a directed term `T = a psi+_to psi-_from`, the operator `-i (T - T+)` is
/// the particle current from `from` to `to`. Each bond appears twice in the
/// term list (once per direction), so both copies enter with weight 1/2.
/// `flip` reverses the sign of the currents of the given term index and its
/// conjugate partner, which breaks the identity on purpose.
fn divergence(model: &EdModel, mode: usize, flip: Option<usize>) -> FockOperator {
    let flipped = flip.map(|i| {
        let t = &model.terms()[i];
        (t.from, t.to, t.bond)
    });
    let mut coeffs: Vec<(usize, usize, C64)> = Vec::new();
    for t in model.terms() {
        if t.to == t.from || (t.to != mode && t.from != mode) {
            continue;
        }
        let mut w = if t.from == mode { 0.5 } else { -0.5 };
        if let Some((a, b, bond)) = flipped {
            let same = (t.from == a && t.to == b && t.bond == bond) || (t.from == b && t.to == a && t.bond == -bond);
            if same {
                w = -w;
            }
        }
        // w * (-i)(T - T+) = w(-i a) psi+_to psi-_from + w(i a*) psi+_from psi-_to
        coeffs.push((t.to, t.from, C64::new(0.0, -w) * t.amplitude));
        coeffs.push((t.from, t.to, C64::new(0.0, w) * t.amplitude.conj()));
    }
    FockOperator::one_body(model.space(), coeffs)
}

fn check(model: &EdModel, flip: Option<usize>) -> Result<ContinuityReport> {
    let h = model.hamiltonian()?;
    let mut report = ContinuityReport { max_residual: 0.0, worst_mode: 0, max_rate: 0.0 };
    for x in 0..model.n_modes() {
        let rate = h.commutator(&model.density(x)).scale(C64::new(0.0, 1.0));
        let r = rate.add(&divergence(model, x, flip)).norm();
        report.max_rate = report.max_rate.max(rate.norm());
        if r > report.max_residual {
            report.max_residual = r;
            report.worst_mode = x;
        }
    }
    Ok(report)
}

/// Largest continuity-equation residual over all modes.
pub fn continuity_check(model: &EdModel) -> Result<ContinuityReport> {
    check(model, None)
}

/// Same check with the current of one bond reversed; expected to fail.
pub fn continuity_check_corrupted(model: &EdModel) -> Result<ContinuityReport> {
    let idx = model.terms().iter().position(|t| t.to != t.from);
    check(model, idx)
}
