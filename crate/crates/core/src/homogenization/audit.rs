use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::sweep::SweepRow;

/// Outcome of the uniform `H¹` bound check.
///
/// From `Γ[u] <= 0` one gets `‖∇u‖^2 <= 2‖u‖‖f‖`; with `‖u‖ <= C_D‖∇u‖`
/// this gives `‖∇u‖ <= 2 C_D ‖f‖`, `‖u‖ <= 2 C_D^2 ‖f‖` and therefore
/// `‖u‖_{H¹} <= 2 C_D sqrt(1 + C_D^2) ‖f‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    pub pass: bool,
    pub max_h1: f64,
    pub max_l2: f64,
    /// Mean `H¹` norm at the coarsest scale.
    pub first_h1: f64,
    pub h1_ceiling: f64,
    pub l2_ceiling: f64,
    pub friedrichs_constant: f64,
    pub source_norm: f64,
    /// Number of distinct scales audited.
    pub scales: usize,
}

/// Relative slack on the ceilings.
pub const AUDIT_TOL: f64 = 1e-9;

/// Checks every solved row against the Friedrichs ceilings.
pub fn uniform_bound_audit(rows: &[SweepRow], friedrichs: f64, source_norm: f64) -> Result<BoundAudit> {
    let solved: Vec<&SweepRow> = rows.iter().filter(|r| r.h1_norm.is_some() && r.l2_norm.is_some()).collect();
    let mut scales: Vec<f64> = solved.iter().map(|r| r.eps).collect();
    scales.sort_by(|a, b| b.total_cmp(a));
    scales.dedup();
    if scales.len() < 3 {
        return Err(Error::invalid(format!("audit needs at least three scales, got {}", scales.len())));
    }
    if !(friedrichs > 0.0) || !(source_norm >= 0.0) {
        return Err(Error::invalid("Friedrichs constant must be positive and the source norm non-negative"));
    }
    let h1: Vec<f64> = solved.iter().map(|r| r.h1_norm.unwrap_or(0.0)).collect();
    let max_h1 = h1.iter().copied().fold(0.0, f64::max);
    let max_l2 = solved.iter().map(|r| r.l2_norm.unwrap_or(0.0)).fold(0.0, f64::max);
    let coarse: Vec<f64> = solved
        .iter()
        .filter(|r| r.eps == scales[0])
        .map(|r| r.h1_norm.unwrap_or(0.0))
        .collect();
    let first_h1 = coarse.iter().sum::<f64>() / coarse.len() as f64;
    let cd = friedrichs;
    let h1_ceiling = 2.0 * cd * (1.0 + cd * cd).sqrt() * source_norm;
    let l2_ceiling = 2.0 * cd * cd * source_norm;
    let slack = |c: f64| c * (1.0 + AUDIT_TOL) + f64::MIN_POSITIVE;
    let pass = max_h1 <= slack(h1_ceiling) && max_l2 <= slack(l2_ceiling);
    Ok(BoundAudit {
        pass,
        max_h1,
        max_l2,
        first_h1,
        h1_ceiling,
        l2_ceiling,
        friedrichs_constant: friedrichs,
        source_norm,
        scales: scales.len(),
    })
}
