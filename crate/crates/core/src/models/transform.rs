//! Maps between constrained parameters and the unconstrained sampling space.

use crate::{Error, Result};

/// `u = ln x` for `x > 0`.
pub fn log_transform(x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x.ln())
    } else {
        Err(Error::Domain(format!("log transform needs a positive value, got {x}")))
    }
}

/// `x = e^u`; the log-Jacobian `ln |dx/du|` equals `u`.
pub fn log_untransform(u: f64) -> f64 {
    u.exp()
}

/// Strictly increasing vector to unconstrained coordinates:
/// `u_1 = x_1`, `u_k = ln(x_k - x_{k-1})`.
pub fn ordered_transform(x: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(x.len());
    for (k, &v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Domain(format!("ordered transform input {v} is not finite")));
        }
        if k == 0 {
            out.push(v);
        } else {
            let gap = v - x[k - 1];
            if !(gap > 0.0) {
                return Err(Error::Domain(format!(
                    "ordered transform needs strictly increasing values ({} then {v})",
                    x[k - 1]
                )));
            }
            out.push(gap.ln());
        }
    }
    Ok(out)
}

/// Inverse of [`ordered_transform`]. The log-Jacobian is `Σ_{k≥2} u_k`.
pub fn ordered_untransform(u: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len());
    for (k, &v) in u.iter().enumerate() {
        if k == 0 {
            out.push(v);
        } else {
            out.push(out[k - 1] + v.exp());
        }
    }
    out
}
