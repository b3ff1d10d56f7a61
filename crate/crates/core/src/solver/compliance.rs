//! Soft-constraint parameters.
//!
//! A row with effective inverse mass `a`, compliance `c` and bias `ζ`
//! reaches `u⁺ = (1−d)·u_free + d·ζ` when unclamped, where `d = a/(a+c)`.
//! So `ζ` is a reference velocity and `d` blends it with the free motion.
//! The reference follows a damped spring over one step:
//!
//! ```text
//! d(r)  = d0 + y(|r|/width)·(dwidth − d0)     clamped to [1e-4, 0.9999]
//! c     = (1 − d)/d · a
//! b     = 2/T,   k = 1/(T²·ζ_damp²)
//! ζ     = u − h·(k·r + b·u)
//! ```
//!
//! with `r` the signed constraint violation (negative while penetrating)
//! and `y` the solimp sigmoid of the given midpoint and power. `T` is
//! raised to `2h` when shorter, otherwise the reference overshoots.

use super::SolverError;

pub const MIN_IMPEDANCE: f64 = 1e-4;
pub const MAX_IMPEDANCE: f64 = 0.9999;

/// Impedance for violation magnitude `r` under `solimp = (d0, dwidth, width, midpoint, power)`.
pub fn impedance(solimp: &[f64; 5], r: f64) -> f64 {
    let [d0, dw, width, mid, power] = *solimp;
    let x = r.abs() / width;
    let d = if !(width > 0.0) || x >= 1.0 {
        dw
    } else if x <= 0.0 {
        d0
    } else {
        let p = power.max(1.0);
        let mid = mid.clamp(1e-6, 1.0 - 1e-6);
        let y = if x <= mid {
            x.powf(p) / mid.powf(p - 1.0)
        } else {
            1.0 - (1.0 - x).powf(p) / (1.0 - mid).powf(p - 1.0)
        };
        d0 + y * (dw - d0)
    };
    d.clamp(MIN_IMPEDANCE, MAX_IMPEDANCE)
}

/// `(c, ζ)` for a row with violation `r`, current row velocity `u`,
/// step `h` and diagonal `a_diag` of `J M⁻¹ Jᵀ`.
pub fn compliance_params(solref: [f64; 2], solimp: &[f64; 5], r: f64, u: f64, h: f64, a_diag: f64) -> Result<(f64, f64), SolverError> {
    let [t, damp] = solref;
    if !(t > 0.0) || !(damp > 0.0) {
        return Err(SolverError::BadSolref(solref));
    }
    let d = impedance(solimp, r);
    let c = (1.0 - d) / d * a_diag;
    let t = t.max(2.0 * h);
    let b = 2.0 / t;
    let k = 1.0 / (t * t * damp * damp);
    let zeta = u - h * (k * r + b * u);
    Ok((c, zeta))
}
