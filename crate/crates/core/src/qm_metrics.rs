//! Distances between two-electron ground states in wavefunction, density and
//! paramagnetic-current space, and the polar angle of a state on its shell.
//!
//! Each metric comes from a conservation law: ∫|ψ|² = N, ∫ρ = N and
//! ∫|[r × j_p]_z| = |m|. States therefore lie on spheres of radius √N, N and |m|
//! about the zero function.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lp_metrics::lp_distance;
use crate::numerics::{build_radial_grid, GridScheme, RadialGrid};
use crate::observables::{CurrentProfile, DensityProfile};
use crate::systems::{GroundState, PARTICLES};

/// Slack allowed when a law-of-cosines ratio strays outside [−1, 1].
pub const ANGLE_CLAMP_TOL: f64 = 1e-9;

/// ∫Φ₁Φ₂ d²R for normalized CM Gaussians with exponents γ₁, γ₂.
pub fn cm_overlap(gamma1: f64, gamma2: f64) -> f64 {
    2.0 * (gamma1 * gamma2).sqrt() / (gamma1 + gamma2)
}

fn overlap_grid(gs1: &GroundState, gs2: &GroundState) -> Result<Arc<RadialGrid>> {
    if Arc::ptr_eq(&gs1.f.grid, &gs2.f.grid) || gs1.f.grid == gs2.f.grid {
        return Ok(Arc::clone(&gs1.f.grid));
    }
    let r_max = gs1.relative_cutoff().max(gs2.relative_cutoff());
    Ok(Arc::new(build_radial_grid(
        gs1.f.grid.len().max(gs2.f.grid.len()),
        r_max,
        GridScheme::GaussLegendreMapped,
    )?))
}

/// Normalized relative overlap 2π∫f₁f₂ r dr / (‖f₁‖‖f₂‖).
pub fn relative_overlap(gs1: &GroundState, gs2: &GroundState) -> Result<f64> {
    let grid = overlap_grid(gs1, gs2)?;
    let (mut s12, mut s11, mut s22) = (0.0, 0.0, 0.0);
    for (&r, &w) in grid.nodes().iter().zip(grid.weights()) {
        let a = gs1.profile.eval(r);
        let b = gs2.profile.eval(r);
        s12 += w * r * (a * b);
        s11 += w * r * a * a;
        s22 += w * r * b * b;
    }
    if !(s11 > 0.0 && s22 > 0.0) {
        return Err(Error::InvalidValue("relative profile vanishes on the overlap grid".into()));
    }
    Ok(s12 / (s11.sqrt() * s22.sqrt()))
}

/// D_ψ between two normalized two-electron states:
/// √(2N − 2|⟨ψ₁|ψ₂⟩|) with ⟨ψ₁|ψ₂⟩ = N δ_{m₁m₂} S_CM S_rel.
///
/// States with different m are orthogonal through their angular factors, so
/// their distance is exactly √(2N) = 2.
pub fn d_psi(gs1: &GroundState, gs2: &GroundState) -> Result<f64> {
    if gs1.m != gs2.m {
        return Ok((2.0 * PARTICLES).sqrt());
    }
    // Identical states: the overlap rounds to 1 − O(ε), whose square root would
    // leave a spurious ~1e−8 distance.
    if gs1.cm_exponent == gs2.cm_exponent && gs1.f.values == gs2.f.values {
        return Ok(0.0);
    }
    let s = cm_overlap(gs1.cm_exponent, gs2.cm_exponent) * relative_overlap(gs1, gs2)?;
    let d2 = 2.0 * PARTICLES * (1.0 - s.abs());
    Ok(d2.max(0.0).sqrt())
}

/// D_ψ to the zero function, √(∫|ψ|²), from the state's actual normalization.
pub fn d_psi_to_zero(gs: &GroundState) -> f64 {
    (PARTICLES * gs.f.planar_moment(2)).sqrt()
}

/// D_ρ = ∫|ρ₁ − ρ₂| d²r.
pub fn d_rho(rho1: &DensityProfile, rho2: &DensityProfile) -> Result<f64> {
    lp_distance(&rho1.as_measured()?, &rho2.as_measured()?, 1.0)
}

pub fn d_rho_to_zero(rho: &DensityProfile) -> Result<f64> {
    let m = rho.as_measured()?;
    lp_distance(&m, &m.zero_like(), 1.0)
}

/// D_{j_p⊥} = ∫|[r × (j₁ − j₂)]_z| d²r.
pub fn d_jp(cur1: &CurrentProfile, cur2: &CurrentProfile) -> Result<f64> {
    lp_distance(&cur1.as_measured()?, &cur2.as_measured()?, 1.0)
}

pub fn d_jp_to_zero(cur: &CurrentProfile) -> Result<f64> {
    let m = cur.as_measured()?;
    lp_distance(&m, &m.zero_like(), 1.0)
}

/// Upper bound |m₁| + |m₂| on D_{j_p⊥}, identifying each system's angular
/// momentum quantum number with |m|.
pub fn triangle_bound(m1: i32, m2: i32) -> f64 {
    m1.unsigned_abs() as f64 + m2.unsigned_abs() as f64
}

/// Polar angle of a current on the |m| shell, measured from the reference on
/// the |m_ref| shell, by the law of cosines.
pub fn sphere_angle(m_ref: i32, m: i32, distance: f64) -> Result<f64> {
    if m_ref == 0 || m == 0 {
        return Err(Error::UndefinedAngle { m_ref, m });
    }
    if !(distance >= 0.0) || !distance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "distance must be finite and non-negative, got {distance}"
        )));
    }
    let a = m_ref.unsigned_abs() as f64;
    let b = m.unsigned_abs() as f64;
    let cosine = (a * a + b * b - distance * distance) / (2.0 * a * b);
    if cosine.abs() > 1.0 + ANGLE_CLAMP_TOL {
        return Err(Error::InconsistentDistance {
            m_ref,
            m,
            distance,
            cosine,
        });
    }
    Ok(cosine.clamp(-1.0, 1.0).acos())
}
