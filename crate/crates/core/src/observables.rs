//! Lab-frame density and paramagnetic current of a separable two-electron state.
//!
//! With ψ = Φ(R) χ(r₁ − r₂), r₁ = R + s/2 and χ = f(s) e^{imφ_s}:
//!
//!   ρ(r₁)   = 2 ∫ |Φ(r₁ − s/2)|² f(s)² d²s
//!   j_φ(r₁) = 2m ∫ |Φ(r₁ − s/2)|² f(s)² cos φ_s / s d²s
//!
//! where r₁ lies on the x-axis, so φ̂(r₁) = ŷ and (ẑ × ŝ)·ŷ = cos φ_s.
//! For Φ Gaussian, |r₁ − s/2|² = (r₁ − s/2)² + r₁ s (1 − cos φ_s), which splits
//! the kernel into a radial factor and an angular factor bounded by one.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp_metrics::MeasuredFunction;
use crate::numerics::{build_radial_grid, AngularRule, GridScheme, RadialGrid};
use crate::systems::{GroundState, PARTICLES};

/// Default angular order of the inner convolution rule.
pub const ANGULAR_POINTS: usize = 64;
/// Minimum radial order of the inner convolution rule.
pub const INNER_POINTS: usize = 400;
/// Tolerance on the particle-number integral, relative.
pub const CONSERVATION_TOL: f64 = 1e-6;

// Kernel factors below e^{−46} ≈ 1e−20 are dropped.
const EXP_CUTOFF: f64 = 46.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub grid: Arc<RadialGrid>,
    pub rho: Vec<f64>,
    pub n_particles: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentProfile {
    pub grid: Arc<RadialGrid>,
    /// Azimuthal component; negative for m < 0.
    pub j_phi: Vec<f64>,
    pub m: i32,
}

impl DensityProfile {
    /// ρ with the planar measure 2πr, so the 1-norm is ∫ρ d²r.
    pub fn as_measured(&self) -> Result<MeasuredFunction> {
        MeasuredFunction::real(
            Arc::clone(&self.grid),
            planar_measure(&self.grid),
            self.rho.clone(),
        )
    }

    pub fn particle_number(&self) -> f64 {
        moment(&self.grid, &self.rho, 1)
    }
}

impl CurrentProfile {
    /// j_φ with measure 2πr², so the 1-norm is ∫|[r × j]_z| d²r.
    pub fn as_measured(&self) -> Result<MeasuredFunction> {
        MeasuredFunction::real(
            Arc::clone(&self.grid),
            torque_measure(&self.grid),
            self.j_phi.clone(),
        )
    }

    /// 2π∫ j_φ r² dr = ⟨L_z⟩.
    pub fn angular_momentum(&self) -> f64 {
        moment(&self.grid, &self.j_phi, 2)
    }

    pub fn abs_angular_momentum(&self) -> f64 {
        let abs: Vec<f64> = self.j_phi.iter().map(|j| j.abs()).collect();
        moment(&self.grid, &abs, 2)
    }

    /// r·j_φ has the sign of m wherever |j_φ| is above 1e−12 of its peak.
    pub fn is_sign_definite(&self) -> bool {
        let peak = self.j_phi.iter().fold(0.0f64, |a, j| a.max(j.abs()));
        if peak == 0.0 {
            return true;
        }
        let sign = (self.m as f64).signum();
        self.j_phi
            .iter()
            .filter(|j| j.abs() > 1e-12 * peak)
            .all(|j| j.signum() == sign)
    }
}

fn moment(grid: &RadialGrid, values: &[f64], power: i32) -> f64 {
    2.0 * PI
        * grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .zip(values)
            .map(|((r, w), v)| w * r.powi(power) * v)
            .sum::<f64>()
}

fn planar_measure(grid: &RadialGrid) -> Arc<Vec<f64>> {
    MeasuredFunction::planar_measure(grid)
}

fn torque_measure(grid: &RadialGrid) -> Arc<Vec<f64>> {
    Arc::new(grid.nodes().iter().map(|&r| 2.0 * PI * r * r).collect())
}

/// Mapped Gauss-Legendre grid suitable for the densities of every state whose
/// effective frequency is at least `omega_min`.
pub fn metric_grid(omega_min: f64, n: usize) -> Result<Arc<RadialGrid>> {
    let r_max = crate::numerics::adaptive_cutoff(crate::systems::REDUCED_MASS, omega_min);
    Ok(Arc::new(build_radial_grid(n, r_max, GridScheme::GaussLegendreMapped)?))
}

/// The metric grid for a single state.
pub fn default_grid(gs: &GroundState) -> Result<Arc<RadialGrid>> {
    metric_grid(gs.omega, 2000)
}

pub fn default_rule() -> AngularRule {
    AngularRule::trapezoid(ANGULAR_POINTS).expect("static angular order")
}

/// ρ and j_φ on `grid`, without the conservation check.
///
/// The inner radial order grows with the CM exponent γ so that a narrow CM
/// Gaussian (width ~ 2/√γ in s) is still resolved.
pub fn convolve(
    gs: &GroundState,
    grid: &Arc<RadialGrid>,
    rule: &AngularRule,
    inner_points: usize,
) -> Result<(DensityProfile, CurrentProfile)> {
    let gamma = gs.cm_exponent;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "centre-of-mass exponent must be positive, got {gamma}"
        )));
    }
    let s_max = gs.relative_cutoff();
    let n_inner = inner_points.max((6.0 * s_max * gamma.sqrt()).ceil() as usize);
    let inner = build_radial_grid(n_inner, s_max, GridScheme::GaussLegendreMapped)?;
    // (s, w·f², w·s·f²) for the nodes where f does not vanish.
    let terms: Vec<(f64, f64, f64)> = inner
        .nodes()
        .iter()
        .zip(inner.weights())
        .filter_map(|(&s, &w)| {
            let f = gs.profile.eval(s);
            let wf2 = w * f * f;
            (wf2 > 0.0).then_some((s, wf2, wf2 * s))
        })
        .collect();
    let folded = rule.cosine_folded();
    let cm_norm = gamma / PI;
    let m = gs.m as f64;

    let pairs: Vec<(f64, f64)> = grid
        .nodes()
        .par_iter()
        .map(|&r1| {
            let (mut rho, mut cur) = (0.0, 0.0);
            for &(s, wf2, wsf2) in &terms {
                let d = r1 - 0.5 * s;
                let radial = gamma * d * d;
                if radial > EXP_CUTOFF {
                    continue;
                }
                let x = gamma * r1 * s;
                let (mut a0, mut a1) = (0.0, 0.0);
                for &(one_minus_cos, w) in &folded {
                    let t = x * one_minus_cos;
                    if t + radial > EXP_CUTOFF {
                        break;
                    }
                    let e = w * (-t).exp();
                    a0 += e;
                    a1 += e * (1.0 - one_minus_cos);
                }
                let g = (-radial).exp();
                rho += wsf2 * g * a0;
                cur += wf2 * g * a1;
            }
            (2.0 * cm_norm * rho, 2.0 * m * cm_norm * cur)
        })
        .collect();
    let (rho, j_phi): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok((
        DensityProfile {
            grid: Arc::clone(grid),
            rho,
            n_particles: PARTICLES,
        },
        CurrentProfile {
            grid: Arc::clone(grid),
            j_phi,
            m: gs.m,
        },
    ))
}

/// Both observables, checked against the particle number implied by the
/// inputs: N · 2π∫f² s ds (which is N for a normalized state).
pub fn observables(
    gs: &GroundState,
    grid: &Arc<RadialGrid>,
    rule: &AngularRule,
) -> Result<(DensityProfile, CurrentProfile)> {
    let (rho, cur) = convolve(gs, grid, rule, INNER_POINTS)?;
    let expected = PARTICLES * gs.f.planar_moment(2);
    let got = rho.particle_number();
    if !((got - expected).abs() <= CONSERVATION_TOL * expected) {
        return Err(Error::AccuracyFailure(format!(
            "density integrates to {got:.12} but the state carries {expected:.12} particles; \
             grid cutoff {:.3} with {} nodes is too coarse",
            grid.r_max(),
            grid.len()
        )));
    }
    Ok((rho, cur))
}

pub fn density(gs: &GroundState, grid: &Arc<RadialGrid>, rule: &AngularRule) -> Result<DensityProfile> {
    observables(gs, grid, rule).map(|(rho, _)| rho)
}

pub fn paramagnetic_current(
    gs: &GroundState,
    grid: &Arc<RadialGrid>,
    rule: &AngularRule,
) -> Result<CurrentProfile> {
    observables(gs, grid, rule).map(|(_, cur)| cur)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub m: i32,
    /// 2π∫ρ r dr (target 2).
    pub n_integral: f64,
    /// 2π∫j_φ r² dr (target m).
    pub lz_integral: f64,
    /// 2π∫|j_φ| r² dr (target |m|).
    pub abs_lz_integral: f64,
    pub sign_definite: bool,
    pub n_ok: bool,
    pub lz_ok: bool,
    pub abs_lz_ok: bool,
}

impl ConservationReport {
    pub fn passed(&self) -> bool {
        self.n_ok && self.lz_ok && self.abs_lz_ok && self.sign_definite
    }

    /// Names of the checks that failed.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.n_ok {
            out.push("particle-number");
        }
        if !self.lz_ok {
            out.push("angular-momentum");
        }
        if !self.abs_lz_ok {
            out.push("abs-angular-momentum");
        }
        if !self.sign_definite {
            out.push("current-sign");
        }
        out
    }
}

fn within(value: f64, target: f64) -> bool {
    let scale = if target == 0.0 { 1.0 } else { target.abs() };
    (value - target).abs() <= CONSERVATION_TOL * scale
}

pub fn check_conservation(
    gs: &GroundState,
    density: &DensityProfile,
    current: &CurrentProfile,
) -> ConservationReport {
    let n_integral = density.particle_number();
    let lz_integral = current.angular_momentum();
    let abs_lz_integral = current.abs_angular_momentum();
    let m = gs.m as f64;
    ConservationReport {
        m: gs.m,
        n_integral,
        lz_integral,
        abs_lz_integral,
        sign_definite: current.is_sign_definite(),
        n_ok: within(n_integral, density.n_particles),
        lz_ok: within(lz_integral, m),
        abs_lz_ok: within(abs_lz_integral, m.abs()),
    }
}
