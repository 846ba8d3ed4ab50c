//! Lowest eigenpair of the planar radial Schrödinger equation
//!
//!   −(1/2μ)(f'' + f'/r − m²f/r²) + [c/r² + V(r)] f = ε f
//!
//! on (0, r_max] with f(r_max) = 0.
//!
//! Each mesh level is a symmetric tridiagonal matrix whose smallest eigenvalue
//! is isolated by Sturm-sequence bisection. The level energies carry an h²
//! error expansion, so successive halvings are combined by Richardson
//! extrapolation until two diagonal estimates agree.
//!
//! Two substitutions are used, depending on the effective angular index
//! ν = √(m² + 2μc):
//!
//! * ν ≥ 2: u = √r f on nodes r_i = i h, Dirichlet at both ends. The effective
//!   centrifugal term is (ν² − ¼)/(2μr²).
//! * ν < 2: f = r^ν g in flux form, (1/r^{2ν+1}) d/dr (r^{2ν+1} dg/dr), on cell
//!   centres r_i = (i − ½) h. The zero flux at the origin is built in, which
//!   keeps the m = 0 Coulomb case second-order accurate where the √r form is not.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::grid::{build_radial_grid, GridScheme, RadialGrid};

/// Cutoff multiplier: r_max = c / √(μΩ) leaves Gaussian tails below 1e−20.
pub const CUTOFF_FACTOR: f64 = 14.0;

/// r_max for a profile decaying like exp(−μΩr²/2).
pub fn adaptive_cutoff(mu: f64, omega: f64) -> f64 {
    CUTOFF_FACTOR / (mu * omega).sqrt()
}

/// V(r) = c/r² + regular(r). The inverse-square part is kept separate because
/// it shifts the short-range exponent of the solution.
#[derive(Clone, Copy)]
pub struct RadialPotential<V> {
    pub inverse_square: f64,
    pub regular: V,
}

impl<V: Fn(f64) -> f64> RadialPotential<V> {
    pub fn new(regular: V) -> Self {
        Self {
            inverse_square: 0.0,
            regular,
        }
    }

    pub fn with_inverse_square(mut self, strength: f64) -> Self {
        self.inverse_square = strength;
        self
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.inverse_square / (r * r) + (self.regular)(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    pub r_max: f64,
    /// Node count of the coarsest mesh; each further level doubles it.
    pub base_points: usize,
    pub min_levels: usize,
    pub max_levels: usize,
    /// Accept when successive extrapolated energies differ by less than
    /// `rel_tol · max(|ε|, 1)`.
    pub rel_tol: f64,
}

impl EigenOptions {
    pub fn with_cutoff(r_max: f64) -> Self {
        Self {
            r_max,
            base_points: 4000,
            min_levels: 3,
            max_levels: 6,
            rel_tol: 1e-9,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0) || !self.r_max.is_finite() {
            return Err(Error::InvalidArgument(format!("bad cutoff {}", self.r_max)));
        }
        if self.base_points < 16 || self.min_levels < 1 || self.max_levels < self.min_levels {
            return Err(Error::InvalidArgument(format!("bad mesh options {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Substitution {
    SqrtR,
    PowerLaw,
}

fn substitution_for(nu: f64) -> Substitution {
    if nu < 2.0 {
        Substitution::PowerLaw
    } else {
        Substitution::SqrtR
    }
}

/// Effective angular index ν = √(m² + 2μc).
pub fn effective_index(m_abs: f64, mu: f64, inverse_square: f64) -> Result<f64> {
    let nu2 = m_abs * m_abs + 2.0 * mu * inverse_square;
    if !(nu2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "inverse-square strength {inverse_square} collapses the centrifugal barrier"
        )));
    }
    Ok(nu2.sqrt())
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    nodes: Vec<f64>,
    h: f64,
}

fn assemble<V: Fn(f64) -> f64>(
    potential: &RadialPotential<V>,
    nu: f64,
    mu: f64,
    r_max: f64,
    n: usize,
) -> Result<Tridiagonal> {
    let sub = substitution_for(nu);
    let (h, nodes): (f64, Vec<f64>) = match sub {
        Substitution::SqrtR => {
            let h = r_max / (n + 1) as f64;
            (h, (1..=n).map(|i| i as f64 * h).collect())
        }
        Substitution::PowerLaw => {
            let h = r_max / n as f64;
            (h, (1..=n).map(|i| (i as f64 - 0.5) * h).collect())
        }
    };
    let kinetic = 1.0 / (2.0 * mu * h * h);
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n - 1);

    match sub {
        Substitution::SqrtR => {
            let centrifugal = (nu * nu - 0.25) / (2.0 * mu);
            for &r in &nodes {
                diag.push(2.0 * kinetic + centrifugal / (r * r) + (potential.regular)(r));
            }
            off.resize(n - 1, -kinetic);
        }
        Substitution::PowerLaw => {
            // Face weights r^{2ν+1} enter only through ratios, so h cancels.
            let p = 2.0 * nu + 1.0;
            for (idx, &r) in nodes.iter().enumerate() {
                let i = (idx + 1) as f64;
                let inner = ((i - 1.0) / (i - 0.5)).powf(p);
                let outer = (i / (i - 0.5)).powf(p);
                diag.push(kinetic * (inner + outer) + (potential.regular)(r));
                if idx + 1 < n {
                    off.push(-kinetic * (i * i / (i * i - 0.25)).powf(0.5 * p));
                }
            }
        }
    }

    if let Some(k) = diag.iter().position(|d| !d.is_finite()) {
        return Err(Error::InvalidValue(format!(
            "potential not finite at r = {}",
            nodes[k]
        )));
    }
    Ok(Tridiagonal { diag, off, nodes, h })
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x`.
    fn sturm_count(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            if q.abs() < pivmin {
                q = -pivmin;
            }
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn lowest_eigenvalue(&self, hint: Option<f64>) -> f64 {
        let n = self.diag.len();
        let (mut lo, mut hi) = match hint.and_then(|g| self.bracket_near(g)) {
            Some(b) => b,
            None => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::INFINITY;
                for i in 0..n {
                    let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                    let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                    lo = lo.min(self.diag[i] - left - right);
                    hi = hi.min(self.diag[i]);
                }
                let pad = f64::EPSILON * hi.abs().max(lo.abs()).max(1.0);
                (lo - pad, hi + pad)
            }
        };
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            if self.sturm_count(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn bracket_near(&self, guess: f64) -> Option<(f64, f64)> {
        let delta = 1e-3 * guess.abs().max(1e-3);
        let lo = guess - delta;
        let hi = guess + delta;
        (self.sturm_count(lo) == 0 && self.sturm_count(hi) >= 1).then_some((lo, hi))
    }

    /// Eigenvector of the lowest eigenvalue by shifted inverse iteration. The
    /// shift sits just below the eigenvalue, so T − σ is positive definite and
    /// the LDLᵀ sweep needs no pivoting.
    fn lowest_eigenvector(&self, eigenvalue: f64) -> Vec<f64> {
        let n = self.diag.len();
        let sigma = eigenvalue - 1e-9 * eigenvalue.abs().max(1.0);
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        d[0] = self.diag[0] - sigma;
        for i in 1..n {
            l[i - 1] = self.off[i - 1] / d[i - 1];
            d[i] = self.diag[i] - sigma - l[i - 1] * self.off[i - 1];
        }

        let mut x = vec![1.0; n];
        for _ in 0..3 {
            for i in 1..n {
                x[i] -= l[i - 1] * x[i - 1];
            }
            for i in 0..n {
                x[i] /= d[i];
            }
            for i in (0..n - 1).rev() {
                x[i] -= l[i] * x[i + 1];
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        x
    }
}

/// Smallest eigenvalue of a single mesh level, without extrapolation.
pub fn tridiagonal_ground_energy<V: Fn(f64) -> f64>(
    potential: &RadialPotential<V>,
    m_abs: f64,
    mu: f64,
    r_max: f64,
    n: usize,
) -> Result<f64> {
    check_inputs(m_abs, mu)?;
    let nu = effective_index(m_abs, mu, potential.inverse_square)?;
    let tri = assemble(potential, nu, mu, r_max, n)?;
    Ok(tri.lowest_eigenvalue(None))
}

fn check_inputs(m_abs: f64, mu: f64) -> Result<()> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("reduced mass must be positive, got {mu}")));
    }
    if !(m_abs >= 0.0) || !m_abs.is_finite() {
        return Err(Error::InvalidArgument(format!("|m| must be non-negative, got {m_abs}")));
    }
    Ok(())
}

/// Energy estimates for one Richardson run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    /// (node count, raw eigenvalue) per mesh level.
    pub levels: Vec<(usize, f64)>,
    /// Diagonal of the extrapolation table.
    pub extrapolated: Vec<f64>,
}

struct Converged {
    energy: f64,
    trace: ConvergenceTrace,
    finest: Tridiagonal,
    finest_eigenvalue: f64,
    nu: f64,
}

fn converge<V: Fn(f64) -> f64>(
    potential: &RadialPotential<V>,
    m_abs: f64,
    mu: f64,
    opts: &EigenOptions,
) -> Result<Converged> {
    check_inputs(m_abs, mu)?;
    opts.validate()?;
    let nu = effective_index(m_abs, mu, potential.inverse_square)?;

    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut trace = ConvergenceTrace {
        levels: Vec::new(),
        extrapolated: Vec::new(),
    };
    let mut hint = None;

    for level in 0..opts.max_levels {
        let n = opts.base_points << level;
        let tri = assemble(potential, nu, mu, opts.r_max, n)?;
        let raw = tri.lowest_eigenvalue(hint);
        hint = Some(raw);
        trace.levels.push((n, raw));

        let mut row = vec![raw];
        if let Some(prev) = table.last() {
            for j in 1..=level {
                let factor = 4f64.powi(j as i32);
                let better = row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0);
                row.push(better);
            }
        }
        let estimate = *row.last().expect("row is never empty");
        trace.extrapolated.push(estimate);
        table.push(row);

        if level + 1 >= opts.min_levels && level >= 1 {
            let previous = trace.extrapolated[level - 1];
            let scale = estimate.abs().max(1.0);
            if (estimate - previous).abs() <= opts.rel_tol * scale {
                return Ok(Converged {
                    energy: estimate,
                    trace,
                    finest: tri,
                    finest_eigenvalue: raw,
                    nu,
                });
            }
        }
    }

    Err(Error::ConvergenceFailure(format!(
        "|m| = {m_abs}, mu = {mu}, r_max = {}: level energies {:?}, extrapolated {:?}",
        opts.r_max, trace.levels, trace.extrapolated
    )))
}

/// Extrapolated ground-state energy only.
pub fn solve_radial_energy<V: Fn(f64) -> f64>(
    potential: &RadialPotential<V>,
    m_abs: f64,
    mu: f64,
    opts: &EigenOptions,
) -> Result<f64> {
    converge(potential, m_abs, mu, opts).map(|c| c.energy)
}

#[derive(Debug, Clone)]
pub struct RadialEigenpair {
    pub energy: f64,
    pub profile: RadialProfile,
    pub trace: ConvergenceTrace,
}

/// Lowest (nodeless) eigenpair, with the profile normalized to 2π∫f²r dr = 1.
pub fn solve_radial_ground<V: Fn(f64) -> f64>(
    potential: &RadialPotential<V>,
    m_abs: f64,
    mu: f64,
    opts: &EigenOptions,
) -> Result<RadialEigenpair> {
    let converged = converge(potential, m_abs, mu, opts)?;
    let tri = &converged.finest;
    let mut y = tri.lowest_eigenvector(converged.finest_eigenvalue);

    let peak = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sign = y
        .iter()
        .find(|v| v.abs() >= 0.5 * peak)
        .map_or(1.0, |v| v.signum());
    y.iter_mut().for_each(|v| *v *= sign);
    if let Some(k) = y.iter().position(|&v| v < -1e-10 * peak) {
        return Err(Error::ConvergenceFailure(format!(
            "ground-state vector has a node near r = {}",
            tri.nodes[k]
        )));
    }
    y.iter_mut().for_each(|v| *v = v.max(0.0));

    let nu = converged.nu;
    let n = y.len();
    let tabulated = match substitution_for(nu) {
        Substitution::SqrtR => {
            let mut values = Vec::with_capacity(n + 2);
            values.push(0.0);
            values.extend_from_slice(&y);
            values.push(0.0);
            TabulatedProfile {
                substitution: Substitution::SqrtR,
                nu,
                h: tri.h,
                first_knot: 0.0,
                values,
                r_max: opts.r_max,
                scale: 1.0,
            }
        }
        Substitution::PowerLaw => {
            let p = 2.0 * nu + 1.0;
            let mut values = Vec::with_capacity(n + 2);
            let g: Vec<f64> = y
                .iter()
                .zip(&tri.nodes)
                .map(|(v, &r)| v / r.powf(0.5 * p))
                .collect();
            values.push(g[0]);
            values.extend_from_slice(&g);
            values.push(0.0);
            TabulatedProfile {
                substitution: Substitution::PowerLaw,
                nu,
                h: tri.h,
                first_knot: -0.5 * tri.h,
                values,
                r_max: opts.r_max,
                scale: 1.0,
            }
        }
    };

    let mut profile = RadialProfile::Tabulated(tabulated);
    profile.normalize()?;
    Ok(RadialEigenpair {
        energy: converged.energy,
        profile,
        trace: converged.trace,
    })
}

/// A relative radial profile f(r) that can be evaluated anywhere on [0, r_max].
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    /// f(r) = exp(log_norm) · r^ν · exp(−a r²)
    PowerGaussian { nu: f64, a: f64, log_norm: f64, r_max: f64 },
    Tabulated(TabulatedProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    substitution: Substitution,
    nu: f64,
    h: f64,
    first_knot: f64,
    values: Vec<f64>,
    r_max: f64,
    scale: f64,
}

impl TabulatedProfile {
    fn smooth_part(&self, r: f64) -> f64 {
        let t = (r - self.first_knot) / self.h;
        let last = self.values.len() - 1;
        let base = (t.floor() as isize - 1).clamp(0, last as isize - 3) as usize;
        let x = t - base as f64;
        // Four-point Lagrange interpolation on knots base..base+3 at offsets 0..3.
        let v = &self.values[base..base + 4];
        let (x0, x1, x2, x3) = (x, x - 1.0, x - 2.0, x - 3.0);
        -v[0] * x1 * x2 * x3 / 6.0 + v[1] * x0 * x2 * x3 / 2.0 - v[2] * x0 * x1 * x3 / 2.0
            + v[3] * x0 * x1 * x2 / 6.0
    }

    fn eval(&self, r: f64) -> f64 {
        if !(r > 0.0) || r >= self.r_max {
            if r == 0.0 && self.substitution == Substitution::PowerLaw && self.nu == 0.0 {
                return self.scale * self.values[0];
            }
            return 0.0;
        }
        // Interpolation may undershoot where the tail vanishes; the ground state is nodeless.
        let s = self.smooth_part(r).max(0.0);
        let f = match self.substitution {
            Substitution::SqrtR => s / r.sqrt(),
            Substitution::PowerLaw => r.powf(self.nu) * s,
        };
        self.scale * f
    }
}

impl RadialProfile {
    /// Normalized closed-form profile r^ν exp(−a r²) with 2π∫f²r dr = 1.
    pub fn power_gaussian(nu: f64, a: f64, r_max: f64) -> Self {
        // ∫ r^{2ν+1} e^{−2ar²} dr = Γ(ν+1) / (2 (2a)^{ν+1})
        let b = 2.0 * a;
        let log_norm = 0.5
            * ((nu + 1.0) * b.ln() - PI.ln() - statrs::function::gamma::ln_gamma(nu + 1.0));
        Self::PowerGaussian {
            nu,
            a,
            log_norm,
            r_max,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::PowerGaussian {
                nu, a, log_norm, ..
            } => {
                if r > 0.0 {
                    (log_norm + nu * r.ln() - a * r * r).exp()
                } else if *nu == 0.0 {
                    log_norm.exp()
                } else {
                    0.0
                }
            }
            Self::Tabulated(t) => t.eval(r),
        }
    }

    /// Radius beyond which the profile is treated as zero.
    pub fn r_max(&self) -> f64 {
        match self {
            Self::PowerGaussian { r_max, .. } => *r_max,
            Self::Tabulated(t) => t.r_max,
        }
    }

    /// Short-range exponent ν of f ~ r^ν.
    pub fn short_range_exponent(&self) -> f64 {
        match self {
            Self::PowerGaussian { nu, .. } => *nu,
            Self::Tabulated(t) => t.nu,
        }
    }

    /// The standard 2000-node mapped Gauss-Legendre grid on [0, r_max].
    pub fn standard_grid(&self) -> Result<RadialGrid> {
        build_radial_grid(2000, self.r_max(), GridScheme::GaussLegendreMapped)
    }

    /// 2π∫f² r dr on the given grid.
    pub fn norm_squared_on(&self, grid: &RadialGrid) -> f64 {
        2.0 * PI * grid.quadrature(|r| {
            let f = self.eval(r);
            f * f * r
        })
    }

    /// Returns a copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::PowerGaussian {
                nu,
                a,
                log_norm,
                r_max,
            } => Self::PowerGaussian {
                nu: *nu,
                a: *a,
                log_norm: log_norm + factor.ln(),
                r_max: *r_max,
            },
            Self::Tabulated(t) => Self::Tabulated(TabulatedProfile {
                scale: t.scale * factor,
                ..t.clone()
            }),
        }
    }

    fn normalize(&mut self) -> Result<()> {
        let grid = self.standard_grid()?;
        let norm2 = self.norm_squared_on(&grid);
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::ConvergenceFailure(format!(
                "profile norm {norm2} cannot be normalized"
            )));
        }
        *self = self.scaled(1.0 / norm2.sqrt());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taut_potential(omega: f64) -> RadialPotential<impl Fn(f64) -> f64> {
        RadialPotential::new(move |r: f64| 0.25 * omega * omega * r * r + 1.0 / r)
    }

    /// Oracle for f = r^k (1 + a r) e^{−Ωr²/4} with μ = ½ and V = Ω²r²/4 + 1/r:
    /// matching powers r^{k−1}, r^k, r^{k+1} forces a = 1/(2k+1), Ω = a and
    /// ε = Ω (k + 2).
    fn taut_point(k: u32) -> (f64, f64) {
        let a = 1.0 / (2 * k + 1) as f64;
        (a, a * (k as f64 + 2.0))
    }

    #[test]
    fn taut_oracle_is_a_residual_free_solution() {
        // Finite-difference residual of the oracle itself, independent of the solver.
        for k in [0u32, 1, 5] {
            let (omega, eps) = taut_point(k);
            let a = omega;
            let f = |r: f64| r.powi(k as i32) * (1.0 + a * r) * (-0.25 * omega * r * r).exp();
            let m2 = (k * k) as f64;
            for &r in &[0.3, 1.0, 2.5, 4.0] {
                let d = 1e-4;
                let f2 = (f(r + d) - 2.0 * f(r) + f(r - d)) / (d * d);
                let f1 = (f(r + d) - f(r - d)) / (2.0 * d);
                let lhs = -(f2 + f1 / r - m2 * f(r) / (r * r))
                    + (0.25 * omega * omega * r * r + 1.0 / r) * f(r);
                assert!((lhs - eps * f(r)).abs() < 1e-4 * f(r).abs(), "k={k} r={r}");
            }
        }
    }

    #[test]
    fn two_dimensional_oscillator() {
        let omega = 2.0;
        let mu = 0.5;
        let v = RadialPotential::new(move |r: f64| 0.5 * mu * omega * omega * r * r);
        let opts = EigenOptions::with_cutoff(adaptive_cutoff(mu, omega));
        let pair = solve_radial_ground(&v, 0.0, mu, &opts).unwrap();
        assert!((pair.energy - 2.0).abs() < 1e-8 * 2.0, "{}", pair.energy);
    }

    #[test]
    fn taut_points_converge() {
        for k in [0u32, 1, 5] {
            let (omega, exact) = taut_point(k);
            let opts = EigenOptions::with_cutoff(adaptive_cutoff(0.5, omega));
            let pair = solve_radial_ground(&taut_potential(omega), k as f64, 0.5, &opts).unwrap();
            assert!(
                ((pair.energy - exact) / exact).abs() < 1e-8,
                "k={k}: {} vs {exact}, trace {:?}",
                pair.energy,
                pair.trace
            );
        }
        let (omega, exact) = taut_point(5);
        assert!((omega - 1.0 / 11.0).abs() < 1e-15 && (exact - 7.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_square_shifts_the_index() {
        let omega = 1.0;
        let v = RadialPotential::new(move |r: f64| 0.25 * omega * omega * r * r)
            .with_inverse_square(5.0);
        let opts = EigenOptions::with_cutoff(adaptive_cutoff(0.5, omega));
        let e = solve_radial_energy(&v, 0.0, 0.5, &opts).unwrap();
        let exact = 5f64.sqrt() + 1.0;
        assert!(((e - exact) / exact).abs() < 1e-8, "{e}");
    }

    #[test]
    fn second_order_convergence_against_taut_point() {
        for k in [0u32, 1, 5] {
            let (omega, exact) = taut_point(k);
            let r_max = adaptive_cutoff(0.5, omega);
            let errs: Vec<f64> = [4000, 8000, 16000]
                .iter()
                .map(|&n| {
                    tridiagonal_ground_energy(&taut_potential(omega), k as f64, 0.5, r_max, n)
                        .unwrap()
                        - exact
                })
                .collect();
            for w in errs.windows(2) {
                let ratio = w[0] / w[1];
                assert!((3.5..=4.5).contains(&ratio), "k={k} errors {errs:?}");
            }
        }
    }

    #[test]
    fn profile_is_normalized_nodeless_and_regular() {
        let (omega, _) = taut_point(5);
        let opts = EigenOptions::with_cutoff(adaptive_cutoff(0.5, omega));
        let pair = solve_radial_ground(&taut_potential(omega), 5.0, 0.5, &opts).unwrap();
        let grid = build_radial_grid(3000, opts.r_max, GridScheme::GaussLegendreMapped).unwrap();
        assert!((pair.profile.norm_squared_on(&grid) - 1.0).abs() < 1e-10);
        assert!(grid.nodes().iter().all(|&r| pair.profile.eval(r) >= 0.0));

        // Compare with the normalized analytic solution.
        let exact = |r: f64| r.powi(5) * (1.0 + omega * r) * (-0.25 * omega * r * r).exp();
        let n2 = 2.0 * PI * grid.quadrature(|r| exact(r).powi(2) * r);
        let c = 1.0 / n2.sqrt();
        let peak = grid.nodes().iter().map(|&r| c * exact(r)).fold(0.0, f64::max);
        for &r in grid.nodes().iter().step_by(37) {
            assert!((pair.profile.eval(r) - c * exact(r)).abs() < 1e-5 * peak, "r = {r}");
        }
        // f ~ r^5 near the origin
        let ratio = pair.profile.eval(0.2) / pair.profile.eval(0.1);
        assert!((ratio.log2() - 5.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn closed_form_profile_is_normalized() {
        let omega = 2.8;
        let nu = 105f64.sqrt();
        let p = RadialProfile::power_gaussian(nu, 0.25 * omega, adaptive_cutoff(0.5, omega));
        let grid = p.standard_grid().unwrap();
        assert!((p.norm_squared_on(&grid) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        let v = RadialPotential::new(|r: f64| r * r);
        let opts = EigenOptions::with_cutoff(10.0);
        assert!(solve_radial_energy(&v, 0.0, 0.0, &opts).is_err());
        assert!(solve_radial_energy(&v, -1.0, 1.0, &opts).is_err());
    }

    #[test]
    fn non_convergence_reports_diagnostics() {
        let (omega, _) = taut_point(0);
        let opts = EigenOptions {
            base_points: 16,
            min_levels: 2,
            max_levels: 2,
            rel_tol: 1e-14,
            ..EigenOptions::with_cutoff(adaptive_cutoff(0.5, omega))
        };
        let err = solve_radial_energy(&taut_potential(omega), 0.0, 0.5, &opts).unwrap_err();
        match err {
            Error::ConvergenceFailure(msg) => assert!(msg.contains("level energies")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
