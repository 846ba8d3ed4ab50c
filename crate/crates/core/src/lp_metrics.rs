//! p-norm metrics on sampled functions obeying ∫|f|^p dx = c.
//!
//! Every function with the same conserved value c sits at distance c^{1/p}
//! from the zero function, so the conserved families form concentric shells.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::RadialGrid;

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Real(Vec<f64>),
    /// Allowed for p = 2 only.
    Complex(Vec<Complex64>),
}

impl Samples {
    fn len(&self) -> usize {
        match self {
            Self::Real(v) => v.len(),
            Self::Complex(v) => v.len(),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Self::Real(v) => v.iter().all(|x| x.is_finite()),
            Self::Complex(v) => v.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }
}

/// Samples on a radial grid together with the per-node factor (for example
/// 2πr) that turns the grid's ∫dr into the physical measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredFunction {
    grid: Arc<RadialGrid>,
    measure: Arc<Vec<f64>>,
    values: Samples,
}

impl MeasuredFunction {
    pub fn new(grid: Arc<RadialGrid>, measure: Arc<Vec<f64>>, values: Samples) -> Result<Self> {
        if measure.len() != grid.len() || values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "grid has {} nodes, measure {}, samples {}",
                grid.len(),
                measure.len(),
                values.len()
            )));
        }
        if measure.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidValue("measure weights must be finite and non-negative".into()));
        }
        if !values.is_finite() {
            return Err(Error::InvalidValue("samples must be finite".into()));
        }
        Ok(Self {
            grid,
            measure,
            values,
        })
    }

    pub fn real(grid: Arc<RadialGrid>, measure: Arc<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, measure, Samples::Real(values))
    }

    /// The planar measure 2πr for circularly symmetric functions.
    pub fn planar_measure(grid: &RadialGrid) -> Arc<Vec<f64>> {
        Arc::new(
            grid.nodes()
                .iter()
                .map(|&r| 2.0 * std::f64::consts::PI * r)
                .collect(),
        )
    }

    /// The zero function on the same grid and measure: the common centre of every shell.
    pub fn zero_like(&self) -> Self {
        let values = match &self.values {
            Samples::Real(v) => Samples::Real(vec![0.0; v.len()]),
            Samples::Complex(v) => Samples::Complex(vec![Complex64::new(0.0, 0.0); v.len()]),
        };
        Self {
            grid: Arc::clone(&self.grid),
            measure: Arc::clone(&self.measure),
            values,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let values = match &self.values {
            Samples::Real(v) => Samples::Real(v.iter().map(|x| factor * x).collect()),
            Samples::Complex(v) => Samples::Complex(v.iter().map(|z| z * factor).collect()),
        };
        Self {
            values,
            ..self.clone()
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn values(&self) -> &Samples {
        &self.values
    }

    fn compatible(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid)
            && (Arc::ptr_eq(&self.measure, &other.measure) || self.measure == other.measure)
    }

    /// Σ w_k μ_k |v_k|^p, the left side of the conservation law.
    fn moment(&self, p: f64) -> f64 {
        let weights = self.grid.weights().iter().zip(self.measure.iter());
        match &self.values {
            Samples::Real(v) => weights
                .zip(v)
                .map(|((w, m), x)| w * m * pow_abs(x.abs(), p))
                .sum(),
            Samples::Complex(v) => weights
                .zip(v)
                .map(|((w, m), z)| w * m * z.norm_sqr())
                .sum(),
        }
    }
}

fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

fn root(s: f64, p: f64) -> f64 {
    if p == 1.0 {
        s
    } else if p == 2.0 {
        s.sqrt()
    } else {
        s.powf(1.0 / p)
    }
}

fn check_exponent(p: f64, values: &Samples) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "p = {p} does not define a norm (need 1 ≤ p < ∞)"
        )));
    }
    if matches!(values, Samples::Complex(_)) && p != 2.0 {
        return Err(Error::InvalidArgument(format!(
            "complex samples are only supported for p = 2, got p = {p}"
        )));
    }
    Ok(())
}

/// ‖f‖_p = [Σ w_k μ_k |v_k|^p]^{1/p}.
pub fn p_norm(f: &MeasuredFunction, p: f64) -> Result<f64> {
    check_exponent(p, &f.values)?;
    Ok(root(f.moment(p), p))
}

/// D_f(f₁, f₂) = ‖f₁ − f₂‖_p.
pub fn lp_distance(f1: &MeasuredFunction, f2: &MeasuredFunction, p: f64) -> Result<f64> {
    if !f1.compatible(f2) {
        return Err(Error::IncompatibleGrids);
    }
    let weights = f1.grid.weights().iter().zip(f1.measure.iter());
    let sum: f64 = match (&f1.values, &f2.values) {
        (Samples::Real(a), Samples::Real(b)) => {
            check_exponent(p, &f1.values)?;
            weights
                .zip(a.iter().zip(b))
                .map(|((w, m), (x, y))| w * m * pow_abs((x - y).abs(), p))
                .sum()
        }
        (a, b) => {
            check_exponent(p, &Samples::Complex(Vec::new()))?;
            let a = as_complex(a);
            let b = as_complex(b);
            weights
                .zip(a.iter().zip(&b))
                .map(|((w, m), (x, y))| w * m * (x - y).norm_sqr())
                .sum()
        }
    };
    Ok(root(sum, p))
}

fn as_complex(s: &Samples) -> Vec<Complex64> {
    match s {
        Samples::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        Samples::Complex(v) => v.clone(),
    }
}

/// Distance to the zero function, i.e. the radius of the shell `f` lies on.
pub fn shell_radius(f: &MeasuredFunction, p: f64) -> Result<f64> {
    lp_distance(f, &f.zero_like(), p)
}

/// A conservation law ∫|f|^p dx = c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationLaw {
    p: f64,
    c: f64,
}

impl ConservationLaw {
    pub fn new(p: f64, c: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("exponent p = {p} must satisfy p ≥ 1")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "conserved value c = {c} must be positive and finite"
            )));
        }
        Ok(Self { p, c })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// c^{1/p}
    pub fn shell_radius(&self) -> f64 {
        root(self.c, self.p)
    }

    /// Relative deviation of ∫|f|^p from c.
    pub fn violation(&self, f: &MeasuredFunction) -> Result<f64> {
        check_exponent(self.p, &f.values)?;
        Ok((f.moment(self.p) - self.c).abs() / self.c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{build_radial_grid, GridScheme};
    use proptest::prelude::*;

    fn grid(n: usize) -> Arc<RadialGrid> {
        Arc::new(build_radial_grid(n, 6.0, GridScheme::GaussLegendreMapped).unwrap())
    }

    fn real_fn(g: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> MeasuredFunction {
        let measure = MeasuredFunction::planar_measure(g);
        MeasuredFunction::real(Arc::clone(g), measure, g.sample(f)).unwrap()
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let g = grid(32);
        let f = real_fn(&g, |_| 0.0);
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert_eq!(p_norm(&f, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn self_distance_and_distance_to_zero() {
        let g = grid(64);
        let f = real_fn(&g, |r| (-r * r).exp());
        for p in [1.0, 2.0, 2.5] {
            assert_eq!(lp_distance(&f, &f, p).unwrap(), 0.0);
            let d0 = lp_distance(&f, &f.zero_like(), p).unwrap();
            assert!((d0 - p_norm(&f, p).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn disjoint_supports_add() {
        let g = grid(200);
        let a = real_fn(&g, |r| if r < 2.0 { 1.0 } else { 0.0 });
        let b = real_fn(&g, |r| if r > 3.0 { 0.5 } else { 0.0 });
        let d = lp_distance(&a, &b, 1.0).unwrap();
        let sum = p_norm(&a, 1.0).unwrap() + p_norm(&b, 1.0).unwrap();
        assert!((d - sum).abs() < 1e-12 * sum);
    }

    #[test]
    fn shell_radius_matches_conservation_law() {
        let g = grid(400);
        // 2π∫ e^{-r²} r dr = π on [0, ∞)
        let f = real_fn(&g, |r| (-r * r).exp());
        let law = ConservationLaw::new(1.0, std::f64::consts::PI).unwrap();
        assert!(law.violation(&f).unwrap() < 1e-12);
        let radius = shell_radius(&f, 1.0).unwrap();
        assert!((radius - law.shell_radius()).abs() < 1e-12);
    }

    #[test]
    fn complex_samples_only_for_p_two() {
        let g = grid(16);
        let measure = MeasuredFunction::planar_measure(&g);
        let z = MeasuredFunction::new(
            Arc::clone(&g),
            measure,
            Samples::Complex(vec![Complex64::new(0.0, 1.0); 16]),
        )
        .unwrap();
        assert!(p_norm(&z, 2.0).is_ok());
        assert!(matches!(p_norm(&z, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn p_below_one_rejected() {
        let g = grid(16);
        let f = real_fn(&g, |r| r);
        assert!(matches!(p_norm(&f, 0.5), Err(Error::InvalidArgument(_))));
        assert!(ConservationLaw::new(0.9, 1.0).is_err());
        assert!(ConservationLaw::new(1.0, 0.0).is_err());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = real_fn(&grid(16), |r| r);
        let b = real_fn(&grid(17), |r| r);
        assert_eq!(lp_distance(&a, &b, 1.0).unwrap_err(), Error::IncompatibleGrids);
    }

    #[test]
    fn malformed_functions_rejected() {
        let g = grid(16);
        let measure = MeasuredFunction::planar_measure(&g);
        assert!(MeasuredFunction::real(Arc::clone(&g), Arc::clone(&measure), vec![1.0; 15]).is_err());
        let mut bad = vec![1.0; 16];
        bad[2] = f64::INFINITY;
        assert!(MeasuredFunction::real(Arc::clone(&g), measure, bad).is_err());
        assert!(MeasuredFunction::real(Arc::clone(&g), Arc::new(vec![-1.0; 16]), vec![1.0; 16]).is_err());
    }

    const N: usize = 24;

    fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        let v = || proptest::collection::vec(-5.0f64..5.0, N);
        (v(), v(), v())
    }

    proptest! {
        #[test]
        fn metric_axioms(
            (x, y, z) in triple(),
            p in prop_oneof![Just(1.0), Just(2.0), 1.0f64..4.0],
            keep in proptest::collection::vec(any::<bool>(), 3),
        ) {
            let g = grid(N);
            let measure = MeasuredFunction::planar_measure(&g);
            let mk = |v: Vec<f64>| MeasuredFunction::real(Arc::clone(&g), Arc::clone(&measure), v).unwrap();
            let fns = [mk(x), mk(y), mk(z)];
            // Any subset of the sampled functions inherits the axioms.
            let subset: Vec<&MeasuredFunction> =
                fns.iter().zip(&keep).filter(|(_, k)| **k).map(|(f, _)| f).collect();
            for a in &subset {
                prop_assert_eq!(lp_distance(a, a, p).unwrap(), 0.0);
                for b in &subset {
                    let dab = lp_distance(a, b, p).unwrap();
                    prop_assert!(dab >= 0.0);
                    prop_assert_eq!(dab.to_bits(), lp_distance(b, a, p).unwrap().to_bits());
                    for c in &subset {
                        let bound = lp_distance(a, c, p).unwrap() + lp_distance(c, b, p).unwrap();
                        prop_assert!(dab <= bound + 1e-12, "{} > {}", dab, bound);
                    }
                }
            }
        }

        #[test]
        fn norm_is_homogeneous(v in proptest::collection::vec(-3.0f64..3.0, N), lambda in -10.0f64..10.0, p in 1.0f64..4.0) {
            let g = grid(N);
            let f = MeasuredFunction::real(Arc::clone(&g), MeasuredFunction::planar_measure(&g), v).unwrap();
            let lhs = p_norm(&f.scaled(lambda), p).unwrap();
            let rhs = lambda.abs() * p_norm(&f, p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }
    }
}
