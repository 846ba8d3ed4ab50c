//! Radial and angular quadrature rules.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Smallest node count accepted by [`build_radial_grid`].
pub const MIN_RADIAL_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    /// Gauss-Legendre nodes mapped affinely from [-1, 1] onto [0, r_max].
    GaussLegendreMapped,
    /// Equal cells of width r_max / n with one node at each cell centre.
    /// Exact for constants and straight lines, and never touches either endpoint.
    UniformMidpoint,
}

impl FromStr for GridScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss-legendre-mapped" | "gauss-legendre" | "gl" => Ok(Self::GaussLegendreMapped),
            "uniform-trapezoid" | "uniform-midpoint" | "uniform" => Ok(Self::UniformMidpoint),
            other => Err(Error::InvalidArgument(format!("unknown grid scheme `{other}`"))),
        }
    }
}

/// A quadrature rule on (0, r_max) for integrals of the form ∫ g(r) dr.
///
/// The physical planar measure 2πr dr is *not* folded into the weights; callers
/// that integrate circularly symmetric fields multiply by 2πr themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    r_max: f64,
}

impl RadialGrid {
    /// Bare evaluation points with zero weights; integrals over it vanish.
    pub fn from_nodes(nodes: Vec<f64>) -> Self {
        let r_max = nodes.iter().cloned().fold(0.0, f64::max);
        let weights = vec![0.0; nodes.len()];
        Self {
            nodes,
            weights,
            r_max,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Samples `g` at every node.
    pub fn sample<F: Fn(f64) -> f64>(&self, g: F) -> Vec<f64> {
        self.nodes.iter().map(|&r| g(r)).collect()
    }

    /// Σ w_k g(r_k) without validation; the caller guarantees finite samples.
    pub fn quadrature<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * g(r))
            .sum()
    }
}

pub fn build_radial_grid(n: usize, r_max: f64, scheme: GridScheme) -> Result<RadialGrid> {
    if n < MIN_RADIAL_NODES {
        return Err(Error::InvalidArgument(format!(
            "radial grid needs at least {MIN_RADIAL_NODES} nodes, got {n}"
        )));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radial cutoff must be positive and finite, got {r_max}"
        )));
    }

    let (nodes, weights) = match scheme {
        GridScheme::GaussLegendreMapped => {
            let rule = gauss_legendre(n);
            let half = 0.5 * r_max;
            let nodes = rule.0.iter().map(|&x| half * (x + 1.0)).collect();
            let weights = rule.1.iter().map(|&w| half * w).collect();
            (nodes, weights)
        }
        GridScheme::UniformMidpoint => {
            let h = r_max / n as f64;
            let nodes = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
            (nodes, vec![h; n])
        }
    };

    Ok(RadialGrid {
        nodes,
        weights,
        r_max,
    })
}

/// Σ w_k v_k over the grid, rejecting malformed input.
pub fn integrate_radial(values: &[f64], grid: &RadialGrid) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples for a {}-node grid",
            values.len(),
            grid.len()
        )));
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidValue(format!(
            "non-finite sample {} at node {k}",
            values[k]
        )));
    }
    Ok(values.iter().zip(&grid.weights).map(|(v, w)| v * w).sum())
}

/// A real function of radius sampled at the nodes of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRadialFunction {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl SampledRadialFunction {
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, f: F) -> Self {
        let values = grid.sample(f);
        Self { grid, values }
    }

    /// 2π ∫ v(r)^power r dr over the plane.
    pub fn planar_moment(&self, power: i32) -> f64 {
        2.0 * PI
            * self
                .grid
                .nodes()
                .iter()
                .zip(self.grid.weights())
                .zip(&self.values)
                .map(|((r, w), v)| w * r * v.powi(power))
                .sum::<f64>()
    }
}

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1], cached per order.
pub fn gauss_legendre(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(compute_gauss_legendre(n));
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .entry(n)
        .or_insert(rule)
        .clone()
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;

    for i in 0..n.div_ceil(2) {
        // Tricomi's estimate of the i-th largest root, polished by Newton.
        let theta = PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Periodic trapezoid rule on [0, 2π).
#[derive(Debug, Clone, PartialEq)]
pub struct AngularRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl AngularRule {
    pub fn trapezoid(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidArgument(format!(
                "angular rule needs at least 4 nodes, got {n}"
            )));
        }
        let step = 2.0 * PI / n as f64;
        Ok(Self {
            nodes: (0..n).map(|j| j as f64 * step).collect(),
            weights: vec![step; n],
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&phi, &w)| w * g(phi))
            .sum()
    }

    /// Nodes merged by the mirror symmetry φ ↔ 2π − φ, as (1 − cos φ, weight)
    /// pairs sorted by increasing 1 − cos φ. Integrands that depend on φ only
    /// through cos φ can be summed over this shorter list.
    pub fn cosine_folded(&self) -> Vec<(f64, f64)> {
        let n = self.len();
        let mut folded: Vec<(f64, f64)> = Vec::with_capacity(n / 2 + 1);
        for (j, (&phi, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let mirror = (n - j) % n;
            if mirror < j {
                continue;
            }
            let weight = if mirror == j { w } else { 2.0 * w };
            // 1 - cos φ = 2 sin²(φ/2) without cancellation near φ = 0.
            let s = (0.5 * phi).sin();
            folded.push((2.0 * s * s, weight));
        }
        folded.sort_by(|a, b| a.0.total_cmp(&b.0));
        folded
    }
}
