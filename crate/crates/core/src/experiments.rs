//! Families of ground states over ω₀, their distances from a reference member,
//! and the angular bands the currents occupy on each |m| shell.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{AngularRule, RadialGrid};
use crate::observables::{
    check_conservation, default_rule, metric_grid, observables, ConservationReport,
    CurrentProfile, DensityProfile,
};
use crate::qm_metrics::{d_jp, d_psi, d_rho, sphere_angle, triangle_bound};
use crate::systems::{
    default_m_window, effective_frequency, ground_state_m, m_transition_points, solve,
    GroundState, SystemParams,
};

/// Values closer than this to the reference ω₀ are snapped onto it.
const SNAP_TOL: f64 = 1e-12;
/// d_psi values within this of 2 count as cross-shell.
const GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RescaleConvention {
    /// d_jp / (|m| + |m_ref|)
    #[default]
    PairMax,
    /// d_jp / max over the family
    FamilyMax,
}

impl fmt::Display for RescaleConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PairMax => "pair-max",
            Self::FamilyMax => "family-max",
        })
    }
}

impl FromStr for RescaleConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair-max" => Ok(Self::PairMax),
            "family-max" => Ok(Self::FamilyMax),
            other => Err(Error::InvalidArgument(format!("unknown rescale convention `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    /// Fixed parameters; `base.omega0` is ignored.
    pub base: SystemParams,
    /// Sorted, deduplicated, containing `reference_omega0`.
    pub omega0_values: Vec<f64>,
    pub reference_omega0: f64,
    /// Select the ground-state m per point; otherwise use `fixed_m`.
    pub auto_m: bool,
    pub fixed_m: i32,
    pub grid_points: usize,
    pub angular_points: usize,
    pub rescale: RescaleConvention,
    /// Multiplies every relative profile (fault injection; 1 in normal use).
    pub profile_scale: f64,
}

impl FamilySpec {
    pub fn new(base: SystemParams, omega0_values: Vec<f64>, reference_omega0: f64) -> Result<Self> {
        base.validate()?;
        if !(reference_omega0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference ω₀ must be positive, got {reference_omega0}"
            )));
        }
        let mut values: Vec<f64> = omega0_values
            .into_iter()
            .map(|w| if (w - reference_omega0).abs() <= SNAP_TOL { reference_omega0 } else { w })
            .collect();
        if values.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("every ω₀ in the sweep must be positive".into()));
        }
        values.push(reference_omega0);
        values.sort_by(f64::total_cmp);
        values.dedup();
        let (lo, hi) = (values[0], values[values.len() - 1]);
        if values.len() == 1 || lo == hi {
            return Err(Error::InvalidArgument("sweep needs at least two values".into()));
        }
        Ok(Self {
            base,
            omega0_values: values,
            reference_omega0,
            auto_m: true,
            fixed_m: 0,
            grid_points: 2000,
            angular_points: crate::observables::ANGULAR_POINTS,
            rescale: RescaleConvention::default(),
            profile_scale: 1.0,
        })
    }

    /// Evenly spaced sweep `min, min + step, …, ≤ max`.
    pub fn range(base: SystemParams, min: f64, max: f64, step: f64, reference_omega0: f64) -> Result<Self> {
        if !(min > 0.0 && max >= min && step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid ω₀ range {min}..{max} step {step}"
            )));
        }
        if reference_omega0 < min || reference_omega0 > max {
            return Err(Error::InvalidArgument(format!(
                "reference ω₀ {reference_omega0} lies outside {min}..{max}"
            )));
        }
        let n = ((max - min) / step + 1e-9).floor() as usize;
        let values = (0..=n)
            .map(|k| {
                let w = min + k as f64 * step;
                (w * 1e12).round() / 1e12
            })
            .collect();
        Self::new(base, values, reference_omega0)
    }

    /// ISI with ω_c = 5.5, α = 5, reference ω₀ = 0.62, swept over 0.40…1.10.
    pub fn isi_reference() -> Self {
        let base = SystemParams::isi(0.62, 5.5, 5.0).expect("valid parameters");
        Self::range(base, 0.40, 1.10, 0.005, 0.62).expect("valid sweep")
    }

    /// Hooke's atom with ω_c = 5, reference ω₀ = 0.5, swept over 0.30…0.90.
    pub fn hooke_reference() -> Self {
        let base = SystemParams::hooke(0.5, 5.0).expect("valid parameters");
        Self::range(base, 0.30, 0.90, 0.005, 0.5).expect("valid sweep")
    }

    fn params_at(&self, omega0: f64) -> Result<SystemParams> {
        self.base.with_omega0(omega0)
    }

    fn m_at(&self, params: &SystemParams) -> Result<i32> {
        if self.auto_m {
            ground_state_m(params, default_m_window(params))
        } else {
            Ok(self.fixed_m)
        }
    }

    fn shared_grid(&self, omega0_min: f64) -> Result<Arc<RadialGrid>> {
        metric_grid(effective_frequency(omega0_min, self.base.omegac), self.grid_points)
    }

    fn rule(&self) -> Result<AngularRule> {
        if self.angular_points == crate::observables::ANGULAR_POINTS {
            Ok(default_rule())
        } else {
            AngularRule::trapezoid(self.angular_points)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    Below,
    Reference,
    Above,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Below => "below-ref",
            Self::Reference => "reference",
            Self::Above => "above-ref",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Failed(String),
}

impl Status {
    pub fn is_ok(&self) -> bool {
        matches!(self, Self::Ok)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ok => f.write_str("ok"),
            Self::Failed(msg) => write!(f, "failed: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRecord {
    pub omega0: f64,
    pub m: i32,
    pub energy: f64,
    pub d_psi: f64,
    pub d_rho: f64,
    pub d_jp: f64,
    pub d_jp_rescaled: f64,
    /// Polar angle on the |m| shell; None when m or m_ref is zero.
    pub theta: Option<f64>,
    pub branch: Branch,
    pub status: Status,
    pub conservation: Option<ConservationReport>,
}

impl DistanceRecord {
    fn failed(omega0: f64, branch: Branch, err: impl fmt::Display) -> Self {
        Self {
            omega0,
            m: 0,
            energy: f64::NAN,
            d_psi: f64::NAN,
            d_rho: f64::NAN,
            d_jp: f64::NAN,
            d_jp_rescaled: f64::NAN,
            theta: None,
            branch,
            status: Status::Failed(err.to_string()),
            conservation: None,
        }
    }
}

/// A solved member with its observables on the family grid.
#[derive(Debug, Clone)]
pub struct Member {
    pub state: GroundState,
    pub density: DensityProfile,
    pub current: CurrentProfile,
    pub conservation: ConservationReport,
}

fn solve_member(
    spec: &FamilySpec,
    omega0: f64,
    grid: &Arc<RadialGrid>,
    rule: &AngularRule,
) -> Result<Member> {
    let params = spec.params_at(omega0)?;
    let m = spec.m_at(&params)?;
    let mut state = solve(&params, m)?;
    if spec.profile_scale != 1.0 {
        state = state.with_profile_scale(spec.profile_scale);
    }
    let (density, current) = observables(&state, grid, rule)?;
    let conservation = check_conservation(&state, &density, &current);
    Ok(Member {
        state,
        density,
        current,
        conservation,
    })
}

#[derive(Debug, Clone)]
pub struct FamilyResult {
    pub spec: FamilySpec,
    pub m_ref: i32,
    pub grid: Arc<RadialGrid>,
    /// Sorted by ω₀; one per sweep value.
    pub records: Vec<DistanceRecord>,
    /// Solved members parallel to `records`; None where the point failed.
    pub members: Vec<Option<Arc<Member>>>,
    pub family_max_djp: f64,
}

impl FamilyResult {
    pub fn reference(&self) -> &DistanceRecord {
        self.records
            .iter()
            .find(|r| r.branch == Branch::Reference)
            .expect("reference record is always present")
    }

    pub fn ok_records(&self) -> impl Iterator<Item = &DistanceRecord> {
        self.records.iter().filter(|r| r.status.is_ok())
    }
}

/// Solves every member of the family and measures it against the reference.
/// Per-point failures are recorded, not propagated; a failing reference is an error.
pub fn run_family(spec: &FamilySpec) -> Result<FamilyResult> {
    let (rows, grid, m_ref) = run_family_members(spec)?;
    let (records, members): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let family_max_djp = records
        .iter()
        .filter(|r| r.status.is_ok())
        .map(|r| r.d_jp)
        .fold(0.0, f64::max);
    let mut records = records;
    for r in records.iter_mut().filter(|r| r.status.is_ok()) {
        r.d_jp_rescaled = match rescale(r.d_jp, r.m, m_ref, spec.rescale, family_max_djp) {
            Ok(v) => v,
            Err(_) => f64::NAN,
        };
    }
    Ok(FamilyResult {
        spec: spec.clone(),
        m_ref,
        grid,
        records,
        members,
        family_max_djp,
    })
}

type Row = (DistanceRecord, Option<Arc<Member>>);

fn run_family_members(spec: &FamilySpec) -> Result<(Vec<Row>, Arc<RadialGrid>, i32)> {
    let grid = spec.shared_grid(spec.omega0_values[0])?;
    let rule = spec.rule()?;
    let reference = solve_member(spec, spec.reference_omega0, &grid, &rule)?;
    if !reference.conservation.passed() {
        return Err(Error::AccuracyFailure(format!(
            "reference state fails conservation: {}",
            reference.conservation.failures().join(", ")
        )));
    }
    let m_ref = reference.state.m;
    let reference = Arc::new(reference);

    let rows = spec
        .omega0_values
        .par_iter()
        .map(|&omega0| {
            let branch = match omega0.total_cmp(&spec.reference_omega0) {
                std::cmp::Ordering::Less => Branch::Below,
                std::cmp::Ordering::Equal => Branch::Reference,
                std::cmp::Ordering::Greater => Branch::Above,
            };
            let member = if branch == Branch::Reference {
                Ok(Arc::clone(&reference))
            } else {
                solve_member(spec, omega0, &grid, &rule).map(Arc::new)
            };
            match member.and_then(|m| measure(&m, &reference, m_ref, branch).map(|r| (r, m))) {
                Ok((record, m)) => (record, Some(m)),
                Err(e) => (DistanceRecord::failed(omega0, branch, e), None),
            }
        })
        .collect();
    Ok((rows, grid, m_ref))
}

fn measure(member: &Member, reference: &Member, m_ref: i32, branch: Branch) -> Result<DistanceRecord> {
    let gs = &member.state;
    if !member.conservation.passed() {
        return Err(Error::AccuracyFailure(format!(
            "conservation check failed ({})",
            member.conservation.failures().join(", ")
        )));
    }
    let djp = d_jp(&member.current, &reference.current)?;
    let theta = if gs.m != 0 && m_ref != 0 {
        Some(sphere_angle(m_ref, gs.m, djp)?)
    } else {
        None
    };
    Ok(DistanceRecord {
        omega0: gs.params.omega0,
        m: gs.m,
        energy: gs.energy,
        d_psi: d_psi(gs, &reference.state)?,
        d_rho: d_rho(&member.density, &reference.density)?,
        d_jp: djp,
        d_jp_rescaled: f64::NAN,
        theta,
        branch,
        status: Status::Ok,
        conservation: Some(member.conservation.clone()),
    })
}

fn rescale(d: f64, m: i32, m_ref: i32, convention: RescaleConvention, family_max: f64) -> Result<f64> {
    let denom = match convention {
        RescaleConvention::PairMax => triangle_bound(m, m_ref),
        RescaleConvention::FamilyMax => family_max,
    };
    if denom == 0.0 {
        return Err(Error::Undefined(format!(
            "{convention} rescaling has a zero denominator (m = {m}, m_ref = {m_ref})"
        )));
    }
    Ok(d / denom)
}

/// Rescaled current distance of one record of `family`.
pub fn rescale_djp(
    record: &DistanceRecord,
    family: &FamilyResult,
    convention: RescaleConvention,
) -> Result<f64> {
    rescale(record.d_jp, record.m, family.m_ref, convention, family.family_max_djp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSummary {
    pub m: i32,
    pub omega0_lo: f64,
    pub omega0_hi: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub delta_theta: f64,
    /// Scan points used after refinement.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandAnalysis {
    pub m_ref: i32,
    pub bands: Vec<BandSummary>,
    pub warnings: Vec<String>,
}

/// Initial scan density per validity interval; refined by doubling.
pub const BAND_SCAN_POINTS: usize = 33;
const BAND_MAX_REFINEMENTS: usize = 4;
const BAND_THETA_TOL: f64 = 1e-3;

/// θ extremes of ground-state currents on each |m| shell in `m_span`, measured
/// from the family's reference current.
///
/// Each shell's validity interval runs between the neighbouring level
/// crossings, clipped to the sweep range. θ is scanned on a uniform grid of
/// the interval (endpoints included), doubling until both extremes move by
/// less than 1e−3 rad.
pub fn band_analysis(spec: &FamilySpec, m_span: std::ops::RangeInclusive<i32>) -> Result<BandAnalysis> {
    let (w_min, w_max) = (spec.omega0_values[0], *spec.omega0_values.last().expect("non-empty"));
    let grid = spec.shared_grid(w_min)?;
    let rule = spec.rule()?;
    let reference = solve_member(spec, spec.reference_omega0, &grid, &rule)?;
    let m_ref = reference.state.m;
    if m_ref == 0 {
        return Err(Error::Undefined("reference shell has m = 0; angles are undefined".into()));
    }

    let (lo_m, hi_m) = (*m_span.start(), *m_span.end());
    let ms: Vec<i32> = ((lo_m - 1)..=(hi_m + 1).min(0)).collect();
    let transitions = match m_transition_points(&spec.base, (w_min, w_max), &ms) {
        Ok(t) => t,
        Err(Error::Bracket { .. }) => Vec::new(),
        Err(e) => return Err(e),
    };
    let crossing: BTreeMap<i32, f64> = transitions.iter().map(|t| (t.m_left, t.omega0_star)).collect();

    let mut bands = Vec::new();
    let mut warnings = Vec::new();
    for m in m_span {
        if m == 0 {
            warnings.push("shell m = 0 skipped: angle undefined".to_string());
            continue;
        }
        // Larger |m| gives way to smaller |m| as ω₀ grows.
        let lo = crossing.get(&(m - 1)).copied().unwrap_or(w_min).max(w_min);
        let hi = crossing.get(&m).copied().unwrap_or(w_max).min(w_max);
        if !(hi > lo) || !covers(spec, m, lo, hi)? {
            warnings.push(format!("shell m = {m} has no ground-state interval in {w_min}..{w_max}"));
            continue;
        }
        match scan_band(spec, m, lo, hi, &reference, &grid, &rule) {
            Ok(b) => bands.push(b),
            Err(e) => warnings.push(format!("shell m = {m}: {e}")),
        }
    }
    Ok(BandAnalysis {
        m_ref,
        bands,
        warnings,
    })
}

/// Whether m is the ground state at the midpoint of [lo, hi].
fn covers(spec: &FamilySpec, m: i32, lo: f64, hi: f64) -> Result<bool> {
    let p = spec.params_at(0.5 * (lo + hi))?;
    Ok(ground_state_m(&p, default_m_window(&p))? == m)
}

fn scan_band(
    spec: &FamilySpec,
    m: i32,
    lo: f64,
    hi: f64,
    reference: &Member,
    grid: &Arc<RadialGrid>,
    rule: &AngularRule,
) -> Result<BandSummary> {
    let m_ref = reference.state.m;
    let theta_at = |omega0: f64| -> Result<f64> {
        let params = spec.params_at(omega0)?;
        let gs = solve(&params, m)?;
        let (_, cur) = observables(&gs, grid, rule)?;
        sphere_angle(m_ref, m, d_jp(&cur, &reference.current)?)
    };
    let mut thetas: Vec<f64> = Vec::new();
    let mut n = BAND_SCAN_POINTS;
    let mut prev: Option<(f64, f64)> = None;
    let mut extra = Vec::new();
    if (lo..=hi).contains(&spec.reference_omega0) && m == m_ref {
        extra.push(theta_at(spec.reference_omega0)?);
    }
    for level in 0..=BAND_MAX_REFINEMENTS {
        // Nested grids: level 0 takes every node, later levels only the new midpoints.
        let step = (hi - lo) / (n - 1) as f64;
        let new: Vec<f64> = (0..n)
            .filter(|i| level == 0 || i % 2 == 1)
            .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
            .collect();
        let batch: Vec<f64> = new.par_iter().map(|&w| theta_at(w)).collect::<Result<_>>()?;
        thetas.extend(batch);
        let all = thetas.iter().chain(&extra);
        let (t_min, t_max) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
        if let Some((p_min, p_max)) = prev {
            if (t_min - p_min).abs() < BAND_THETA_TOL && (t_max - p_max).abs() < BAND_THETA_TOL {
                return Ok(summary(m, lo, hi, t_min, t_max, thetas.len() + extra.len()));
            }
        }
        prev = Some((t_min, t_max));
        n = 2 * n - 1;
    }
    let (t_min, t_max) = prev.expect("at least one level");
    Err(Error::ConvergenceFailure(format!(
        "θ extremes for m = {m} still moving after {} points (θ ∈ [{t_min}, {t_max}])",
        thetas.len()
    )))
}

fn summary(m: i32, lo: f64, hi: f64, theta_min: f64, theta_max: f64, samples: usize) -> BandSummary {
    BandSummary {
        m,
        omega0_lo: lo,
        omega0_hi: hi,
        theta_min,
        theta_max,
        delta_theta: theta_max - theta_min,
        samples,
    }
}

/// Rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// y is non-decreasing in x: for every pair with x_i < x_j, y_i ≤ y_j + tol.
/// Pairs with equal x carry no ordering and are exempt.
pub fn is_monotone_non_decreasing(x: &[f64], y: &[f64], tol: f64) -> bool {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    // Running max of y over strictly smaller x.
    let mut best_below = f64::NEG_INFINITY;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let group_min = idx[i..=j].iter().map(|&k| y[k]).fold(f64::INFINITY, f64::min);
        let group_max = idx[i..=j].iter().map(|&k| y[k]).fold(f64::NEG_INFINITY, f64::max);
        if group_min + tol < best_below {
            return false;
        }
        best_below = best_below.max(group_max);
        i = j + 1;
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDiagnostics {
    pub monotone: bool,
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchDiagnostics {
    pub branch: Branch,
    pub records: usize,
    /// Fewer than three records: the flags below are not meaningful.
    pub insufficient: bool,
    pub rho_vs_psi: PairDiagnostics,
    pub jp_vs_psi: PairDiagnostics,
    pub jp_vs_rho: PairDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingReport {
    pub branches: Vec<BranchDiagnostics>,
    /// Largest d_jp gap between the branches where d_psi < 2, comparing
    /// piecewise-linear interpolants over the common d_psi range.
    pub continuous_gap: Option<f64>,
    /// Hausdorff distance between the branches' d_jp values at d_psi = 2.
    pub gap_column: Option<f64>,
    /// max of the two; None when the branches share no d_psi slice.
    pub separation: Option<f64>,
}

/// Tolerance for the monotonicity flags.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Monotonicity of the distance–distance maps on each side of the reference,
/// and how far apart the two sides' current curves lie.
pub fn hk_mapping_report(records: &[DistanceRecord]) -> MappingReport {
    let ok: Vec<&DistanceRecord> = records.iter().filter(|r| r.status.is_ok()).collect();
    let reference: Vec<&DistanceRecord> = ok.iter().copied().filter(|r| r.branch == Branch::Reference).collect();
    let side = |b: Branch| -> Vec<&DistanceRecord> {
        ok.iter()
            .copied()
            .filter(|r| r.branch == b)
            .chain(reference.iter().copied())
            .collect()
    };
    let below = side(Branch::Below);
    let above = side(Branch::Above);

    let diag = |branch: Branch, rs: &[&DistanceRecord]| -> BranchDiagnostics {
        let psi: Vec<f64> = rs.iter().map(|r| r.d_psi).collect();
        let rho: Vec<f64> = rs.iter().map(|r| r.d_rho).collect();
        let jp: Vec<f64> = rs.iter().map(|r| r.d_jp).collect();
        let pair = |x: &[f64], y: &[f64]| PairDiagnostics {
            monotone: is_monotone_non_decreasing(x, y, MONOTONE_TOL),
            spearman: spearman(x, y),
        };
        BranchDiagnostics {
            branch,
            records: rs.len(),
            insufficient: rs.len() < 3,
            rho_vs_psi: pair(&psi, &rho),
            jp_vs_psi: pair(&psi, &jp),
            jp_vs_rho: pair(&rho, &jp),
        }
    };

    let continuous_gap = interpolated_gap(&below, &above);
    let gap_column = column_gap(&below, &above);
    let separation = match (continuous_gap, gap_column) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    MappingReport {
        branches: vec![diag(Branch::Below, &below), diag(Branch::Above, &above)],
        continuous_gap,
        gap_column,
        separation,
    }
}

fn in_shell(rs: &[&DistanceRecord]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = rs
        .iter()
        .filter(|r| r.d_psi < 2.0 - GAP_TOL)
        .map(|r| (r.d_psi, r.d_jp))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| a.0 == b.0);
    pts
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    let k = pts.partition_point(|p| p.0 < x);
    if k == 0 {
        return pts[0].1;
    }
    if k == pts.len() {
        return pts[k - 1].1;
    }
    let (x0, y0) = pts[k - 1];
    let (x1, y1) = pts[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn interpolated_gap(a: &[&DistanceRecord], b: &[&DistanceRecord]) -> Option<f64> {
    let pa = in_shell(a);
    let pb = in_shell(b);
    if pa.len() < 2 || pb.len() < 2 {
        return None;
    }
    let lo = pa[0].0.max(pb[0].0);
    let hi = pa[pa.len() - 1].0.min(pb[pb.len() - 1].0);
    if hi < lo {
        return None;
    }
    pa.iter()
        .chain(&pb)
        .map(|p| p.0)
        .filter(|&x| x >= lo && x <= hi)
        .map(|x| (interpolate(&pa, x) - interpolate(&pb, x)).abs())
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))))
}

fn column_gap(a: &[&DistanceRecord], b: &[&DistanceRecord]) -> Option<f64> {
    let col = |rs: &[&DistanceRecord]| -> Vec<f64> {
        rs.iter().filter(|r| r.d_psi >= 2.0 - GAP_TOL).map(|r| r.d_jp).collect()
    };
    let (ca, cb) = (col(a), col(b));
    if ca.is_empty() || cb.is_empty() {
        return None;
    }
    let directed = |from: &[f64], to: &[f64]| {
        from.iter()
            .map(|x| to.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Some(directed(&ca, &cb).max(directed(&cb, &ca)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellJump {
    pub omega0_left: f64,
    pub omega0_right: f64,
    pub m_left: i32,
    pub m_right: i32,
    pub d_psi: (f64, f64),
    pub d_rho: (f64, f64),
    pub d_jp: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// max |Δd| / Δω₀ between adjacent same-m records, for d_psi, d_rho, d_jp.
    pub lipschitz: [f64; 3],
    pub jumps: Vec<ShellJump>,
}

/// Within-shell rate constants and the jumps at every shell boundary.
pub fn continuity_report(records: &[DistanceRecord]) -> ContinuityReport {
    let ok: Vec<&DistanceRecord> = records.iter().filter(|r| r.status.is_ok()).collect();
    let mut lipschitz = [0.0f64; 3];
    let mut jumps = Vec::new();
    for w in ok.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.m == b.m {
            let dw = b.omega0 - a.omega0;
            for (k, (x, y)) in [(a.d_psi, b.d_psi), (a.d_rho, b.d_rho), (a.d_jp, b.d_jp)].into_iter().enumerate() {
                lipschitz[k] = lipschitz[k].max((y - x).abs() / dw);
            }
        } else {
            jumps.push(ShellJump {
                omega0_left: a.omega0,
                omega0_right: b.omega0,
                m_left: a.m,
                m_right: b.m,
                d_psi: (a.d_psi, b.d_psi),
                d_rho: (a.d_rho, b.d_rho),
                d_jp: (a.d_jp, b.d_jp),
            });
        }
    }
    ContinuityReport { lipschitz, jumps }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_isi_family() -> FamilySpec {
        let base = SystemParams::isi(0.62, 5.5, 5.0).unwrap();
        let mut spec = FamilySpec::range(base, 0.56, 0.70, 0.01, 0.62).unwrap();
        spec.grid_points = 800;
        spec
    }

    fn record(branch: Branch, m: i32, d_psi: f64, d_rho: f64, d_jp: f64) -> DistanceRecord {
        DistanceRecord {
            omega0: 0.0,
            m,
            energy: 0.0,
            d_psi,
            d_rho,
            d_jp,
            d_jp_rescaled: 0.0,
            theta: None,
            branch,
            status: Status::Ok,
            conservation: None,
        }
    }

    #[test]
    fn range_contains_reference_exactly() {
        let spec = FamilySpec::isi_reference();
        assert!(spec.omega0_values.contains(&0.62));
        assert_eq!(spec.omega0_values.len(), 141);
        assert_eq!(spec.omega0_values[0], 0.40);
        assert_eq!(*spec.omega0_values.last().unwrap(), 1.10);
        assert!(spec.omega0_values.windows(2).all(|w| w[0] < w[1]));
        let hooke = FamilySpec::hooke_reference();
        assert!(hooke.omega0_values.contains(&0.5));
        assert_eq!(hooke.omega0_values.len(), 121);
    }

    #[test]
    fn invalid_specs() {
        let base = SystemParams::isi(0.62, 5.5, 5.0).unwrap();
        assert!(FamilySpec::range(base, 0.7, 0.6, 0.01, 0.65).is_err());
        assert!(FamilySpec::range(base, 0.5, 0.6, 0.01, 0.9).is_err());
        assert!(FamilySpec::new(base, vec![0.5, -0.1], 0.5).is_err());
        assert!(FamilySpec::new(base, vec![0.5], 0.5).is_err());
    }

    #[test]
    fn small_family() {
        let result = run_family(&small_isi_family()).unwrap();
        assert_eq!(result.m_ref, -10);
        let r = result.reference();
        assert_eq!((r.d_psi, r.d_rho, r.d_jp), (0.0, 0.0, 0.0));
        assert_eq!(r.theta, Some(0.0));
        assert_eq!(r.d_jp_rescaled, 0.0);
        assert!(result.records.iter().all(|r| r.status.is_ok()));
        assert_eq!(result.members.len(), result.records.len());
        assert!(result.members.iter().all(|m| m.is_some()));
        for rec in &result.records {
            assert!(rec.d_jp <= triangle_bound(rec.m, -10) + 1e-9);
            if rec.m != -10 {
                assert_eq!(rec.d_psi, 2.0);
            } else {
                assert!(rec.d_psi < 2.0);
            }
            assert!(rec.conservation.as_ref().unwrap().passed());
        }
        let ms: Vec<i32> = result.records.iter().map(|r| r.m).collect();
        assert!(ms.contains(&-11) && ms.contains(&-9));

        let farthest = result
            .records
            .iter()
            .max_by(|a, b| a.d_jp.total_cmp(&b.d_jp))
            .unwrap();
        assert_eq!(rescale_djp(farthest, &result, RescaleConvention::FamilyMax).unwrap(), 1.0);
        assert_eq!(rescale_djp(result.reference(), &result, RescaleConvention::FamilyMax).unwrap(), 0.0);

        let report = hk_mapping_report(&result.records);
        assert!(report.branches.iter().all(|b| b.rho_vs_psi.monotone && !b.insufficient));
        assert!(report.separation.unwrap() > 0.0);

        let cont = continuity_report(&result.records);
        assert!(cont.jumps.iter().all(|j| j.d_psi.0 == 2.0 || j.d_psi.1 == 2.0));
        assert!(cont.lipschitz.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn fixed_m_family() {
        let mut spec = small_isi_family();
        spec.auto_m = false;
        spec.fixed_m = -10;
        spec.omega0_values = vec![0.60, 0.62, 0.64];
        let result = run_family(&spec).unwrap();
        assert!(result.records.iter().all(|r| r.m == -10 && r.d_psi < 2.0));
    }

    #[test]
    fn inaccurate_reference_is_an_error() {
        let mut spec = small_isi_family();
        spec.grid_points = 16;
        assert!(matches!(run_family(&spec), Err(Error::AccuracyFailure(_))));
    }

    #[test]
    fn injected_normalization_error_is_named() {
        let mut spec = small_isi_family();
        spec.profile_scale = 1.01f64.sqrt();
        let err = run_family(&spec).unwrap_err().to_string();
        assert!(err.contains("particle-number"), "{err}");
    }

    #[test]
    fn conservation_failure_marks_the_record() {
        let spec = small_isi_family();
        let grid = spec.shared_grid(0.56).unwrap();
        let rule = default_rule();
        let reference = solve_member(&spec, 0.62, &grid, &rule).unwrap();
        let bad_state = reference.state.with_profile_scale(1.01);
        let (density, current) = observables(&bad_state, &grid, &rule).unwrap();
        let conservation = check_conservation(&bad_state, &density, &current);
        let bad = Member {
            state: bad_state,
            density,
            current,
            conservation,
        };
        let err = measure(&bad, &reference, -10, Branch::Above).unwrap_err();
        let rec = DistanceRecord::failed(0.62, Branch::Above, err);
        assert!(matches!(&rec.status, Status::Failed(msg) if msg.contains("particle-number")));
        assert!(rec.d_psi.is_nan());
    }

    #[test]
    fn rescale_conventions() {
        let rec = record(Branch::Below, -9, 2.0, 0.5, 3.8);
        assert!((rescale(rec.d_jp, -9, -10, RescaleConvention::PairMax, 0.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(rescale(19.0, -9, -10, RescaleConvention::PairMax, 0.0).unwrap(), 1.0);
        assert!(matches!(
            rescale(0.0, 0, 0, RescaleConvention::PairMax, 1.0),
            Err(Error::Undefined(_))
        ));
        assert_eq!("family-max".parse::<RescaleConvention>().unwrap(), RescaleConvention::FamilyMax);
        assert!("max".parse::<RescaleConvention>().is_err());
    }

    #[test]
    fn monotonicity_helper() {
        assert!(is_monotone_non_decreasing(&[0.0, 1.0, 2.0], &[0.0, 0.5, 0.7], 0.0));
        assert!(!is_monotone_non_decreasing(&[0.0, 1.0, 2.0], &[0.0, 0.8, 0.7], 0.0));
        // Equal abscissae are exempt from ordering among themselves.
        assert!(is_monotone_non_decreasing(&[0.0, 2.0, 2.0], &[0.0, 0.9, 0.7], 0.0));
        assert!(!is_monotone_non_decreasing(&[0.0, 1.0, 2.0, 2.0], &[0.0, 0.8, 0.9, 0.7], 0.0));
    }

    #[test]
    fn spearman_values() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(spearman(&[1.0], &[1.0]), None);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn insufficient_branch_is_flagged() {
        let records = vec![
            record(Branch::Reference, -10, 0.0, 0.0, 0.0),
            record(Branch::Below, -10, 0.1, 0.2, 0.3),
            record(Branch::Above, -10, 0.1, 0.2, 0.3),
            record(Branch::Above, -9, 2.0, 0.5, 4.0),
        ];
        let report = hk_mapping_report(&records);
        assert!(report.branches[0].insufficient);
        assert!(!report.branches[1].insufficient);
        assert_eq!(report.continuous_gap, Some(0.0));
        assert_eq!(report.gap_column, None);
    }

    #[test]
    fn column_gap_is_hausdorff() {
        let records = vec![
            record(Branch::Reference, -10, 0.0, 0.0, 0.0),
            record(Branch::Below, -11, 2.0, 0.5, 4.0),
            record(Branch::Below, -12, 2.0, 0.9, 6.0),
            record(Branch::Above, -9, 2.0, 0.5, 4.5),
        ];
        let report = hk_mapping_report(&records);
        assert_eq!(report.gap_column, Some(1.5));
        assert_eq!(report.separation, Some(1.5));
    }

    #[test]
    fn band_reference_shell() {
        let spec = small_isi_family();
        let bands = band_analysis(&spec, -10..=-10).unwrap();
        assert_eq!(bands.m_ref, -10);
        let b = &bands.bands[0];
        assert_eq!(b.theta_min, 0.0);
        assert!(b.delta_theta > 0.0 && b.delta_theta < 0.05);
        assert!((b.omega0_lo - 0.5868).abs() < 1e-3);
        assert!((b.omega0_hi - 0.6482).abs() < 1e-3);
        assert!(b.samples >= 33);
    }

    #[test]
    fn band_outside_sweep_is_skipped() {
        let spec = small_isi_family();
        let bands = band_analysis(&spec, -20..=-20).unwrap();
        assert!(bands.bands.is_empty());
        assert_eq!(bands.warnings.len(), 1);
    }
}
