//! The invariant suite behind `onion check`, also driven by the acceptance
//! harness. Each suite returns a pass/fail outcome with a one-line detail.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use onion_core::experiments::{band_analysis, hk_mapping_report, run_family, FamilyResult, FamilySpec, Member};
use onion_core::numerics::{
    adaptive_cutoff, solve_radial_energy, EigenOptions, RadialGrid, RadialPotential,
};
use onion_core::observables::{convolve, default_rule, INNER_POINTS};
use onion_core::qm_metrics::{
    d_jp, d_jp_to_zero, d_psi, d_psi_to_zero, d_rho, d_rho_to_zero, triangle_bound,
};
use onion_core::systems::{
    default_m_window, ground_state_m, hooke_relative_energy, isi_energy, m_transition_points,
    GroundState, SystemParams, REDUCED_MASS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

pub const CONSERVATION_TOL: f64 = 1e-6;
pub const PSI_RADIUS_TOL: f64 = 1e-8;
pub const RHO_RADIUS_TOL: f64 = 1e-6;
pub const JP_RADIUS_TOL: f64 = 1e-6;
pub const TRIANGLE_SLACK: f64 = 1e-9;
pub const ORACLE_TOL: f64 = 1e-8;
pub const CROSSING_TOL: f64 = 1e-3;
pub const GAP_TOL: f64 = 1e-12;
pub const BOUND_SLACK: f64 = 1e-9;
pub const MC_SIGMAS: f64 = 3.0;
pub const AXIOM_TRIPLES: usize = 500;

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub suite: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub fn timed(suite: &'static str, f: impl FnOnce() -> Result<String, String>) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Outcome {
        suite,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// The default ISI and Hooke reference families.
pub struct Families {
    pub isi: Result<FamilyResult, String>,
    pub hooke: Result<FamilyResult, String>,
}

impl Families {
    pub fn compute(profile_scale: f64) -> Self {
        let run = |mut spec: FamilySpec| {
            spec.profile_scale = profile_scale;
            run_family(&spec).map_err(|e| format!("{} family: {e}", spec.base.kind))
        };
        Self {
            isi: run(FamilySpec::isi_reference()),
            hooke: run(FamilySpec::hooke_reference()),
        }
    }

    fn both(&self) -> Result<[&FamilyResult; 2], String> {
        Ok([self.isi.as_ref()?, self.hooke.as_ref()?])
    }
}

fn members(f: &FamilyResult) -> Vec<&Arc<Member>> {
    f.members.iter().flatten().collect()
}

pub fn conservation(fams: &Families) -> Result<String, String> {
    let mut detail = Vec::new();
    for f in fams.both()? {
        let failed: Vec<String> = f
            .records
            .iter()
            .filter(|r| !r.status.is_ok())
            .map(|r| format!("ω₀={}: {}", r.omega0, r.status))
            .collect();
        if !failed.is_empty() {
            return Err(format!("{} family: {}", f.spec.base.kind, failed.join("; ")));
        }
        let (mut dn, mut dl, mut da) = (0.0f64, 0.0f64, 0.0f64);
        for m in members(f) {
            let c = &m.conservation;
            let scale = (c.m.abs() as f64).max(1.0);
            dn = dn.max((c.n_integral - 2.0).abs() / 2.0);
            dl = dl.max((c.lz_integral - c.m as f64).abs() / scale);
            da = da.max((c.abs_lz_integral - c.m.abs() as f64).abs() / scale);
            if !c.passed() || !c.sign_definite {
                return Err(format!("m={} fails {}", c.m, c.failures().join(", ")));
            }
        }
        if dn.max(dl).max(da) > CONSERVATION_TOL {
            return Err(format!("{}: max deviations N {dn:.2e}, Lz {dl:.2e}, |Lz| {da:.2e}", f.spec.base.kind));
        }
        detail.push(format!(
            "{} {} states: max rel dev N {dn:.1e} Lz {dl:.1e} |Lz| {da:.1e}",
            f.spec.base.kind,
            f.records.len()
        ));
    }
    Ok(detail.join("; "))
}

pub fn shell_radii(fams: &Families) -> Result<String, String> {
    let (mut worst_psi, mut worst_rho, mut worst_jp) = (0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    let mut shells = BTreeSet::new();
    for f in fams.both()? {
        for m in members(f) {
            let gs = &m.state;
            worst_psi = worst_psi.max((d_psi_to_zero(gs) - 2f64.sqrt()).abs());
            worst_rho = worst_rho.max((d_rho_to_zero(&m.density).map_err(|e| e.to_string())? - 2.0).abs());
            worst_jp = worst_jp.max(
                (d_jp_to_zero(&m.current).map_err(|e| e.to_string())? - gs.m.abs() as f64).abs(),
            );
            count += 1;
            shells.insert((f.spec.base.kind.to_string(), gs.m));
        }
    }
    let detail = format!(
        "{count} states on {} shells: |d_psi-√2| ≤ {worst_psi:.1e}, |d_rho-2| ≤ {worst_rho:.1e}, |d_jp-|m|| ≤ {worst_jp:.1e}",
        shells.len()
    );
    if count < 20 || shells.len() < 5 || worst_psi > PSI_RADIUS_TOL || worst_rho > RHO_RADIUS_TOL || worst_jp > JP_RADIUS_TOL {
        return Err(detail);
    }
    Ok(detail)
}

type Metric = fn(&Member, &Member) -> Result<f64, String>;

fn metric_psi(a: &Member, b: &Member) -> Result<f64, String> {
    d_psi(&a.state, &b.state).map_err(|e| e.to_string())
}

fn metric_rho(a: &Member, b: &Member) -> Result<f64, String> {
    d_rho(&a.density, &b.density).map_err(|e| e.to_string())
}

fn metric_jp(a: &Member, b: &Member) -> Result<f64, String> {
    d_jp(&a.current, &b.current).map_err(|e| e.to_string())
}

pub fn metric_axioms(fams: &Families, seed: u64, triples: usize) -> Result<String, String> {
    let pools: Vec<Vec<&Arc<Member>>> = fams.both()?.iter().map(|f| members(f)).collect();
    let metrics: [(&str, Metric); 3] = [("d_psi", metric_psi), ("d_rho", metric_rho), ("d_jp", metric_jp)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<(usize, [usize; 3])> = (0..triples)
        .map(|t| {
            let pool = t % pools.len();
            let n = pools[pool].len();
            (pool, [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)])
        })
        .collect();
    let mut worst_slack = f64::NEG_INFINITY;
    for (name, d) in metrics {
        for &(pool, [i, j, k]) in &picks {
            let (a, b, c) = (&pools[pool][i], &pools[pool][j], &pools[pool][k]);
            let ab = d(a, b)?;
            let ba = d(b, a)?;
            let bc = d(b, c)?;
            let ac = d(a, c)?;
            let aa = d(a, a)?;
            if aa != 0.0 {
                return Err(format!("{name}(x, x) = {aa:e}"));
            }
            if ab != ba {
                return Err(format!("{name} asymmetric: {ab:e} vs {ba:e}"));
            }
            if ab < 0.0 || (i != j && !(ab > 0.0)) {
                return Err(format!("{name} = {ab:e} between distinct states {i}, {j}"));
            }
            let slack = ac - (ab + bc);
            worst_slack = worst_slack.max(slack);
            if slack > TRIANGLE_SLACK {
                return Err(format!("{name} triangle violated by {slack:e}"));
            }
        }
    }
    Ok(format!(
        "{triples} triples × 3 metrics; max d(x,z) − d(x,y) − d(y,z) = {worst_slack:.2e}"
    ))
}

pub fn solver_oracles() -> Result<String, String> {
    let mut worst_isi = 0.0f64;
    let mut points = 0;
    for omega0 in [0.3, 0.62, 1.2] {
        for omegac in [0.0, 2.0, 5.5] {
            for alpha in [0.5, 5.0, 20.0] {
                let p = SystemParams::isi(omega0, omegac, alpha).map_err(|e| e.to_string())?;
                let m = ground_state_m(&p, default_m_window(&p)).map_err(|e| e.to_string())?;
                let omega = p.omega();
                let closed = isi_energy(&p, m) - omega - 0.5 * omegac * m as f64;
                let v = RadialPotential::new(move |r: f64| 0.25 * omega * omega * r * r).with_inverse_square(alpha);
                let opts = EigenOptions::with_cutoff(adaptive_cutoff(REDUCED_MASS, omega));
                let eps = solve_radial_energy(&v, m.unsigned_abs() as f64, REDUCED_MASS, &opts)
                    .map_err(|e| format!("ISI ({omega0}, {omegac}, {alpha}, m={m}): {e}"))?;
                let rel = ((eps - closed) / closed).abs();
                worst_isi = worst_isi.max(rel);
                points += 1;
                if rel > ORACLE_TOL {
                    return Err(format!("ISI ({omega0}, {omegac}, {alpha}, m={m}): {eps} vs {closed}"));
                }
            }
        }
    }
    let mut worst_taut = 0.0f64;
    for m_abs in [0u32, 1, 5] {
        let k = m_abs as f64;
        let omega = 1.0 / (2.0 * k + 1.0);
        let exact = (k + 2.0) / (2.0 * k + 1.0);
        let eps = hooke_relative_energy(omega, m_abs, 1.0).map_err(|e| e.to_string())?;
        worst_taut = worst_taut.max((eps - exact).abs());
        if (eps - exact).abs() > ORACLE_TOL {
            return Err(format!("Hooke |m|={m_abs}: {eps} vs {exact}"));
        }
    }
    Ok(format!(
        "ISI lattice {points} points max rel err {worst_isi:.1e}; Hooke polynomial points max abs err {worst_taut:.1e}"
    ))
}

pub fn reference_states() -> Result<String, String> {
    let isi = SystemParams::isi(0.62, 5.5, 5.0).map_err(|e| e.to_string())?;
    let hooke = SystemParams::hooke(0.5, 5.0).map_err(|e| e.to_string())?;
    let m_isi = ground_state_m(&isi, default_m_window(&isi)).map_err(|e| e.to_string())?;
    let m_hooke = ground_state_m(&hooke, default_m_window(&hooke)).map_err(|e| e.to_string())?;
    let detail = format!("ISI m = {m_isi}, Hooke m = {m_hooke}");
    if m_isi == -10 && m_hooke == -5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn crossings(fams: &Families) -> Result<String, String> {
    let base = SystemParams::isi(0.62, 5.5, 5.0).map_err(|e| e.to_string())?;
    let ms: Vec<i32> = (-16..=0).collect();
    let t = m_transition_points(&base, (0.40, 1.10), &ms).map_err(|e| e.to_string())?;
    let find = |l: i32| {
        t.iter()
            .find(|x| x.m_left == l && x.m_right == l + 1)
            .map(|x| x.omega0_star)
            .ok_or_else(|| format!("no crossing ({l}, {})", l + 1))
    };
    let a = find(-10)?;
    let b = find(-9)?;
    if (a - 0.6482).abs() > CROSSING_TOL || (b - 0.7245).abs() > CROSSING_TOL {
        return Err(format!("crossings at {a:.6}, {b:.6}"));
    }
    for f in fams.both()? {
        let ms: Vec<i32> = f.ok_records().map(|r| r.m.abs()).collect();
        if ms.windows(2).any(|w| w[1] > w[0]) {
            return Err(format!("{} ground-state |m| increases with ω₀", f.spec.base.kind));
        }
    }
    Ok(format!("ω₀*(−10,−9) = {a:.6}, ω₀*(−9,−8) = {b:.6}; |m| non-increasing over both sweeps"))
}

/// Cross-shell rows must sit at d_psi = 2 and same-shell rows below it.
pub fn psi_gap_violations<'a>(rows: impl Iterator<Item = (i32, f64)> + 'a, m_ref: i32) -> Vec<String> {
    rows.filter_map(|(m, d)| {
        if m != m_ref && (d - 2.0).abs() > GAP_TOL {
            Some(format!("m={m}: d_psi = {d:.15}"))
        } else if m == m_ref && !(d < 2.0) {
            Some(format!("same shell m={m}: d_psi = {d:.15}"))
        } else {
            None
        }
    })
    .collect()
}

pub fn psi_gap(fams: &Families) -> Result<String, String> {
    let mut cross = 0;
    let mut within = 0;
    for f in fams.both()? {
        let v = psi_gap_violations(f.ok_records().map(|r| (r.m, r.d_psi)), f.m_ref);
        if !v.is_empty() {
            return Err(v.join("; "));
        }
        cross += f.ok_records().filter(|r| r.m != f.m_ref).count();
        within += f.ok_records().filter(|r| r.m == f.m_ref).count();
    }
    Ok(format!("{cross} cross-shell rows at d_psi = 2, {within} same-shell rows below 2"))
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn band_trends(profile_scale: f64) -> Result<String, String> {
    let mut spec = FamilySpec::isi_reference();
    spec.profile_scale = profile_scale;
    let analysis = band_analysis(&spec, -14..=-6).map_err(|e| e.to_string())?;
    let m_ref = analysis.m_ref;
    let by_m = |m: i32| analysis.bands.iter().find(|b| b.m == m);
    let reference = by_m(m_ref).ok_or("reference shell missing")?;
    if reference.theta_min.abs() > 1e-6 {
        return Err(format!("reference shell θ_min = {}", reference.theta_min));
    }
    // Sides ordered moving away from the reference shell.
    let outer: Vec<_> = (1..).map(|k| m_ref - k).map_while(by_m).collect();
    let inner: Vec<_> = (1..).map(|k| m_ref + k).take_while(|&m| m < 0).map_while(by_m).collect();
    if outer.len() < 4 || inner.len() < 4 {
        return Err(format!("only {} outer and {} inner shells", outer.len(), inner.len()));
    }
    let col = |bs: &[&onion_core::experiments::BandSummary], f: fn(&onion_core::experiments::BandSummary) -> f64| {
        std::iter::once(reference).chain(bs.iter().copied()).map(f).collect::<Vec<f64>>()
    };
    let dt = |bs: &[&onion_core::experiments::BandSummary]| bs.iter().map(|b| b.delta_theta).collect::<Vec<f64>>();
    let checks = [
        ("θ_min rises for |m| > |m_ref|", strictly_increasing(&col(&outer, |b| b.theta_min))),
        ("θ_max rises for |m| > |m_ref|", strictly_increasing(&col(&outer, |b| b.theta_max))),
        ("Δθ shrinks for |m| > |m_ref|", strictly_decreasing(&dt(&outer))),
        ("θ_min rises for |m| < |m_ref|", strictly_increasing(&col(&inner, |b| b.theta_min))),
        ("θ_max rises for |m| < |m_ref|", strictly_increasing(&col(&inner, |b| b.theta_max))),
        ("Δθ grows for |m| < |m_ref|", strictly_increasing(&dt(&inner))),
    ];
    let table = analysis
        .bands
        .iter()
        .map(|b| format!("{}:[{:.4},{:.4}]", b.m, b.theta_min, b.theta_max))
        .collect::<Vec<_>>()
        .join(" ");
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    if failed.is_empty() {
        Ok(format!("{} outer, {} inner shells; {table}", outer.len(), inner.len()))
    } else {
        Err(format!("{}; {table}", failed.join(", ")))
    }
}

pub fn mapping(fams: &Families) -> Result<String, String> {
    let mut detail = Vec::new();
    for f in fams.both()? {
        let report = hk_mapping_report(&f.records);
        for b in &report.branches {
            if b.insufficient || !b.rho_vs_psi.monotone {
                return Err(format!("{} {}: d_rho vs d_psi not monotone", f.spec.base.kind, b.branch));
            }
        }
        let sep = report.separation.unwrap_or(0.0);
        if f.spec.base.kind == onion_core::systems::SystemKind::Isi && !(sep > 0.0) {
            return Err("ISI d_jp branches collapse".into());
        }
        detail.push(format!("{} separation {sep:.4}", f.spec.base.kind));
    }
    Ok(format!("d_rho(d_psi) monotone on every branch; {}", detail.join(", ")))
}

pub fn triangle(fams: &Families) -> Result<String, String> {
    let mut pairs = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for f in fams.both()? {
        let ms = members(f);
        let results: Vec<Result<(usize, f64), String>> = (0..ms.len())
            .into_par_iter()
            .map(|i| {
                let mut w = f64::NEG_INFINITY;
                for j in i..ms.len() {
                    let d = d_jp(&ms[i].current, &ms[j].current).map_err(|e| e.to_string())?;
                    let excess = d - triangle_bound(ms[i].state.m, ms[j].state.m);
                    if excess > BOUND_SLACK {
                        return Err(format!(
                            "d_jp = {d} exceeds |{}| + |{}|",
                            ms[i].state.m, ms[j].state.m
                        ));
                    }
                    w = w.max(excess);
                }
                Ok((ms.len() - i, w))
            })
            .collect();
        for r in results {
            let (n, w) = r?;
            pairs += n;
            worst = worst.max(w);
        }
    }
    Ok(format!("{pairs} pairs; max d_jp − (|m₁|+|m₂|) = {worst:.3e}"))
}

/// Monte-Carlo estimates of ρ(r₁) and j_φ(r₁) with standard errors, sampling R
/// from the CM density: ρ = 8 E[f(2|r₁ − R|)²], j_φ = 8m E[f(s)² cos φ_s / s].
pub fn monte_carlo_estimate(gs: &GroundState, r1: f64, samples: usize, seed: u64) -> [(f64, f64); 2] {
    const CHUNK: usize = 1 << 16;
    let sigma = (0.5 / gs.cm_exponent).sqrt();
    let normal = Normal::new(0.0, sigma).expect("positive width");
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<[f64; 4]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut acc = [0.0; 4];
            for _ in 0..n {
                let sx = 2.0 * (r1 - normal.sample(&mut rng));
                let sy = -2.0 * normal.sample(&mut rng);
                let s = sx.hypot(sy);
                let f2 = gs.profile.eval(s).powi(2);
                let a = 8.0 * f2;
                let b = 8.0 * gs.m as f64 * f2 * sx / (s * s);
                acc[0] += a;
                acc[1] += a * a;
                acc[2] += b;
                acc[3] += b * b;
            }
            acc
        })
        .collect();
    let mut total = [0.0; 4];
    for s in &sums {
        for k in 0..4 {
            total[k] += s[k];
        }
    }
    let n = samples as f64;
    let stat = |s: f64, s2: f64| {
        let mean = s / n;
        (mean, ((s2 / n - mean * mean).max(0.0) / n).sqrt())
    };
    [stat(total[0], total[1]), stat(total[2], total[3])]
}

pub fn monte_carlo(fams: &Families, samples: usize, seed: u64) -> Result<String, String> {
    let radii = [0.8, 1.6, 2.6];
    let grid = Arc::new(RadialGrid::from_nodes(radii.to_vec()));
    let mut worst = 0.0f64;
    for f in fams.both()? {
        let reference = f
            .members
            .iter()
            .zip(&f.records)
            .find(|(_, r)| r.branch == onion_core::experiments::Branch::Reference)
            .and_then(|(m, _)| m.clone())
            .ok_or("reference member missing")?;
        let gs = &reference.state;
        let (rho, cur) = convolve(gs, &grid, &default_rule(), INNER_POINTS).map_err(|e| e.to_string())?;
        for (i, &r1) in radii.iter().enumerate() {
            let [(mr, er), (mj, ej)] = monte_carlo_estimate(gs, r1, samples, seed.wrapping_add(i as u64));
            let zr = (rho.rho[i] - mr).abs() / er;
            let zj = (cur.j_phi[i] - mj).abs() / ej;
            worst = worst.max(zr).max(zj);
            if zr > MC_SIGMAS || zj > MC_SIGMAS {
                return Err(format!(
                    "{} r={r1}: ρ {} vs {mr}±{er}, j {} vs {mj}±{ej}",
                    f.spec.base.kind, rho.rho[i], cur.j_phi[i]
                ));
            }
        }
    }
    Ok(format!("{samples} samples per point; max deviation {worst:.2} standard errors"))
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub quick: bool,
    pub inject_norm_error: Option<f64>,
    pub seed: u64,
    pub mc_samples: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            quick: false,
            inject_norm_error: None,
            seed: 20_240_917,
            mc_samples: 10_000_000,
        }
    }
}

/// Runs every suite, handing each outcome to `sink` as soon as it is known.
pub fn run_all(opts: &CheckOptions, mut sink: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let scale = opts.inject_norm_error.map_or(1.0, |x| (1.0 + x).sqrt());
    let mut out = Vec::new();
    let mut emit = |o: Outcome| {
        sink(&o);
        out.push(o);
    };
    emit(timed("solver-oracles", solver_oracles));
    emit(timed("reference-states", reference_states));
    let fams = Families::compute(scale);
    emit(timed("conservation", || conservation(&fams)));
    emit(timed("shell-radii", || shell_radii(&fams)));
    emit(timed("metric-axioms", || metric_axioms(&fams, opts.seed, AXIOM_TRIPLES)));
    emit(timed("crossings", || crossings(&fams)));
    emit(timed("psi-gap", || psi_gap(&fams)));
    emit(timed("mapping", || mapping(&fams)));
    emit(timed("triangle-bound", || triangle(&fams)));
    emit(timed("band-trends", || {
        fams.both()?;
        band_trends(scale)
    }));
    if !opts.quick {
        emit(timed("monte-carlo", || monte_carlo(&fams, opts.mc_samples, opts.seed)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_violations() {
        let rows = vec![(-10, 0.0), (-10, 0.3), (-9, 2.0), (-11, 2.0)];
        assert!(psi_gap_violations(rows.into_iter(), -10).is_empty());
        let bad = vec![(-9, 1.999), (-10, 2.0)];
        assert_eq!(psi_gap_violations(bad.into_iter(), -10).len(), 2);
    }

    #[test]
    fn oracle_suites_pass() {
        assert!(solver_oracles().is_ok());
        assert!(reference_states().is_ok());
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let gs = onion_core::systems::solve_isi(&SystemParams::isi(0.62, 5.5, 5.0).unwrap(), -10).unwrap();
        let a = monte_carlo_estimate(&gs, 1.6, 100_000, 5);
        let b = monte_carlo_estimate(&gs, 1.6, 100_000, 5);
        assert_eq!(a, b);
        assert!(a[0].1 > 0.0 && a[1].0 < 0.0);
    }

    #[test]
    fn timed_reports_failure() {
        let o = timed("x", || Err("boom".into()));
        assert!(!o.passed);
        assert_eq!(o.detail, "boom");
    }
}
