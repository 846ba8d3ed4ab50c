use std::io::Write;
use std::path::{Path, PathBuf};

use onion_core::experiments::{band_analysis, run_family, FamilySpec, RescaleConvention};
use onion_core::observables::{check_conservation, default_rule, metric_grid, observables};
use onion_core::systems::{
    default_m_window, energy_landscape, ground_state_m, m_transition_points, solve, SystemKind,
    SystemParams,
};
use onion_core::Error;

use crate::args::{BandsArgs, FamilyOpts, PhaseArgs, RangeOpts, SolveArgs, SweepArgs, SystemOpts};
use crate::config::{defaults_for, resolve, resolve_opt, ConfigFile, SystemDefaults};
use crate::output::{fmt_f64, fmt_opt, sanitize, CsvTable};
use crate::CliError;

const SIGN_CONVENTION: &str = "j_phi < 0 for m < 0 (clockwise seen from +z); symmetric gauge";

fn system(opts: &SystemOpts, cfg: &ConfigFile) -> Result<(SystemParams, SystemDefaults), CliError> {
    let kind: SystemKind = resolve_opt(opts.system, cfg, "system")?
        .ok_or_else(|| CliError::Usage("--system is required (hooke | isi)".into()))?;
    let d = defaults_for(kind);
    let omegac = resolve(opts.omegac, cfg, "omegac", d.omegac)?;
    let params = match kind {
        SystemKind::Isi => SystemParams::isi(d.omega0_ref, omegac, resolve(opts.alpha, cfg, "alpha", d.alpha)?)?,
        SystemKind::Hooke => SystemParams::hooke(d.omega0_ref, omegac)?,
    };
    Ok((params, d))
}

fn range(opts: &RangeOpts, cfg: &ConfigFile, d: &SystemDefaults) -> Result<(f64, f64, f64), CliError> {
    let lo = resolve(opts.omega0_min, cfg, "omega0-min", d.omega0_min)?;
    let hi = resolve(opts.omega0_max, cfg, "omega0-max", d.omega0_max)?;
    let step = resolve(opts.omega0_step, cfg, "omega0-step", d.omega0_step)?;
    if !(lo > 0.0 && hi > lo && step > 0.0) {
        return Err(CliError::Usage(format!("invalid ω₀ range {lo}..{hi} step {step}")));
    }
    Ok((lo, hi, step))
}

fn describe(t: &mut CsvTable, p: &SystemParams) {
    t.comment("system", p.kind);
    t.comment("omegac", fmt_f64(p.omegac));
    if p.kind == SystemKind::Isi {
        t.comment("alpha", fmt_f64(p.alpha));
    }
}

pub fn cmd_solve(args: &SolveArgs, cfg: &ConfigFile) -> Result<i32, CliError> {
    let (base, d) = system(&args.system, cfg)?;
    let omega0 = resolve(args.omega0, cfg, "omega0", d.omega0_ref)?;
    let params = base.with_omega0(omega0)?;
    let m = match resolve_opt(args.m, cfg, "m")? {
        Some(m) if !args.auto_m => m,
        _ => ground_state_m(&params, default_m_window(&params))?,
    };
    let gs = solve(&params, m)?;
    let n = resolve(args.grid_points, cfg, "grid-points", 2000)?;
    let grid = metric_grid(gs.omega, n)?;
    let (rho, cur) = observables(&gs, &grid, &default_rule())?;
    let report = check_conservation(&gs, &rho, &cur);

    let mut out = std::io::stdout().lock();
    writeln!(out, "system = {}", params.kind)?;
    writeln!(out, "omega0 = {}", fmt_f64(params.omega0))?;
    writeln!(out, "omegac = {}", fmt_f64(params.omegac))?;
    if params.kind == SystemKind::Isi {
        writeln!(out, "alpha = {}", fmt_f64(params.alpha))?;
    }
    writeln!(out, "m = {}", gs.m)?;
    writeln!(out, "Omega = {}", fmt_f64(gs.omega))?;
    writeln!(out, "energy = {}", fmt_f64(gs.energy))?;
    writeln!(out, "N_integral = {}", fmt_f64(report.n_integral))?;
    writeln!(out, "Lz_integral = {}", fmt_f64(report.lz_integral))?;
    writeln!(out, "absLz_integral = {}", fmt_f64(report.abs_lz_integral))?;
    writeln!(out, "current_sign_definite = {}", report.sign_definite)?;
    let verdict = if report.passed() {
        "pass".to_string()
    } else {
        format!("fail ({})", report.failures().join(", "))
    };
    writeln!(out, "conservation = {verdict}")?;
    drop(out);

    if let Some(path) = &args.profiles {
        let mut t = CsvTable::new(vec!["r", "rho", "j_phi", "f_rel"]);
        describe(&mut t, &params);
        t.comment("omega0", fmt_f64(params.omega0));
        t.comment("m", gs.m);
        t.comment("current_convention", SIGN_CONVENTION);
        t.comment("f_rel", "relative-motion radial profile at separation r");
        for (i, &r) in grid.nodes().iter().enumerate() {
            t.rows.push(vec![
                fmt_f64(r),
                fmt_f64(rho.rho[i]),
                fmt_f64(cur.j_phi[i]),
                fmt_f64(gs.profile.eval(r)),
            ]);
        }
        t.emit(Some(path))?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}{ext}"))
}

fn sweep_values(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12).collect()
}

pub fn cmd_phase(args: &PhaseArgs, cfg: &ConfigFile) -> Result<i32, CliError> {
    let (base, d) = system(&args.system, cfg)?;
    let (lo, hi, step) = range(&args.range, cfg, &d)?;
    let values = sweep_values(lo, hi, step);
    let gs_m = |w: f64| -> Result<i32, CliError> {
        let p = base.with_omega0(w)?;
        Ok(ground_state_m(&p, default_m_window(&p))?)
    };
    let m_min = match resolve_opt(args.m_min, cfg, "m-min")? {
        Some(m) => m,
        None => gs_m(lo)? - 1,
    };
    let m_max = match resolve_opt(args.m_max, cfg, "m-max")? {
        Some(m) => m,
        None => (gs_m(hi)? + 1).min(0),
    };
    if m_min > m_max {
        return Err(CliError::Usage(format!("empty m range {m_min}..{m_max}")));
    }
    let ms: Vec<i32> = (m_min..=m_max).collect();

    let landscape = energy_landscape(&base, &values, &ms)?;
    let mut energies = CsvTable::new(vec!["omega0", "m", "energy"]);
    describe(&mut energies, &base);
    energies.comment("m_range", format!("{m_min}..{m_max}"));
    for p in &landscape {
        energies.rows.push(vec![fmt_f64(p.omega0), p.m.to_string(), fmt_f64(p.energy)]);
    }

    let transitions = match m_transition_points(&base, (lo, hi), &ms) {
        Ok(t) => t,
        Err(Error::Bracket { .. }) => {
            eprintln!("warning: no ground-state crossing between m = {m_min} and {m_max} in {lo}..{hi}");
            Vec::new()
        }
        Err(e) => return Err(e.into()),
    };
    let mut crossings = CsvTable::new(vec!["omega0_star", "m_left", "m_right"]);
    describe(&mut crossings, &base);
    crossings.comment("omega0_range", format!("{}..{}", fmt_f64(lo), fmt_f64(hi)));
    for t in &transitions {
        crossings.rows.push(vec![fmt_f64(t.omega0_star), t.m_left.to_string(), t.m_right.to_string()]);
    }

    let out = resolve_opt(args.out.clone(), cfg, "out")?;
    let cross_path = resolve_opt(args.crossings.clone(), cfg, "crossings")?
        .or_else(|| out.as_deref().map(|p| sibling(p, "_crossings")));
    energies.emit(out.as_deref())?;
    if cross_path.is_none() {
        println!();
    }
    crossings.emit(cross_path.as_deref())?;
    Ok(0)
}

fn family_spec(opts: &FamilyOpts, cfg: &ConfigFile) -> Result<FamilySpec, CliError> {
    let (base, d) = system(&opts.system, cfg)?;
    let (lo, hi, step) = range(&opts.range, cfg, &d)?;
    let reference = resolve(opts.omega0_ref, cfg, "omega0-ref", d.omega0_ref)?;
    let mut spec = FamilySpec::range(base, lo, hi, step, reference)?;
    spec.grid_points = resolve(opts.grid_points, cfg, "grid-points", spec.grid_points)?;
    spec.rescale = resolve(opts.rescale, cfg, "rescale", RescaleConvention::default())?;
    Ok(spec)
}

fn describe_family(t: &mut CsvTable, spec: &FamilySpec) {
    describe(t, &spec.base);
    t.comment("omega0_ref", fmt_f64(spec.reference_omega0));
    t.comment(
        "omega0_sweep",
        format!(
            "{}..{} ({} values)",
            fmt_f64(spec.omega0_values[0]),
            fmt_f64(*spec.omega0_values.last().expect("non-empty sweep")),
            spec.omega0_values.len()
        ),
    );
    t.comment("grid_points", spec.grid_points);
    t.comment("angular_points", spec.angular_points);
}

pub fn cmd_sweep(args: &SweepArgs, cfg: &ConfigFile) -> Result<i32, CliError> {
    let spec = family_spec(&args.family, cfg)?;
    let result = run_family(&spec)?;
    let mut t = CsvTable::new(vec![
        "omega0",
        "m",
        "energy",
        "d_psi",
        "d_rho",
        "d_jp",
        "d_jp_rescaled",
        "theta_rad",
        "branch",
        "status",
    ]);
    describe_family(&mut t, &spec);
    t.comment("m_ref", result.m_ref);
    t.comment("rescale", spec.rescale);
    t.comment("d_psi", "sqrt(2N - 2|<psi1|psi2>|), N = 2");
    t.comment("d_rho", "integral |rho1 - rho2| d2r");
    t.comment("d_jp", "integral |[r x (j1 - j2)]_z| d2r");
    t.comment("theta_rad", "law-of-cosines angle from d_jp on shells |m_ref|, |m|");
    t.comment("current_convention", SIGN_CONVENTION);
    let mut failed = 0;
    for r in &result.records {
        if !r.status.is_ok() {
            failed += 1;
        }
        t.rows.push(vec![
            fmt_f64(r.omega0),
            r.m.to_string(),
            fmt_f64(r.energy),
            fmt_f64(r.d_psi),
            fmt_f64(r.d_rho),
            fmt_f64(r.d_jp),
            fmt_f64(r.d_jp_rescaled),
            fmt_opt(r.theta),
            r.branch.to_string(),
            sanitize(&r.status.to_string()),
        ]);
    }
    t.emit(resolve_opt(args.out.clone(), cfg, "out")?.as_deref())?;
    if failed > 0 {
        eprintln!("{failed} sweep point(s) failed; see the status column");
        return Ok(1);
    }
    Ok(0)
}

pub fn cmd_bands(args: &BandsArgs, cfg: &ConfigFile) -> Result<i32, CliError> {
    let spec = family_spec(&args.family, cfg)?;
    let d = defaults_for(spec.base.kind);
    let m_min = resolve(args.m_min, cfg, "m-min", d.m_min)?;
    let m_max = resolve(args.m_max, cfg, "m-max", d.m_max)?;
    if m_min > m_max {
        return Err(CliError::Usage(format!("empty m range {m_min}..{m_max}")));
    }
    let analysis = band_analysis(&spec, m_min..=m_max)?;
    let mut t = CsvTable::new(vec!["m", "omega0_lo", "omega0_hi", "theta_min", "theta_max", "delta_theta"]);
    describe_family(&mut t, &spec);
    t.comment("m_ref", analysis.m_ref);
    t.comment("m_span", format!("{m_min}..{m_max}"));
    for w in &analysis.warnings {
        eprintln!("warning: {w}");
        t.comment("skipped", sanitize(w));
    }
    for b in &analysis.bands {
        t.rows.push(vec![
            b.m.to_string(),
            fmt_f64(b.omega0_lo),
            fmt_f64(b.omega0_hi),
            fmt_f64(b.theta_min),
            fmt_f64(b.theta_max),
            fmt_f64(b.delta_theta),
        ]);
    }
    let out = resolve_opt(args.out.clone(), cfg, "out")?;
    t.emit(out.as_deref())?;
    if let Some(script) = resolve_opt(args.plot_script.clone(), cfg, "plot-script")? {
        let data = out
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "bands.csv".to_string());
        std::fs::write(&script, plot_script(&data, analysis.m_ref))?;
    }
    Ok(0)
}

/// Plots θ_min..θ_max per shell as error bars against |m|.
fn plot_script(data: &str, m_ref: i32) -> String {
    format!(
        "# gnuplot script for the band table\n\
         set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key off\n\
         set xlabel '|m|'\n\
         set ylabel 'theta (rad)'\n\
         set title 'current bands relative to m_ref = {m_ref}'\n\
         plot '{data}' every ::1 using (abs($1)):(($4+$5)/2):4:5 with yerrorbars pt 7\n"
    )
}
