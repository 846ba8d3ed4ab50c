//! Acceptance criteria 1–11, one pass/fail line each. Runs as a plain binary
//! (no libtest harness) and exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use onion_cli::check::{self, Families, AXIOM_TRIPLES, BOUND_SLACK};
use onion_core::qm_metrics::triangle_bound;

const SEED: u64 = 20_240_917;
const MINUTE: u64 = 60;

struct Sweep {
    m_ref: i32,
    rows: Vec<(f64, i32, f64, f64)>, // omega0, m, d_psi, d_jp
}

fn parse_sweep(text: &str) -> Result<Sweep, String> {
    let mut m_ref = None;
    let mut lines = text.lines().filter(|l| {
        if let Some(v) = l.strip_prefix("# m_ref = ") {
            m_ref = v.trim().parse().ok();
        }
        !l.starts_with('#')
    });
    let header: Vec<&str> = lines.next().ok_or("empty sweep")?.split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).ok_or(format!("no column {name}"));
    let (c_w, c_m, c_psi, c_jp, c_st) = (col("omega0")?, col("m")?, col("d_psi")?, col("d_jp")?, col("status")?);
    let mut rows = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f[c_st] != "ok" {
            return Err(format!("failed row: {line}"));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|e| format!("{}: {e}", f[i]));
        rows.push((num(c_w)?, f[c_m].parse().map_err(|e| format!("{e}"))?, num(c_psi)?, num(c_jp)?));
    }
    Ok(Sweep {
        m_ref: m_ref.ok_or("no m_ref comment")?,
        rows,
    })
}

fn run_sweep(system: &str, threads: usize, out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_onion"))
        .args(["--threads", &threads.to_string(), "sweep", "--system", system, "--out"])
        .arg(out)
        .env_remove("ONION_THREADS")
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("sweep --system {system} --threads {threads} exited with {status}"));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

struct Report {
    failures: usize,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, budget: Duration, elapsed: Duration, outcome: Result<String, String>) {
        let outcome = match outcome {
            Ok(d) if elapsed > budget => Err(format!("over budget {}s: {d}", budget.as_secs())),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            self.failures += 1;
        }
        println!("[{tag}] AC-{id} {name} ({:.1}s): {detail}", elapsed.as_secs_f64());
    }

    fn run(&mut self, id: u32, name: &str, budget_s: u64, f: impl FnOnce() -> Result<String, String>) {
        let start = Instant::now();
        let outcome = f();
        self.record(id, name, Duration::from_secs(budget_s), start.elapsed(), outcome);
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut report = Report { failures: 0 };

    let start = Instant::now();
    let fams = Families::compute(1.0);
    let family_time = start.elapsed();
    report.record(1, "conservation", Duration::from_secs(5 * MINUTE), family_time, check::conservation(&fams));
    report.run(2, "shell radii", MINUTE, || check::shell_radii(&fams));
    report.run(3, "metric axioms", MINUTE, || check::metric_axioms(&fams, SEED, AXIOM_TRIPLES));
    report.run(4, "solver oracles", MINUTE, check::solver_oracles);
    report.run(5, "reference states", MINUTE, check::reference_states);
    report.run(6, "level crossings", MINUTE, || check::crossings(&fams));

    // Sweep CSVs from the binary, reused by criteria 7, 10 and 11.
    let start = Instant::now();
    let csv = ["isi", "hooke"].map(|system| {
        let a = run_sweep(system, 1, &dir.path().join(format!("{system}_t1.csv")))?;
        let text = String::from_utf8(a.clone()).map_err(|e| e.to_string())?;
        Ok::<_, String>((system, a, parse_sweep(&text)?))
    });
    let sweep_time = start.elapsed();

    report.run(7, "psi gap", MINUTE, || {
        let mut detail = vec![check::psi_gap(&fams)?];
        for entry in &csv {
            let (system, _, sweep) = entry.as_ref().map_err(Clone::clone)?;
            let v = check::psi_gap_violations(sweep.rows.iter().map(|r| (r.1, r.2)), sweep.m_ref);
            if !v.is_empty() {
                return Err(format!("{system} CSV: {}", v.join("; ")));
            }
            detail.push(format!("{system} CSV {} rows clean", sweep.rows.len()));
        }
        Ok(detail.join("; "))
    });
    report.run(8, "band trends", 10 * MINUTE, || check::band_trends(1.0));
    report.run(9, "mapping diagnostics", MINUTE, || check::mapping(&fams));
    report.run(10, "current bound", MINUTE, || {
        let mut detail = vec![check::triangle(&fams)?];
        for entry in &csv {
            let (system, _, sweep) = entry.as_ref().map_err(Clone::clone)?;
            for &(w, m, _, d) in &sweep.rows {
                if d > triangle_bound(m, sweep.m_ref) + BOUND_SLACK {
                    return Err(format!("{system} CSV ω₀={w}: d_jp {d} > |{m}| + |{}|", sweep.m_ref));
                }
            }
            detail.push(format!("{system} CSV rows within bound"));
        }
        Ok(detail.join("; "))
    });

    let start = Instant::now();
    let determinism = (|| {
        let mut detail = Vec::new();
        for entry in &csv {
            let (system, one, _) = entry.as_ref().map_err(Clone::clone)?;
            let eight = run_sweep(system, 8, &dir.path().join(format!("{system}_t8.csv")))?;
            if *one != eight {
                return Err(format!("{system} sweep differs between 1 and 8 threads"));
            }
            detail.push(format!("{system} {} bytes identical", one.len()));
        }
        Ok(detail.join(", "))
    })();
    report.record(11, "determinism", Duration::from_secs(10 * MINUTE), start.elapsed() + sweep_time, determinism);

    if report.failures > 0 {
        println!("{} of 11 criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("all 11 criteria passed");
}
