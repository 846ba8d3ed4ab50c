use std::process::ExitCode;

use clap::Parser;
use onion_cli::args::{Cli, Command};
use onion_cli::check::{run_all, CheckOptions};
use onion_cli::commands::{cmd_bands, cmd_phase, cmd_solve, cmd_sweep};
use onion_cli::config::{resolve, resolve_opt, ConfigFile};
use onion_cli::CliError;

fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(n) = resolve_opt(cli.threads, &cfg, "threads")? {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Compute(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, &cfg),
        Command::Phase(a) => cmd_phase(a, &cfg),
        Command::Sweep(a) => cmd_sweep(a, &cfg),
        Command::Bands(a) => cmd_bands(a, &cfg),
        Command::Check(a) => {
            let defaults = CheckOptions::default();
            let opts = CheckOptions {
                quick: a.quick || resolve(None, &cfg, "quick", false)?,
                inject_norm_error: resolve_opt(a.inject_norm_error, &cfg, "inject-norm-error")?,
                seed: resolve(a.seed, &cfg, "seed", defaults.seed)?,
                mc_samples: resolve(a.mc_samples, &cfg, "mc-samples", defaults.mc_samples)?,
            };
            let outcomes = run_all(&opts, |o| {
                println!("{}", serde_json::to_string(o).expect("plain struct serializes"));
            });
            let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.suite).collect();
            let summary = serde_json::json!({
                "summary": if failed.is_empty() { "pass" } else { "fail" },
                "suites": outcomes.len(),
                "failed": failed,
            });
            println!("{summary}");
            Ok(if failed.is_empty() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("onion: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
