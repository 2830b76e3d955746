//! `gpwz`: modulation tables, asymptotic profiles, boundary-value solves,
//! phase fits and invariant checks.

mod args;
mod commands;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;

use args::Command;
use commands::{Failure, Manifest, EXIT_USAGE};

const THREADS_VAR: &str = "GPWZ_THREADS";

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn write_manifest(m: &Manifest, seconds: f64, failure: Option<&Failure>) -> Result<(), Failure> {
    let Some(path) = &m.path else {
        return Ok(());
    };
    let mut text = serde_json::to_string_pretty(&m.to_json(seconds, failure))
        .map_err(|e| Failure::usage(e.to_string()))?;
    text.push('\n');
    gpwz_core::io::write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match args::parse(std::env::args_os().collect()) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }

    let start = Instant::now();
    let (mut manifest, outcome) = match &cli.command {
        Command::Modulation(a) => {
            let mut m = Manifest::new("modulation");
            let r = commands::modulation(a, &mut m);
            (m, r)
        }
        Command::Asymptotic(a) => {
            let mut m = Manifest::new("asymptotic");
            let r = commands::asymptotic(a, &mut m);
            (m, r)
        }
        Command::Bvp(a) => {
            let mut m = Manifest::new("bvp");
            let r = commands::bvp(a, &mut m);
            (m, r)
        }
        Command::Fit(a) => {
            let mut m = Manifest::new("fit");
            let r = commands::fit(a, &mut m);
            (m, r)
        }
        Command::Check(a) => {
            let mut m = Manifest::new("check");
            let r = commands::check(a, &mut m);
            (m, r)
        }
    };
    if let Some(cfg) = &cli.config {
        manifest
            .parameters
            .insert("config".into(), cfg.display().to_string().into());
    }
    let seconds = start.elapsed().as_secs_f64();

    match outcome {
        Ok(()) => match write_manifest(&manifest, seconds, None) {
            Ok(()) => ExitCode::SUCCESS,
            Err(f) => {
                eprintln!("error: {}", f.message);
                ExitCode::from(f.code)
            }
        },
        Err(f) => {
            eprintln!("error: {}", f.message);
            // usage errors leave no record; solver and gate failures do
            if f.code != EXIT_USAGE {
                if let Err(e) = write_manifest(&manifest, seconds, Some(&f)) {
                    eprintln!("error: {}", e.message);
                }
            }
            ExitCode::from(f.code)
        }
    }
}
