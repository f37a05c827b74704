//! `jacobi-sums`: batch runner for the experiments in `jacobi-hyperbolic`.
//!
//! Exit status: 0 when every guard passes, 1 when a guard fails, 2 for an
//! invalid configuration, 3 for a numeric failure, 4 for I/O errors. Errors
//! are reported on stderr as a single JSON line `{"error": kind, "message": …}`.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use jacobi_hyperbolic::Error;
use serde_json::json;

use config::{Cli, Command};

const EXIT_GUARD: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

fn fail(kind: &str, message: impl std::fmt::Display, code: u8) -> ExitCode {
    let line = json!({ "error": kind, "message": message.to_string().replace('\n', " ") });
    eprintln!("{line}");
    ExitCode::from(code)
}

fn t_floors(cmd: &Command) -> Vec<u64> {
    let ts: Vec<f64> = match cmd {
        Command::Sum(a) => vec![a.t],
        Command::CoverCheck(a) => vec![a.t],
        Command::Asymptotic(a) => vec![a.t],
        Command::PerronScan(a) => vec![a.t],
        Command::LowerBound(a) => vec![a.t],
        Command::CancellationScan(a) => a.t.clone(),
        Command::Meanvalue(_) => vec![],
    };
    ts.into_iter().map(|t| t.max(0.0).floor() as u64).collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            return fail("invalid_config", first, EXIT_CONFIG);
        }
    };

    if let Some(n) = cli.common.threads {
        if n == 0 {
            return fail("invalid_config", "--threads must be positive", EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return fail("invalid_config", e, EXIT_CONFIG);
        }
    }

    let start = Instant::now();
    let outcome = match commands::run(&cli.command, &cli.common) {
        Ok(o) => o,
        Err(e @ (Error::InvalidArgument(_) | Error::Format(_) | Error::Resource(_))) => {
            return fail("invalid_config", e, EXIT_CONFIG)
        }
        Err(e @ Error::Numeric { .. }) => return fail("numeric", e, EXIT_NUMERIC),
        Err(e @ Error::Io(_)) => return fail("io", e, EXIT_IO),
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let body = match output::render(&outcome.json, &outcome.rows, cli.common.format) {
        Ok(b) => b,
        Err(e) => return fail("io", e, EXIT_IO),
    };
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> std::io::Result<()> {
        match &cli.common.output {
            Some(path) => {
                output::write_atomic(path, &body)?;
                written.push(path.clone());
            }
            None => std::io::stdout().write_all(&body)?,
        }
        for (path, contents) in &outcome.extra_files {
            output::write_atomic(path, contents.as_bytes())?;
            written.push(path.clone());
        }
        Ok(())
    })();
    if let Err(e) = result {
        return fail("io", e, EXIT_IO);
    }

    let all_passed = outcome.guards.iter().all(|g| g.passed);
    if let Some(path) = &cli.common.output {
        let guards: serde_json::Map<String, serde_json::Value> = outcome
            .guards
            .iter()
            .map(|g| (g.name.to_string(), json!(g.passed)))
            .collect();
        let manifest = json!({
            "tool": "jacobi-sums",
            "version": env!("CARGO_PKG_VERSION"),
            "config": &cli,
            "T_floor": t_floors(&cli.command),
            "threads": rayon::current_num_threads(),
            "wall_time_ms": wall_ms,
            "guards": guards,
            "outputs": written,
        });
        let mut manifest_path = path.clone().into_os_string();
        manifest_path.push(".manifest.json");
        let bytes = serde_json::to_vec_pretty(&manifest).expect("plain data");
        if let Err(e) = output::write_atomic(&PathBuf::from(manifest_path), &bytes) {
            return fail("io", e, EXIT_IO);
        }
    }

    if all_passed {
        ExitCode::SUCCESS
    } else {
        for g in outcome.guards.iter().filter(|g| !g.passed) {
            eprintln!("{}", json!({ "guard_failed": g.name }));
        }
        ExitCode::from(EXIT_GUARD)
    }
}
