mod args;
mod commands;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::Cli;
use output::{emit, manifest_path, Manifest};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(p) = cli.command.params() {
        if p.a1 > p.a0 {
            Cli::command()
                .error(
                    ErrorKind::ArgumentConflict,
                    format!("need a0 >= a1 >= 1, got a0 = {}, a1 = {}", p.a0, p.a1),
                )
                .exit();
        }
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            Cli::command()
                .error(ErrorKind::InvalidValue, "thread count must be positive")
                .exit();
        }
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let start = Instant::now();
    let out = cli.command.output().out.as_deref();
    let (code, error, result) = match commands::run(&cli.command) {
        Ok(report) => match emit(out, &report.body) {
            Ok(()) => {
                if let Some(s) = &report.summary {
                    eprintln!("{s}");
                }
                (u8::from(!report.passed), None, report.extra)
            }
            Err(e) => {
                eprintln!("error: {e}");
                (1, Some(e.to_string()), serde_json::Value::Null)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            (e.exit_code(), Some(e.to_string()), serde_json::Value::Null)
        }
    };

    let manifest = Manifest {
        schema: 1,
        tool: "betaop",
        version: env!("CARGO_PKG_VERSION"),
        core_version: betaop_core::VERSION,
        command: cli.command.name(),
        parameters: cli.command.to_json(),
        threads: rayon::current_num_threads(),
        output: out,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        exit_code: code,
        error,
        result,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(manifest_path(path), text + "\n") {
                eprintln!("error: cannot write manifest: {e}");
                return ExitCode::from(code.max(1));
            }
        }
        None => eprintln!("{text}"),
    }
    ExitCode::from(code)
}
