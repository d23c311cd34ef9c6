use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nsbox::experiments::{emit_report, num, run_audit, run_study, Report, StudyConfig, StudyKind};
use nsbox::Error;

/// Navier-Stokes on expanding periodic boxes: convergence, tail and transfer studies.
#[derive(Parser)]
#[command(name = "nsbox", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Periodic curl inversion on each box against the reference box.
    Inversion(StudyArgs),
    /// Box solutions against the reference-box solution in time-integrated norms.
    Solution(StudyArgs),
    /// Both sides of the tail estimate along a solution.
    Tail(StudyArgs),
    /// Bounded-norm sweep over boxes up to a multiple of the guaranteed time.
    Transfer(StudyArgs),
    /// Inequality ratios and curl identity of a stored snapshot.
    Audit(AuditArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// Study configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent boxes.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Reserved; every generator is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AuditArgs {
    /// Snapshot path (`.bin`, `.meta` or the common stem).
    snapshot: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn exit_for(e: &Error) -> ExitCode {
    if e.is_config() || matches!(e, Error::Io { .. }) {
        ExitCode::from(EXIT_CONFIG)
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn summarize(report: &Report, dir: &Path) -> ExitCode {
    for c in &report.checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("{mark} {}: {} (threshold {}) {}", c.name, num(c.value), num(c.threshold), c.detail);
    }
    for n in &report.notes {
        eprintln!("{n}");
    }
    println!("report written to {}", dir.display());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn study(kind: StudyKind, args: StudyArgs) -> ExitCode {
    let cfg = match StudyConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    if cfg.kind != kind {
        eprintln!(
            "error: {} describes a {} study, not {}",
            args.config.display(),
            cfg.kind.name(),
            kind.name()
        );
        return ExitCode::from(EXIT_CONFIG);
    }
    let dir = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("out/{}", kind.name())));
    let result = run_study(&cfg, args.threads.max(1))
        .and_then(|r| emit_report(&r, Some(&cfg), &dir, args.seed).map(|_| r));
    match result {
        Ok(report) => summarize(&report, &dir),
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Inversion(a) => study(StudyKind::Inversion, a),
        Command::Solution(a) => study(StudyKind::Solution, a),
        Command::Tail(a) => study(StudyKind::Tail, a),
        Command::Transfer(a) => study(StudyKind::Transfer, a),
        Command::Audit(a) => {
            let dir = a.out.unwrap_or_else(|| PathBuf::from("out/audit"));
            match run_audit(&a.snapshot).and_then(|r| emit_report(&r, None, &dir, None).map(|_| r)) {
                Ok(report) => summarize(&report, &dir),
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_for(&e)
                }
            }
        }
    }
}
