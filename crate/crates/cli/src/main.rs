mod commands;
mod config;
mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use render::Format;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VIOLATION: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "loopspec", version, about = "Ground states of curvature Schrödinger operators on closed loops")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Write the output to a file (probe: append JSON lines) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// File of key=value lines mirroring command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lowest eigenvalue of -d²/ds² + κ² for a curve file or family member.
    E0(E0Args),
    /// Kernel-weighted integrals and the identity α²I₁ = β²I₂.
    Identity(Axes),
    /// Coercivity matrix D and its lowest eigenvalue η at an ellipse.
    Eta(EtaArgs),
    /// Small-β behaviour of I₁, I₂, I₃ at α = 1.
    Asymptotics(AsymptoticsArgs),
    /// Constrained spectrum of the reduced form at a collapsed orbit.
    Collapsed(CollapsedArgs),
    /// Direct quadrature against the first- or second-order expansion lemmas.
    Lemma4(Lemma4Args),
    /// Exact and numerical spectra of -d² + g sec² with Dirichlet conditions.
    Gegenbauer(GegenbauerArgs),
    /// Seeded searches for loops with e0 < 1.
    Probe(ProbeArgs),
    /// e0 along a path leaving a family member in a given direction.
    Theorem1(Theorem1Args),
}

#[derive(Args, Debug)]
struct E0Args {
    /// Curve file (.json coefficients or .csv samples).
    #[arg(long, conflicts_with = "family", required_unless_present = "family")]
    curve: Option<PathBuf>,
    /// Family member "alpha,beta".
    #[arg(long, value_parser = commands::parse_pair)]
    family: Option<(f64, f64)>,
    /// Band limit for the evaluation grid.
    #[arg(long)]
    modes: Option<usize>,
}

#[derive(Args, Debug)]
struct Axes {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
}

#[derive(Args, Debug)]
struct EtaArgs {
    #[command(flatten)]
    axes: Axes,
    /// Fourier mode cutoff (default chosen from the axes).
    #[arg(long)]
    modes: Option<usize>,
}

#[derive(Args, Debug)]
struct AsymptoticsArgs {
    #[arg(long, value_parser = commands::parse_list, default_value = "0.1,0.05,0.025")]
    betas: commands::FloatList,
}

#[derive(Args, Debug)]
struct CollapsedArgs {
    #[command(flatten)]
    axes: Axes,
    #[arg(long, default_value_t = 3)]
    neigs: usize,
    /// Sine modes per interval.
    #[arg(long, default_value_t = loopspec::collapsed::DEFAULT_BASIS)]
    basis: usize,
}

#[derive(Args, Debug)]
struct Lemma4Args {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: u8,
    #[arg(long, value_parser = commands::parse_list, allow_hyphen_values = true, default_value = "1e-2,1e-3,1e-4,-1e-2,-1e-3,-1e-4")]
    mus: commands::FloatList,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
    /// Index 1..=5 of a built-in direction; all five by default.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    direction: Option<u8>,
}

#[derive(Args, Debug)]
struct GegenbauerArgs {
    #[arg(long, allow_negative_numbers = true)]
    g: f64,
    #[arg(long)]
    nmax: usize,
    /// Galerkin basis sizes for the extrapolated numerical values.
    #[arg(long, value_parser = commands::parse_usize_list, default_value = "200,400,800")]
    basis: commands::UsizeList,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    /// Seeds as a comma list or half-open range "a..b".
    #[arg(long, value_parser = commands::parse_seeds)]
    seeds: commands::SeedList,
    #[arg(long, default_value_t = 6)]
    modes: usize,
    #[arg(long, default_value_t = 0.2)]
    amplitude: f64,
    #[arg(long, default_value_t = 5000)]
    max_evals: usize,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 0.05)]
    initial_step: f64,
    #[arg(long, default_value_t = 1e-5)]
    min_step: f64,
}

#[derive(Args, Debug)]
struct Theorem1Args {
    #[command(flatten)]
    axes: Axes,
    /// "family", "out-of-plane" or "random:SEED".
    #[arg(long, default_value = "out-of-plane")]
    direction: String,
    #[arg(long, value_parser = commands::parse_list, allow_hyphen_values = true, default_value = "-0.04,-0.02,-0.01,-0.005,0.005,0.01,0.02,0.04")]
    mus: commands::FloatList,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::expand(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = commands::dispatch(cli.command);
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL });
        }
    };
    let text = render::render(&outcome.value, cli.format);
    let written = match (&cli.out, &outcome.json_lines) {
        (Some(path), Some(lines)) => std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .and_then(|mut f| f.write_all(lines.as_bytes()))
            .and_then(|_| std::io::stdout().write_all(text.as_bytes())),
        (Some(path), None) => std::fs::write(path, &text),
        (None, _) => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    if outcome.violation {
        eprintln!("conjecture violation: a probe reported e0 below 1; see the JSON record for replay data");
        return ExitCode::from(EXIT_VIOLATION);
    }
    ExitCode::SUCCESS
}
