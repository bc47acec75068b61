use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eplp_cli::{decay_profile, preset, run_study, speedup_study, CliError, RunOptions, StudyConfig, StudyReport};
use eplp_core::mesh::{build_structured_mesh, refine_uniform, write_mesh_text};

#[derive(Parser)]
#[command(name = "eplp", version, about = "Two-grid local and parallel Stokes solver studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Study configuration file (key = value lines).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped configuration: problem1-h1, problem1-l2, problem2-th, problem2-mini.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the output path of the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Extends every local domain to the whole square.
    #[arg(long)]
    override_extension_full: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Runs every row of a study.
    Study {
        #[command(flatten)]
        source: Source,
        /// Prints ring energies of the correction for patch J instead.
        #[arg(long, value_name = "J")]
        decay_profile: Option<usize>,
    },
    /// Times the first row for several thread counts.
    Speedup {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        threads: Vec<usize>,
    },
    /// Writes a structured mesh, optionally refined.
    Mesh {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
}

fn load(source: &Source) -> Result<StudyConfig, CliError> {
    let mut cfg = match (&source.config, &source.preset) {
        (Some(path), _) => StudyConfig::parse(&std::fs::read_to_string(path)?)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(CliError::Config("pass --config <path> or --preset <name>".into())),
    };
    if let Some(out) = &source.output {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn emit(cfg: &StudyConfig, report: &StudyReport) -> Result<(), CliError> {
    let text = report.render(cfg.format)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Study { source, decay_profile: Some(j) } => {
            let cfg = load(&source)?;
            println!("ring,energy");
            for (k, e) in decay_profile(&cfg, j)?.iter().enumerate() {
                println!("{k},{e:.6e}");
            }
            Ok(true)
        }
        Command::Study { source, decay_profile: None } => {
            let cfg = load(&source)?;
            let opts = RunOptions { override_extension_full: source.override_extension_full };
            let report = run_study(&cfg, &opts)?;
            emit(&cfg, &report)?;
            for r in report.rows.iter().filter(|r| r.failed()) {
                eprintln!("row H={} h={} ({}) failed: {}", r.coarse_h, r.fine_h, r.method, r.failure.as_deref().unwrap_or(""));
            }
            Ok(!report.any_failed())
        }
        Command::Speedup { source, threads } => {
            let cfg = load(&source)?;
            let opts = RunOptions { override_extension_full: source.override_extension_full };
            let report = speedup_study(&cfg, &threads, &opts)?;
            emit(&cfg, &report)?;
            Ok(true)
        }
        Command::Mesh { n, m } => {
            let coarse = build_structured_mesh::<f64>(n)?;
            let mesh = if m > 1 { refine_uniform(&coarse, m)? } else { coarse };
            print!("{}", write_mesh_text(&mesh));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
