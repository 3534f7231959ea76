use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rwre_cli::{execute, presets, CliError, ExperimentConfig, Outcome};

/// Random walks in random environments: experiments and reproduction presets.
#[derive(Parser)]
#[command(name = "rwre", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Continue from a partial.json left by an exhausted step budget.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Worker threads (default: config, then RWRE_THREADS, then all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (default: results/<scenario>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named preset.
    Preset {
        /// Preset name; see --list.
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        #[arg(long)]
        list: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset's config as TOML instead of running it.
        #[arg(long)]
        show: bool,
    },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
}

fn finish(outcome: Outcome) -> ExitCode {
    print!("{}", outcome.report.render_checks());
    println!("outputs in {} ({:.1} s)", outcome.out_dir.display(), outcome.wall_seconds);
    if outcome.report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<ExitCode, CliError> = (|| match cli.command {
        Command::Run { config, resume, threads, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            Ok(finish(execute(&cfg, threads, out.as_deref(), resume.as_deref())?))
        }
        Command::Preset { list: true, .. } => {
            for s in presets() {
                println!("{:<18} {}", s.name, s.about);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset { name, seed, threads, out, show, .. } => {
            let mut cfg = rwre_cli::preset(name.as_deref().unwrap_or_default())?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if show {
                print!("{}", cfg.to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            Ok(finish(execute(&cfg, threads, out.as_deref(), None)?))
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            cfg.check()?;
            println!("{}: ok (scenario {}, hash {})", config.display(), cfg.scenario, cfg.hash());
            Ok(ExitCode::SUCCESS)
        }
    })();
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}
