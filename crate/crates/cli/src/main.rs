use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lfu_cli::cache::{self, SieveOutcome};
use lfu_cli::config::parse_u64;
use lfu_cli::experiments::EXPERIMENTS;
use lfu_cli::{run_file, CliResult, RunOptions};

#[derive(Parser)]
#[command(name = "lfu", version, about = "Liouville local Fourier uniformity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn integer(s: &str) -> Result<u64, String> {
    parse_u64(s).ok_or_else(|| format!("{s:?} is not a nonnegative integer"))
}

#[derive(Subcommand)]
enum Command {
    /// Build or reuse the cached λ table.
    Sieve {
        /// Largest n in the table (`10^7`, `1e7` and `10_000_000` all work).
        #[arg(long, value_parser = integer)]
        limit: u64,
        /// Cache directory; overrides LFU_CACHE_DIR.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Rebuild even when a valid cache is large enough.
        #[arg(long)]
        force: bool,
        /// Refuse limits above this value.
        #[arg(long, value_parser = integer, default_value = "2^40")]
        cap: u64,
    },
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Write the manifest and stop.
        #[arg(long)]
        dry_run: bool,
        /// Worker threads; overrides the `workers` key.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory; overrides the `output` key.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// List the available experiments.
    List,
    /// Check the cached table against its checksum.
    VerifyCache {
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sieve {
            limit,
            cache_dir,
            force,
            cap,
        } => {
            let dir = cache::cache_dir(cache_dir.as_deref());
            match cache::sieve(&dir, limit, cap, force)? {
                SieveOutcome::Reused(info) => println!(
                    "reused {} (n <= {}, sha256 {})",
                    info.path.display(),
                    info.limit,
                    info.sha256
                ),
                SieveOutcome::Written(info) => println!(
                    "wrote {} (n <= {}, {} bytes, sha256 {})",
                    info.path.display(),
                    info.limit,
                    info.bytes,
                    info.sha256
                ),
            }
        }
        Command::Run {
            config,
            dry_run,
            workers,
            out,
            cache_dir,
        } => {
            let options = RunOptions {
                dry_run,
                workers,
                out,
                cache_dir: cache::cache_dir(cache_dir.as_deref()),
            };
            let manifest = run_file(&config, &options)?;
            println!("{} {}", manifest.status.name(), manifest.path.display());
            for o in &manifest.outputs {
                println!("  {}  {}", o.sha256, o.file);
            }
        }
        Command::List => {
            for e in EXPERIMENTS {
                println!("{:<14} {}", e.name, e.description);
            }
        }
        Command::VerifyCache { cache_dir } => {
            let dir = cache::cache_dir(cache_dir.as_deref());
            let (_, info) = cache::load(&dir)?;
            println!(
                "ok {} (n <= {}, sha256 {})",
                info.path.display(),
                info.limit,
                info.sha256
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lfu: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
