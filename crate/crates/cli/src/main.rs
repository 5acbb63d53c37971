use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfbs::format;
use mfbs::manifest::ExperimentKind;
use mfbs::runner::{self, RunOptions};

#[derive(Parser)]
#[command(name = "mfbs", version, about = "Numerical experiments on multifractional Brownian sheets")]
struct Cli {
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true, env = "MFBS_THREADS")]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Artifact directory; overrides the manifest's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the manifest's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the header and payload statistics of a field file, or a CSV summary.
    Inspect { file: PathBuf },
    /// List the experiment kinds a manifest can name.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::Run { manifest, out, seed } => {
            let opts = RunOptions { out, seed, verbose: cli.verbose };
            match runner::run_file(&manifest, &opts) {
                Ok(s) => {
                    println!("{} finished: {} files in {}", s.experiment.name(), s.files.len(), s.out.display());
                    ExitCode::SUCCESS
                }
                Err(f) => {
                    eprintln!("error: {}", f.error);
                    ExitCode::from(f.exit_code() as u8)
                }
            }
        }
        Command::Inspect { file } => match format::inspect(&file) {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<16} {}", k.name(), k.summary());
            }
            ExitCode::SUCCESS
        }
    }
}
