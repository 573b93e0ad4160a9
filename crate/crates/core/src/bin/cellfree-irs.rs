use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cellfree_irs::exp::{execute, prepare, summarize_file, RunOptions};
use cellfree_irs::Error;

#[derive(Parser)]
#[command(name = "cellfree-irs", version, about = "Monte-Carlo sweeps for IRS-assisted cell-free MIMO beamforming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a JSON spec and write results.csv.
    Run {
        spec: PathBuf,
        /// Output directory, overriding the spec's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Master seed, overriding the spec's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Record per-row wall-clock times in results.csv.
        #[arg(long)]
        wall_time: bool,
    },
    /// Per (value, scheme) mean and standard error of a results.csv.
    Summarize {
        results: PathBuf,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const CONFIG_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

fn fail(code: u8, err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { spec, out, threads, seed, wall_time } => {
            let options = RunOptions { out_dir: out, threads, master_seed: seed, wall_time };
            let plan = match prepare(&spec, options) {
                Ok(plan) => plan,
                Err(e) => return fail(CONFIG_ERROR, &e),
            };
            log::info!("running {} rows into {}", plan.n_rows(), plan.out_dir().display());
            match execute(&plan) {
                Ok(report) => {
                    println!("wrote {} rows to {}", report.rows.len(), report.results_csv.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(RUNTIME_ERROR, &e),
            }
        }
        Command::Summarize { results, out } => {
            let text = match summarize_file(&results) {
                Ok(text) => text,
                Err(e @ Error::Io(_)) => return fail(CONFIG_ERROR, &Error::Config(format!("{}: {e}", results.display()))),
                Err(e) => return fail(CONFIG_ERROR, &e),
            };
            match out {
                Some(path) => match std::fs::write(&path, text) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(RUNTIME_ERROR, &Error::Io(e)),
                },
                None => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
            }
        }
    }
}
