use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use decentprox::harness::{
    self, exit_code, run_suite, sweep, write_sweep, CheckLine, ExperimentConfig, RawConfig, Suite, SweepKey,
};
use decentprox::{Error, Exec};

#[derive(Parser)]
#[command(name = "decentprox", version, about = "Accelerated decentralized proximal method over simulated networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; writes trace.csv and summary.txt to output.dir.
    Run { config: PathBuf },
    /// One run per value of a parameter; writes sweep.csv to output.dir.
    Sweep {
        config: PathBuf,
        /// condition_target | chi_via_topology | epsilon | T
        #[arg(long)]
        key: SweepKey,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Run a fixed-seed property suite: lemma1 | lemma3 | consensus | prox | all.
    Check { suite: Suite },
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(err) as u8)
}

fn main() -> ExitCode {
    // usage errors share the invalid-config exit code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(harness::EXIT_CONFIG as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run { config } => match harness::run_config_file(&config) {
            Ok(outcome) => {
                print!("{}", outcome.summary());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Sweep { config, key, values } => {
            let result = (|| {
                let raw = RawConfig::load(&config)?;
                let base = ExperimentConfig::from_raw(&raw)?;
                let rows = sweep(&raw, key, &values, Exec::default())?;
                let dir = &base.output.dir;
                fs::create_dir_all(dir).map_err(|e| Error::Io {
                    path: dir.clone(),
                    source: e,
                })?;
                let path = dir.join("sweep.csv");
                let file = fs::File::create(&path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                write_sweep(&rows, BufWriter::new(file)).map_err(|e| Error::Io { path, source: e })?;
                Ok(rows)
            })();
            match result {
                Ok(rows) => {
                    for r in rows.iter().filter(|r| r.error.is_some()) {
                        eprintln!("{key} = {}: {}", r.value, r.error.as_deref().unwrap_or(""));
                    }
                    let mut out = Vec::new();
                    write_sweep(&rows, &mut out).expect("writing to memory");
                    print!("{}", String::from_utf8_lossy(&out));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Check { suite } => match run_suite(suite, Exec::default()) {
            Ok(lines) => {
                println!("check_name,n_or_draw,margin,pass");
                for l in &lines {
                    println!("{l}");
                }
                if lines.iter().all(CheckLine::pass) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(harness::EXIT_CONFIG as u8)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(harness::EXIT_CONFIG as u8)
            }
        },
    }
}
