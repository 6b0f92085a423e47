use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vvlab::harness::{
    emit_report, fit_csv_rows, fit_rate, lemma_audits, read_sweep_csv, run_sweep, verdict, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "vvlab", version, about = "Vanishing-viscosity experiments on the periodic box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a viscosity sweep and write the report files.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate one family of inequality audits and print it as JSON.
    Audit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        lemma: String,
    },
    /// Fit the error rate of an existing sweep.csv.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> vvlab::Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let sweep = run_sweep(&config)?;
            let fit = fit_rate(&sweep)?;
            for path in emit_report(&sweep, &fit, &config.output_dir)? {
                println!("wrote {}", path.display());
            }
            println!(
                "slope {:.4} (minimum {:.4}), residual rms {:.3e}",
                fit.slope,
                config.min_slope(),
                fit.residual_rms
            );
            println!(
                "short-time guard: T * sup|omega0| = {:.4} (limit 2)",
                config.t_end * config.omega_sup_target
            );
            let v = verdict(&sweep, &fit, &config);
            for name in &v.failed_audits {
                println!("FAILED audit {name}");
            }
            for n in &v.failed_records {
                println!("FAILED run n={n}");
            }
            Ok(v.passed())
        }
        Command::Audit { config, lemma } => {
            let config = ExperimentConfig::load(&config)?;
            let audits = lemma_audits(&config, &lemma)?;
            println!("{}", serde_json::to_string_pretty(&audits).expect("audits serialize"));
            Ok(audits.iter().all(|a| a.pass))
        }
        Command::Fit { input } => {
            let fit = fit_csv_rows(&read_sweep_csv(&input)?)?;
            let json = serde_json::json!({
                "slope": fit.slope,
                "intercept": fit.intercept,
                "residual_rms": fit.residual_rms,
            });
            println!("{}", serde_json::to_string_pretty(&json).expect("fit serializes"));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
