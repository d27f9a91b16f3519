//! Command line driver.

pub mod config;
pub mod output;
pub mod run;

use clap::{Parser, Subcommand};

pub use config::{Experiment, ExperimentConfig, Overrides};
pub use run::run;

#[derive(Debug, Parser)]
#[command(name = "roughcorr", version, about = "Gaussian rough path experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample paths: paths.csv (t, x1..xd, path_id), optional lift.csv, manifest.json.
    Simulate(Overrides),
    /// Compare rough and Skorohod integrals: report.json and per-path paths.csv.
    VerifyCorrection(Overrides),
    /// Fit the decay of centered level-2 sums in n: rate.csv and rate.json.
    RateStudy(Overrides),
    /// Variation norms of the covariance: variation.csv.
    VariationReport(Overrides),
    /// Convergence of the step discretization of the integrand: dpi.csv.
    DpiConvergence(Overrides),
    /// Run the experiment named in a config file.
    Run(Overrides),
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (overrides, experiment) = match &cli.command {
        Command::Simulate(o) => (o, Some(Experiment::Simulate)),
        Command::VerifyCorrection(o) => (o, Some(Experiment::VerifyCorrection)),
        Command::RateStudy(o) => (o, Some(Experiment::RateStudy)),
        Command::VariationReport(o) => (o, Some(Experiment::VariationReport)),
        Command::DpiConvergence(o) => (o, Some(Experiment::DpiConvergence)),
        Command::Run(o) => (o, None),
    };
    let result = ExperimentConfig::resolve(overrides, experiment).and_then(|c| run(&c));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
