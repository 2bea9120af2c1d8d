//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::bag::DEFAULT_CONTIGUITY;
use crate::data::{
    generate_synthetic, load_dataset, load_model, load_spec, save_dataset, save_model, write_predictions,
    write_report, ReportRow,
};
use crate::error::{MilError, Result};
use crate::predict::{evaluate, PredictOptions, Predictor};
use crate::trunc::{QmcBudget, DEFAULT_ORTHANT};
use crate::vi::{fit, FitConfig};

#[derive(Debug, Parser)]
#[command(name = "gpmil", version, about = "Gaussian-process multiple-instance learning with spatial coupling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        lambda: f64,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write per-instance and per-bag probabilities.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        qmc: QmcArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a model against labelled data.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[command(flatten)]
        qmc: QmcArgs,
        #[arg(long)]
        report: PathBuf,
    },
    /// Train and score once per coupling strength.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        /// Evaluation data; defaults to the training data.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.5,1,5,10")]
        lambdas: Vec<f64>,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[command(flatten)]
        qmc: QmcArgs,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, default_value_t = 200)]
    inducing: usize,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = DEFAULT_CONTIGUITY)]
    contiguity: String,
}

impl FitArgs {
    fn config(&self, lambda: f64) -> FitConfig {
        FitConfig {
            lambda,
            inducing: self.inducing,
            iterations: self.iters,
            seed: self.seed,
            kernel: None,
            contiguity: self.contiguity.clone(),
        }
    }
}

#[derive(Debug, Args)]
struct QmcArgs {
    /// Lattice points per randomization for bag probabilities.
    #[arg(long, default_value_t = QmcBudget::default().points)]
    qmc_points: usize,
    #[arg(long, default_value_t = QmcBudget::default().shifts)]
    qmc_shifts: usize,
    #[arg(long, default_value = DEFAULT_ORTHANT)]
    orthant: String,
}

impl QmcArgs {
    fn options(&self) -> PredictOptions {
        PredictOptions {
            budget: QmcBudget { points: self.qmc_points, shifts: self.qmc_shifts },
            estimator: self.orthant.clone(),
            bag_level: true,
        }
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| crate::data::io_error("cli", path, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { spec, out } => save_dataset(&generate_synthetic(&load_spec(spec)?)?, out),
        Command::Train { data, lambda, fit: args, out } => {
            let dataset = load_dataset(data)?;
            save_model(&fit(&dataset, &args.config(lambda))?, out)
        }
        Command::Predict { model, data, qmc, out } => {
            let model = load_model(model)?;
            let dataset = load_dataset(data)?;
            let preds = Predictor::new(&model)?.predict_dataset(&dataset, &qmc.options())?;
            write_predictions(&dataset, &preds, create(&out)?)
        }
        Command::Eval { model, data, threshold, qmc, report } => {
            let model = load_model(model)?;
            let dataset = load_dataset(data)?;
            let metrics = evaluate(&model, &dataset, threshold, &qmc.options())?;
            let row = ReportRow { lambda: model.lambda, metrics, train_seconds: None };
            write_report(&[row], create(&report)?)
        }
        Command::Sweep { data, test, lambdas, fit: args, threshold, qmc, report } => {
            if lambdas.is_empty() {
                return Err(MilError::input("cli", "no λ values given"));
            }
            let train = load_dataset(data)?;
            let test = test.map(load_dataset).transpose()?;
            let eval_set = test.as_ref().unwrap_or(&train);
            let mut rows = Vec::with_capacity(lambdas.len());
            for lambda in lambdas {
                let start = Instant::now();
                let model = fit(&train, &args.config(lambda))?;
                let train_seconds = start.elapsed().as_secs_f64();
                let metrics = evaluate(&model, eval_set, threshold, &qmc.options())?;
                rows.push(ReportRow { lambda, metrics, train_seconds: Some(train_seconds) });
            }
            write_report(&rows, create(&report)?)
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on input errors, 2 on numerical errors.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from(["gpmil", "train", "--data", "d.csv", "--out", "m.json"]).unwrap();
        match cli.command {
            Command::Train { fit, .. } => {
                assert_eq!((fit.inducing, fit.iters), (200, 200));
            }
            other => panic!("{other:?}"),
        }
        let cli = Cli::try_parse_from(["gpmil", "sweep", "--data", "d", "--report", "r"]).unwrap();
        match cli.command {
            Command::Sweep { lambdas, .. } => assert_eq!(lambdas, vec![0.0, 0.1, 0.5, 1.0, 5.0, 10.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(cli_main(["gpmil", "train"]), 1);
        assert_eq!(cli_main(["gpmil", "bogus"]), 1);
    }
}
