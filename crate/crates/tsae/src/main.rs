use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tsae::commands;
use tsae::experiments::SweepParam;
use tsae::pipeline::Threshold;

#[derive(Parser)]
#[command(name = "tsae", version, about = "Two-stage autoencoder anomaly detection for multivariate time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Start from a named preset instead: default, wadi, swat.
    #[arg(long)]
    preset: Option<String>,
    /// Override a field, e.g. `--set train.epochs_ae1=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (same as `--set output_dir=...`).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<tsae::config::ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(o) = &self.out {
            overrides.push(format!("output_dir={}", toml::Value::String(o.display().to_string())));
        }
        Ok(commands::resolve_config(self.config.as_deref(), self.preset.as_deref(), &overrides)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic train/test CSVs from a spec file.
    Synth {
        spec: PathBuf,
        #[arg(short, long, default_value = "synth")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a model; writes model.json, train_log.csv and config.toml.
    Train(ConfigArgs),
    /// Score a CSV with a saved model.
    Detect {
        #[arg(short, long)]
        model: PathBuf,
        #[arg(short, long)]
        data: PathBuf,
        /// A number, or `sweep` for the best-F1 threshold (needs labels).
        #[arg(short, long)]
        threshold: Threshold,
        #[arg(long)]
        label_column: Option<String>,
        #[arg(short, long, default_value = "detect")]
        out: PathBuf,
    },
    /// Point-adjusted evaluation of a scores file.
    Eval {
        #[arg(short, long)]
        scores: PathBuf,
        /// `t,label` file, as written by `detect`.
        #[arg(long)]
        truth: PathBuf,
        #[arg(short, long, default_value = "sweep")]
        threshold: Threshold,
        #[arg(short, long, default_value = "eval.json")]
        out: PathBuf,
        /// Also write the precision/recall/F1 curve over all thresholds.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Parameter sweeps over rates, window lengths and node ratios.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Grids to run; all three when omitted.
        #[arg(long, value_delimiter = ',')]
        param: Vec<SweepParam>,
    },
    /// Network sizes and the output/deviation correlation check.
    Report {
        #[arg(short, long)]
        model: PathBuf,
        #[arg(short, long)]
        data: Option<PathBuf>,
        #[arg(short, long, default_value = "report")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth { spec, out, seed } => commands::synth(&spec, &out, seed)?,
        Command::Train(args) => {
            let path = commands::train_cmd(&args.resolve()?)?;
            println!("{}", path.display());
        }
        Command::Detect {
            model,
            data,
            threshold,
            label_column,
            out,
        } => {
            if let Some(f) = commands::detect_cmd(&model, &data, threshold, label_column, &out)? {
                let a = &f.report.adjusted;
                println!("threshold {} P {:.4} R {:.4} F1 {:.4}", f.report.threshold, a.precision, a.recall, a.f1);
            }
        }
        Command::Eval {
            scores,
            truth,
            threshold,
            out,
            curve,
        } => {
            let f = commands::eval_cmd(&scores, &truth, threshold, &out, curve.as_deref())?;
            let a = &f.report.adjusted;
            println!("threshold {} P {:.4} R {:.4} F1 {:.4}", f.report.threshold, a.precision, a.recall, a.f1);
        }
        Command::Sweep { config, param } => {
            let params = if param.is_empty() { SweepParam::ALL.to_vec() } else { param };
            let path = commands::sweep_cmd(&config.resolve()?, &params)?;
            println!("{}", path.display());
        }
        Command::Report { model, data, out } => commands::report_cmd(&model, data.as_deref(), &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
