use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use knn_evidence::classify::Method;
use knn_evidence::error::{Error, Result};
use knn_evidence::eval::{error_table, format_rate, k_table};
use knn_evidence::experiment::{self, table_text, ExperimentConfig, Overrides};
use knn_evidence::gp::{EvidencePoint, Formulation};

#[derive(Parser)]
#[command(version, about = "Mutual / symmetric k-NN with evidence-based selection of k")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sinc3C table, LOOCV curves, evidence curves and data files.
    Sinc3c(Common),
    /// k-fold cross-validation of every configured method.
    Cv(Common),
    /// Fit the first configured method and classify a query file.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Training CSV (overrides data.path in the config).
        #[arg(long)]
        train: Option<PathBuf>,
        /// Query CSV with the training features (a trailing label column is ignored).
        #[arg(long)]
        query: PathBuf,
        /// Hold out a training point identical to the query.
        #[arg(long)]
        exclude_self: bool,
    },
    /// Log evidence against k for the configured Bayesian methods.
    EvidenceCurve(Common),
    /// Leave-one-out error against k for the configured classic methods.
    LoocvCurve(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config (the Sinc3C defaults when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Standardize features with training statistics (true/false).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    standardize: Option<bool>,
    /// Hold (σ₀, σ²) fixed for the evidence-based methods, e.g. `1,0.0001`.
    #[arg(long, value_name = "SIGMA0,SIGMA2")]
    fixed_hyper: Option<String>,
    /// Keep only this method (knn, mknn, sknn, bmknn, bsknn, mknn_bk, sknn_bk).
    #[arg(long)]
    method: Option<String>,
    /// Keep only this formulation (binary, mul1, mul2).
    #[arg(long)]
    formulation: Option<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::sinc3c_default(),
        };
        let fixed_hyper = self
            .fixed_hyper
            .as_deref()
            .map(|s| {
                let parts: Vec<&str> = s.split(',').map(str::trim).collect();
                match parts.as_slice() {
                    [a, b] => match (a.parse::<f64>(), b.parse::<f64>()) {
                        (Ok(a), Ok(b)) => Ok((a, b)),
                        _ => Err(Error::Config(format!("--fixed-hyper expects two numbers, got {s:?}"))),
                    },
                    _ => Err(Error::Config(format!("--fixed-hyper expects SIGMA0,SIGMA2, got {s:?}"))),
                }
            })
            .transpose()?;
        cfg.apply(&Overrides {
            out_dir: self.out_dir.clone(),
            seed: self.seed,
            k_max: self.k_max,
            standardize: self.standardize,
            fixed_hyper,
            method: self.method.as_deref().map(str::parse::<Method>).transpose()?,
            formulation: self.formulation.as_deref().map(str::parse::<Formulation>).transpose()?,
        })?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sinc3c(c) => {
            let cfg = c.config()?;
            let report = experiment::cmd_sinc3c(&cfg)?;
            print!("{}", table_text(&report.rows));
            println!("outputs in {}", cfg.run.out_dir.display());
        }
        Command::Cv(c) => {
            let cfg = c.config()?;
            let results = experiment::cmd_cv(&cfg)?;
            print!("{}\n{}", error_table(&results), k_table(&results));
            println!("outputs in {}", cfg.run.out_dir.display());
        }
        Command::Predict { common, train, query, exclude_self } => {
            let cfg = common.config()?;
            let records = experiment::cmd_predict(&cfg, train.as_deref(), &query, exclude_self)?;
            println!("{} predictions written to {}", records.len(), cfg.run.out_dir.join("predictions.csv").display());
        }
        Command::EvidenceCurve(c) => {
            let cfg = c.config()?;
            for (label, trace) in experiment::evidence_curve(&cfg)? {
                let mut best: Option<&EvidencePoint> = None;
                for p in trace.iter().filter(|p| p.failure.is_none()) {
                    if best.is_none_or(|b| p.log_evidence > b.log_evidence) {
                        best = Some(p);
                    }
                }
                if let Some(b) = best {
                    println!("{label}: best k = {} (log evidence {:.6})", b.k, b.log_evidence);
                }
            }
            println!("outputs in {}", cfg.run.out_dir.display());
        }
        Command::LoocvCurve(c) => {
            let cfg = c.config()?;
            for (rule, curve) in experiment::loocv_curves(&cfg)? {
                let (k, e) = curve.iter().fold((0, f64::INFINITY), |b, &(k, e)| if e < b.1 { (k, e) } else { b });
                println!("{}: best k = {k} (LOO error {})", rule.name(), format_rate(e));
            }
            println!("outputs in {}", cfg.run.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
